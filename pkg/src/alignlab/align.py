"""Exact optimal-alignment scoring for equal-length sequence pairs.

An alignment of two length-n sequences picks k index pairs, strictly
increasing on both sides.  Its value is the sum of the pairwise scores of the
matched letters plus ``gap_price * (n - k)`` for the unmatched index pairs.
``score_dp`` maximizes this value over all alignments; ``brute_force_score``
does the same by explicit enumeration and serves as the oracle for everything
else.  The binary LCS scheme (match 1, mismatch 0, gap price 0) additionally
has a bit-parallel kernel, ``lcs_bitparallel``.

General schemes are evaluated in exact rational arithmetic so that downstream
bound checks never see float drift; all-integer schemes take a fast integer
path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels

Scoreish = Union[int, Fraction]

_BRUTE_FORCE_MAX_N = 10


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v)


@dataclass(frozen=True)
class ScoringScheme:
    """Symmetric non-negative pairwise scores plus a constant gap price.

    ``score[a][b]`` is the value of matching letters a and b; ``gap_price``
    is credited once per unmatched index pair and may have either sign.
    """

    alphabet_size: int
    score: tuple
    gap_price: Fraction

    def __init__(self, alphabet_size: int, score, gap_price=0):
        if alphabet_size < 2:
            raise ValueError("alphabet_size must be at least 2")
        rows = tuple(tuple(_as_fraction(v) for v in row) for row in score)
        if len(rows) != alphabet_size or any(len(r) != alphabet_size for r in rows):
            raise ValueError("score matrix must be alphabet_size x alphabet_size")
        for a in range(alphabet_size):
            for b in range(alphabet_size):
                if rows[a][b] < 0:
                    raise ValueError("pairwise scores must be non-negative")
                if rows[a][b] != rows[b][a]:
                    raise ValueError("score matrix must be symmetric")
        object.__setattr__(self, "alphabet_size", alphabet_size)
        object.__setattr__(self, "score", rows)
        object.__setattr__(self, "gap_price", _as_fraction(gap_price))

    @classmethod
    def lcs(cls) -> "ScoringScheme":
        """Binary LCS scheme: match 1, mismatch 0, gap price 0."""
        return cls(2, ((1, 0), (0, 1)), 0)

    @classmethod
    def from_mapping(cls, cfg: dict) -> "ScoringScheme":
        return cls(int(cfg["alphabet_size"]), cfg["score"], cfg.get("gap_price", 0))

    @property
    def is_integral(self) -> bool:
        return self.gap_price.denominator == 1 and all(
            v.denominator == 1 for row in self.score for v in row
        )

    def is_lcs(self) -> bool:
        return (
            self.alphabet_size == 2
            and self.gap_price == 0
            and self.score == ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))
        )

    def reduced_weights(self) -> tuple:
        """Pairwise scores minus the gap price (the DP's match weights)."""
        return tuple(tuple(v - self.gap_price for v in row) for row in self.score)

    def reduced_int_table(self) -> np.ndarray:
        """Reduced weights as an int64 table; requires an all-integer scheme."""
        if not self.is_integral:
            raise ValueError("scheme is not integral")
        w = self.reduced_weights()
        return np.array([[int(v) for v in row] for row in w], dtype=np.int64)


@dataclass(frozen=True)
class SequencePair:
    """Two equal-length letter sequences, stored as integer arrays."""

    x: np.ndarray
    y: np.ndarray

    def __init__(self, x, y):
        xa = np.asarray(x, dtype=np.int64)
        ya = np.asarray(y, dtype=np.int64)
        if xa.ndim != 1 or ya.ndim != 1:
            raise ValueError("sequences must be one-dimensional")
        if xa.shape != ya.shape:
            raise ValueError("length mismatch between x and y")
        if len(xa) and (xa.min() < 0 or ya.min() < 0):
            raise ValueError("letters must be non-negative integers")
        object.__setattr__(self, "x", xa)
        object.__setattr__(self, "y", ya)

    @property
    def n(self) -> int:
        return len(self.x)

    def is_binary(self) -> bool:
        return self.n == 0 or (self.x.max() <= 1 and self.y.max() <= 1)

    def concat(self, other: "SequencePair") -> "SequencePair":
        return SequencePair(
            np.concatenate([self.x, other.x]), np.concatenate([self.y, other.y])
        )


def _validate(pair: SequencePair, scheme: ScoringScheme) -> None:
    if pair.n and (pair.x.max() >= scheme.alphabet_size or pair.y.max() >= scheme.alphabet_size):
        raise ValueError("letter out of alphabet")


def score_dp(pair: SequencePair, scheme: ScoringScheme) -> Scoreish:
    """Optimal alignment score by dynamic programming.

    Computed as ``gap_price * n + D[n][n]`` where D is the standard three-way
    DP over the reduced weights ``score - gap_price``; the identity holds
    because both sequences have length n, so every alignment with k matches
    leaves exactly n - k gap pairs.
    """
    _validate(pair, scheme)
    n = pair.n
    if n == 0:
        return 0 if scheme.is_integral else Fraction(0)
    if scheme.is_integral:
        d = kernels.alignment_scores_batch(
            pair.x[None, :], pair.y[None, :], scheme.reduced_int_table()
        )[0]
        return int(scheme.gap_price) * n + int(d)
    w = scheme.reduced_weights()
    zero = Fraction(0)
    prev = [zero] * (n + 1)
    x = pair.x.tolist()
    y = pair.y.tolist()
    for i in range(1, n + 1):
        cur = [zero] * (n + 1)
        wrow = w[x[i - 1]]
        for j in range(1, n + 1):
            best = prev[j] if prev[j] >= cur[j - 1] else cur[j - 1]
            cand = prev[j - 1] + wrow[y[j - 1]]
            cur[j] = cand if cand > best else best
        prev = cur
    return scheme.gap_price * n + prev[n]


def score_dp_many(xs: np.ndarray, ys: np.ndarray, scheme: ScoringScheme) -> np.ndarray:
    """score_dp over a batch of pairs; xs, ys are (B, n) letter arrays.

    All-integer schemes run on the vectorized anti-diagonal DP; general
    schemes fall back to the scalar path.
    """
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if xs.shape != ys.shape or xs.ndim != 2:
        raise ValueError("xs and ys must be matching (B, n) arrays")
    if xs.size and (xs.max() >= scheme.alphabet_size or ys.max() >= scheme.alphabet_size):
        raise ValueError("letter out of alphabet")
    b, n = xs.shape
    if scheme.is_integral:
        if n == 0:
            return np.zeros(b, dtype=np.int64)
        d = kernels.alignment_scores_batch(xs, ys, scheme.reduced_int_table())
        return int(scheme.gap_price) * n + d
    return np.array(
        [score_dp(SequencePair(xs[i], ys[i]), scheme) for i in range(b)], dtype=object
    )


def lcs_bitparallel(pair: SequencePair) -> int:
    """LCS length of a binary pair via the bit-vector recurrence.

    One machine-level step per letter of y: with V the complement vector and
    U = V & PM[y_j], the update is V <- ((V + U) | (V - U)) masked to n bits;
    the LCS length is the number of cleared bits at the end.  Arbitrary n is
    supported through Python integers, whose limb arithmetic is word-parallel.
    """
    if not pair.is_binary():
        raise ValueError("lcs_bitparallel requires a binary pair")
    n = pair.n
    if n == 0:
        return 0
    mask = (1 << n) - 1
    pm1 = 0
    for i, bit in enumerate(pair.x.tolist()):
        if bit:
            pm1 |= 1 << i
    pm0 = ~pm1 & mask
    v = mask
    for bit in pair.y.tolist():
        u = v & (pm1 if bit else pm0)
        v = ((v + u) & mask) | (v ^ u)
    return n - v.bit_count()


def brute_force_score(pair: SequencePair, scheme: ScoringScheme) -> Scoreish:
    """Oracle: maximize the alignment value by explicit enumeration.

    Enumerates every pair of strictly increasing index tuples; exponential in
    n, so n is capped at 10.
    """
    _validate(pair, scheme)
    n = pair.n
    if n > _BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute_force_score requires n <= {_BRUTE_FORCE_MAX_N}")
    gap = scheme.gap_price
    score = scheme.score
    best = gap * n
    x = pair.x.tolist()
    y = pair.y.tolist()
    idx = range(n)
    for k in range(1, n + 1):
        base = gap * (n - k)
        for pi in itertools.combinations(idx, k):
            xk = [x[i] for i in pi]
            for mu in itertools.combinations(idx, k):
                total = base
                for a, j in zip(xk, mu):
                    total += score[a][y[j]]
                if total > best:
                    best = total
    return int(best) if scheme.is_integral else best


def max_change_K(scheme: ScoringScheme) -> Fraction:
    """Largest possible change of the optimal score from editing one letter.

    Equals max over letters u, v, w of |score(u, v) - score(u, w)|: rewriting
    a single letter swaps at most one matched pairwise score, and the gap
    term is unchanged for any fixed alignment shape.
    """
    best = Fraction(0)
    a = scheme.alphabet_size
    for u in range(a):
        row = scheme.score[u]
        for v in range(a):
            for w in range(a):
                d = abs(row[v] - row[w])
                if d > best:
                    best = d
    return best


def asymmetry_check(
    scheme: ScoringScheme, letter_dist: Sequence
) -> Optional[tuple]:
    """Find a letter substitution that raises the expected pairwise score.

    Returns an ordered pair (a, b) with
    ``sum_beta P(beta) * (score(b, beta) - score(a, beta)) > 0`` (rewriting an
    `a` as a `b` helps on average), or None when no ordered pair does.
    Evaluated in exact rational arithmetic so equal-weight ties return None.
    """
    dist = [_as_fraction(v) for v in letter_dist]
    if len(dist) != scheme.alphabet_size:
        raise ValueError("letter_dist length must equal alphabet_size")
    if any(v <= 0 for v in dist):
        raise ValueError("letter_dist entries must be positive")
    if abs(sum(dist) - 1) > Fraction(1, 10**9):
        raise ValueError("letter_dist must sum to 1")
    best_pair = None
    best_gain = Fraction(0)
    for a in range(scheme.alphabet_size):
        for b in range(scheme.alphabet_size):
            if a == b:
                continue
            gain = sum(
                w * (scheme.score[b][beta] - scheme.score[a][beta])
                for beta, w in enumerate(dist)
            )
            if gain > best_gain:
                best_gain = gain
                best_pair = (a, b)
    return best_pair
