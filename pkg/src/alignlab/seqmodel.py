"""Random binary sequence pairs, conditional laws, and the flip transformation.

Sampling is driven by counter-based Philox streams keyed by
``(master_seed, stream domain, replicate_index)``, so every sampled object is
a pure function of the seed and its replicate index, independent of worker
scheduling and batch size.  Streams for distinct purposes (i.i.d. pairs,
conditional draws at a given zero count, transform replicates, bootstraps)
use distinct domains.

The conditional law given "u zeros among the 2n letters" is uniform over
placements, and the flip transformation (turn one uniformly chosen 1 into a
0) maps that uniform law onto the one with u + 1 zeros; ``enumerate_R``
exposes all flip outcomes so conditional expectations over the flip can be
computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .align import SequencePair

_M64 = (1 << 64) - 1

# Stream domains (purpose tags mixed into the Philox key).
DOMAIN_PAIR = 1
DOMAIN_COND = 2
DOMAIN_TRANSFORM = 3
DOMAIN_FLIP = 4
DOMAIN_BOOTSTRAP = 5


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def stream_domain(purpose: int, sub: int = 0) -> int:
    """Compose a stream domain from a purpose tag and a sub-parameter."""
    return ((purpose & 0xFFFF) << 48) ^ (sub & ((1 << 48) - 1))


def _stream_hi(master_seed: int, domain: int) -> int:
    return _splitmix64((master_seed & _M64) ^ _splitmix64(domain))


def stream_generator(master_seed: int, domain: int, index: int) -> np.random.Generator:
    """Philox generator for one replicate of one stream.

    The 128-bit key is (hash of seed and domain) || index, so distinct
    (domain, index) pairs always get distinct keys.
    """
    key = (_stream_hi(master_seed, domain) << 64) | (index & _M64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class BinaryModel:
    """I.i.d. binary letters: probability p of a 1, q = 1 - p of a 0."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie strictly inside (0, 1)")

    @property
    def q(self) -> float:
        return 1.0 - self.p


@dataclass(frozen=True)
class RngPlan:
    """Addresses one replicate of one reproducible run."""

    master_seed: int
    replicate_index: int = 0


@dataclass(frozen=True)
class ZeroCountSet:
    """A contiguous window of zero counts around the binomial center.

    kind "standard" has half-width floor(sqrt(2n)), "extended"
    floor((2n)**beta) with beta in (1/2, 2/3), and "linear" floor(b * n) with
    b in (0, 2q).  The center is ceil(2nq) when 2nq is not an integer.
    Consecutive members differ by 1, so the gap constant k0 is always 1.
    """

    kind: str
    lo: int
    hi: int
    n: int
    parameter: Optional[float] = None

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty zero-count window")
        if self.lo < 0 or self.hi > 2 * self.n:
            raise ValueError("window escapes [0, 2n]")

    @property
    def k0(self) -> int:
        return 1

    def members(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def __len__(self) -> int:
        return self.hi - self.lo + 1


def binomial_center(n: int, model: BinaryModel) -> int:
    """ceil(2 n q), computed on the exact rational value of the float q."""
    return math.ceil(Fraction(2 * n) * Fraction(model.q))


def make_zero_count_set(
    n: int, model: BinaryModel, kind: str, parameter: Optional[float] = None
) -> ZeroCountSet:
    """Build the standard / extended / linear zero-count window for size n."""
    center = binomial_center(n, model)
    if kind == "standard":
        half = math.isqrt(2 * n)
        if parameter is not None:
            raise ValueError("standard window takes no parameter")
    elif kind == "extended":
        beta = 0.6 if parameter is None else float(parameter)
        if not 0.5 < beta < 2.0 / 3.0:
            raise ValueError("extended window needs beta in (1/2, 2/3)")
        half = math.floor((2 * n) ** beta)
        parameter = beta
    elif kind == "linear":
        if parameter is None:
            raise ValueError("linear window needs a width parameter")
        b = float(parameter)
        if not 0.0 < b < 2.0 * model.q:
            raise ValueError("linear window needs b in (0, 2q)")
        half = math.floor(b * n)
    else:
        raise ValueError(f"unknown zero-count window kind: {kind!r}")
    lo = max(0, center - half)
    hi = min(2 * n, center + half)
    return ZeroCountSet(kind=kind, lo=lo, hi=hi, n=n, parameter=parameter)


def pair_bits(
    n: int, model: BinaryModel, master_seed: int, index: int, domain: int = DOMAIN_PAIR
) -> np.ndarray:
    """The 2n Bernoulli(p) letters of one replicate, as a (2n,) uint8 array."""
    g = stream_generator(master_seed, domain, index)
    return (g.random(2 * n) < model.p).astype(np.uint8)


def sample_pair(n: int, model: BinaryModel, plan: RngPlan) -> SequencePair:
    """One i.i.d. pair: letters 1..n become x, letters n+1..2n become y."""
    if n < 1:
        raise ValueError("n must be positive")
    bits = pair_bits(n, model, plan.master_seed, plan.replicate_index)
    return SequencePair(bits[:n], bits[n:])


def count_zeros(pair: SequencePair) -> int:
    """Number of zeros among the concatenated 2n letters."""
    if not pair.is_binary():
        raise ValueError("count_zeros requires a binary pair")
    return int(2 * pair.n - pair.x.sum() - pair.y.sum())


def conditional_bits(n: int, u: int, master_seed: int, index: int) -> np.ndarray:
    """Uniform draw from the 2n-letter strings with exactly u zeros."""
    g = stream_generator(master_seed, stream_domain(DOMAIN_COND, u), index)
    bits = np.ones(2 * n, dtype=np.uint8)
    if u:
        bits[g.permutation(2 * n)[:u]] = 0
    return bits


def sample_conditional(n: int, u: int, plan: RngPlan) -> SequencePair:
    """Uniform pair given zero count u: u zeros at a uniform position subset."""
    if not 0 <= u <= 2 * n:
        raise ValueError("u must lie in [0, 2n]")
    bits = conditional_bits(n, u, plan.master_seed, plan.replicate_index)
    return SequencePair(bits[:n], bits[n:])


def transform_R(pair: SequencePair, plan: RngPlan) -> SequencePair:
    """Flip one uniformly chosen 1 to a 0; undefined on all-zero input."""
    if not pair.is_binary():
        raise ValueError("transform_R requires a binary pair")
    z = np.concatenate([pair.x, pair.y]).astype(np.uint8)
    ones = np.flatnonzero(z)
    if len(ones) == 0:
        raise ValueError("transform_R is undefined on an all-zero pair")
    g = stream_generator(plan.master_seed, DOMAIN_FLIP, plan.replicate_index)
    z[ones[int(g.integers(len(ones)))]] = 0
    n = pair.n
    return SequencePair(z[:n], z[n:])


def enumerate_R(pair: SequencePair) -> List[SequencePair]:
    """All flip outcomes, one per 1-position; empty when no ones exist."""
    if not pair.is_binary():
        raise ValueError("enumerate_R requires a binary pair")
    n = pair.n
    z = np.concatenate([pair.x, pair.y]).astype(np.uint8)
    out = []
    for pos in np.flatnonzero(z):
        zz = z.copy()
        zz[pos] = 0
        out.append(SequencePair(zz[:n], zz[n:]))
    return out


def binomial_pmf_log(n2: int, q: float, k: int) -> float:
    """log P(Binomial(n2, q) = k), via log-gamma."""
    if not 0 <= k <= n2:
        raise ValueError("k out of range")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    return (
        math.lgamma(n2 + 1)
        - math.lgamma(k + 1)
        - math.lgamma(n2 - k + 1)
        + k * math.log(q)
        + (n2 - k) * math.log1p(-q)
    )


def gaussian_local_pmf(n: int, model: BinaryModel, k: int) -> float:
    """Local normal approximation to P(U_n = k) for U_n ~ Binomial(2n, q):

    (1 / (2 sqrt(pi p q n))) exp(-(k - 2nq)^2 / (4 n p q)).
    """
    if n < 1:
        raise ValueError("n must be positive")
    p, q = model.p, model.q
    dev = k - 2.0 * n * q
    return math.exp(-(dev * dev) / (4.0 * n * p * q)) / (2.0 * math.sqrt(math.pi * p * q * n))
