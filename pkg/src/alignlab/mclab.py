"""Reproducible Monte Carlo estimation of LCS score statistics.

Replicates are partitioned into fixed-size blocks; a block's content depends
only on (master_seed, replicate index), never on the worker that ran it, and
block results are merged in ascending index order.  Running with 1 or W
workers therefore produces bitwise-identical estimates.

The flip-transformation experiment computes the conditional expectation of
the score increment exactly, by enumerating every 1-position of each sampled
pair, so only the outer expectation over pairs is Monte Carlo.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import math

import numpy as np

from . import kernels
from .seqmodel import (
    BinaryModel,
    DOMAIN_BOOTSTRAP,
    DOMAIN_COND,
    DOMAIN_PAIR,
    DOMAIN_TRANSFORM,
    stream_domain,
    stream_generator,
)

_BLOCK = 4096
_TRANSFORM_BLOCK = 256
_ROW_CAP = 16384
_BOOTSTRAP_RESAMPLES = 200
_EXP_GUARD = 700.0


class OverflowGuardError(ValueError):
    """Raised when an exponential-moment argument would overflow."""


class EpsilonZeroNotFound(ValueError):
    """No positive increment threshold meets the requested tail mass."""


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo point estimate with its standard error and provenance."""

    value: float
    std_error: float
    replicates: int
    master_seed: int


@dataclass(frozen=True)
class ScoreSample:
    """A deterministic vector of LCS scores, replicate i in position i."""

    n: int
    reps: int
    master_seed: int
    scores: np.ndarray
    kind: str  # "iid" or "conditional"
    p: Optional[float] = None
    u: Optional[int] = None

    def estimate(self, values: np.ndarray) -> Estimate:
        values = np.asarray(values, dtype=np.float64)
        sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        return Estimate(
            value=float(values.mean()),
            std_error=sd / math.sqrt(len(values)),
            replicates=len(values),
            master_seed=self.master_seed,
        )


def map_blocks(
    total: int, workers: int, fn: Callable[[int, int], object], block: int = _BLOCK
) -> list:
    """Apply fn(lo, hi) over fixed index blocks; results in block order."""
    spans = [(lo, min(lo + block, total)) for lo in range(0, total, block)]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda span: fn(*span), spans))
    return [fn(lo, hi) for lo, hi in spans]


def _iid_block(n: int, model: BinaryModel, seed: int, lo: int, hi: int) -> np.ndarray:
    bits = np.empty((hi - lo, 2 * n), dtype=np.uint8)
    p = model.p
    for row, idx in enumerate(range(lo, hi)):
        g = stream_generator(seed, DOMAIN_PAIR, idx)
        bits[row] = g.random(2 * n) < p
    return kernels.lcs_scores_bits(bits[:, :n], bits[:, n:])


def draw_scores(
    n: int, model: BinaryModel, reps: int, seed: int, workers: int = 1
) -> ScoreSample:
    """LCS scores of `reps` independent pairs at size n."""
    if reps < 1:
        raise ValueError("reps must be positive")
    blocks = map_blocks(reps, workers, lambda lo, hi: _iid_block(n, model, seed, lo, hi))
    return ScoreSample(
        n=n, reps=reps, master_seed=seed, scores=np.concatenate(blocks), kind="iid", p=model.p
    )


def _conditional_block(n: int, u: int, seed: int, lo: int, hi: int) -> np.ndarray:
    bits = np.ones((hi - lo, 2 * n), dtype=np.uint8)
    domain = stream_domain(DOMAIN_COND, u)
    if u:
        for row, idx in enumerate(range(lo, hi)):
            g = stream_generator(seed, domain, idx)
            bits[row, g.permutation(2 * n)[:u]] = 0
    return kernels.lcs_scores_bits(bits[:, :n], bits[:, n:])


def draw_conditional_scores(
    n: int, u: int, reps: int, seed: int, workers: int = 1
) -> ScoreSample:
    """LCS scores of `reps` uniform draws given zero count u (p-free law)."""
    if not 0 <= u <= 2 * n:
        raise ValueError("u must lie in [0, 2n]")
    if reps < 1:
        raise ValueError("reps must be positive")
    blocks = map_blocks(reps, workers, lambda lo, hi: _conditional_block(n, u, seed, lo, hi))
    return ScoreSample(
        n=n, reps=reps, master_seed=seed, scores=np.concatenate(blocks), kind="conditional", u=u
    )


def mean_of(sample: ScoreSample) -> Estimate:
    return sample.estimate(sample.scores)


def central_abs_moment_of(sample: ScoreSample, r: float) -> Estimate:
    """Plug-in estimator of E|L - E L|^r, centered at the sample's own mean.

    The point estimate uses the population form (mean of |L - mean|^r); the
    standard error comes from 200 bootstrap resamples of the replicate set.
    """
    if r < 1:
        raise ValueError("moment order r must be >= 1")
    scores = sample.scores.astype(np.float64)
    reps = len(scores)
    point = float(np.mean(np.abs(scores - scores.mean()) ** r))
    g = stream_generator(sample.master_seed, DOMAIN_BOOTSTRAP, 0)
    boot = np.empty(_BOOTSTRAP_RESAMPLES)
    for b in range(_BOOTSTRAP_RESAMPLES):
        draw = scores[g.integers(0, reps, reps)]
        boot[b] = np.mean(np.abs(draw - draw.mean()) ** r)
    return Estimate(
        value=point,
        std_error=float(boot.std(ddof=1)),
        replicates=reps,
        master_seed=sample.master_seed,
    )


def _log_space_mean(a: np.ndarray) -> Tuple[float, float]:
    """Mean and standard error of exp(a), computed stably in log space."""
    amax = float(a.max())
    e1 = np.exp(a - amax)
    m = float(e1.mean())
    m2 = float(np.exp(2.0 * (a - amax)).mean())
    n = len(a)
    var = max(m2 - m * m, 0.0) * n / max(n - 1, 1)
    scale = math.exp(amax)
    return scale * m, scale * math.sqrt(var / n)


def mgf_abs_of(sample: ScoreSample, s: float) -> Estimate:
    """Estimate of E exp(s |L - mean| / sqrt(n)) via log-sum-exp."""
    if s <= 0:
        raise ValueError("s must be positive")
    if s * math.sqrt(sample.n) > _EXP_GUARD:
        raise OverflowGuardError("s * sqrt(n) exceeds the overflow guard")
    scores = sample.scores.astype(np.float64)
    a = s * np.abs(scores - scores.mean()) / math.sqrt(sample.n)
    value, se = _log_space_mean(a)
    return Estimate(value=value, std_error=se, replicates=len(scores), master_seed=sample.master_seed)


def estimate_mean(
    n: int, model: BinaryModel, reps: int, seed: int, workers: int = 1
) -> Estimate:
    """Sample mean of the LCS score over independent replicate pairs."""
    if reps < 2:
        raise ValueError("reps must be at least 2")
    return mean_of(draw_scores(n, model, reps, seed, workers))


def estimate_central_abs_moment(
    n: int, model: BinaryModel, r: float, reps: int, seed: int, workers: int = 1
) -> Estimate:
    if reps < 2:
        raise ValueError("reps must be at least 2")
    return central_abs_moment_of(draw_scores(n, model, reps, seed, workers), r)


def estimate_mgf_abs(
    n: int, model: BinaryModel, s: float, reps: int, seed: int, workers: int = 1
) -> Estimate:
    if reps < 2:
        raise ValueError("reps must be at least 2")
    return mgf_abs_of(draw_scores(n, model, reps, seed, workers), s)


def estimate_ell(n: int, u: int, reps: int, seed: int, workers: int = 1) -> Estimate:
    """Mean LCS score over the uniform law at zero count u (independent of p)."""
    return mean_of(draw_conditional_scores(n, u, reps, seed, workers))


@dataclass(frozen=True)
class SlopeProfile:
    """Conditional means over a zero-count range and their unit-step slopes."""

    u_values: List[int]
    ell_estimates: List[Estimate]
    slope_estimates: List[Estimate]


def slope_profile(
    n: int, u_lo: int, u_hi: int, reps: int, seed: int, workers: int = 1
) -> SlopeProfile:
    """Conditional-mean profile with independent draws per u (no shared noise)."""
    if not 0 <= u_lo < u_hi <= 2 * n:
        raise ValueError("need 0 <= u_lo < u_hi <= 2n")
    us = list(range(u_lo, u_hi + 1))
    ells = [estimate_ell(n, u, reps, seed, workers) for u in us]
    slopes = []
    for a, b in zip(ells, ells[1:]):
        slopes.append(
            Estimate(
                value=b.value - a.value,
                std_error=math.hypot(a.std_error, b.std_error),
                replicates=reps,
                master_seed=seed,
            )
        )
    return SlopeProfile(u_values=us, ell_estimates=ells, slope_estimates=slopes)


@dataclass(frozen=True)
class TransformStats:
    """Exact per-pair flip statistics, Monte Carlo over the sampled pairs.

    For each sampled pair, every 1-position is flipped once, so the
    conditional mean increment and the up/down flip fractions are exact given
    the pair; increments are score(flipped) - score(original).
    """

    n: int
    reps: int
    master_seed: int
    mean_increment: Estimate
    frac_up: Estimate
    frac_down: Estimate
    increment_histogram: Dict[int, int]
    per_sample_means: np.ndarray
    per_sample_frac_up: np.ndarray
    per_sample_frac_down: np.ndarray
    rejected_all_zero: int

    def epsilon_summary(self) -> Dict[str, float]:
        """Low quantile and worst-case summaries of the flip fractions."""
        return {
            "frac_up_min": float(self.per_sample_frac_up.min()),
            "frac_up_p05": float(np.percentile(self.per_sample_frac_up, 5.0)),
            "frac_down_min": float(self.per_sample_frac_down.min()),
            "frac_down_p05": float(np.percentile(self.per_sample_frac_down, 5.0)),
        }


def _transform_block(
    n: int, model: BinaryModel, seed: int, lo: int, hi: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
    nb = hi - lo
    p = model.p
    bits = np.empty((nb, 2 * n), dtype=np.uint8)
    rejected = 0
    for row, idx in enumerate(range(lo, hi)):
        g = stream_generator(seed, DOMAIN_TRANSFORM, idx)
        while True:
            draw = g.random(2 * n) < p
            if draw.any():
                break
            rejected += 1
        bits[row] = draw
    ones_per = bits.sum(axis=1, dtype=np.int64)
    xw = kernels.pack_rows(bits[:, :n])
    yw = kernels.pack_rows(bits[:, n:])
    base = kernels.lcs_scores(xw, yw, n)

    offsets = np.zeros(nb + 1, dtype=np.int64)
    np.cumsum(ones_per, out=offsets[1:])
    inc = np.empty(int(offsets[-1]), dtype=np.int64)

    start = 0
    while start < nb:
        stop = start + 1
        rows = int(ones_per[start])
        while stop < nb and rows + ones_per[stop] <= _ROW_CAP:
            rows += int(ones_per[stop])
            stop += 1
        sel = slice(start, stop)
        counts = ones_per[sel]
        xw_f = np.repeat(xw[sel], counts, axis=0)
        yw_f = np.repeat(yw[sel], counts, axis=0)
        _, cols = np.nonzero(bits[sel])  # row-major: aligned with np.repeat order
        flat = np.arange(len(cols))
        in_x = cols < n
        bitpos = np.where(in_x, cols, cols - n).astype(np.uint64)
        word = (bitpos >> np.uint64(6)).astype(np.int64)
        bit = np.uint64(1) << (bitpos & np.uint64(63))
        xw_f[flat[in_x], word[in_x]] ^= bit[in_x]
        yw_f[flat[~in_x], word[~in_x]] ^= bit[~in_x]
        flipped = kernels.lcs_scores(xw_f, yw_f, n)
        inc[offsets[start] : offsets[stop]] = flipped - np.repeat(base[sel], counts)
        start = stop

    heads = offsets[:-1]
    mean_inc = np.add.reduceat(inc, heads) / ones_per
    up = np.add.reduceat((inc == 1).astype(np.int64), heads) / ones_per
    down = np.add.reduceat((inc == -1).astype(np.int64), heads) / ones_per
    values, counts = np.unique(inc, return_counts=True)
    return mean_inc, up, down, values, counts, rejected


def transform_experiment(
    n: int, model: BinaryModel, reps: int, seed: int, workers: int = 1
) -> TransformStats:
    """Sample pairs, flip every 1 once each, and summarize the increments.

    All-zero pairs (probability q^(2n)) are rejected and redrawn from the same
    replicate stream; the rejection count is reported.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if reps < 2:
        raise ValueError("reps must be at least 2")
    blocks = map_blocks(
        reps,
        workers,
        lambda lo, hi: _transform_block(n, model, seed, lo, hi),
        block=_TRANSFORM_BLOCK,
    )
    mean_inc = np.concatenate([b[0] for b in blocks])
    up = np.concatenate([b[1] for b in blocks])
    down = np.concatenate([b[2] for b in blocks])
    hist: Dict[int, int] = {}
    for b in blocks:
        for v, c in zip(b[3].tolist(), b[4].tolist()):
            hist[v] = hist.get(v, 0) + c
    rejected = sum(b[5] for b in blocks)
    carrier = ScoreSample(n=n, reps=reps, master_seed=seed, scores=mean_inc, kind="iid", p=model.p)
    return TransformStats(
        n=n,
        reps=reps,
        master_seed=seed,
        mean_increment=carrier.estimate(mean_inc),
        frac_up=carrier.estimate(up),
        frac_down=carrier.estimate(down),
        increment_histogram=dict(sorted(hist.items())),
        per_sample_means=mean_inc,
        per_sample_frac_up=up,
        per_sample_frac_down=down,
        rejected_all_zero=rejected,
    )


def delta_curve(stats: TransformStats, eps_grid: Sequence[float]) -> List[Tuple[float, float]]:
    """Fraction of pairs whose exact mean flip increment falls below each eps."""
    grid = list(eps_grid)
    if not grid:
        raise ValueError("eps grid must be non-empty")
    means = stats.per_sample_means
    return [(float(e), float(np.mean(means < e))) for e in grid]


def pick_epsilon0(stats: TransformStats, target: float) -> float:
    """Largest threshold whose below-threshold mass stays within `target`.

    The candidate grid is the observed per-pair means themselves (the curve
    is a step function with jumps exactly there, so no finer grid can do
    better).  Raises EpsilonZeroNotFound when the best threshold is not
    positive, the signature of p being too large for the flip gain to hold.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError("target must lie in (0, 1]")
    means = np.sort(stats.per_sample_means)
    n = len(means)
    uniq = np.unique(means)
    mass_below = np.searchsorted(means, uniq, side="left") / n
    feasible = uniq[mass_below <= target]
    eps = float(feasible.max())
    if eps <= 0.0:
        raise EpsilonZeroNotFound(
            "no positive increment threshold has below-mass <= "
            f"{target}: the flip gain regime does not hold at this p"
        )
    return eps
