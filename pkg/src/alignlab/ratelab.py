"""Empirical large-deviation toolkit for the LCS score.

Tail probabilities with exact binomial confidence bounds, the scaled
cumulant generating function, a numeric Legendre-Fenchel transform on grids,
extrapolation of the per-letter limit score, and the moment generating
function comparison against its closed-form floor.

A single replicate score vector feeds every functional on the s and t grids
(one expensive pass of score generation, many cheap reductions), and all
reductions are single-threaded over the assembled vector, so outputs are
bitwise reproducible for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sstats

from . import bounds, mclab
from .mclab import Estimate, OverflowGuardError, ScoreSample
from .seqmodel import BinaryModel, binomial_center

_EXP_GUARD = 700.0


@dataclass(frozen=True)
class TailEstimate:
    """Monte Carlo estimate of P(L_n >= s n) and its per-n rate.

    rate_hat is -ln(p_hat)/n, infinite when no replicate reached the level;
    ci_lower_rate converts the one-sided exact (Clopper-Pearson) 97.5% upper
    confidence bound on p into a finite lower confidence bound on the rate,
    which is the number to quote on zero hits.
    """

    s: float
    n: int
    hits: int
    reps: int
    p_hat: float
    rate_hat: float
    ci_lower_rate: float
    master_seed: int

    @property
    def zero_hits(self) -> bool:
        return self.hits == 0


@dataclass(frozen=True)
class CumulantPoint:
    """One point of the scaled cumulant generating function at size n."""

    t: float
    n: int
    lambda_hat: float
    std_error: float
    reps: int
    master_seed: int


@dataclass(frozen=True)
class GridFunction:
    """Sorted (abscissa, value) pairs with strictly increasing abscissae."""

    abscissae: np.ndarray
    values: np.ndarray

    def __init__(self, abscissae, values):
        a = np.asarray(abscissae, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        if a.ndim != 1 or a.shape != v.shape:
            raise ValueError("abscissae and values must be matching 1-d arrays")
        if len(a) == 0:
            raise ValueError("grid must be non-empty")
        if len(a) > 1 and not np.all(np.diff(a) > 0):
            raise ValueError("abscissae must be strictly increasing")
        object.__setattr__(self, "abscissae", a)
        object.__setattr__(self, "values", v)

    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.abscissae.tolist(), self.values.tolist()))

    def to_csv(self) -> str:
        """Two-column CSV (abscissa, value) for external plotting."""
        lines = [f"{a!r},{v!r}" for a, v in self.points()]
        return "\n".join(lines) + "\n"

    def __len__(self) -> int:
        return len(self.abscissae)


def tail_from_sample(sample: ScoreSample, s: float) -> TailEstimate:
    """Tail indicator mean at level s from an existing score vector."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1] for the per-letter LCS score")
    n, reps = sample.n, sample.reps
    hits = int(np.count_nonzero(sample.scores >= s * n))
    p_hat = hits / reps
    rate_hat = math.inf if hits == 0 else -math.log(p_hat) / n
    if hits < reps:
        p_upper = float(sstats.beta.ppf(0.975, hits + 1, reps - hits))
    else:
        p_upper = 1.0
    ci_lower_rate = -math.log(p_upper) / n
    return TailEstimate(
        s=float(s),
        n=n,
        hits=hits,
        reps=reps,
        p_hat=p_hat,
        rate_hat=rate_hat,
        ci_lower_rate=ci_lower_rate,
        master_seed=sample.master_seed,
    )


def estimate_tail(
    n: int, model: BinaryModel, s: float, reps: int, seed: int, workers: int = 1
) -> TailEstimate:
    return tail_from_sample(mclab.draw_scores(n, model, reps, seed, workers), s)


def tail_grid(sample: ScoreSample, s_list: Sequence[float]) -> List[TailEstimate]:
    """Tail estimates over a level grid, reusing one replicate set."""
    return [tail_from_sample(sample, s) for s in s_list]


def cumulant_from_sample(sample: ScoreSample, t: float) -> CumulantPoint:
    """Scaled log-MGF point log E exp(t L) / n via log-sum-exp."""
    n = sample.n
    if abs(t) * n > _EXP_GUARD:
        raise OverflowGuardError("t * n exceeds the overflow guard")
    if t == 0.0:
        return CumulantPoint(
            t=0.0, n=n, lambda_hat=0.0, std_error=0.0, reps=sample.reps,
            master_seed=sample.master_seed,
        )
    a = t * sample.scores.astype(np.float64)
    amax = float(a.max())
    e = np.exp(a - amax)
    m = float(e.mean())
    lambda_hat = (amax + math.log(m)) / n
    sd_ratio = float(e.std(ddof=1)) / m  # relative sd of exp(tL), shift-free
    std_error = sd_ratio / math.sqrt(sample.reps) / n
    return CumulantPoint(
        t=float(t), n=n, lambda_hat=lambda_hat, std_error=std_error,
        reps=sample.reps, master_seed=sample.master_seed,
    )


def estimate_cumulant(
    n: int, model: BinaryModel, t: float, reps: int, seed: int, workers: int = 1
) -> CumulantPoint:
    return cumulant_from_sample(mclab.draw_scores(n, model, reps, seed, workers), t)


def cumulant_grid(sample: ScoreSample, t_list: Sequence[float]) -> List[CumulantPoint]:
    return [cumulant_from_sample(sample, t) for t in t_list]


def legendre(
    grid: GridFunction, s_values: Optional[Sequence[float]] = None
) -> Tuple[GridFunction, List[bool]]:
    """Discrete Legendre-Fenchel transform sup_t (t s - f(t)) over the grid.

    The supremum over affine functions of s is convex by construction.  A
    point is flagged edge-saturated when the maximizer is the grid's largest
    t, meaning the true supremum may continue beyond the grid.  The default
    s grid spans the secant slopes of f.
    """
    t = grid.abscissae
    f = grid.values
    if s_values is None:
        if len(t) < 2:
            raise ValueError("default s grid needs at least two grid points")
        slopes = np.diff(f) / np.diff(t)
        lo, hi = float(slopes.min()), float(slopes.max())
        s_values = np.linspace(lo, hi, 201) if hi > lo else np.array([lo])
    s_arr = np.asarray(list(s_values), dtype=np.float64)
    out = np.empty(len(s_arr))
    saturated = []
    last = len(t) - 1
    for i, s in enumerate(s_arr):
        vals = s * t - f
        k = int(vals.argmax())
        out[i] = vals[k]
        saturated.append(k == last and last > 0)
    return GridFunction(s_arr, out), saturated


@dataclass(frozen=True)
class GammaStarFit:
    """Per-letter mean scores and their square-root-rate extrapolation.

    Each mu_hat/n underestimates the limit (superadditivity), so the fit
    mu_hat/n = a - c / sqrt(n) is reported together with the raw points for
    audit; `extrapolated` is the fitted a.
    """

    per_n: GridFunction
    extrapolated: float
    std_error: float
    sqrt_coeff: float
    mean_estimates: List[Estimate]


def estimate_gamma_star(
    n_grid: Sequence[int], model: BinaryModel, reps: int, seed: int, workers: int = 1
) -> GammaStarFit:
    """Fit mu_hat/n = a - c n^{-1/2} by weighted least squares over n_grid."""
    ns = list(n_grid)
    if len(ns) < 3:
        raise ValueError("need at least 3 grid sizes for the extrapolation fit")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_grid must be strictly ascending")
    means = [mclab.estimate_mean(n, model, reps, seed, workers) for n in ns]
    y = np.array([m.value / n for m, n in zip(means, ns)])
    se = np.array([max(m.std_error / n, 1e-15) for m, n in zip(means, ns)])
    x = np.column_stack([np.ones(len(ns)), -1.0 / np.sqrt(np.array(ns, dtype=float))])
    w = 1.0 / se**2
    xtwx = x.T @ (w[:, None] * x)
    xtwy = x.T @ (w * y)
    coef = np.linalg.solve(xtwx, xtwy)
    cov = np.linalg.inv(xtwx)
    return GammaStarFit(
        per_n=GridFunction(np.array(ns, dtype=float), y),
        extrapolated=float(coef[0]),
        std_error=float(math.sqrt(cov[0, 0])),
        sqrt_coeff=float(coef[1]),
        mean_estimates=means,
    )


@dataclass(frozen=True)
class MgfLowerCheck:
    """Observed one-sided MGF against its closed-form floor."""

    t: float
    eps0: float
    lhs: Estimate
    rhs: float
    violated: bool


def verify_prop_mgf_lower(
    n: int,
    model: BinaryModel,
    t: float,
    eps0: float,
    reps: int,
    seed: int,
    workers: int = 1,
    ell_reps: int = 1000,
) -> MgfLowerCheck:
    """Compare E exp(t (L - ell_hat(center)) / sqrt(2n)) to its floor
    lambda(eps0) exp(pq eps0^2 t^2 / 8); the flag fires only beyond 3 SE."""
    if t <= 0:
        raise ValueError("t must be positive")
    if t * math.sqrt(n) > _EXP_GUARD:
        raise OverflowGuardError("t * sqrt(n) exceeds the overflow guard")
    center = binomial_center(n, model)
    ell = mclab.estimate_ell(n, center, ell_reps, seed, workers)
    sample = mclab.draw_scores(n, model, reps, seed, workers)
    a = t * (sample.scores.astype(np.float64) - ell.value) / math.sqrt(2.0 * n)
    value, se = mclab._log_space_mean(a)
    # the centering estimate is itself noisy; propagate its error through exp
    se_total = math.hypot(se, t / math.sqrt(2.0 * n) * value * ell.std_error)
    lhs = Estimate(value=value, std_error=se_total, replicates=reps, master_seed=seed)
    pq = model.p * model.q
    rhs = bounds.lambda_const(eps0, model.p) * math.exp(pq * eps0**2 * t**2 / 8.0)
    return MgfLowerCheck(
        t=float(t), eps0=float(eps0), lhs=lhs, rhs=rhs,
        violated=value + 3.0 * se_total < rhs,
    )
