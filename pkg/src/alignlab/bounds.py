"""Closed-form constants and bound evaluators for LCS score fluctuations.

Everything here is deterministic arithmetic: upper-bound constants from the
subgaussian tail, the four lower-bound constants attached to the zero-count
windows, probability floors, the Rademacher cumulant machinery, root solving
for the cumulant-window threshold, Bernoulli relative entropy, and the
quadratic rate-function envelope.  Monte Carlo counterparts live in mclab and
ratelab; this module never samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .seqmodel import ZeroCountSet

_SQRT_PI = math.sqrt(math.pi)


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class PhiSpec:
    """A convex nondecreasing transform on the non-negative half-line.

    Kinds: power |x|^r with r >= 1, exponential exp(t x) with t > 0, and the
    sqrt(2n)-scaled exponential exp(s x / sqrt(2n)) with s > 0.
    """

    kind: str
    param: float
    n: Optional[int] = None

    def __post_init__(self):
        if self.kind == "power":
            if self.param < 1:
                raise ValueError("power transform needs r >= 1")
        elif self.kind == "exponential":
            if self.param <= 0:
                raise ValueError("exponential transform needs rate t > 0")
        elif self.kind == "scaled_exponential":
            if self.param <= 0 or self.n is None or self.n < 1:
                raise ValueError("scaled exponential needs s > 0 and n >= 1")
        else:
            raise ValueError(f"unknown transform kind: {self.kind!r}")

    @classmethod
    def power(cls, r: float) -> "PhiSpec":
        return cls("power", float(r))

    @classmethod
    def exponential(cls, t: float) -> "PhiSpec":
        return cls("exponential", float(t))

    @classmethod
    def scaled_exponential(cls, s: float, n: int) -> "PhiSpec":
        return cls("scaled_exponential", float(s), n=int(n))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "power":
            return np.power(x, self.param)
        if self.kind == "exponential":
            return np.exp(self.param * x)
        return np.exp(self.param * x / math.sqrt(2.0 * self.n))


@dataclass(frozen=True)
class BoundValue:
    """One evaluated constant, with its inputs echoed for the run manifest."""

    name: str
    value: float
    inputs: Dict[str, float]
    anchor: str


def upper_C(r: float, K: float = 1.0) -> float:
    """Upper moment constant: E|L - EL|^r <= C(r) n^{r/2} under the
    subgaussian tail, C(r) = K^r [(ln 2)^{r/2} + r * Gamma(r/2, ln 2)] with
    the upper incomplete gamma."""
    if r < 2:
        raise ValueError("C(r) needs r >= 2")
    if K <= 0:
        raise ValueError("K must be positive")
    a = r / 2.0
    upper_gamma = special.gammaincc(a, math.log(2.0)) * special.gamma(a)
    return K**r * (math.log(2.0) ** a + r * upper_gamma)


def upper_D(r: float, K: float = 1.0) -> float:
    """Same tail integral started at 0: D(r) = r K^r Gamma(r/2)."""
    if r <= 0:
        raise ValueError("D(r) needs r > 0")
    return r * K**r * special.gamma(r / 2.0)


def upper_E(r: float, p: float) -> float:
    """Tensorization upper constant for the binary LCS:
    E(r) = (r-1)^r 2^{r/2-1} P(X1 != Y1), with P(X1 != Y1) = 2 p (1-p)."""
    if r < 2:
        raise ValueError("E(r) needs r >= 2")
    _check_p(p)
    return (r - 1.0) ** r * 2.0 ** (r / 2.0 - 1.0) * 2.0 * p * (1.0 - p)


def upper_mgf(t: float) -> Tuple[float, float]:
    """Upper bounds on E exp(t |L - EL| / sqrt(n)) for K = 1:

    erf form 1 + t sqrt(pi) (1 + erf(t/2)) e^{t^2/4}, and the looser
    1 + 2 t sqrt(pi) e^{t^2/4}.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    core = t * _SQRT_PI * math.exp(t * t / 4.0)
    erf_form = 1.0 + core * (1.0 + math.erf(t / 2.0))
    loose_form = 1.0 + 2.0 * core
    return erf_form, loose_form


def b_const(p: float) -> float:
    """Local-limit floor constant: P(U_n = u) >= 1/(b sqrt(n)) on the
    standard window, with the tight choice b = 2 sqrt(pi p q) e^{1/(2 p q)}."""
    _check_p(p)
    pq = p * (1.0 - p)
    return 2.0 * math.sqrt(math.pi * pq) * math.exp(1.0 / (2.0 * pq))


def _check_lower_args(r: float, eps0: float, p: float) -> None:
    if r < 1:
        raise ValueError("moment order r must be >= 1")
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    _check_p(p)


def lower_d1(r: float, eps0: float, p: float) -> float:
    """Standard-window moment lower constant 2^{(3-r)/2} eps0^r / (b (r+1))."""
    _check_lower_args(r, eps0, p)
    return 2.0 ** ((3.0 - r) / 2.0) * eps0**r / (b_const(p) * (r + 1.0))


def lower_d2(r: float, eps0: float, p: float) -> float:
    """Widened-window constant eps0^r (pq)^{r/2} Gamma((r+1)/2) / sqrt(pi),
    the r-th moment of eps0 |xi| / sqrt(2) for xi ~ N(0, pq)."""
    _check_lower_args(r, eps0, p)
    pq = p * (1.0 - p)
    return eps0**r * pq ** (r / 2.0) * special.gamma((r + 1.0) / 2.0) / _SQRT_PI


def lower_d3(r: float, eps0: float, p: float) -> float:
    """Uniform-approximation constant eps0^r / (2^{(5r+1)/2} b)."""
    _check_lower_args(r, eps0, p)
    return eps0**r / (2.0 ** ((5.0 * r + 1.0) / 2.0) * b_const(p))


def lower_d4(r: float, eps0: float, p: float) -> float:
    """Refined uniform-approximation constant ((2^{r+1} + r) / (2(r+1))) d3(r)."""
    _check_lower_args(r, eps0, p)
    return (2.0 ** (r + 1.0) + r) / (2.0 * (r + 1.0)) * lower_d3(r, eps0, p)


def phi_floor_extended(n: int, p: float, beta: float, epsilon: float) -> float:
    """Probability floor over the extended window:
    ((1 - eps) / (2 sqrt(pi p q n))) exp(-(2n)^{2 beta - 1} / (2 p q))."""
    if not 0.5 < beta < 2.0 / 3.0:
        raise ValueError("beta must lie in (1/2, 2/3)")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    _check_p(p)
    pq = p * (1.0 - p)
    return (
        (1.0 - epsilon)
        / (2.0 * math.sqrt(math.pi * pq * n))
        * math.exp(-((2.0 * n) ** (2.0 * beta - 1.0)) / (2.0 * pq))
    )


def _golden_min(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Argmin of a unimodal f on [lo, hi] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fastconv_bound(
    phi: PhiSpec,
    zset: ZeroCountSet,
    slope_delta: float,
    k0: int,
    phi_floor: float,
) -> float:
    """Guaranteed window sum min_a sum_u Phi((delta/k0) |u - a|) * floor.

    The minimum over the anchor a runs over the whole window, so the value
    lower-bounds the sum at the true (unknown) anchor.  The objective is
    convex in a, hence golden-section search locates its minimum.
    """
    if slope_delta <= 0 or k0 < 1 or phi_floor <= 0:
        raise ValueError("need slope_delta > 0, k0 >= 1, phi_floor > 0")
    members = zset.members().astype(np.float64)
    scale = slope_delta / k0

    def objective(a: float) -> float:
        return float(phi(scale * np.abs(members - a)).sum())

    if len(members) == 1:
        best = float(members[0])
    else:
        lo, hi = float(members[0]), float(members[-1])
        best = _golden_min(objective, lo, hi, tol=1e-9 * max(1.0, hi - lo))
    return objective(best) * phi_floor


def uniform_bound(
    phi: PhiSpec, c: float, eps0: float, phi_n: float
) -> Tuple[float, float]:
    """Window-free lower bounds under the uniform-mass assumption.

    refined = sum_{j=1}^{floor(c/(8 phi))} Phi((eps0/2)(c/(8 phi) + j)) phi
              + (c/8) Phi(eps0 c / (16 phi)),
    simple  = (c/4) Phi(eps0 c / (16 phi)).
    """
    if c <= 0 or eps0 <= 0 or phi_n <= 0:
        raise ValueError("need c, eps0, phi_n > 0")
    scale = c / (8.0 * phi_n)
    x0 = eps0 * c / (16.0 * phi_n)
    simple = (c / 4.0) * float(phi(x0))
    j_count = math.floor(scale)
    refined = (c / 8.0) * float(phi(x0))
    if j_count >= 1:
        js = np.arange(1, j_count + 1, dtype=np.float64)
        refined += float(phi((eps0 / 2.0) * (scale + js)).sum()) * phi_n
    return refined, simple


def mgf_lower_limit(s: float, eps0: float, p: float) -> float:
    """Limit lower bound for E exp(s |L - EL| / sqrt(n)):

    E exp(a |xi|) with xi ~ N(0, pq) and a = s eps0 / sqrt(2), evaluated in
    closed form via the half-normal identity
    E exp(a|xi|) = 2 exp(a^2 pq / 2) PhiStd(a sqrt(pq)).
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    _check_p(p)
    pq = p * (1.0 - p)
    a = s * eps0 / math.sqrt(2.0)
    return 2.0 * math.exp(a * a * pq / 2.0) * float(special.ndtr(a * math.sqrt(pq)))


def lambda_const(eps0: float, p: float) -> float:
    """min over t > 0 of 1 - P(pq eps0 t / 2 < xi < pq t), xi ~ N(0, pq).

    Searched on a dense log grid and refined by golden section; depends on p
    only through pq.  For eps0 >= 2 the interval is empty and the value is 1.
    """
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    _check_p(p)
    if eps0 >= 2.0:
        return 1.0
    pq = p * (1.0 - p)
    root = math.sqrt(pq)

    def objective(t: float) -> float:
        return 1.0 - float(special.ndtr(root * t) - special.ndtr(root * eps0 * t / 2.0))

    grid = np.logspace(-3.0, math.log10(1e3 / root), 10_000)
    vals = 1.0 - (special.ndtr(root * grid) - special.ndtr(root * eps0 * grid / 2.0))
    i = int(vals.argmin())
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    best_t = _golden_min(objective, float(lo), float(hi), tol=1e-12 * float(hi))
    return min(objective(best_t), float(vals[i]))


def rademacher_mgf(t: float, q: float) -> float:
    """M_q(t) = q e^{t(1-q)} + (1-q) e^{-t q}, the centered two-point MGF."""
    return math.exp(rademacher_cumulant(t, q))


def rademacher_cumulant(t: float, q: float) -> float:
    """K_q(t) = ln M_q(t), evaluated in overflow-safe form."""
    _check_p(q)
    if t >= 0:
        return t * (1.0 - q) + math.log(q + (1.0 - q) * math.exp(-t))
    return -t * q + math.log(q * math.exp(t) + (1.0 - q))


def solve_t0(slope_delta: float, q: float, b_width: float) -> float:
    """Unique positive root of g(t) = 2 delta t - b^2 - 2 K_q(delta t).

    g(0) = -b^2 < 0 and g'(t) = 2 delta (1 - K_q'(delta t)) >= 2 delta q > 0,
    so the root exists and is unique; located by geometric bracket growth and
    bisection to relative tolerance 1e-12.
    """
    if slope_delta <= 0 or b_width <= 0:
        raise ValueError("need slope_delta > 0 and b_width > 0")
    _check_p(q)
    b2 = b_width * b_width

    def g(t: float) -> float:
        return 2.0 * slope_delta * t - b2 - 2.0 * rademacher_cumulant(slope_delta * t, q)

    hi = 1.0
    for _ in range(600):
        if g(hi) >= 0:
            break
        hi *= 2.0
    else:  # pragma: no cover - g grows like 2 delta q t, so this cannot trip
        raise RuntimeError("bracket growth failed")
    lo = 0.0
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kl_bernoulli(x: float, q: float) -> float:
    """Bernoulli relative entropy D(x || q) in nats, for interior x, q."""
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie in (0, 1)")
    _check_p(q)
    return x * math.log(x / q) + (1.0 - x) * math.log((1.0 - x) / (1.0 - q))


def kl_quadratic_bound(x: float, q: float) -> float:
    """Quadratic dominator (x - q)^2 / (q (1-q)); D(x||q) never exceeds it."""
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie in (0, 1)")
    _check_p(q)
    return (x - q) ** 2 / (q * (1.0 - q))


def _kl_closed(x: float, q: float) -> float:
    """D(x || q) extended by continuity to x in [0, 1]."""
    if x <= 0.0:
        return -math.log(1.0 - q)
    if x >= 1.0:
        return -math.log(q)
    return kl_bernoulli(x, q)


def entropy_binom_floor(n2: int, q: float, k: int) -> float:
    """Entropy lower bound on log P(Binomial(n2, q) = k):

    -ln(n2 + 1) + n2 h_e(k/n2) + k ln q + (n2 - k) ln(1 - q),
    using ln C(n2, k) >= n2 h_e(k/n2) - ln(n2 + 1).
    """
    if not 0 < k < n2:
        raise ValueError("k must be interior to (0, n2)")
    _check_p(q)
    x = k / n2
    h_e = -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)
    return -math.log(n2 + 1.0) + n2 * h_e + k * math.log(q) + (n2 - k) * math.log(1.0 - q)


def b_width_for_eta(eta: float, q: float) -> float:
    """Largest linear window width b with D(x||q) <= eta/4 for |x - q| <= b/2.

    D(q +/- w || q) is increasing in w, so the largest admissible half-width
    solves max(D(q+w||q), D(q-w||q)) = eta/4 by bisection; the result is
    clamped to keep q +/- b/2 inside [0, 1].
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    _check_p(q)
    wmax = min(q, 1.0 - q)
    target = eta / 4.0

    def worst(w: float) -> float:
        return max(_kl_closed(q + w, q), _kl_closed(q - w, q))

    if worst(wmax) <= target:
        return 2.0 * wmax
    lo, hi = 0.0, wmax
    while hi - lo > 1e-14 * max(1.0, wmax):
        mid = 0.5 * (lo + hi)
        if worst(mid) <= target:
            lo = mid
        else:
            hi = mid
    return 2.0 * lo


@dataclass(frozen=True)
class RateEnvelope:
    """Quadratic envelope around the tail rate at slope s.

    lower holds for every s above the mean rate; upper_local is guaranteed
    only on an upper neighborhood whose radius is not computable here.
    """

    s: float
    lower: float
    upper_local: float
    validity_note: str = field(
        default="upper_local is valid only in an unquantified neighborhood above gamma_star"
    )


def rate_envelope(
    s: float, gamma_star: float, K: float, slope_delta: float, q: float
) -> RateEnvelope:
    """Envelope (s - g)^2 / K^2 <= r(s) <= (s - g)^2 / (4 delta^2 q (1-q))."""
    if s <= gamma_star:
        raise ValueError("s must exceed gamma_star")
    if K <= 0 or slope_delta <= 0:
        raise ValueError("need K > 0 and slope_delta > 0")
    _check_p(q)
    gap2 = (s - gamma_star) ** 2
    return RateEnvelope(
        s=s,
        lower=gap2 / (K * K),
        upper_local=gap2 / (4.0 * slope_delta**2 * q * (1.0 - q)),
    )


def bounds_table(
    p: float, eps0: float, r_list: Sequence[float], K: float = 1.0
) -> list:
    """All closed-form constants for a (p, eps0) configuration, one row each."""
    rows = []
    for r in r_list:
        if r >= 2:
            rows.append(
                BoundValue(
                    name=f"C({r:g})",
                    value=upper_C(r, K),
                    inputs={"r": r, "K": K},
                    anchor="moment-upper:C(r)=K^r((ln2)^{r/2}+r*Gamma(r/2,ln2))",
                )
            )
            rows.append(
                BoundValue(
                    name=f"E({r:g})",
                    value=upper_E(r, p),
                    inputs={"r": r, "p": p},
                    anchor="moment-upper:E(r)=(r-1)^r*2^{r/2-1}*P(X1!=Y1)",
                )
            )
        rows.append(
            BoundValue(
                name=f"D({r:g})",
                value=upper_D(r, K),
                inputs={"r": r, "K": K},
                anchor="moment-upper:D(r)=r*K^r*Gamma(r/2)",
            )
        )
        rows.append(
            BoundValue(
                name=f"d1({r:g})",
                value=lower_d1(r, eps0, p),
                inputs={"r": r, "eps0": eps0, "p": p},
                anchor="moment-lower:d1=2^{(3-r)/2}eps0^r/(b(r+1))",
            )
        )
        rows.append(
            BoundValue(
                name=f"d2({r:g})",
                value=lower_d2(r, eps0, p),
                inputs={"r": r, "eps0": eps0, "p": p},
                anchor="moment-lower:d2=eps0^r(pq)^{r/2}Gamma((r+1)/2)/sqrt(pi)",
            )
        )
        rows.append(
            BoundValue(
                name=f"d3({r:g})",
                value=lower_d3(r, eps0, p),
                inputs={"r": r, "eps0": eps0, "p": p},
                anchor="moment-lower:d3=eps0^r/(2^{(5r+1)/2}b)",
            )
        )
        rows.append(
            BoundValue(
                name=f"d4({r:g})",
                value=lower_d4(r, eps0, p),
                inputs={"r": r, "eps0": eps0, "p": p},
                anchor="moment-lower:d4=(2^{r+1}+r)/(2(r+1))*d3",
            )
        )
    rows.append(
        BoundValue(
            name="b",
            value=b_const(p),
            inputs={"p": p},
            anchor="local-limit:b=2sqrt(pi*p*q)*e^{1/(2pq)}",
        )
    )
    rows.append(
        BoundValue(
            name="lambda",
            value=lambda_const(eps0, p),
            inputs={"eps0": eps0, "p": p},
            anchor="mgf-lower:lambda=min_t(1-P(pq*eps0*t/2<xi<pq*t))",
        )
    )
    return rows
