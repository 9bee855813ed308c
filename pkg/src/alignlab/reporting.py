"""Run configuration, command execution, result rows, and manifests.

Every command resolves to a list of uniform result rows (name, value,
std_error, n, p, seed, anchor) plus a manifest that echoes the exact
configuration, library versions, and a digest of the rows.  Re-running a
manifest's config reproduces the rows bitwise; the worker count is recorded
but never influences a single emitted number.

Flags mark completed-but-noteworthy outcomes (overflow guards, zero-hit
tails, missing flip thresholds, violated asymptotic inequalities); callers
map them to exit code 3, distinct from validation failures (exit code 2).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import platform
import secrets
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy

from . import __version__, align, bounds, mclab, ratelab, verify
from .align import ScoringScheme, SequencePair
from .mclab import EpsilonZeroNotFound, OverflowGuardError
from .seqmodel import BinaryModel, binomial_center

COMMANDS = (
    "score",
    "simulate-moments",
    "ell-profile",
    "transform",
    "bounds",
    "rate",
    "verify-all",
)

CSV_COLUMNS = ("name", "value", "std_error", "n", "p", "seed", "anchor")


class ConfigError(ValueError):
    """Invalid run configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    n: int = 1000
    p: float = 0.5
    reps: int = 10_000
    seed: Optional[int] = None
    r_list: Tuple[float, ...] = (2.0,)
    s_list: Tuple[float, ...] = ()
    t_list: Tuple[float, ...] = ()
    beta: float = 0.6
    eps_target: float = 0.01
    eps0: Optional[float] = None
    workers: int = 1
    u_lo: Optional[int] = None
    u_hi: Optional[int] = None
    n_grid: Tuple[int, ...] = ()
    x: Optional[str] = None
    y: Optional[str] = None
    scheme: Optional[dict] = None
    output: Optional[str] = None
    fmt: str = "csv"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if not 0.0 < self.p < 1.0:
            raise ConfigError("p must lie strictly inside (0, 1)")
        if self.reps < 1:
            raise ConfigError("reps must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if not 0.5 < self.beta < 2.0 / 3.0:
            raise ConfigError("beta must lie in (1/2, 2/3)")
        if not 0.0 < self.eps_target <= 1.0:
            raise ConfigError("eps-target must lie in (0, 1]")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if any(r < 1 for r in self.r_list):
            raise ConfigError("moment orders must be >= 1")
        if self.command == "score" and (self.x is None or self.y is None):
            raise ConfigError("score requires both x and y")
        if self.command == "bounds":
            if self.eps0 is None or self.eps0 <= 0:
                raise ConfigError("bounds requires a positive eps0")
        if self.command == "simulate-moments" and self.reps < 2:
            raise ConfigError("simulate-moments requires reps >= 2")
        if (self.u_lo is None) != (self.u_hi is None):
            raise ConfigError("u-lo and u-hi must be given together")
        if self.u_lo is not None and not 0 <= self.u_lo < self.u_hi <= 2 * self.n:
            raise ConfigError("need 0 <= u-lo < u-hi <= 2n")


@dataclass(frozen=True)
class ResultRow:
    name: str
    value: Optional[float]
    std_error: Optional[float] = None
    n: Optional[int] = None
    p: Optional[float] = None
    seed: Optional[int] = None
    anchor: str = "plumbing"

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "std_error": self.std_error,
            "n": self.n,
            "p": self.p,
            "seed": self.seed,
            "anchor": self.anchor,
        }


@dataclass
class RunResult:
    rows: List[ResultRow]
    flags: List[str]
    manifest: dict


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        d = row.as_dict()
        lines.append(",".join(_fmt_cell(d[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps({"rows": [r.as_dict() for r in rows]}, indent=2) + "\n"


def _digest(rows: Sequence[ResultRow], flags: Sequence[str]) -> str:
    payload = json.dumps(
        {"rows": [r.as_dict() for r in rows], "flags": list(flags)}, sort_keys=True
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def parse_letters(text: str) -> List[int]:
    """Letter sequence from a digit string like '1101' or comma-separated ints."""
    text = text.strip()
    if "," in text:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    if not text.isdigit():
        raise ConfigError(f"cannot parse letters from {text!r}")
    return [int(ch) for ch in text]


def _scheme_from_config(cfg: RunConfig) -> ScoringScheme:
    if cfg.scheme is None:
        return ScoringScheme.lcs()
    try:
        return ScoringScheme.from_mapping(cfg.scheme)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad scheme: {exc}") from exc


def _numeric(v) -> float:
    if isinstance(v, Fraction):
        return float(v)
    return float(v)


def _run_score(cfg: RunConfig, seed: int) -> Tuple[List[ResultRow], List[str], dict]:
    scheme = _scheme_from_config(cfg)
    try:
        pair = SequencePair(parse_letters(cfg.x), parse_letters(cfg.y))
        value = align.score_dp(pair, scheme)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [
        ResultRow(
            name="score",
            value=_numeric(value),
            n=pair.n,
            seed=seed,
            anchor="scoring:max-alignment-value",
        )
    ]
    if scheme.is_lcs() and pair.is_binary():
        rows.append(
            ResultRow(
                name="score_bitparallel",
                value=float(align.lcs_bitparallel(pair)),
                n=pair.n,
                seed=seed,
                anchor="scoring:bit-parallel-kernel",
            )
        )
    return rows, [], {}


def _run_moments(cfg: RunConfig, seed: int) -> Tuple[List[ResultRow], List[str], dict]:
    model = BinaryModel(cfg.p)
    sample = mclab.draw_scores(cfg.n, model, cfg.reps, seed, cfg.workers)
    rows = []
    flags = []
    mean = mclab.mean_of(sample)
    rows.append(
        ResultRow(
            name="mean_score",
            value=mean.value,
            std_error=mean.std_error,
            n=cfg.n,
            p=cfg.p,
            seed=seed,
            anchor="mc:mean-score",
        )
    )
    for r in cfg.r_list:
        est = mclab.central_abs_moment_of(sample, r)
        rows.append(
            ResultRow(
                name=f"central_abs_moment({r:g})",
                value=est.value,
                std_error=est.std_error,
                n=cfg.n,
                p=cfg.p,
                seed=seed,
                anchor="mc:central-abs-moment",
            )
        )
    for s in cfg.s_list:
        if s <= 0:
            raise ConfigError("mgf growth rates must be positive")
        try:
            est = mclab.mgf_abs_of(sample, s)
        except OverflowGuardError:
            flags.append(f"mgf-overflow-guard:s={s:g}")
            continue
        rows.append(
            ResultRow(
                name=f"mgf_abs({s:g})",
                value=est.value,
                std_error=est.std_error,
                n=cfg.n,
                p=cfg.p,
                seed=seed,
                anchor="mc:mgf-of-|L-mean|/sqrt(n)",
            )
        )
    return rows, flags, {}


def _run_ell_profile(cfg: RunConfig, seed: int) -> Tuple[List[ResultRow], List[str], dict]:
    model = BinaryModel(cfg.p)
    if cfg.u_lo is not None:
        u_lo, u_hi = cfg.u_lo, cfg.u_hi
    else:
        center = binomial_center(cfg.n, model)
        half = math.isqrt(2 * cfg.n)
        u_lo = max(0, center - half)
        u_hi = min(2 * cfg.n, center + half)
    profile = mclab.slope_profile(cfg.n, u_lo, u_hi, cfg.reps, seed, cfg.workers)
    rows = []
    flags = []
    for u, est in zip(profile.u_values, profile.ell_estimates):
        rows.append(
            ResultRow(
                name=f"ell({u})",
                value=est.value,
                std_error=est.std_error,
                n=cfg.n,
                seed=seed,
                anchor="mc:conditional-mean-given-zero-count",
            )
        )
    for u, est in zip(profile.u_values, profile.slope_estimates):
        rows.append(
            ResultRow(
                name=f"slope({u}->{u + 1})",
                value=est.value,
                std_error=est.std_error,
                n=cfg.n,
                seed=seed,
                anchor="mc:conditional-mean-unit-slope",
            )
        )
        if abs(est.value) > 1.0 + 3.0 * est.std_error:
            flags.append(f"slope-out-of-unit-range:u={u}")
    return rows, flags, {}


def _run_transform(cfg: RunConfig, seed: int) -> Tuple[List[ResultRow], List[str], dict]:
    model = BinaryModel(cfg.p)
    stats = mclab.transform_experiment(cfg.n, model, cfg.reps, seed, cfg.workers)
    rows = []
    flags = []

    def est_row(name: str, est: mclab.Estimate, anchor: str) -> ResultRow:
        return ResultRow(
            name=name, value=est.value, std_error=est.std_error,
            n=cfg.n, p=cfg.p, seed=seed, anchor=anchor,
        )

    rows.append(est_row("mean_flip_increment", stats.mean_increment, "transform:mean-increment"))
    rows.append(est_row("frac_up", stats.frac_up, "transform:up-flip-fraction"))
    rows.append(est_row("frac_down", stats.frac_down, "transform:down-flip-fraction"))
    for name, value in stats.epsilon_summary().items():
        rows.append(
            ResultRow(
                name=name, value=value, n=cfg.n, p=cfg.p, seed=seed,
                anchor="transform:flip-fraction-summary",
            )
        )
    for k in (-1, 0, 1):
        rows.append(
            ResultRow(
                name=f"increment_count({k})",
                value=float(stats.increment_histogram.get(k, 0)),
                n=cfg.n, p=cfg.p, seed=seed,
                anchor="transform:increment-histogram",
            )
        )
    means = stats.per_sample_means
    grid = np.linspace(min(0.0, float(means.min())), float(means.max()), 21)
    for e, d in mclab.delta_curve(stats, grid):
        rows.append(
            ResultRow(
                name=f"delta({e:.6g})", value=d, n=cfg.n, p=cfg.p, seed=seed,
                anchor="transform:below-threshold-mass",
            )
        )
    try:
        eps0 = mclab.pick_epsilon0(stats, cfg.eps_target)
        rows.append(
            ResultRow(
                name="eps0_hat", value=eps0, n=cfg.n, p=cfg.p, seed=seed,
                anchor="transform:largest-eps-with-mass<=target",
            )
        )
    except EpsilonZeroNotFound:
        flags.append("eps0-not-found")
    return rows, flags, {"rejected_all_zero": stats.rejected_all_zero}


def _run_bounds(cfg: RunConfig, seed: int) -> Tuple[List[ResultRow], List[str], dict]:
    rows = []
    for bv in bounds.bounds_table(cfg.p, cfg.eps0, cfg.r_list):
        rows.append(
            ResultRow(name=bv.name, value=bv.value, p=cfg.p, seed=seed, anchor=bv.anchor)
        )
    for s in cfg.s_list:
        if s <= 0:
            raise ConfigError("mgf growth rates must be positive")
        erf_form, loose = bounds.upper_mgf(s)
        rows.append(
            ResultRow(
                name=f"mgf_upper_erf({s:g})", value=erf_form, p=cfg.p, seed=seed,
                anchor="mgf-upper:1+t*sqrt(pi)(1+erf(t/2))e^{t^2/4}",
            )
        )
        rows.append(
            ResultRow(
                name=f"mgf_upper({s:g})", value=loose, p=cfg.p, seed=seed,
                anchor="mgf-upper:1+2t*sqrt(pi)e^{t^2/4}",
            )
        )
        rows.append(
            ResultRow(
                name=f"mgf_lower_limit({s:g})",
                value=bounds.mgf_lower_limit(s, cfg.eps0, cfg.p),
                p=cfg.p, seed=seed,
                anchor="mgf-lower:2e^{a^2pq/2}Phi(a*sqrt(pq)),a=s*eps0/sqrt(2)",
            )
        )
    return rows, [], {}


def _run_rate(cfg: RunConfig, seed: int) -> Tuple[List[ResultRow], List[str], dict]:
    model = BinaryModel(cfg.p)
    sample = mclab.draw_scores(cfg.n, model, cfg.reps, seed, cfg.workers)
    rows = []
    flags = []
    for s in cfg.s_list:
        if not 0.0 <= s <= 1.0:
            raise ConfigError("tail levels must lie in [0, 1]")
        tail = ratelab.tail_from_sample(sample, s)
        rate = tail.ci_lower_rate if tail.zero_hits else tail.rate_hat
        if tail.zero_hits:
            flags.append(f"zero-hit-tail:s={s:g}")
        rows.append(
            ResultRow(
                name=f"tail_p({s:g})", value=tail.p_hat, n=cfg.n, p=cfg.p, seed=seed,
                anchor="rate:P(L>=sn)",
            )
        )
        rows.append(
            ResultRow(
                name=f"rate_hat({s:g})", value=rate, n=cfg.n, p=cfg.p, seed=seed,
                anchor="rate:-ln(P)/n (CI floor on zero hits)",
            )
        )
        rows.append(
            ResultRow(
                name=f"rate_ci_lower({s:g})", value=tail.ci_lower_rate,
                n=cfg.n, p=cfg.p, seed=seed,
                anchor="rate:one-sided-97.5%-exact-binomial",
            )
        )
    cum_points = []
    for t in cfg.t_list:
        try:
            point = ratelab.cumulant_from_sample(sample, t)
        except OverflowGuardError:
            flags.append(f"cumulant-overflow-guard:t={t:g}")
            continue
        cum_points.append(point)
        rows.append(
            ResultRow(
                name=f"cumulant({t:g})", value=point.lambda_hat,
                std_error=point.std_error, n=cfg.n, p=cfg.p, seed=seed,
                anchor="rate:log E e^{tL} / n",
            )
        )
    if len(cum_points) >= 2:
        grid = ratelab.GridFunction(
            [c.t for c in cum_points], [c.lambda_hat for c in cum_points]
        )
        transformed, saturated = ratelab.legendre(grid)
        for (s, v), sat in zip(transformed.points(), saturated):
            rows.append(
                ResultRow(
                    name=f"legendre({s:.6g})", value=v, n=cfg.n, p=cfg.p, seed=seed,
                    anchor="rate:sup_t(ts-Lambda(t)) on the sampled grid",
                )
            )
            if sat:
                flags.append(f"legendre-edge-saturated:s={s:.6g}")
    if cfg.n_grid:
        fit = ratelab.estimate_gamma_star(list(cfg.n_grid), model, cfg.reps, seed, cfg.workers)
        rows.append(
            ResultRow(
                name="gamma_star_hat", value=fit.extrapolated, std_error=fit.std_error,
                p=cfg.p, seed=seed,
                anchor="rate:intercept of mean/n = a - c/sqrt(n)",
            )
        )
        for nn, v in fit.per_n.points():
            rows.append(
                ResultRow(
                    name=f"mean_per_letter({int(nn)})", value=v, n=int(nn), p=cfg.p,
                    seed=seed, anchor="rate:mean score over n",
                )
            )
    return rows, flags, {}


def _run_verify_all(cfg: RunConfig, seed: int) -> Tuple[List[ResultRow], List[str], dict]:
    model_p = cfg.p
    transform_reps = max(2, cfg.reps // 5)
    results: List[verify.CheckResult] = []
    results.append(verify.check_dp_against_enumeration(max_n=4))
    results.append(
        verify.check_kernel_equivalence(n_values=(31, 64, 257), pairs_per_n=100, seed=seed)
    )
    results.append(verify.check_law_preservation(max_2n=8))
    flip, stats = verify.check_flip_increment_range(
        n=cfg.n, p=model_p, reps=transform_reps, seed=seed, workers=cfg.workers
    )
    results.append(flip)
    results.append(verify.check_closed_form_constants())
    results.append(verify.check_lower_constant_ordering())
    var_check = verify.check_variance_sandwich(
        n=cfg.n, p=model_p, reps=cfg.reps, transform_reps=transform_reps,
        eps_target=cfg.eps_target, seed=seed, workers=cfg.workers, stats=stats,
    )
    results.append(var_check)
    results.append(
        verify.check_hoeffding_envelope(
            n=cfg.n, p=model_p, reps=cfg.reps, seed=seed, workers=cfg.workers
        )
    )
    results.append(
        verify.check_conditional_mean_gap(
            cases=((cfg.n, model_p),), reps_mean=cfg.reps,
            reps_ell=max(2, cfg.reps // 10), seed=seed, workers=cfg.workers,
        )
    )
    results.append(
        verify.check_mgf_sandwich(
            n=cfg.n, p=model_p, s_list=cfg.s_list or (0.5, 1.0, 2.0), reps=cfg.reps,
            seed=seed, eps0=var_check.numbers.get("eps0_hat"), stats=stats,
            eps_target=cfg.eps_target, workers=cfg.workers,
        )
    )
    results.append(verify.check_legendre_quadratic())
    results.append(
        verify.check_tail_rate_dominance(
            n=200, p=0.5, reps=cfg.reps, seed=seed, gamma_grid=(100, 200, 400, 800),
            gamma_reps=max(4, cfg.reps // 2), workers=cfg.workers,
        )
    )
    results.append(verify.check_t0_roots(seed=seed))
    results.append(verify.check_entropy_floor(max_n2=60))
    results.append(verify.check_worker_determinism(workers_list=(1, 4), scale=0.01))

    rows = []
    flags = []
    for res in results:
        rows.append(
            ResultRow(
                name=f"{res.status}:{res.name}", value=res.observed,
                n=cfg.n, p=model_p, seed=seed, anchor=res.anchor,
            )
        )
        if res.bound is not None:
            rows.append(
                ResultRow(
                    name=f"{res.name}:bound", value=res.bound,
                    n=cfg.n, p=model_p, seed=seed, anchor=res.anchor,
                )
            )
        if res.status != verify.PASS:
            flags.append(f"{res.status.lower()}:{res.name}")
    return rows, flags, {"rejected_all_zero": stats.rejected_all_zero}


_DISPATCH = {
    "score": _run_score,
    "simulate-moments": _run_moments,
    "ell-profile": _run_ell_profile,
    "transform": _run_transform,
    "bounds": _run_bounds,
    "rate": _run_rate,
    "verify-all": _run_verify_all,
}


def execute(cfg: RunConfig) -> RunResult:
    """Validate, resolve the seed, run the command, and assemble the manifest."""
    cfg.validate()
    seed = cfg.seed if cfg.seed is not None else secrets.randbelow(2**63)
    resolved = dataclasses.replace(cfg, seed=seed)
    start = time.perf_counter()
    rows, flags, extras = _DISPATCH[cfg.command](resolved, seed)
    wall = time.perf_counter() - start
    manifest = {
        "tool": "alignlab",
        "version": __version__,
        "command": cfg.command,
        "config": dataclasses.asdict(resolved),
        "workers": resolved.workers,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": wall,
        "rejected_all_zero": extras.get("rejected_all_zero", 0),
        "flags": flags,
        "row_anchors": [row.anchor for row in rows],
        "results_sha256": _digest(rows, flags),
    }
    return RunResult(rows=rows, flags=flags, manifest=manifest)
