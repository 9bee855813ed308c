"""Acceptance suite: one test per stated criterion, at the stated scale.

Criteria 7 through 11 share one statistical battery per worker count;
criterion 14 reruns the same battery at worker counts 4 and 16 and demands
bitwise-identical payloads.  Each test prints a single PASS/FAIL line.
"""

import pytest

from alignlab import verify
from alignlab.verify import FLAG, PASS, battery_payload, statistical_battery


def _report(num: int, ok: bool, summary: str) -> None:
    print(f"criterion {num:02d} {'PASS' if ok else 'FAIL'}: {summary}")
    assert ok, summary


@pytest.fixture(scope="session")
def battery_w1():
    return statistical_battery(workers=1)


@pytest.fixture(scope="session")
def battery_rest():
    return {w: statistical_battery(workers=w) for w in (4, 16)}


def test_criterion_01_dp_equals_enumeration():
    res = verify.check_dp_against_enumeration(max_n=6)
    _report(1, res.status == PASS, f"{res.detail}, mismatches={res.numbers['mismatches']}")


def test_criterion_02_kernel_equals_dp():
    res = verify.check_kernel_equivalence(
        n_values=(31, 32, 33, 64, 257, 1024), pairs_per_n=1000, seed=20260808
    )
    _report(2, res.status == PASS, f"{res.detail}, mismatches={res.numbers['mismatches']}")


def test_criterion_03_flip_law_preservation():
    res = verify.check_law_preservation(max_2n=12)
    _report(3, res.status == PASS, f"{res.detail}, worst TV={res.numbers['worst_tv']}")


def test_criterion_04_flip_increments_in_unit_range():
    res, _ = verify.check_flip_increment_range(n=500, p=0.05, reps=10_000, seed=11)
    _report(4, res.status == PASS, f"{res.detail}, histogram={res.numbers['histogram']}")


def test_criterion_05_closed_form_constants():
    res = verify.check_closed_form_constants(tol=1e-12)
    _report(5, res.status == PASS, f"worst error {res.observed:.3e} <= 1e-12")


def test_criterion_06_lower_constant_ordering():
    res = verify.check_lower_constant_ordering(
        r_grid=(1, 2, 4, 6), p_grid=(0.05, 0.1, 0.3, 0.5), eps_grid=(0.05, 0.2, 0.8)
    )
    _report(6, res.status == PASS, f"strict d3<d4<d1<d2 on {res.numbers['cells']} cells")


def test_criterion_07_hoeffding_envelope(battery_w1):
    res = battery_w1["hoeffding"]
    _report(
        7,
        res.status == PASS,
        f"{res.detail}: emp(t=sqrt(n))={res.numbers['emp_t1']:.4g} "
        f"<= {res.numbers['bound_t1']:.4g}",
    )


def test_criterion_08_variance_sandwich(battery_w1):
    res = battery_w1["variance"]
    ok = res.status in (PASS, FLAG)  # FLAG: no positive flip threshold found
    eps0 = res.numbers.get("eps0_hat")
    _report(
        8,
        ok,
        f"status={res.status}, var/n={res.numbers['var_over_n']:.5g} "
        f"<= {res.numbers['upper']:.5g}, eps0_hat={eps0}",
    )


def test_criterion_09_conditional_mean_gap(battery_w1):
    res = battery_w1["gap"]
    _report(
        9,
        res.status == PASS,
        "gap within sqrt(2pq/pi)+3SE at (500, 0.05) and (2000, 0.3): "
        + ", ".join(
            f"{k.split('_', 1)[1]}: {res.numbers['obs_' + k.split('_', 1)[1]]:.4g}"
            f"<={res.numbers['bound_' + k.split('_', 1)[1]]:.4g}"
            for k in res.numbers
            if k.startswith("obs_")
        ),
    )


def test_criterion_10_mgf_sandwich(battery_w1):
    res = battery_w1["mgf"]
    ok = res.status in (PASS, FLAG)  # FLAG inherits criterion 8's missing eps0
    _report(
        10,
        ok,
        f"status={res.status}, observed s=0.5..2 within "
        f"[floor-3SE, 1+2s*sqrt(pi)e^(s^2/4)+3SE], eps0={res.numbers['eps0']}",
    )


def test_criterion_11_rate_machinery(battery_w1):
    leg = verify.check_legendre_quadratic(spacing=1e-3, tol=1e-3)
    tail = battery_w1["tail"]
    ok = leg.status == PASS and tail.status == PASS
    how = "exact-binomial rate floor (zero hits)" if tail.numbers["zero_hits"] else "point rate"
    _report(
        11,
        ok,
        f"legendre max err {leg.observed:.2e} <= 1e-3; per-n {how} "
        f"{tail.numbers['rate_hat']:.5g} >= {tail.bound:.5g} - {tail.numbers['ci_width']:.2g} "
        f"(gamma_hat={tail.numbers['gamma_hat']:.5g}, hits={tail.numbers['hits']})",
    )


def test_criterion_12_t0_roots():
    res = verify.check_t0_roots(trials=50, seed=29)
    _report(
        12,
        res.status == PASS,
        f"worst residual {res.observed:.2e} <= 1e-10, "
        f"monotone violations {res.numbers['monotone_violations']}",
    )


def test_criterion_13_entropy_floor():
    res = verify.check_entropy_floor(max_n2=200, q_list=(0.1, 0.3, 0.5, 0.7, 0.9))
    _report(13, res.status == PASS, f"{res.detail}, worst gap {res.observed:.3g} <= 0")


def test_criterion_14_worker_determinism(battery_w1, battery_rest):
    batteries = {1: battery_w1, **battery_rest}
    payloads = {w: battery_payload(b) for w, b in batteries.items()}
    identical = payloads[1] == payloads[4] == payloads[16]
    _report(
        14,
        identical,
        "criteria 7-11 payloads bitwise identical for workers 1, 4, 16",
    )
