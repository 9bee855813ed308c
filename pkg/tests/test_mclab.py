import math
from fractions import Fraction

import numpy as np
import pytest

import oracles
from alignlab import mclab
from alignlab.mclab import (
    EpsilonZeroNotFound,
    OverflowGuardError,
    TransformStats,
    central_abs_moment_of,
    delta_curve,
    draw_scores,
    estimate_central_abs_moment,
    estimate_ell,
    estimate_mean,
    estimate_mgf_abs,
    mgf_abs_of,
    pick_epsilon0,
    slope_profile,
    transform_experiment,
)
from alignlab.seqmodel import BinaryModel

HALF = Fraction(1, 2)


def test_mean_near_one_probability():
    est = estimate_mean(12, BinaryModel(0.999999), 200, 4)
    assert est.value == pytest.approx(12.0, abs=1e-9)


def test_mean_n1_exact():
    # E L_1 = P(X1 = Y1) = 1/2, frozen from the two-letter enumeration
    assert oracles.exact_mean_lcs(1, HALF) == HALF
    est = estimate_mean(1, BinaryModel(0.5), 20_000, 8)
    assert abs(est.value - 0.5) <= 3 * est.std_error


def test_mean_n2_exact():
    exact = oracles.exact_mean_lcs(2, HALF)
    assert exact == Fraction(9, 8)  # frozen from the 16-pair enumeration
    est = estimate_mean(2, BinaryModel(0.5), 40_000, 15)
    assert abs(est.value - float(exact)) <= 3 * est.std_error


def test_variance_n2_exact():
    exact = oracles.exact_var_lcs(2, HALF)
    assert exact == Fraction(23, 64)  # frozen from the 16-pair enumeration
    est = estimate_central_abs_moment(2, BinaryModel(0.5), 2.0, 40_000, 15)
    assert abs(est.value - float(exact)) <= 3 * est.std_error


def test_central_moment_r2_is_population_variance():
    sample = draw_scores(30, BinaryModel(0.5), 500, 10)
    est = central_abs_moment_of(sample, 2.0)
    assert est.value == pytest.approx(float(sample.scores.var()), rel=1e-12)


def test_central_moment_degenerate_distribution():
    est = estimate_central_abs_moment(10, BinaryModel(0.999999), 2.0, 300, 4)
    assert est.value == pytest.approx(0.0, abs=1e-9)


def test_central_moment_rejects_small_r():
    with pytest.raises(ValueError):
        estimate_central_abs_moment(4, BinaryModel(0.5), 0.5, 100, 1)


def test_mgf_basics():
    sample = draw_scores(16, BinaryModel(0.5), 2_000, 21)
    tiny = mgf_abs_of(sample, 1e-9)
    assert tiny.value == pytest.approx(1.0, abs=1e-6)
    one = mgf_abs_of(sample, 1.0)
    assert one.value >= 1.0
    with pytest.raises(OverflowGuardError):
        mgf_abs_of(sample, 1000.0)


def test_mgf_n2_exact():
    exact = oracles.exact_mgf_abs(2, HALF, 1.0)
    est = estimate_mgf_abs(2, BinaryModel(0.5), 1.0, 40_000, 33)
    assert abs(est.value - exact) <= 3 * est.std_error


def test_ell_extremes_are_exact():
    for u, n in ((0, 7), (14, 7)):
        est = estimate_ell(n, u, 200, 5)
        assert est.value == float(n)
        assert est.std_error == 0.0


def test_ell_n3_u3_exact():
    exact = float(oracles.exact_ell(3, 3))
    est = estimate_ell(3, 3, 40_000, 12)
    assert abs(est.value - exact) <= 3 * est.std_error


def test_ell_is_p_free_and_seed_stable():
    a = estimate_ell(40, 30, 2_000, 1)
    b = estimate_ell(40, 30, 2_000, 2)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.std_error, b.std_error)


def test_slope_profile_first_step_exact():
    # ell(0) = n and ell(1) = n - 1 exactly, so the first slope is exactly -1
    prof = slope_profile(9, 0, 1, 500, 3)
    assert prof.ell_estimates[0].value == 9.0
    assert prof.slope_estimates[0].value == -1.0


def test_slope_profile_within_unit_band():
    prof = slope_profile(12, 4, 14, 2_000, 19)
    for est in prof.slope_estimates:
        assert abs(est.value) <= 1.0 + 3.0 * est.std_error
    # full profile against the exact conditional means at n=3
    prof3 = slope_profile(3, 0, 6, 30_000, 7)
    for u, est in zip(prof3.u_values, prof3.ell_estimates):
        exact = float(oracles.exact_ell(3, u))
        tol = 3 * est.std_error if est.std_error else 1e-12
        assert abs(est.value - exact) <= tol


def test_transform_experiment_exact_n2():
    want = oracles.exact_transform_stats(2, HALF)
    stats = transform_experiment(2, BinaryModel(0.5), 30_000, 27)
    assert set(stats.increment_histogram) <= {-1, 0, 1}
    assert abs(stats.mean_increment.value - float(want["mean_increment"])) <= \
        3 * stats.mean_increment.std_error
    assert abs(stats.frac_up.value - float(want["frac_up"])) <= 3 * stats.frac_up.std_error
    assert abs(stats.frac_down.value - float(want["frac_down"])) <= 3 * stats.frac_down.std_error


def test_transform_frac_identity():
    stats = transform_experiment(20, BinaryModel(0.3), 500, 42)
    np.testing.assert_allclose(
        stats.per_sample_frac_up - stats.per_sample_frac_down,
        stats.per_sample_means,
        atol=1e-12,
    )


def test_transform_rejects_all_zero_draws():
    # at n=2, p=0.2 the all-zero pair has probability 0.8^4 = 0.41
    stats = transform_experiment(2, BinaryModel(0.2), 2_000, 5)
    assert stats.rejected_all_zero > 0
    assert len(stats.per_sample_means) == 2_000


def test_transform_worker_invariance():
    a = transform_experiment(30, BinaryModel(0.2), 600, 9, workers=1)
    b = transform_experiment(30, BinaryModel(0.2), 600, 9, workers=4)
    assert (a.per_sample_means == b.per_sample_means).all()
    assert a.increment_histogram == b.increment_histogram
    assert a.mean_increment == b.mean_increment


def test_draw_scores_worker_invariance():
    one = draw_scores(64, BinaryModel(0.5), 5_000, 77, workers=1)
    many = draw_scores(64, BinaryModel(0.5), 5_000, 77, workers=16)
    assert (one.scores == many.scores).all()


def _synthetic_stats(means):
    means = np.asarray(means, dtype=float)
    carrier = mclab.ScoreSample(n=10, reps=len(means), master_seed=0, scores=means, kind="iid")
    return TransformStats(
        n=10,
        reps=len(means),
        master_seed=0,
        mean_increment=carrier.estimate(means),
        frac_up=carrier.estimate(np.clip(means, 0, 1)),
        frac_down=carrier.estimate(np.clip(-means, 0, 1)),
        increment_histogram={},
        per_sample_means=means,
        per_sample_frac_up=np.clip(means, 0, 1),
        per_sample_frac_down=np.clip(-means, 0, 1),
        rejected_all_zero=0,
    )


def test_delta_curve_shape():
    stats = _synthetic_stats([0.1, 0.2, 0.2, 0.5, 0.9])
    curve = delta_curve(stats, [0.0, 0.1, 0.15, 0.2, 1.0])
    values = [v for _, v in curve]
    assert values[0] == 0.0
    assert values[-1] == 1.0
    assert values == sorted(values)
    with pytest.raises(ValueError):
        delta_curve(stats, [])


def test_pick_epsilon0():
    stats = _synthetic_stats([0.3, 0.35, 0.4, 0.8])
    assert pick_epsilon0(stats, 1.0) == 0.8  # target one: the largest mean
    assert pick_epsilon0(stats, 0.01) >= 0.3
    neg = _synthetic_stats([-0.5, -0.2, -0.1, -0.05])
    with pytest.raises(EpsilonZeroNotFound):
        pick_epsilon0(neg, 0.01)
    with pytest.raises(ValueError):
        pick_epsilon0(stats, 0.0)


def test_conditional_grouping_never_exceeds_total_moment():
    # conditioning the scores on their zero count can only shrink the spread:
    # the between-group second moment is part of the total second moment
    from alignlab.seqmodel import pair_bits

    model = BinaryModel(0.5)
    sample = draw_scores(25, model, 4_000, 3)
    scores = sample.scores.astype(float)
    counts = np.array(
        [50 - pair_bits(25, model, 3, i).sum() for i in range(len(scores))]
    )
    mu = scores.mean()
    total = np.mean((scores - mu) ** 2)
    group_mean = {u: scores[counts == u].mean() for u in np.unique(counts)}
    between = np.mean([(group_mean[u] - mu) ** 2 for u in counts])
    assert total >= between - 1e-9


def test_estimate_requires_two_reps():
    with pytest.raises(ValueError):
        estimate_mean(5, BinaryModel(0.5), 1, 0)
