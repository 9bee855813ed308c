import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sstats

from alignlab.align import SequencePair
from alignlab.seqmodel import (
    BinaryModel,
    RngPlan,
    binomial_center,
    binomial_pmf_log,
    count_zeros,
    enumerate_R,
    gaussian_local_pmf,
    make_zero_count_set,
    sample_conditional,
    sample_pair,
    transform_R,
)


def test_sample_pair_deterministic():
    plan = RngPlan(master_seed=987654321, replicate_index=3)
    a = sample_pair(25, BinaryModel(0.4), plan)
    b = sample_pair(25, BinaryModel(0.4), plan)
    assert (a.x == b.x).all() and (a.y == b.y).all()


def test_sample_pair_distinct_indices_differ():
    model = BinaryModel(0.5)
    a = sample_pair(50, model, RngPlan(1, 0))
    b = sample_pair(50, model, RngPlan(1, 1))
    assert not ((a.x == b.x).all() and (a.y == b.y).all())


def test_sample_pair_near_one_is_all_ones():
    # all-ones has probability ~ 0.99998 per draw at this p; fixed seeds only
    model = BinaryModel(0.999999)
    for idx in range(5):
        pair = sample_pair(10, model, RngPlan(2024, idx))
        assert pair.x.sum() == 10 and pair.y.sum() == 10


def test_zero_count_mean_matches_binomial():
    n, reps = 100, 100_000
    model = BinaryModel(0.5)
    zero_counts = np.array(
        [count_zeros(sample_pair(n, model, RngPlan(77, i))) for i in range(reps)]
    )
    se = zero_counts.std(ddof=1) / math.sqrt(reps)
    assert abs(zero_counts.mean() - 100.0) <= 3 * se


def test_zero_count_chi_square_gof():
    n, reps, p = 20, 100_000, 0.3
    model = BinaryModel(p)
    counts = np.bincount(
        [count_zeros(sample_pair(n, model, RngPlan(31337, i))) for i in range(reps)],
        minlength=2 * n + 1,
    )
    probs = np.array([math.exp(binomial_pmf_log(2 * n, model.q, k)) for k in range(2 * n + 1)])
    # merge tails so every expected cell count is at least 5
    order = np.arange(2 * n + 1)
    keep = probs * reps >= 5
    obs = [counts[keep].tolist(), counts[~keep].sum()]
    exp = [probs[keep].tolist(), probs[~keep].sum() * reps]
    observed = np.array(obs[0] + [obs[1]], dtype=float)
    expected = np.array([e * reps for e in exp[0]] + [exp[1]], dtype=float)
    expected *= observed.sum() / expected.sum()
    chi = sstats.chisquare(observed, expected)
    assert chi.pvalue > 1e-6


def test_count_zeros_examples():
    assert count_zeros(SequencePair([1, 1], [1, 1])) == 0
    assert count_zeros(SequencePair([0, 1], [1, 0])) == 2
    assert count_zeros(SequencePair([0] * 5, [0] * 5)) == 10
    with pytest.raises(ValueError):
        count_zeros(SequencePair([0, 2], [1, 1]))


def test_sample_conditional_extremes():
    pair = sample_conditional(6, 0, RngPlan(5, 0))
    assert pair.x.sum() == 6 and pair.y.sum() == 6
    pair = sample_conditional(6, 12, RngPlan(5, 0))
    assert pair.x.sum() == 0 and pair.y.sum() == 0
    with pytest.raises(ValueError):
        sample_conditional(6, 13, RngPlan(5, 0))


def test_sample_conditional_uniform_chi_square():
    # n=2, u=2: all six placements equally likely
    reps = 100_000
    seen = {}
    for i in range(reps):
        pair = sample_conditional(2, 2, RngPlan(99, i))
        key = tuple(pair.x.tolist()) + tuple(pair.y.tolist())
        seen[key] = seen.get(key, 0) + 1
    assert len(seen) == 6
    chi = sstats.chisquare(np.array(list(seen.values()), dtype=float))
    assert chi.pvalue > 1e-6


def test_transform_flips_exactly_one():
    pair = SequencePair([1], [0])
    out = transform_R(pair, RngPlan(1, 0))
    assert out.x.tolist() == [0] and out.y.tolist() == [0]
    with pytest.raises(ValueError):
        transform_R(SequencePair([0, 0], [0, 0]), RngPlan(1, 0))


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_transform_increments_zero_count(data):
    n = data.draw(st.integers(1, 16))
    bits = data.draw(
        st.lists(st.integers(0, 1), min_size=2 * n, max_size=2 * n).filter(lambda b: any(b))
    )
    pair = SequencePair(bits[:n], bits[n:])
    idx = data.draw(st.integers(0, 2**31))
    out = transform_R(pair, RngPlan(42, idx))
    assert count_zeros(out) == count_zeros(pair) + 1


def test_enumerate_R():
    assert len(enumerate_R(SequencePair([1], [1]))) == 2
    assert enumerate_R(SequencePair([0, 0], [0, 0])) == []
    outs = enumerate_R(SequencePair([1, 0], [0, 0]))
    assert len(outs) == 1
    assert outs[0].x.tolist() == [0, 0] and outs[0].y.tolist() == [0, 0]


def test_law_preservation_exact_small():
    # uniform on {u zeros} pushed through a uniform flip is uniform on {u+1}
    for n in (1, 2, 3):
        m = 2 * n
        for u in range(0, m):
            pushed = {}
            for zeros in itertools.combinations(range(m), u):
                z = np.ones(m, dtype=np.uint8)
                z[list(zeros)] = 0
                images = enumerate_R(SequencePair(z[:n], z[n:]))
                w = Fraction(1, math.comb(m, u) * len(images))
                for img in images:
                    key = tuple(img.x.tolist()) + tuple(img.y.tolist())
                    pushed[key] = pushed.get(key, Fraction(0)) + w
            assert len(pushed) == math.comb(m, u + 1)
            assert all(v == Fraction(1, math.comb(m, u + 1)) for v in pushed.values())


def test_zero_count_sets():
    model = BinaryModel(0.5)
    std = make_zero_count_set(50, model, "standard")
    assert (std.lo, std.hi) == (40, 60)
    assert std.k0 == 1 and len(std) == 21

    ext = make_zero_count_set(50, model, "extended", 0.6)
    # half-width floor(100**0.6) = 15; members are the integers within distance
    # 100**0.6 of the center, matching the integer-set definition
    assert (ext.lo, ext.hi) == (35, 65)
    assert all(abs(k - 50) <= 100**0.6 for k in ext.members())

    lin = make_zero_count_set(50, model, "linear", 0.2)
    assert (lin.lo, lin.hi) == (40, 60)

    with pytest.raises(ValueError):
        make_zero_count_set(50, model, "extended", 0.7)
    with pytest.raises(ValueError):
        make_zero_count_set(50, model, "linear", 1.5)
    with pytest.raises(ValueError):
        make_zero_count_set(50, model, "fancy")


def test_zero_count_set_clipped_to_support():
    model = BinaryModel(0.9)  # q = 0.1, center near 0
    zs = make_zero_count_set(5, model, "standard")
    assert zs.lo >= 0 and zs.hi <= 10


def test_binomial_center_rounds_up():
    assert binomial_center(50, BinaryModel(0.5)) == 50
    assert binomial_center(500, BinaryModel(0.05)) == 950
    assert binomial_center(2000, BinaryModel(0.3)) == 2800
    assert binomial_center(2, BinaryModel(0.25)) == 3


def test_binomial_pmf_log_values():
    assert binomial_pmf_log(2, 0.5, 1) == pytest.approx(math.log(0.5), abs=1e-12)
    assert binomial_pmf_log(4, 0.5, 2) == pytest.approx(math.log(6 / 16), abs=1e-12)
    with pytest.raises(ValueError):
        binomial_pmf_log(4, 0.5, 5)


@pytest.mark.parametrize("n2,q", [(10, 0.5), (137, 0.2), (2000, 0.7)])
def test_binomial_pmf_normalizes(n2, q):
    total = sum(math.exp(binomial_pmf_log(n2, q, k)) for k in range(n2 + 1))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_gaussian_local_pmf():
    model = BinaryModel(0.5)
    n = 50
    center = gaussian_local_pmf(n, model, 50)
    assert center == pytest.approx(1.0 / (2 * math.sqrt(math.pi * 0.25 * n)), rel=1e-12)
    for j in (1, 5, 11):
        assert gaussian_local_pmf(n, model, 50 + j) == pytest.approx(
            gaussian_local_pmf(n, model, 50 - j), rel=1e-12
        )


def test_gaussian_local_pmf_approximates_binomial():
    n, model = 10_000, BinaryModel(0.5)
    width = int((2 * n) ** 0.6)
    worst = 0.0
    for k in range(2 * n // 2 - width, 2 * n // 2 + width + 1, 7):
        exact = math.exp(binomial_pmf_log(2 * n, 0.5, k))
        worst = max(worst, abs(exact / gaussian_local_pmf(n, model, k) - 1.0))
    assert worst <= 0.05
