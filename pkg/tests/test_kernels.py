import numpy as np
import pytest

import oracles
from alignlab import kernels
from alignlab.align import ScoringScheme, SequencePair, lcs_bitparallel, score_dp


def test_pack_unpack_roundtrip():
    rng = np.random.default_rng(1)
    for n in (1, 7, 63, 64, 65, 130, 200):
        bits = rng.integers(0, 2, (5, n)).astype(np.uint8)
        words = kernels.pack_rows(bits)
        assert words.shape == (5, kernels.words_per_row(n))
        assert (kernels.unpack_rows(words, n) == bits).all()


@pytest.mark.parametrize("n", [1, 2, 13, 63, 64, 65, 127, 128, 129, 192, 200, 321])
def test_lcs_scores_matches_scalar_kernel(n):
    rng = np.random.default_rng(n)
    k = 40
    xb = rng.integers(0, 2, (k, n)).astype(np.uint8)
    yb = rng.integers(0, 2, (k, n)).astype(np.uint8)
    got = kernels.lcs_scores_bits(xb, yb)
    want = [lcs_bitparallel(SequencePair(xb[i], yb[i])) for i in range(k)]
    assert got.tolist() == want


def test_kernel_equals_dp_exhaustive_to_n8():
    # every binary pair up to n = 8, batch kernel vs. batch DP
    lcs = ScoringScheme.lcs()
    for n in range(1, 9):
        grid = np.array(
            [[(v >> i) & 1 for i in range(n)] for v in range(2**n)], dtype=np.uint8
        )
        xs = np.repeat(grid, 2**n, axis=0)
        ys = np.tile(grid, (2**n, 1))
        got = kernels.lcs_scores_bits(xs, ys)
        want = score_dp(SequencePair(xs[0], ys[0]), lcs)  # anchor the batch
        assert got[0] == want
        assert (got == np.asarray(kernels.alignment_scores_batch(
            xs.astype(np.int64), ys.astype(np.int64), lcs.reduced_int_table()
        ))).all()


def test_bitparallel_identity_large_n():
    x = np.ones(4096, dtype=np.uint8)
    assert lcs_bitparallel(SequencePair(x, x)) == 4096


def test_lcs_scores_against_recursion_oracle():
    rng = np.random.default_rng(9)
    xb = rng.integers(0, 2, (30, 12)).astype(np.uint8)
    yb = rng.integers(0, 2, (30, 12)).astype(np.uint8)
    got = kernels.lcs_scores_bits(xb, yb)
    want = [
        oracles.lcs_recursive(tuple(xb[i].tolist()), tuple(yb[i].tolist()))
        for i in range(30)
    ]
    assert got.tolist() == want


def test_alignment_scores_batch_against_brute():
    scheme = ScoringScheme(3, ((2, 1, 0), (1, 3, 1), (0, 1, 2)), 0)
    table = scheme.reduced_int_table()
    rng = np.random.default_rng(5)
    xs = rng.integers(0, 3, (25, 5))
    ys = rng.integers(0, 3, (25, 5))
    got = kernels.alignment_scores_batch(xs, ys, table)
    for i in range(25):
        assert got[i] == score_dp(SequencePair(xs[i], ys[i]), scheme)


def test_alignment_scores_batch_negative_weights():
    # all-negative weights: the empty matching (value 0) must win
    table = np.array([[-1, -2], [-2, -1]], dtype=np.int64)
    xs = np.array([[0, 1, 0]])
    ys = np.array([[1, 0, 1]])
    assert kernels.alignment_scores_batch(xs, ys, table).tolist() == [0]


def test_empty_length():
    assert kernels.lcs_scores(np.zeros((3, 0), np.uint64), np.zeros((3, 0), np.uint64), 0).tolist() == [0, 0, 0]
    assert kernels.alignment_scores_batch(
        np.zeros((2, 0), np.int64), np.zeros((2, 0), np.int64), np.eye(2, dtype=np.int64)
    ).tolist() == [0, 0]
