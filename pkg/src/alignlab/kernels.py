"""Vectorized scoring kernels.

Two batch engines back the Monte Carlo paths:

* ``lcs_scores``: bit-parallel LCS over many binary pairs at once.  Sequences
  are packed 64 letters per word (little-endian bit order) and the per-letter
  update runs word-major, so each numpy operation touches one contiguous
  (replicates,) slice.
* ``alignment_scores_batch``: anti-diagonal sweep of the three-way DP with an
  arbitrary integer weight table, used by the general scorer and the kernel
  equivalence checks.

Both return plain int64 score arrays and share no state; callers own all
parallelism.
"""

from __future__ import annotations

import sys

import numpy as np

if sys.byteorder != "little":  # pragma: no cover
    raise ImportError("packed-word kernels assume a little-endian platform")

_U64 = np.uint64
_FULL = _U64(0xFFFFFFFFFFFFFFFF)


def words_per_row(n: int) -> int:
    return (n + 63) // 64


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack (k, n) 0/1 letters into (k, w) uint64, bit i of word j = letter 64j+i."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    k, n = bits.shape
    w = words_per_row(n)
    padded = np.zeros((k, w * 64), dtype=np.uint8)
    padded[:, :n] = bits
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def unpack_rows(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of pack_rows; returns (k, n) uint8."""
    raw = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")
    return raw[:, :n]


def lcs_scores(xwords: np.ndarray, ywords: np.ndarray, n: int) -> np.ndarray:
    """LCS lengths of k packed binary pairs; xwords, ywords are (k, w) uint64."""
    k, w = xwords.shape
    if n == 0:
        return np.zeros(k, dtype=np.int64)
    top = n - 64 * (w - 1)
    topmask = _FULL if top == 64 else _U64((1 << top) - 1)

    pm1 = np.ascontiguousarray(xwords.T)  # (w, k) word-major
    pm0 = ~pm1
    pm0[w - 1] &= topmask
    pmx = pm0 ^ pm1
    yw = np.ascontiguousarray(ywords.T)

    v = np.full((w, k), _FULL)
    v[w - 1] = topmask

    u = np.empty(k, dtype=np.uint64)
    s = np.empty(k, dtype=np.uint64)
    carry = np.empty(k, dtype=np.uint64)
    c1 = np.empty(k, dtype=bool)
    c2 = np.empty(k, dtype=bool)
    zero = _U64(0)
    one = _U64(1)
    for j in range(n):
        yj = (yw[j >> 6] >> _U64(j & 63)) & one
        ym = zero - yj  # all-ones where y_j == 1
        carry[:] = 0
        for wi in range(w):
            vw = v[wi]
            np.bitwise_and(pmx[wi], ym, out=u)
            np.bitwise_xor(u, pm0[wi], out=u)  # selected match mask
            np.bitwise_and(vw, u, out=u)  # u = v & pm, a bit-subset of v
            np.add(vw, u, out=s)
            np.less(s, vw, out=c1)  # carry out of v + u
            np.bitwise_xor(vw, u, out=vw)  # v - u == v ^ u since u <= v bitwise
            np.add(s, carry, out=s)
            np.less(s, carry, out=c2)  # carry out of adding previous carry
            np.bitwise_or(vw, s, out=vw)  # v = (v + u) | (v - u)
            np.logical_or(c1, c2, out=c1)
            carry[:] = c1
        v[w - 1] &= topmask
    return (np.int64(n) - np.bitwise_count(v).sum(axis=0)).astype(np.int64)


def lcs_scores_bits(xbits: np.ndarray, ybits: np.ndarray) -> np.ndarray:
    """LCS lengths from unpacked (k, n) 0/1 arrays."""
    n = xbits.shape[1]
    return lcs_scores(pack_rows(xbits), pack_rows(ybits), n)


def alignment_scores_batch(
    xs: np.ndarray, ys: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    """Max-weight monotone matching values over a batch of letter pairs.

    xs, ys: (B, n) integer letter arrays; weights: (A, A) int64 table of
    match weights (already gap-reduced).  Returns D[n][n] per pair, where the
    empty matching contributes 0.  The DP is swept by anti-diagonals so each
    step is a vectorized max over the batch.
    """
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    b, n = xs.shape
    if n == 0:
        return np.zeros(b, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.int64)
    d0 = np.zeros((b, n + 1), dtype=np.int64)  # diagonal d-2, indexed by row i
    d1 = np.zeros((b, n + 1), dtype=np.int64)  # diagonal d-1
    d2 = np.zeros((b, n + 1), dtype=np.int64)
    for d in range(2, 2 * n + 1):
        lo = max(1, d - n)
        hi = min(n, d - 1)
        xi = xs[:, lo - 1 : hi]
        yi = ys[:, d - hi - 1 : d - lo][:, ::-1]  # column d-i-1 for i = lo..hi
        wdiag = weights[xi, yi]
        m = np.maximum(d1[:, lo - 1 : hi], d1[:, lo : hi + 1])
        np.maximum(m, d0[:, lo - 1 : hi] + wdiag, out=m)
        d2[:, lo : hi + 1] = m
        d0, d1, d2 = d1, d2, d0
        d2[:, :] = 0
    return d1[:, n].copy()
