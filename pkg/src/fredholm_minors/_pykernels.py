"""Numpy fallbacks for the compiled kernels in ``_ckernels.pyx``.

Same signatures and return conventions; used when the extension is not
built or when ``FREDHOLM_PURE_PYTHON=1`` is set.
"""

from itertools import combinations

import numpy as np

# combinations per batched determinant call
_BATCH = 4096


def batched_det(mats):
    """Determinants of a stack of square matrices.

    Same elimination as the compiled kernel (partial pivoting, first maximal
    pivot), so repeated rows give an exact zero.
    """
    a = np.array(mats, dtype=float)
    batch, k = a.shape[0], a.shape[-1]
    det = np.ones(batch)
    idx = np.arange(batch)
    for i in range(k):
        piv = i + np.argmax(np.abs(a[:, i:, i]), axis=1)
        swap = piv != i
        if np.any(swap):
            rows_i = a[swap, i, :].copy()
            a[swap, i, :] = a[idx[swap], piv[swap], :]
            a[idx[swap], piv[swap], :] = rows_i
            det[swap] = -det[swap]
        pivot = a[:, i, i].copy()
        zero = pivot == 0.0
        det = np.where(zero, 0.0, det * pivot)
        pivot[zero] = 1.0
        f = a[:, i + 1:, i] / pivot[:, None]
        a[:, i + 1:, i + 1:] -= f[:, :, None] * a[:, i, None, i + 1:]
    return det


def subset_minor_sums(N, w, xs, ys, pool, p, lo, hi):
    N = np.asarray(N, dtype=float)
    w = np.asarray(w, dtype=float)
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    pool = np.asarray(pool, dtype=np.int64)
    n = len(xs)
    m = len(pool)
    if p == 0:
        if n == 0:
            return np.ones(1)
        return batched_det(N[np.ix_(xs, ys)][None])
    out = np.zeros(max(hi - lo, 0))
    for first in range(lo, hi):
        rest = range(first + 1, m)
        if p - 1 > len(rest):
            continue
        acc = 0.0
        tails = combinations(rest, p - 1)
        while True:
            chunk = [t for _, t in zip(range(_BATCH), tails)]
            if not chunk:
                break
            S = np.empty((len(chunk), p), dtype=np.int64)
            S[:, 0] = first
            if p > 1:
                S[:, 1:] = np.array(chunk, dtype=np.int64)
            S = pool[S]
            rows = np.concatenate([np.broadcast_to(xs, (len(S), n)), S], axis=1)
            cols = np.concatenate([np.broadcast_to(ys, (len(S), n)), S], axis=1)
            mats = N[rows[:, :, None], cols[:, None, :]]
            dets = batched_det(mats)
            weights = np.prod(w[S], axis=1)
            for v in weights * dets:
                acc += v
        out[first - lo] = acc
    return out


def _parity_table(nbits):
    size = 1 << nbits
    table = np.zeros(size, dtype=np.int8)
    for bit in range(nbits):
        table[1 << bit:2 << bit] = table[:1 << bit] ^ 1
    return table


_PARITY = {}


def grassmann_mul(a, b, nbits):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if nbits not in _PARITY:
        _PARITY[nbits] = _parity_table(nbits)
    parity = _PARITY[nbits]
    out = np.zeros(1 << nbits)
    nzb = np.flatnonzero(b)
    bvals = b[nzb]
    for A in np.flatnonzero(a):
        A = int(A)
        keep = (nzb & A) == 0
        B = nzb[keep]
        cmask = 0
        for j in range(nbits):
            if parity[A >> (j + 1)]:
                cmask |= 1 << j
        sign = 1.0 - 2.0 * parity[B & cmask]
        # targets A|B are distinct for distinct B, so fancy-index add is safe
        out[A | B] += sign * a[A] * bvals[keep]
    return out
