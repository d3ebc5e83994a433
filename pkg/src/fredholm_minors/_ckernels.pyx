# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: subset-minor sums for the Fredholm series and
products in the finite Grassmann algebra.

Both functions have numpy twins in ``_pykernels`` with identical signatures.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef double _det_inplace(double* a, int k) noexcept nogil:
    # Gaussian elimination with partial pivoting; destroys a.
    cdef int i, j, r, piv
    cdef double det = 1.0, best, t, f
    for i in range(k):
        piv = i
        best = fabs(a[i * k + i])
        for r in range(i + 1, k):
            t = fabs(a[r * k + i])
            if t > best:
                best = t
                piv = r
        if best == 0.0:
            return 0.0
        if piv != i:
            for j in range(k):
                t = a[i * k + j]
                a[i * k + j] = a[piv * k + j]
                a[piv * k + j] = t
            det = -det
        det *= a[i * k + i]
        for r in range(i + 1, k):
            f = a[r * k + i] / a[i * k + i]
            if f != 0.0:
                for j in range(i + 1, k):
                    a[r * k + j] -= f * a[i * k + j]
    return det


cdef double _first_block(const double[:, ::1] N, const double[::1] w,
                         const long[::1] xs, const long[::1] ys,
                         const long[::1] pool, int p, int first, double* buf,
                         long* rows, long* cols, int* comb) noexcept nogil:
    # Sum over subsets pool[{first} U T], T a (p-1)-subset of positions
    # (first, len(pool)).
    cdef int m = pool.shape[0]
    cdef int n = xs.shape[0]
    cdef int k = n + p
    cdef int q = p - 1
    cdef int i, j, pos
    cdef double acc = 0.0, weight
    cdef int span = m - first - 1
    if q > span:
        return 0.0
    for i in range(n):
        rows[i] = xs[i]
        cols[i] = ys[i]
    rows[n] = pool[first]
    cols[n] = pool[first]
    for i in range(q):
        comb[i] = first + 1 + i
    while True:
        weight = w[pool[first]]
        for i in range(q):
            rows[n + 1 + i] = pool[comb[i]]
            cols[n + 1 + i] = pool[comb[i]]
            weight *= w[pool[comb[i]]]
        for i in range(k):
            for j in range(k):
                buf[i * k + j] = N[rows[i], cols[j]]
        acc += weight * _det_inplace(buf, k)
        # next lexicographic combination
        pos = q - 1
        while pos >= 0 and comb[pos] == m - q + pos:
            pos -= 1
        if pos < 0:
            break
        comb[pos] += 1
        for i in range(pos + 1, q):
            comb[i] = comb[i - 1] + 1
    return acc


def subset_minor_sums(const double[:, ::1] N, const double[::1] w,
                      const long[::1] xs, const long[::1] ys,
                      const long[::1] pool, int p, int lo, int hi):
    """Per-first-index partial sums of weighted (n+p)-point minors.

    Entry ``f - lo`` of the result is the sum, over all p-subsets S of
    ``pool`` whose smallest position is ``f``, of
    ``prod(w[S]) * det N[xs+S, ys+S]``.  For ``p == 0`` a single entry
    holding ``det N[xs, ys]`` is returned.
    """
    cdef int n = xs.shape[0]
    cdef int k = n + p
    cdef int f, i, j
    cdef double* buf
    cdef long* rows
    cdef long* cols
    cdef int* comb
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out
    cdef double[::1] outv
    if p == 0:
        out = np.zeros(1)
        if n == 0:
            out[0] = 1.0
            return out
        buf = <double*> malloc(n * n * sizeof(double))
        for i in range(n):
            for j in range(n):
                buf[i * n + j] = N[xs[i], ys[j]]
        out[0] = _det_inplace(buf, n)
        free(buf)
        return out
    out = np.zeros(max(hi - lo, 0))
    outv = out
    buf = <double*> malloc(k * k * sizeof(double))
    rows = <long*> malloc(k * sizeof(long))
    cols = <long*> malloc(k * sizeof(long))
    comb = <int*> malloc(p * sizeof(int))
    try:
        with nogil:
            for f in range(lo, hi):
                outv[f - lo] = _first_block(N, w, xs, ys, pool, p, f, buf,
                                            rows, cols, comb)
    finally:
        free(buf)
        free(rows)
        free(cols)
        free(comb)
    return out


cdef extern from *:
    int __builtin_popcountl(unsigned long) nogil


cdef inline int _parity(unsigned long v) noexcept nogil:
    return __builtin_popcountl(v) & 1


def grassmann_mul(const double[::1] a, const double[::1] b, int nbits):
    """Product of two dense Grassmann coefficient vectors of length 2**nbits.

    Monomials are products of generators in increasing bit order; the sign
    of ``e_A * e_B`` counts pairs (i in A, j in B) with i > j.
    """
    cdef long size = 1 << nbits
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(size)
    cdef double[::1] o = out
    cdef long[::1] nza = np.flatnonzero(np.asarray(a))
    cdef long[::1] nzb = np.flatnonzero(np.asarray(b))
    cdef long ia, ib, A, B, cmask
    cdef int j
    cdef double ca
    with nogil:
        for ia in range(nza.shape[0]):
            A = nza[ia]
            ca = a[A]
            # bit j of cmask: parity of the bits of A above j
            cmask = 0
            for j in range(nbits):
                if _parity(<unsigned long> (A >> (j + 1))):
                    cmask |= (<long> 1) << j
            for ib in range(nzb.shape[0]):
                B = nzb[ib]
                if A & B:
                    continue
                if _parity(<unsigned long> (B & cmask)):
                    o[A | B] -= ca * b[B]
                else:
                    o[A | B] += ca * b[B]
    return out
