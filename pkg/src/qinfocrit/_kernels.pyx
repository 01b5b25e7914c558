# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the per-sample kernels in ``_kernels_py``.

Snapshot rows are built as Kronecker products by doubling (qubit 0 is the
leftmost factor), so a row costs about ``4/3 * d**2`` complex products.
"""
import numpy as np
cimport numpy as cnp

from ._kernels_py import unique_rows

cnp.import_array()


def pauli6_expectations(mats, states):
    cdef const double complex[:, :, ::1] a = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef const double complex[:, ::1] s = np.ascontiguousarray(states, dtype=np.complex128)
    cdef Py_ssize_t m = a.shape[0], d = a.shape[1], nk = s.shape[0]
    out_arr = np.empty((m, nk), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, x, r, c
    cdef double acc
    cdef double complex row
    with nogil:
        for k in range(m):
            for x in range(nk):
                # Hermitian A: diagonal plus twice the real part of the upper triangle
                acc = 0
                for r in range(d):
                    row = 0
                    for c in range(r + 1, d):
                        row = row + a[k, r, c] * s[x, c]
                    acc = acc + 2 * (s[x, r].conjugate() * row).real \
                        + a[k, r, r].real * (s[x, r].real ** 2 + s[x, r].imag ** 2)
                out[k, x] = acc
    return out_arr


cdef void _build_row(const cnp.uint8_t[:] code, const double complex[:, :, ::1] f,
                     double complex* buf, double complex* tmp, Py_ssize_t q) noexcept nogil:
    """Write the row-major Kronecker product of the coded factors into ``buf``."""
    cdef Py_ssize_t j, r, c, a, b, size = 1, s2
    cdef double complex* src = buf
    cdef double complex* dst = tmp
    cdef double complex* swap
    cdef double complex v
    src[0] = 1
    for j in range(q):
        s2 = 2 * size
        for r in range(size):
            for c in range(size):
                v = src[r * size + c]
                for a in range(2):
                    for b in range(2):
                        dst[(2 * r + a) * s2 + 2 * c + b] = v * f[code[j], a, b]
        swap = src
        src = dst
        dst = swap
        size = s2
    if src != buf:
        for r in range(size * size):
            buf[r] = src[r]


def snapshot_traces(codes, factors, mats):
    uniq, inverse, _ = unique_rows(codes)
    cdef const cnp.uint8_t[:, ::1] cd = uniq
    cdef const double complex[:, :, ::1] f = np.ascontiguousarray(factors, dtype=np.complex128)
    # transpose so that Tr(R A) = sum_i R.flat[i] * At.flat[i]
    at_arr = np.ascontiguousarray(np.transpose(mats, (0, 2, 1)), dtype=np.complex128)
    cdef const double complex[:, :, ::1] at = at_arr
    cdef Py_ssize_t n = cd.shape[0], q = cd.shape[1]
    cdef Py_ssize_t m = at.shape[0], d = at.shape[1], dd = d * d
    buf_arr = np.empty(2 * dd, dtype=np.complex128)
    cdef double complex[::1] buf = buf_arr
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t a, k, i
    cdef double acc
    cdef const double complex* ak
    with nogil:
        for a in range(n):
            _build_row(cd[a], f, &buf[0], &buf[dd], q)
            for k in range(m):
                ak = &at[k, 0, 0]
                acc = 0
                for i in range(dd):
                    acc = acc + buf[i].real * ak[i].real - buf[i].imag * ak[i].imag
                out[a, k] = acc
    return out_arr[inverse]


def snapshot_sum(codes, factors):
    uniq, _, counts_arr = unique_rows(codes)
    cdef const cnp.uint8_t[:, ::1] cd = uniq
    cdef const cnp.int64_t[::1] counts = counts_arr.astype(np.int64)
    cdef const double complex[:, :, ::1] f = np.ascontiguousarray(factors, dtype=np.complex128)
    cdef Py_ssize_t n = cd.shape[0], q = cd.shape[1]
    cdef Py_ssize_t d = 1 << q, dd = d * d
    buf_arr = np.empty(2 * dd, dtype=np.complex128)
    cdef double complex[::1] buf = buf_arr
    total_arr = np.zeros((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] total = total_arr
    cdef double complex* tot = &total[0, 0]
    cdef Py_ssize_t a, i
    cdef double w
    with nogil:
        for a in range(n):
            _build_row(cd[a], f, &buf[0], &buf[dd], q)
            w = counts[a]
            for i in range(dd):
                tot[i] = tot[i] + w * buf[i]
    return total_arr


def sample_bits(cdf, setting, u):
    cdef const double[:, ::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef const cnp.int64_t[::1] st = np.ascontiguousarray(setting, dtype=np.int64)
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = st.shape[0], d = c.shape[1]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t a, lo, hi, mid, row
    with nogil:
        for a in range(n):
            row = st[a]
            # first index with cdf > u, clamped to the last entry
            lo = 0
            hi = d - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if c[row, mid] > uu[a]:
                    hi = mid
                else:
                    lo = mid + 1
            out[a] = lo
    return out_arr
