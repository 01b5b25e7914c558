"""Pure-numpy implementations of the per-sample kernels.

These define the reference behaviour; the compiled ``_kernels`` extension
must agree with them to rounding error.  Qubit 0 is the most significant
bit of a matrix index.
"""
import numpy as np

_CHUNK = 8192


def unique_rows(codes):
    """Distinct code rows with inverse map and counts, via the flat base-6 index."""
    codes = np.asarray(codes, dtype=np.uint8)
    flat = codes.astype(np.int64) @ (6 ** np.arange(codes.shape[1], dtype=np.int64))
    keys, first, inverse, counts = np.unique(flat, return_index=True, return_inverse=True,
                                             return_counts=True)
    return np.ascontiguousarray(codes[first]), inverse.reshape(-1), counts


def pauli6_expectations(mats, states):
    """``<s_x| A_k |s_x>`` for every product state ``s_x`` and matrix ``A_k``.

    ``mats`` has shape (m, d, d) and ``states`` shape (K, d); the result is a
    real (m, K) array.  Matrices are assumed Hermitian.
    """
    mats = np.ascontiguousarray(mats, dtype=complex)
    # (m, K, d) = conj(S) @ A, then contract the remaining index with S
    left = states.conj() @ mats
    return np.real((left * states).sum(axis=-1))


def _materialize_rows(codes, factors):
    n, q = codes.shape
    out = factors[codes[:, 0]]
    for j in range(1, q):
        f = factors[codes[:, j]]
        out = np.einsum("nab,ncd->nacbd", out, f).reshape(n, 2 * out.shape[1], 2 * out.shape[2])
    return out


def snapshot_traces(codes, factors, mats):
    """``Re Tr(rho_hat_a A_k)`` for every snapshot row ``a`` and matrix ``A_k``."""
    # repeated outcomes are common at small q, so work on distinct rows only
    codes, inverse, _ = unique_rows(codes)
    mats = np.asarray(mats, dtype=complex)
    n = codes.shape[0]
    m, d, _ = mats.shape
    # Tr(R A) = sum_rc R[r,c] A[c,r]
    at = mats.transpose(0, 2, 1).reshape(m, d * d)
    out = np.empty((n, m))
    for lo in range(0, n, _CHUNK):
        rows = _materialize_rows(codes[lo:lo + _CHUNK], factors).reshape(-1, d * d)
        out[lo:lo + _CHUNK] = np.real(rows @ at.T)
    return out[inverse]


def snapshot_sum(codes, factors):
    """Sum of materialized snapshots over all rows."""
    uniq, _, counts = unique_rows(codes)
    d = 2 ** uniq.shape[1]
    total = np.zeros((d, d), dtype=complex)
    for lo in range(0, len(uniq), _CHUNK):
        rows = _materialize_rows(uniq[lo:lo + _CHUNK], factors)
        total += np.einsum("n,nab->ab", counts[lo:lo + _CHUNK].astype(float), rows)
    return total


def sample_bits(cdf, setting, u):
    """Inverse-CDF draw of a computational-basis index per shot.

    ``cdf`` is (S, d) with rows non-decreasing and ending at 1, ``setting``
    picks a row per shot and ``u`` holds uniforms in [0, 1).
    """
    d = cdf.shape[1]
    idx = np.sum(u[:, None] >= cdf[setting], axis=1)
    return np.minimum(idx, d - 1).astype(np.int64)
