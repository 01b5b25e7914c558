"""Dense Hermitian linear algebra for few-qubit operators.

All routines take and return plain ``numpy`` arrays.  Matrices are dense,
complex, and square with a power-of-two dimension no larger than
``MAX_DIM``.
"""
import logging

import numpy as np

logger = logging.getLogger(__name__)

MAX_DIM = 1024
HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-8
LOG_FLOOR = 1e-12
# exp() of anything larger overflows a double
EXP_LIMIT = 700.0


class NotHermitianError(ValueError):
    pass


class NotPositiveError(ValueError):
    pass


def num_qubits(dim):
    q = int(dim).bit_length() - 1
    if dim < 2 or 1 << q != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return q


def symmetrize(a):
    """Return the Hermitian part ``(a + a^dagger) / 2``."""
    return 0.5 * (a + a.conj().T)


def check_hermitian(a, atol=HERMITIAN_ATOL):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds cap {MAX_DIM}")
    num_qubits(a.shape[0])
    dev = np.max(np.abs(a - a.conj().T))
    if dev > atol * max(1.0, np.max(np.abs(a))):
        raise NotHermitianError(f"matrix is not Hermitian (max |A - A^H| = {dev:.3e})")
    return a


def herm_eig(h):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    evals : ndarray
        Real eigenvalues in ascending order.
    evecs : ndarray
        Unitary matrix whose columns are the eigenvectors, so that
        ``evecs @ diag(evals) @ evecs^H`` reconstructs ``h``.
    """
    h = check_hermitian(h)
    return np.linalg.eigh(symmetrize(h))


def herm_func(h, func):
    """Apply a real scalar function to a Hermitian matrix spectrally."""
    evals, evecs = herm_eig(h)
    return symmetrize((evecs * func(evals)) @ evecs.conj().T)


def herm_exp(h):
    evals, evecs = herm_eig(h)
    if evals[-1] > EXP_LIMIT:
        raise OverflowError(f"largest eigenvalue {evals[-1]:.1f} overflows exp()")
    return symmetrize((evecs * np.exp(evals)) @ evecs.conj().T)


def herm_log(rho, floor=LOG_FLOOR):
    """Matrix logarithm of a positive semidefinite matrix.

    Eigenvalues below ``floor`` are clamped to ``floor`` before the log is
    taken; a warning is logged when that happens.  Eigenvalues below
    ``-PSD_ATOL`` are rejected.
    """
    evals, evecs = herm_eig(rho)
    if evals[0] < -PSD_ATOL:
        raise NotPositiveError(f"matrix is not PSD (min eigenvalue {evals[0]:.3e})")
    if evals[0] < floor:
        logger.warning("herm_log: clamping %d eigenvalue(s) below %g",
                       int(np.sum(evals < floor)), floor)
    return symmetrize((evecs * np.log(np.maximum(evals, floor))) @ evecs.conj().T)


def trace_product(a, b):
    """Real part of ``Tr(a @ b)`` without forming the product."""
    return float(np.real(np.einsum("ij,ji->", a, b)))


def von_neumann_entropy(rho):
    evals = np.linalg.eigvalsh(symmetrize(np.asarray(rho, dtype=complex)))
    evals = evals[evals > 1e-15]
    return float(-np.sum(evals * np.log(evals)))


def relative_entropy(rho, log_sigma):
    """``Tr[rho (log rho - log sigma)]`` given ``log sigma`` directly."""
    return -von_neumann_entropy(rho) - trace_product(rho, log_sigma)


def check_density(rho, atol=1e-10):
    rho = check_hermitian(rho, atol=1e-10)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"trace {tr:.12f} differs from 1")
    lo = np.linalg.eigvalsh(symmetrize(rho))[0]
    if lo < -atol:
        raise NotPositiveError(f"density matrix has eigenvalue {lo:.3e}")
    return rho


def random_density(q, rng, rank=None):
    """Random density matrix from the Ginibre ensemble (full rank by default)."""
    d = 2**q
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return symmetrize(rho / np.trace(rho).real)


def random_hermitian(d, rng, scale=1.0):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return symmetrize(g) * scale
