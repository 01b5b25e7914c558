"""Random-Pauli measurements with the Pauli-6 POVM.

Single-qubit outcomes are coded as ``2 * basis + bit`` with bases ordered
X, Y, Z, so codes run 0..5.  Bit 0 is the +1 eigenstate of the measured
Pauli (|+>, |+i>, |0>) and bit 1 the -1 eigenstate.  A q-qubit outcome has
flat index ``sum_j code_j * 6**j`` (qubit 0 least significant); this is the
canonical ordering of every outcome-indexed vector in the package.

Matrices use the usual Kronecker order, qubit 0 being the leftmost factor.
"""
import csv
import functools
import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .linalg import check_hermitian, num_qubits
from .seeding import as_generator

BASES = "XYZ"
MAX_ENUM_QUBITS = 6

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
# U rotates the measured Pauli onto Z: U P U^dagger = Z
BASIS_ROTATIONS = {"X": _H, "Y": _H @ _SDG, "Z": np.eye(2, dtype=complex)}

# eigenstate U^dagger |bit>, indexed by single-qubit code
SINGLE_STATES = np.array([BASIS_ROTATIONS[b].conj().T[:, bit] for b in BASES for bit in (0, 1)])
SINGLE_PROJECTORS = np.einsum("oa,ob->oab", SINGLE_STATES, SINGLE_STATES.conj())


@dataclass(frozen=True)
class MeasurementOutcome:
    """One shot: a Pauli basis and a bit per qubit, qubit 0 first."""

    bases: str
    bits: str

    def __post_init__(self):
        if len(self.bases) != len(self.bits) or not self.bases:
            raise ValueError("bases and bits must be non-empty and of equal length")
        if set(self.bases) - set(BASES) or set(self.bits) - set("01"):
            raise ValueError(f"invalid outcome {self.bases}/{self.bits}")

    @property
    def qubits(self):
        return len(self.bases)

    @property
    def codes(self):
        return np.array([2 * BASES.index(b) + int(x) for b, x in zip(self.bases, self.bits)],
                        dtype=np.uint8)

    @property
    def index(self):
        return int(np.dot(self.codes.astype(np.int64), 6 ** np.arange(self.qubits)))

    @classmethod
    def from_codes(cls, codes):
        return cls("".join(BASES[c // 2] for c in codes), "".join(str(c % 2) for c in codes))


class OutcomeSet:
    """An ordered record of shots, stored as an (n, q) array of codes.

    Behaves as a read-only sequence of :class:`MeasurementOutcome`.
    """

    def __init__(self, codes):
        codes = np.asarray(codes, dtype=np.uint8)
        if codes.ndim != 2 or codes.shape[1] < 1:
            raise ValueError("codes must be a 2-d array with one column per qubit")
        if codes.size and codes.max() > 5:
            raise ValueError("outcome codes must lie in 0..5")
        self.codes = codes
        self.codes.setflags(write=False)

    @classmethod
    def from_outcomes(cls, outcomes):
        outcomes = list(outcomes)
        if not outcomes:
            raise ValueError("empty outcome list")
        return cls(np.stack([o.codes for o in outcomes]))

    @property
    def qubits(self):
        return self.codes.shape[1]

    def __len__(self):
        return self.codes.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return OutcomeSet(self.codes[i])
        return MeasurementOutcome.from_codes(self.codes[i])

    def __iter__(self):
        for row in self.codes:
            yield MeasurementOutcome.from_codes(row)

    def __eq__(self, other):
        return isinstance(other, OutcomeSet) and np.array_equal(self.codes, other.codes)

    def indices(self):
        return self.codes.astype(np.int64) @ (6 ** np.arange(self.qubits, dtype=np.int64))

    def counts(self):
        """Occurrences of every outcome, in canonical order (length 6**q)."""
        if self.qubits > MAX_ENUM_QUBITS:
            raise ValueError(f"counting over 6**{self.qubits} outcomes exceeds the enumeration cap")
        return np.bincount(self.indices(), minlength=6**self.qubits)

    def digest(self):
        return hashlib.sha256(self.codes.tobytes()).hexdigest()[:16]


def outcome_codes(q):
    """All 6**q outcomes as an array of codes, in canonical order."""
    idx = np.arange(6**q)
    return np.stack([(idx // 6**j) % 6 for j in range(q)], axis=1).astype(np.uint8)


@functools.lru_cache(maxsize=None)
def product_states(q):
    """(6**q, 2**q) array of the product eigenstates, one row per outcome."""
    if q > MAX_ENUM_QUBITS:
        raise ValueError(f"{q} qubits exceeds the enumeration cap of {MAX_ENUM_QUBITS}")
    codes = outcome_codes(q)
    out = SINGLE_STATES[codes[:, 0]]
    for j in range(1, q):
        out = np.einsum("xa,xb->xab", out, SINGLE_STATES[codes[:, j]]).reshape(len(codes), -1)
    out.setflags(write=False)
    return out


def povm_element(outcome):
    """Dense matrix of the POVM element for one outcome."""
    out = np.ones((1, 1), dtype=complex)
    for c in outcome.codes:
        out = np.kron(out, SINGLE_PROJECTORS[c] / 3.0)
    return out


def outcome_expectations(mats):
    """``Tr(Pi_x A)`` for every outcome x and each matrix A in ``mats``.

    ``mats`` is one (d, d) matrix or a stack (m, d, d); the result has the
    matching leading shape followed by 6**q.
    """
    mats = np.asarray(mats, dtype=complex)
    single = mats.ndim == 2
    stack = mats[None] if single else mats
    q = num_qubits(stack.shape[-1])
    vals = kernels.pauli6_expectations(stack, product_states(q)) / 3.0**q
    return vals[0] if single else vals


def enumerate_pmf(sigma):
    """Outcome probabilities ``Tr(Pi_x sigma)`` in canonical order."""
    sigma = check_hermitian(sigma, atol=1e-10)
    return outcome_expectations(sigma)


def _setting_unitary(setting):
    out = np.ones((1, 1), dtype=complex)
    for b in setting:
        out = np.kron(out, BASIS_ROTATIONS[BASES[b]])
    return out


def conditional_bit_distributions(rho, settings):
    """``<b| U rho U^dagger |b>`` for each basis setting (rows of base indices)."""
    out = np.empty((len(settings), rho.shape[0]))
    for i, s in enumerate(settings):
        u = _setting_unitary(s)
        out[i] = np.real(np.einsum("br,rc,bc->b", u, rho, u.conj()))
    return np.clip(out, 0.0, None)


def sample_outcomes(rho, n, rng):
    """Draw ``n`` i.i.d. random-Pauli shots from ``rho``.

    Each shot picks a basis per qubit uniformly, then a bit string from the
    Born distribution in the rotated basis.  ``rng`` is a seed or a numpy
    ``Generator``; the result is a deterministic function of it.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rho = check_hermitian(rho, atol=1e-10)
    q = num_qubits(rho.shape[0])
    d = rho.shape[0]
    rng = as_generator(rng)
    bases = rng.integers(0, 3, size=(n, q))
    u = rng.random(n)
    settings, which = np.unique(bases, axis=0, return_inverse=True)
    probs = conditional_bit_distributions(rho, settings)
    cdf = np.cumsum(probs / probs.sum(axis=1, keepdims=True), axis=1)
    b = kernels.sample_bits(cdf, which.reshape(-1).astype(np.int64), u)
    bits = (b[:, None] >> (q - 1 - np.arange(q))[None, :]) & 1
    return OutcomeSet((2 * bases + bits).astype(np.uint8))


def write_outcomes_csv(path, records):
    """Write ``(trial, OutcomeSet)`` pairs as rows ``trial,shot,bases,bits``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "shot", "bases", "bits"])
        for trial, outcomes in records:
            for shot, o in enumerate(outcomes):
                w.writerow([trial, shot, o.bases, o.bits])


def read_outcomes_csv(path):
    """Inverse of :func:`write_outcomes_csv`; returns ``{trial: OutcomeSet}``."""
    rows = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(int(rec["trial"]), []).append(
                (int(rec["shot"]), MeasurementOutcome(rec["bases"], rec["bits"])))
    return {t: OutcomeSet.from_outcomes(o for _, o in sorted(v, key=lambda r: r[0]))
            for t, v in rows.items()}
