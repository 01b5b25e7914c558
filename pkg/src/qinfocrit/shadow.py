"""Classical shadows from random-Pauli shots.

A snapshot is the inverted-channel image of one shot,
``rho_hat = kron_j (3 U_j^dagger |b_j><b_j| U_j - I)``.  Snapshots share the
outcome coding of :mod:`qinfocrit.povm`; they are the same data viewed as
unbiased single-shot state estimates.
"""
import numpy as np

from . import kernels
from .povm import SINGLE_PROJECTORS, OutcomeSet, outcome_codes

# per-qubit snapshot factors, indexed by outcome code; spectrum {2, -1}
SNAPSHOT_FACTORS = 3.0 * SINGLE_PROJECTORS - np.eye(2)


class Snapshot:
    """A single classical-shadow snapshot, materialized on first use."""

    __slots__ = ("outcome", "_cache")

    def __init__(self, outcome):
        self.outcome = outcome
        self._cache = None

    @property
    def qubits(self):
        return self.outcome.qubits

    def materialize(self):
        if self._cache is None:
            m = np.ones((1, 1), dtype=complex)
            for c in self.outcome.codes:
                m = np.kron(m, SNAPSHOT_FACTORS[c])
            m.setflags(write=False)
            self._cache = m
        return self._cache

    def __repr__(self):
        return f"Snapshot({self.outcome.bases}/{self.outcome.bits})"


def snapshots(outcomes):
    return [Snapshot(o) for o in outcomes]


def _codes(snaps):
    if isinstance(snaps, OutcomeSet):
        return snaps.codes
    snaps = list(snaps)
    if not snaps:
        raise ValueError("no snapshots given")
    q = {s.qubits for s in snaps}
    if len(q) != 1:
        raise ValueError(f"snapshots have mixed qubit counts {sorted(q)}")
    return np.stack([s.outcome.codes for s in snaps])


def snapshot_materialize(s):
    return s.materialize()


def mean_snapshot(snaps):
    """Arithmetic mean of the materialized snapshots.

    Accepts a list of :class:`Snapshot` or an :class:`OutcomeSet`.
    """
    codes = _codes(snaps)
    if len(codes) == 0:
        raise ValueError("no snapshots given")
    total = kernels.snapshot_sum(codes, SNAPSHOT_FACTORS)
    mean = total / len(codes)
    return 0.5 * (mean + mean.conj().T)


def snapshot_trace_with(s, a):
    a = np.asarray(a, dtype=complex)
    m = s.materialize()
    if a.shape != m.shape:
        raise ValueError(f"operator shape {a.shape} does not match snapshot {m.shape}")
    return float(np.real(np.einsum("ij,ji->", m, a)))


def snapshot_traces(snaps, ops):
    """``Tr(rho_hat_a A_k)`` for every snapshot ``a`` and operator ``A_k``.

    Returns an (n, m) real array.
    """
    codes = _codes(snaps)
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim == 2:
        ops = ops[None]
    if ops.shape[-1] != 2 ** codes.shape[1]:
        raise ValueError(f"operators of dimension {ops.shape[-1]} do not act on "
                         f"{codes.shape[1]} qubits")
    return kernels.snapshot_traces(codes, SNAPSHOT_FACTORS, ops)


def all_snapshot_traces(q, ops):
    """Traces against every one of the 6**q possible snapshots, canonical order."""
    return kernels.snapshot_traces(outcome_codes(q), SNAPSHOT_FACTORS, np.asarray(ops, dtype=complex))
