"""Information matrices for the classical and quantum criteria.

Every function returns an :class:`InfoMatrix`, a symmetric real p x p
array tagged with the kind of estimate it holds.
"""
from dataclasses import dataclass

import numpy as np

from .fit import MIN_PROB, SupportError, _counts
from .povm import MAX_ENUM_QUBITS, outcome_expectations
from .shadow import all_snapshot_traces, snapshot_traces

KINDS = ("I_C_emp", "J_C_emp", "I_C_model", "J_Q_bkm", "I_Q_emp", "J_Q_emp", "I_Q_model")


@dataclass
class InfoMatrix:
    entries: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown information-matrix kind {self.kind!r}")
        a = np.asarray(self.entries, dtype=float)
        self.entries = 0.5 * (a + a.T)

    @property
    def p(self):
        return self.entries.shape[0]

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    def to_dict(self, theta=None):
        ev = self.eigenvalues()
        nz = np.abs(ev)
        cond = float(nz.max() / nz.min()) if nz.min() > 0 else float("inf")
        out = {"kind": self.kind, "entries": self.entries.tolist(),
               "eigenvalues": ev.tolist(), "condition_number": cond}
        if theta is not None:
            out["theta"] = [float(v) for v in theta]
        return out


def _check_enum(model):
    if model.qubits > MAX_ENUM_QUBITS:
        raise ValueError(f"{model.qubits} qubits exceeds the enumeration cap of {MAX_ENUM_QUBITS}")


def _classical_scores(pt):
    """Per-outcome probability, score and log-likelihood Hessian over all outcomes."""
    p = pt.grad_state.shape[0]
    d = pt.state.shape[0]
    mats = np.concatenate([pt.state[None], pt.grad_state, pt.hess_state.reshape(p * p, d, d)])
    vals = outcome_expectations(mats)
    h, dh = vals[0], vals[1:1 + p]
    d2h = vals[1 + p:].reshape(p, p, -1)
    return h, dh, d2h


def classical_I_emp(model, theta, outcomes):
    counts, n = _counts(outcomes)
    h, dh, _ = _classical_scores(model.evaluate(theta))
    obs = np.flatnonzero(counts)
    if np.any(h[obs] < MIN_PROB):
        raise SupportError("model assigns zero probability to an observed outcome")
    score = dh[:, obs] / h[obs]
    w = counts[obs] / n
    return InfoMatrix((score * w) @ score.T, "I_C_emp")


def classical_J_emp(model, theta, outcomes):
    counts, n = _counts(outcomes)
    h, dh, d2h = _classical_scores(model.evaluate(theta))
    obs = np.flatnonzero(counts)
    if np.any(h[obs] < MIN_PROB):
        raise SupportError("model assigns zero probability to an observed outcome")
    score = dh[:, obs] / h[obs]
    w = counts[obs] / n
    # d2 log h = d2h / h - score score^T
    hess = d2h[:, :, obs] / h[obs] - score[:, None, :] * score[None, :, :]
    return InfoMatrix(-(hess @ w), "J_C_emp")


def classical_I_model(model, theta):
    """Expected score outer product under the model's own outcome distribution."""
    _check_enum(model)
    h, dh, _ = _classical_scores(model.evaluate(theta))
    keep = h > MIN_PROB
    score = dh[:, keep] / h[keep]
    return InfoMatrix((score * h[keep]) @ score.T, "I_C_model")


def classical_J_model(model, theta):
    """Expected negative log-likelihood Hessian under the model (equals I_C_model)."""
    _check_enum(model)
    h, dh, d2h = _classical_scores(model.evaluate(theta))
    keep = h > MIN_PROB
    score = dh[:, keep] / h[keep]
    hess = d2h[:, :, keep] / h[keep] - score[:, None, :] * score[None, :, :]
    return InfoMatrix(-(hess @ h[keep]), "I_C_model")


def bkm_J(model, theta, state=None, kind="J_Q_bkm"):
    """``-Tr(state d_i d_j log sigma)``, with ``state`` defaulting to ``sigma(theta)``.

    With the model state this is the Bogoliubov-Kubo-Mori metric; with a
    mean snapshot it is the empirical shadow Hessian.
    """
    pt = model.evaluate(theta)
    state = pt.state if state is None else np.asarray(state, dtype=complex)
    vals = -np.real(np.einsum("ij,abji->ab", state, pt.hess_log))
    return InfoMatrix(vals, kind)


def _log_mean(lam_a, lam_b):
    la, lb = np.log(lam_a), np.log(lam_b)
    diff = la - lb
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (lam_a - lam_b) / diff
    close = np.abs(diff) < 1e-12
    return np.where(close, 0.5 * (lam_a + lam_b), out)


def bkm_integral_oracle(model, theta, floor=1e-14):
    """BKM metric from the integral form, evaluated in the eigenbasis of sigma.

    ``g_ij = sum_kl c(l_k, l_l) A_kl B_lk`` with ``c`` the logarithmic mean
    and ``A, B`` the log-derivatives expressed in that eigenbasis.
    """
    pt = model.evaluate(theta)
    lam, vec = np.linalg.eigh(pt.state)
    if lam[0] < floor:
        raise ValueError(f"state is rank deficient (smallest eigenvalue {lam[0]:.3e})")
    c = _log_mean(lam[:, None], lam[None, :])
    rot = np.einsum("ai,kab,bj->kij", vec.conj(), pt.grad_log, vec)
    # A_kl B_lk = A_kl conj(B_kl) for Hermitian B
    g = np.real(np.einsum("kl,ikl,jkl->ij", c, rot, rot.conj()))
    return InfoMatrix(g, "J_Q_bkm")


def bkm_quadrature(model, theta, nodes=1000):
    """Midpoint-rule quadrature of ``int_0^1 Tr(s^t A s^(1-t) B) dt``."""
    pt = model.evaluate(theta)
    lam, vec = np.linalg.eigh(pt.state)
    rot = np.einsum("ai,kab,bj->kij", vec.conj(), pt.grad_log, vec)
    ts = (np.arange(nodes) + 0.5) / nodes
    p = rot.shape[0]
    g = np.zeros((p, p))
    for t in ts:
        st = lam**t
        s1 = lam ** (1 - t)
        g += np.real(np.einsum("k,ikl,l,jkl->ij", st, rot, s1, rot.conj()))
    return InfoMatrix(g / nodes, "J_Q_bkm")


def shadow_I_emp(model, theta, snaps):
    pt = model.evaluate(theta)
    v = snapshot_traces(snaps, pt.grad_log)
    return InfoMatrix(v.T @ v / len(v), "I_Q_emp")


def shadow_J_emp(model, theta, snaps):
    from .shadow import mean_snapshot
    return bkm_J(model, theta, mean_snapshot(snaps), kind="J_Q_emp")


def shadow_I_model(model, theta):
    """Exact expectation over all 6**q snapshots, weighted by the model's Born probabilities."""
    _check_enum(model)
    pt = model.evaluate(theta)
    v = all_snapshot_traces(model.qubits, pt.grad_log)
    w = outcome_expectations(pt.state)
    return InfoMatrix((v.T * w) @ v, "I_Q_model")


def sampled_expectation(values):
    """Mean outer product of per-sample vectors and its entrywise standard error."""
    v = np.asarray(values, dtype=float)
    outer = v[:, :, None] * v[:, None, :]
    mean = outer.mean(axis=0)
    se = outer.std(axis=0, ddof=1) / np.sqrt(len(v))
    return mean, se
