"""Information criteria, ground-truth references and model selection.

Criteria follow the ``-2 * log-likelihood + penalty`` convention: smaller is
better, and ``value / (2n)`` is on the scale of a per-shot cross entropy.
"""
from dataclasses import asdict, dataclass

import numpy as np

from . import fisher
from .fit import MIN_PROB, SupportError, _counts, loss_ll, loss_shadow
from .linalg import trace_product
from .povm import enumerate_pmf
from .shadow import mean_snapshot

KINDS = ("AIC", "TIC", "QAIC_LL", "QTIC_shadow", "QAIC_shadow", "QCE_TRUE", "CE_TRUE")
DEFAULT_RCOND = 1e-10
TIE_TOL = 1e-12


@dataclass
class CriterionReport:
    criterion_kind: str
    value: float
    first_term: float
    penalty_term: float
    normalized_value: float
    model_name: str = ""
    n: int = 0
    p: int = 0
    pinv_rank: int = None
    pinv_rcond: float = None
    # QAIC_LL drops a model-independent constant
    omits_constant: bool = False

    def __post_init__(self):
        if self.criterion_kind not in KINDS:
            raise ValueError(f"unknown criterion kind {self.criterion_kind!r}")

    def to_dict(self):
        return asdict(self)


def pinv(m, rcond=DEFAULT_RCOND):
    """SVD pseudo-inverse dropping singular values below ``rcond * s_max``.

    Returns ``(inverse, retained_rank)``.
    """
    a = m.entries if isinstance(m, fisher.InfoMatrix) else np.asarray(m, dtype=float)
    u, s, vt = np.linalg.svd(a)
    if s.size == 0 or s[0] == 0:
        return np.zeros_like(a.T), 0
    keep = s >= rcond * s[0]
    inv = (vt[keep].T / s[keep]) @ u[:, keep].T
    return inv, int(keep.sum())


def _entries(m):
    return m.entries if isinstance(m, fisher.InfoMatrix) else np.asarray(m, dtype=float)


def _report(kind, first, penalty, n, model_name="", p=0, rank=None, rcond=None, **kw):
    value = first + penalty
    norm = value / (2 * n) if n else value
    return CriterionReport(kind, float(value), float(first), float(penalty), float(norm),
                           model_name, int(n), int(p), rank, rcond, **kw)


def aic(ll, p, n=0, model_name=""):
    return _report("AIC", -2.0 * ll, 2.0 * p, n, model_name, p)


def tic(ll, i_mat, j_mat, rcond=DEFAULT_RCOND, n=0, model_name=""):
    i_e, j_e = _entries(i_mat), _entries(j_mat)
    if i_e.shape != j_e.shape:
        raise ValueError("I and J must have the same shape")
    jinv, rank = pinv(j_e, rcond)
    penalty = 2.0 * float(np.trace(i_e @ jinv))
    return _report("TIC", -2.0 * ll, penalty, n, model_name, i_e.shape[0], rank, rcond)


def log_likelihood(model, theta, outcomes):
    counts, n = _counts(outcomes)
    return -n * loss_ll(model, theta, counts)[0]


def aic_for(model, theta, outcomes):
    n = _counts(outcomes)[1]
    return aic(log_likelihood(model, theta, outcomes), model.p, n, model.name)


def tic_for(model, theta, outcomes, rcond=DEFAULT_RCOND):
    n = _counts(outcomes)[1]
    i_mat = fisher.classical_I_emp(model, theta, outcomes)
    j_mat = fisher.classical_J_emp(model, theta, outcomes)
    return tic(log_likelihood(model, theta, outcomes), i_mat, j_mat, rcond, n, model.name)


def qaic_ll(model, theta_c, outcomes, rcond=DEFAULT_RCOND):
    """Likelihood-based quantum AIC (realizable case), constant term omitted."""
    n = _counts(outcomes)[1]
    ll = log_likelihood(model, theta_c, outcomes)
    jq = fisher.bkm_J(model, theta_c).entries
    ic_inv, rank = pinv(fisher.classical_I_model(model, theta_c), rcond)
    penalty = model.p + float(np.trace(jq @ ic_inv))
    return _report("QAIC_LL", -2.0 * ll, penalty, n, model.name, model.p, rank, rcond,
                   omits_constant=True)


def qtic_shadow(model, theta_q, snaps, rcond=DEFAULT_RCOND):
    """Shadow-based quantum TIC from empirical I and J."""
    n = len(snaps)
    rho_bar = mean_snapshot(snaps)
    loss = loss_shadow(model, theta_q, rho_bar)[0]
    i_emp = fisher.shadow_I_emp(model, theta_q, snaps).entries
    j_emp = fisher.bkm_J(model, theta_q, rho_bar, kind="J_Q_emp")
    jinv, rank = pinv(j_emp, rcond)
    return _report("QTIC_shadow", 2.0 * n * loss, 2.0 * float(np.trace(i_emp @ jinv)), n,
                   model.name, model.p, rank, rcond)


def qaic_shadow(model, theta_q, snaps, rcond=DEFAULT_RCOND):
    """Shadow-based quantum AIC with model-expectation I and BKM J."""
    n = len(snaps)
    loss = loss_shadow(model, theta_q, mean_snapshot(snaps))[0]
    i_mod = fisher.shadow_I_model(model, theta_q).entries
    jinv, rank = pinv(fisher.bkm_J(model, theta_q), rcond)
    return _report("QAIC_shadow", 2.0 * n * loss, 2.0 * float(np.trace(i_mod @ jinv)), n,
                   model.name, model.p, rank, rcond)


def qce_true(rho, model, theta):
    """``-Tr(rho log sigma(theta))``; needs the true state, so simulation only."""
    val = -trace_product(np.asarray(rho, dtype=complex), model.evaluate(theta).log_state)
    return _report("QCE_TRUE", val, 0.0, 0, model.name, model.p)


def ce_true(rho, model, theta):
    """``-sum_x g(x) log h(x)`` over the Pauli-6 outcomes."""
    g = enumerate_pmf(rho)
    h = enumerate_pmf(model.evaluate(theta).state)
    support = g > 1e-15
    if np.any(h[support] < MIN_PROB):
        raise SupportError("model assigns zero probability where the true distribution does not")
    val = -float(g[support] @ np.log(h[support]))
    return _report("CE_TRUE", val, 0.0, 0, model.name, model.p)


def select_model(reports, use="value"):
    """Name of the report with the smallest ``use`` attribute.

    ``use`` may be ``"value"``, ``"normalized_value"`` or ``"first_term"``.
    Ties within 1e-12 go to fewer parameters, then to the lexically
    smaller name.
    """
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError("need at least two reports to select between")
    kinds = {r.criterion_kind for r in reports}
    if len(kinds) != 1:
        raise ValueError(f"cannot compare mixed criterion kinds {sorted(kinds)}")
    if len({r.n for r in reports}) != 1:
        raise ValueError("reports were computed on different sample sizes")
    vals = [getattr(r, use) for r in reports]
    lo = min(vals)
    tied = [r for r, v in zip(reports, vals) if v - lo <= TIE_TOL]
    return min(tied, key=lambda r: (r.p, r.model_name)).model_name
