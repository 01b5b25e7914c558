"""Fast invariant checks for an installed build (``qinfocrit selfcheck``)."""
import numpy as np

from . import criteria, fisher, kernels
from .linalg import random_density
from .povm import MeasurementOutcome, enumerate_pmf, outcome_codes, povm_element, sample_outcomes
from .qhbm import builtin_model
from .shadow import SNAPSHOT_FACTORS, mean_snapshot


def _povm_complete():
    total = sum(povm_element(MeasurementOutcome.from_codes(c)) for c in outcome_codes(2))
    return float(np.abs(total - np.eye(4)).max())


def _shadow_exact_mean():
    # the snapshot average weighted by exact outcome probabilities reproduces rho
    rho = random_density(2, np.random.default_rng(3))
    codes = outcome_codes(2)
    weights = enumerate_pmf(rho)
    total = sum(w * kernels.snapshot_sum(c[None], SNAPSHOT_FACTORS) for w, c in zip(weights, codes))
    return float(np.abs(total - rho).max())


def _fd_gradient(name):
    model = builtin_model(name)
    theta = np.random.default_rng(5).uniform(-1, 1, model.p)
    g = model.evaluate(theta).grad_log
    h, err = 1e-5, 0.0
    for j in range(model.p):
        e = np.zeros(model.p)
        e[j] = h
        fd = (model.evaluate(theta + e).log_state - model.evaluate(theta - e).log_state) / (2 * h)
        err = max(err, float(np.abs(fd - g[j]).max()))
    return err


def _bkm_oracle():
    model = builtin_model("M1")
    theta = np.random.default_rng(7).uniform(-1, 1, model.p)
    return float(np.abs(fisher.bkm_J(model, theta).entries
                        - fisher.bkm_integral_oracle(model, theta).entries).max())


def _quantum_dominates():
    model = builtin_model("M2")
    theta = np.random.default_rng(11).uniform(-1, 1, model.p)
    diff = fisher.bkm_J(model, theta).entries - fisher.classical_I_model(model, theta).entries
    return float(np.linalg.eigvalsh(diff)[0])


def _tic_collapse():
    i = np.diag([2.0, 1.0, 0.5])
    return abs(criteria.tic(-3.0, i, i).value - criteria.aic(-3.0, 3).value)


def _backends_agree():
    rng = np.random.default_rng(13)
    codes = sample_outcomes(random_density(3, rng), 500, rng).codes
    sums = [m.snapshot_sum(codes, SNAPSHOT_FACTORS) for m in kernels.backends().values()]
    return float(max(np.abs(s - sums[0]).max() for s in sums))


def _sampling_deterministic():
    rho = random_density(3, np.random.default_rng(17))
    a, b = sample_outcomes(rho, 200, 99), sample_outcomes(rho, 200, 99)
    return 0.0 if a == b else 1.0


def _mean_snapshot_trace():
    rho = random_density(3, np.random.default_rng(19))
    snaps = sample_outcomes(rho, 300, 1)
    return abs(float(np.trace(mean_snapshot(snaps)).real) - 1.0)


CHECKS = (
    ("povm_completeness", _povm_complete, 1e-12),
    ("shadow_exact_mean", _shadow_exact_mean, 1e-12),
    ("grad_log_fd_M1", lambda: _fd_gradient("M1"), 1e-6),
    ("grad_log_fd_M2", lambda: _fd_gradient("M2"), 1e-6),
    ("bkm_vs_integral", _bkm_oracle, 1e-7),
    ("quantum_fisher_dominates", lambda: -_quantum_dominates(), 1e-8),
    ("tic_equals_aic_when_I_eq_J", _tic_collapse, 1e-9),
    ("kernel_backends_agree", _backends_agree, 1e-10),
    ("sampling_deterministic", _sampling_deterministic, 0.5),
    ("snapshot_unit_trace", _mean_snapshot_trace, 1e-12),
)


def run_checks():
    """Yield ``(name, passed, detail)`` for every check."""
    for name, fn, tol in CHECKS:
        try:
            val = fn()
        except Exception as exc:  # report, do not abort the suite
            yield name, False, f"raised {type(exc).__name__}: {exc}"
            continue
        yield name, val <= tol, f"value={val:.3e} tol={tol:.0e}"
