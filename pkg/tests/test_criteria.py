import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qinfocrit import criteria as crit
from qinfocrit import fisher
from qinfocrit.fit import SupportError, fit_ll, fit_shadow
from qinfocrit.linalg import random_density, von_neumann_entropy
from qinfocrit.povm import OutcomeSet, sample_outcomes
from qinfocrit.qhbm import builtin_model
from qinfocrit.shadow import mean_snapshot


def _psd(rng, p, rank=None):
    a = rng.normal(size=(p, rank or p))
    return a @ a.T


def test_pinv_examples(rng):
    inv, rank = crit.pinv(np.eye(3))
    assert np.allclose(inv, np.eye(3)) and rank == 3
    inv, rank = crit.pinv(np.diag([1.0, 0.0]))
    assert np.allclose(inv, np.diag([1.0, 0.0])) and rank == 1
    inv, rank = crit.pinv(np.diag([1.0, 1e-12]))
    assert rank == 1


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
@settings(max_examples=30, deadline=None)
def test_pinv_moore_penrose(seed, rank):
    m = _psd(np.random.default_rng(seed), 8, rank)
    inv, r = crit.pinv(m)
    assert np.linalg.norm(m @ inv @ m - m) < 1e-8 * max(1.0, np.linalg.norm(m))
    assert r == rank


def test_aic_arithmetic():
    assert crit.aic(0.0, 0).value == 0
    assert crit.aic(-500.0, 9).value == 1018
    assert crit.aic(-500.0, 15).value == 1030


def test_tic_examples(rng):
    assert crit.tic(-10.0, np.eye(4), np.eye(4)).penalty_term == pytest.approx(8)
    assert crit.tic(-10.0, np.eye(4), np.eye(4)).value == crit.aic(-10.0, 4).value
    j = _psd(rng, 5)
    assert crit.tic(-10.0, 2 * j, j).penalty_term == pytest.approx(20)
    i = _psd(rng, 5)
    expect = 2 * np.trace(np.linalg.solve(j.T, i.T).T)
    assert crit.tic(-10.0, i, j).penalty_term == pytest.approx(expect, abs=1e-9)
    with pytest.raises(ValueError):
        crit.tic(0.0, np.eye(2), np.eye(3))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_tic_collapses_to_aic(seed):
    i = _psd(np.random.default_rng(seed), 6)
    assert abs(crit.tic(-7.0, i, i).value - crit.aic(-7.0, 6).value) < 1e-9


def test_report_bookkeeping():
    r = crit.tic(-250.0, np.eye(3), 0.5 * np.eye(3), n=100, model_name="x")
    assert r.value == r.first_term + r.penalty_term
    assert r.normalized_value * 200 == pytest.approx(r.value)
    assert r.pinv_rank == 3 and r.pinv_rcond == crit.DEFAULT_RCOND
    assert r.to_dict()["criterion_kind"] == "TIC"
    with pytest.raises(ValueError):
        crit.CriterionReport("BIC", 0, 0, 0, 0)


@pytest.fixture(scope="module")
def fitted():
    m = builtin_model("M1")
    theta0 = np.random.default_rng(2024).uniform(-1, 1, 9)
    shots = sample_outcomes(m.evaluate(theta0).state, 5000, 77)
    fc = fit_ll(m, shots, restarts=2, seed=1)
    fq = fit_shadow(m, mean_snapshot(shots), restarts=2, seed=2)
    return m, theta0, shots, fc, fq


def test_qaic_ll_penalty_at_least_2p(m2):
    for seed in range(5):
        rng = np.random.default_rng(300 + seed)
        shots = sample_outcomes(m2.evaluate(rng.uniform(-1, 1, 15)).state, 2000, rng)
        fit = fit_ll(m2, shots, restarts=1, seed=seed)
        r = crit.qaic_ll(m2, fit.theta_hat, shots)
        if r.pinv_rank == m2.p:
            assert r.penalty_term >= 2 * m2.p - 1e-6
        assert r.omits_constant


def test_qaic_ll_equals_aic_when_metrics_match(fitted):
    m, _, shots, fc, _ = fitted
    i_c = fisher.classical_I_model(m, fc.theta_hat).entries
    ic_inv, _ = crit.pinv(i_c)
    # matrix-level form of the collapse: with J_Q replaced by I_C the penalty is exactly 2p
    assert m.p + np.trace(i_c @ ic_inv) == pytest.approx(2 * m.p)


def test_golden_values(fitted):
    m, _, shots, fc, fq = fitted
    golden = {
        "QAIC_LL": (crit.qaic_ll(m, fc.theta_hat, shots), 53295.89111703374, 111.03843857821566),
        "QTIC_shadow": (crit.qtic_shadow(m, fq.theta_hat, shots), 16883.364939960018, 620.2531640383952),
        "QAIC_shadow": (crit.qaic_shadow(m, fq.theta_hat, shots), 16872.719996857224, 609.6082209356025),
        "TIC": (crit.tic_for(m, fc.theta_hat, shots), 53202.71022256487, 17.85754410934993),
    }
    for kind, (r, value, penalty) in golden.items():
        assert r.criterion_kind == kind
        assert r.value == pytest.approx(value, rel=1e-8)
        assert r.penalty_term == pytest.approx(penalty, rel=1e-6)


def test_qaic_shadow_penalty_not_2p(fitted):
    m, _, shots, _, fq = fitted
    assert abs(crit.qaic_shadow(m, fq.theta_hat, shots).penalty_term - 2 * m.p) > 0


def test_qtic_single_shot(fitted):
    m, _, shots, _, fq = fitted
    one = shots[:1]
    r = crit.qtic_shadow(m, fq.theta_hat, one)
    assert np.isfinite(r.value) and r.n == 1
    assert np.linalg.matrix_rank(fisher.shadow_I_emp(m, fq.theta_hat, one).entries) <= 1


def test_qce_true_examples(m1, rng):
    rho = random_density(3, rng)
    assert crit.qce_true(rho, m1, np.zeros(9)).value == pytest.approx(3 * np.log(2))
    theta = rng.uniform(-1, 1, 9)
    sigma = m1.evaluate(theta).state
    lam = np.linalg.eigvalsh(sigma)
    assert crit.qce_true(sigma, m1, theta).value == pytest.approx(-np.sum(lam * np.log(lam)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_qce_true_above_entropy(seed):
    rng = np.random.default_rng(seed)
    m = builtin_model("M1")
    rho = random_density(3, rng)
    assert crit.qce_true(rho, m, rng.uniform(-2, 2, 9)).value - von_neumann_entropy(rho) >= -1e-9


def test_ce_true(m1, rng):
    rho = random_density(3, rng)
    assert crit.ce_true(rho, m1, np.zeros(9)).value == pytest.approx(3 * np.log(6))
    with pytest.raises(SupportError):
        crit.ce_true(np.eye(8) / 8, m1, np.r_[400.0, 400, 400, np.zeros(6)])


def _r(value, p, name, kind="AIC", n=10):
    return crit.CriterionReport(kind, value, value, 0.0, value / (2 * n), name, n, p)


def test_select_model_rules():
    assert crit.select_model([_r(10, 9, "M1"), _r(12, 15, "M2")]) == "M1"
    assert crit.select_model([_r(5, 15, "M2"), _r(5, 9, "M1")]) == "M1"
    assert crit.select_model([_r(5, 9, "b"), _r(5 + 1e-13, 9, "a")]) == "a"
    with pytest.raises(ValueError, match="mixed"):
        crit.select_model([_r(1, 9, "M1"), _r(2, 9, "M2", kind="TIC")])
    with pytest.raises(ValueError):
        crit.select_model([_r(1, 9, "M1")])
    with pytest.raises(ValueError):
        crit.select_model([_r(1, 9, "M1"), _r(2, 9, "M2", n=11)])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=5), st.integers(1, 10_000))
def test_select_scale_invariant(values, n):
    reps = [_r(v, i + 1, f"m{i}", n=n) for i, v in enumerate(values)]
    assert crit.select_model(reps, "value") == crit.select_model(reps, "normalized_value")


def test_criteria_accept_outcome_sets(fitted):
    m, _, shots, fc, _ = fitted
    assert isinstance(shots, OutcomeSet)
    assert crit.aic_for(m, fc.theta_hat, shots).n == len(shots)
    assert crit.log_likelihood(m, fc.theta_hat, shots) == pytest.approx(-fc.loss * len(shots))
