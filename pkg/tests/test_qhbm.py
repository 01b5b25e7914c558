import numpy as np
import pytest
from conftest import central_diff

from qinfocrit.linalg import herm_exp, herm_log
from qinfocrit.qhbm import (CircuitSpec, EbmSpec, FrozenModel, PQC1, builtin_model,
                            circuit_unitary, circuit_unitary_deriv, circuit_unitary_deriv2,
                            ebm_energy, energies, grad_log_model, hess_log_model, latent_hamiltonian,
                            log_model, log_partition, make_model, model_state, ry)

EBM3 = EbmSpec(3)


def _brute_energy(theta, x):
    s = [1 - 2 * int(b) for b in x]
    a, w = theta[:3], theta[3:]
    pairs = [(0, 1), (0, 2), (1, 2)]
    return -sum(a[i] * s[i] for i in range(3)) - sum(w[k] * s[i] * s[j] for k, (i, j) in enumerate(pairs))


def test_energy_examples():
    assert ebm_energy(EBM3, np.zeros(6), "101") == 0
    assert ebm_energy(EBM3, [1, 0, 0, 0, 0, 0], "000") == -1
    assert ebm_energy(EBM3, [1, 0, 0, 0, 0, 0], [1, 0, 0]) == 1


def test_energy_layout_against_brute_force(rng):
    theta = rng.normal(size=6)
    for x in range(8):
        bits = format(x, "03b")
        assert energies(EBM3, theta)[x] == pytest.approx(_brute_energy(theta, bits))


def test_partition_function(rng):
    assert log_partition(EBM3, np.zeros(6)) == pytest.approx(3 * np.log(2))
    assert np.allclose(latent_hamiltonian(EBM3, np.zeros(6)), 0)
    t = 0.7
    assert log_partition(EBM3, [t, 0, 0, 0, 0, 0]) == pytest.approx(np.log(2 * np.cosh(t)) + 2 * np.log(2))
    theta = rng.normal(size=6)
    brute = sum(np.exp(-_brute_energy(theta, format(x, "03b"))) for x in range(8))
    assert np.exp(log_partition(EBM3, theta)) == pytest.approx(brute, rel=1e-12)


def test_energy_input_checks():
    with pytest.raises(ValueError):
        ebm_energy(EBM3, np.zeros(5), "000")
    with pytest.raises(ValueError):
        ebm_energy(EBM3, np.zeros(6), "0120")


def test_circuit_identity_and_single_gate():
    c = CircuitSpec.from_list(3, PQC1)
    assert np.allclose(circuit_unitary(c, np.zeros(3)), np.eye(8))
    u = circuit_unitary(c, [np.pi / 2, 0, 0])
    # no half angle: RY(pi/2) = [[0, -1], [1, 0]]
    assert np.allclose(ry(np.pi / 2), [[0, -1], [1, 0]])
    assert np.allclose(u, np.kron(ry(np.pi / 2), np.eye(4)))


def test_circuit_spec_validation():
    with pytest.raises(ValueError):
        CircuitSpec.from_list(2, [["RY", 2]])
    with pytest.raises(ValueError):
        CircuitSpec.from_list(2, [["CNOT", 0, 0]])
    with pytest.raises(ValueError):
        CircuitSpec.from_list(2, [["RZ", 0]])
    c = CircuitSpec.from_list(3, [["RY", 0], ["CNOT", 0, 1]])
    assert CircuitSpec.from_list(3, c.to_list()) == c


@pytest.mark.parametrize("name", ["M1", "M2"])
def test_circuit_derivatives(name, rng):
    circ = builtin_model(name).circuit
    theta = rng.uniform(-np.pi, np.pi, circ.param_count)
    f = lambda t: circuit_unitary(circ, t)
    for j in range(circ.param_count):
        assert np.linalg.norm(central_diff(f, theta, j, 1e-4) - circuit_unitary_deriv(circ, theta, j)) < 1e-6
    for j, k in [(0, 1), (2, 2), (1, circ.param_count - 1)]:
        fd = central_diff(lambda t: circuit_unitary_deriv(circ, t, k), theta, j, 1e-4)
        assert np.linalg.norm(fd - circuit_unitary_deriv2(circ, theta, j, k)) < 1e-6


def test_state_examples(m1, rng):
    assert np.allclose(model_state(m1, np.zeros(9)), np.eye(8) / 8)
    theta = np.r_[rng.normal(size=6), np.zeros(3)]
    w = np.exp(-energies(m1.ebm, theta[:6]))
    assert np.allclose(model_state(m1, theta), np.diag(w / w.sum()))


@pytest.mark.parametrize("name", ["M1", "M2"])
def test_state_matches_matrix_exponential(name, rng):
    model = builtin_model(name)
    theta = rng.uniform(-1, 1, model.p)
    u = circuit_unitary(model.circuit, theta[6:])
    k = latent_hamiltonian(model.ebm, theta[:6])
    expect = herm_exp(-u @ k @ u.conj().T)
    expect /= np.trace(expect).real
    sigma = model_state(model, theta)
    assert np.abs(sigma - expect).max() < 1e-10
    assert np.trace(sigma).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(sigma)[0] > 0


def test_log_examples(m1, rng):
    assert np.allclose(log_model(m1, np.zeros(9)), -3 * np.log(2) * np.eye(8))
    theta = np.r_[rng.normal(size=6), np.zeros(3)]
    e = energies(m1.ebm, theta[:6])
    assert np.allclose(log_model(m1, theta), np.diag(-e - log_partition(m1.ebm, theta[:6])))


@pytest.mark.parametrize("name", ["M1", "M2"])
def test_log_matches_eigendecomposition(name, rng):
    model = builtin_model(name)
    theta = rng.uniform(-1, 1, model.p)
    assert np.abs(log_model(model, theta) - herm_log(model_state(model, theta))).max() < 1e-9


def test_gradient_at_zero(m1):
    g = grad_log_model(m1, np.zeros(9))
    feats = m1.ebm.features
    for i in range(6):
        assert np.allclose(g[i], -np.diag(-feats[i]))
    assert np.allclose(g[6:], 0)


def test_hessian_at_zero(m1):
    h = hess_log_model(m1, np.zeros(9))
    for i in range(6):
        for j in range(6):
            assert np.allclose(h[i, j], -np.eye(8) * (i == j))


@pytest.mark.parametrize("name", ["M1", "M2"])
def test_log_derivatives_by_finite_differences(name):
    model = builtin_model(name)
    rng = np.random.default_rng(7 + len(name))
    f = lambda t: log_model(model, t)
    theta = rng.uniform(-1, 1, model.p)
    g = grad_log_model(model, theta)
    h = hess_log_model(model, theta)
    for j in range(model.p):
        assert np.abs(central_diff(f, theta, j, 1e-4) - g[j]).max() < 1e-6
        fd2 = central_diff(lambda t: grad_log_model(model, t), theta, j, 1e-4)
        assert np.abs(fd2 - h[j]).max() < 1e-4
    assert np.array_equal(h, h.transpose(1, 0, 2, 3))


@pytest.mark.parametrize("name", ["M1", "M2"])
def test_state_derivatives_by_finite_differences(name, rng):
    model = builtin_model(name)
    theta = rng.uniform(-1, 1, model.p)
    pt = model.evaluate(theta)
    f = lambda t: model_state(model, t)
    for j in range(model.p):
        assert np.abs(central_diff(f, theta, j, 1e-4) - pt.grad_state[j]).max() < 1e-7
        fd2 = central_diff(lambda t: model.evaluate(t).grad_state, theta, j, 1e-4)
        assert np.abs(fd2 - pt.hess_state[j]).max() < 1e-6
    # derivatives of a unit-trace state are traceless
    assert np.abs(np.trace(pt.grad_state, axis1=1, axis2=2)).max() < 1e-12


def test_nesting_m1_in_m2(m1, m2, rng):
    # M2 with the first RY layer set to M1's angles and the other layers zeroed is M1 (CNOTs cancel)
    theta1 = rng.uniform(-1, 1, 9)
    theta2 = np.r_[theta1, np.zeros(6)]
    assert np.allclose(model_state(m1, theta1), model_state(m2, theta2))


def test_parameter_names(m1, m2):
    assert m1.param_names() == ["a0", "a1", "a2", "w01", "w02", "w12", "t1", "t2", "t3"]
    assert m1.p == 9 and m2.p == 15
    assert m1.ebm_indices == tuple(range(6))


def test_frozen_model(m1, rng):
    theta = rng.uniform(-1, 1, 9)
    fz = FrozenModel(m1, tuple(theta), (0, 7))
    assert fz.p == 2 and fz.ebm_indices == (0,)
    pt, full = fz.evaluate(theta[[0, 7]]), m1.evaluate(theta)
    assert np.allclose(pt.state, full.state)
    assert np.allclose(pt.grad_log, full.grad_log[[0, 7]])
    assert np.allclose(pt.hess_log, full.hess_log[np.ix_([0, 7], [0, 7])])
    with pytest.raises(ValueError):
        FrozenModel(m1, tuple(theta), (9,))
    with pytest.raises(ValueError):
        fz.evaluate(theta)


def test_builtin_errors():
    with pytest.raises(KeyError):
        builtin_model("M3")
    with pytest.raises(ValueError):
        builtin_model("M2", qubits=2)
    assert make_model("tiny", 1, [["RY", 0]]).p == 2
