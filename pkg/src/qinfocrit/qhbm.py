"""Quantum Hamiltonian-based models (QHBMs).

A QHBM state is ``sigma(theta) = U exp(-K) U^dagger / Z`` where ``K`` is the
diagonal energy of a classical Boltzmann machine over bit strings and ``U``
is a parametrized circuit of ``RY`` and ``CNOT`` gates.  The parameter
vector lists the Boltzmann-machine parameters first (biases, then pair
weights in lexicographic order) and the circuit angles second.

Conventions:

* spin ``s_i = 1 - 2 x_i``; energy ``E(x) = -sum_i a_i s_i - sum_{i<j} w_ij s_i s_j``
* ``RY(t) = exp(-i t Y)`` with no half-angle factor
* temperature fixed at ``k_B T = 1``

Writing ``dU_j = -i T_j U`` with the Heisenberg-frame generator
``T_j = S_j Y S_j^dagger`` (``S_j`` the circuit after gate j) turns every
circuit derivative into commutators with ``T_j``, which is how the log-state
and state derivatives below are assembled.
"""
import functools
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from .linalg import symmetrize

_Y = np.array([[0, -1j], [1j, 0]])
_I2 = np.eye(2, dtype=complex)


def _embed(op, qubit, q):
    out = np.ones((1, 1), dtype=complex)
    for k in range(q):
        out = np.kron(out, op if k == qubit else _I2)
    return out


@functools.lru_cache(maxsize=None)
def _embedded_y(qubit, q):
    out = _embed(_Y, qubit, q)
    out.flags.writeable = False
    return out


@functools.lru_cache(maxsize=None)
def _cnot(control, target, q):
    d = 2**q
    idx = np.arange(d)
    cbit = (idx >> (q - 1 - control)) & 1
    dest = idx ^ (cbit << (q - 1 - target))
    u = np.zeros((d, d), dtype=complex)
    u[dest, idx] = 1.0
    u.flags.writeable = False
    return u


def ry(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _logsumexp(v):
    # scipy's version costs more than the whole 8-term sum at these sizes
    top = v.max()
    return float(top + np.log(np.exp(v - top).sum()))


@dataclass(frozen=True)
class EbmSpec:
    """Fully connected visible-unit Boltzmann machine on ``nodes`` bits."""

    nodes: int

    def __post_init__(self):
        if self.nodes < 1:
            raise ValueError("nodes must be positive")

    @property
    def pairs(self):
        return list(combinations(range(self.nodes), 2))

    @property
    def num_params(self):
        return self.nodes + self.nodes * (self.nodes - 1) // 2

    @functools.cached_property
    def features(self):
        """(num_params, 2**nodes) array with ``E(x) = -theta' . features[:, x]``."""
        q = self.nodes
        x = np.arange(2**q)
        spins = 1 - 2 * ((x[None, :] >> (q - 1 - np.arange(q))[:, None]) & 1)
        pair = [spins[i] * spins[j] for i, j in self.pairs]
        f = np.vstack([spins] + pair).astype(float) if pair else spins.astype(float)
        f.setflags(write=False)
        return f


def _bit_index(x, nodes):
    if isinstance(x, str):
        if len(x) != nodes or set(x) - set("01"):
            raise ValueError(f"bad bit string {x!r}")
        return int(x, 2)
    bits = list(x)
    if len(bits) != nodes:
        raise ValueError("bit string length does not match the number of nodes")
    return int("".join(str(int(b)) for b in bits), 2)


def ebm_energy(ebm, theta_ebm, x):
    """Energy of one bit string (``"010"`` or a sequence of 0/1, qubit 0 first)."""
    theta_ebm = np.asarray(theta_ebm, dtype=float)
    if theta_ebm.shape != (ebm.num_params,):
        raise ValueError(f"expected {ebm.num_params} EBM parameters")
    return float(-theta_ebm @ ebm.features[:, _bit_index(x, ebm.nodes)])


def energies(ebm, theta_ebm):
    return -np.asarray(theta_ebm, dtype=float) @ ebm.features


def latent_hamiltonian(ebm, theta_ebm):
    return np.diag(energies(ebm, theta_ebm)).astype(complex)


def log_partition(ebm, theta_ebm):
    return _logsumexp(-energies(ebm, theta_ebm))


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    param: int = None


@dataclass(frozen=True)
class CircuitSpec:
    """Ordered gate list; ``RY`` gates each own one circuit parameter."""

    qubits: int
    gates: tuple

    def __post_init__(self):
        seen = []
        for g in self.gates:
            if g.kind == "RY":
                if len(g.qubits) != 1 or g.param is None:
                    raise ValueError(f"malformed RY gate {g}")
                seen.append(g.param)
            elif g.kind == "CNOT":
                if len(g.qubits) != 2 or g.qubits[0] == g.qubits[1]:
                    raise ValueError(f"malformed CNOT gate {g}")
            else:
                raise ValueError(f"unknown gate kind {g.kind!r}")
            if any(not 0 <= k < self.qubits for k in g.qubits):
                raise ValueError(f"gate {g} acts outside {self.qubits} qubits")
        if sorted(seen) != list(range(len(seen))):
            raise ValueError("RY parameter indices must be 0..param_count-1, each used once")

    @property
    def param_count(self):
        return sum(g.kind == "RY" for g in self.gates)

    @functools.cached_property
    def _param_gate(self):
        # param index -> position in the gate list
        return {g.param: pos for pos, g in enumerate(self.gates) if g.kind == "RY"}

    @classmethod
    def from_list(cls, qubits, spec):
        """Build from ``[["RY", q], ["CNOT", c, t], ...]``; RY angles numbered in order."""
        gates, k = [], 0
        for item in spec:
            kind = str(item[0]).upper()
            if kind == "RY":
                gates.append(Gate("RY", (int(item[1]),), k))
                k += 1
            else:
                gates.append(Gate(kind, tuple(int(v) for v in item[1:])))
        return cls(qubits, tuple(gates))

    def to_list(self):
        return [[g.kind, *g.qubits] for g in self.gates]


class _CircuitEval:
    def __init__(self, circuit, angles):
        q = circuit.qubits
        angles = np.asarray(angles, dtype=float)
        if angles.shape != (circuit.param_count,):
            raise ValueError(f"expected {circuit.param_count} circuit parameters")
        d = 2**q
        eye = np.eye(d, dtype=complex)
        mats = []
        for g in circuit.gates:
            if g.kind == "RY":
                # RY(t) = cos(t) I - i sin(t) Y
                t = angles[g.param]
                mats.append(np.cos(t) * eye - 1j * np.sin(t) * _embedded_y(g.qubits[0], q))
            else:
                mats.append(_cnot(g.qubits[0], g.qubits[1], q))
        # suffix[k] = G_L ... G_{k+1}; the full unitary is suffix[-1] @ G_0 with suffix indexed from gate 0
        suffix = [np.eye(d, dtype=complex)]
        for m in reversed(mats):
            suffix.append(suffix[-1] @ m)
        suffix = suffix[::-1]  # suffix[k] = G_L ... G_k ; suffix[L] = I
        self.unitary = suffix[0]
        self.order = np.array([circuit._param_gate[j] for j in range(circuit.param_count)])
        gens = []
        for j in range(circuit.param_count):
            pos = self.order[j]
            s = suffix[pos + 1]
            gens.append(symmetrize(s @ _embedded_y(circuit.gates[pos].qubits[0], q) @ s.conj().T))
        self.generators = np.array(gens).reshape(-1, d, d)


def circuit_unitary(circuit, angles):
    return _CircuitEval(circuit, angles).unitary


def circuit_unitary_deriv(circuit, angles, j):
    ev = _CircuitEval(circuit, angles)
    return -1j * ev.generators[j] @ ev.unitary


def circuit_unitary_deriv2(circuit, angles, j, k):
    ev = _CircuitEval(circuit, angles)
    a, b = (j, k) if ev.order[j] <= ev.order[k] else (k, j)
    return -ev.generators[b] @ ev.generators[a] @ ev.unitary


def _comm(a, b):
    return a @ b - b @ a


class QhbmPoint:
    """Model quantities at one parameter vector, computed lazily and cached."""

    def __init__(self, model, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (model.p,):
            raise ValueError(f"{model.name} expects {model.p} parameters, got {theta.shape}")
        self.model = model
        self.theta = theta
        pe = model.ebm.num_params
        self._theta_ebm = theta[:pe]
        self._circ = _CircuitEval(model.circuit, theta[pe:])
        feats = model.ebm.features
        logw = self._theta_ebm @ feats
        self.log_z = _logsumexp(logw)
        self.probs = np.exp(logw - self.log_z)
        self.mean_features = feats @ self.probs
        self._centered = feats - self.mean_features[:, None]
        self.energies = -logw
        self.unitary = self._circ.unitary

    @property
    def n_ebm(self):
        return self.model.ebm.num_params

    def _conj(self, diag_vals):
        u = self.unitary
        return symmetrize((u * diag_vals) @ u.conj().T)

    @functools.cached_property
    def state(self):
        return self._conj(self.probs)

    @functools.cached_property
    def log_state(self):
        return self._conj(-self.energies - self.log_z)

    @functools.cached_property
    def _rotated_energy(self):
        return self._conj(self.energies)

    @functools.cached_property
    def _rotated_features(self):
        return np.array([self._conj(f) for f in self.model.ebm.features])

    @functools.cached_property
    def feature_cov(self):
        return (self._centered * self.probs) @ self._centered.T

    @functools.cached_property
    def grad_log(self):
        """(p, d, d) array of ``d log sigma / d theta_i``."""
        d = self.unitary.shape[0]
        eye = np.eye(d)
        out = [m - mu * eye for m, mu in zip(self._rotated_features, self.mean_features)]
        l0 = self._rotated_energy
        out += [1j * _comm(t, l0) for t in self._circ.generators]
        return np.array(out).reshape(-1, d, d)

    @functools.cached_property
    def hess_log(self):
        """(p, p, d, d) array of second derivatives of ``log sigma``."""
        pe, p = self.n_ebm, self.model.p
        d = self.unitary.shape[0]
        out = np.zeros((p, p, d, d), dtype=complex)
        eye = np.eye(d)
        cov = self.feature_cov
        for i in range(pe):
            for k in range(i, pe):
                out[i, k] = out[k, i] = -cov[i, k] * eye
        gens = self._circ.generators
        for i, m in enumerate(self._rotated_features):
            for j, t in enumerate(gens):
                out[i, pe + j] = out[pe + j, i] = -1j * _comm(t, m)
        l0 = self._rotated_energy
        order = self._circ.order
        nc = len(gens)
        for a in range(nc):
            for b in range(a, nc):
                lo, hi = (a, b) if order[a] <= order[b] else (b, a)
                ta, tb = gens[lo], gens[hi]
                h = tb @ ta @ l0 + l0 @ ta @ tb - ta @ l0 @ tb - tb @ l0 @ ta
                out[pe + a, pe + b] = out[pe + b, pe + a] = h
        return out

    @functools.cached_property
    def grad_state(self):
        """(p, d, d) array of ``d sigma / d theta_i``."""
        d = self.unitary.shape[0]
        sig = self.state
        out = [self._conj(self.probs * c) for c in self._centered]
        out += [-1j * _comm(t, sig) for t in self._circ.generators]
        return np.array(out).reshape(-1, d, d)

    @functools.cached_property
    def hess_state(self):
        pe, p = self.n_ebm, self.model.p
        d = self.unitary.shape[0]
        out = np.zeros((p, p, d, d), dtype=complex)
        cov = self.feature_cov
        c = self._centered
        for i in range(pe):
            for k in range(i, pe):
                out[i, k] = out[k, i] = self._conj(self.probs * (c[i] * c[k] - cov[i, k]))
        gens = self._circ.generators
        gs = self.grad_state
        for i in range(pe):
            for j, t in enumerate(gens):
                out[i, pe + j] = out[pe + j, i] = -1j * _comm(t, gs[i])
        sig = self.state
        order = self._circ.order
        nc = len(gens)
        for a in range(nc):
            for b in range(a, nc):
                lo, hi = (a, b) if order[a] <= order[b] else (b, a)
                ta, tb = gens[lo], gens[hi]
                h = -tb @ ta @ sig - sig @ ta @ tb + ta @ sig @ tb + tb @ sig @ ta
                out[pe + a, pe + b] = out[pe + b, pe + a] = h
        return out


@dataclass(frozen=True)
class QhbmModel:
    name: str
    ebm: EbmSpec
    circuit: CircuitSpec

    def __post_init__(self):
        if self.ebm.nodes != self.circuit.qubits:
            raise ValueError("EBM node count must equal the circuit qubit count")

    @property
    def qubits(self):
        return self.circuit.qubits

    @property
    def dim(self):
        return 2**self.qubits

    @property
    def p(self):
        return self.ebm.num_params + self.circuit.param_count

    @property
    def ebm_indices(self):
        return tuple(range(self.ebm.num_params))

    def evaluate(self, theta):
        return QhbmPoint(self, theta)

    def param_names(self):
        names = [f"a{i}" for i in range(self.ebm.nodes)]
        names += [f"w{i}{j}" for i, j in self.ebm.pairs]
        names += [f"t{j + 1}" for j in range(self.circuit.param_count)]
        return names


class _SubPoint:
    def __init__(self, base_point, free):
        self._base = base_point
        self._free = free

    @property
    def state(self):
        return self._base.state

    @property
    def log_state(self):
        return self._base.log_state

    @functools.cached_property
    def grad_log(self):
        return self._base.grad_log[self._free]

    @functools.cached_property
    def hess_log(self):
        return self._base.hess_log[np.ix_(self._free, self._free)]

    @functools.cached_property
    def grad_state(self):
        return self._base.grad_state[self._free]

    @functools.cached_property
    def hess_state(self):
        return self._base.hess_state[np.ix_(self._free, self._free)]


@dataclass(frozen=True)
class FrozenModel:
    """A model with all but ``free`` parameters pinned to ``anchor``."""

    base: QhbmModel
    anchor: tuple
    free: tuple
    name: str = field(default="")

    def __post_init__(self):
        if len(self.anchor) != self.base.p:
            raise ValueError("anchor length must equal the base model's parameter count")
        if not self.free or any(not 0 <= i < self.base.p for i in self.free):
            raise ValueError("free indices out of range")
        if not self.name:
            object.__setattr__(self, "name", f"{self.base.name}|{','.join(map(str, self.free))}")

    @property
    def qubits(self):
        return self.base.qubits

    @property
    def dim(self):
        return self.base.dim

    @property
    def p(self):
        return len(self.free)

    @property
    def ebm_indices(self):
        pe = self.base.ebm.num_params
        return tuple(k for k, i in enumerate(self.free) if i < pe)

    def full(self, theta):
        out = np.array(self.anchor, dtype=float)
        out[list(self.free)] = theta
        return out

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,):
            raise ValueError(f"{self.name} expects {self.p} parameters")
        return _SubPoint(self.base.evaluate(self.full(theta)), list(self.free))


def model_state(model, theta):
    return model.evaluate(theta).state


def log_model(model, theta):
    return model.evaluate(theta).log_state


def grad_log_model(model, theta):
    return model.evaluate(theta).grad_log


def hess_log_model(model, theta):
    return model.evaluate(theta).hess_log


PQC1 = [["RY", 0], ["RY", 1], ["RY", 2]]
PQC2 = [["RY", 0], ["RY", 1], ["RY", 2], ["CNOT", 0, 1],
        ["RY", 0], ["RY", 1], ["RY", 2], ["CNOT", 0, 1], ["CNOT", 1, 2],
        ["RY", 0], ["RY", 1], ["RY", 2], ["CNOT", 1, 2]]


def make_model(name, qubits, gates):
    return QhbmModel(name, EbmSpec(qubits), CircuitSpec.from_list(qubits, gates))


def builtin_model(name, qubits=3):
    """The two reference families: ``M1`` (one RY layer) and ``M2`` (three layers with CNOTs)."""
    if name == "M1":
        return make_model("M1", qubits, [["RY", k] for k in range(qubits)])
    if name == "M2":
        if qubits != 3:
            raise ValueError("M2 is defined for 3 qubits only")
        return make_model("M2", 3, PQC2)
    raise KeyError(f"unknown built-in model {name!r}")
