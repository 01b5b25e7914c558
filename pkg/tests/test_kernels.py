import importlib
import subprocess
import sys

import numpy as np
import pytest

from qinfocrit import kernels
from qinfocrit.linalg import random_density, random_hermitian
from qinfocrit.povm import product_states, sample_outcomes
from qinfocrit.shadow import SNAPSHOT_FACTORS

BACKENDS = kernels.backends()


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_backends_agree(q, rng):
    codes = sample_outcomes(random_density(q, rng), 3000, rng).codes
    ops = np.array([random_hermitian(2**q, rng) for _ in range(4)])
    cdf = np.cumsum(rng.dirichlet(np.ones(2**q), size=5), axis=1)
    setting = rng.integers(0, 5, size=400)
    u = rng.random(400)
    ref = BACKENDS["python"]
    for name, impl in BACKENDS.items():
        assert np.allclose(impl.pauli6_expectations(ops, product_states(q)),
                           ref.pauli6_expectations(ops, product_states(q)), atol=1e-12), name
        assert np.allclose(impl.snapshot_traces(codes, SNAPSHOT_FACTORS, ops),
                           ref.snapshot_traces(codes, SNAPSHOT_FACTORS, ops), atol=1e-10), name
        assert np.allclose(impl.snapshot_sum(codes, SNAPSHOT_FACTORS),
                           ref.snapshot_sum(codes, SNAPSHOT_FACTORS), atol=1e-10), name
        assert np.array_equal(impl.sample_bits(cdf, setting, u), ref.sample_bits(cdf, setting, u)), name


def test_sample_bits_edges():
    cdf = np.array([[0.25, 0.5, 0.75, 1.0]])
    u = np.array([0.0, 0.2499, 0.25, 0.9999, 1.0])
    for impl in BACKENDS.values():
        assert impl.sample_bits(cdf, np.zeros(5, dtype=np.int64), u).tolist() == [0, 0, 1, 3, 3]


def test_backend_flag_is_consistent():
    assert kernels.BACKEND in BACKENDS
    assert kernels.BACKEND == ("cython" if "cython" in BACKENDS else "python")


def test_pure_python_override():
    code = "import qinfocrit.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"QINFOCRIT_PURE_PYTHON": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "python"
