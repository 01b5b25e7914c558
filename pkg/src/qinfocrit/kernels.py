"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``QINFOCRIT_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QINFOCRIT_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

pauli6_expectations = _impl.pauli6_expectations
snapshot_traces = _impl.snapshot_traces
snapshot_sum = _impl.snapshot_sum
sample_bits = _impl.sample_bits


def backends():
    """Every importable implementation, keyed by name (used by tests and benchmarks)."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
        found["cython"] = _kernels
    except ImportError:
        pass
    return found
