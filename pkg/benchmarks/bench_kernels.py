"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--shots 10000] [--repeat 5]

Also checks that both backends return the same numbers before timing them.
"""
import argparse
import timeit

import numpy as np

from qinfocrit import kernels
from qinfocrit.linalg import random_density, random_hermitian
from qinfocrit.povm import product_states, sample_outcomes
from qinfocrit.shadow import SNAPSHOT_FACTORS


def cases(q, shots, rng):
    rho = random_density(q, rng)
    codes = sample_outcomes(rho, shots, rng).codes
    ops = np.array([random_hermitian(2**q, rng) for _ in range(15)])
    d = 2**q
    cdf = np.cumsum(rng.dirichlet(np.ones(d), size=3**q), axis=1)
    setting = rng.integers(0, 3**q, size=shots)
    u = rng.random(shots)
    return {
        "pauli6_expectations": (ops, product_states(q)),
        "snapshot_traces": (codes, SNAPSHOT_FACTORS, ops),
        "snapshot_sum": (codes, SNAPSHOT_FACTORS),
        "sample_bits": (cdf, setting, u),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=10000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--qubits", type=int, nargs="+", default=[2, 3, 4])
    args = ap.parse_args(argv)
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled kernels not built; only the numpy fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'q':>3}" + "".join(f"{name + ' ms':>14}" for name in impls) + f"{'speedup':>10}")
    for q in args.qubits:
        for name, call_args in cases(q, args.shots, rng).items():
            results = {b: getattr(m, name)(*call_args) for b, m in impls.items()}
            ref = results["python"]
            for b, r in results.items():
                if not np.allclose(r, ref, atol=1e-10):
                    raise SystemExit(f"{name}: backend {b} disagrees with the numpy fallback")
            times = {}
            for b, m in impls.items():
                fn = getattr(m, name)
                times[b] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat)) * 1e3
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{name:<22}{q:>3}" + "".join(f"{t:>14.3f}" for t in times.values()) + f"{speed:>10.2f}")


if __name__ == "__main__":
    main()
