"""Throughput comparison of the compiled and pure-Python message kernels.

Usage: python benchmarks/bench_kernel.py [--sweeps N]

Runs a fixed number of sweeps of each kernel on three workloads (a grid
spin glass, a larger grid, and an LDPC decoding graph) and reports
sweeps/second plus the speedup. Both kernels produce bit-identical
message streams, which the script also verifies.
"""

import argparse
import sys
import time

import numpy as np

sys.path.insert(0, "src")

from convexbp import InferenceConfig, default_convex, run, trivial_convex  # noqa: E402
from convexbp import _kernel_py  # noqa: E402
from convexbp.harness import SpinGlassSpec, generate_spin_glass  # noqa: E402
from convexbp.harness.ldpc import ldpc_to_graph, random_regular_code  # noqa: E402

try:
    from convexbp import _kernel_cy
except ImportError:
    _kernel_cy = None


def workloads():
    yield "3x3 spin glass (sum)", generate_spin_glass(SpinGlassSpec(seed=0)), default_convex, "sum"
    yield "8x8 spin glass (sum)", generate_spin_glass(
        SpinGlassSpec(rows=8, cols=8, seed=0)
    ), default_convex, "sum"
    code = random_regular_code(24, 3, 6, seed=0)
    rng = np.random.default_rng(0)
    received = (rng.random(code.n) < 0.05).astype(np.uint8)
    yield "LDPC n=24 decode (max)", ldpc_to_graph(code, received, 0.05), trivial_convex, "max"


def time_kernel(graph, counts, semiring, kernel, sweeps):
    cfg = InferenceConfig(
        semiring=semiring,
        temperature=0.5,
        max_iterations=sweeps,
        convergence_tol=1e-300,  # run the full budget
        seed=7,
    )
    graph._cache["force_kernel"] = kernel
    try:
        t0 = time.perf_counter()
        state, _ = run(graph, counts, cfg)
        elapsed = time.perf_counter() - t0
    finally:
        graph._cache.pop("force_kernel", None)
    return state, elapsed


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sweeps", type=int, default=2000)
    args = parser.parse_args()

    if _kernel_cy is None:
        print("compiled kernel not built; run `python setup.py build_ext --inplace` first")

    for name, graph, preset, semiring in workloads():
        counts = preset(graph)
        state_py, t_py = time_kernel(graph, counts, semiring, _kernel_py, args.sweeps)
        line = f"{name:24s} python: {args.sweeps / t_py:9.0f} sweeps/s"
        if _kernel_cy is not None:
            state_cy, t_cy = time_kernel(graph, counts, semiring, _kernel_cy, args.sweeps)
            identical = np.array_equal(state_py.log_f2v, state_cy.log_f2v) and np.array_equal(
                state_py.log_v2f, state_cy.log_v2f
            )
            line += (
                f"   cython: {args.sweeps / t_cy:9.0f} sweeps/s"
                f"   speedup: {t_py / t_cy:6.1f}x   bit-identical: {identical}"
            )
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
