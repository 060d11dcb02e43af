"""Cross-checks between the compiled kernel and its pure-Python twin."""

import numpy as np
import pytest

import convexbp
from convexbp import InferenceConfig, build_graph, default_convex, run, trivial_convex
from convexbp import _kernel_py
from convexbp.errors import NumericalOverflow

from conftest import random_loopy_model

try:
    from convexbp import _kernel_cy
except ImportError:
    _kernel_cy = None

needs_ext = pytest.mark.skipif(_kernel_cy is None, reason="compiled kernel not built")


def run_with(graph, counts, config, kernel):
    graph._cache["force_kernel"] = kernel
    try:
        return run(graph, counts, config)
    finally:
        graph._cache.pop("force_kernel", None)


@needs_ext
@pytest.mark.parametrize("semiring", ["sum", "max"])
@pytest.mark.parametrize("schedule", ["asynchronous", "synchronous"])
def test_kernels_bit_identical(rng, semiring, schedule):
    for trial in range(4):
        g = random_loopy_model(rng)
        counts = default_convex(g)
        cfg = InferenceConfig(
            semiring=semiring,
            temperature=0.6,
            schedule=schedule,
            seed=trial,
            max_iterations=250,
            convergence_tol=1e-9,
        )
        s_py, _ = run_with(g, counts, cfg, _kernel_py)
        s_cy, _ = run_with(g, counts, cfg, _kernel_cy)
        assert np.array_equal(s_py.log_f2v, s_cy.log_f2v)
        assert np.array_equal(s_py.log_v2f, s_cy.log_v2f)
        assert s_py.iterations_run == s_cy.iterations_run
        assert s_py.final_delta == s_cy.final_delta
        assert s_py.converged == s_cy.converged


@needs_ext
def test_kernels_bit_identical_with_zero_potentials(rng):
    inf = float("inf")
    g = build_graph(
        [("a", 2), ("b", 2), ("c", 2)],
        [
            ("xor_ab", ["a", "b"], [[0.0, inf], [inf, 0.0]]),
            ("xor_bc", ["b", "c"], [[0.0, inf], [inf, 0.0]]),
            ("ua", ["a"], [0.0, 0.7]),
            ("ub", ["b"], [0.2, 0.0]),
            ("uc", ["c"], [0.0, 0.1]),
        ],
    )
    counts = trivial_convex(g)
    for semiring in ("sum", "max"):
        cfg = InferenceConfig(semiring=semiring, max_iterations=400, convergence_tol=1e-10)
        s_py, _ = run_with(g, counts, cfg, _kernel_py)
        s_cy, _ = run_with(g, counts, cfg, _kernel_cy)
        assert np.array_equal(s_py.log_f2v, s_cy.log_f2v)
        assert np.array_equal(s_py.log_v2f, s_cy.log_v2f)


def _dead_state_model():
    # state 1 of "a" is killed by its unary factor; with gamma < 1 the
    # reweighting raises a zero to a negative power
    inf = float("inf")
    return build_graph(
        [("a", 2), ("b", 2)],
        [
            ("u", ["a"], [0.0, inf]),
            ("f", ["a", "b"], np.zeros((2, 2))),
        ],
    )


@pytest.mark.parametrize("kernel", [_kernel_py, _kernel_cy])
def test_overflow_detected(kernel):
    if kernel is None:
        pytest.skip("compiled kernel not built")
    g = _dead_state_model()
    counts = trivial_convex(g)  # gamma("a") = 2/3, so a zero gets a negative power
    with pytest.raises(NumericalOverflow):
        run_with(g, counts, InferenceConfig(semiring="max"), kernel)


def test_backend_reported():
    assert convexbp.kernel_backend() in ("cython", "python")
    if _kernel_cy is not None:
        assert convexbp.kernel_backend() == "cython"
