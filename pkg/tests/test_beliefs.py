import numpy as np
import pytest

from convexbp import (
    InferenceConfig,
    admissibility_residual,
    beliefs_from_messages,
    bethe,
    build_graph,
    default_convex,
    free_energy,
    lp_objective,
    marginalization_residual,
    max_marginalization_residual,
    run,
    sharpen,
    temperature_power,
)
from convexbp.beliefs import _freeze_beliefs, delta_beliefs
from convexbp.errors import AllZeroBelief, SupportMismatch
from convexbp.oracle import brute_force_map, brute_force_marginals

from conftest import INF, random_tree, two_node_graph

TIGHT = dict(max_iterations=2000, convergence_tol=1e-11)


def two_node_fixed_points():
    g = two_node_graph()
    counts = bethe(g)
    _, b_sum = run(g, counts, InferenceConfig(semiring="sum", **TIGHT))
    _, b_max = run(g, counts, InferenceConfig(semiring="max", **TIGHT))
    return g, counts, b_sum, b_max


class TestBeliefsFromMessages:
    def test_two_node_values(self):
        g, _, b_sum, b_max = two_node_fixed_points()
        assert np.allclose(b_sum.factor_beliefs[0], np.array([[1, 1], [1, 0]]) / 3, atol=1e-9)
        assert np.allclose(b_sum.var_beliefs[0], [2 / 3, 1 / 3], atol=1e-9)
        assert np.allclose(b_max.var_beliefs[0], [0.5, 0.5], atol=1e-9)

    def test_uniform_messages_uniform_potentials(self):
        g = build_graph([("a", 2), ("b", 2)], [("f", ["a", "b"], np.zeros((2, 2)))])
        from convexbp import uniform_messages

        beliefs = beliefs_from_messages(g, uniform_messages(g), 1.0, "sum")
        assert np.allclose(beliefs.factor_beliefs[0], 0.25)
        assert np.allclose(beliefs.var_beliefs[0], 0.5)

    def test_recomputation_is_identical(self, rng):
        g = random_tree(rng, n_vars=4)
        state, _ = run(g, bethe(g), InferenceConfig(semiring="sum", **TIGHT))
        b1 = beliefs_from_messages(g, state, 1.0, "sum")
        b2 = beliefs_from_messages(g, state, 1.0, "sum")
        for x, y in zip(b1.factor_beliefs, b2.factor_beliefs):
            assert np.array_equal(x, y)


class TestAdmissibility:
    def test_engine_fixed_point(self):
        g, counts, b_sum, _ = two_node_fixed_points()
        assert admissibility_residual(g, b_sum, counts, 1.0) < 1e-6

    def test_exact_marginals_on_tree(self, rng):
        g = random_tree(rng, n_vars=6)
        exact, _ = brute_force_marginals(g, 1.0)
        assert admissibility_residual(g, exact, bethe(g), 1.0) < 1e-8

    def test_perturbation_detected(self, rng):
        g = random_tree(rng, n_vars=5)
        exact, _ = brute_force_marginals(g, 1.0)
        tables, vecs = exact.copy_mutable()
        tables[1].flat[0] += 0.1
        tables[1] /= tables[1].sum()
        poked = _freeze_beliefs(tables, vecs)
        assert admissibility_residual(g, poked, bethe(g), 1.0) > 0.01

    def test_support_mismatch(self):
        g = two_node_graph()
        uniform = _freeze_beliefs([np.full((2, 2), 0.25)], [np.full(2, 0.5), np.full(2, 0.5)])
        with pytest.raises(SupportMismatch):
            admissibility_residual(g, uniform, bethe(g), 1.0)


class TestMarginalization:
    def test_two_node_sum_fixed_point(self):
        g, _, b_sum, _ = two_node_fixed_points()
        assert marginalization_residual(g, b_sum) < 1e-9

    def test_sharpened_max_beliefs_fail_sum_marginalization(self):
        # q_12 uniform over three cells has marginals (2/3, 1/3) against
        # uniform node beliefs, so the residual is exactly 1/6
        g, _, _, b_max = two_node_fixed_points()
        q = sharpen(b_max)
        assert marginalization_residual(g, q) == pytest.approx(1 / 6, abs=1e-9)

    def test_outer_product_consistency(self, rng):
        g = random_tree(rng, n_vars=4, unary=False)
        exact, _ = brute_force_marginals(g, 1.0)
        tables = []
        for a, scope in enumerate(g.scopes):
            vi, vj = (exact.var_beliefs[i] for i in scope)
            tables.append(np.outer(vi, vj))
        outer = _freeze_beliefs(tables, [v.copy() for v in exact.var_beliefs])
        assert marginalization_residual(g, outer) < 1e-12


class TestMaxMarginalization:
    def test_two_node_max_fixed_point(self):
        g, _, _, b_max = two_node_fixed_points()
        assert max_marginalization_residual(g, b_max) < 1e-9

    def test_two_node_sum_fixed_point_fails(self):
        g, _, b_sum, _ = two_node_fixed_points()
        assert max_marginalization_residual(g, b_sum) == pytest.approx(0.5, abs=1e-8)

    def test_delta_beliefs_pass(self, rng):
        g = random_tree(rng, n_vars=5)
        beliefs = delta_beliefs(g, np.zeros(g.n_vars, dtype=int))
        assert max_marginalization_residual(g, beliefs) == 0.0


class TestFreeEnergy:
    def test_zero_temperature_limit_is_lp_objective(self, rng):
        g = random_tree(rng, n_vars=5)
        exact, _ = brute_force_marginals(g, 1.0)
        counts = default_convex(g)
        f_cold = free_energy(g, exact, counts, 1e-9)
        assert f_cold == pytest.approx(lp_objective(g, exact), abs=1e-6)

    def test_delta_beliefs_give_total_energy(self, rng):
        from convexbp import total_energy

        g = random_tree(rng, n_vars=5)
        x = np.zeros(g.n_vars, dtype=int)
        beliefs = delta_beliefs(g, x)
        for t in (1.0, 0.3, 17.0):
            assert free_energy(g, beliefs, bethe(g), t) == pytest.approx(total_energy(g, x))

    def test_tree_bethe_recovers_log_partition(self, rng):
        for _ in range(5):
            g = random_tree(rng, n_vars=6)
            exact, log_z = brute_force_marginals(g, 1.0)
            f = free_energy(g, exact, bethe(g), 1.0)
            assert f == pytest.approx(-log_z, abs=1e-8)

    def test_infinite_energy_with_mass_gives_infinity(self):
        g = two_node_graph()
        uniform = _freeze_beliefs([np.full((2, 2), 0.25)], [np.full(2, 0.5)] * 2)
        assert free_energy(g, uniform, bethe(g), 1.0) == INF


class TestLpObjective:
    def test_delta_equals_total_energy(self, rng):
        from convexbp import total_energy

        g = random_tree(rng, n_vars=6)
        x = np.array([int(c) - 1 for c in g.var_cards])
        assert lp_objective(g, delta_beliefs(g, x)) == pytest.approx(total_energy(g, x))

    def test_zero_belief_kills_infinite_energy(self):
        g, _, b_sum, _ = two_node_fixed_points()
        assert lp_objective(g, b_sum) == pytest.approx(0.0, abs=1e-9)

    def test_fractional_optimum_lower_bounds_map(self, rng):
        from convexbp import solve_lp

        for _ in range(3):
            g = random_tree(rng, n_vars=5)
            counts = default_convex(g)
            lp = solve_lp(g, counts, counts.certificate)
            _, e_map = brute_force_map(g)
            assert lp.objective <= e_map + 1e-6


class TestSharpen:
    def test_paper_examples(self):
        b = _freeze_beliefs([np.array([[0.6, 0.4]])], [np.array([0.6, 0.4])])
        s = sharpen(b)
        assert np.array_equal(s.var_beliefs[0], [1.0, 0.0])
        b = _freeze_beliefs([np.array([0.4, 0.4, 0.2])], [np.array([0.4, 0.4, 0.2])])
        s = sharpen(b)
        assert np.array_equal(s.var_beliefs[0], [0.5, 0.5, 0.0])

    def test_idempotent(self, rng):
        g = random_tree(rng, n_vars=5)
        exact, _ = brute_force_marginals(g, 1.0)
        once = sharpen(exact)
        twice = sharpen(once)
        for x, y in zip(once.factor_beliefs, twice.factor_beliefs):
            assert np.array_equal(x, y)

    def test_delta_unchanged(self, rng):
        g = random_tree(rng, n_vars=4)
        d = delta_beliefs(g, np.zeros(g.n_vars, dtype=int))
        s = sharpen(d)
        for x, y in zip(d.var_beliefs, s.var_beliefs):
            assert np.array_equal(x, y)


class TestTemperaturePower:
    def test_identity_at_one(self, rng):
        g = random_tree(rng, n_vars=4)
        exact, _ = brute_force_marginals(g, 1.0)
        p = temperature_power(exact, 1.0)
        for x, y in zip(exact.var_beliefs, p.var_beliefs):
            assert np.allclose(x, y, atol=1e-12)

    def test_direct_arithmetic(self):
        b = _freeze_beliefs([np.array([0.8, 0.2])], [np.array([0.8, 0.2])])
        p = temperature_power(b, 2.0)
        assert np.allclose(p.var_beliefs[0], [16 / 17, 1 / 17])

    def test_composition(self, rng):
        g = random_tree(rng, n_vars=4)
        exact, _ = brute_force_marginals(g, 1.0)
        a = temperature_power(temperature_power(exact, 1.7), 0.4)
        b = temperature_power(exact, 1.7 * 0.4)
        for x, y in zip(a.var_beliefs, b.var_beliefs):
            assert np.allclose(x, y, atol=1e-9)

    def test_sum_beliefs_powered_approach_max_beliefs(self):
        # the counterexample's sum beliefs are T independent, so b^T with
        # T -> 0 flattens (2/3, 1/3) toward the uniform max-product belief
        g, _, b_sum, b_max = two_node_fixed_points()
        for t, tol in ((0.1, 0.02), (0.01, 0.002)):
            powered = temperature_power(b_sum, t)
            assert np.allclose(powered.var_beliefs[0], b_max.var_beliefs[0], atol=tol)


def test_all_zero_belief_detected():
    from convexbp import uniform_messages

    inf = float("inf")
    g = build_graph([("a", 2)], [("u", ["a"], [inf, inf])])
    with pytest.raises(AllZeroBelief):
        beliefs_from_messages(g, uniform_messages(g), 1.0, "sum")
