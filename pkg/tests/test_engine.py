import numpy as np
import pytest

from convexbp import (
    CountingNumbers,
    InferenceConfig,
    bethe,
    build_graph,
    default_convex,
    gamma,
    run,
    run_ordinary_bp,
    trbp_from_edge_probs,
    trivial_convex,
)
from convexbp.beliefs import (
    admissibility_residual,
    marginalization_residual,
    max_marginalization_residual,
)
from convexbp.errors import CiEqualsOne, FactorCountNotOne, NonPositiveTemperature
from convexbp.oracle import brute_force_marginals

from conftest import grid3x3_pairwise, random_loopy_model, random_tree, two_node_graph

TIGHT = dict(max_iterations=2000, convergence_tol=1e-11)


class TestGamma:
    def test_bethe_gives_ordinary_bp(self, rng):
        g = random_loopy_model(rng)
        assert np.allclose(gamma(g, bethe(g)), 1.0)

    def test_default_convex_grid_corner(self):
        # corner has d_i = 2 and c_i = -1, where the exponent is exactly 1
        g = grid3x3_pairwise()
        counts = default_convex(g)
        corner = g.var_index["x00"]
        assert gamma(g, counts)[corner] == pytest.approx(1.0)

    def test_trivial_exponent_matches_stationarity(self, rng):
        # one variable under three unary factors: the stationary belief is
        # (psi_a psi_b psi_c)^(1/3), reached only with gamma = 3/5
        e = rng.normal(size=(3, 2))
        g = build_graph([("x", 2)], [(f"u{k}", ["x"], e[k]) for k in range(3)])
        counts = trivial_convex(g)
        assert gamma(g, counts)[0] == pytest.approx(0.6)
        state, beliefs = run(g, counts, InferenceConfig(semiring="sum", **TIGHT))
        expected = np.exp(-e.sum(axis=0) / 3.0)
        expected /= expected.sum()
        assert state.converged
        assert np.allclose(beliefs.var_beliefs[0], expected, atol=1e-10)

    def test_ci_at_one_rejected(self):
        g = two_node_graph()
        counts = CountingNumbers(np.ones(1), np.array([1.0, 0.0]))
        with pytest.raises(CiEqualsOne):
            gamma(g, counts)


class TestTwoNodeCounterexample:
    @pytest.mark.parametrize("temperature", [1.0, 0.1, 0.01])
    def test_sum_product_fixed_point(self, temperature):
        g = two_node_graph()
        state, beliefs = run(
            g, bethe(g), InferenceConfig(semiring="sum", temperature=temperature, **TIGHT)
        )
        assert state.converged
        assert np.allclose(beliefs.var_beliefs[0], [2 / 3, 1 / 3], atol=1e-8)
        assert np.allclose(beliefs.var_beliefs[1], [2 / 3, 1 / 3], atol=1e-8)
        expected = np.array([[1, 1], [1, 0]]) / 3.0
        assert np.allclose(beliefs.factor_beliefs[0], expected, atol=1e-8)

    def test_max_product_fixed_point(self):
        g = two_node_graph()
        state, beliefs = run(g, bethe(g), InferenceConfig(semiring="max", **TIGHT))
        assert state.converged
        assert np.allclose(beliefs.var_beliefs[0], [0.5, 0.5], atol=1e-8)
        assert np.allclose(beliefs.var_beliefs[1], [0.5, 0.5], atol=1e-8)
        expected = np.array([[1, 1], [1, 0]]) / 3.0
        assert np.allclose(beliefs.factor_beliefs[0], expected, atol=1e-8)


class TestRun:
    def test_tree_sum_product_matches_exact_marginals(self, rng):
        for _ in range(10):
            g = random_tree(rng)
            state, beliefs = run(g, bethe(g), InferenceConfig(semiring="sum", **TIGHT))
            exact, _ = brute_force_marginals(g, 1.0)
            assert state.converged
            for got, want in zip(beliefs.var_beliefs, exact.var_beliefs):
                assert np.allclose(got, want, atol=1e-8)

    def test_uniform_potentials_converge_immediately(self):
        g = build_graph(
            [("a", 2), ("b", 2)],
            [("f", ["a", "b"], np.zeros((2, 2))), ("u", ["a"], np.zeros(2))],
        )
        state, beliefs = run_ordinary_bp(g, InferenceConfig(semiring="sum"))
        assert state.converged and state.iterations_run == 1
        assert np.allclose(beliefs.var_beliefs[0], 0.5)

    def test_factor_count_not_one_rejected(self):
        g = grid3x3_pairwise()
        counts = trbp_from_edge_probs(g, 0.5, 1.0)  # c_alpha = 0.5, unscaled
        with pytest.raises(FactorCountNotOne):
            run(g, counts, InferenceConfig(semiring="max"))

    def test_bad_temperature_rejected(self):
        with pytest.raises(NonPositiveTemperature):
            InferenceConfig(semiring="sum", temperature=0.0)

    def test_message_normalization(self, rng):
        g = random_loopy_model(rng)
        state, _ = run(g, default_convex(g), InferenceConfig(semiring="max", **TIGHT))
        cg = state.layout
        for e in range(cg.n_edges):
            for arr in (state.log_f2v, state.log_v2f):
                vec = arr[cg.msg_off[e] : cg.msg_off[e + 1]]
                assert np.max(vec) == 0.0
                assert np.all(vec <= 0.0)
                assert not np.any(np.isnan(vec))

    def test_deterministic_across_runs(self, rng):
        g = random_loopy_model(rng)
        cfg = InferenceConfig(semiring="sum", temperature=0.7, seed=42, **TIGHT)
        s1, _ = run(g, default_convex(g), cfg)
        s2, _ = run(g, default_convex(g), cfg)
        assert np.array_equal(s1.log_f2v, s2.log_f2v)
        assert np.array_equal(s1.log_v2f, s2.log_v2f)
        assert s1.iterations_run == s2.iterations_run

    def test_initial_state_not_mutated(self, rng):
        g = random_loopy_model(rng)
        counts = default_convex(g)
        cfg = InferenceConfig(semiring="sum", **TIGHT)
        s1, _ = run(g, counts, cfg)
        f2v = s1.log_f2v.copy()
        run(g, counts, InferenceConfig(semiring="sum", temperature=0.5, **TIGHT), initial=s1)
        assert np.array_equal(s1.log_f2v, f2v)

    def test_max_tree_argmax_matches_brute_force_max_marginals(self, rng):
        for _ in range(8):
            g = random_tree(rng)
            state, beliefs = run(g, bethe(g), InferenceConfig(semiring="max", **TIGHT))
            assert state.converged
            # exact max-marginals by enumeration over all assignments
            from conftest import all_assignments, naive_total_energy

            for i in range(g.n_vars):
                card = int(g.var_cards[i])
                best = np.full(card, np.inf)
                for x in all_assignments(g):
                    e = naive_total_energy(g, x)
                    if e < best[x[i]]:
                        best[x[i]] = e
                want = set(np.flatnonzero(best <= best.min() + 1e-9))
                vec = beliefs.var_beliefs[i]
                got = set(np.flatnonzero(vec >= vec.max() * (1 - 1e-6)))
                assert got == want

    def test_damped_and_undamped_agree(self, rng):
        g = random_tree(rng, n_vars=6)
        counts = default_convex(g)
        _, b1 = run(g, counts, InferenceConfig(semiring="sum", damping=0.5, **TIGHT))
        _, b2 = run(g, counts, InferenceConfig(semiring="sum", damping=0.0, **TIGHT))
        for x, y in zip(b1.var_beliefs, b2.var_beliefs):
            assert np.allclose(x, y, atol=1e-6)

    def test_synchronous_schedule_reaches_same_fixed_point(self, rng):
        g = random_tree(rng, n_vars=6)
        counts = default_convex(g)
        _, b1 = run(g, counts, InferenceConfig(semiring="sum", schedule="synchronous", **TIGHT))
        _, b2 = run(g, counts, InferenceConfig(semiring="sum", **TIGHT))
        for x, y in zip(b1.var_beliefs, b2.var_beliefs):
            assert np.allclose(x, y, atol=1e-6)

    @pytest.mark.parametrize("preset", ["bethe", "trbp", "default", "trivial"])
    def test_fixed_points_pass_residual_checks(self, rng, preset):
        makers = {
            "bethe": bethe,
            "trbp": lambda g: trbp_from_edge_probs(g, 0.5, 2.0),
            "default": default_convex,
            "trivial": trivial_convex,
        }
        for _ in range(4):
            g = random_loopy_model(rng, extra_edges=2)
            counts = makers[preset](g)
            for semiring, temperature in (("sum", 1.0), ("max", 1.0)):
                cfg = InferenceConfig(
                    semiring=semiring, temperature=temperature,
                    max_iterations=20000, convergence_tol=1e-10,
                )
                state, beliefs = run(g, counts, cfg)
                assert state.converged
                adm = admissibility_residual(g, beliefs, counts, 1.0)
                assert adm < 1e-6
                if semiring == "sum":
                    assert marginalization_residual(g, beliefs) < 1e-6
                else:
                    assert max_marginalization_residual(g, beliefs) < 1e-6

    def test_message_accessors(self):
        g = two_node_graph()
        state, _ = run(g, bethe(g), InferenceConfig(semiring="sum", **TIGHT))
        m = state.factor_to_var(g, "f12", "x1")
        assert m[0] == 0.0
        assert m[1] == pytest.approx(np.log(0.5), abs=1e-9)
        n = state.var_to_factor(g, "x1", "f12")
        assert np.allclose(n, [0.0, 0.0], atol=1e-12)

    def test_ordinary_bp_is_bethe_alias(self, rng):
        g = random_tree(rng, n_vars=5)
        cfg = InferenceConfig(semiring="sum", seed=3, **TIGHT)
        _, b1 = run_ordinary_bp(g, cfg)
        _, b2 = run(g, bethe(g), cfg)
        for x, y in zip(b1.var_beliefs, b2.var_beliefs):
            assert np.array_equal(x, y)
