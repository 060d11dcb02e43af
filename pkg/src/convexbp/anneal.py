"""MAP LP relaxation by temperature annealing of convex sum-product.

Runs the sum-product engine along a geometric temperature schedule with
warm-started messages; at small enough temperature the beliefs of a
convex approximation land on the LP optimum. Regime classification looks
at which variables stay fractional at the final stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .beliefs import lp_objective, marginalization_residual
from .counting import ConvexityCertificate, CountingNumbers
from .engine import SUM, InferenceConfig, MessageState, run
from .errors import NoCertificate, StageDiverged
from .model import FactorGraph

EASY = "easy"
HARD = "hard"
INTERMEDIATE = "intermediate"


def _default_stage_config() -> InferenceConfig:
    return InferenceConfig(
        semiring=SUM,
        temperature=1.0,
        damping=0.5,
        max_iterations=20_000,
        convergence_tol=1e-3,
    )


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling schedule and the engine template for its stages.

    Intermediate stages converge to per_stage_config.convergence_tol
    scaled by max(T, 1e-2); only the final stage's beliefs define the LP
    point, so that stage gets its own tight final_tol. Near the tie
    formation temperature the message iteration contracts at a rate close
    to one, which is why the intermediate tolerance is deliberately loose.
    """

    t_start: float = 1.0
    t_end: float = 1e-4
    ratio: float = 0.5
    per_stage_config: InferenceConfig = field(default_factory=_default_stage_config)
    final_tol: float = 1e-7

    def __post_init__(self):
        if not (self.t_start > 0 and self.t_end > 0 and self.t_end < self.t_start):
            raise ValueError("need 0 < t_end < t_start")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if not self.final_tol > 0:
            raise ValueError("final_tol must be positive")

    def temperatures(self) -> list:
        """Geometric sequence t_start * ratio^k, clipped at t_end."""
        temps = []
        t = self.t_start
        while t > self.t_end:
            temps.append(t)
            t *= self.ratio
        temps.append(self.t_end)
        return temps


@dataclass(frozen=True)
class LpSolution:
    beliefs: object
    objective: float
    integrality: str
    fractional_vars: frozenset
    stage_trace: tuple  # per stage: (T, iterations, objective, marginalization residual)


def fractional_variables(beliefs, tie_tol: float) -> frozenset:
    """Variables whose belief is not concentrated on a single state.

    A coordinate of the LP solution is integral exactly when the belief
    puts all its mass on one state, so fractional means max belief below
    1 - tie_tol. On binary pairwise models the fractional vertices are
    half-integral and this coincides with having tied maxima, but
    higher-arity polytopes (parity checks) have fractional vertices like
    (2/3, 1/3) whose maximum is unique, which a tie test would miss.
    """
    out = set()
    for i, vec in enumerate(beliefs.var_beliefs):
        if float(np.max(vec)) < 1.0 - tie_tol:
            out.add(i)
    return frozenset(out)


def _integrality(n_vars: int, fractional: frozenset) -> str:
    if not fractional:
        return EASY
    if len(fractional) == n_vars:
        return HARD
    return INTERMEDIATE


def solve_lp(
    graph: FactorGraph,
    counts: CountingNumbers,
    certificate: Optional[ConvexityCertificate],
    schedule: Optional[AnnealSchedule] = None,
    tie_tol: float = 1e-2,
    initial: Optional[MessageState] = None,
) -> LpSolution:
    """Anneal convex sum-product down the schedule and read off the LP point.

    The certificate is the precondition that makes the annealed fixed
    point the global free-energy minimum; without one the claim has no
    backing and NoCertificate is raised. A stage that fails to converge
    is retried once with the damping pushed halfway to 1, then the whole
    solve raises StageDiverged.

    The classification tolerance defaults to 1e-2: at the final
    temperature, fractional coordinates sit within O(t_end) of their
    limit while integral ones are separated by factors of exp(-gap/t_end),
    so a loose tolerance splits them cleanly.
    """
    if certificate is None:
        raise NoCertificate("solve_lp requires counting numbers with a convexity certificate")
    schedule = schedule or AnnealSchedule()
    base = schedule.per_stage_config
    trace = []
    messages = initial
    beliefs = None
    temperatures = schedule.temperatures()
    t_prev = None
    for k, t in enumerate(temperatures):
        if messages is not None and t_prev is not None:
            # log messages scale like 1/T, so rescaling the warm start
            # puts it near the colder stage's fixed point
            messages = messages.copy()
            messages.log_f2v *= t_prev / t
            messages.log_v2f *= t_prev / t
        if k == len(temperatures) - 1:
            stage_tol = schedule.final_tol
        else:
            stage_tol = base.convergence_tol * max(t, 1e-2)
        cfg = replace(base, semiring=SUM, temperature=t, convergence_tol=stage_tol)
        state, beliefs = run(graph, counts, cfg, initial=messages)
        iterations = state.iterations_run
        if not state.converged:
            retry = replace(cfg, damping=(1.0 + cfg.damping) / 2.0)
            state, beliefs = run(graph, counts, retry, initial=state)
            iterations += state.iterations_run
            if not state.converged:
                raise StageDiverged(
                    f"stage at T={t:g} did not converge within {cfg.max_iterations} sweeps "
                    f"(final delta {state.final_delta:.3g})"
                )
        messages = state
        t_prev = t
        trace.append(
            (t, iterations, lp_objective(graph, beliefs), marginalization_residual(graph, beliefs))
        )
    fractional = fractional_variables(beliefs, tie_tol)
    return LpSolution(
        beliefs=beliefs,
        objective=float(trace[-1][2]),
        integrality=_integrality(graph.n_vars, fractional),
        fractional_vars=fractional,
        stage_trace=tuple(trace),
    )


def classify_regime(lp_solution: LpSolution, tie_tol: float = 1e-2) -> str:
    """Easy, hard, or intermediate by the fractional-variable pattern."""
    fractional = fractional_variables(lp_solution.beliefs, tie_tol)
    return _integrality(len(lp_solution.beliefs.var_beliefs), fractional)


def lp_bound_check(lp_solution: LpSolution, graph: FactorGraph, oracle_map_energy: float) -> bool:
    """Relaxation bound: objective <= MAP energy (+1e-6); equality within 1e-4 when easy."""
    if lp_solution.objective > oracle_map_energy + 1e-6:
        return False
    if lp_solution.integrality == EASY:
        return abs(lp_solution.objective - oracle_map_energy) <= 1e-4
    return True
