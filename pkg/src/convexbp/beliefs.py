"""Beliefs, fixed-point residuals, free energy, and belief transforms.

A BeliefSet doubles as a point of the MAP linear program: the factor
tables are the LP's joint indicator variables and the variable vectors
the singleton indicators, feasible exactly when the marginalization
residual vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import MessageState, _compiled, log_potentials
from .errors import AllZeroBelief, NonPositiveTemperature, SupportMismatch
from .model import FactorGraph

_ADMISSIBILITY_PROBE_CAP = 4096


@dataclass(frozen=True)
class BeliefSet:
    """Normalized factor beliefs and variable beliefs."""

    factor_beliefs: tuple
    var_beliefs: tuple

    def copy_mutable(self):
        return [t.copy() for t in self.factor_beliefs], [v.copy() for v in self.var_beliefs]


def _freeze_beliefs(factor_beliefs, var_beliefs) -> BeliefSet:
    fb = []
    for t in factor_beliefs:
        t = np.asarray(t, dtype=np.float64)
        t.setflags(write=False)
        fb.append(t)
    vb = []
    for v in var_beliefs:
        v = np.asarray(v, dtype=np.float64)
        v.setflags(write=False)
        vb.append(v)
    return BeliefSet(tuple(fb), tuple(vb))


def _normalize_log(logt: np.ndarray, what: str) -> np.ndarray:
    mx = np.max(logt)
    if np.isneginf(mx):
        raise AllZeroBelief(f"{what} normalizes to nothing")
    t = np.exp(logt - mx)
    return t / np.sum(t)


def beliefs_from_messages(
    graph: FactorGraph, messages: MessageState, temperature: float, semiring: str
) -> BeliefSet:
    """Beliefs b_i prop prod_a m_{ai}, b_a prop psi^(1/T) prod_i m_{ia}."""
    cg = _compiled(graph)
    logpsi = log_potentials(graph, semiring, temperature)

    var_beliefs = []
    for i in range(graph.n_vars):
        acc = np.zeros(int(graph.var_cards[i]))
        for t in range(int(cg.var_edge_off[i]), int(cg.var_edge_off[i + 1])):
            e = int(cg.var_edge_list[t])
            acc = acc + messages.log_f2v[cg.msg_off[e] : cg.msg_off[e + 1]]
        var_beliefs.append(_normalize_log(acc, f"belief of variable {graph.var_names[i]!r}"))

    factor_beliefs = []
    for a, scope in enumerate(graph.scopes):
        shape = tuple(int(graph.var_cards[i]) for i in scope)
        logt = logpsi[cg.table_off[a] : cg.table_off[a + 1]].reshape(shape).copy()
        for p in range(len(scope)):
            e = int(cg.scope_off[a]) + p
            vec = messages.log_v2f[cg.msg_off[e] : cg.msg_off[e + 1]]
            expand = [1] * len(scope)
            expand[p] = -1
            logt = logt + vec.reshape(expand)
        factor_beliefs.append(
            _normalize_log(logt, f"belief of factor {graph.factor_names[a]!r}")
        )
    return _freeze_beliefs(factor_beliefs, var_beliefs)


def marginalization_residual(graph: FactorGraph, beliefs: BeliefSet) -> float:
    """Worst gap between a factor belief's sum-marginal and the variable belief."""
    worst = 0.0
    for a, scope in enumerate(graph.scopes):
        table = beliefs.factor_beliefs[a]
        for p, i in enumerate(scope):
            axes = tuple(q for q in range(len(scope)) if q != p)
            marg = np.sum(table, axis=axes) if axes else table
            worst = max(worst, float(np.max(np.abs(marg - beliefs.var_beliefs[i]))))
    return worst


def max_marginalization_residual(graph: FactorGraph, beliefs: BeliefSet) -> float:
    """Worst gap between max-marginals and variable beliefs, each renormalized to max 1."""
    worst = 0.0
    for a, scope in enumerate(graph.scopes):
        table = beliefs.factor_beliefs[a]
        for p, i in enumerate(scope):
            axes = tuple(q for q in range(len(scope)) if q != p)
            marg = np.max(table, axis=axes) if axes else table.copy()
            mm = np.max(marg)
            bi = beliefs.var_beliefs[i]
            bm = np.max(bi)
            if mm <= 0 or bm <= 0:
                raise AllZeroBelief("cannot renormalize an all-zero belief")
            worst = max(worst, float(np.max(np.abs(marg / mm - bi / bm))))
    return worst


def _probe_assignments(graph: FactorGraph, seed: int) -> np.ndarray:
    joint = graph.joint_states()
    if joint <= _ADMISSIBILITY_PROBE_CAP:
        states = np.zeros((joint, graph.n_vars), dtype=np.int64)
        rem = np.arange(joint)
        for i in range(graph.n_vars - 1, -1, -1):
            card = int(graph.var_cards[i])
            states[:, i] = rem % card
            rem //= card
        return states
    rng = np.random.default_rng(seed)
    return rng.integers(0, np.asarray(graph.var_cards), size=(_ADMISSIBILITY_PROBE_CAP, graph.n_vars))


def admissibility_residual(
    graph: FactorGraph,
    beliefs: BeliefSet,
    counts,
    temperature: float,
    seed: int = 0,
) -> float:
    """How far the beliefs are from reproducing the model, up to a constant.

    Checks that -E(x)/T - sum_a c_a log b_a(x_a) - sum_i c_i log b_i(x_i)
    is constant over a probe set of assignments (all of them when the
    joint space is small, a seeded sample otherwise). Assignments where
    the model and the beliefs agree on zero support are skipped; a
    one-sided zero raises SupportMismatch.
    """
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    states = _probe_assignments(graph, seed)
    n = states.shape[0]
    energy = np.zeros(n)
    log_b = np.zeros(n)
    dead_model = np.zeros(n, dtype=bool)
    dead_belief = np.zeros(n, dtype=bool)
    for a, scope in enumerate(graph.scopes):
        idx = np.zeros(n, dtype=np.int64)
        for p, i in enumerate(scope):
            idx = idx * int(graph.var_cards[i]) + states[:, i]
        ea = graph.tables[a].ravel()[idx]
        hit_inf = np.isposinf(ea)
        dead_model |= hit_inf
        energy += np.where(hit_inf, 0.0, ea)
        ba = beliefs.factor_beliefs[a].ravel()[idx]
        zero = ba <= 0.0
        dead_belief |= zero
        log_b += counts.c_alpha[a] * np.log(np.where(zero, 1.0, ba))
    for i in range(graph.n_vars):
        bi = beliefs.var_beliefs[i][states[:, i]]
        zero = bi <= 0.0
        dead_belief |= zero
        if counts.c_i[i] != 0.0:
            log_b += counts.c_i[i] * np.log(np.where(zero, 1.0, bi))
    if np.any(dead_model != dead_belief):
        bad = int(np.flatnonzero(dead_model != dead_belief)[0])
        raise SupportMismatch(
            "model and beliefs disagree on the support of assignment "
            f"{tuple(int(s) for s in states[bad])}"
        )
    live = ~dead_model
    if np.count_nonzero(live) <= 1:
        return 0.0
    g = -energy[live] / temperature - log_b[live]
    return float(np.max(g) - np.min(g))


def free_energy(graph: FactorGraph, beliefs: BeliefSet, counts, temperature: float) -> float:
    """F = U - T * H where H is the counting-weighted entropy combination.

    Uses 0 log 0 = 0 and b * E = 0 when b = 0 even for E = +inf; returns
    +inf when a belief puts mass on a zero-potential cell.
    """
    u = lp_objective(graph, beliefs)
    if np.isposinf(u):
        return float("inf")
    h = 0.0
    for a, table in enumerate(beliefs.factor_beliefs):
        pos = table[table > 0]
        h -= counts.c_alpha[a] * float(np.sum(pos * np.log(pos)))
    for i, vec in enumerate(beliefs.var_beliefs):
        pos = vec[vec > 0]
        h -= counts.c_i[i] * float(np.sum(pos * np.log(pos)))
    return u - temperature * h


def lp_objective(graph: FactorGraph, beliefs: BeliefSet) -> float:
    """Expected energy sum_a sum_x b_a(x) E_a(x), the LP relaxation objective."""
    total = 0.0
    for a, table in enumerate(beliefs.factor_beliefs):
        e = graph.tables[a]
        mask = table > 0
        contrib = table[mask] * e[mask]
        total += float(np.sum(contrib))
    return total


def sharpen(beliefs: BeliefSet, tie_tol: float = 1e-6) -> BeliefSet:
    """Uniform over each table's near-maximal cells, zero elsewhere."""
    fb = []
    for table in beliefs.factor_beliefs:
        mx = np.max(table)
        mask = table >= mx - tie_tol * mx
        fb.append(mask / np.count_nonzero(mask))
    vb = []
    for vec in beliefs.var_beliefs:
        mx = np.max(vec)
        mask = vec >= mx - tie_tol * mx
        vb.append(mask / np.count_nonzero(mask))
    return _freeze_beliefs(fb, vb)


def temperature_power(beliefs: BeliefSet, temperature: float) -> BeliefSet:
    """Each belief raised to the power T and renormalized."""
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    fb = []
    for table in beliefs.factor_beliefs:
        t = np.power(table, temperature)
        fb.append(t / np.sum(t))
    vb = []
    for vec in beliefs.var_beliefs:
        v = np.power(vec, temperature)
        vb.append(v / np.sum(v))
    return _freeze_beliefs(fb, vb)


def delta_beliefs(graph: FactorGraph, assignment) -> BeliefSet:
    """Point-mass beliefs at an assignment (used by tests and the LP bound)."""
    from .model import check_assignment

    x = check_assignment(graph, assignment)
    fb = []
    for a, scope in enumerate(graph.scopes):
        t = np.zeros(graph.tables[a].shape)
        t[tuple(x[i] for i in scope)] = 1.0
        fb.append(t)
    vb = []
    for i in range(graph.n_vars):
        v = np.zeros(int(graph.var_cards[i]))
        v[x[i]] = 1.0
        vb.append(v)
    return _freeze_beliefs(fb, vb)
