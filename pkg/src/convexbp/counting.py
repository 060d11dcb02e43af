"""Counting-number presets and constructive convexity certification.

A counting assignment (c_alpha, c_i) weights factor and variable entropies
in the approximate free energy. ``certify_convexity`` searches for a
decomposition into nonnegative combinations of (H_alpha - H_i), H_alpha
and H_i terms; finding one proves the approximation convex over the
marginalization constraints. Not finding one proves nothing, so the
negative result is named NotCertified rather than NonConvex.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonPairwiseFactor, RhoOutOfRange
from .model import FactorGraph

# Capacities are snapped to this grid before the flow so feasibility is an
# exact integer question rather than an epsilon chase.
_GRID = 10**12


@dataclass(frozen=True)
class ConvexityCertificate:
    """Nonnegative decomposition witnessing convexity.

    ``c_edge[a][p]`` is the coefficient of (H_a - H_i) for the variable at
    position p of factor a's scope; d_alpha and d_i are the leftover pure
    entropy weights. Identities (both within 1e-9):

        c_alpha[a] = d_alpha[a] + sum_p c_edge[a][p]
        c_i[i]     = d_i[i] - sum_{(a,p): scope[a][p]=i} c_edge[a][p]
    """

    c_edge: tuple
    d_alpha: np.ndarray
    d_i: np.ndarray

    def identity_residual(self, graph: FactorGraph, counts: "CountingNumbers") -> float:
        worst = 0.0
        edge_sum = np.zeros(graph.n_vars)
        for a, scope in enumerate(graph.scopes):
            s = float(np.sum(self.c_edge[a]))
            worst = max(worst, abs(counts.c_alpha[a] - (self.d_alpha[a] + s)))
            for p, i in enumerate(scope):
                edge_sum[i] += self.c_edge[a][p]
        for i in range(graph.n_vars):
            worst = max(worst, abs(counts.c_i[i] - (self.d_i[i] - edge_sum[i])))
        return worst

    def min_entry(self) -> float:
        entries = [np.min(ce) if len(ce) else 0.0 for ce in self.c_edge]
        return float(min(np.min(self.d_alpha), np.min(self.d_i), min(entries)))


@dataclass(frozen=True)
class NotCertified:
    """certify_convexity failed to find a Heskes decomposition."""

    reason: str


@dataclass(frozen=True)
class CountingNumbers:
    """Per-factor and per-variable entropy coefficients."""

    c_alpha: np.ndarray
    c_i: np.ndarray
    certificate: Optional[ConvexityCertificate] = None

    def scaled(self, k: float) -> "CountingNumbers":
        return CountingNumbers(self.c_alpha * k, self.c_i * k, None)


def _freeze(c_alpha, c_i, certificate=None) -> CountingNumbers:
    c_alpha = np.asarray(c_alpha, dtype=np.float64)
    c_i = np.asarray(c_i, dtype=np.float64)
    c_alpha.setflags(write=False)
    c_i.setflags(write=False)
    return CountingNumbers(c_alpha, c_i, certificate)


def bethe(graph: FactorGraph) -> CountingNumbers:
    """c_alpha = 1, c_i = 1 - d_i. Exact on trees; ordinary BP's free energy."""
    return _freeze(np.ones(graph.n_factors), 1.0 - graph.var_degree.astype(np.float64))


def trivial_convex(graph: FactorGraph) -> CountingNumbers:
    """c_alpha = 1, c_i = 0: a plain sum of factor entropies, trivially convex."""
    cert = ConvexityCertificate(
        c_edge=tuple(np.zeros(len(s)) for s in graph.scopes),
        d_alpha=np.ones(graph.n_factors),
        d_i=np.zeros(graph.n_vars),
    )
    return _freeze(np.ones(graph.n_factors), np.zeros(graph.n_vars), cert)


def default_convex(graph: FactorGraph) -> CountingNumbers:
    """c_alpha = 1, c_i = -sum_{a: i in a} 1/d_a, with its canonical certificate."""
    c_i = np.zeros(graph.n_vars)
    c_edge = []
    for scope in graph.scopes:
        arity = len(scope)
        c_edge.append(np.full(arity, 1.0 / arity))
        for i in scope:
            c_i[i] -= 1.0 / arity
    cert = ConvexityCertificate(
        c_edge=tuple(c_edge),
        d_alpha=np.zeros(graph.n_factors),
        d_i=np.zeros(graph.n_vars),
    )
    return _freeze(np.ones(graph.n_factors), c_i, cert)


def trbp_from_edge_probs(graph: FactorGraph, rho, scale: float) -> CountingNumbers:
    """Tree-reweighted counting numbers from edge appearance probabilities.

    ``rho`` is a scalar or a {factor name: rho} mapping over the pairwise
    factors, each in (0, 1]. Before scaling, a pairwise factor gets
    c_alpha = rho and each variable c_i = 1 - sum of incident rho. All
    numbers are then multiplied by ``scale`` (callers pick scale = 1/rho
    so that c_alpha = 1, which the engine requires).

    Unary factors are allowed: they appear in every spanning tree, so they
    are pinned at c_alpha = 1 after scaling and enter the variable sums
    with weight 1/scale. With rho = 1 and scale = 1 this reduces to the
    Bethe numbers on any unary-plus-pairwise graph.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    c_alpha = np.empty(graph.n_factors)
    rho_sum = np.zeros(graph.n_vars)
    for a, scope in enumerate(graph.scopes):
        arity = len(scope)
        if arity > 2:
            raise NonPairwiseFactor(
                f"factor {graph.factor_names[a]!r} has arity {arity}; TRBP needs arity <= 2"
            )
        if arity == 1:
            r = 1.0 / scale
        else:
            if isinstance(rho, dict):
                r = float(rho[graph.factor_names[a]])
            else:
                r = float(rho)
            if not (0.0 < r <= 1.0):
                raise RhoOutOfRange(f"rho for factor {graph.factor_names[a]!r} is {r}, needs (0, 1]")
        c_alpha[a] = r
        for i in scope:
            rho_sum[i] += r
    return _freeze(scale * c_alpha, scale * (1.0 - rho_sum))


def _max_flow(n_nodes: int, arcs, source: int, sink: int) -> tuple[int, dict]:
    """Edmonds-Karp max flow on integer capacities. Returns (value, flow per arc)."""
    cap = {}
    adj = [[] for _ in range(n_nodes)]
    for u, v, c in arcs:
        if (u, v) not in cap:
            adj[u].append(v)
            adj[v].append(u)
            cap[(u, v)] = 0
            cap[(v, u)] = 0
        cap[(u, v)] += c
    flow = {k: 0 for k in cap}
    total = 0
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in adj[u]:
                if v not in parent and cap[(u, v)] - flow[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return total, flow
        # bottleneck along the found path
        bottleneck = None
        v = sink
        while parent[v] is not None:
            u = parent[v]
            residual = cap[(u, v)] - flow[(u, v)]
            bottleneck = residual if bottleneck is None else min(bottleneck, residual)
            v = u
        v = sink
        while parent[v] is not None:
            u = parent[v]
            flow[(u, v)] += bottleneck
            flow[(v, u)] -= bottleneck
            v = u
        total += bottleneck


def certify_convexity(graph: FactorGraph, counts: CountingNumbers):
    """Search for a Heskes decomposition of the counting numbers.

    Feasibility is a bipartite transportation problem: every variable with
    c_i < 0 must push -c_i units of (H_alpha - H_i) coefficient into its
    incident factors, and factor alpha can absorb at most c_alpha. Solved
    as a max flow source -> variables -> factors -> sink; a certificate is
    read off the saturating flow. Returns ConvexityCertificate or
    NotCertified.
    """
    c_alpha = np.asarray(counts.c_alpha, dtype=np.float64)
    c_i = np.asarray(counts.c_i, dtype=np.float64)
    if c_alpha.shape != (graph.n_factors,) or c_i.shape != (graph.n_vars,):
        raise ValueError("counting numbers do not align with the graph")
    if np.any(c_alpha < -1e-12):
        return NotCertified("negative factor counting number")

    n, m = graph.n_vars, graph.n_factors
    source, sink = n + m, n + m + 1
    # Demands round down and capacities round up so that real-feasible
    # instances stay feasible after snapping to the grid; the residual
    # slack is at most one grid cell per node, absorbed below by clamping.
    demand = [int(np.floor(max(0.0, -c_i[i]) * _GRID)) for i in range(n)]
    arcs = [(source, i, d) for i, d in enumerate(demand) if d > 0]
    inf_cap = (sum(demand) or 1) + 1
    for a, scope in enumerate(graph.scopes):
        cap = int(np.ceil(max(0.0, c_alpha[a]) * _GRID))
        if cap > 0:
            arcs.append((n + a, sink, cap))
        for i in scope:
            arcs.append((i, n + a, inf_cap))

    total, flow = _max_flow(n + m + 2, arcs, source, sink)
    if total != sum(demand):
        return NotCertified(
            f"required inflow {sum(demand) / _GRID:g} exceeds what the factors absorb"
        )

    c_edge = []
    edge_sum = np.zeros(n)
    for a, scope in enumerate(graph.scopes):
        ce = np.zeros(len(scope))
        for p, i in enumerate(scope):
            f = flow.get((i, n + a), 0)
            if f > 0:
                ce[p] = f / _GRID
                edge_sum[i] += ce[p]
        c_edge.append(ce)
    # Clamp grid-cell negatives to keep nonnegativity exact; the identity
    # error this introduces is below the 1e-9 certificate tolerance.
    d_alpha = np.maximum(0.0, c_alpha - np.array([np.sum(ce) for ce in c_edge]))
    d_i = np.maximum(0.0, c_i + edge_sum)
    return ConvexityCertificate(c_edge=tuple(c_edge), d_alpha=d_alpha, d_i=d_i)
