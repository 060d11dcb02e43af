"""Shared model builders and independent reference helpers."""

import itertools

import numpy as np
import pytest

from convexbp import build_graph

INF = float("inf")


def two_node_graph():
    """The zero-potential counterexample: psi = [[1,1],[1,0]] as energies."""
    return build_graph(
        variables=[("x1", 2), ("x2", 2)],
        factors=[("f12", ["x1", "x2"], [[0.0, 0.0], [0.0, INF]])],
    )


def grid3x3_pairwise():
    """3x3 grid with zero-energy pairwise factors only (counting-number tests)."""
    variables = [(f"x{r}{c}", 2) for r in range(3) for c in range(3)]
    factors = []
    for r in range(3):
        for c in range(3):
            if c + 1 < 3:
                factors.append((f"h{r}{c}", [f"x{r}{c}", f"x{r}{c+1}"], np.zeros((2, 2))))
            if r + 1 < 3:
                factors.append((f"v{r}{c}", [f"x{r}{c}", f"x{r+1}{c}"], np.zeros((2, 2))))
    return build_graph(variables, factors)


def random_tree(rng, n_vars=None, max_card=4, sigma=1.0, unary=True):
    """Random tree with pairwise energies and optional unaries."""
    n = n_vars or int(rng.integers(2, 11))
    cards = [int(rng.integers(2, max_card + 1)) for _ in range(n)]
    variables = [(f"x{i}", cards[i]) for i in range(n)]
    factors = []
    if unary:
        for i in range(n):
            factors.append((f"u{i}", [f"x{i}"], rng.normal(0, sigma, size=cards[i])))
    for i in range(1, n):
        j = int(rng.integers(0, i))
        factors.append(
            (f"e{j}-{i}", [f"x{j}", f"x{i}"], rng.normal(0, sigma, size=(cards[j], cards[i])))
        )
    return build_graph(variables, factors)


def random_loopy_model(rng, n_vars=None, extra_edges=2, sigma=1.0):
    """Random connected binary model: tree plus a few chords, unaries on all."""
    n = n_vars or int(rng.integers(4, 13))
    variables = [(f"x{i}", 2) for i in range(n)]
    factors = [(f"u{i}", [f"x{i}"], rng.normal(0, 0.4, size=2)) for i in range(n)]
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.add((j, i))
    tries = 0
    while len(edges) < n - 1 + extra_edges and tries < 50:
        tries += 1
        i, j = sorted(rng.integers(0, n, size=2))
        if i != j:
            edges.add((int(i), int(j)))
    for i, j in sorted(edges):
        factors.append((f"e{i}-{j}", [f"x{i}", f"x{j}"], rng.normal(0, sigma, size=(2, 2))))
    return build_graph(variables, factors)


def cycle_graph(energies_by_edge, n=4, card=2):
    """Cycle of binary nodes with the given per-edge energy tables."""
    variables = [(f"x{i}", card) for i in range(n)]
    factors = []
    for k, table in enumerate(energies_by_edge):
        i, j = k, (k + 1) % n
        factors.append((f"e{i}-{j}", [f"x{i}", f"x{j}"], table))
    return build_graph(variables, factors)


def naive_total_energy(graph, assignment):
    """Per-factor table lookups, written independently of model.total_energy."""
    total = 0.0
    for scope, table in zip(graph.scopes, graph.tables):
        idx = tuple(int(assignment[i]) for i in scope)
        total = total + float(table[idx])
    return total


def all_assignments(graph):
    return itertools.product(*[range(int(c)) for c in graph.var_cards])


@pytest.fixture
def rng():
    return np.random.default_rng(20240131)
