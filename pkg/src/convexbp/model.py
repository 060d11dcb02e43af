"""Discrete factor-graph models: variables, energy-table factors, assignments.

Energies are the canonical storage; potentials exp(-E) are derived on
demand. A +inf energy encodes an exact zero potential and propagates
through all arithmetic; -inf and NaN entries are rejected at build time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DanglingVariableRef,
    DuplicateScopeVariable,
    InvalidAssignment,
    NegativeInfiniteEnergy,
    NonPositiveTemperature,
    TableSizeMismatch,
)


@dataclass(frozen=True)
class FactorGraph:
    """Immutable discrete graphical model.

    Variable and factor ids are dense integers assigned at build time;
    the original names map through ``var_index`` / ``factor_index``.
    """

    var_names: tuple
    var_cards: np.ndarray
    factor_names: tuple
    scopes: tuple          # per factor: tuple of variable indices
    tables: tuple          # per factor: read-only energy ndarray, scope-shaped
    var_degree: np.ndarray  # d_i: number of factors containing i
    var_factors: tuple     # per variable: tuple of factor indices, sorted
    var_index: dict
    factor_index: dict
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_factors(self) -> int:
        return len(self.factor_names)

    def factor_arity(self, a: int) -> int:
        return len(self.scopes[a])

    def joint_states(self) -> int:
        return int(np.prod(self.var_cards.astype(object)))


def build_graph(variables: Sequence, factors: Sequence) -> FactorGraph:
    """Validate and freeze a factor graph.

    ``variables`` is a sequence of ``(name, cardinality)`` pairs and
    ``factors`` a sequence of ``(name, scope_names, energy_table)`` where
    the table is array-like over the scope's joint states in scope order.
    """
    names = [v[0] for v in variables]
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable names")
    cards = np.asarray([int(v[1]) for v in variables], dtype=np.int64)
    if np.any(cards < 2):
        raise ValueError("every variable needs at least 2 states")
    var_index = {name: i for i, name in enumerate(names)}

    fnames = [f[0] for f in factors]
    if len(set(fnames)) != len(fnames):
        raise ValueError("duplicate factor names")

    scopes = []
    tables = []
    for fname, scope_names, raw in factors:
        scope = []
        for vn in scope_names:
            if vn not in var_index:
                raise DanglingVariableRef(f"factor {fname!r} references unknown variable {vn!r}")
            scope.append(var_index[vn])
        if not scope:
            raise ValueError(f"factor {fname!r} has an empty scope")
        if len(set(scope)) != len(scope):
            raise DuplicateScopeVariable(f"factor {fname!r} repeats a variable in its scope")
        shape = tuple(int(cards[i]) for i in scope)
        table = np.asarray(raw, dtype=np.float64)
        if table.size != int(np.prod(shape)):
            raise TableSizeMismatch(
                f"factor {fname!r}: table has {table.size} entries, scope needs {int(np.prod(shape))}"
            )
        table = table.reshape(shape).copy()
        if np.any(np.isnan(table)) or np.any(np.isneginf(table)):
            raise NegativeInfiniteEnergy(f"factor {fname!r} contains -inf or NaN energies")
        table.setflags(write=False)
        scopes.append(tuple(scope))
        tables.append(table)

    degree = np.zeros(len(names), dtype=np.int64)
    var_factors = [[] for _ in names]
    for a, scope in enumerate(scopes):
        for i in scope:
            degree[i] += 1
            var_factors[i].append(a)
    if np.any(degree == 0):
        missing = [names[i] for i in np.flatnonzero(degree == 0)]
        raise ValueError(f"variables appear in no factor: {missing}")

    cards.setflags(write=False)
    degree.setflags(write=False)
    return FactorGraph(
        var_names=tuple(names),
        var_cards=cards,
        factor_names=tuple(fnames),
        scopes=tuple(scopes),
        tables=tuple(tables),
        var_degree=degree,
        var_factors=tuple(tuple(sorted(fs)) for fs in var_factors),
        var_index=var_index,
        factor_index={name: a for a, name in enumerate(fnames)},
    )


def check_assignment(graph: FactorGraph, assignment) -> np.ndarray:
    """Return the assignment as an int array, raising InvalidAssignment if malformed."""
    x = np.asarray(assignment)
    if x.shape != (graph.n_vars,):
        raise InvalidAssignment(f"assignment length {x.shape} != {graph.n_vars} variables")
    if not np.issubdtype(x.dtype, np.integer):
        if np.any(x != np.floor(x)):
            raise InvalidAssignment("assignment states must be integers")
        x = x.astype(np.int64)
    if np.any(x < 0) or np.any(x >= graph.var_cards):
        raise InvalidAssignment("assignment state out of range")
    return x.astype(np.int64)


def total_energy(graph: FactorGraph, assignment) -> float:
    """Sum of factor energies at the assignment; +inf if any zero-potential cell is hit."""
    x = check_assignment(graph, assignment)
    total = 0.0
    for scope, table in zip(graph.scopes, graph.tables):
        total += table[tuple(x[i] for i in scope)]
    return float(total)


def potential_power(graph: FactorGraph, temperature: float):
    """Per-factor tables exp(-E/T), max-normalized so entries lie in [0, 1].

    A +inf energy maps to exactly 0 for every temperature. A table whose
    entries are all +inf comes back as all zeros.
    """
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    out = []
    for table in graph.tables:
        logp = -table / temperature
        mx = np.max(logp)
        if np.isneginf(mx):
            out.append(np.zeros_like(table))
            continue
        out.append(np.exp(logp - mx))
    return out
