"""Brute-force references: exact MAP, exact marginals, exhaustive ML decoding.

Everything here enumerates raw energy tables directly and shares no code
with the propagation engine; independence is the point, since these are
the values the engine's certificates are audited against.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .beliefs import _freeze_beliefs
from .errors import BudgetExceeded
from .model import FactorGraph


@dataclass(frozen=True)
class OracleBudget:
    max_joint_states: int = 2**22

    def __post_init__(self):
        if self.max_joint_states < 1:
            raise ValueError("budget must be positive")


def _budget(budget) -> int:
    if budget is None:
        return OracleBudget().max_joint_states
    if isinstance(budget, OracleBudget):
        return budget.max_joint_states
    return int(budget)


def _enumerate_states(graph: FactorGraph) -> tuple[int, list]:
    """Joint size and per-variable state vectors in lexicographic order.

    Variable 0 is the most significant digit, so row r is the r-th
    assignment lexicographically and argmin/argmax tie-break to the
    lexicographically smallest one.
    """
    joint = graph.joint_states()
    idx = np.arange(joint, dtype=np.int64)
    states = []
    stride = joint
    for i in range(graph.n_vars):
        card = int(graph.var_cards[i])
        stride //= card
        states.append((idx // stride) % card)
    return joint, states


def _energy_vector(graph: FactorGraph, states) -> np.ndarray:
    joint = states[0].shape[0]
    energy = np.zeros(joint)
    for a, scope in enumerate(graph.scopes):
        flat = np.zeros(joint, dtype=np.int64)
        for i in scope:
            flat = flat * int(graph.var_cards[i]) + states[i]
        energy += graph.tables[a].ravel()[flat]
    return energy


def brute_force_map(graph: FactorGraph, budget=None):
    """Exact minimizer of the total energy; ties broken lexicographically."""
    cap = _budget(budget)
    joint = graph.joint_states()
    if joint > cap:
        raise BudgetExceeded(f"joint space {joint} exceeds budget {cap}")
    joint, states = _enumerate_states(graph)
    energy = _energy_vector(graph, states)
    best = int(np.argmin(energy))
    assignment = np.array([int(states[i][best]) for i in range(graph.n_vars)], dtype=np.int64)
    return assignment, float(energy[best])


def brute_force_marginals(graph: FactorGraph, temperature: float, budget=None):
    """Exact Gibbs marginals of psi^(1/T) and the log partition function."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    cap = _budget(budget)
    joint = graph.joint_states()
    if joint > cap:
        raise BudgetExceeded(f"joint space {joint} exceeds budget {cap}")
    joint, states = _enumerate_states(graph)
    energy = _energy_vector(graph, states)
    emin = float(np.min(energy))
    if np.isposinf(emin):
        raise ValueError("every assignment has zero potential")
    w = np.exp(-(energy - emin) / temperature)
    z = float(np.sum(w))
    log_z = -emin / temperature + np.log(z)

    var_beliefs = []
    for i in range(graph.n_vars):
        card = int(graph.var_cards[i])
        var_beliefs.append(np.bincount(states[i], weights=w, minlength=card) / z)
    factor_beliefs = []
    for a, scope in enumerate(graph.scopes):
        flat = np.zeros(joint, dtype=np.int64)
        for i in scope:
            flat = flat * int(graph.var_cards[i]) + states[i]
        size = graph.tables[a].size
        table = np.bincount(flat, weights=w, minlength=size) / z
        factor_beliefs.append(table.reshape(graph.tables[a].shape))
    return _freeze_beliefs(factor_beliefs, var_beliefs), float(log_z)


def gf2_nullspace(h: np.ndarray) -> np.ndarray:
    """Basis of the null space of a GF(2) matrix, one codeword per row."""
    h = np.asarray(h, dtype=np.uint8) % 2
    m, n = h.shape
    work = h.copy()
    pivot_cols = []
    row = 0
    for col in range(n):
        pivot = None
        for r in range(row, m):
            if work[r, col]:
                pivot = r
                break
        if pivot is None:
            continue
        work[[row, pivot]] = work[[pivot, row]]
        for r in range(m):
            if r != row and work[r, col]:
                work[r] ^= work[row]
        pivot_cols.append(col)
        row += 1
        if row == m:
            break
    free_cols = [c for c in range(n) if c not in pivot_cols]
    basis = np.zeros((len(free_cols), n), dtype=np.uint8)
    for b, fc in enumerate(free_cols):
        basis[b, fc] = 1
        for r, pc in enumerate(pivot_cols):
            if work[r, fc]:
                basis[b, pc] = 1
    return basis


def _check_matrix(code) -> np.ndarray:
    h = np.zeros((code.m, code.n), dtype=np.uint8)
    for j, scope in enumerate(code.check_scopes):
        for i in scope:
            h[j, i] ^= 1
    return h


@lru_cache(maxsize=8)
def codeword_table(code, budget_states: int = 2**22) -> np.ndarray:
    """All codewords of a small code, one per row, via nullspace enumeration."""
    basis = gf2_nullspace(_check_matrix(code))
    k = basis.shape[0]
    if 2**k > budget_states:
        raise BudgetExceeded(f"code dimension {k} exceeds the enumeration budget")
    combos = np.arange(2**k, dtype=np.int64)
    bits = ((combos[:, None] >> np.arange(k)[None, :]) & 1).astype(np.uint8)
    return (bits @ basis) % 2


def ml_decode(code, received_word, budget=None) -> np.ndarray:
    """Codeword closest to the received word in Hamming distance (BSC likelihood).

    Ties go to the lexicographically smallest codeword.
    """
    cap = _budget(budget)
    words = codeword_table(code, cap)
    y = np.asarray(received_word, dtype=np.uint8)
    if y.shape != (code.n,):
        raise ValueError(f"received word needs length {code.n}")
    dist = np.sum(words != y[None, :], axis=1)
    dmin = int(np.min(dist))
    candidates = words[dist == dmin]
    packed = np.zeros(candidates.shape[0], dtype=object)
    for col in range(code.n):
        packed = packed * 2 + candidates[:, col]
    return candidates[int(np.argmin(packed))].copy()
