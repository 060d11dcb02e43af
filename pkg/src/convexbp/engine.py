"""Two-way reweighted message passing in sum and max semirings.

The update, assuming c_alpha = 1 for every factor:

    m0_{ai}(x_i) = reduce_{x_a \\ i} psi_a^(1/T)(x_a) prod_{j != i} m_{ja}(x_j)
    m0_{ia}(x_i) = prod_{b != a} m_{bi}(x_i)
    m_{ai} <- (m0_{ai})^gamma_i (m0_{ia})^(gamma_i - 1)
    m_{ia} <- (m0_{ia})^gamma_i (m0_{ai})^(gamma_i - 1)

where reduce is a sum at temperature T or a max (with T pinned at 1) and
gamma_i = d_i / (2 d_i + c_i - 1) is the exponent that makes the fixed
points stationary for the counting numbers (see ``gamma``). With
gamma_i = 1, equivalently c_i = 1 - d_i, this is ordinary BP. All work
happens in the log domain inside a kernel: the compiled extension when
built, otherwise the pure Python twin. Both produce identical message
streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel_py
from .counting import CountingNumbers, bethe
from .errors import (
    CiEqualsOne,
    FactorCountNotOne,
    NonPositiveTemperature,
    NumericalOverflow,
)
from .model import FactorGraph

try:
    from . import _kernel_cy

    _DEFAULT_KERNEL = _kernel_cy
except ImportError:  # extension not built; fall back to the Python twin
    _kernel_cy = None
    _DEFAULT_KERNEL = _kernel_py

SUM = "sum"
MAX = "max"


def kernel_backend() -> str:
    """Name of the kernel selected at import: 'cython' or 'python'."""
    return "cython" if _DEFAULT_KERNEL is not _kernel_py else "python"


@dataclass(frozen=True)
class InferenceConfig:
    semiring: str = SUM
    temperature: float = 1.0
    damping: float = 0.5
    max_iterations: int = 1000
    convergence_tol: float = 1e-8
    schedule: str = "asynchronous"
    seed: int = 0

    def __post_init__(self):
        if self.semiring not in (SUM, MAX):
            raise ValueError(f"semiring must be 'sum' or 'max', got {self.semiring!r}")
        if self.semiring == SUM and not self.temperature > 0:
            raise NonPositiveTemperature(f"sum semiring needs temperature > 0, got {self.temperature}")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0, 1), got {self.damping}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.schedule not in ("asynchronous", "synchronous"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


class CompiledGraph:
    """Flat array layout of a factor graph for the kernels.

    Edges are (factor, scope position) pairs numbered factor-major, so
    edge e of factor a at position p has e = scope_off[a] + p. Message
    vectors live in one flat buffer at msg_off[e].
    """

    def __init__(self, graph: FactorGraph):
        n_edges = sum(len(s) for s in graph.scopes)
        self.n_edges = n_edges
        self.var_card = np.asarray(graph.var_cards, dtype=np.int64)
        self.edge_var = np.empty(n_edges, dtype=np.int64)
        self.edge_factor = np.empty(n_edges, dtype=np.int64)
        self.edge_pos = np.empty(n_edges, dtype=np.int64)
        self.scope_off = np.zeros(graph.n_factors + 1, dtype=np.int64)
        self.stride_flat = np.empty(n_edges, dtype=np.int64)
        self.table_off = np.zeros(graph.n_factors + 1, dtype=np.int64)
        e = 0
        for a, scope in enumerate(graph.scopes):
            self.scope_off[a + 1] = self.scope_off[a] + len(scope)
            self.table_off[a + 1] = self.table_off[a] + graph.tables[a].size
            stride = 1
            strides = []
            for card in reversed([int(graph.var_cards[i]) for i in scope]):
                strides.append(stride)
                stride *= card
            strides.reverse()
            for p, i in enumerate(scope):
                self.edge_var[e] = i
                self.edge_factor[e] = a
                self.edge_pos[e] = p
                self.stride_flat[e] = strides[p]
                e += 1
        self.msg_off = np.zeros(n_edges + 1, dtype=np.int64)
        for e in range(n_edges):
            self.msg_off[e + 1] = self.msg_off[e] + int(self.var_card[self.edge_var[e]])
        self.total_msg = int(self.msg_off[-1])

        incident = [[] for _ in range(graph.n_vars)]
        for e in range(n_edges):
            incident[self.edge_var[e]].append(e)
        self.var_edge_off = np.zeros(graph.n_vars + 1, dtype=np.int64)
        self.var_edge_list = np.empty(n_edges, dtype=np.int64)
        t = 0
        for i, edges in enumerate(incident):
            for e in edges:
                self.var_edge_list[t] = e
                t += 1
            self.var_edge_off[i + 1] = t


def _compiled(graph: FactorGraph) -> CompiledGraph:
    cg = graph._cache.get("compiled")
    if cg is None:
        cg = CompiledGraph(graph)
        graph._cache["compiled"] = cg
    return cg


def log_potentials(graph: FactorGraph, semiring: str, temperature: float) -> np.ndarray:
    """Flat per-table-max-normalized log psi^(1/T) (= -E/T; -E for max)."""
    t = 1.0 if semiring == MAX else float(temperature)
    if not t > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    key = ("logpsi", semiring, t)
    cached = graph._cache.get(key)
    if cached is not None:
        return cached
    cg = _compiled(graph)
    flat = np.empty(int(cg.table_off[-1]), dtype=np.float64)
    for a, table in enumerate(graph.tables):
        lp = (-table / t).ravel()
        mx = np.max(lp)
        if np.isneginf(mx):
            flat[cg.table_off[a] : cg.table_off[a + 1]] = -np.inf
        else:
            flat[cg.table_off[a] : cg.table_off[a + 1]] = lp - mx
    graph._cache[key] = flat
    return flat


@dataclass
class MessageState:
    """Log-domain messages plus run bookkeeping.

    Both flat buffers are normalized to max entry 0 per message vector.
    """

    log_f2v: np.ndarray
    log_v2f: np.ndarray
    layout: CompiledGraph = field(repr=False)
    iterations_run: int = 0
    converged: bool = False
    final_delta: float = float("inf")

    def copy(self) -> "MessageState":
        return MessageState(
            self.log_f2v.copy(), self.log_v2f.copy(), self.layout,
            self.iterations_run, self.converged, self.final_delta,
        )

    def factor_to_var(self, graph: FactorGraph, factor, var) -> np.ndarray:
        """Message vector from a factor to a member variable (by name)."""
        a = graph.factor_index[factor]
        i = graph.var_index[var]
        p = graph.scopes[a].index(i)
        e = int(self.layout.scope_off[a]) + p
        return self.log_f2v[self.layout.msg_off[e] : self.layout.msg_off[e + 1]].copy()

    def var_to_factor(self, graph: FactorGraph, var, factor) -> np.ndarray:
        a = graph.factor_index[factor]
        i = graph.var_index[var]
        p = graph.scopes[a].index(i)
        e = int(self.layout.scope_off[a]) + p
        return self.log_v2f[self.layout.msg_off[e] : self.layout.msg_off[e + 1]].copy()


def uniform_messages(graph: FactorGraph) -> MessageState:
    """All-zero log messages, the conventional neutral start."""
    cg = _compiled(graph)
    return MessageState(
        log_f2v=np.zeros(cg.total_msg),
        log_v2f=np.zeros(cg.total_msg),
        layout=cg,
    )


def gamma(graph: FactorGraph, counts: CountingNumbers) -> np.ndarray:
    """Reweighting exponents gamma_i = d_i / (2 d_i + c_i - 1).

    This is the exponent that makes fixed points of the symmetric two-way
    updates satisfy both the admissibility and the marginalization
    stationarity conditions: writing A = m0_factor_to_var and
    B = m0_var_to_factor, any fixed point of

        m_f2v = A^g B^(g-1),   m_v2f = B^g A^(g-1)

    automatically sum-marginalizes (m_v2f * A = (AB)^g = m_f2v * B for
    every incident factor), and matching the variable-side stationarity
    of the free energy pins g to d_i / (2 d_i + c_i - 1). gamma_i = 1
    exactly when c_i = 1 - d_i, recovering ordinary BP.
    """
    c_i = np.asarray(counts.c_i, dtype=np.float64)
    if np.any(c_i >= 1.0 - 1e-12):
        bad = [graph.var_names[i] for i in np.flatnonzero(c_i >= 1.0 - 1e-12)]
        raise CiEqualsOne(f"c_i >= 1 for variables {bad}; the reweighting needs c_i < 1")
    d = graph.var_degree.astype(np.float64)
    denom = 2.0 * d + c_i - 1.0
    if np.any(denom < 1e-12):
        bad = [graph.var_names[i] for i in np.flatnonzero(denom < 1e-12)]
        raise CiEqualsOne(f"c_i <= 1 - 2 d_i for variables {bad}; gamma is undefined")
    return d / denom


def run(
    graph: FactorGraph,
    counts: CountingNumbers,
    config: InferenceConfig,
    initial: Optional[MessageState] = None,
):
    """Iterate the two-way updates to a fixed point; return (MessageState, BeliefSet).

    Requires c_alpha = 1 for every factor and c_i < 1 for every variable.
    The input MessageState (if any) is copied, never mutated.
    """
    from .beliefs import beliefs_from_messages

    c_alpha = np.asarray(counts.c_alpha, dtype=np.float64)
    if np.any(np.abs(c_alpha - 1.0) > 1e-9):
        raise FactorCountNotOne("the engine requires c_alpha = 1 for all factors; rescale the counts")
    c_i = np.asarray(counts.c_i, dtype=np.float64)
    if np.any(c_i >= 1.0 - 1e-12):
        bad = [graph.var_names[i] for i in np.flatnonzero(c_i >= 1.0 - 1e-12)]
        raise CiEqualsOne(f"the engine requires c_i < 1; violated at {bad}")

    cg = _compiled(graph)
    state = initial.copy() if initial is not None else uniform_messages(graph)
    logpsi = log_potentials(graph, config.semiring, config.temperature)
    g = gamma(graph, counts)

    kern = graph._cache.get("force_kernel") or _DEFAULT_KERNEL
    sweeps, delta, converged, status = kern.run_sweeps(
        cg.var_card,
        cg.edge_var,
        cg.edge_factor,
        cg.edge_pos,
        cg.scope_off,
        cg.stride_flat,
        cg.table_off,
        cg.var_edge_off,
        cg.var_edge_list,
        cg.msg_off,
        logpsi,
        g,
        state.log_f2v,
        state.log_v2f,
        _kernel_py.SEMIRING_MAX if config.semiring == MAX else _kernel_py.SEMIRING_SUM,
        float(config.damping),
        int(config.max_iterations),
        float(config.convergence_tol),
        _kernel_py.SCHEDULE_SYNC if config.schedule == "synchronous" else _kernel_py.SCHEDULE_ASYNC,
        int(config.seed) & ((1 << 64) - 1),
    )
    if status == 1:
        raise NumericalOverflow("a log message left (-inf, 0]: +inf appeared during reweighting")
    if status == 2:
        raise NumericalOverflow("NaN appeared in a message update")
    if status == 3:
        raise NumericalOverflow("a message lost all support (contradictory zero-potential structure)")

    state.iterations_run = sweeps
    state.converged = bool(converged)
    state.final_delta = float(delta)
    beliefs = beliefs_from_messages(graph, state, config.temperature, config.semiring)
    return state, beliefs


def run_ordinary_bp(graph: FactorGraph, config: InferenceConfig, initial: Optional[MessageState] = None):
    """run() with Bethe counting numbers (gamma_i = 1, plain BP)."""
    return run(graph, bethe(graph), config, initial)
