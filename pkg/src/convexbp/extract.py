"""Tie detection and certified MAP extraction from max-product fixed points.

Extraction climbs a ladder of sufficient conditions, each backed by the
provable-convexity certificate:

  no_ties            every variable belief has a unique maximizer
  frustration_free   a single assignment maximizes every factor belief
  tied_subgraph      exact maximization of the reduced objective over the
                     tied variables, plus a boundary-factor check
  partial_uniform_boundary   pairwise graphs with fully uniform beliefs on
                     the tied boundary certify the non-tied part only

Every certificate records the fixed-point residuals backing the claim; a
fixed point whose max-marginalization residual is out of tolerance never
certifies anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .beliefs import (
    BeliefSet,
    admissibility_residual,
    max_marginalization_residual,
)
from .counting import ConvexityCertificate, CountingNumbers
from .engine import MessageState
from .errors import (
    AllZeroBelief,
    BoundaryCheckFailed,
    BoundaryNotUniform,
    ComponentTooLarge,
    NoCertificate,
    NoConsistentMaximizer,
    NonPairwiseFactor,
    NotConverged,
    SearchLimitExceeded,
)
from .model import FactorGraph

TIER_NO_TIES = "no_ties"
TIER_FRUSTRATION_FREE = "frustration_free"
TIER_TIED_SUBGRAPH = "tied_subgraph"
TIER_PARTIAL_UNIFORM_BOUNDARY = "partial_uniform_boundary"
TIER_FAILED = "failed"

CERTIFYING_TIERS = (TIER_NO_TIES, TIER_FRUSTRATION_FREE, TIER_TIED_SUBGRAPH)

UNDETERMINED = -1


@dataclass(frozen=True)
class TiePartition:
    """Tied / non-tied split of the variables at a max-product fixed point."""

    tied: frozenset
    non_tied: frozenset
    boundary: frozenset  # tied variables sharing a factor with a non-tied one
    tied_states: tuple   # per variable: tuple of states within tie_tol of the max
    tie_tol: float

    def argmax_of(self, i: int) -> int:
        return self.tied_states[i][0]


@dataclass(frozen=True)
class ExtractConfig:
    tie_tol: float = 1e-6
    search_limit: int = 100_000
    component_cap: int = 2**20
    convergence_tol: float = 1e-8
    probe_seed: int = 0


@dataclass(frozen=True)
class MapCertificate:
    """An assignment and the tier of proof that it is the MAP.

    For the three fully certifying tiers the assignment is complete; for
    partial_uniform_boundary the tied variables hold UNDETERMINED (-1);
    for failed the assignment is None.
    """

    assignment: Optional[np.ndarray]
    tier: str
    certificate_used: Optional[ConvexityCertificate]
    residuals: tuple  # (admissibility, max_marginalization)
    detail: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.tier in CERTIFYING_TIERS


def detect_ties(graph: FactorGraph, beliefs: BeliefSet, tie_tol: float = 1e-6) -> TiePartition:
    """Classify variables by whether their belief maximum is unique (relative tie_tol)."""
    tied = set()
    tied_states = []
    for i, vec in enumerate(beliefs.var_beliefs):
        mx = float(np.max(vec))
        states = tuple(int(s) for s in np.flatnonzero(vec >= mx - tie_tol * mx))
        tied_states.append(states)
        if len(states) > 1:
            tied.add(i)
    non_tied = set(range(graph.n_vars)) - tied
    boundary = set()
    for scope in graph.scopes:
        s_tied = [i for i in scope if i in tied]
        if s_tied and any(i in non_tied for i in scope):
            boundary.update(s_tied)
    return TiePartition(
        tied=frozenset(tied),
        non_tied=frozenset(non_tied),
        boundary=frozenset(boundary),
        tied_states=tuple(tied_states),
        tie_tol=tie_tol,
    )


def _require(certificate, messages):
    if certificate is None:
        raise NoCertificate("extraction requires a convexity certificate")
    if messages is not None and not messages.converged:
        raise NotConverged("extraction requires a converged max-product fixed point")


def _factor_max_gap(graph: FactorGraph, beliefs: BeliefSet, assignment) -> float:
    """Worst relative shortfall of b_a(x_a) from max b_a over all factors."""
    worst = 0.0
    for a, scope in enumerate(graph.scopes):
        table = beliefs.factor_beliefs[a]
        mx = float(np.max(table))
        val = float(table[tuple(assignment[i] for i in scope)])
        worst = max(worst, (mx - val) / mx if mx > 0 else np.inf)
    return worst


def _residuals(graph, beliefs, counts, config) -> tuple:
    adm = admissibility_residual(graph, beliefs, counts, temperature=1.0, seed=config.probe_seed)
    mm = max_marginalization_residual(graph, beliefs)
    return (float(adm), float(mm))


def extract_no_ties(
    graph: FactorGraph,
    beliefs: BeliefSet,
    counts: CountingNumbers,
    certificate: Optional[ConvexityCertificate],
    tie_tol: float = 1e-6,
    partition: Optional[TiePartition] = None,
    messages: Optional[MessageState] = None,
    config: Optional[ExtractConfig] = None,
) -> Optional[MapCertificate]:
    """No-ties extraction; returns None (defer to the next tier) when ties exist."""
    _require(certificate, messages)
    config = config or ExtractConfig(tie_tol=tie_tol)
    if partition is None:
        partition = detect_ties(graph, beliefs, tie_tol)
    if partition.tied:
        return None
    assignment = np.array([partition.argmax_of(i) for i in range(graph.n_vars)], dtype=np.int64)
    gap = _factor_max_gap(graph, beliefs, assignment)
    if gap > tie_tol:
        # a factor belief is not maximized at the node argmaxes, so this is
        # not a clean max-marginalizable fixed point; let later tiers try
        return None
    return MapCertificate(
        assignment=assignment,
        tier=TIER_NO_TIES,
        certificate_used=certificate,
        residuals=_residuals(graph, beliefs, counts, config),
        detail={"factor_max_gap": gap},
    )


def _maximizer_cells(table: np.ndarray, domains, scope, tie_tol: float):
    """Cells of a factor belief within tie_tol of its max, restricted to the domains."""
    mx = float(np.max(table))
    cells = []
    for flat in np.flatnonzero(table >= mx - tie_tol * mx):
        cell = np.unravel_index(int(flat), table.shape)
        if all(cell[p] in domains[scope[p]] for p in range(len(scope))):
            cells.append(tuple(int(c) for c in cell))
    return cells


def extract_frustration_free(
    graph: FactorGraph,
    beliefs: BeliefSet,
    certificate: Optional[ConvexityCertificate],
    partition: TiePartition,
    limit: int = 100_000,
    tie_tol: float = 1e-6,
    counts: Optional[CountingNumbers] = None,
    messages: Optional[MessageState] = None,
    config: Optional[ExtractConfig] = None,
) -> MapCertificate:
    """Search for one assignment maximizing every factor and variable belief.

    Non-tied variables are pinned at their unique argmax; tied variables
    range over their near-maximal states. Backtracking over the factor
    maximizer sets, visiting at most ``limit`` search nodes.
    """
    _require(certificate, messages)
    config = config or ExtractConfig(tie_tol=tie_tol, search_limit=limit)

    domains = [set(partition.tied_states[i]) for i in range(graph.n_vars)]
    factor_cells = []
    for a, scope in enumerate(graph.scopes):
        cells = _maximizer_cells(beliefs.factor_beliefs[a], domains, scope, tie_tol)
        if not cells:
            raise NoConsistentMaximizer(
                f"factor {graph.factor_names[a]!r} has no maximizer consistent with the tied states"
            )
        factor_cells.append(cells)

    # arc-consistency style pruning until a fixed point
    changed = True
    while changed:
        changed = False
        for a, scope in enumerate(graph.scopes):
            kept = [c for c in factor_cells[a] if all(c[p] in domains[scope[p]] for p in range(len(scope)))]
            if len(kept) != len(factor_cells[a]):
                factor_cells[a] = kept
            if not kept:
                raise NoConsistentMaximizer(
                    f"maximizer sets of factor {graph.factor_names[a]!r} pruned to nothing"
                )
            for p, i in enumerate(scope):
                seen = {c[p] for c in kept}
                if seen != domains[i]:
                    domains[i] = domains[i] & seen
                    if not domains[i]:
                        raise NoConsistentMaximizer(
                            f"variable {graph.var_names[i]!r} has no state consistent with all maximizer sets"
                        )
                    changed = True

    order = sorted(range(graph.n_vars), key=lambda i: (len(domains[i]), i))
    assignment = np.full(graph.n_vars, -1, dtype=np.int64)
    var_pos = {i: k for k, i in enumerate(order)}
    # factors become checkable once their last variable (in search order) is set
    check_at = [[] for _ in range(graph.n_vars)]
    for a, scope in enumerate(graph.scopes):
        last = max(var_pos[i] for i in scope)
        check_at[last].append(a)

    nodes = 0

    def consistent(a: int) -> bool:
        scope = graph.scopes[a]
        for cell in factor_cells[a]:
            if all(assignment[i] == cell[p] for p, i in enumerate(scope)):
                return True
        return False

    def search(k: int) -> bool:
        nonlocal nodes
        if k == len(order):
            return True
        i = order[k]
        for s in sorted(domains[i]):
            nodes += 1
            if nodes > config.search_limit:
                raise SearchLimitExceeded(
                    f"maximizer-consistency search exceeded {config.search_limit} nodes"
                )
            assignment[i] = s
            if all(consistent(a) for a in check_at[k]) and search(k + 1):
                return True
            assignment[i] = -1
        return False

    if not search(0):
        raise NoConsistentMaximizer("no single assignment maximizes every factor belief")

    residuals = (
        _residuals(graph, beliefs, counts, config)
        if counts is not None
        else (float("nan"), max_marginalization_residual(graph, beliefs))
    )
    return MapCertificate(
        assignment=assignment.copy(),
        tier=TIER_FRUSTRATION_FREE,
        certificate_used=certificate,
        residuals=residuals,
        detail={"search_nodes": nodes, "tied_count": len(partition.tied)},
    )


def _tied_components(graph: FactorGraph, tied: frozenset):
    """Connected components of the tied subgraph (variables linked via shared factors)."""
    parent = {i: i for i in tied}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for scope in graph.scopes:
        members = [i for i in scope if i in tied]
        for u, v in zip(members, members[1:]):
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
    comps = {}
    for i in tied:
        comps.setdefault(find(i), []).append(i)
    return [sorted(c) for c in sorted(comps.values(), key=min)]


def _log_or_neginf(values: np.ndarray) -> np.ndarray:
    out = np.full(values.shape, -np.inf)
    pos = values > 0
    out[pos] = np.log(values[pos])
    return out


def extract_with_frustrations(
    graph: FactorGraph,
    beliefs: BeliefSet,
    counts: CountingNumbers,
    certificate: Optional[ConvexityCertificate],
    partition: TiePartition,
    component_cap: int = 2**20,
    tie_tol: float = 1e-6,
    messages: Optional[MessageState] = None,
    config: Optional[ExtractConfig] = None,
) -> MapCertificate:
    """Exact maximization of the reduced tied-subgraph objective (Heskes terms).

    The reduced objective collects every decomposition term living on the
    tied variables: for each factor fully inside the tied set, its pure
    entropy weight b_a^d_alpha and the quotients (b_a / b_i)^c_edge of all
    its members (boundary members included), plus b_i^d_i for interior
    tied variables. It is maximized exhaustively per connected component;
    every factor touching a non-tied variable must then be maximized by
    the combined assignment or the certificate is refused.
    """
    _require(certificate, messages)
    config = config or ExtractConfig(tie_tol=tie_tol, component_cap=component_cap)

    assignment = np.full(graph.n_vars, UNDETERMINED, dtype=np.int64)
    for i in partition.non_tied:
        assignment[i] = partition.argmax_of(i)

    if not partition.tied:
        residuals = _residuals(graph, beliefs, counts, config)
        return MapCertificate(
            assignment=assignment,
            tier=TIER_NO_TIES,
            certificate_used=certificate,
            residuals=residuals,
            detail={"degenerate": "no tied variables"},
        )

    interior = partition.tied - partition.boundary
    components = _tied_components(graph, partition.tied)
    comp_sizes = []
    for comp in components:
        size = 1
        for i in comp:
            size *= int(graph.var_cards[i])
            if size > config.component_cap:
                raise ComponentTooLarge(
                    f"tied component {comp} exceeds the {config.component_cap}-state cap"
                )
        comp_sizes.append(size)

    log_bi = [_log_or_neginf(v) for v in beliefs.var_beliefs]
    log_ba = [_log_or_neginf(t) for t in beliefs.factor_beliefs]

    for comp, size in zip(components, comp_sizes):
        pos_of = {i: k for k, i in enumerate(comp)}
        # state columns, comp[0] most significant so argmax is lexicographic
        idx = np.arange(size, dtype=np.int64)
        cols = {}
        stride = size
        for i in comp:
            card = int(graph.var_cards[i])
            stride //= card
            cols[i] = (idx // stride) % card

        score = np.zeros(size)

        def gather_factor(a: int) -> np.ndarray:
            scope = graph.scopes[a]
            flat = np.zeros(size, dtype=np.int64)
            for i in scope:
                col = cols[i] if i in cols else np.full(size, assignment[i], dtype=np.int64)
                flat = flat * int(graph.var_cards[i]) + col
            return flat

        for a, scope in enumerate(graph.scopes):
            scope_set = set(scope)
            if not (scope_set <= partition.tied) or not (scope_set & set(comp)):
                continue
            # Factors fully inside the tied set carry their pure entropy
            # weight and the quotient terms of every member, boundary
            # members included: a boundary node's quotients against its
            # in-T factors are maximized by nothing else in the
            # decomposition, so they must sit inside the maximized
            # objective for the certificate to be sound.
            flat = gather_factor(a)
            la = log_ba[a].ravel()[flat]
            for p, i in enumerate(scope):
                ce = float(certificate.c_edge[a][p])
                if ce > 0.0:
                    li = log_bi[i][cols[i]]
                    dead = np.isneginf(la) | np.isneginf(li)
                    with np.errstate(invalid="ignore"):
                        term = np.where(dead, -np.inf, ce * (la - li))
                    score = score + term
            da = float(certificate.d_alpha[a])
            if da > 0.0:
                score = score + np.where(np.isneginf(la), -np.inf, da * la)
        for i in comp:
            if i in interior:
                di = float(certificate.d_i[i])
                if di > 0.0:
                    li = log_bi[i][cols[i]]
                    score = score + np.where(np.isneginf(li), -np.inf, di * li)

        best = int(np.argmax(score))
        if np.isneginf(score[best]):
            raise AllZeroBelief("the tied-subgraph objective vanishes everywhere")
        for i in comp:
            assignment[i] = int(cols[i][best])

    # boundary condition: factors straddling tied and non-tied variables
    # (and the purely non-tied ones) must be maximized at the combination
    worst_gap = 0.0
    for a, scope in enumerate(graph.scopes):
        if set(scope) <= partition.tied:
            continue
        table = beliefs.factor_beliefs[a]
        mx = float(np.max(table))
        val = float(table[tuple(assignment[i] for i in scope)])
        gap = (mx - val) / mx if mx > 0 else np.inf
        worst_gap = max(worst_gap, gap)
        if gap > tie_tol:
            raise BoundaryCheckFailed(
                f"factor {graph.factor_names[a]!r} is not maximized at the combined assignment"
            )

    return MapCertificate(
        assignment=assignment,
        tier=TIER_TIED_SUBGRAPH,
        certificate_used=certificate,
        residuals=_residuals(graph, beliefs, counts, config),
        detail={
            "component_sizes": tuple(comp_sizes),
            "boundary_gap": worst_gap,
            "tied_count": len(partition.tied),
        },
    )


def uniform_boundary_partial(
    graph: FactorGraph,
    beliefs: BeliefSet,
    partition: TiePartition,
    tie_tol: float = 1e-6,
    counts: Optional[CountingNumbers] = None,
    config: Optional[ExtractConfig] = None,
) -> MapCertificate:
    """Pairwise-only corollary: a fully uniform tied boundary certifies the non-tied part."""
    for a, scope in enumerate(graph.scopes):
        if len(scope) > 2:
            raise NonPairwiseFactor(
                f"factor {graph.factor_names[a]!r} has arity {len(scope)}; this tier needs arity <= 2"
            )
    config = config or ExtractConfig(tie_tol=tie_tol)
    for i in sorted(partition.boundary):
        vec = beliefs.var_beliefs[i]
        mx = float(np.max(vec))
        if float(np.min(vec)) < mx - tie_tol * mx:
            raise BoundaryNotUniform(
                f"boundary variable {graph.var_names[i]!r} has a non-uniform belief"
            )
    assignment = np.full(graph.n_vars, UNDETERMINED, dtype=np.int64)
    for i in partition.non_tied:
        assignment[i] = partition.argmax_of(i)
    residuals = (
        _residuals(graph, beliefs, counts, config)
        if counts is not None
        else (float("nan"), max_marginalization_residual(graph, beliefs))
    )
    return MapCertificate(
        assignment=assignment,
        tier=TIER_PARTIAL_UNIFORM_BOUNDARY,
        certificate_used=None,
        residuals=residuals,
        detail={"non_tied_count": len(partition.non_tied)},
    )


def extract(
    graph: FactorGraph,
    beliefs: BeliefSet,
    counts: CountingNumbers,
    certificate: Optional[ConvexityCertificate],
    config: Optional[ExtractConfig] = None,
    messages: Optional[MessageState] = None,
) -> MapCertificate:
    """Tier cascade: no_ties, frustration_free, tied_subgraph, partial, failed."""
    _require(certificate, messages)
    config = config or ExtractConfig()
    residuals = _residuals(graph, beliefs, counts, config)
    failures = {}

    if residuals[1] > 10.0 * config.convergence_tol:
        return MapCertificate(
            assignment=None,
            tier=TIER_FAILED,
            certificate_used=certificate,
            residuals=residuals,
            detail={"residual_guard": residuals[1]},
        )

    partition = detect_ties(graph, beliefs, config.tie_tol)

    cert = extract_no_ties(
        graph, beliefs, counts, certificate,
        tie_tol=config.tie_tol, partition=partition, config=config,
    )
    if cert is not None:
        return cert
    failures["no_ties"] = "ties present"

    try:
        return extract_frustration_free(
            graph, beliefs, certificate, partition,
            limit=config.search_limit, tie_tol=config.tie_tol,
            counts=counts, config=config,
        )
    except (SearchLimitExceeded, NoConsistentMaximizer) as err:
        failures["frustration_free"] = f"{type(err).__name__}: {err}"

    try:
        return extract_with_frustrations(
            graph, beliefs, counts, certificate, partition,
            component_cap=config.component_cap, tie_tol=config.tie_tol, config=config,
        )
    except (ComponentTooLarge, BoundaryCheckFailed, AllZeroBelief) as err:
        failures["tied_subgraph"] = f"{type(err).__name__}: {err}"

    if partition.non_tied:
        try:
            return uniform_boundary_partial(
                graph, beliefs, partition,
                tie_tol=config.tie_tol, counts=counts, config=config,
            )
        except (NonPairwiseFactor, BoundaryNotUniform) as err:
            failures["partial_uniform_boundary"] = f"{type(err).__name__}: {err}"
    else:
        failures["partial_uniform_boundary"] = "no non-tied variables to certify"

    return MapCertificate(
        assignment=None,
        tier=TIER_FAILED,
        certificate_used=certificate,
        residuals=residuals,
        detail=failures,
    )
