"""Free-energy landscape data over the symmetric two-parameter belief family.

For a toroidal grid of binary nodes sharing one symmetric pairwise
potential, the beliefs b_edge = [[x, y], [y, 1-x-2y]] with node marginals
(x+y, 1-x-y) parameterize a 2D slice of the constraint set. Emitting the
free energy over that slice reproduces the landscape picture: a convex
counting choice keeps a single basin at every temperature, while the
Bethe choice holds a second basin that survives arbitrarily small
temperatures.

That surviving basin hugs the simplex corner and narrows like
exp(-c/T), so the emitted grid is a uniform lattice augmented with
geometrically refined points near the axes, and basins are counted by
flooding a sector-based nearest-neighbor graph (index stencils lie about
descent directions once the spacing is non-uniform).
"""

from __future__ import annotations

import numpy as np

from ..beliefs import _freeze_beliefs, free_energy
from ..counting import bethe, default_convex
from ..model import FactorGraph, build_graph

MODE_BETHE = "bethe"
MODE_CONVEX = "convex"

_REFINE_FLOOR = 1e-13
_SECTORS = 16

_neighbor_cache = {}


def torus_grid_graph(potential_2x2, rows: int = 3, cols: int = 3) -> FactorGraph:
    """Toroidal grid with one shared symmetric 2x2 potential on every edge."""
    psi = np.asarray(potential_2x2, dtype=np.float64)
    if psi.shape != (2, 2):
        raise ValueError("potential must be 2x2")
    if psi[0, 1] != psi[1, 0]:
        raise ValueError("potential must be symmetric")
    if np.any(psi <= 0):
        raise ValueError("landscape potentials must be strictly positive")
    energy = -np.log(psi)
    variables = [(f"x{r},{c}", 2) for r in range(rows) for c in range(cols)]
    factors = []
    for r in range(rows):
        for c in range(cols):
            factors.append(
                (f"h{r},{c}", [f"x{r},{c}", f"x{r},{(c + 1) % cols}"], energy)
            )
            factors.append(
                (f"v{r},{c}", [f"x{r},{c}", f"x{(r + 1) % rows},{c}"], energy)
            )
    return build_graph(variables, factors)


def _symmetric_beliefs(graph: FactorGraph, x: float, y: float):
    table = np.array([[x, y], [y, 1.0 - x - 2.0 * y]])
    node = np.array([x + y, 1.0 - x - y])
    return _freeze_beliefs(
        [table] * graph.n_factors, [node] * graph.n_vars
    )


def _refined_axis(grid_resolution: int) -> np.ndarray:
    """Uniform axis plus decade points toward 0, where the basins pinch."""
    pts = set(float(v) for v in np.linspace(0.0, 1.0, grid_resolution))
    v = _REFINE_FLOOR
    while v < 1.0 / grid_resolution:
        pts.add(v)
        v *= 10.0
    return np.array(sorted(pts))


def emit_contour(potential_2x2, temperature_list, grid_resolution: int = 61, counts_mode: str = MODE_CONVEX):
    """Rows (T, x, y, F) over the feasible (x, y) simplex at each temperature.

    Grid points violating x, y >= 0 or x + 2y <= 1 are skipped.
    """
    if counts_mode not in (MODE_BETHE, MODE_CONVEX):
        raise ValueError(f"counts_mode must be '{MODE_BETHE}' or '{MODE_CONVEX}'")
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    graph = torus_grid_graph(potential_2x2)
    counts = bethe(graph) if counts_mode == MODE_BETHE else default_convex(graph)
    axis = _refined_axis(grid_resolution)
    rows = []
    for t in temperature_list:
        for x in axis:
            for y in axis:
                if x + 2.0 * y > 1.0 + 1e-12:
                    continue
                beliefs = _symmetric_beliefs(graph, float(x), float(y))
                rows.append((float(t), float(x), float(y), free_energy(graph, beliefs, counts, float(t))))
    return rows


def contour_csv(rows) -> str:
    lines = ["T,x,y,F"]
    for t, x, y, f in rows:
        lines.append(f"{t!r},{x!r},{y!r},{f!r}")
    return "\n".join(lines) + "\n"


def _sector_neighbors(points: tuple):
    """Symmetrized nearest neighbor per angular sector, cached per point set."""
    cached = _neighbor_cache.get(points)
    if cached is not None:
        return cached
    pts = np.asarray(points)
    n = len(pts)
    nbrs = [set() for _ in range(n)]
    for i in range(n):
        d = pts - pts[i]
        dist2 = (d ** 2).sum(axis=1)
        ang = np.arctan2(d[:, 1], d[:, 0])
        sector = ((ang + np.pi) / (2.0 * np.pi) * _SECTORS).astype(int) % _SECTORS
        for s in range(_SECTORS):
            mask = (sector == s) & (dist2 > 0)
            if mask.any():
                cand = np.flatnonzero(mask)
                nbrs[i].add(int(cand[np.argmin(dist2[mask])]))
    for i in range(n):
        for j in list(nbrs[i]):
            nbrs[j].add(i)
    if len(_neighbor_cache) > 4:
        _neighbor_cache.clear()
    _neighbor_cache[points] = nbrs
    return nbrs


def basin_cells(rows, temperature: float, min_persistence: float = 1e-13):
    """Persistent basins of the emitted landscape at one temperature.

    Floods points in order of increasing F through the sector-neighbor
    graph; a basin's persistence is the saddle height at which it merges
    into a deeper one, and only basins with persistence above
    ``min_persistence`` count. Returns a list of (x, y, F) basin floors,
    the global minimum always included.
    """
    sel = [(x, y, f) for t, x, y, f in rows if t == temperature]
    if not sel:
        raise ValueError(f"no rows at temperature {temperature}")
    points = tuple((x, y) for x, y, _ in sel)
    fs = np.array([f for _, _, f in sel])
    nbrs = _sector_neighbors(points)

    parent = {}
    floor = {}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    survivors = []
    for idx in np.argsort(fs, kind="stable"):
        idx = int(idx)
        roots = {find(j) for j in nbrs[idx] if j in parent}
        parent[idx] = idx
        if not roots:
            floor[idx] = fs[idx]
            continue
        deepest = min(roots, key=lambda r: (floor[r], r))
        parent[idx] = deepest
        for r in roots:
            if r == deepest:
                continue
            if fs[idx] - floor[r] >= min_persistence:
                survivors.append((points[r], floor[r]))
            parent[r] = deepest
    for c in list(parent):
        if find(c) == c:
            survivors.append((points[c], floor[c]))
    return sorted((x, y, float(f)) for (x, y), f in survivors)


def minimizing_cell(rows, temperature: float):
    """The (x, y) grid cell with the lowest F at one temperature."""
    best = None
    for t, x, y, f in rows:
        if t == temperature and (best is None or f < best[2]):
            best = (x, y, f)
    if best is None:
        raise ValueError(f"no rows at temperature {temperature}")
    return best
