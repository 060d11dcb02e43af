"""Random grid spin-glass instances for the regime study."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import FactorGraph, build_graph

# state s maps to spin 2s - 1, so state 0 is spin -1 and state 1 is spin +1
_SPINS = np.array([-1.0, 1.0])


@dataclass(frozen=True)
class SpinGlassSpec:
    rows: int = 3
    cols: int = 3
    sigma_field: float = 0.4
    sigma_coupling: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")
        if self.sigma_field < 0 or self.sigma_coupling < 0:
            raise ValueError("sigmas must be nonnegative")


def generate_spin_glass(spec: SpinGlassSpec) -> FactorGraph:
    """Non-toroidal grid with Gaussian fields and couplings.

    Energy E(x) = sum_i J_ii x_i + sum_<ij> J_ij x_i x_j over spins in
    {-1, +1}; one unary factor per node and one pairwise factor per
    4-neighbor grid edge.
    """
    rng = np.random.default_rng(spec.seed)
    variables = []
    unary = []
    pairwise = []

    def name(r, c):
        return f"x{r},{c}"

    for r in range(spec.rows):
        for c in range(spec.cols):
            variables.append((name(r, c), 2))
            j_ii = rng.normal(0.0, spec.sigma_field)
            unary.append((f"field{r},{c}", [name(r, c)], j_ii * _SPINS))
    for r in range(spec.rows):
        for c in range(spec.cols):
            if c + 1 < spec.cols:
                j = rng.normal(0.0, spec.sigma_coupling)
                pairwise.append(
                    (f"right{r},{c}", [name(r, c), name(r, c + 1)], j * np.outer(_SPINS, _SPINS))
                )
            if r + 1 < spec.rows:
                j = rng.normal(0.0, spec.sigma_coupling)
                pairwise.append(
                    (f"down{r},{c}", [name(r, c), name(r + 1, c)], j * np.outer(_SPINS, _SPINS))
                )
    return build_graph(variables, pairwise + unary)
