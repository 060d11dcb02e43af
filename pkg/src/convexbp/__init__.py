"""Factor-graph inference with convex free energies.

Builds discrete energy-based models, runs reweighted two-way belief
propagation in sum and max semirings under arbitrary counting numbers,
solves the MAP LP relaxation by temperature annealing, and extracts MAP
assignments with machine-checkable certificates.
"""

from .anneal import AnnealSchedule, LpSolution, classify_regime, lp_bound_check, solve_lp
from .beliefs import (
    BeliefSet,
    admissibility_residual,
    beliefs_from_messages,
    free_energy,
    lp_objective,
    marginalization_residual,
    max_marginalization_residual,
    sharpen,
    temperature_power,
)
from .counting import (
    ConvexityCertificate,
    CountingNumbers,
    NotCertified,
    bethe,
    certify_convexity,
    default_convex,
    trbp_from_edge_probs,
    trivial_convex,
)
from .engine import (
    InferenceConfig,
    MessageState,
    gamma,
    kernel_backend,
    run,
    run_ordinary_bp,
    uniform_messages,
)
from .extract import (
    ExtractConfig,
    MapCertificate,
    TiePartition,
    detect_ties,
    extract,
    extract_frustration_free,
    extract_no_ties,
    extract_with_frustrations,
    uniform_boundary_partial,
)
from .model import FactorGraph, build_graph, potential_power, total_energy
from .oracle import OracleBudget, brute_force_map, brute_force_marginals, ml_decode

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule",
    "BeliefSet",
    "ConvexityCertificate",
    "CountingNumbers",
    "ExtractConfig",
    "FactorGraph",
    "InferenceConfig",
    "LpSolution",
    "MapCertificate",
    "MessageState",
    "NotCertified",
    "OracleBudget",
    "TiePartition",
    "admissibility_residual",
    "beliefs_from_messages",
    "bethe",
    "brute_force_map",
    "brute_force_marginals",
    "build_graph",
    "certify_convexity",
    "classify_regime",
    "default_convex",
    "detect_ties",
    "extract",
    "extract_frustration_free",
    "extract_no_ties",
    "extract_with_frustrations",
    "free_energy",
    "gamma",
    "kernel_backend",
    "lp_bound_check",
    "lp_objective",
    "marginalization_residual",
    "max_marginalization_residual",
    "ml_decode",
    "potential_power",
    "run",
    "run_ordinary_bp",
    "sharpen",
    "solve_lp",
    "temperature_power",
    "total_energy",
    "trbp_from_edge_probs",
    "trivial_convex",
    "uniform_boundary_partial",
    "uniform_messages",
]
