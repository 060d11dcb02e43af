"""Model generators, file formats, experiment drivers, and the CLI."""

from .contour import basin_cells, contour_csv, emit_contour, minimizing_cell, torus_grid_graph
from .ldpc import LdpcCode, ldpc_to_graph, parse_alist, random_regular_code
from .spinglass import SpinGlassSpec, generate_spin_glass
from .study import ExperimentReport, preset_counts, run_ldpc_curve, run_regime_study
from .uai import parse_uai, write_uai

__all__ = [
    "ExperimentReport",
    "LdpcCode",
    "SpinGlassSpec",
    "basin_cells",
    "contour_csv",
    "emit_contour",
    "generate_spin_glass",
    "ldpc_to_graph",
    "minimizing_cell",
    "parse_alist",
    "parse_uai",
    "preset_counts",
    "random_regular_code",
    "run_ldpc_curve",
    "run_regime_study",
    "torus_grid_graph",
    "write_uai",
]
