"""Command-line interface.

Exit codes: 0 success, 2 certified failure (extraction tier `failed`),
3 input error, 4 budget or search limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..anneal import AnnealSchedule, solve_lp
from ..counting import NotCertified, bethe, certify_convexity
from ..engine import InferenceConfig, run
from ..errors import (
    BudgetExceeded,
    ComponentTooLarge,
    ConvexBPError,
    SearchLimitExceeded,
)
from ..extract import ExtractConfig, extract
from ..model import total_energy
from .contour import contour_csv, emit_contour
from .ldpc import parse_alist, random_regular_code
from .spinglass import SpinGlassSpec
from .study import PRESETS, preset_counts, run_ldpc_curve, run_regime_study
from .uai import parse_uai, write_uai

EXIT_OK = 0
EXIT_CERTIFIED_FAILURE = 2
EXIT_INPUT_ERROR = 3
EXIT_BUDGET = 4


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=PRESETS + ("bethe",), default="default",
                   help="counting-number preset (default: default convex)")
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--max-iterations", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-8, help="convergence tolerance on log messages")
    p.add_argument("--schedule", choices=("asynchronous", "synchronous"), default="asynchronous")
    p.add_argument("--seed", type=int, default=0)


def _counts_for(graph, preset: str):
    if preset == "bethe":
        counts = bethe(graph)
        cert = certify_convexity(graph, counts)
        return counts, (None if isinstance(cert, NotCertified) else cert)
    return preset_counts(graph, preset)


def _cmd_solve(args) -> int:
    graph = parse_uai(_read(args.model))
    counts, cert = _counts_for(graph, args.preset)
    config = InferenceConfig(
        semiring=args.semiring,
        temperature=args.temperature,
        damping=args.damping,
        max_iterations=args.max_iterations,
        convergence_tol=args.tol,
        schedule=args.schedule,
        seed=args.seed,
    )
    state, beliefs = run(graph, counts, config)
    out = {
        "converged": state.converged,
        "sweeps": state.iterations_run,
        "final_delta": state.final_delta,
        "var_beliefs": {name: beliefs.var_beliefs[i].tolist() for i, name in enumerate(graph.var_names)},
    }
    code = EXIT_OK
    if args.semiring == "max" and args.extract:
        if cert is None:
            print("counting numbers are not certified convex; cannot extract", file=sys.stderr)
            return EXIT_CERTIFIED_FAILURE
        if not state.converged:
            out["tier"] = "failed"
            out["detail"] = {"not_converged": f"final delta {state.final_delta:.3g}"}
            _write(args.output, json.dumps(out, sort_keys=True, indent=2) + "\n")
            return EXIT_CERTIFIED_FAILURE
        result = extract(graph, beliefs, counts, cert, ExtractConfig(
            tie_tol=args.tie_tol, search_limit=args.search_limit, component_cap=args.component_cap,
        ), messages=state)
        out["tier"] = result.tier
        out["residuals"] = {"admissibility": result.residuals[0], "max_marginalization": result.residuals[1]}
        if result.assignment is not None:
            out["assignment"] = {name: int(result.assignment[i]) for i, name in enumerate(graph.var_names)}
        if result.certified:
            out["energy"] = total_energy(graph, result.assignment)
        else:
            code = EXIT_CERTIFIED_FAILURE
            out["detail"] = {k: str(v) for k, v in result.detail.items()}
    _write(args.output, json.dumps(out, sort_keys=True, indent=2) + "\n")
    return code


def _cmd_anneal(args) -> int:
    graph = parse_uai(_read(args.model))
    counts, cert = _counts_for(graph, args.preset)
    if cert is None:
        print("counting numbers are not certified convex; annealing needs a certificate", file=sys.stderr)
        return EXIT_CERTIFIED_FAILURE
    schedule = AnnealSchedule(
        t_start=args.t_start,
        t_end=args.t_end,
        ratio=args.ratio,
        per_stage_config=InferenceConfig(
            semiring="sum",
            damping=args.damping,
            max_iterations=args.max_iterations,
            convergence_tol=args.tol,
            schedule=args.schedule,
            seed=args.seed,
        ),
        final_tol=args.final_tol,
    )
    lp = solve_lp(graph, counts, cert, schedule, tie_tol=args.tie_tol)
    out = {
        "objective": lp.objective,
        "integrality": lp.integrality,
        "fractional_vars": [graph.var_names[i] for i in sorted(lp.fractional_vars)],
        "stage_trace": [
            {"T": t, "sweeps": it, "objective": obj, "marginalization_residual": res}
            for t, it, obj, res in lp.stage_trace
        ],
    }
    _write(args.output, json.dumps(out, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def _cmd_certify(args) -> int:
    graph = parse_uai(_read(args.model))
    counts, _ = _counts_for(graph, args.preset)
    result = certify_convexity(graph, counts)
    if isinstance(result, NotCertified):
        out = {"certified": False, "reason": result.reason}
        _write(args.output, json.dumps(out, sort_keys=True, indent=2) + "\n")
        return EXIT_CERTIFIED_FAILURE
    out = {
        "certified": True,
        "identity_residual": result.identity_residual(graph, counts),
        "min_entry": result.min_entry(),
    }
    _write(args.output, json.dumps(out, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def _cmd_spinglass_study(args) -> int:
    spec = SpinGlassSpec(
        rows=args.rows, cols=args.cols,
        sigma_field=args.sigma_field, sigma_coupling=args.sigma_coupling,
    )
    report = run_regime_study(
        count=args.count, spec_template=spec, presets=tuple(args.presets),
        seed=args.seed, workers=args.workers,
    )
    _write(args.records, report.to_ndjson())
    _write(args.output, report.aggregates_csv())
    return EXIT_OK


def _cmd_ldpc_curve(args) -> int:
    if args.alist:
        code = parse_alist(_read(args.alist))
    else:
        code = random_regular_code(args.n, args.bit_degree, args.check_degree, seed=args.code_seed)
    report = run_ldpc_curve(
        code,
        crossover_list=tuple(args.crossover),
        trials=args.trials,
        preset=args.preset,
        seed=args.seed,
        workers=args.workers,
    )
    _write(args.records, report.to_ndjson())
    _write(args.output, report.aggregates_csv())
    return EXIT_OK


def _cmd_contour(args) -> int:
    psi = np.array(args.psi, dtype=float).reshape(2, 2)
    rows = emit_contour(psi, args.temperatures, grid_resolution=args.resolution, counts_mode=args.mode)
    _write(args.output, contour_csv(rows))
    return EXIT_OK


def _cmd_convert(args) -> int:
    graph = parse_uai(_read(args.model))
    _write(args.output, write_uai(graph))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convexbp",
        description="Belief propagation with convex free energies: LP annealing and certified MAP extraction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the engine on a UAI model, optionally extracting the MAP")
    p.add_argument("model", help="UAI MARKOV file, or - for stdin")
    p.add_argument("--semiring", choices=("sum", "max"), default="max")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--extract", action="store_true", help="run the extraction ladder (max semiring)")
    p.add_argument("--tie-tol", type=float, default=1e-6)
    p.add_argument("--search-limit", type=int, default=100_000)
    p.add_argument("--component-cap", type=int, default=2**20)
    p.add_argument("--output", default="-")
    _add_engine_flags(p)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("anneal", help="solve the MAP LP relaxation by temperature annealing")
    p.add_argument("model")
    p.add_argument("--t-start", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=1e-4)
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--tie-tol", type=float, default=1e-2)
    p.add_argument("--final-tol", type=float, default=1e-7,
                   help="convergence tolerance for the last stage (others use --tol scaled by T)")
    p.add_argument("--output", default="-")
    _add_engine_flags(p)
    # intermediate stages tolerate a loose delta; near the tie formation
    # temperature the iteration contracts too slowly for anything tighter
    p.set_defaults(fn=_cmd_anneal, max_iterations=20_000, tol=1e-3)

    p = sub.add_parser("certify", help="try to certify a counting-number preset as provably convex")
    p.add_argument("model")
    p.add_argument("--preset", choices=PRESETS + ("bethe",), default="bethe")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("spinglass-study", help="regime study over random grid spin glasses")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=3)
    p.add_argument("--sigma-field", type=float, default=0.4)
    p.add_argument("--sigma-coupling", type=float, default=1.0)
    p.add_argument("--presets", nargs="+", default=list(PRESETS), choices=PRESETS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--records", default="-", help="per-instance NDJSON output path")
    p.add_argument("--output", default="-", help="aggregate CSV output path")
    p.set_defaults(fn=_cmd_spinglass_study)

    p = sub.add_parser("ldpc-curve", help="decoding success rates over a BSC crossover sweep")
    p.add_argument("--alist", help="parity-check file in alist format")
    p.add_argument("--n", type=int, default=24)
    p.add_argument("--bit-degree", type=int, default=3)
    p.add_argument("--check-degree", type=int, default=6)
    p.add_argument("--code-seed", type=int, default=0)
    p.add_argument("--crossover", nargs="+", type=float,
                   default=[0.02, 0.04, 0.06, 0.08, 0.10, 0.12])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--preset", choices=PRESETS, default="trivial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--records", default="-")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_ldpc_curve)

    p = sub.add_parser("contour", help="free-energy landscape data over the symmetric belief slice")
    p.add_argument("--psi", nargs=4, type=float, default=[3.0, 1.0, 1.0, 2.0],
                   help="row-major symmetric 2x2 potential")
    p.add_argument("--temperatures", nargs="+", type=float, default=[1.0, 0.3, 0.1, 0.03])
    p.add_argument("--resolution", type=int, default=61)
    p.add_argument("--mode", choices=("bethe", "convex"), default="convex")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_contour)

    p = sub.add_parser("convert", help="parse a UAI model and write it back normalized")
    p.add_argument("model")
    p.add_argument("--output", default="-")
    p.set_defaults(fn=_cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (BudgetExceeded, SearchLimitExceeded, ComponentTooLarge) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConvexBPError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
