"""Command line front end.

Exit codes: 0 success, 2 invalid input or configuration, 3 solver
divergence, 4 no sources above the post-processing threshold.
"""

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import DivergenceError, SparseCSMError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_EMPTY = 4


def _k_arg(text):
    if text == "auto":
        return "auto"
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("k must be a positive integer or 'auto'") from None
    if k < 1:
        raise argparse.ArgumentTypeError("k must be >= 1")
    return k


def _bands_arg(text):
    try:
        return [int(b) for b in text.split(",") if b.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("bands must be a comma separated list of integers") from None


def build_parser():
    p = argparse.ArgumentParser(prog="sparsecsm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_opt(sp, required=True):
        sp.add_argument("--scenario", required=required,
                        help="scenario JSON file or name of a checked-in scenario")

    s = sub.add_parser("simulate", help="synthesise a CSM and steering matrix")
    scenario_opt(s)
    s.add_argument("--seed", type=int, help="synthesis seed (default: scenario seed)")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--bands", type=_bands_arg, help="comma separated band indices")

    s = sub.add_parser("solve", help="run a split Bregman solver")
    s.add_argument("--csm", required=True, type=Path)
    s.add_argument("--steering", required=True, type=Path)
    scenario_opt(s, required=False)
    s.add_argument("--mode", choices=["weighted", "structured"])
    s.add_argument("--out", required=True, type=Path)

    s = sub.add_parser("postprocess", help="cluster a solution into sources")
    s.add_argument("--report", required=True, type=Path)
    scenario_opt(s)
    s.add_argument("--k", type=_k_arg)
    s.add_argument("--threshold", type=float)
    s.add_argument("--truth", type=Path, help="truth.json to overlay on figures")
    s.add_argument("--no-figures", action="store_true")
    s.add_argument("--out", required=True, type=Path)

    s = sub.add_parser("evaluate", help="match estimates against ground truth")
    s.add_argument("--estimates", required=True, type=Path)
    s.add_argument("--truth", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)

    s = sub.add_parser("run-all", help="simulate, solve, postprocess and evaluate")
    scenario_opt(s)
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=["weighted", "structured"])
    s.add_argument("--k", type=_k_arg)
    s.add_argument("--threshold", type=float)
    s.add_argument("--bands", type=_bands_arg)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--no-figures", action="store_true")
    s.add_argument("--out", required=True, type=Path)
    return p


def _cmd_simulate(args):
    sc = pipeline.resolve_scenario(args.scenario)
    seed = sc.seed if args.seed is None else args.seed
    if args.bands:
        scs = [(b, sc.replace(band_index=b)) for b in args.bands]
        for b, s in scs:
            pipeline.simulate(s, seed, args.out / f"band_{b}")
    else:
        pipeline.simulate(sc, seed, args.out)


def _cmd_solve(args):
    if args.scenario:
        sc = pipeline.resolve_scenario(args.scenario)
        config = pipeline.solver_config_for(sc, args.mode)
    else:
        doc = {} if args.mode is None else {"mode": args.mode}
        config = pipeline.SolverConfig.from_dict(doc)
    pipeline.solve(args.csm, args.steering, config, args.out)


def _cmd_postprocess(args):
    sc = pipeline.resolve_scenario(args.scenario)
    options = pipeline.postprocess_options_for(sc, args.k, args.threshold)
    diag = pipeline.load_solution(args.report)
    truth = None
    truth_diag = None
    if args.truth:
        truth = pipeline.io.read_json(args.truth)["sources"]
        truth_diag = pipeline.true_solution(sc)
    pipeline.postprocess(diag, sc.grid, options, args.out, truth=truth,
                         truth_diag=truth_diag, figures=not args.no_figures)


def _cmd_evaluate(args):
    pipeline.evaluate_files(args.estimates, args.truth, args.out)


def _cmd_run_all(args):
    sc = pipeline.resolve_scenario(args.scenario)
    seed = sc.seed if args.seed is None else args.seed
    figures = not args.no_figures
    if args.bands:
        pipeline.run_bands(sc, args.bands, seed, args.out, args.mode, args.k, args.threshold,
                           figures, args.jobs)
    else:
        pipeline.run_all(sc, seed, args.out, args.mode, args.k, args.threshold, figures)


COMMANDS = {
    "simulate": _cmd_simulate,
    "solve": _cmd_solve,
    "postprocess": _cmd_postprocess,
    "evaluate": _cmd_evaluate,
    "run-all": _cmd_run_all,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except DivergenceError as exc:
        print(f"error: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except pipeline.NoSourcesDetected as exc:
        print(f"error: no sources detected: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (SparseCSMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
