"""Command line interface.

    mixlap run <config.json> [--out DIR] [--threads K] [--no-figures]
    mixlap sweep --sigma 0.3,0.4 --p 1.5,2.0 [--n 128,1024,4096] [...]
    mixlap rates --kind decay|blowup|singular_source [--sigma S] [--p P] [...]

Exit codes: 0 all asserted verdicts pass, 1 an experiment verdict failed,
2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, ExperimentFailure, MixlapError
from .experiments import dichotomy_sweep, rates, run_config


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _add_common(sub):
    sub.add_argument("--out", default=".", help="output directory (default: cwd)")
    sub.add_argument("--threads", type=int, default=1, help="worker processes")
    sub.add_argument("--no-figures", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixlap", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sp = ap.add_subparsers(dest="command", required=True)

    run = sp.add_parser("run", help="run an experiment described by a JSON config")
    run.add_argument("config", help="path to the config file")
    _add_common(run)

    sweep = sp.add_parser("sweep", help="boundary-attainment phase diagram over (sigma, p)")
    sweep.add_argument("--sigma", required=True, help="comma-separated sigma values")
    sweep.add_argument("--p", required=True, help="comma-separated p values")
    sweep.add_argument("--n", default="128,1024,4096",
                       help="mesh ladder for the two refinements")
    sweep.add_argument("--gap-threshold", type=float, default=0.02)
    sweep.add_argument("--refine-factor", type=float, default=1.5)
    _add_common(sweep)

    rt = sp.add_parser("rates", help="boundary exponent and floor experiments")
    rt.add_argument("--kind", required=True,
                    choices=["decay", "blowup", "singular_source"])
    rt.add_argument("--sigma", type=float, default=0.4)
    rt.add_argument("--p", type=float, default=2.0)
    rt.add_argument("--kappa", type=float, default=1.0)
    rt.add_argument("--n", default=None, help="mesh list (decay/singular) or single mesh (blowup)")
    _add_common(rt)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    figures = not args.no_figures
    try:
        if args.command == "run":
            bundle = run_config(args.config, out_dir=args.out,
                                threads=args.threads, figures=figures,
                                strict=True)
        elif args.command == "sweep":
            cfg = {
                "kind": "dichotomy_sweep",
                "sweep": {
                    "n_levels": _ints(args.n),
                    "gap_threshold": args.gap_threshold,
                    "refine_factor": args.refine_factor,
                },
            }
            bundle = dichotomy_sweep(_floats(args.sigma), _floats(args.p), cfg,
                                     out_dir=args.out, threads=args.threads,
                                     figures=figures)
        else:
            cfg = {"kind": "rates",
                   "physics": {"sigma": args.sigma, "p": args.p, "kappa": args.kappa},
                   "rates": {"rate_kind": args.kind}}
            if args.n:
                if args.kind == "blowup":
                    cfg["geometry"] = {"n": int(args.n)}
                else:
                    cfg["rates"]["n_levels"] = _ints(args.n)
            bundle = rates(args.kind, cfg, out_dir=args.out, figures=figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentFailure as exc:
        if exc.bundle is not None:
            _print_verdicts(exc.bundle)
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    except MixlapError as exc:
        print(f"experiment failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    _print_verdicts(bundle)
    if not bundle.all_passed:
        return 1
    return 0


def _print_verdicts(bundle) -> None:
    for v in bundle.verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(f"[{status}] {v.criterion}: measured={v.measured} target={v.target} "
              f"tol={v.tolerance}")


if __name__ == "__main__":
    sys.exit(main())
