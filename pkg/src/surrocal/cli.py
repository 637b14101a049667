"""Command-line harness.

Subcommands map onto the pipeline stages with file-based handoff:

    surrocal twin      --config run.cfg        # full synthetic-twin study
    surrocal ensemble  --config run.cfg        # design + run + dataset.csv
    surrocal fit       --config run.cfg        # dataset.csv -> surrogate.txt
    surrocal sample    --config run.cfg        # surrogate.txt -> chain.csv
    surrocal diagnose  --config run.cfg        # chain.csv -> diagnostics CSVs
    surrocal evaluate  --config run.cfg        # posterior vs prior skill

Exit status is 0 on success; failures print a stage-tagged message on
stderr and return a nonzero status.
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig, parse_config
from .errors import StageError, SurrocalError
from .pipeline import (
    run_twin,
    stage_diagnose,
    stage_ensemble,
    stage_evaluate,
    stage_fit,
    stage_sample,
)

STAGES = ("twin", "ensemble", "fit", "sample", "diagnose", "evaluate")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surrocal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", default=None, help="key=value run configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--workers", type=int, default=None, help="parallel model runs")
        p.add_argument("--out", default=None, help="artifact directory")
        p.add_argument("--split", action="store_true", help="3-year training / rest validation")
        if name in ("twin", "ensemble"):
            p.add_argument(
                "--export-forcing", action="store_true", help="also write forcing.csv"
            )
        if name in ("twin", "diagnose"):
            p.add_argument(
                "--study-sizes",
                default="",
                help="comma-separated ensemble sizes for the size-sensitivity study",
            )
    return parser


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.outdir = args.out
    if args.split:
        cfg.split = True
    cfg.__post_init__()  # revalidate after overrides
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        sizes = ()
        if getattr(args, "study_sizes", ""):
            sizes = tuple(int(s) for s in args.study_sizes.split(","))
        if args.command == "twin":
            run_twin(cfg, export_forcing=args.export_forcing, study_sizes=sizes)
        elif args.command == "ensemble":
            stage_ensemble(cfg, export_forcing=args.export_forcing)
        elif args.command == "fit":
            stage_fit(cfg)
        elif args.command == "sample":
            stage_sample(cfg)
        elif args.command == "diagnose":
            stage_diagnose(cfg, study_sizes=sizes)
        elif args.command == "evaluate":
            stage_evaluate(cfg)
    except StageError as exc:
        print(f"surrocal {args.command}: {exc}", file=sys.stderr)
        return 1
    except (SurrocalError, OSError, ValueError) as exc:
        print(f"surrocal {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
