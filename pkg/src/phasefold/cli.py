"""Command-line experiment runner.

Subcommands map one-to-one onto the pipeline stages::

    phasefold simulate       sample a particle ensemble
    phasefold propagate-ekf  propagate the coordinate-filter moments
    phasefold propagate-eom  propagate the group moment expansion
    phasefold evaluate       score both propagators against the ensemble
    phasefold full           all of the above in sequence

Exit codes: 0 success, 2 configuration or missing-artifact problems,
3 propagation validity lost (partial results are flushed and an
``error.json`` record is written).
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import load_config
from .errors import ConfigError, GridMismatchError, PropagationValidityError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasefold",
        description="Orientation/angular-momentum uncertainty propagation benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "sample the particle ensemble"),
        ("propagate-ekf", "propagate the coordinate-filter mean/covariance"),
        ("propagate-eom", "propagate the group moment expansion"),
        ("evaluate", "compute metrics from existing stage artifacts"),
        ("full", "run every stage in sequence"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="INI configuration file")
        p.add_argument("--trajectory", type=int, choices=(1, 2), help="benchmark ramp id")
        p.add_argument("--particles", type=int, metavar="N", help="ensemble size")
        p.add_argument("--seed", type=int, metavar="S", help="base RNG seed")
        p.add_argument("--noise", type=float, metavar="B", help="noise scale b")
        p.add_argument("--viscous", type=float, metavar="C", help="viscous scale c")
        p.add_argument(
            "--paper-scale",
            action="store_true",
            help="use the full 5,000,000-particle ensemble",
        )
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument(
            "--dump-particles",
            action="store_true",
            default=None,
            help="also write per-snapshot particle CSVs",
        )
        p.add_argument(
            "--workers",
            type=int,
            default=None,
            help="sampler worker threads (default: PHASEFOLD_WORKERS or 1)",
        )
    return parser


_STAGES = {
    "simulate": lambda cfg, out, workers: pipeline.stage_simulate(cfg, out, workers),
    "propagate-ekf": lambda cfg, out, workers: pipeline.stage_propagate_ekf(cfg, out),
    "propagate-eom": lambda cfg, out, workers: pipeline.stage_propagate_eom(cfg, out),
    "evaluate": lambda cfg, out, workers: pipeline.stage_evaluate(cfg, out),
    "full": lambda cfg, out, workers: pipeline.stage_full(cfg, out, workers),
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "trajectory": args.trajectory,
        "particles": args.particles,
        "seed": args.seed,
        "noise": args.noise,
        "viscous": args.viscous,
        "out_dir": args.out,
        "dump_particles": args.dump_particles,
        "paper_scale": args.paper_scale or None,
    }
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as err:
        print(f"phasefold: {err}", file=sys.stderr)
        return 2

    try:
        _STAGES[args.command](cfg, args.out, args.workers)
    except FileNotFoundError as err:
        print(f"phasefold: {err}", file=sys.stderr)
        return 2
    except GridMismatchError as err:
        print(f"phasefold: snapshot grids do not line up: {err}", file=sys.stderr)
        return 2
    except PropagationValidityError as err:
        print(f"phasefold: {err} (partial results flushed)", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
