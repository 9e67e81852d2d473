"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 Monte Carlo validation failure.
"""
import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import experiments
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DegenerateTrafficError, DomainError, InvariantViolation, ThresholdSolveError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3

log = logging.getLogger("crtraffic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crtraffic",
        description="Energy-detection sensing, throughput and outage of a secondary link under PU traffic.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file (defaults used when omitted)")
    common.add_argument("--out", type=Path, help="CSV output path (default: config output_path, else stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--mc-frames", type=int)

    roc = sub.add_parser("roc", parents=[common], help="P_F and P_D over a threshold sweep")
    roc.add_argument("--conventional", action="store_true", help="ignore PU traffic")
    sub.add_parser("tradeoff", parents=[common], help="sensing-throughput trade-off over sensing durations")
    sub.add_parser("traffic", parents=[common], help="throughput while alpha or beta varies")
    sub.add_parser("outage", parents=[common], help="outage over t_sense_ms, p_p or gamma_s_db")
    sub.add_parser("optimize", parents=[common], help="throughput-maximizing sensing duration")
    val = sub.add_parser("validate", parents=[common], help="analytic vs Monte Carlo comparison")
    val.add_argument("--mode", choices=("exact", "chain"), default="exact")
    val.add_argument("--workers", type=int, default=1)
    val.add_argument("--perturb-eta", type=float, default=0.0, help="debug: scale the simulated threshold by 1+x")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mc_frames is not None:
        overrides["mc_frames"] = args.mc_frames
    return dataclasses.replace(config, **overrides) if overrides else config


def _run(args, config):
    """Return (csv text, exit code)."""
    footer = None
    code = EXIT_OK
    if args.command == "roc":
        columns, rows = experiments.run_roc(config, conventional=args.conventional)
    elif args.command == "tradeoff":
        columns, rows, best = experiments.run_tradeoff(config)
        footer = f"argmax t_sense_ms={best[0]!r} r_total={best[3]!r}"
    elif args.command == "traffic":
        columns, rows = experiments.run_traffic_sweep(config)
    elif args.command == "outage":
        columns, rows = experiments.run_outage(config)
    elif args.command == "optimize":
        columns, rows = experiments.run_optimize(config)
    else:
        if args.workers < 1:
            raise ConfigError(f"--workers: must be >= 1, got {args.workers}")
        columns, rows = experiments.run_validate(config, args.mode, args.workers, args.perturb_eta)
        if not all(row[-1] for row in rows):
            code = EXIT_VALIDATION
    return experiments.write_csv(columns, rows, footer), code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = _resolve_config(args)
        text, code = _run(args, config)
    except (ConfigError, DomainError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ThresholdSolveError, InvariantViolation, DegenerateTrafficError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC

    out = args.out or (Path(config.output_path) if config.output_path else None)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        log.info("wrote %s", out)
    if code == EXIT_VALIDATION:
        log.error("validation failed: at least one |z| > %g", experiments.Z_LIMIT)
    return code


if __name__ == "__main__":
    sys.exit(main())
