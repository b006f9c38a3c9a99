"""Command-line entry point: figure datasets, sweeps, validation and the MCP server."""

import argparse
import csv
import logging
import os
import sys
from datetime import datetime
from pathlib import Path

from . import __version__
from .config import RunConfig, dump_config, parse_config
from .errors import ConfigError, FloquetReadoutError, NumericalError
from .hamiltonian import TARGETS, adiabatic_timescale, pseudo_faraday_eigensystem, resonant_detuning_for_readout
from .optics import branching_ratio
from .readout import Dataset, fig2, fig3, fig4, fig5, parameter_sweep
from .utils import PRESET_NAMES

logger = logging.getLogger(__name__)

THREADS_ENV = "FLOQUET_READOUT_THREADS"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3

DEFAULT_PRESETS = {"fig4": "paper-branching"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file with [drive], [rates], [readout], [engine] sections")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override one value, e.g. drive.Omega1p_GHz=0 (repeatable)")
    common.add_argument("--preset", choices=PRESET_NAMES,
                        help="Base preset (default: paper-branching for fig4, paper-sim otherwise)")
    common.add_argument("--out", help="Output CSV path (default: ./out/<subcommand>-<timestamp>.csv)")
    common.add_argument("--threads", type=int, help=f"Worker threads (fallback: ${THREADS_ENV}, then 1)")
    common.add_argument("--M", type=int, dest="M", help="Fixed Floquet truncation order")
    common.add_argument("--prob-model", choices=["poisson", "capped-linear"],
                        help="Photon detection probability model")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="floquet-readout",
        description="Floquet-Liouville simulation of AC-Stark-induced quantum-dot spin read-out",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fig2", parents=[common], help="Zeeman and AC Stark splittings")
    sub.add_parser("fig3", parents=[common], help="Voigt to pseudo-Faraday transition")
    sub.add_parser("fig4", parents=[common], help="Branching ratio versus Omega1p")
    sub.add_parser("fig5", parents=[common], help="Read-out time series and optimal window")
    sweep = sub.add_parser("sweep", parents=[common], help="Read-out over a grid of one parameter")
    sweep.add_argument("--param", required=True, help="Swept key, e.g. drive.Omega1p_GHz")
    sweep.add_argument("--values", required=True, nargs="+", type=float, help="Parameter values")
    validate = sub.add_parser("validate", parents=[common], help="Oracle-equivalence and invariant checks")
    validate.add_argument("--check", action="append", dest="checks", help="Run only this check (repeatable)")
    sub.add_parser("eigensystem", parents=[common], help="Labeled dressed eigensystem, r_B and resonant Delta2")
    serve = sub.add_parser("serve", help="Run the MCP server on stdio")
    serve.add_argument("--no-banner", action="store_true", help="Disable startup banner")
    serve.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    serve.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    return parser


def configure_logging(args) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def resolve_threads(threads: int | None) -> int | None:
    if threads is not None:
        return threads
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def load_run_config(args) -> RunConfig:
    """Preset, then --config file, then --set, then dedicated flags."""
    overrides = list(args.overrides)
    if args.M is not None:
        overrides.append(f"engine.M={args.M}")
    if args.prob_model is not None:
        overrides.append(f'readout.prob_model="{args.prob_model}"')
    threads = resolve_threads(args.threads)
    if threads is not None:
        overrides.append(f"engine.threads={threads}")
    preset = args.preset or DEFAULT_PRESETS.get(args.command, "paper-sim")
    if args.config and not Path(args.config).is_file():
        raise ConfigError(f"Config file not found: {args.config}")
    return parse_config(args.config, overrides=overrides, preset=preset)


def echo_config(cfg: RunConfig) -> None:
    for line in dump_config(cfg).splitlines():
        print(f"# {line}" if line else "#")


def format_value(value) -> str:
    return format(float(value), ".17g")


def write_csv(dataset: Dataset, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(dataset.columns)
        for row in dataset.rows:
            writer.writerow([format_value(v) for v in row])
    logger.info("Wrote %d rows to %s", len(dataset.rows), path)
    return path


def output_path(args) -> Path:
    if args.out:
        return Path(args.out)
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    return Path("out") / f"{args.command}-{stamp}.csv"


def print_summary(summary: dict) -> None:
    for key, value in summary.items():
        print(f"{key} = {value}")


def _sweep(cfg: RunConfig, args) -> Dataset:
    def make_config(value):
        return cfg.derive(args.param, value).readout

    return parameter_sweep(args.param, args.values, make_config, threads=cfg.threads or 1)


def _eigensystem(cfg: RunConfig) -> None:
    drive = cfg.drive
    es = pseudo_faraday_eigensystem(drive)
    print("label      frequency_GHz       |e,z+>   |e,z->   |t,z+>   |t,z->")
    for label, entry in es.as_dict().items():
        weights = "  ".join(f"{re * re + im * im:7.5f}" for re, im in entry["vector"])
        print(f"{label:<8} {entry['frequency_GHz']:18.9f}   {weights}")
    print_summary({
        "r_B": branching_ratio(drive, es=es),
        **{f"Delta2_GHz[{target}]": resonant_detuning_for_readout(drive, target) for target in TARGETS},
        "adiabatic_timescale_ns": adiabatic_timescale(drive),
    })


def run_command(cfg: RunConfig, args) -> int:
    if args.command == "eigensystem":
        _eigensystem(cfg)
        return EXIT_OK
    if args.command == "validate":
        from .validation import run_validation

        results = run_validation(cfg, args.checks)
        for result in results:
            print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
        return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION

    if args.command == "fig2":
        dataset = fig2(cfg.drive)
    elif args.command == "fig3":
        dataset = fig3(cfg.drive)
    elif args.command == "fig4":
        dataset = fig4(cfg.drive)
    elif args.command == "fig5":
        dataset = fig5(cfg.readout)
    else:
        dataset = _sweep(cfg, args)
    path = write_csv(dataset, output_path(args))
    print_summary(dataset.summary)
    print(f"output = {path}")
    return EXIT_OK


def main(argv=None) -> int:
    """Entry point for the floquet-readout command."""
    args = build_parser().parse_args(argv)
    configure_logging(args)

    if args.command == "serve":
        from .server import serve

        serve(show_banner=not args.no_banner)
        return EXIT_OK

    try:
        cfg = load_run_config(args)
        echo_config(cfg)
        return run_command(cfg, args)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error("Numerical failure: %s", e)
        return EXIT_NUMERICAL
    except FloquetReadoutError as e:
        logger.error("Invalid parameters: %s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
