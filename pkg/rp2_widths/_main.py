import argparse
import dataclasses
import logging
import math
import pathlib
import sys
from typing import Any, Optional

import jsonschema

from ._commands import run_command
from ._config import Config, config_from_dict, load_config
from ._report import RunConfig, build_report, emit_report, load_report
from ._version import describe_version
from .exceptions import (
    AntipodalPairingError,
    DegenerateSamplingError,
    DriftBudgetError,
    NearSingularError,
    NoConvergenceError,
)

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

# option dest -> RunConfig field, shared by every experiment subcommand
_RUN_FIELDS = [field.name for field in dataclasses.fields(RunConfig)]


def rp2_widths(
    *,
    args: Optional[list[str]] = None,
    config: Optional[Config] = None,
    logger: Optional[logging.Logger] = None,
) -> int:
    # logger
    if logger is None:
        logger = logging.getLogger("rp2-widths")
        logger.setLevel(logging.INFO)
        handler = logging.StreamHandler()
        handler.formatter = logging.Formatter(
            fmt="%(asctime)s %(name)s:%(levelname)s:%(message)s"
        )
        logger.addHandler(handler)
    # option
    parser = _argument_parser()
    option = parser.parse_args(args=args)
    if option.verbose:
        logger.setLevel(logging.DEBUG)
    logger.debug(f"option: {option}")
    if option.command is None:
        parser.print_usage()
        return EXIT_USAGE
    try:
        # config TOML
        if config is None:
            config = load_config(option.config, logger=logger)
        # main
        if option.command == "replay":
            return _replay(option.report, logger=logger)
        return _execute(_run_config(option), config, logger=logger)
    # ValueError covers ParameterRangeError and malformed TOML or JSON
    except (
        ValueError,
        NearSingularError,
        DegenerateSamplingError,
        jsonschema.ValidationError,
        FileNotFoundError,
    ) as error:
        logger.error(f"{error.__class__.__name__}: {error}")
        return EXIT_USAGE
    except (NoConvergenceError, DriftBudgetError, AntipodalPairingError) as error:
        logger.error(f"{error.__class__.__name__}: {error}")
        return EXIT_CHECK_FAILED


def main() -> None:
    sys.exit(rp2_widths())


def _execute(
    run: RunConfig,
    config: Config,
    *,
    logger: logging.Logger,
) -> int:
    outcome = run_command(run, config, logger=logger)
    report = build_report(run, config, outcome, version=describe_version(logger=logger))
    emit_report(run, report, outcome, logger=logger)
    logger.info(f"{run.command}: {outcome.status}")
    return EXIT_PASS if outcome.passed else EXIT_CHECK_FAILED


def _replay(path: pathlib.Path, *, logger: logging.Logger) -> int:
    """Re-run a report's config and settings; pass iff the result is identical."""
    report, run = load_report(path, logger=logger)
    settings = config_from_dict(report["settings"], logger=logger)
    version = describe_version(logger=logger)
    if version != report["version"]:
        logger.warning(
            f'report from version "{report["version"]}", running "{version}"'
        )
    outcome = run_command(run, settings, logger=logger)
    rerun = build_report(run, settings, outcome, version=report["version"])
    if rerun != report:
        logger.error(f'replay of "{path}" differs from the stored report')
        return EXIT_CHECK_FAILED
    logger.info(f'replay of "{path}" reproduced the stored report')
    return EXIT_PASS


def _run_config(option: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {
        name: getattr(option, name) for name in _RUN_FIELDS if hasattr(option, name)
    }
    for name in ("out", "dump_samples"):
        if values.get(name) is not None:
            values[name] = str(values[name])
    return RunConfig(**values)


def _argument_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=__package__)
    _add_common_arguments(parser)
    output = _output_parser()
    # sub parser
    sub_parsers = parser.add_subparsers(
        dest="command",
        title="command",
        description="experiment to run",
    )
    # widths
    widths_parser = sub_parsers.add_parser(
        "widths",
        parents=[output],
        help="table of the p-widths of the round RP^2",
    )
    widths_parser.add_argument(
        "--p-max",
        dest="p_max",
        required=True,
        type=_positive_int,
    )
    # sweep-scan
    scan_parser = sub_parsers.add_parser(
        "sweep-scan",
        parents=[output],
        help="sampled supremum of the RP^2 mass over the sweepout family",
    )
    scan_parser.add_argument("--d", dest="d", required=True, type=_positive_int)
    scan_parser.add_argument(
        "--n-params",
        dest="n_params",
        required=True,
        type=_positive_int,
    )
    scan_parser.add_argument(
        "--n-samples",
        dest="n_samples",
        required=True,
        type=_positive_int,
    )
    scan_parser.add_argument(
        "--refine",
        dest="refine",
        action="store_true",
        help="coordinate ascent from the best sampled member",
    )
    # count-r
    count_parser = sub_parsers.add_parser(
        "count-r",
        parents=[output],
        help="size of the perturbed length spectrum against (d+1)(2d+5)",
    )
    count_parser.add_argument(
        "--d-max",
        dest="d_max",
        required=True,
        type=_non_negative_int,
    )
    # spectrum
    spectrum_parser = sub_parsers.add_parser(
        "spectrum",
        parents=[output],
        help="perturbed width spectrum for p < D(d+1)",
    )
    spectrum_parser.add_argument("--d", dest="d", required=True, type=_non_negative_int)
    spectrum_parser.add_argument(
        "--mu",
        dest="mu",
        type=float,
        help="perturbation size (default 1/(4(d+1)))",
    )
    # calibrate
    calibrate_parser = sub_parsers.add_parser(
        "calibrate",
        parents=[output],
        help="ellipsoid with axial lengths (2pi, 2pi+2mu, 2pi+4mu)",
    )
    _add_calibration_arguments(calibrate_parser)
    # crofton
    crofton_parser = sub_parsers.add_parser(
        "crofton",
        parents=[output],
        help="Crofton length estimate of a probe curve",
    )
    _add_probe_arguments(crofton_parser)
    crofton_parser.add_argument(
        "--n-samples", dest="n_samples", required=True, type=_positive_int
    )
    _add_dump_argument(crofton_parser)
    # trace
    trace_parser = sub_parsers.add_parser(
        "trace",
        parents=[output],
        help="trace a probe curve on the icosahedral grid",
    )
    _add_probe_arguments(trace_parser)
    trace_parser.add_argument(
        "--resolution",
        dest="resolution",
        type=_non_negative_int,
        help="grid subdivisions (default from config)",
    )
    # bezout-audit
    bezout_parser = sub_parsers.add_parser(
        "bezout-audit",
        parents=[output],
        help="check circle intersection counts against 4d",
    )
    bezout_parser.add_argument("--d", dest="d", required=True, type=_positive_int)
    bezout_parser.add_argument(
        "--n-polys",
        dest="n_polys",
        required=True,
        type=_positive_int,
    )
    bezout_parser.add_argument(
        "--n-circles", dest="n_circles", required=True, type=_positive_int
    )
    _add_dump_argument(bezout_parser)
    # basis
    basis_parser = sub_parsers.add_parser(
        "basis",
        parents=[output],
        help="monomial basis of the sweepout space",
    )
    basis_parser.add_argument("--d", dest="d", required=True, type=_positive_int)
    # geodesic
    geodesic_parser = sub_parsers.add_parser(
        "geodesic",
        parents=[output],
        help="integrate a geodesic of the calibrated ellipsoid",
    )
    _add_calibration_arguments(geodesic_parser)
    geodesic_parser.add_argument(
        "--axis",
        dest="axis",
        type=int,
        choices=[0, 1, 2, 3],
        default=2,
        help="axial geodesic to start on, 0 for generic data (default %(default)s)",
    )
    geodesic_parser.add_argument(
        "--max-arc",
        dest="max_arc",
        type=_positive_float,
        help=f"arc length to integrate (default {6.0 * math.pi:.4f})",
    )
    # replay
    replay_parser = sub_parsers.add_parser(
        "replay",
        help="re-run a JSON report and compare",
    )
    replay_parser.add_argument("report", metavar="REPORT", type=pathlib.Path)
    return parser


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    # config
    parser.add_argument(
        "--config",
        dest="config",
        default=None,
        metavar="TOML",
        type=pathlib.Path,
        help=".toml file with estimator settings",
    )
    # verbose
    parser.add_argument(
        "-v",
        "--verbose",
        dest="verbose",
        action="store_true",
        help="set log level to debug",
    )


def _output_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--seed",
        dest="seed",
        default=0,
        type=_non_negative_int,
        help="PRNG seed (default %(default)s)",
    )
    parser.add_argument(
        "--format",
        dest="format",
        default="json",
        choices=["json", "csv"],
        help="report format (default %(default)s)",
    )
    parser.add_argument(
        "--out",
        dest="out",
        default=None,
        metavar="PATH",
        type=pathlib.Path,
        help="report file (default standard output)",
    )
    return parser


def _add_calibration_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mu", dest="mu", required=True, type=float)
    parser.add_argument(
        "--tol",
        dest="tol",
        type=float,
        help="residual tolerance (default from config)",
    )


def _add_probe_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--probe",
        dest="probe",
        default="equator",
        choices=["equator", "latitude", "pencil", "polynomial", "random"],
        help="curve to measure (default %(default)s)",
    )
    parser.add_argument("--colatitude", dest="colatitude", type=float)
    parser.add_argument("--angle", dest="angle", type=float, help="pencil parameter t")
    parser.add_argument("--d", dest="d", type=_positive_int)
    parser.add_argument(
        "--coeffs",
        dest="coeffs",
        type=_float_list,
        metavar="C1,C2,...",
        help="coefficients in basis order",
    )


def _add_dump_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--dump-samples",
        dest="dump_samples",
        default=None,
        metavar="CSV",
        type=pathlib.Path,
        help="write one row per sample",
    )


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"must be > 0: {text}")
    return value


def _float_list(text: str) -> list[float]:
    return [float(value) for value in text.split(",")]
