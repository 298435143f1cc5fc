import dataclasses
import logging
import math
from typing import Any, Optional, TypeVar, cast

import jsonschema
import numpy as np

from ._combinatorics import (
    card_r_formula,
    counting_mu,
    enumerate_r,
    f_closed,
    f_interval,
    jsonschema_perturbed_width,
    jsonschema_spectrum_entry,
    perturbed_width_spectrum,
    spectrum_entries,
    width_jumps,
)
from ._config import Config
from ._curves import rp2_mass_from_trace, trace_level_set
from ._ellipsoid import (
    AxisIndex,
    axial_state,
    calibrate,
    gamma_length,
    geodesic_integrate,
    jsonschema_calibration,
    random_state,
)
from ._integral_geometry import (
    CroftonSamples,
    bezout_audit,
    crofton_samples,
    jsonschema_bezout_audit,
    jsonschema_sup_mass_report,
    random_sweep_polynomial,
    sup_mass_scan,
)
from ._poly import (
    LevelFunction,
    ProbeQuadric,
    SweepPolynomial,
    basis_table,
    build_basis,
    jsonschema_basis,
    pencil,
    pencil_mass_rp2,
)
from ._report import Outcome, RunConfig
from ._sampling import GEODESIC_STREAM, generator
from .exceptions import AntipodalPairingError, ParameterRangeError

T = TypeVar("T")

DEFAULT_COLATITUDE = math.pi / 3.0
# pencil member -(1 - 2 x^2) / sqrt(5)
DEFAULT_PENCIL_ANGLE = math.pi - math.atan(2.0)
DEFAULT_MAX_ARC = 6.0 * math.pi
# relative agreement of a traced length with its closed form
TRACE_TOLERANCE = 1e-3
CLOSURE_ARC_TOLERANCE = 1e-6


def run_command(
    run: RunConfig,
    settings: Config,
    *,
    logger: Optional[logging.Logger] = None,
) -> Outcome:
    logger = logger or logging.getLogger(__name__)
    logger.info(f"command: {run.command}")
    match run.command:
        case "widths":
            return _widths(_required(run.p_max, "p_max"))
        case "sweep-scan":
            report = sup_mass_scan(
                _required(run.d, "d"),
                _required(run.n_params, "n_params"),
                _required(run.n_samples, "n_samples"),
                run.seed,
                run.refine,
                config=settings.crofton,
                scan_config=settings.scan,
                logger=logger,
            )
            if not report.passed:
                logger.error(
                    f"max mass {report.max_mass} exceeds"
                    f" {report.bound} + {report.slack}"
                )
            return Outcome(
                result=_validated(
                    dataclasses.asdict(report), jsonschema_sup_mass_report()
                ),
                passed=report.passed,
            )
        case "count-r":
            return _count_r(_required(run.d_max, "d_max"), logger=logger)
        case "spectrum":
            return _spectrum(_required(run.d, "d"), run.mu)
        case "calibrate":
            calibration = calibrate(
                _required(run.mu, "mu"),
                run.tol,
                config=settings.calibration,
                logger=logger,
            )
            tol = settings.calibration.tol if run.tol is None else run.tol
            return Outcome(
                result=_validated(calibration.to_json(), jsonschema_calibration()),
                passed=calibration.residual <= tol,
            )
        case "crofton":
            return _crofton(run, settings, logger=logger)
        case "trace":
            return _trace(run, settings, logger=logger)
        case "bezout-audit":
            return _bezout_audit(run, settings, logger=logger)
        case "basis":
            table = _validated(
                basis_table(build_basis(_required(run.d, "d"))), jsonschema_basis()
            )
            return Outcome(result=table, passed=True, rows=table["monomials"])
        case "geodesic":
            return _geodesic(run, settings, logger=logger)


def probe_level(run: RunConfig) -> tuple[LevelFunction, Optional[float]]:
    """Level function selected by the probe flags and its known S^2 length."""
    match run.probe or "equator":
        case "equator":
            return ProbeQuadric.equator(), 2.0 * math.pi
        case "latitude":
            colatitude = (
                DEFAULT_COLATITUDE if run.colatitude is None else run.colatitude
            )
            if not 0.0 < colatitude < math.pi:
                raise ParameterRangeError(
                    f"colatitude must lie in (0, pi): {colatitude}"
                )
            expected = 2.0 * math.pi * math.sin(colatitude)
            return ProbeQuadric.latitude(colatitude), expected
        case "pencil":
            angle = DEFAULT_PENCIL_ANGLE if run.angle is None else run.angle
            return pencil(run.d or 1, angle), 2.0 * pencil_mass_rp2(angle)
        case "polynomial":
            d = _required(run.d, "d")
            coeffs = np.array(_required(run.coeffs, "coeffs"), dtype=float)
            if len(coeffs) != build_basis(d).dimension:
                raise ParameterRangeError(
                    f"expected {build_basis(d).dimension} coefficients"
                    f" for d={d}: {len(coeffs)}"
                )
            return SweepPolynomial(d, coeffs), None
        case "random":
            return random_sweep_polynomial(_required(run.d, "d"), run.seed, 0), None


def _widths(p_max: int) -> Outcome:
    rows = []
    for p in range(1, p_max + 1):
        interval, closed = f_interval(p), f_closed(p)
        rows.append(
            {
                "p": p,
                "d": interval - 1,
                "f": closed,
                "omega": 2.0 * math.pi * closed,
                "agree": interval == closed,
            }
        )
    passed = all(row["agree"] for row in rows)
    return Outcome(
        result={"rows": rows, "jumps": width_jumps(p_max)},
        passed=passed,
        rows=rows,
    )


def _count_r(d_max: int, *, logger: logging.Logger) -> Outcome:
    rows = []
    for d in range(d_max + 1):
        mu = counting_mu(d)
        enumerated = len(enumerate_r(d, mu))
        formula = card_r_formula(d)
        rows.append(
            {
                "d": d,
                "mu": mu,
                "enumerated": enumerated,
                "formula": formula,
                "match": enumerated == formula,
            }
        )
        if enumerated != formula:
            logger.error(f"|R| = {enumerated} for d={d}, expected {formula}")
    return Outcome(
        result={"rows": rows},
        passed=all(row["match"] for row in rows),
        rows=rows,
    )


def _spectrum(d: int, mu: Optional[float]) -> Outcome:
    mu = counting_mu(d) if mu is None else mu
    widths = perturbed_width_spectrum(d, mu)
    rows = [width.to_json() for width in widths]
    entries = [entry.to_json() for entry in spectrum_entries(d, mu)]
    increasing = all(a.value < b.value for a, b in zip(widths, widths[1:]))
    result = {
        "d": d,
        "mu": mu,
        "increasing": increasing,
        "entries": entries,
        "rows": rows,
    }
    return Outcome(
        result=_validated(result, _jsonschema_spectrum()),
        passed=increasing and all(width.within for width in widths),
        rows=rows,
    )


def _crofton(run: RunConfig, settings: Config, *, logger: logging.Logger) -> Outcome:
    level, expected = probe_level(run)
    samples = crofton_samples(
        level,
        _required(run.n_samples, "n_samples"),
        run.seed,
        config=settings.crofton,
        logger=logger,
    )
    sphere = samples.estimate()
    rp2 = sphere.halved() if level.antipodal_zero_set else None
    agrees = None if expected is None else sphere.agrees_with(expected)
    if agrees is False:
        logger.error(
            f"Crofton estimate {sphere.length_estimate} disagrees with {expected}"
        )
    return Outcome(
        result={
            "probe": run.probe or "equator",
            "sphere": dataclasses.asdict(sphere),
            "rp2": None if rp2 is None else dataclasses.asdict(rp2),
            "expected_sphere": expected,
            "agrees": agrees,
        },
        passed=agrees is not False,
        samples=samples.rows(),
    )


def _trace(run: RunConfig, settings: Config, *, logger: logging.Logger) -> Outcome:
    level, expected = probe_level(run)
    curve = trace_level_set(level, run.resolution, config=settings.trace, logger=logger)
    rp2_mass: Optional[float] = None
    if level.antipodal_zero_set:
        try:
            rp2_mass = rp2_mass_from_trace(curve)
        except AntipodalPairingError as error:
            logger.warning(f"no RP^2 mass: {error}")
    passed = True
    if expected is not None:
        error = abs(curve.total_length_sphere - expected)
        passed = error <= TRACE_TOLERANCE * max(expected, 1.0)
        if not passed:
            logger.error(
                f"traced length {curve.total_length_sphere} disagrees with {expected}"
            )
    return Outcome(
        result={
            "probe": run.probe or "equator",
            "curve": curve.to_json(),
            "rp2_mass": rp2_mass,
            "expected_sphere": expected,
        },
        passed=passed,
    )


def _bezout_audit(
    run: RunConfig,
    settings: Config,
    *,
    logger: logging.Logger,
) -> Outcome:
    samples: list[dict] = []

    def collect(index: int, part: CroftonSamples) -> None:
        samples.extend({"poly_index": index} | row for row in part.rows())

    audit = bezout_audit(
        _required(run.d, "d"),
        _required(run.n_polys, "n_polys"),
        _required(run.n_circles, "n_circles"),
        run.seed,
        config=settings.crofton,
        on_samples=collect if run.dump_samples is not None else None,
        logger=logger,
    )
    return Outcome(
        result=_validated(dataclasses.asdict(audit), jsonschema_bezout_audit()),
        passed=audit.passed,
        samples=samples if run.dump_samples is not None else None,
    )


def _geodesic(run: RunConfig, settings: Config, *, logger: logging.Logger) -> Outcome:
    calibration = calibrate(
        _required(run.mu, "mu"),
        run.tol,
        config=settings.calibration,
        logger=logger,
    )
    axis = 2 if run.axis is None else run.axis
    params = calibration.params
    if axis == 0:
        start = random_state(params, generator(run.seed, GEODESIC_STREAM))
        expected = None
    else:
        start = axial_state(cast(AxisIndex, axis), params)
        expected = gamma_length(cast(AxisIndex, axis), params)
    geodesic = geodesic_integrate(
        params,
        start,
        DEFAULT_MAX_ARC if run.max_arc is None else run.max_arc,
        stop_on_closure=axis != 0,
        config=settings.geodesic,
        logger=logger,
    )
    passed = True
    arc_error: Optional[float] = None
    if expected is not None:
        first = geodesic.first_return
        if first is not None:
            arc_error = abs(first.arc - expected)
        passed = (
            geodesic.closed
            and arc_error is not None
            and arc_error <= CLOSURE_ARC_TOLERANCE
        )
        if not passed:
            logger.error(f"axial geodesic {axis} did not close at arc {expected}")
    elif geodesic.closed:
        # empirical probe only
        logger.warning(
            f"generic geodesic returned within tolerance: {geodesic.first_return}"
        )
    return Outcome(
        result={
            "calibration": calibration.to_json(),
            "axis": axis,
            "run": geodesic.to_json(),
            "expected_arc": expected,
            "arc_error": arc_error,
        },
        passed=passed,
    )


def _jsonschema_spectrum() -> dict[str, Any]:
    schema = {
        "type": "object",
        "required": ["d", "mu", "increasing", "entries", "rows"],
        "additionalProperties": False,
        "properties": {
            "d": {"type": "integer", "minimum": 0},
            "mu": {"type": "number", "exclusiveMinimum": 0.0},
            "increasing": {"type": "boolean"},
            "entries": {"type": "array", "items": jsonschema_spectrum_entry()},
            "rows": {"type": "array", "items": jsonschema_perturbed_width()},
        },
    }
    return schema


def _validated(result: dict[str, Any], schema: dict[str, Any]) -> dict[str, Any]:
    # JSON Schema validation
    jsonschema.validate(instance=result, schema=schema)
    return result


def _required(value: Optional[T], name: str) -> T:
    if value is None:
        raise ParameterRangeError(f"missing parameter: {name}")
    return value
