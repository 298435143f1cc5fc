from __future__ import annotations

import dataclasses
import functools
import logging
import math
from typing import Any, Callable, Optional

import numpy as np

from ._config import CroftonConfig, ScanConfig, jsonschema_crofton_config
from ._poly import DEGENERATE, LevelFunction, SweepPolynomial, count_roots
from ._sampling import (
    POLYNOMIAL_STREAM,
    SCAN_CIRCLE_STREAM,
    block_ranges,
    circle_directions,
    derive_seed,
    generator,
    map_blocks,
    redraw_direction,
)
from .exceptions import DegenerateSamplingError, ParameterRangeError


@dataclasses.dataclass(frozen=True)
class CroftonEstimate:
    mean_count: float
    n_samples: int
    degenerate_redraws: int
    length_estimate: float
    standard_error: float

    def halved(self) -> CroftonEstimate:
        return dataclasses.replace(
            self,
            length_estimate=self.length_estimate / 2.0,
            standard_error=self.standard_error / 2.0,
        )

    def agrees_with(self, length: float, *, sigmas: float = 3.0) -> bool:
        return abs(self.length_estimate - length) <= sigmas * self.standard_error


def jsonschema_crofton_estimate() -> dict[str, Any]:
    schema = {
        "type": "object",
        "required": [
            "mean_count",
            "n_samples",
            "degenerate_redraws",
            "length_estimate",
            "standard_error",
        ],
        "additionalProperties": False,
        "properties": {
            "mean_count": {"type": "number", "minimum": 0.0},
            "n_samples": {"type": "integer", "minimum": 1},
            "degenerate_redraws": {"type": "integer", "minimum": 0},
            "length_estimate": {"type": "number", "minimum": 0.0},
            "standard_error": {"type": "number", "minimum": 0.0},
        },
    }
    return schema


@dataclasses.dataclass(frozen=True, eq=False)
class CroftonSamples:
    directions: np.ndarray
    counts: np.ndarray
    redraws: np.ndarray

    def estimate(self) -> CroftonEstimate:
        n = len(self.counts)
        mean = float(np.mean(self.counts))
        deviation = float(np.std(self.counts, ddof=1)) if n > 1 else 0.0
        # (1/4) * area(S^2) * E[count]
        return CroftonEstimate(
            mean_count=mean,
            n_samples=n,
            degenerate_redraws=int(np.sum(self.redraws)),
            length_estimate=math.pi * mean,
            standard_error=math.pi * deviation / math.sqrt(n),
        )

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "index": index,
                "xi_x": float(direction[0]),
                "xi_y": float(direction[1]),
                "xi_z": float(direction[2]),
                "count": int(count),
                "redraws": int(redraw),
            }
            for index, (direction, count, redraw) in enumerate(
                zip(self.directions, self.counts, self.redraws)
            )
        ]


def crofton_samples(
    level: LevelFunction,
    n_samples: int,
    seed: int,
    *,
    config: Optional[CroftonConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> CroftonSamples:
    config = config or CroftonConfig()
    logger = logger or logging.getLogger(__name__)
    if n_samples < 1:
        raise ParameterRangeError(f"n_samples must be >= 1: {n_samples}")
    if isinstance(level, SweepPolynomial) and level.is_zero():
        raise ParameterRangeError("the zero polynomial has no zero set to measure")
    blocks = block_ranges(n_samples, config.block_size)
    logger.debug(f"crofton: {n_samples} circles in {len(blocks)} blocks")
    parts = map_blocks(
        functools.partial(_count_block, level, seed, n_samples, config),
        blocks,
        workers=config.workers,
    )
    samples = CroftonSamples(
        directions=np.concatenate([part.directions for part in parts]),
        counts=np.concatenate([part.counts for part in parts]),
        redraws=np.concatenate([part.redraws for part in parts]),
    )
    if redraws := int(np.sum(samples.redraws)):
        logger.debug(f"crofton: {redraws} degenerate circles redrawn")
    return samples


def crofton_length_sphere(
    level: LevelFunction,
    n_samples: int,
    seed: int,
    *,
    config: Optional[CroftonConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> CroftonEstimate:
    return crofton_samples(
        level,
        n_samples,
        seed,
        config=config,
        logger=logger,
    ).estimate()


def mass_rp2(
    level: LevelFunction,
    n_samples: int,
    seed: int,
    *,
    config: Optional[CroftonConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> CroftonEstimate:
    if not level.antipodal_zero_set:
        raise ParameterRangeError("zero set is not antipodally symmetric")
    # the antipodal quotient halves the length of a symmetric curve
    return crofton_length_sphere(
        level,
        n_samples,
        seed,
        config=config,
        logger=logger,
    ).halved()


def _count_block(
    level: LevelFunction,
    seed: int,
    total: int,
    config: CroftonConfig,
    indices: range,
) -> CroftonSamples:
    directions = circle_directions(
        seed,
        indices,
        block_size=config.block_size,
        sampling=config.sampling,
        total=total,
    )
    counts = _count(level, directions, config)
    redraws = np.zeros(len(indices), dtype=int)
    for position in np.nonzero(counts == DEGENERATE)[0]:
        index = indices.start + int(position)
        attempt = 0
        while counts[position] == DEGENERATE:
            attempt += 1
            if attempt > config.max_retries:
                raise DegenerateSamplingError(
                    f"sample {index}: still degenerate after"
                    f" {config.max_retries} redraws"
                )
            directions[position] = redraw_direction(seed, index, attempt)
            counts[position] = _count(level, directions[position][None, :], config)[0]
        redraws[position] = attempt
    return CroftonSamples(directions=directions, counts=counts, redraws=redraws)


def _count(
    level: LevelFunction,
    directions: np.ndarray,
    config: CroftonConfig,
) -> np.ndarray:
    return count_roots(
        level,
        directions,
        policy=config.tangency_policy,
        tangency_tolerance=config.tangency_tolerance,
    )


@dataclasses.dataclass(frozen=True)
class BezoutViolation:
    poly_index: int
    circle_index: int
    count: int


@dataclasses.dataclass(frozen=True)
class BezoutAudit:
    d: int
    n_polys: int
    n_circles: int
    pairs: int
    bound: int
    max_count: int
    degenerate_redraws: int
    violations: list[BezoutViolation]

    @property
    def passed(self) -> bool:
        return not self.violations


def jsonschema_bezout_audit() -> dict[str, Any]:
    count = {"type": "integer", "minimum": 0}
    schema = {
        "type": "object",
        "required": [
            "d",
            "n_polys",
            "n_circles",
            "pairs",
            "bound",
            "max_count",
            "degenerate_redraws",
            "violations",
        ],
        "additionalProperties": False,
        "properties": {
            "d": {"type": "integer", "minimum": 1},
            "n_polys": count,
            "n_circles": count,
            "pairs": count,
            "bound": count,
            "max_count": count,
            "degenerate_redraws": count,
            "violations": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["poly_index", "circle_index", "count"],
                    "additionalProperties": False,
                    "properties": {
                        "poly_index": count,
                        "circle_index": count,
                        "count": count,
                    },
                },
            },
        },
    }
    return schema


def bezout_audit(
    # pylint: disable=too-many-arguments
    d: int,
    n_polys: int,
    n_circles: int,
    seed: int,
    *,
    config: Optional[CroftonConfig] = None,
    on_samples: Optional[Callable[[int, CroftonSamples], None]] = None,
    logger: Optional[logging.Logger] = None,
) -> BezoutAudit:
    config = config or CroftonConfig()
    logger = logger or logging.getLogger(__name__)
    if min(d, n_polys, n_circles) < 1:
        raise ParameterRangeError(
            f"d, n_polys and n_circles must be >= 1: {d}, {n_polys}, {n_circles}"
        )
    bound = 4 * d
    logger.info(f"bezout audit: d={d}, {n_polys} polynomials x {n_circles} circles")
    audited = map_blocks(
        functools.partial(
            _audit_polynomial,
            d,
            seed,
            n_circles,
            dataclasses.replace(config, workers=1),
        ),
        range(n_polys),
        workers=config.workers,
    )
    violations: list[BezoutViolation] = []
    max_count = 0
    redraws = 0
    for poly_index, samples in enumerate(audited):
        if on_samples is not None:
            on_samples(poly_index, samples)
        max_count = max(max_count, int(np.max(samples.counts)))
        redraws += int(np.sum(samples.redraws))
        for circle_index in np.nonzero(samples.counts > bound)[0]:
            violation = BezoutViolation(
                poly_index=poly_index,
                circle_index=int(circle_index),
                count=int(samples.counts[circle_index]),
            )
            logger.error(f"bezout bound {bound} violated: {violation}")
            violations.append(violation)
    logger.info(f"bezout audit: max count {max_count} (bound {bound})")
    return BezoutAudit(
        d=d,
        n_polys=n_polys,
        n_circles=n_circles,
        pairs=n_polys * n_circles,
        bound=bound,
        max_count=max_count,
        degenerate_redraws=redraws,
        violations=violations,
    )


def random_sweep_polynomial(d: int, seed: int, index: int) -> SweepPolynomial:
    return SweepPolynomial.random(d, generator(seed, POLYNOMIAL_STREAM, index))


def _audit_polynomial(
    d: int,
    seed: int,
    n_circles: int,
    config: CroftonConfig,
    index: int,
) -> CroftonSamples:
    polynomial = random_sweep_polynomial(d, seed, index)
    return crofton_samples(
        polynomial,
        n_circles,
        derive_seed(seed, index),
        config=config,
    )


@dataclasses.dataclass(frozen=True)
class SupMassReport:
    # pylint: disable=too-many-instance-attributes
    d: int
    n_params: int
    n_samples_per: int
    max_mass: float
    sampled_max: float
    argmax_index: int
    argmax_coeffs: list[float]
    bound: float
    slack: float
    refined: bool
    refine_iterations: int
    refine_accepted: int
    estimator: CroftonConfig

    @property
    def passed(self) -> bool:
        return self.max_mass <= self.bound + self.slack


def jsonschema_sup_mass_report() -> dict[str, Any]:
    count = {"type": "integer", "minimum": 0}
    number = {"type": "number"}
    schema = {
        "type": "object",
        "required": [
            "d",
            "n_params",
            "n_samples_per",
            "max_mass",
            "sampled_max",
            "argmax_index",
            "argmax_coeffs",
            "bound",
            "slack",
            "refined",
            "refine_iterations",
            "refine_accepted",
            "estimator",
        ],
        "additionalProperties": False,
        "properties": {
            "d": {"type": "integer", "minimum": 1},
            "n_params": count,
            "n_samples_per": count,
            "max_mass": number,
            "sampled_max": number,
            "argmax_index": count,
            "argmax_coeffs": {"type": "array", "items": number},
            "bound": number,
            "slack": number,
            "refined": {"type": "boolean"},
            "refine_iterations": count,
            "refine_accepted": count,
            "estimator": jsonschema_crofton_config(),
        },
    }
    return schema


def sup_mass_scan(
    # pylint: disable=too-many-arguments,too-many-locals
    d: int,
    n_params: int,
    n_samples_per: int,
    seed: int,
    refine: bool = False,
    *,
    config: Optional[CroftonConfig] = None,
    scan_config: Optional[ScanConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> SupMassReport:
    config = config or CroftonConfig()
    scan_config = scan_config or ScanConfig()
    logger = logger or logging.getLogger(__name__)
    if min(d, n_params, n_samples_per) < 1:
        raise ParameterRangeError(
            f"d, n_params and n_samples_per must be >= 1:"
            f" {d}, {n_params}, {n_samples_per}"
        )
    # every member is measured against the same circles
    circle_seed = derive_seed(seed, SCAN_CIRCLE_STREAM)
    serial = dataclasses.replace(config, workers=1)
    logger.info(f"sup-mass scan: d={d}, {n_params} members x {n_samples_per} circles")
    masses = map_blocks(
        functools.partial(_scan_member, d, seed, n_samples_per, circle_seed, serial),
        range(n_params),
        workers=config.workers,
    )
    argmax = int(np.argmax(masses))
    sampled_max = float(masses[argmax])
    best = random_sweep_polynomial(d, seed, argmax).coeffs.copy()
    logger.info(f"sup-mass scan: sampled max {sampled_max} at member {argmax}")
    # coordinate ascent from the best member
    max_mass = sampled_max
    iterations = 0
    accepted = 0
    if refine:
        measure = functools.partial(_member_mass, d, n_samples_per, circle_seed, serial)
        best, max_mass, iterations, accepted = _coordinate_ascent(
            measure,
            best,
            sampled_max,
            scan_config,
            logger,
        )
        logger.info(f"sup-mass scan: refined max {max_mass} ({accepted} moves)")
    return SupMassReport(
        d=d,
        n_params=n_params,
        n_samples_per=n_samples_per,
        max_mass=max_mass,
        sampled_max=sampled_max,
        argmax_index=argmax,
        argmax_coeffs=[float(value) for value in best],
        bound=2.0 * math.pi * d,
        slack=scan_config.slack,
        refined=refine,
        refine_iterations=iterations,
        refine_accepted=accepted,
        estimator=config,
    )


def _scan_member(
    d: int,
    seed: int,
    n_samples: int,
    circle_seed: int,
    config: CroftonConfig,
    index: int,
) -> float:
    coeffs = random_sweep_polynomial(d, seed, index).coeffs
    return _member_mass(d, n_samples, circle_seed, config, coeffs)


def _member_mass(
    d: int,
    n_samples: int,
    circle_seed: int,
    config: CroftonConfig,
    coeffs: np.ndarray,
) -> float:
    polynomial = SweepPolynomial(d, coeffs)
    return mass_rp2(polynomial, n_samples, circle_seed, config=config).length_estimate


def _coordinate_ascent(
    measure: Callable[[np.ndarray], float],
    start: np.ndarray,
    start_mass: float,
    config: ScanConfig,
    logger: logging.Logger,
) -> tuple[np.ndarray, float, int, int]:
    best, best_mass = start.copy(), start_mass
    step = config.initial_step
    accepted = 0
    iteration = 0
    for iteration in range(1, config.refine_iterations + 1):
        improved = False
        for axis in range(len(best)):
            for direction in (1.0, -1.0):
                trial = best.copy()
                trial[axis] += direction * step
                norm = float(np.linalg.norm(trial))
                if norm == 0.0:
                    continue
                try:
                    mass = measure(trial / norm)
                except DegenerateSamplingError as error:
                    logger.debug(f"refine: skip degenerate trial ({error})")
                    continue
                if mass > best_mass:
                    best, best_mass = trial / norm, mass
                    improved = True
                    accepted += 1
        if not improved:
            step /= 2.0
        logger.debug(f"refine {iteration}: mass={best_mass}, step={step}")
    return best, best_mass, iteration, accepted
