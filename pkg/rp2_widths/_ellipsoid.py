from __future__ import annotations

import dataclasses
import logging
import math
from typing import Any, Literal, Optional

import numpy as np
import scipy.integrate
import scipy.optimize

from ._config import CalibrationConfig, GeodesicConfig
from .exceptions import DriftBudgetError, NoConvergenceError, ParameterRangeError

AxisIndex = Literal[1, 2, 3]

MU_MAX = 0.1
STATE_TOLERANCE = 1e-9
_QUADRATURE_TOLERANCE = 1e-13
_LEAVE_RADIUS = 0.1
_SAMPLES_PER_ARC = 256
_MAX_HALVINGS = 30


@dataclasses.dataclass(frozen=True)
class EllipsoidParams:
    """Coefficients of a1 x1^2 + a2 x2^2 + a3 x3^2 = 1."""

    a1: float
    a2: float
    a3: float

    def __post_init__(self) -> None:
        for value in (self.a1, self.a2, self.a3):
            if not (math.isfinite(value) and value > 0.0):
                raise ParameterRangeError(
                    f"ellipsoid coefficients must be positive: {self}"
                )

    @classmethod
    def sphere(cls) -> EllipsoidParams:
        return cls(1.0, 1.0, 1.0)

    @classmethod
    def from_array(cls, values: np.ndarray) -> EllipsoidParams:
        return cls(*(float(value) for value in values))

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3])

    def constraint(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) ** 2 @ self.as_array() - 1.0


@dataclasses.dataclass(frozen=True)
class LengthVector:
    l1: float
    l2: float
    l3: float

    @property
    def rp2_lengths(self) -> tuple[float, float, float]:
        return (self.l1 / 2.0, self.l2 / 2.0, self.l3 / 2.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.l3])


@dataclasses.dataclass(frozen=True, eq=False)
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray
    arc_length: float = 0.0

    def residuals(self, a: EllipsoidParams) -> tuple[float, float, float]:
        """(constraint, tangency, speed) defects."""
        normal = a.as_array() * self.position
        constraint = abs(float(a.constraint(self.position)))
        tangency = abs(float(normal @ self.velocity)) / float(np.linalg.norm(normal))
        speed = abs(float(np.linalg.norm(self.velocity)) - 1.0)
        return constraint, tangency, speed

    def validate(self, a: EllipsoidParams, tolerance: float = STATE_TOLERANCE) -> None:
        constraint, tangency, speed = self.residuals(a)
        if max(constraint, tangency, speed) > tolerance:
            raise ParameterRangeError(
                f"invalid geodesic state: constraint {constraint},"
                f" tangency {tangency}, speed {speed}"
            )

    def to_json(self) -> dict[str, Any]:
        return {
            "position": [float(value) for value in self.position],
            "velocity": [float(value) for value in self.velocity],
            "arc_length": self.arc_length,
        }


def ellipse_perimeter(p: float, q: float) -> float:
    """Perimeter of the ellipse with semi-axes p and q by adaptive quadrature."""
    if p <= 0.0 or q <= 0.0:
        raise ParameterRangeError(f"semi-axes must be positive: {p}, {q}")
    # symmetric in (p, q) bit for bit
    p, q = sorted((p, q))
    quarter, _ = scipy.integrate.quad(
        lambda theta: math.hypot(p * math.sin(theta), q * math.cos(theta)),
        0.0,
        math.pi / 2.0,
        epsabs=_QUADRATURE_TOLERANCE,
        epsrel=_QUADRATURE_TOLERANCE,
        limit=200,
    )
    return 4.0 * quarter


def gamma_length(i: AxisIndex, a: EllipsoidParams) -> float:
    """Length of the planar geodesic E(a) ∩ {x_i = 0}; never reads a_i."""
    j, k = _complement(i)
    values = a.as_array()
    return ellipse_perimeter(
        1.0 / math.sqrt(values[j - 1]),
        1.0 / math.sqrt(values[k - 1]),
    )


def length_vector(a: EllipsoidParams) -> LengthVector:
    return LengthVector(gamma_length(1, a), gamma_length(2, a), gamma_length(3, a))


def jacobian_fd(a: EllipsoidParams, h: float = 1e-5) -> np.ndarray:
    """Central differences of length_vector; column j is d l / d a_j."""
    if not 1e-7 <= h <= 1e-3:
        raise ParameterRangeError(f"step must lie in [1e-7, 1e-3]: {h}")
    base = a.as_array()
    if np.min(base) <= h:
        raise ParameterRangeError(f"step {h} leaves the positive orthant at {a}")
    jacobian = np.empty((3, 3))
    for column in range(3):
        shift = np.zeros(3)
        shift[column] = h
        forward = length_vector(EllipsoidParams.from_array(base + shift)).as_array()
        backward = length_vector(EllipsoidParams.from_array(base - shift)).as_array()
        jacobian[:, column] = (forward - backward) / (2.0 * h)
    return jacobian


def length_targets(mu: float) -> np.ndarray:
    return 2.0 * math.pi + np.array([0.0, 2.0 * mu, 4.0 * mu])


@dataclasses.dataclass(frozen=True)
class Calibration:
    mu: float
    params: EllipsoidParams
    lengths: LengthVector
    residual: float
    iterations: int

    def to_json(self) -> dict[str, Any]:
        return {
            "mu": self.mu,
            "a": list(dataclasses.astuple(self.params)),
            "lengths": list(dataclasses.astuple(self.lengths)),
            "rp2_lengths": list(self.lengths.rp2_lengths),
            "residual": self.residual,
            "iterations": self.iterations,
        }


def jsonschema_calibration() -> dict[str, Any]:
    triple = {
        "type": "array",
        "items": {"type": "number"},
        "minItems": 3,
        "maxItems": 3,
    }
    schema = {
        "type": "object",
        "required": ["mu", "a", "lengths", "rp2_lengths", "residual", "iterations"],
        "additionalProperties": False,
        "properties": {
            "mu": {"type": "number", "minimum": 0.0, "maximum": MU_MAX},
            "a": triple,
            "lengths": triple,
            "rp2_lengths": triple,
            "residual": {"type": "number", "minimum": 0.0},
            "iterations": {"type": "integer", "minimum": 0},
        },
    }
    return schema


def calibrate(
    mu: float,
    tol: Optional[float] = None,
    *,
    config: Optional[CalibrationConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> Calibration:
    """Damped Newton for length_vector(a) = (2π, 2π+2μ, 2π+4μ) from (1, 1, 1)."""
    config = config or CalibrationConfig()
    logger = logger or logging.getLogger(__name__)
    tol = config.tol if tol is None else tol
    if not 0.0 <= mu <= MU_MAX:
        raise ParameterRangeError(f"mu must lie in [0, {MU_MAX}]: {mu}")
    if tol < 1e-12:
        raise ParameterRangeError(f"tol must be >= 1e-12: {tol}")
    target = length_targets(mu)
    params = EllipsoidParams.sphere()
    residual = length_vector(params).as_array() - target
    norm = float(np.max(np.abs(residual)))
    iterations = 0
    while norm > tol:
        if iterations >= config.max_iterations:
            raise NoConvergenceError(
                f"Newton did not reach {tol} in {iterations} iterations"
                f" (mu={mu}, residual {norm})"
            )
        step = np.linalg.solve(jacobian_fd(params, config.step), -residual)
        params, residual, norm = _damped_update(params, step, target, norm)
        iterations += 1
        logger.info(f"calibrate mu={mu}: iteration {iterations}, residual {norm:.3e}")
    lengths = length_vector(params)
    ordering = "a1 < a2 < a3" if params.a1 < params.a2 < params.a3 else "unordered"
    logger.info(f"calibrate mu={mu}: {params} ({ordering})")
    return Calibration(
        mu=mu,
        params=params,
        lengths=lengths,
        residual=norm,
        iterations=iterations,
    )


def _damped_update(
    params: EllipsoidParams,
    step: np.ndarray,
    target: np.ndarray,
    norm: float,
) -> tuple[EllipsoidParams, np.ndarray, float]:
    damping = 1.0
    for _ in range(_MAX_HALVINGS):
        trial = params.as_array() + damping * step
        if np.all(trial > 0.0):
            candidate = EllipsoidParams.from_array(trial)
            residual = length_vector(candidate).as_array() - target
            trial_norm = float(np.max(np.abs(residual)))
            if trial_norm < norm:
                return candidate, residual, trial_norm
        damping /= 2.0
    raise NoConvergenceError(
        f"no decreasing Newton step from {params} (residual {norm})"
    )


def axial_state(i: AxisIndex, a: EllipsoidParams) -> GeodesicState:
    """Start of γ_i: on the x_j axis, heading along x_k."""
    j, k = _complement(i)
    position = np.zeros(3)
    position[j - 1] = 1.0 / math.sqrt(a.as_array()[j - 1])
    velocity = np.zeros(3)
    velocity[k - 1] = 1.0
    return GeodesicState(position=position, velocity=velocity)


def random_state(a: EllipsoidParams, rng: np.random.Generator) -> GeodesicState:
    """Generic initial data: uniform direction scaled onto E(a), random unit tangent."""
    direction = rng.standard_normal(3)
    position = direction / math.sqrt(float(a.as_array() @ direction**2))
    normal = a.as_array() * position
    normal /= np.linalg.norm(normal)
    velocity = rng.standard_normal(3)
    velocity -= (normal @ velocity) * normal
    velocity /= np.linalg.norm(velocity)
    return GeodesicState(position=position, velocity=velocity)


@dataclasses.dataclass(frozen=True)
class ReturnPoint:
    arc: float
    distance: float


@dataclasses.dataclass(frozen=True, eq=False)
class GeodesicRun:
    # pylint: disable=too-many-instance-attributes
    params: EllipsoidParams
    start: GeodesicState
    final: GeodesicState
    trajectory: np.ndarray
    first_return: Optional[ReturnPoint]
    closest_return: Optional[ReturnPoint]
    closed: bool
    max_drift: float

    def to_json(self) -> dict[str, Any]:
        return {
            "a": list(dataclasses.astuple(self.params)),
            "start": self.start.to_json(),
            "final": self.final.to_json(),
            "first_return": _return_json(self.first_return),
            "closest_return": _return_json(self.closest_return),
            "closed": self.closed,
            "max_drift": self.max_drift,
        }


def jsonschema_geodesic_run() -> dict[str, Any]:
    vector = {
        "type": "array",
        "items": {"type": "number"},
        "minItems": 3,
        "maxItems": 3,
    }
    state = {
        "type": "object",
        "required": ["position", "velocity", "arc_length"],
        "additionalProperties": False,
        "properties": {
            "position": vector,
            "velocity": vector,
            "arc_length": {"type": "number", "minimum": 0.0},
        },
    }
    closest = {
        "oneOf": [
            {"type": "null"},
            {
                "type": "object",
                "required": ["arc", "distance"],
                "additionalProperties": False,
                "properties": {
                    "arc": {"type": "number"},
                    "distance": {"type": "number", "minimum": 0.0},
                },
            },
        ],
    }
    schema = {
        "type": "object",
        "required": [
            "a",
            "start",
            "final",
            "first_return",
            "closest_return",
            "closed",
            "max_drift",
        ],
        "additionalProperties": False,
        "properties": {
            "a": vector,
            "start": state,
            "final": state,
            "first_return": closest,
            "closest_return": closest,
            "closed": {"type": "boolean"},
            "max_drift": {"type": "number", "minimum": 0.0},
        },
    }
    return schema


def geodesic_integrate(
    a: EllipsoidParams,
    s0: GeodesicState,
    max_arc: float,
    *,
    stop_on_closure: bool = True,
    config: Optional[GeodesicConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> GeodesicRun:
    """Unit-speed geodesic of E(a) from s0, projected back onto the constraint
    after every chunk of arc.

    Returns are the local minima of |x(s) - x0| once the curve has left a small
    ball around x0; the first of them decides whether the geodesic closed.
    """
    # pylint: disable=too-many-locals
    config = config or GeodesicConfig()
    logger = logger or logging.getLogger(__name__)
    if max_arc <= 0.0:
        raise ParameterRangeError(f"max_arc must be positive: {max_arc}")
    s0.validate(a)
    coefficients = a.as_array()
    origin = s0.position
    y = np.concatenate([s0.position, s0.velocity])
    arc = s0.arc_length
    end_arc = arc + max_arc
    trajectory = [np.concatenate([[arc], s0.position])]
    returns: list[ReturnPoint] = []
    left = False
    previous_slope: Optional[float] = None
    max_drift = 0.0
    while arc < end_arc:
        chunk_end = min(arc + config.chunk_arc, end_arc)
        solution = scipy.integrate.solve_ivp(
            lambda _s, state: _geodesic_field(coefficients, state),
            (arc, chunk_end),
            y,
            method="DOP853",
            rtol=config.rtol,
            atol=config.atol,
            dense_output=True,
        )
        if not solution.success:
            raise DriftBudgetError(
                f"integrator failed at arc {arc}: {solution.message}"
            )
        n_grid = max(2, int(_SAMPLES_PER_ARC * (chunk_end - arc)) + 1)
        grid = np.linspace(arc, chunk_end, n_grid)
        states = solution.sol(grid)
        offsets = states[:3].T - origin
        distances = np.linalg.norm(offsets, axis=1)
        slopes = np.sum(offsets * states[3:].T, axis=1)
        for index in range(len(grid)):
            if not left:
                left = bool(distances[index] > _LEAVE_RADIUS)
            elif previous_slope is not None and previous_slope < 0.0 <= slopes[index]:
                returns.append(_refine_return(solution, origin, grid, index))
            previous_slope = float(slopes[index]) if left else None
        trajectory.extend(np.column_stack([grid[1:], states[:3, 1:].T]))
        # drift check, then projection back onto the constraint
        state = GeodesicState(position=solution.y[:3, -1], velocity=solution.y[3:, -1])
        drift = max(state.residuals(a))
        max_drift = max(max_drift, drift)
        if drift > config.drift_budget * config.chunk_arc:
            raise DriftBudgetError(
                f"drift {drift} over arc [{arc}, {chunk_end}] exceeds"
                f" {config.drift_budget} per unit arc"
            )
        y = _project(coefficients, solution.y[:, -1])
        arc = chunk_end
        logger.debug(
            f"geodesic: arc {arc:.3f}, drift {drift:.2e}, returns {len(returns)}"
        )
        first = returns[0] if returns else None
        if stop_on_closure and first and first.distance <= config.closure_tolerance:
            break
    first = returns[0] if returns else None
    closest = min(returns, key=lambda item: item.distance) if returns else None
    return GeodesicRun(
        params=a,
        start=s0,
        final=GeodesicState(position=y[:3], velocity=y[3:], arc_length=arc),
        trajectory=np.array(trajectory),
        first_return=first,
        closest_return=closest,
        closed=first is not None and first.distance <= config.closure_tolerance,
        max_drift=max_drift,
    )


def _geodesic_field(coefficients: np.ndarray, state: np.ndarray) -> np.ndarray:
    position, velocity = state[:3], state[3:]
    normal = coefficients * position
    # x'' = -(sum a_i v_i^2) / (sum a_i^2 x_i^2) * (a x)
    scale = (coefficients @ velocity**2) / (normal @ normal)
    return np.concatenate([velocity, -scale * normal])


def _project(coefficients: np.ndarray, state: np.ndarray) -> np.ndarray:
    position = state[:3] / math.sqrt(float(coefficients @ state[:3] ** 2))
    normal = coefficients * position
    normal /= np.linalg.norm(normal)
    velocity = state[3:] - (normal @ state[3:]) * normal
    return np.concatenate([position, velocity / np.linalg.norm(velocity)])


def _refine_return(
    solution: Any,
    origin: np.ndarray,
    grid: np.ndarray,
    index: int,
) -> ReturnPoint:
    def slope(s: float) -> float:
        state = solution.sol(s)
        return float((state[:3] - origin) @ state[3:])

    if index == 0:
        # minimum sits on the chunk boundary
        arc = float(grid[0])
    else:
        arc = float(
            scipy.optimize.brentq(slope, grid[index - 1], grid[index], xtol=1e-14)
        )
    distance = float(np.linalg.norm(solution.sol(arc)[:3] - origin))
    return ReturnPoint(arc=arc, distance=distance)


def _return_json(value: Optional[ReturnPoint]) -> Optional[dict[str, float]]:
    return None if value is None else dataclasses.asdict(value)


def _complement(i: AxisIndex) -> tuple[int, int]:
    if i not in (1, 2, 3):
        raise ParameterRangeError(f"axis index must be 1, 2 or 3: {i}")
    j, k = (axis for axis in (1, 2, 3) if axis != i)
    return j, k
