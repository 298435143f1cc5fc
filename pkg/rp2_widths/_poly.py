from __future__ import annotations

import dataclasses
import functools
import math
from typing import Any, Literal, Optional, Protocol

import numpy as np
import numpy.typing as npt
import scipy.optimize

from ._combinatorics import dim_d
from ._config import TangencyPolicy
from .exceptions import ParameterRangeError

Monomial = tuple[int, int]
RootCount = int | Literal["degenerate"]

# sentinel used by the vectorised counter for degenerate circles
DEGENERATE = -1
# restrictions whose sampled max is below this are identically zero
ZERO_RESTRICTION = 1e-12
# a sign-preserving local minimum of |r| below this fraction of the sampled max
# may hide a pair of crossings inside one sampling cell (Bernstein bound for
# trigonometric polynomials of degree 2d sampled 64d+64 times)
HIDDEN_PAIR_RATIO = 5e-3
UNIT_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True)
class MonomialBasis:
    d: int
    even: tuple[Monomial, ...]
    odd: tuple[Monomial, ...]

    @property
    def degree_cap(self) -> tuple[int, int]:
        return (2 * self.d, 2 * self.d - 1)

    @property
    def dimension(self) -> int:
        return len(self.even) + len(self.odd)

    def labels(self) -> list[str]:
        return [_monomial_label(m) for m in self.even] + [
            _monomial_label(m, z=True) for m in self.odd
        ]

    def index(self, monomial: Monomial, *, z: bool = False) -> int:
        if z:
            return len(self.even) + self.odd.index(monomial)
        return self.even.index(monomial)


def jsonschema_basis() -> dict[str, Any]:
    schema = {
        "type": "object",
        "required": ["d", "dimension", "monomials"],
        "additionalProperties": False,
        "properties": {
            "d": {"type": "integer", "minimum": 1},
            "dimension": {"type": "integer", "minimum": 1},
            "monomials": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["slot", "label", "x", "y", "z"],
                    "additionalProperties": False,
                    "properties": {
                        "slot": {"type": "integer", "minimum": 1},
                        "label": {"type": "string"},
                        "x": {"type": "integer", "minimum": 0},
                        "y": {"type": "integer", "minimum": 0},
                        "z": {"enum": [0, 1]},
                    },
                },
            },
        },
    }
    return schema


@functools.cache
def build_basis(d: int) -> MonomialBasis:
    """Graded basis: by total degree, then by decreasing power of x.

    Slot 1 is the constant 1 and slot 2 is x^2.
    """
    if d < 1:
        raise ParameterRangeError(f"d must be >= 1: {d}")
    even = tuple(_graded_monomials(range(0, 2 * d + 1, 2)))
    odd = tuple(_graded_monomials(range(1, 2 * d, 2)))
    return MonomialBasis(d=d, even=even, odd=odd)


def basis_table(basis: MonomialBasis) -> dict[str, Any]:
    monomials = [
        {"slot": slot, "label": label, "x": i, "y": j, "z": z}
        for slot, (label, (i, j), z) in enumerate(
            zip(
                basis.labels(),
                [*basis.even, *basis.odd],
                [0] * len(basis.even) + [1] * len(basis.odd),
            ),
            start=1,
        )
    ]
    return {"d": basis.d, "dimension": basis.dimension, "monomials": monomials}


class LevelFunction(Protocol):
    """A function on R^3 whose zero set on S^2 is measured."""

    @property
    def degree_parameter(self) -> int: ...

    @property
    def antipodal_zero_set(self) -> bool: ...

    def __call__(self, points: npt.ArrayLike) -> np.ndarray: ...

    def gradient(self, points: npt.ArrayLike) -> np.ndarray: ...


@dataclasses.dataclass(frozen=True, eq=False)
class SweepPolynomial:
    """f(x, y) + z g(x, y) with f even of degree <= 2d and g odd of degree <= 2d-1."""

    d: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (dim_d(self.d),):
            raise ParameterRangeError(
                f"expected {dim_d(self.d)} coefficients for d={self.d}:"
                f" got shape {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def basis(self) -> MonomialBasis:
        return build_basis(self.d)

    @property
    def degree_parameter(self) -> int:
        return self.d

    @property
    def antipodal_zero_set(self) -> bool:
        return True

    @property
    def z2_invariant(self) -> bool:
        return True

    @property
    def even_coeffs(self) -> np.ndarray:
        return self.coeffs[: len(self.basis.even)]

    @property
    def odd_coeffs(self) -> np.ndarray:
        return self.coeffs[len(self.basis.even) :]

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def normalized(self) -> SweepPolynomial:
        norm = float(np.linalg.norm(self.coeffs))
        if norm == 0.0:
            raise ParameterRangeError(
                "the zero vector does not define a sweepout member"
            )
        return SweepPolynomial(self.d, self.coeffs / norm)

    def __call__(self, points: npt.ArrayLike) -> np.ndarray:
        q = np.asarray(points, dtype=float)
        x, y, z = q[..., 0], q[..., 1], q[..., 2]
        even = _monomial_values(self.basis.even, x, y)
        odd = _monomial_values(self.basis.odd, x, y)
        return even @ self.even_coeffs + z * (odd @ self.odd_coeffs)

    def gradient(self, points: npt.ArrayLike) -> np.ndarray:
        q = np.asarray(points, dtype=float)
        x, y, z = q[..., 0], q[..., 1], q[..., 2]
        basis = self.basis
        even_dx, even_dy = _monomial_derivatives(basis.even, x, y)
        odd_dx, odd_dy = _monomial_derivatives(basis.odd, x, y)
        odd = _monomial_values(basis.odd, x, y) @ self.odd_coeffs
        grad_x = even_dx @ self.even_coeffs + z * (odd_dx @ self.odd_coeffs)
        grad_y = even_dy @ self.even_coeffs + z * (odd_dy @ self.odd_coeffs)
        return np.stack([grad_x, grad_y, odd], axis=-1)

    @classmethod
    def from_terms(
        cls,
        d: int,
        *,
        even: Optional[dict[Monomial, float]] = None,
        odd: Optional[dict[Monomial, float]] = None,
    ) -> SweepPolynomial:
        """Build from {(i, j): c} maps; odd terms are multiplied by z."""
        basis = build_basis(d)
        coeffs = np.zeros(basis.dimension)
        for monomial, value in (even or {}).items():
            coeffs[basis.index(monomial)] = value
        for monomial, value in (odd or {}).items():
            coeffs[basis.index(monomial, z=True)] = value
        return cls(d, coeffs)

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> SweepPolynomial:
        """Uniform on the unit sphere of R^D(d)."""
        coeffs = rng.standard_normal(dim_d(d))
        return cls(d, coeffs / np.linalg.norm(coeffs))


def evaluate(polynomial: LevelFunction, point: npt.ArrayLike) -> float:
    return float(polynomial(point))


def pencil(d: int, angle: float) -> SweepPolynomial:
    """Member [cos t : sin t : 0 : ... : 0] of F_d, i.e. cos t + sin t x^2."""
    return SweepPolynomial.from_terms(
        d,
        even={(0, 0): math.cos(angle), (2, 0): math.sin(angle)},
    )


def pencil_mass_rp2(angle: float) -> float:
    """Closed-form RP^2 mass of the pencil member at angle t."""
    if math.sin(angle) == 0.0:
        return 0.0
    # zero set {x^2 = c} on S^2: two circles of radius sqrt(1 - c)
    c = -math.cos(angle) / math.sin(angle)
    if not 0.0 < c < 1.0:
        return 0.0
    return 2.0 * math.pi * math.sqrt(1.0 - c)


@dataclasses.dataclass(frozen=True, eq=False)
class ProbeQuadric:
    """c + b.q + q^T A q, a non-invariant probe used only to validate estimators."""

    constant: float = 0.0
    linear: tuple[float, float, float] = (0.0, 0.0, 0.0)
    quadratic: tuple[tuple[float, float, float], ...] = (
        (0.0, 0.0, 0.0),
        (0.0, 0.0, 0.0),
        (0.0, 0.0, 0.0),
    )
    z2_invariant: bool = dataclasses.field(default=False, init=False)

    @property
    def degree_parameter(self) -> int:
        return 1

    @property
    def antipodal_zero_set(self) -> bool:
        # homogeneous forms vanish on antipodally symmetric sets
        return self.constant == 0.0 and (
            not any(self.linear) or not np.any(self.quadratic)
        )

    def __call__(self, points: npt.ArrayLike) -> np.ndarray:
        q = np.asarray(points, dtype=float)
        a = np.asarray(self.quadratic, dtype=float)
        quadratic = np.einsum("...i,ij,...j->...", q, a, q)
        return self.constant + q @ np.asarray(self.linear, dtype=float) + quadratic

    def gradient(self, points: npt.ArrayLike) -> np.ndarray:
        q = np.asarray(points, dtype=float)
        a = np.asarray(self.quadratic, dtype=float)
        return np.asarray(self.linear, dtype=float) + q @ (a + a.T)

    @classmethod
    def equator(cls) -> ProbeQuadric:
        return cls(linear=(0.0, 0.0, 1.0))

    @classmethod
    def plane(cls, normal: tuple[float, float, float]) -> ProbeQuadric:
        return cls(linear=normal)

    @classmethod
    def latitude(cls, colatitude: float) -> ProbeQuadric:
        return cls(constant=-math.cos(colatitude), linear=(0.0, 0.0, 1.0))


@dataclasses.dataclass(frozen=True, eq=False)
class CircleRestriction:
    """theta -> P(u cos theta + v sin theta) on the great circle normal to xi."""

    level: LevelFunction
    xi: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def points(self, theta: npt.ArrayLike) -> np.ndarray:
        t = np.asarray(theta, dtype=float)[..., None]
        return np.cos(t) * self.u + np.sin(t) * self.v

    def __call__(self, theta: npt.ArrayLike) -> np.ndarray:
        return self.level(self.points(theta))

    def derivative(self, theta: npt.ArrayLike) -> np.ndarray:
        t = np.asarray(theta, dtype=float)[..., None]
        tangent = -np.sin(t) * self.u + np.cos(t) * self.v
        return np.sum(self.level.gradient(self.points(theta)) * tangent, axis=-1)


def default_sample_count(d: int) -> int:
    return 64 * d + 64


def circle_frames(xis: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal frames {u, v, xi}: u from Gram-Schmidt on the axis of the
    smallest |xi| component (first index on ties), v = xi x u."""
    xi = np.asarray(xis, dtype=float)
    axis = np.argmin(np.abs(xi), axis=-1)
    e = np.zeros_like(xi)
    np.put_along_axis(e, axis[..., None], 1.0, axis=-1)
    u = e - np.sum(e * xi, axis=-1, keepdims=True) * xi
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    v = np.cross(xi, u)
    return u, v


def restrict_to_circle(level: LevelFunction, xi: npt.ArrayLike) -> CircleRestriction:
    normal = np.asarray(xi, dtype=float)
    if normal.shape != (3,) or abs(np.linalg.norm(normal) - 1.0) > UNIT_TOLERANCE:
        raise ParameterRangeError(f"xi must be a unit vector in R^3: {normal}")
    u, v = circle_frames(normal)
    return CircleRestriction(level=level, xi=normal, u=u, v=v)


def count_circle_roots(
    restriction: CircleRestriction,
    policy: TangencyPolicy = "retry",
    *,
    tangency_tolerance: float = 1e-9,
    n_samples: Optional[int] = None,
) -> RootCount:
    counts = count_roots(
        restriction.level,
        restriction.xi[None, :],
        policy=policy,
        tangency_tolerance=tangency_tolerance,
        n_samples=n_samples,
    )
    if counts[0] == DEGENERATE:
        return "degenerate"
    return int(counts[0])


def count_roots(
    level: LevelFunction,
    xis: npt.ArrayLike,
    *,
    policy: TangencyPolicy = "retry",
    tangency_tolerance: float = 1e-9,
    n_samples: Optional[int] = None,
    bisection_steps: int = 40,
) -> np.ndarray:
    """Transverse crossings of {level = 0} with each great circle xi^perp.

    Dense sampling locates sign changes, vectorised bisection isolates each
    crossing and the slope there classifies tangencies. Degenerate circles
    (identically zero restriction or a tangency under the retry policy) are
    reported as DEGENERATE.
    """
    # pylint: disable=too-many-arguments,too-many-locals
    normals = np.atleast_2d(np.asarray(xis, dtype=float))
    n = n_samples or default_sample_count(level.degree_parameter)
    step = 2.0 * math.pi / n
    theta = step * np.arange(n)
    u, v = circle_frames(normals)
    cos, sin = np.cos(theta)[None, :, None], np.sin(theta)[None, :, None]
    values = level(cos * u[:, None, :] + sin * v[:, None, :])
    scale = np.max(np.abs(values), axis=1)
    following = np.roll(values, -1, axis=1)
    crossing = values * following < 0.0
    counts = np.sum(crossing, axis=1)
    degenerate = scale < ZERO_RESTRICTION
    tangent = np.zeros(len(normals), dtype=bool)
    # roots that land exactly on a sample point
    for row in np.nonzero(np.any(values == 0.0, axis=1) & ~degenerate)[0]:
        sampled = _sample_zero_crossings(
            CircleRestriction(level, normals[row], u[row], v[row]),
            theta,
            values[row],
            tangency_tolerance * scale[row],
        )
        if sampled is None:
            tangent[row] = True
        else:
            counts[row] += sampled
    # slope at each crossing after bisection
    rows, cells = np.nonzero(crossing & ~degenerate[:, None])
    if len(rows):
        roots = _bisect_crossings(
            level,
            u[rows],
            v[rows],
            theta[cells],
            step,
            values[rows, cells],
            bisection_steps,
        )
        cos_roots, sin_roots = np.cos(roots)[:, None], np.sin(roots)[:, None]
        tangent_vector = -sin_roots * u[rows] + cos_roots * v[rows]
        points = cos_roots * u[rows] + sin_roots * v[rows]
        slope = np.abs(np.sum(level.gradient(points) * tangent_vector, axis=-1))
        flat = slope < tangency_tolerance * scale[rows]
        np.logical_or.at(tangent, rows[flat], True)
    # hidden pairs of crossings inside one sampling cell
    previous = np.roll(values, 1, axis=1)
    same_sign = (values * previous > 0.0) & (values * following > 0.0)
    local_minimum = (np.abs(values) <= np.abs(previous)) & (
        np.abs(values) <= np.abs(following)
    )
    suspicious = (
        same_sign
        & local_minimum
        & (np.abs(values) < HIDDEN_PAIR_RATIO * scale[:, None])
        & ~degenerate[:, None]
    )
    for row, cell in zip(*np.nonzero(suspicious)):
        restriction = CircleRestriction(level, normals[row], u[row], v[row])
        outcome = _inspect_cell(
            restriction,
            theta[cell],
            step,
            float(np.sign(values[row, cell])),
            tangency_tolerance * scale[row],
        )
        if outcome == "tangent":
            tangent[row] = True
        elif outcome == "pair":
            counts[row] += 2
    # classify
    result = counts.astype(int)
    result[degenerate] = DEGENERATE
    if policy == "retry":
        result[tangent] = DEGENERATE
    return result


def _sample_zero_crossings(
    restriction: CircleRestriction,
    theta: np.ndarray,
    values: np.ndarray,
    tolerance: float,
) -> Optional[int]:
    """Crossings at exact-zero samples, or None when one of them is flat."""
    n = len(values)
    crossings = 0
    for index in np.nonzero(values == 0.0)[0]:
        if abs(float(restriction.derivative(theta[index]))) < tolerance:
            return None
        left, right = values[(index - 1) % n], values[(index + 1) % n]
        if left == 0.0 or right == 0.0:
            return None
        # same-sign neighbours: a second crossing hides in an adjacent cell
        crossings += 1 if left * right < 0.0 else 2
    return crossings


def _bisect_crossings(
    level: LevelFunction,
    u: np.ndarray,
    v: np.ndarray,
    start: np.ndarray,
    step: float,
    start_values: np.ndarray,
    iterations: int,
) -> np.ndarray:
    # pylint: disable=too-many-arguments
    low = start.copy()
    high = start + step
    low_sign = np.sign(start_values)
    for _ in range(iterations):
        middle = 0.5 * (low + high)
        values = level(np.cos(middle)[:, None] * u + np.sin(middle)[:, None] * v)
        same = np.sign(values) == low_sign
        low = np.where(same, middle, low)
        high = np.where(same, high, middle)
    return 0.5 * (low + high)


def _inspect_cell(
    restriction: CircleRestriction,
    center: float,
    step: float,
    sign: float,
    tolerance: float,
) -> Literal["clear", "tangent", "pair"]:
    optimum = scipy.optimize.minimize_scalar(
        lambda t: sign * float(restriction(t)),
        bounds=(center - step, center + step),
        method="bounded",
        options={"xatol": 1e-13},
    )
    minimum = float(optimum.fun)
    if abs(minimum) <= tolerance:
        return "tangent"
    if minimum < 0.0:
        # confirm both crossings of the dip
        def signed(t: float) -> float:
            return float(restriction(t))

        left = scipy.optimize.brentq(signed, center - step, optimum.x, xtol=1e-14)
        right = scipy.optimize.brentq(signed, optimum.x, center + step, xtol=1e-14)
        if left < right:
            return "pair"
    return "clear"


def _graded_monomials(degrees: range) -> list[Monomial]:
    return [(i, degree - i) for degree in degrees for i in range(degree, -1, -1)]


def _monomial_values(
    monomials: tuple[Monomial, ...],
    x: np.ndarray,
    y: np.ndarray,
) -> np.ndarray:
    if not monomials:
        return np.zeros((*np.shape(x), 0))
    top = max(i + j for i, j in monomials)
    x_powers = _powers(x, top)
    y_powers = _powers(y, top)
    return np.stack([x_powers[i] * y_powers[j] for i, j in monomials], axis=-1)


def _monomial_derivatives(
    monomials: tuple[Monomial, ...],
    x: np.ndarray,
    y: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    if not monomials:
        empty = np.zeros((*np.shape(x), 0))
        return empty, empty
    top = max(i + j for i, j in monomials)
    x_powers = _powers(x, top)
    y_powers = _powers(y, top)
    zero = np.zeros_like(x)
    dx = [i * x_powers[i - 1] * y_powers[j] if i else zero for i, j in monomials]
    dy = [j * x_powers[i] * y_powers[j - 1] if j else zero for i, j in monomials]
    return np.stack(dx, axis=-1), np.stack(dy, axis=-1)


def _powers(base: np.ndarray, top: int) -> list[np.ndarray]:
    # repeated multiplication keeps (-x)^k == (-1)^k x^k bit for bit
    powers = [np.ones_like(base)]
    for _ in range(top):
        powers.append(powers[-1] * base)
    return powers


def _monomial_label(monomial: Monomial, *, z: bool = False) -> str:
    factors = [
        name if power == 1 else f"{name}^{power}"
        for name, power in zip("xy", monomial)
        if power
    ]
    if z:
        factors.insert(0, "z")
    return "*".join(factors) or "1"
