import math

import numpy as np
import numpy.typing as npt
import pytest
import scipy.spatial

from rp2_widths._config import TraceConfig
from rp2_widths._curves import (
    geodesic_grid,
    jsonschema_traced_curve,
    rp2_mass_from_trace,
    trace_level_set,
)
from rp2_widths._integral_geometry import (
    crofton_length_sphere,
    random_sweep_polynomial,
)
from rp2_widths._json import dump_json
from rp2_widths._poly import ProbeQuadric, SweepPolynomial
from rp2_widths.exceptions import (
    AntipodalPairingError,
    NearSingularError,
    ParameterRangeError,
)

ONE_MINUS_TWO_X2 = SweepPolynomial.from_terms(1, even={(0, 0): 1.0, (2, 0): -2.0})


class ShiftedPlane:
    """x - x0, vanishing exactly at one grid vertex."""

    degree_parameter = 1
    antipodal_zero_set = False

    def __init__(self, x0: float) -> None:
        self.x0 = x0

    def __call__(self, points: npt.ArrayLike) -> np.ndarray:
        return np.asarray(points, dtype=float)[..., 0] - self.x0

    def gradient(self, points: npt.ArrayLike) -> np.ndarray:
        q = np.asarray(points, dtype=float)
        return np.broadcast_to([1.0, 0.0, 0.0], q.shape).copy()


@pytest.mark.parametrize("resolution", range(5))
def test_grid_counts(resolution: int) -> None:
    grid = geodesic_grid(resolution)
    assert len(grid.faces) == 20 * 4**resolution
    assert len(grid.edges) == 30 * 4**resolution
    assert len(grid.vertices) == 10 * 4**resolution + 2
    assert np.linalg.norm(grid.vertices, axis=1) == pytest.approx(1.0, abs=1e-15)


def test_grid_is_antipodally_symmetric() -> None:
    vertices = geodesic_grid(4).vertices
    distance, _ = scipy.spatial.cKDTree(vertices).query(-vertices)
    assert np.max(distance) == 0.0


def test_grid_avoids_coordinate_planes() -> None:
    assert np.all(geodesic_grid(6).vertices != 0.0)


def test_grid_refines() -> None:
    arcs = [geodesic_grid(resolution).max_edge_arc for resolution in range(6)]
    assert all(a > b for a, b in zip(arcs, arcs[1:]))
    assert arcs[0] == pytest.approx(math.atan(2.0))


def test_negative_resolution() -> None:
    with pytest.raises(ParameterRangeError):
        geodesic_grid(-1)


def test_trace_equator() -> None:
    curve = trace_level_set(ProbeQuadric.equator(), 5)
    assert len(curve.components) == 1
    assert curve.total_length_sphere == pytest.approx(2.0 * math.pi, rel=1e-3)
    assert curve.antipodal_pairing == [0]
    assert rp2_mass_from_trace(curve) == pytest.approx(math.pi, rel=1e-3)
    assert np.abs(curve.components[0][:, 2]) == pytest.approx(0.0, abs=1e-12)


def test_trace_latitude_circle() -> None:
    colatitude = math.pi / 3
    curve = trace_level_set(ProbeQuadric.latitude(colatitude), 6)
    assert len(curve.components) == 1
    assert curve.total_length_sphere == pytest.approx(
        2.0 * math.pi * math.sin(colatitude), rel=1e-3
    )
    assert curve.antipodal_pairing == [None]
    with pytest.raises(AntipodalPairingError):
        rp2_mass_from_trace(curve)


def test_trace_two_parallel_circles() -> None:
    curve = trace_level_set(ONE_MINUS_TWO_X2, 6)
    assert len(curve.components) == 2
    assert curve.antipodal_pairing == [1, 0]
    assert rp2_mass_from_trace(curve) == pytest.approx(
        2.0 * math.pi / math.sqrt(2.0), rel=1e-3
    )
    for component in curve.components:
        assert np.abs(component[:, 0]) == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_traced_length_converges() -> None:
    errors = [
        abs(
            trace_level_set(ONE_MINUS_TWO_X2, resolution).total_length_sphere
            - 2.0 * math.sqrt(2.0) * math.pi
        )
        for resolution in (3, 5)
    ]
    assert errors[1] < errors[0]


def _relative_refinement_change(polynomial: SweepPolynomial, resolution: int) -> float:
    coarse = trace_level_set(polynomial, resolution).total_length_sphere
    fine = trace_level_set(polynomial, resolution + 1).total_length_sphere
    return abs(fine - coarse) / fine


def test_refinement_changes_length_by_half_a_percent(
    sweep_polynomials: dict[int, list[SweepPolynomial]],
) -> None:
    assert _relative_refinement_change(ONE_MINUS_TWO_X2, 5) <= 0.005
    assert _relative_refinement_change(sweep_polynomials[1][0], 5) <= 0.005


def test_trace_default_resolution_and_json() -> None:
    curve = trace_level_set(ProbeQuadric.equator(), config=TraceConfig(resolution=3))
    assert curve.resolution == 3
    assert curve.step_bound == geodesic_grid(3).max_edge_arc
    dump_json(curve.to_json(), schema=jsonschema_traced_curve())


def test_vertex_on_level_set() -> None:
    grid = geodesic_grid(2)
    with pytest.raises(NearSingularError):
        trace_level_set(ShiftedPlane(float(grid.vertices[0, 0])), 2)


def test_gradient_floor() -> None:
    with pytest.raises(NearSingularError):
        trace_level_set(
            ProbeQuadric.equator(),
            3,
            config=TraceConfig(gradient_floor=10.0),
        )


def test_zero_polynomial_cannot_be_traced() -> None:
    with pytest.raises(ParameterRangeError):
        trace_level_set(SweepPolynomial(1, np.zeros(6)), 2)


def _oracle_agreement(polynomial: SweepPolynomial, seed: int) -> None:
    traced = trace_level_set(polynomial, 6).total_length_sphere
    estimate = crofton_length_sphere(polynomial, 20_000, seed=seed)
    tolerance = max(0.01 * traced, 3.0 * estimate.standard_error)
    assert abs(traced - estimate.length_estimate) <= tolerance


def test_trace_agrees_with_crofton(
    sweep_polynomials: dict[int, list[SweepPolynomial]],
) -> None:
    for seed, polynomial in enumerate(sweep_polynomials[1]):
        _oracle_agreement(polynomial, seed)


@pytest.mark.slow
@pytest.mark.parametrize("d", [1, 2])
def test_trace_agrees_with_crofton_on_twenty_polynomials(d: int) -> None:
    for index in range(20):
        _oracle_agreement(random_sweep_polynomial(d, 31, index), index)
