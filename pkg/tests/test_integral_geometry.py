import dataclasses
import math

import numpy as np
import pytest

from rp2_widths._config import CroftonConfig, ScanConfig
from rp2_widths._integral_geometry import (
    CroftonEstimate,
    bezout_audit,
    crofton_length_sphere,
    crofton_samples,
    jsonschema_bezout_audit,
    jsonschema_crofton_estimate,
    jsonschema_sup_mass_report,
    mass_rp2,
    random_sweep_polynomial,
    sup_mass_scan,
)
from rp2_widths._json import dump_json
from rp2_widths._poly import ProbeQuadric, SweepPolynomial
from rp2_widths.exceptions import ParameterRangeError

ONE_MINUS_TWO_X2 = SweepPolynomial.from_terms(1, even={(0, 0): 1.0, (2, 0): -2.0})


def test_equator_length_is_exact() -> None:
    estimate = crofton_length_sphere(ProbeQuadric.equator(), 10_000, seed=1)
    # every great circle meets the equator twice
    assert estimate.mean_count == 2.0
    assert estimate.length_estimate == pytest.approx(2.0 * math.pi, rel=5e-3)
    assert estimate.standard_error == 0.0
    assert mass_rp2(ProbeQuadric.equator(), 1000, seed=1).length_estimate == (
        pytest.approx(math.pi)
    )


def test_latitude_circle_length() -> None:
    colatitude = math.pi / 3
    estimate = crofton_length_sphere(ProbeQuadric.latitude(colatitude), 10_000, seed=2)
    assert estimate.agrees_with(2.0 * math.pi * math.sin(colatitude), sigmas=5.0)


@pytest.mark.slow
def test_latitude_circle_length_to_one_percent() -> None:
    colatitude = math.pi / 3
    estimate = crofton_length_sphere(ProbeQuadric.latitude(colatitude), 100_000, seed=3)
    assert estimate.length_estimate == pytest.approx(
        2.0 * math.pi * math.sin(colatitude), rel=1e-2
    )


def test_rp2_mass_of_two_parallel_circles() -> None:
    estimate = mass_rp2(ONE_MINUS_TWO_X2, 20_000, seed=4)
    assert estimate.agrees_with(2.0 * math.pi / math.sqrt(2.0), sigmas=5.0)


def test_mass_rp2_requires_antipodal_zero_set() -> None:
    with pytest.raises(ParameterRangeError):
        mass_rp2(ProbeQuadric.latitude(1.0), 100, seed=0)


def test_zero_polynomial_is_rejected() -> None:
    with pytest.raises(ParameterRangeError):
        crofton_length_sphere(SweepPolynomial(1, np.zeros(6)), 100, seed=0)
    with pytest.raises(ParameterRangeError):
        crofton_length_sphere(ONE_MINUS_TWO_X2, 0, seed=0)


def test_estimates_are_reproducible() -> None:
    polynomial = random_sweep_polynomial(2, 99, 0)
    config = CroftonConfig(block_size=512)
    first = crofton_samples(polynomial, 3000, seed=5, config=config)
    second = crofton_samples(polynomial, 3000, seed=5, config=config)
    assert np.array_equal(first.counts, second.counts)
    assert np.array_equal(first.directions, second.directions)


def test_estimates_do_not_depend_on_workers() -> None:
    polynomial = random_sweep_polynomial(1, 99, 1)
    serial = crofton_samples(
        polynomial, 2000, seed=6, config=CroftonConfig(block_size=500)
    )
    parallel = crofton_samples(
        polynomial,
        2000,
        seed=6,
        config=CroftonConfig(block_size=500, workers=2),
    )
    assert np.array_equal(serial.counts, parallel.counts)
    assert serial.estimate() == parallel.estimate()


def test_fibonacci_sampling() -> None:
    config = CroftonConfig(sampling="fibonacci")
    estimate = crofton_length_sphere(ONE_MINUS_TWO_X2, 5000, seed=0, config=config)
    assert estimate.halved().length_estimate == pytest.approx(
        2.0 * math.pi / math.sqrt(2.0), rel=1e-2
    )


def test_sample_rows() -> None:
    samples = crofton_samples(ProbeQuadric.equator(), 10, seed=0)
    rows = samples.rows()
    assert len(rows) == 10
    assert list(rows[0]) == ["index", "xi_x", "xi_y", "xi_z", "count", "redraws"]
    assert all(row["count"] == 2 for row in rows)


def test_halved_estimate() -> None:
    estimate = CroftonEstimate(
        mean_count=2.0,
        n_samples=4,
        degenerate_redraws=0,
        length_estimate=2.0 * math.pi,
        standard_error=0.2,
    )
    halved = estimate.halved()
    assert halved.length_estimate == math.pi
    assert halved.standard_error == 0.1
    assert halved.mean_count == 2.0
    dump_json(dataclasses.asdict(halved), schema=jsonschema_crofton_estimate())


@pytest.mark.parametrize("d", [1, 2, 3])
def test_bezout_audit(d: int) -> None:
    audit = bezout_audit(d, 10, 200, seed=d)
    assert audit.passed
    assert audit.pairs == 2000
    assert audit.bound == 4 * d
    assert 0 < audit.max_count <= 4 * d
    dump_json(dataclasses.asdict(audit), schema=jsonschema_bezout_audit())


@pytest.mark.slow
@pytest.mark.parametrize("d", [1, 2, 3])
def test_bezout_audit_ten_thousand_pairs(d: int) -> None:
    assert bezout_audit(d, 100, 100, seed=17).passed


def test_bezout_audit_collects_samples() -> None:
    collected: list[int] = []
    bezout_audit(1, 3, 50, seed=0, on_samples=lambda index, _: collected.append(index))
    assert collected == [0, 1, 2]


def test_sup_mass_scan_within_bound() -> None:
    report = sup_mass_scan(1, 20, 500, seed=3)
    assert report.passed
    # at most 4 crossings per circle: pi * 4 / 2
    assert report.max_mass <= 2.0 * math.pi
    assert report.max_mass == report.sampled_max
    assert len(report.argmax_coeffs) == 6
    dump_json(dataclasses.asdict(report), schema=jsonschema_sup_mass_report())


def test_sup_mass_scan_refinement_never_decreases() -> None:
    report = sup_mass_scan(
        1,
        10,
        300,
        seed=8,
        refine=True,
        scan_config=ScanConfig(refine_iterations=3),
    )
    assert report.refined
    assert report.refine_iterations == 3
    assert report.max_mass >= report.sampled_max
    assert np.linalg.norm(report.argmax_coeffs) == pytest.approx(1.0)
    assert report.passed


@pytest.mark.slow
@pytest.mark.parametrize("d", [1, 2])
def test_sup_mass_scan_acceptance_size(d: int) -> None:
    assert sup_mass_scan(d, 1000, 2000, seed=42).passed


def test_sup_mass_scan_rejects_empty_family() -> None:
    with pytest.raises(ParameterRangeError):
        sup_mass_scan(1, 0, 10, seed=0)
