import logging

import pytest

from rp2_widths._ellipsoid import Calibration, calibrate
from rp2_widths._integral_geometry import random_sweep_polynomial
from rp2_widths._poly import SweepPolynomial


@pytest.fixture
def logger() -> logging.Logger:
    return logging.getLogger("rp2-widths-test")


@pytest.fixture(scope="session")
def calibrated() -> Calibration:
    return calibrate(0.01)


@pytest.fixture
def sweep_polynomials() -> dict[int, list[SweepPolynomial]]:
    # fixed seed, three members per degree
    return {
        d: [random_sweep_polynomial(d, 2024, index) for index in range(3)]
        for d in (1, 2)
    }
