import numpy as np
import pytest

from koebepoly.poly_core import Polynomial


def random_poly(rng, degree, box=1.0, origin=False, unit_slope=False, trailing=0):
    """Coefficients uniform in the square [-box, box]^2."""
    coeffs = rng.uniform(-box, box, degree + 1) + 1j * rng.uniform(-box, box, degree + 1)
    if origin:
        coeffs[0] = 0
    if unit_slope:
        coeffs[1] = 1
    return Polynomial.from_coeffs(list(coeffs) + [0j] * trailing)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_poly():
    return random_poly
