import cmath
import math

import numpy as np
import pytest

from koebepoly.poly_core import Disk, Polynomial, PreconditionError, evaluate, n_inverse
from koebepoly.rootfind import (
    Placement,
    classify_point,
    classify_roots,
    find_roots,
    find_roots_many,
    roots_of_shifts,
)


def _matched(found, expected, tol):
    remaining = list(expected)
    for r in found:
        best = min(remaining, key=lambda e: abs(e - r))
        assert abs(best - r) <= tol, (found, expected)
        remaining.remove(best)


def test_linear():
    rs = find_roots(Polynomial.from_coeffs([-0.5, 1]))
    assert rs.roots == (0.5,)
    assert rs.residuals == (0.0,)
    assert rs.converged


def test_quadratic():
    rs = find_roots(Polynomial.from_coeffs([1, 0, 1]))
    assert rs.converged
    _matched(rs.roots, [1j, -1j], 1e-14)
    assert max(rs.residuals) <= 1e-14


def test_extremal_shape():
    # (1 + z)^3 - 1
    rs = find_roots(Polynomial.from_coeffs([0, 3, 3, 1]))
    expected = [0, complex(-1.5, math.sqrt(3) / 2), complex(-1.5, -math.sqrt(3) / 2)]
    _matched(rs.roots, expected, 1e-12)
    # the root at the origin is deflated exactly
    assert 0j in rs.roots


def test_trailing_zero_coefficients_are_ignored():
    rs = find_roots(Polynomial.from_coeffs([2, -3, 1], nominal_degree=6))
    assert rs.degree == 2
    _matched(rs.roots, [1, 2], 1e-13)


def test_rejects_constant_and_zero():
    with pytest.raises(PreconditionError):
        find_roots(Polynomial.zero(3))
    with pytest.raises(PreconditionError):
        find_roots(Polynomial.from_coeffs([2, 0, 0]))


def test_residual_certificate(rng, make_poly):
    for _ in range(200):
        p = make_poly(rng, int(rng.integers(1, 13)))
        rs = find_roots(p)
        assert rs.converged
        assert len(rs.roots) == p.actual_degree
        d = rs.degree
        for r, res in zip(rs.roots, rs.residuals):
            assert res == pytest.approx(abs(evaluate(p, r)), rel=1e-9, abs=1e-300)
            assert res <= 1e-10 * rs.scale * (1 + abs(r)) ** d


def test_vieta(rng, make_poly):
    for _ in range(100):
        p = make_poly(rng, int(rng.integers(2, 11)))
        d = p.actual_degree
        a = p.coeffs
        roots = find_roots(p).roots
        total = -a[d - 1] / a[d]
        product = (-1) ** d * a[0] / a[d]
        assert abs(sum(roots) - total) <= 1e-8 * max(1.0, abs(total))
        assert abs(math.prod(roots) - product) <= 1e-8 * max(1.0, abs(product))


def test_multiple_root():
    p = Polynomial.from_roots([0.5, 0.5, 0.5])
    rs = find_roots(p)
    assert rs.converged
    for r in rs.roots:
        assert abs(r - 0.5) <= 1e-5


def test_reciprocal_duality(rng, make_poly):
    for _ in range(50):
        chi = make_poly(rng, int(rng.integers(1, 9)))
        inverted = [1 / r for r in find_roots(chi).roots]
        _matched(find_roots(n_inverse(chi)).roots, inverted, 1e-8 * max(map(abs, inverted)))


def test_deterministic(rng, make_poly):
    p = make_poly(rng, 9)
    assert find_roots(p) == find_roots(p)


def test_find_roots_many_preserves_order(rng, make_poly):
    polys = [make_poly(rng, int(rng.integers(1, 8))) for _ in range(20)]
    serial = find_roots_many(polys)
    assert find_roots_many(polys, workers=4) == serial
    assert serial == [find_roots(p) for p in polys]


@pytest.mark.parametrize(
    "z, margin, expected",
    [
        (0.5, 1e-9, Placement.INSIDE),
        (2, 1e-9, Placement.OUTSIDE),
        (1.0000000001, 1e-6, Placement.MARGINAL),
        (cmath.exp(0.3j), 1e-9, Placement.MARGINAL),
    ],
)
def test_classify_point(z, margin, expected):
    assert classify_point(z, Disk.unit(), margin) is expected


def test_classify_roots():
    rs = find_roots(Polynomial.from_roots([0.5, 2, -1]))
    placement = classify_roots(rs, Disk.unit(), 1e-9)
    assert placement.any_inside() and placement.any_outside() and placement.any_marginal()
    assert not placement.all_inside()
    assert len(placement.with_placement(Placement.OUTSIDE)) == 1
    with pytest.raises(PreconditionError):
        classify_roots(rs, Disk.unit(), 0.0)


@pytest.mark.parametrize("k", range(2, 7))
def test_boundary_multiple_root_is_marginal(k):
    # (z - 1)^k
    rs = find_roots(Polynomial.from_roots([1] * k))
    placement = classify_roots(rs, Disk.unit(), 1e-9)
    assert placement.verdicts == (Placement.MARGINAL,) * k
    for r in rs.roots:
        assert abs(r - 1) <= 1e-12


@pytest.mark.parametrize("k", [2, 3, 4])
def test_multiple_root_off_the_real_axis(k):
    u = cmath.exp(2.1j)
    rs = find_roots(Polynomial.from_roots([u] * k + [0.3]))
    placement = classify_roots(rs, Disk.unit(), 1e-9)
    assert len(placement.with_placement(Placement.MARGINAL)) == k
    assert placement.with_placement(Placement.INSIDE) == [pytest.approx(0.3, abs=1e-12)]


def test_multiple_root_inside_is_sharpened():
    # (z - 0.5)^3 (z + 2)
    rs = find_roots(Polynomial.from_roots([0.5, 0.5, 0.5, -2]))
    _matched(rs.roots, [0.5, 0.5, 0.5, -2], 1e-10)


def test_roots_of_shifts_agree_with_single_solves(rng, make_poly):
    q = make_poly(rng, 5, origin=True)
    ws = rng.uniform(-1, 1, 16) + 1j * rng.uniform(-1, 1, 16)
    shifted = roots_of_shifts(q, ws)
    assert shifted.roots.shape == (16, 5)
    assert shifted.converged.all()
    for w, row in zip(ws, shifted.roots):
        p = Polynomial((q.coeffs[0] - w,) + q.coeffs[1:], q.nominal_degree)
        _matched(row, find_roots(p).roots, 1e-9)


def test_roots_of_shifts_linear():
    shifted = roots_of_shifts(Polynomial.from_coeffs([0, 2]), np.array([1, 2j]))
    assert np.allclose(shifted.roots[:, 0], [0.5, 1j])
    placements = shifted.placements(Disk.unit())
    assert placements.tolist() == [[0], [1]]
