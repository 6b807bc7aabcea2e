import cmath
import math

import numpy as np
import pytest

from koebepoly.mod_covering import (
    CertificateStatus,
    MembershipVerdict,
    boundary_curve,
    covering_lower_bound,
    estimate_inradius,
    extremal_corollary3,
    extremal_lemma3,
    find_omitted_value,
    inradius_oracle,
    lemma3_bound_check,
    membership,
    membership_many,
)
from koebepoly.poly_core import (
    ConvergenceError,
    Disk,
    Polynomial,
    PreconditionError,
    binomial,
    evaluate,
    evaluate_many,
    norm_nq,
)
from koebepoly.rootfind import RootSet

IDENTITY = Polynomial.from_coeffs([0, 1])


def test_membership_examples():
    found = membership(IDENTITY, 0.5)
    assert found.verdict is MembershipVerdict.INSIDE
    assert found.witness_preimage == pytest.approx(0.5)

    square = Polynomial.from_coeffs([0, 0, 1])
    found = membership(square, -0.25)
    assert found.verdict is MembershipVerdict.INSIDE
    assert abs(found.witness_preimage) == pytest.approx(0.5)
    assert abs(found.witness_preimage.real) < 1e-12

    assert membership(IDENTITY, 2).verdict is MembershipVerdict.OUTSIDE
    assert membership(IDENTITY, 1j).verdict is MembershipVerdict.BOUNDARY_MARGINAL


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_membership_of_extremal_value_is_not_inside(n):
    w0 = 0.7 - 0.2j
    found = membership(extremal_lemma3(n, w0), w0)
    # the only preimage is z = 1 on the circle
    assert found.verdict in (MembershipVerdict.OUTSIDE, MembershipVerdict.BOUNDARY_MARGINAL)
    assert found.witness_preimage is None


def test_membership_witness_certificate(rng, make_poly):
    for _ in range(100):
        q = make_poly(rng, int(rng.integers(1, 8)), origin=True)
        w = complex(*rng.uniform(-1, 1, 2))
        found = membership(q, w)
        if found.verdict is MembershipVerdict.INSIDE:
            z = found.witness_preimage
            assert abs(evaluate(q, z) - w) <= 1e-8 * (1 + abs(w))
            assert abs(z) < 1 - found.margin


def test_membership_in_other_disks():
    shifted = Disk(1 + 0j, 0.5)
    assert membership(IDENTITY, 1.2, shifted).verdict is MembershipVerdict.INSIDE
    assert membership(IDENTITY, 0.2, shifted).verdict is MembershipVerdict.OUTSIDE
    with pytest.raises(PreconditionError):
        membership(Polynomial.from_coeffs([3, 0]), 1)


def test_membership_rejects_uncertified_preimage(monkeypatch):
    # a root inside the disk that is not a preimage of w
    def bad_roots(p):
        return RootSet(roots=(0.1 + 0j,), residuals=(0.4,), scale=1.0, converged=True)

    monkeypatch.setattr("koebepoly.mod_covering.find_roots", bad_roots)
    found = membership(IDENTITY, 0.5)
    assert found.verdict is MembershipVerdict.INDETERMINATE
    assert found.witness_preimage is None


def test_membership_many_matches_membership(rng, make_poly):
    q = make_poly(rng, 4, origin=True)
    ws = rng.uniform(-1.5, 1.5, 40) + 1j * rng.uniform(-1.5, 1.5, 40)
    assert membership_many(q, ws) == [membership(q, complex(w)).verdict for w in ws]


def test_extremal_polynomials():
    w = 0.3 + 0.4j
    assert extremal_lemma3(1, w) == Polynomial.from_coeffs([0, w])
    q = extremal_lemma3(4, w)
    assert q.coeffs[0] == 0
    for k in range(1, 5):
        assert q.coeffs[k] == (-1) ** (k + 1) * binomial(4, k) * w

    assert extremal_corollary3(2, 1) == Polynomial.from_coeffs([0, 1, 0.5])
    for n in range(1, 7):
        for R in (0.5, 1, 2):
            q = extremal_corollary3(n, R)
            assert q.coeffs[0] == 0
            assert q.coeffs[1] == 1
            z = 0.3 - 0.1j
            expected = (R / n) * ((1 + z / R) ** n - 1)
            assert evaluate(q, z) == pytest.approx(expected, rel=1e-13)

    with pytest.raises(PreconditionError):
        extremal_lemma3(0, 1)
    with pytest.raises(PreconditionError):
        extremal_lemma3(3, 0)
    with pytest.raises(PreconditionError):
        extremal_corollary3(3, -1)


@pytest.mark.parametrize("n", range(1, 9))
def test_lemma3_sharp_on_extremal(n):
    w = cmath.exp(0.7j) * 1.3
    report = lemma3_bound_check(extremal_lemma3(n, w), w)
    assert report.passed
    assert report.is_tight()
    for row in report.rows:
        assert abs(row.coefficient - row.bound) <= 1e-9 * row.bound


def test_lemma3_identity():
    report = lemma3_bound_check(IDENTITY, 1.5j)
    assert report.passed
    assert [row.k for row in report.rows] == [1]


def test_lemma3_preconditions():
    with pytest.raises(PreconditionError):
        lemma3_bound_check(IDENTITY, 0.5)
    with pytest.raises(PreconditionError):
        lemma3_bound_check(Polynomial.from_coeffs([1, 1]), 5)


def test_lemma3_population(rng, make_poly):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        q = make_poly(rng, n, origin=True)
        w = find_omitted_value(q, theta=rng.uniform(0, 2 * math.pi))
        report = lemma3_bound_check(q, w)
        assert report.passed, report
        for row in report.rows:
            assert row.slack >= -1e-10 * row.bound


def test_find_omitted_value_for_degenerate_start():
    # q(1) = 0, so the search starts from the boundary maximum instead
    q = Polynomial.from_coeffs([0, 1, -1])
    w = find_omitted_value(q, theta=0.0)
    assert membership(q, w).verdict is MembershipVerdict.OUTSIDE
    with pytest.raises(ConvergenceError):
        find_omitted_value(
            Polynomial.from_coeffs([0, 1, 5]), theta=math.pi, delta=1e-9, max_steps=2
        )


def test_inradius_examples():
    assert inradius_oracle(IDENTITY, 1.0) == pytest.approx(1.0, abs=1e-12)

    estimate = estimate_inradius(extremal_corollary3(3, 1))
    assert estimate.radius == pytest.approx(1 / 3, abs=1e-3)
    assert estimate.w == pytest.approx(-1 / 3, abs=1e-3)

    estimate = estimate_inradius(Polynomial.from_coeffs([0, 1, 0.5]))
    assert estimate.radius == pytest.approx(0.5, abs=1e-3)
    assert estimate.theta == pytest.approx(math.pi, abs=1e-3)
    assert membership(Polynomial.from_coeffs([0, 1, 0.5]), -0.5).verdict is not (
        MembershipVerdict.INSIDE
    )


def test_inradius_preconditions():
    with pytest.raises(PreconditionError):
        inradius_oracle(Polynomial.from_coeffs([1, 1]), 1.0)
    with pytest.raises(PreconditionError):
        inradius_oracle(IDENTITY, 1.0, grid=128)
    assert inradius_oracle(Polynomial.zero(3), 1.0) == 0


def test_oracle_boundary_points_are_approached_from_inside(rng, make_poly):
    for _ in range(20):
        q = make_poly(rng, int(rng.integers(2, 9)), origin=True)
        estimate = estimate_inradius(q, grid=512)
        assert estimate.kept
        thetas = np.array([theta for theta, _ in estimate.kept])
        ws = evaluate_many(q, np.exp(1j * thetas)) * (1 - 1e-4)
        verdicts = membership_many(q, ws)
        assert all(v is MembershipVerdict.INSIDE for v in verdicts), q
        # the estimated disk itself is covered
        angles = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        verdicts = membership_many(q, estimate.radius * (1 - 1e-3) * np.exp(1j * angles))
        assert all(v is MembershipVerdict.INSIDE for v in verdicts), q


def test_covering_identity():
    cert = covering_lower_bound(IDENTITY, 1.0)
    assert cert.bound == 1
    assert cert.status is CertificateStatus.VERIFIED
    assert cert.oracle_inradius >= cert.bound - cert.grid_tolerance


def test_covering_extremal_bound():
    cert = covering_lower_bound(extremal_corollary3(3, 1), 1.0)
    assert cert.bound == pytest.approx(1 / 3, rel=1e-15)
    assert cert.verified


def test_covering_degenerate():
    cert = covering_lower_bound(Polynomial.zero(2), 1.0)
    assert cert.bound == 0
    assert cert.oracle_inradius == 0
    assert cert.verified


def test_covering_preconditions():
    with pytest.raises(PreconditionError):
        covering_lower_bound(Polynomial.from_coeffs([1, 1]), 1.0)
    with pytest.raises(PreconditionError):
        covering_lower_bound(IDENTITY, 0.0)


def test_covering_random_unit_slope(rng, make_poly):
    for _ in range(5):
        q = make_poly(rng, 4, origin=True, unit_slope=True)
        cert = covering_lower_bound(q, 1.0)
        assert cert.bound >= 1 / 4
        assert cert.linear_floor == pytest.approx(1 / 4)
        assert cert.status is CertificateStatus.VERIFIED


def test_covering_radius_population(rng, make_poly):
    # guaranteed radius against the oracle, at R = 1
    for _ in range(100):
        n = int(rng.integers(2, 9))
        q = make_poly(rng, n, origin=True)
        assert inradius_oracle(q, 1.0, 4096) >= norm_nq(q) - 5e-3, q


def test_unit_slope_population(rng, make_poly):
    for _ in range(100):
        n = int(rng.integers(2, 9))
        q = make_poly(rng, n, origin=True, unit_slope=True)
        assert inradius_oracle(q, 1.0, 4096) >= 1 / n - 5e-3, q


def test_reciprocal_degree_circle_is_covered(rng, make_poly):
    for _ in range(10):
        n = int(rng.integers(2, 7))
        R = float(rng.choice([0.5, 1.0, 2.0]))
        q = make_poly(rng, n, origin=True, unit_slope=True)
        angles = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        ws = (R / n) * (1 - 1e-6) * np.exp(1j * angles)
        verdicts = membership_many(q, ws, Disk(0j, R))
        assert all(v is MembershipVerdict.INSIDE for v in verdicts)


@pytest.mark.parametrize("n", range(2, 7))
@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_reciprocal_degree_radius_is_sharp(n, R):
    q = extremal_corollary3(n, R)
    cert = covering_lower_bound(q, R)
    assert cert.status is CertificateStatus.VERIFIED
    assert cert.bound == pytest.approx(R / n, rel=1e-12)
    assert abs(cert.oracle_inradius - R / n) <= 1e-3 * R / n


def test_boundary_curve():
    thetas, values = boundary_curve(IDENTITY, 2.0, 256)
    assert len(thetas) == 256
    assert thetas[0] == 0
    assert np.allclose(np.abs(values), 2.0)
