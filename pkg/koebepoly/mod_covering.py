from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .poly_core import (
    ConvergenceError,
    Disk,
    Polynomial,
    PreconditionError,
    as_scalar,
    binomial,
    evaluate,
    evaluate_many,
    norm_nq,
    rescale,
    subtract_const,
)
from .rootfind import (
    DEFAULT_MARGIN,
    Placement,
    ShiftedRoots,
    classify_roots,
    find_roots,
    roots_of_shifts,
)

logger = logging.getLogger(__name__)

DEFAULT_GRID = 4096
MIN_GRID = 256
SPOT_CHECKS = 64
SPOT_SHRINK = 1e-6
REFINE_STEPS = 30
PREIMAGE_TOLERANCE = 1e-8
LEMMA3_SLACK = 1e-10


class MembershipVerdict(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY_MARGINAL = "boundary_marginal"
    INDETERMINATE = "indeterminate"


class CertificateStatus(Enum):
    VERIFIED = "VERIFIED"
    REFUTED = "REFUTED"
    INDETERMINATE = "INDETERMINATE"


class OracleFailure(ConvergenceError):
    pass


@dataclass(frozen=True)
class MembershipResult:
    verdict: MembershipVerdict
    w: complex
    disk: Disk
    margin: float
    witness_preimage: complex | None = None
    preimages: tuple[complex, ...] = ()

    @property
    def in_image(self) -> bool:
        return self.verdict is MembershipVerdict.INSIDE


@dataclass(frozen=True)
class Lemma3Row:
    k: int
    coefficient: float
    bound: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.bound - self.coefficient


@dataclass(frozen=True)
class Lemma3Report:
    w: complex
    degree: int
    membership: MembershipVerdict
    rows: tuple[Lemma3Row, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def is_tight(self, rel: float = 1e-9) -> bool:
        """Every bound attained, as for the extremal polynomial."""
        return all(abs(row.slack) <= rel * row.bound for row in self.rows)


@dataclass(frozen=True)
class InradiusEstimate:
    radius: float
    theta: float | None
    w: complex | None
    grid: int
    R: float
    # max distance between consecutive image samples
    grid_tolerance: float
    # (theta, |w|) for every boundary sample outside the open image
    kept: tuple[tuple[float, float], ...] = ()

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.radius)


@dataclass(frozen=True)
class CoveringCertificate:
    bound: float
    oracle_inradius: float
    grid_size: int
    R: float
    status: CertificateStatus
    spot_radius: float
    linear_floor: float
    grid_tolerance: float
    margin: float
    uncovered_boundary_samples: tuple[tuple[float, float], ...] = field(default=())

    @property
    def verified(self) -> bool:
        return self.status is CertificateStatus.VERIFIED


def _require_non_constant(q: Polynomial) -> None:
    if q.actual_degree < 1:
        raise PreconditionError("membership needs a non-constant polynomial")


def _source_disk(R: float) -> Disk:
    if not (math.isfinite(R) and R > 0):
        raise PreconditionError(f"source radius must be positive and finite, got {R}")
    return Disk(0j, R, closed=False)


def _verdict_codes(shifted: ShiftedRoots, disk: Disk, margin: float) -> list[MembershipVerdict]:
    placements = shifted.placements(disk, margin)
    inside = (placements == 0).any(axis=1)
    outside = (placements == 2).all(axis=1)
    result = []
    for ok, ins, out in zip(shifted.converged, inside, outside):
        if not ok:
            result.append(MembershipVerdict.INDETERMINATE)
        elif ins:
            result.append(MembershipVerdict.INSIDE)
        elif out:
            result.append(MembershipVerdict.OUTSIDE)
        else:
            result.append(MembershipVerdict.BOUNDARY_MARGINAL)
    return result


def membership(
    q: Polynomial,
    w: complex,
    d: Disk = Disk.unit(),
    margin: float = DEFAULT_MARGIN,
) -> MembershipResult:
    """Is w in q(d)? Decided by the roots of q - w."""
    _require_non_constant(q)
    w = as_scalar(w, "w")
    rs = find_roots(subtract_const(q, w))
    if not rs.converged:
        logger.warning("Membership of %r is indeterminate: solver did not converge", w)
        return MembershipResult(MembershipVerdict.INDETERMINATE, w, d, margin, None, rs.roots)
    placement = classify_roots(rs, d, margin)
    inside = placement.with_placement(Placement.INSIDE)
    if inside:
        tolerance = PREIMAGE_TOLERANCE * (1 + abs(w))
        certified = [z for z in inside if abs(evaluate(q, z) - w) <= tolerance]
        if not certified:
            logger.warning("No preimage of %r in the disk meets the residual bound", w)
            return MembershipResult(
                MembershipVerdict.INDETERMINATE, w, d, margin, None, rs.roots
            )
        # deepest preimage, first one on ties
        witness = min(certified, key=lambda z: abs(z - d.center))
        return MembershipResult(MembershipVerdict.INSIDE, w, d, margin, witness, rs.roots)
    if placement.all_outside():
        return MembershipResult(MembershipVerdict.OUTSIDE, w, d, margin, None, rs.roots)
    return MembershipResult(
        MembershipVerdict.BOUNDARY_MARGINAL, w, d, margin, None, rs.roots
    )


def membership_many(
    q: Polynomial,
    ws: np.ndarray,
    d: Disk = Disk.unit(),
    margin: float = DEFAULT_MARGIN,
) -> list[MembershipVerdict]:
    _require_non_constant(q)
    shifted = roots_of_shifts(q, ws)
    return _verdict_codes(shifted, d, margin)


def find_omitted_value(
    q: Polynomial,
    theta: float = 0.0,
    R: float = 1.0,
    delta: float = 0.05,
    margin: float = DEFAULT_MARGIN,
    max_steps: int = 200,
) -> complex:
    """
    A value certified OUTSIDE q(disk of radius R), found by pushing
    q(R e^{i theta}) outward by factors of (1 + delta).
    """
    disk = _source_disk(R)
    _require_non_constant(q)
    w = evaluate(q, R * complex(math.cos(theta), math.sin(theta))) * (1 + delta)
    if w == 0:
        # start from the largest boundary value in the requested direction
        peak = float(np.abs(boundary_curve(q, R, MIN_GRID)[1]).max())
        w = delta * peak * complex(math.cos(theta), math.sin(theta))
    for _ in range(max_steps):
        if membership(q, w, disk, margin).verdict is MembershipVerdict.OUTSIDE:
            return w
        w *= 1 + delta
    raise ConvergenceError(f"no omitted value found along theta={theta} in {max_steps} steps")


def lemma3_bound_check(
    q: Polynomial, w: complex, margin: float = DEFAULT_MARGIN
) -> Lemma3Report:
    """|q_k| <= C(n, k) |w| for every k, given w not in q(unit disk)."""
    if q.coeffs[0] != 0:
        raise PreconditionError("the coefficient bound needs q(0) = 0")
    n = q.nominal_degree
    if n < 1 or q.is_zero:
        raise PreconditionError("the coefficient bound needs a non-constant q")
    w = as_scalar(w, "w")
    found = membership(q, w, Disk.unit(), margin)
    if found.verdict is MembershipVerdict.INSIDE:
        raise PreconditionError(
            f"w={w!r} lies in q(unit disk) (preimage {found.witness_preimage!r})"
        )
    if found.verdict is MembershipVerdict.INDETERMINATE:
        raise ConvergenceError(f"membership of w={w!r} could not be decided")

    rows = []
    for k in range(1, n + 1):
        coefficient = abs(q.coeffs[k])
        bound = binomial(n, k) * abs(w)
        rows.append(
            Lemma3Row(k, coefficient, bound, bound - coefficient >= -LEMMA3_SLACK * bound)
        )
    return Lemma3Report(w, n, found.verdict, tuple(rows))


def extremal_lemma3(n: int, w: complex) -> Polynomial:
    """w - w (1 - z)^n expanded: coefficient k is (-1)^(k+1) C(n, k) w, constant exactly 0."""
    if n < 1:
        raise PreconditionError(f"degree must be >= 1, got {n}")
    w = as_scalar(w, "w")
    if w == 0:
        raise PreconditionError("the extremal polynomial needs w != 0")
    coeffs = [0j] + [(-1) ** (k + 1) * binomial(n, k) * w for k in range(1, n + 1)]
    return Polynomial(tuple(coeffs), n)


def extremal_corollary3(n: int, R: float = 1.0) -> Polynomial:
    """(R/n)((1 + z/R)^n - 1) expanded: coefficient k is C(n, k) R^(1-k) / n."""
    if n < 1:
        raise PreconditionError(f"degree must be >= 1, got {n}")
    _source_disk(R)
    coeffs = [0j, 1 + 0j]
    for k in range(2, n + 1):
        coeffs.append(complex(binomial(n, k) / n * R ** (1 - k)))
    return Polynomial(tuple(coeffs), n)


def boundary_curve(
    q: Polynomial, R: float = 1.0, grid: int = DEFAULT_GRID
) -> tuple[np.ndarray, np.ndarray]:
    """Samples theta_j = 2 pi j / grid and q(R e^{i theta_j})."""
    _source_disk(R)
    if grid < 1:
        raise PreconditionError(f"grid must be positive, got {grid}")
    thetas = 2 * np.pi * np.arange(grid) / grid
    return thetas, evaluate_many(q, R * np.exp(1j * thetas))


def _check_origin(q: Polynomial) -> None:
    if q.coeffs[0] != 0:
        raise PreconditionError("covering at the origin needs q(0) = 0")


def estimate_inradius(
    q: Polynomial,
    R: float = 1.0,
    grid: int = DEFAULT_GRID,
    margin: float = DEFAULT_MARGIN,
) -> InradiusEstimate:
    """
    Radius of the largest disk about 0 inside q(disk of radius R).

    The boundary of the image lies in the image of the circle |z| = R, so
    the circle is sampled and every sample whose value has no other
    preimage strictly inside the disk is kept; the smallest kept modulus is
    then sharpened by bisecting in theta around it. The result can only
    over-estimate the true inradius.
    """
    disk = _source_disk(R)
    _check_origin(q)
    if grid < MIN_GRID:
        raise PreconditionError(f"grid must be at least {MIN_GRID}, got {grid}")
    if q.is_zero:
        return InradiusEstimate(0.0, None, 0j, grid, R, 0.0)

    thetas, ws = boundary_curve(q, R, grid)
    spacing = float(np.abs(np.diff(np.append(ws, ws[0]))).max())
    verdicts = _verdict_codes(roots_of_shifts(q, ws), disk, margin)
    if MembershipVerdict.INDETERMINATE in verdicts:
        raise OracleFailure(
            f"{verdicts.count(MembershipVerdict.INDETERMINATE)} boundary samples undecided"
        )
    kept = np.array([v is not MembershipVerdict.INSIDE for v in verdicts])
    moduli = np.abs(ws)
    samples = tuple((float(t), float(m)) for t, m in zip(thetas[kept], moduli[kept]))
    if not kept.any():
        logger.info("No boundary sample survives at grid %d; image looks surjective", grid)
        return InradiusEstimate(math.inf, None, None, grid, R, spacing, samples)

    # argmin keeps the smallest theta index on ties
    best = int(np.argmin(np.where(kept, moduli, np.inf)))
    theta, w = float(thetas[best]), complex(ws[best])
    step = 2 * math.pi / grid
    for _ in range(REFINE_STEPS):
        step /= 2
        candidates = np.array([theta - step, theta + step])
        values = evaluate_many(q, R * np.exp(1j * candidates))
        found = _verdict_codes(roots_of_shifts(q, values), disk, margin)
        for t, value, verdict in zip(candidates, values, found):
            if verdict in (MembershipVerdict.INSIDE, MembershipVerdict.INDETERMINATE):
                continue
            if abs(value) < abs(w):
                theta, w = float(t), complex(value)
    logger.debug("Inradius %g at theta=%g (grid %d)", abs(w), theta, grid)
    return InradiusEstimate(abs(w), theta, w, grid, R, spacing, samples)


def inradius_oracle(
    q: Polynomial,
    R: float = 1.0,
    grid: int = DEFAULT_GRID,
    margin: float = DEFAULT_MARGIN,
) -> float:
    return estimate_inradius(q, R, grid, margin).radius


def covering_lower_bound(
    q: Polynomial,
    R: float = 1.0,
    grid: int = DEFAULT_GRID,
    margin: float = DEFAULT_MARGIN,
    spot_checks: int = SPOT_CHECKS,
) -> CoveringCertificate:
    """
    Guaranteed radius R * n(q(R z)/R) of a disk about 0 inside q(disk of
    radius R), spot-checked by membership on a slightly smaller circle and
    compared against the inradius oracle.
    """
    disk = _source_disk(R)
    _check_origin(q)
    n = q.nominal_degree
    if n < 1:
        raise PreconditionError("covering bound needs nominal degree >= 1")
    if q.is_zero:
        return CoveringCertificate(
            0.0, 0.0, grid, R, CertificateStatus.VERIFIED, 0.0, 0.0, 0.0, margin
        )

    bound = R * norm_nq(rescale(q, R))
    linear_floor = R * abs(q.coeffs[1]) / n
    spot_radius = bound * (1 - SPOT_SHRINK)
    angles = 2 * np.pi * np.arange(spot_checks) / spot_checks
    spots = _verdict_codes(roots_of_shifts(q, spot_radius * np.exp(1j * angles)), disk, margin)
    estimate = estimate_inradius(q, R, grid, margin)

    if MembershipVerdict.INDETERMINATE in spots:
        status = CertificateStatus.INDETERMINATE
    elif all(v is MembershipVerdict.INSIDE for v in spots) and (
        estimate.radius >= bound - estimate.grid_tolerance
    ):
        status = CertificateStatus.VERIFIED
    else:
        status = CertificateStatus.REFUTED
        logger.warning("Covering bound %g refuted for %s", bound, q)

    return CoveringCertificate(
        bound=bound,
        oracle_inradius=estimate.radius,
        grid_size=grid,
        R=R,
        status=status,
        spot_radius=spot_radius,
        linear_floor=linear_floor,
        grid_tolerance=estimate.grid_tolerance,
        margin=margin,
        uncovered_boundary_samples=estimate.kept,
    )
