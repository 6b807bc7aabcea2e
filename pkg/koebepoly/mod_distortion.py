from __future__ import annotations

import cmath
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

from .poly_core import (
    ConvergenceError,
    Polynomial,
    PreconditionError,
    as_scalar,
    compose_affine,
    derivative,
    evaluate,
    subtract_const,
)
from .rootfind import find_roots

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-8
SLACK_TOLERANCE = 1e-9
DERIVATIVE_TOLERANCE = 1e-12
ETA_TOLERANCE = 1e-9
# relative gap under which two preimages count as equally short
TIE_TOLERANCE = 1e-12
# cap on Newton steps polishing zeta; polishing stops once the residual stops shrinking
NEWTON_STEPS = 60


class Branch(Enum):
    EQUAL_VALUES = "equal_values"
    CRITICAL_POINT = "critical_point"
    CONSTRUCTIVE = "constructive"


@dataclass(frozen=True)
class DistortionWitness:
    """
    A point zeta with p(zeta) = p(z2) and
    |p(z1) - p(z2)| >= (1/n) |p'(z1)| |z1 - zeta|.

    w, R and eta are the construction's intermediates: w = q(z1 - z2) for
    the normalized q, R = n |w| and eta = z1 - zeta. They are None on the
    critical-point branch, where no q exists.
    """

    z1: complex
    z2: complex
    zeta: complex
    degree: int
    branch: Branch
    residual: float
    lhs: float
    rhs: float
    w: complex | None
    R: float | None
    eta: complex | None
    violations: tuple[str, ...] = ()

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def ok(self) -> bool:
        return not self.violations


def q_construction(p: Polynomial, z1: complex) -> Polynomial:
    """(p(z1) - p(z1 - z)) / p'(z1), with q(0) = 0 and q'(0) = 1 exactly."""
    z1 = as_scalar(z1, "z1")
    slope = evaluate(derivative(p), z1)
    if abs(slope) <= DERIVATIVE_TOLERANCE * p.scale:
        raise PreconditionError(f"p'(z1) = {slope!r} vanishes at z1 = {z1!r}")
    shifted = compose_affine(p, z1, -1)
    coeffs = [0j, 1 + 0j]
    for c in shifted.coeffs[2:]:
        coeffs.append(-c / slope)
    return Polynomial(tuple(coeffs[: p.nominal_degree + 1]), p.nominal_degree)


def _shortest(roots: Sequence[complex]) -> complex:
    shortest = min(abs(r) for r in roots)
    tied = [r for r in roots if abs(r) <= shortest * (1 + TIE_TOLERANCE) + TIE_TOLERANCE]
    return min(tied, key=cmath.phase)


def _polish(p: Polynomial, target: complex, zeta: complex) -> complex:
    """Newton steps on p(z) - target, kept only while the residual shrinks."""
    dp = derivative(p)
    best, best_residual = zeta, abs(evaluate(p, zeta) - target)
    for _ in range(NEWTON_STEPS):
        slope = evaluate(dp, best)
        if slope == 0 or best_residual == 0:
            break
        candidate = best - (evaluate(p, best) - target) / slope
        residual = abs(evaluate(p, candidate) - target)
        if not residual < best_residual:
            break
        best, best_residual = candidate, residual
    return best


def distortion_witness(p: Polynomial, z1: complex, z2: complex) -> DistortionWitness:
    n = p.actual_degree
    if n < 1:
        raise PreconditionError("the distortion witness needs actual degree >= 1")
    z1 = as_scalar(z1, "z1")
    z2 = as_scalar(z2, "z2")
    p1, p2 = evaluate(p, z1), evaluate(p, z2)
    lhs = abs(p1 - p2)
    slope = evaluate(derivative(p), z1)
    tolerance = RESIDUAL_TOLERANCE * (1 + abs(p2))

    if lhs <= tolerance:
        return _finish(p, z1, z2, z1, n, Branch.EQUAL_VALUES, slope, 0j, 0.0, 0j)
    if abs(slope) <= DERIVATIVE_TOLERANCE * p.scale:
        logger.debug("p'(z1) vanishes at %r; taking zeta = z2", z1)
        return _finish(p, z1, z2, z2, n, Branch.CRITICAL_POINT, slope, None, None, None)

    # q at the actual degree so its leading coefficient is nonzero
    q = q_construction(Polynomial(p.coeffs[: n + 1], n), z1)
    w = evaluate(q, z1 - z2)
    rs = find_roots(subtract_const(q, w))
    if not rs.converged:
        raise ConvergenceError(f"no preimage of w = {w!r} found for {p}")
    eta = _shortest(rs.roots)
    zeta = _polish(p, p2, z1 - eta)
    return _finish(p, z1, z2, zeta, n, Branch.CONSTRUCTIVE, slope, w, n * abs(w), z1 - zeta)


def _finish(
    p: Polynomial,
    z1: complex,
    z2: complex,
    zeta: complex,
    n: int,
    branch: Branch,
    slope: complex,
    w: complex | None,
    R: float | None,
    eta: complex | None,
) -> DistortionWitness:
    p2 = evaluate(p, z2)
    lhs = abs(evaluate(p, z1) - p2)
    residual = abs(evaluate(p, zeta) - p2)
    rhs = 0.0 if branch is Branch.CRITICAL_POINT else abs(slope) * abs(z1 - zeta) / n

    violations = []
    if residual > RESIDUAL_TOLERANCE * (1 + abs(p2)):
        violations.append("residual")
    if lhs - rhs < -SLACK_TOLERANCE * (1 + lhs):
        violations.append("slack")
    if eta is not None and R is not None and abs(eta) > R * (1 + ETA_TOLERANCE):
        violations.append("eta_bound")
    if violations:
        logger.warning(
            "Distortion witness for z1=%r z2=%r fails %s", z1, z2, ", ".join(violations)
        )
    return DistortionWitness(
        z1, z2, zeta, n, branch, residual, lhs, rhs, w, R, eta, tuple(violations)
    )


def check_intermediate(witness: DistortionWitness) -> bool:
    """|q(z1 - z2)| >= |eta| / n, the step the construction rests on."""
    if witness.branch is not Branch.CONSTRUCTIVE:
        return True
    return abs(witness.w) >= abs(witness.eta) / witness.degree - ETA_TOLERANCE


def distortion_witness_many(
    instances: Sequence[tuple[Polynomial, complex, complex]], workers: int | None = None
) -> list[DistortionWitness]:
    if workers is None or workers <= 1:
        return [distortion_witness(*args) for args in instances]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda args: distortion_witness(*args), instances))
