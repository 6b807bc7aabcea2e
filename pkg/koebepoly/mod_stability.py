from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .poly_core import Disk, Polynomial, PreconditionError, evaluate_many, n_inverse
from .rootfind import (
    DEFAULT_MARGIN,
    Placement,
    classify_roots,
    find_roots,
)

logger = logging.getLogger(__name__)

BOUNDARY_GRID = 1024


class Tristate(Enum):
    YES = "yes"
    NO = "no"
    MARGINAL = "marginal"


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class Agreement(Enum):
    AGREE = "agree"
    DISAGREE = "disagree"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Stability
    margin: float
    # offending root when unstable, None otherwise
    root: complex | None = None
    # min |chi*| over the unit circle when stable, None otherwise
    min_modulus: float | None = None


@dataclass(frozen=True)
class BoundaryMinimum:
    modulus: float
    theta: float
    points: int
    radius: float


@dataclass(frozen=True)
class OmissionCheck:
    verdict: Tristate
    root_side: Tristate
    boundary: BoundaryMinimum
    # lower bound for |chi*| on the circle implied by the computed roots
    root_floor: float
    margin: float


@dataclass(frozen=True)
class LemmaSides:
    roots_side: Tristate
    omitted_side: Tristate
    agreement: Agreement


@dataclass(frozen=True)
class LemmaReport:
    margin: float
    # 0 in chi*(closed disk) versus roots of chi in the open disk; None when a_n = 0
    lemma1: LemmaSides | None
    # 0 in chi(open disk) versus roots of chi* in the closed disk; None when a_0 = 0
    lemma2: LemmaSides | None
    # stable chi  <=>  every root of chi* strictly outside the closed disk
    reciprocity: Agreement | None

    @property
    def consistent(self) -> bool:
        checks = [self.lemma1, self.lemma2]
        if any(c is not None and c.agreement is Agreement.DISAGREE for c in checks):
            return False
        return self.reciprocity is not Agreement.DISAGREE


def boundary_min_modulus(
    q: Polynomial, points: int = BOUNDARY_GRID, radius: float = 1.0
) -> BoundaryMinimum:
    thetas = 2 * np.pi * np.arange(points) / points
    values = np.abs(evaluate_many(q, radius * np.exp(1j * thetas)))
    # argmin keeps the first index on ties
    idx = int(np.argmin(values))
    return BoundaryMinimum(float(values[idx]), float(thetas[idx]), points, radius)


def _compare(a: Tristate, b: Tristate) -> Agreement:
    if Tristate.MARGINAL in (a, b):
        return Agreement.MARGINAL
    return Agreement.AGREE if a is b else Agreement.DISAGREE


def _check_margin(margin: float) -> None:
    if not (math.isfinite(margin) and margin > 0):
        raise PreconditionError(f"margin must be positive and finite, got {margin}")


def is_schur_stable(chi: Polynomial, margin: float = DEFAULT_MARGIN) -> StabilityVerdict:
    _check_margin(margin)
    n = chi.nominal_degree
    if chi.actual_degree != n or chi.is_zero:
        raise PreconditionError("Schur stability needs a nonzero leading coefficient a_n")
    if n == 0:
        # no roots at all; chi* is the same nonzero constant
        return StabilityVerdict(Stability.STABLE, margin, min_modulus=abs(chi.coeffs[0]))

    placement = classify_roots(find_roots(chi), Disk.unit(), margin)
    outside = placement.with_placement(Placement.OUTSIDE)
    if outside:
        return StabilityVerdict(Stability.UNSTABLE, margin, root=max(outside, key=abs))
    marginal = placement.with_placement(Placement.MARGINAL)
    if marginal:
        return StabilityVerdict(Stability.MARGINAL, margin, root=max(marginal, key=abs))
    boundary = boundary_min_modulus(n_inverse(chi))
    return StabilityVerdict(Stability.STABLE, margin, min_modulus=boundary.modulus)


def zero_omitted_closed_disk(
    chi_star: Polynomial, margin: float = DEFAULT_MARGIN, points: int = BOUNDARY_GRID
) -> OmissionCheck:
    """
    Decide 0 not in chi*(closed unit disk) twice: from the roots of chi*
    and from the minimum of |chi*| on a boundary grid. The verdict is YES
    only when both routes say so.
    """
    _check_margin(margin)
    boundary = boundary_min_modulus(chi_star, points)
    if chi_star.is_zero:
        return OmissionCheck(Tristate.NO, Tristate.NO, boundary, 0.0, margin)

    d = chi_star.actual_degree
    lead = abs(chi_star.coeffs[d])
    if d == 0:
        root_side = Tristate.YES
        root_floor = lead
    else:
        rs = find_roots(chi_star)
        placement = classify_roots(rs, Disk.unit(closed=True), margin)
        if placement.any_inside():
            root_side = Tristate.NO
        elif placement.all_outside():
            root_side = Tristate.YES
        else:
            root_side = Tristate.MARGINAL
        # |chi*(z)| = |a| prod |z - r_i| >= |a| prod ||r_i| - 1| on |z| = 1
        root_floor = lead * math.prod(abs(abs(r) - 1) for r in rs.roots)

    # a zero within the margin band of the circle pulls the boundary minimum
    # below margin * sum_k k |a_k|
    band_floor = margin * sum(k * abs(c) for k, c in enumerate(chi_star.coeffs))
    boundary_clear = boundary.modulus > band_floor
    # the grid can never undercut the factorized floor by more than rounding
    slack = 64 * np.finfo(float).eps * chi_star.scale
    consistent = boundary.modulus >= root_floor * (1 - 1e-6) - slack

    if root_side is Tristate.YES and not (boundary_clear and consistent):
        logger.debug(
            "Root route and boundary grid disagree (min %g, floor %g)",
            boundary.modulus,
            root_floor,
        )
        verdict = Tristate.MARGINAL
    else:
        verdict = root_side
    return OmissionCheck(verdict, root_side, boundary, root_floor, margin)


def zero_omitted_open_disk(chi: Polynomial, margin: float = DEFAULT_MARGIN) -> Tristate:
    """0 not in chi(open unit disk), decided by the roots of chi."""
    _check_margin(margin)
    if chi.is_zero:
        return Tristate.NO
    if chi.actual_degree == 0:
        return Tristate.YES
    placement = classify_roots(find_roots(chi), Disk.unit(), margin)
    if placement.any_inside():
        return Tristate.NO
    if placement.all_outside():
        return Tristate.YES
    return Tristate.MARGINAL


def roots_in_closed_disk(chi_star: Polynomial, margin: float = DEFAULT_MARGIN) -> Tristate:
    """All zeros of chi* in the closed unit disk."""
    _check_margin(margin)
    if chi_star.is_zero:
        return Tristate.NO
    if chi_star.actual_degree == 0:
        return Tristate.YES
    placement = classify_roots(find_roots(chi_star), Disk.unit(closed=True), margin)
    if placement.any_outside():
        return Tristate.NO
    if placement.all_inside():
        return Tristate.YES
    return Tristate.MARGINAL


def lemma_equivalence_check(chi: Polynomial, margin: float = DEFAULT_MARGIN) -> LemmaReport:
    _check_margin(margin)
    n = chi.nominal_degree
    has_lead = not chi.is_zero and chi.actual_degree == n
    has_constant = chi.coeffs[0] != 0
    if not (has_lead or has_constant):
        raise PreconditionError("neither lemma applies: both a_n and a_0 vanish")
    chi_star = n_inverse(chi)

    lemma1 = reciprocity = None
    if has_lead:
        stable = is_schur_stable(chi, margin).verdict
        roots_side = {
            Stability.STABLE: Tristate.YES,
            Stability.UNSTABLE: Tristate.NO,
            Stability.MARGINAL: Tristate.MARGINAL,
        }[stable]
        omission = zero_omitted_closed_disk(chi_star, margin)
        lemma1 = LemmaSides(
            roots_side, omission.verdict, _compare(roots_side, omission.verdict)
        )
        reciprocity = _compare(roots_side, omission.root_side)

    lemma2 = None
    if has_constant:
        omitted_side = zero_omitted_open_disk(chi, margin)
        roots_side = roots_in_closed_disk(chi_star, margin)
        lemma2 = LemmaSides(roots_side, omitted_side, _compare(roots_side, omitted_side))

    report = LemmaReport(margin, lemma1, lemma2, reciprocity)
    if not report.consistent:
        logger.warning("Lemma sides disagree outside the margin band for %s", chi)
    return report
