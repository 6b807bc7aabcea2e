from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .poly_core import Disk, Polynomial, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 1e-9
MAX_SWEEPS = 200
STEP_TOLERANCE = 1e-14
# Newton sweeps when sharpening a cluster to a multiple root
REFINE_SWEEPS = 60

# starting circle: Cauchy radius, rotated by a fixed angle so that guesses
# never sit on the symmetry axes of real polynomials
START_OFFSET = 0.4
RETRY_OFFSET = 1.3
RETRY_RADIUS_FACTOR = 2.0

EPS = np.finfo(np.float64).eps


class Placement(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class RootSet:
    roots: tuple[complex, ...]
    residuals: tuple[float, ...]
    scale: float
    converged: bool
    sweeps: int = 0

    @property
    def degree(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class DiskClassification:
    disk: Disk
    margin: float
    roots: tuple[complex, ...]
    verdicts: tuple[Placement, ...]

    def all_inside(self) -> bool:
        return all(v is Placement.INSIDE for v in self.verdicts)

    def any_inside(self) -> bool:
        return any(v is Placement.INSIDE for v in self.verdicts)

    def all_outside(self) -> bool:
        return all(v is Placement.OUTSIDE for v in self.verdicts)

    def any_outside(self) -> bool:
        return any(v is Placement.OUTSIDE for v in self.verdicts)

    def any_marginal(self) -> bool:
        return any(v is Placement.MARGINAL for v in self.verdicts)

    def with_placement(self, placement: Placement) -> list[complex]:
        return [r for r, v in zip(self.roots, self.verdicts) if v is placement]


def classify_point(z: complex, disk: Disk, margin: float = DEFAULT_MARGIN) -> Placement:
    dist = abs(z - disk.center)
    if dist < disk.radius - margin:
        return Placement.INSIDE
    if dist > disk.radius + margin:
        return Placement.OUTSIDE
    return Placement.MARGINAL


def classify_roots(
    rs: RootSet, d: Disk, margin: float = DEFAULT_MARGIN
) -> DiskClassification:
    if not margin > 0:
        raise PreconditionError(f"classification margin must be positive, got {margin}")
    return DiskClassification(
        disk=d,
        margin=margin,
        roots=rs.roots,
        verdicts=tuple(classify_point(r, d, margin) for r in rs.roots),
    )


def _horner(coeffs: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Value, derivative and rounding-error bound of each row polynomial at
    each point. coeffs is (m, d+1) low-to-high, z is (m, k).
    """
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    bound = np.zeros(z.shape, dtype=np.float64)
    az = np.abs(z)
    for k in range(coeffs.shape[1] - 1, -1, -1):
        c = coeffs[:, k : k + 1]
        dp = dp * z + p
        p = p * z + c
        bound = bound * az + np.abs(c)
    d = coeffs.shape[1] - 1
    return p, dp, 2 * max(d, 1) * EPS * bound


def _start_points(coeffs: np.ndarray, radius_factor: float, offset: float) -> np.ndarray:
    m, width = coeffs.shape
    d = width - 1
    lead = np.abs(coeffs[:, -1])
    cauchy = 1 + np.max(np.abs(coeffs[:, :-1]), axis=1) / lead
    angles = 2 * np.pi * np.arange(d) / d + offset
    return (radius_factor * cauchy)[:, None] * np.exp(1j * angles)[None, :]


def _aberth(
    coeffs: np.ndarray,
    radius_factor: float = 1.0,
    offset: float = START_OFFSET,
    max_sweeps: int = MAX_SWEEPS,
    tol: float = STEP_TOLERANCE,
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Aberth-Ehrlich iteration on a stack of polynomials sharing one degree.

    Each row is independent: an approximation is frozen once its step drops
    below tol*(1+|z|) or its value is within the Horner rounding bound, and a
    row is converged when all of its approximations are frozen.
    """
    m, width = coeffs.shape
    d = width - 1
    z = _start_points(coeffs, radius_factor, offset)
    frozen = np.zeros(z.shape, dtype=bool)
    diagonal = np.eye(d, dtype=bool)[None, :, :]
    sweeps = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while sweeps < max_sweeps and not frozen.all():
            sweeps += 1
            p, dp, bound = _horner(coeffs, z)
            settled = np.abs(p) <= bound
            diff = z[:, :, None] - z[:, None, :]
            inv = np.where(diagonal, 0, 1 / np.where(diagonal, 1, diff))
            s = inv.sum(axis=2)
            step = p / (dp - p * s)
            usable = np.isfinite(step)
            move = ~frozen & ~settled & usable
            z = np.where(move, z - np.where(usable, step, 0), z)
            small = usable & (np.abs(step) <= tol * (1 + np.abs(z)))
            frozen |= settled | small
    return z, frozen.all(axis=1), sweeps


def _solve_rows(
    coeffs: np.ndarray, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray, int]:
    z, converged, sweeps = _aberth(coeffs, max_sweeps=max_sweeps)
    if not converged.all():
        stuck = np.flatnonzero(~converged)
        logger.debug(
            "Retrying %d of %d rows with a wider start circle", len(stuck), len(converged)
        )
        z2, converged2, sweeps2 = _aberth(
            coeffs[stuck], RETRY_RADIUS_FACTOR, RETRY_OFFSET, max_sweeps
        )
        z[stuck] = z2
        converged[stuck] = converged2
        sweeps += sweeps2
    return _polish_rows(coeffs, z), converged, sweeps


def _polish_rows(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """
    Resolve clusters of approximations into multiple roots.

    Approximations whose Weierstrass inclusion disks overlap are grouped; a
    group of m disks holds m roots. The group is replaced by the root of the
    (m-1)-th derivative nearest its centroid, which is simple where the
    group's roots coincide.
    """
    m, d = z.shape
    if d < 2:
        return z
    p, _, bound = _horner(coeffs, z)
    diff = z[:, :, None] - z[:, None, :]
    eye = np.eye(d, dtype=bool)[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        spread = np.abs(np.prod(np.where(eye, 1, diff), axis=2))
        radii = d * (np.abs(p) + bound) / (np.abs(coeffs[:, -1:]) * spread)
    radii = np.where(np.isfinite(radii), radii, np.inf)
    overlap = (np.abs(diff) <= radii[:, :, None] + radii[:, None, :]) & ~eye
    for i in np.flatnonzero(overlap.any(axis=(1, 2))):
        z[i] = _merge_clusters(coeffs[i], z[i], p[i], bound[i], overlap[i])
    return z


def _value(coeffs: np.ndarray, z: complex) -> complex:
    value = 0j
    for c in reversed(coeffs):
        value = value * z + c
    return complex(value)


def _derivative_row(coeffs: np.ndarray, order: int) -> np.ndarray:
    for _ in range(order):
        coeffs = coeffs[1:] * np.arange(1, len(coeffs))
    return coeffs


def _refine_multiple(coeffs: np.ndarray, start: complex, multiplicity: int) -> complex:
    """Newton on the (multiplicity-1)-th derivative, while its residual shrinks."""
    f = _derivative_row(coeffs, multiplicity - 1)
    df = _derivative_row(f, 1)
    z, fz = start, _value(f, start)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(REFINE_SWEEPS):
            if fz == 0:
                break
            slope = _value(df, z)
            if slope == 0:
                break
            candidate = z - fz / slope
            fc = _value(f, candidate)
            if not abs(fc) < abs(fz):
                break
            z, fz = candidate, fc
    return z


def _merge_clusters(
    coeffs: np.ndarray,
    roots: np.ndarray,
    p: np.ndarray,
    bound: np.ndarray,
    overlap: np.ndarray,
) -> np.ndarray:
    d = len(roots)
    # connected components of the overlap graph, lowest index first
    label = list(range(d))
    for i in range(d):
        for j in range(i + 1, d):
            if overlap[i, j]:
                a, b = label[i], label[j]
                if a != b:
                    low, high = min(a, b), max(a, b)
                    label = [low if x == high else x for x in label]

    polished = roots.copy()
    for group in sorted(set(label)):
        members = [i for i in range(d) if label[i] == group]
        if len(members) < 2:
            continue
        centroid = complex(roots[members].mean())
        center = _refine_multiple(coeffs, centroid, len(members))
        if not np.isfinite(center):
            continue
        cp, _, cbound = _horner(coeffs[None, :], np.array([[center]]))
        member_worst = max(np.abs(p[members]).max(), bound[members].max())
        if abs(cp[0, 0]) <= max(member_worst, cbound[0, 0]):
            logger.debug("Merged %d approximations into %r", len(members), center)
            polished[members] = center
    return polished


def _residuals(coeffs: np.ndarray, roots: Sequence[complex]) -> tuple[float, ...]:
    return tuple(abs(_value(coeffs, r)) for r in roots)


def find_roots(p: Polynomial, max_sweeps: int = MAX_SWEEPS) -> RootSet:
    d = p.actual_degree
    if d < 0:
        raise PreconditionError("cannot solve the zero polynomial")
    if d == 0:
        raise PreconditionError("a nonzero constant has no roots")
    full = p.coeffs[: d + 1]

    # roots at the origin are deflated exactly
    low = 0
    while full[low] == 0:
        low += 1
    reduced = np.array(full[low:], dtype=np.complex128)
    roots: list[complex] = [0j] * low
    converged = True
    sweeps = 0
    if len(reduced) == 2:
        roots.append(complex(-reduced[0] / reduced[1]))
    elif len(reduced) > 2:
        z, ok, sweeps = _solve_rows(reduced[None, :], max_sweeps)
        roots.extend(complex(r) for r in z[0])
        converged = bool(ok[0])
        if not converged:
            logger.warning("Root solve of degree %d hit the %d sweep cap", d, max_sweeps)

    return RootSet(
        roots=tuple(roots),
        residuals=_residuals(np.array(full, dtype=np.complex128), roots),
        scale=p.scale,
        converged=converged,
        sweeps=sweeps,
    )


def find_roots_many(
    polys: Sequence[Polynomial], workers: int | None = None
) -> list[RootSet]:
    if workers is None or workers <= 1:
        return [find_roots(p) for p in polys]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(find_roots, polys))


@dataclass(frozen=True)
class ShiftedRoots:
    """Roots of q(z) - w_j for each w_j; row j of roots belongs to ws[j]."""

    ws: np.ndarray
    roots: np.ndarray
    converged: np.ndarray

    def placements(self, disk: Disk, margin: float = DEFAULT_MARGIN) -> np.ndarray:
        """Array of 0 (inside), 1 (marginal), 2 (outside) per root."""
        dist = np.abs(self.roots - disk.center)
        return np.where(
            dist < disk.radius - margin, 0, np.where(dist > disk.radius + margin, 2, 1)
        )


def roots_of_shifts(q: Polynomial, ws: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> ShiftedRoots:
    """Solve q(z) = w_j for every w_j at once."""
    d = q.actual_degree
    if d < 1:
        raise PreconditionError("q must be non-constant")
    ws = np.atleast_1d(np.asarray(ws, dtype=np.complex128))
    if not np.all(np.isfinite(ws)):
        raise PreconditionError("shift values must be finite")
    coeffs = np.tile(np.array(q.coeffs[: d + 1], dtype=np.complex128), (len(ws), 1))
    coeffs[:, 0] -= ws
    if d == 1:
        roots = (-coeffs[:, 0] / coeffs[:, 1])[:, None]
        return ShiftedRoots(ws, roots, np.ones(len(ws), dtype=bool))
    roots, converged, _ = _solve_rows(coeffs, max_sweeps)
    return ShiftedRoots(ws, roots, converged)
