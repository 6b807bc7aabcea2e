from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# binomials up to this degree are exact integers converted to float once;
# above it they go through lgamma and the ratio is formed in log space
EXACT_BINOMIAL_LIMIT = 62


class KoebePolyError(Exception):
    pass


class PreconditionError(KoebePolyError, ValueError):
    pass


class NumericRangeError(KoebePolyError, ArithmeticError):
    pass


class ConvergenceError(KoebePolyError, RuntimeError):
    pass


def as_scalar(value: complex | float | int, name: str = "value") -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise PreconditionError(f"{name} must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class Polynomial:
    """
    Dense complex polynomial at an explicit nominal degree.

    coeffs[k] is the coefficient of z**k. Trailing zeros up to the nominal
    degree are stored and never trimmed, since n-inversion depends on n
    even when the leading coefficient vanishes.
    """

    coeffs: tuple[complex, ...]
    nominal_degree: int

    def __post_init__(self):
        if self.nominal_degree < 0:
            raise PreconditionError(
                f"nominal degree must be non-negative, got {self.nominal_degree}"
            )
        coeffs = tuple(as_scalar(c, "coefficient") for c in self.coeffs)
        if len(coeffs) != self.nominal_degree + 1:
            raise PreconditionError(
                f"expected {self.nominal_degree + 1} coefficients for nominal degree "
                f"{self.nominal_degree}, got {len(coeffs)}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_coeffs(
        cls, coeffs: Iterable[complex | float | int], nominal_degree: int | None = None
    ) -> Polynomial:
        values = list(coeffs)
        if nominal_degree is None:
            nominal_degree = len(values) - 1
        if len(values) > nominal_degree + 1:
            extra = values[nominal_degree + 1 :]
            if any(complex(c) != 0 for c in extra):
                raise PreconditionError(
                    f"nonzero coefficients above nominal degree {nominal_degree}"
                )
            values = values[: nominal_degree + 1]
        values.extend([0j] * (nominal_degree + 1 - len(values)))
        return cls(tuple(values), nominal_degree)

    @classmethod
    def zero(cls, nominal_degree: int = 0) -> Polynomial:
        return cls((0j,) * (nominal_degree + 1), nominal_degree)

    @classmethod
    def monomial(cls, m: int, nominal_degree: int, c: complex = 1) -> Polynomial:
        if not 0 <= m <= nominal_degree:
            raise PreconditionError(f"z^{m} does not fit nominal degree {nominal_degree}")
        coeffs = [0j] * (nominal_degree + 1)
        coeffs[m] = complex(c)
        return cls(tuple(coeffs), nominal_degree)

    @classmethod
    def from_roots(
        cls,
        roots: Iterable[complex],
        lead: complex = 1,
        nominal_degree: int | None = None,
    ) -> Polynomial:
        coeffs = [complex(lead)]
        for r in roots:
            r = as_scalar(r, "root")
            # multiply by (z - r)
            shifted = [0j] + coeffs
            for k in range(len(coeffs)):
                shifted[k] -= r * coeffs[k]
            coeffs = shifted
        return cls.from_coeffs(coeffs, nominal_degree)

    @property
    def actual_degree(self) -> int:
        """Largest k with a nonzero coefficient; -1 for the zero polynomial."""
        for k in range(self.nominal_degree, -1, -1):
            if self.coeffs[k] != 0:
                return k
        return -1

    @property
    def is_zero(self) -> bool:
        return self.actual_degree < 0

    @property
    def scale(self) -> float:
        return max(abs(c) for c in self.coeffs)

    def __str__(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            terms.append(f"({c.real:g}{c.imag:+g}j)" + ("" if k == 0 else f"z^{k}"))
        body = " + ".join(terms) if terms else "0"
        return f"{body} [n={self.nominal_degree}]"


@dataclass(frozen=True)
class Disk:
    center: complex = 0j
    radius: float = 1.0
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", as_scalar(self.center, "center"))
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise PreconditionError(f"disk radius must be finite and >= 0, got {self.radius}")

    @classmethod
    def unit(cls, closed: bool = False) -> Disk:
        return cls(0j, 1.0, closed)

    def contains(self, z: complex) -> bool:
        dist = abs(z - self.center)
        return dist <= self.radius if self.closed else dist < self.radius


def evaluate(q: Polynomial, z: complex) -> complex:
    z = as_scalar(z, "z")
    result = 0j
    for c in reversed(q.coeffs):
        result = result * z + c
    return result


def evaluate_many(q: Polynomial, zs: np.ndarray) -> np.ndarray:
    """Horner's scheme over an array of points, same association order as evaluate()."""
    zs = np.asarray(zs, dtype=np.complex128)
    if not np.all(np.isfinite(zs)):
        raise PreconditionError("evaluation points must be finite")
    result = np.zeros_like(zs)
    for c in reversed(q.coeffs):
        result = result * zs + c
    return result


def n_inverse(q: Polynomial) -> Polynomial:
    return Polynomial(q.coeffs[::-1], q.nominal_degree)


@lru_cache(maxsize=None)
def binomial_row(n: int) -> tuple[int, ...]:
    row = [1]
    for _ in range(n):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return tuple(row)


def binomial(n: int, k: int) -> int:
    if not 0 <= k <= n:
        return 0
    if n <= EXACT_BINOMIAL_LIMIT:
        return binomial_row(n)[k]
    return math.comb(n, k)


def _log_binomial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def norm_nq(q: Polynomial) -> float:
    """n(q) = max_k |q_k| / C(n, k) at the nominal degree n."""
    n = q.nominal_degree
    if n < 1:
        raise PreconditionError("n(q) needs nominal degree >= 1")
    if n <= EXACT_BINOMIAL_LIMIT:
        row = binomial_row(n)
        return max(abs(c) / row[k] for k, c in enumerate(q.coeffs))
    best = 0.0
    for k, c in enumerate(q.coeffs):
        if c == 0:
            continue
        best = max(best, math.exp(math.log(abs(c)) - _log_binomial(n, k)))
    return best


def rescale(q: Polynomial, R: float) -> Polynomial:
    """(1/R) q(R z): coefficient k picks up R**(k-1)."""
    if not (math.isfinite(R) and R > 0):
        raise PreconditionError(f"rescale radius must be positive and finite, got {R}")
    coeffs = []
    for k, c in enumerate(q.coeffs):
        if c == 0:
            coeffs.append(0j)
            continue
        try:
            factor = R ** (k - 1)
        except OverflowError as exc:
            raise NumericRangeError(f"R**{k - 1} overflows for R={R}") from exc
        value = c * factor
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise NumericRangeError(f"coefficient {k} overflows when rescaled by R={R}")
        coeffs.append(value)
    return Polynomial(tuple(coeffs), q.nominal_degree)


def derivative(q: Polynomial) -> Polynomial:
    if q.nominal_degree == 0:
        return Polynomial.zero(0)
    coeffs = tuple(k * q.coeffs[k] for k in range(1, q.nominal_degree + 1))
    return Polynomial(coeffs, q.nominal_degree - 1)


def subtract_const(q: Polynomial, w: complex) -> Polynomial:
    w = as_scalar(w, "w")
    return Polynomial((q.coeffs[0] - w,) + q.coeffs[1:], q.nominal_degree)


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    n = max(p.nominal_degree, q.nominal_degree)
    a = p.coeffs + (0j,) * (n - p.nominal_degree)
    b = q.coeffs + (0j,) * (n - q.nominal_degree)
    return Polynomial(tuple(x + y for x, y in zip(a, b)), n)


def scalar_multiply(q: Polynomial, c: complex) -> Polynomial:
    c = as_scalar(c, "c")
    return Polynomial(tuple(c * x for x in q.coeffs), q.nominal_degree)


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    n = p.nominal_degree + q.nominal_degree
    coeffs = [0j] * (n + 1)
    for i, a in enumerate(p.coeffs):
        if a == 0:
            continue
        for j, b in enumerate(q.coeffs):
            coeffs[i + j] += a * b
    return Polynomial(tuple(coeffs), n)


def compose_affine(q: Polynomial, a: complex, b: complex) -> Polynomial:
    """
    Coefficients of q(a + b z) by binomial expansion:
    sum_j q_j (a + b z)^j = sum_k z^k b^k sum_{j>=k} C(j, k) q_j a^(j-k).
    """
    a = as_scalar(a, "a")
    b = as_scalar(b, "b")
    n = q.nominal_degree
    a_pow = [1 + 0j]
    b_pow = [1 + 0j]
    for _ in range(n):
        a_pow.append(a_pow[-1] * a)
        b_pow.append(b_pow[-1] * b)
    coeffs = []
    for k in range(n + 1):
        total = 0j
        for j in range(k, n + 1):
            if q.coeffs[j] != 0:
                total += binomial(j, k) * q.coeffs[j] * a_pow[j - k]
        value = total * b_pow[k]
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise NumericRangeError(f"coefficient {k} of the affine substitution overflows")
        coeffs.append(value)
    return Polynomial(tuple(coeffs), n)

