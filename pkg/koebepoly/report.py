from __future__ import annotations

import csv
import json
import math
import pathlib
import re
import sys
from collections.abc import Iterable, Sequence
from typing import Any

from typing_extensions import Literal, NotRequired, TypedDict, get_args

from .poly_core import KoebePolyError, Polynomial

SCHEMA = "koebe-poly/1"

Command = Literal[
    "inverse",
    "stability",
    "norm",
    "covering",
    "inradius",
    "membership",
    "lemma3",
    "distortion",
    "sharpness",
    "boundary",
]
COMMANDS: tuple[str, ...] = get_args(Command)


class WireFormatError(KoebePolyError, ValueError):
    pass


class IPolynomial(TypedDict):
    coeffs: list[list[float]]
    nominal_degree: NotRequired[int]


class IJob(TypedDict):
    command: Command
    polynomial: NotRequired[IPolynomial]
    R: NotRequired[float]
    w: NotRequired[str]
    z1: NotRequired[str]
    z2: NotRequired[str]
    n: NotRequired[int]
    kind: NotRequired[Literal["lemma3", "corollary3"]]
    grid: NotRequired[int]
    margin: NotRequired[float]
    format: NotRequired[Literal["json", "csv"]]


class IReport(TypedDict):
    schema: str
    command: Command
    inputs: IJob
    tolerances: dict[str, float | int]
    result: dict[str, Any]
    verdict: str | None
    error: NotRequired[str]


_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"^(?P<re>[+-]?{_NUMBER})?(?:(?P<sign>[+-])(?P<im>{_NUMBER})?[ij])?$"
)
_IMAGINARY_RE = re.compile(rf"^(?P<im>[+-]?{_NUMBER})?[ij]$")


def parse_complex(text: str) -> complex:
    """Parse "a+bi" style text: "1", "-2.5", "3i", "-i", "1e-3-2i"."""
    s = text.strip().replace(" ", "")
    if not s:
        raise WireFormatError("empty complex number")
    match = _IMAGINARY_RE.match(s)
    if match:
        return complex(0.0, float(match.group("im") or "1"))
    match = _COMPLEX_RE.match(s)
    if not match or not (match.group("re") or match.group("sign")):
        raise WireFormatError(f"not a complex number: {text!r}")
    real = float(match.group("re")) if match.group("re") else 0.0
    imag = 0.0
    if match.group("sign"):
        imag = float(match.group("im") or "1")
        if match.group("sign") == "-":
            imag = -imag
    return complex(real, imag)


def format_complex(z: complex) -> str:
    """Inverse of parse_complex, exact for every finite value."""
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def encode_complex(z: complex) -> list[float]:
    return [z.real, z.imag]


def decode_complex(value: Any) -> complex:
    if isinstance(value, str):
        return parse_complex(value)
    if isinstance(value, bool):
        raise WireFormatError(f"not a complex number: {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re_part, im_part = value
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value):
            return complex(re_part, im_part)
    raise WireFormatError(f"expected [re, im], a number or an a+bi string, got {value!r}")


def encode_float(x: float) -> float | None:
    """JSON has no infinity; +inf becomes null and callers add "unbounded"."""
    return None if math.isinf(x) else x


def polynomial_to_wire(p: Polynomial) -> IPolynomial:
    return {
        "coeffs": [encode_complex(c) for c in p.coeffs],
        "nominal_degree": p.nominal_degree,
    }


def polynomial_from_wire(data: Any) -> Polynomial:
    if not isinstance(data, dict) or "coeffs" not in data:
        raise WireFormatError('a polynomial needs a "coeffs" list')
    coeffs = data["coeffs"]
    if not isinstance(coeffs, list) or not coeffs:
        raise WireFormatError('"coeffs" must be a non-empty list')
    nominal_degree = data.get("nominal_degree")
    if nominal_degree is not None and (
        not isinstance(nominal_degree, int) or isinstance(nominal_degree, bool)
    ):
        raise WireFormatError(f'"nominal_degree" must be an integer, got {nominal_degree!r}')
    return Polynomial.from_coeffs(
        [decode_complex(c) for c in coeffs], nominal_degree
    )


def load_json(source: str | pathlib.Path) -> Any:
    try:
        if str(source) == "-":
            return json.load(sys.stdin)
        with open(source, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise WireFormatError(f"{source}: invalid JSON ({exc})") from exc


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def _open_output(dest: str | pathlib.Path | None):
    if dest is None or str(dest) == "-":
        return sys.stdout, False
    return open(dest, "w", encoding="utf-8", newline=""), True


def write_json(data: Any, dest: str | pathlib.Path | None = None) -> None:
    f, close = _open_output(dest)
    try:
        f.write(dump_json(data))
    finally:
        if close:
            f.close()


def write_csv(
    header: Sequence[str],
    rows: Iterable[Sequence[float]],
    dest: str | pathlib.Path | None = None,
) -> None:
    f, close = _open_output(dest)
    try:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([repr(float(x)) for x in row] for row in rows)
    finally:
        if close:
            f.close()
