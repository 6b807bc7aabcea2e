#!/usr/bin/env python3

from __future__ import annotations

import argparse
import logging
import math
import pathlib
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

from .mod_covering import (
    DEFAULT_GRID,
    MIN_GRID,
    SPOT_CHECKS,
    SPOT_SHRINK,
    CertificateStatus,
    MembershipVerdict,
    boundary_curve,
    covering_lower_bound,
    estimate_inradius,
    extremal_corollary3,
    extremal_lemma3,
    lemma3_bound_check,
    membership,
)
from .mod_distortion import (
    DERIVATIVE_TOLERANCE,
    RESIDUAL_TOLERANCE,
    SLACK_TOLERANCE,
    check_intermediate,
    distortion_witness,
)
from .mod_stability import BOUNDARY_GRID, LemmaSides, is_schur_stable, lemma_equivalence_check
from .poly_core import (
    ConvergenceError,
    Disk,
    NumericRangeError,
    Polynomial,
    PreconditionError,
    n_inverse,
    norm_nq,
)
from .report import (
    COMMANDS,
    SCHEMA,
    IJob,
    IReport,
    WireFormatError,
    decode_complex,
    encode_complex,
    encode_float,
    format_complex,
    load_json,
    parse_complex,
    polynomial_from_wire,
    polynomial_to_wire,
    write_csv,
    write_json,
)
from .rootfind import DEFAULT_MARGIN
from .version import __version__

logger = logging.getLogger(__name__)

MAX_DEGREE = 64
# sharpness of the 1/n covering radius is accepted within this fraction of R/n
SHARPNESS_TOLERANCE = 1e-3

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_PRECONDITION = 3

NEEDS_POLYNOMIAL = {
    "inverse",
    "stability",
    "norm",
    "covering",
    "inradius",
    "membership",
    "lemma3",
    "distortion",
    "boundary",
}


@dataclass(frozen=True)
class JobSpec:
    command: str
    polynomial: Polynomial | None = None
    R: float = 1.0
    w: complex | None = None
    z1: complex | None = None
    z2: complex | None = None
    n: int | None = None
    kind: str = "corollary3"
    grid: int = DEFAULT_GRID
    margin: float = DEFAULT_MARGIN
    format: str | None = None
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise WireFormatError(f"unknown command {self.command!r}")
        if self.command in NEEDS_POLYNOMIAL and self.polynomial is None:
            raise WireFormatError(f"{self.command} needs a polynomial")
        if not (math.isfinite(self.R) and self.R > 0):
            raise WireFormatError(f"radius must be positive and finite, got {self.R}")
        if not (math.isfinite(self.margin) and self.margin > 0):
            raise WireFormatError(f"margin must be positive and finite, got {self.margin}")
        if self.grid < MIN_GRID:
            raise WireFormatError(f"grid must be at least {MIN_GRID}, got {self.grid}")
        if self.kind not in ("lemma3", "corollary3"):
            raise WireFormatError(f"unknown extremal kind {self.kind!r}")
        if self.format not in (None, "json", "csv"):
            raise WireFormatError(f"unknown output format {self.format!r}")
        if self.format == "csv" and self.command != "boundary":
            raise WireFormatError("only the boundary command writes CSV")
        for name in ("w", "z1", "z2"):
            value = getattr(self, name)
            if value is not None and not (
                math.isfinite(value.real) and math.isfinite(value.imag)
            ):
                raise WireFormatError(f"{name} must be finite, got {value!r}")
        missing = {
            "membership": ("w",),
            "lemma3": ("w",),
            "distortion": ("z1", "z2"),
            "sharpness": ("n",),
        }.get(self.command, ())
        for name in missing:
            if getattr(self, name) is None:
                raise WireFormatError(f"{self.command} needs --{name}")

    @property
    def output_format(self) -> str:
        if self.format is not None:
            return self.format
        return "csv" if self.command == "boundary" else "json"

    def check_degree(self, max_degree: int) -> None:
        degrees = [self.n or 0]
        if self.polynomial is not None:
            degrees.append(self.polynomial.nominal_degree)
        if max(degrees) > max_degree:
            raise WireFormatError(
                f"degree {max(degrees)} exceeds the cap of {max_degree} (see --max-degree)"
            )

    def to_wire(self) -> IJob:
        job: IJob = {"command": self.command}
        if self.polynomial is not None:
            job["polynomial"] = polynomial_to_wire(self.polynomial)
        job["R"] = self.R
        for name in ("w", "z1", "z2"):
            value = getattr(self, name)
            if value is not None:
                job[name] = format_complex(value)
        if self.n is not None:
            job["n"] = self.n
        if self.command == "sharpness":
            job["kind"] = self.kind
        job["grid"] = self.grid
        job["margin"] = self.margin
        job["format"] = self.output_format
        return job

    @classmethod
    def from_wire(cls, data: Any) -> JobSpec:
        if not isinstance(data, dict) or "command" not in data:
            raise WireFormatError('a job needs a "command"')
        known = set(IJob.__annotations__) | {"out"}
        unknown = set(data) - known
        if unknown:
            raise WireFormatError(f"unknown job fields: {', '.join(sorted(unknown))}")
        kwargs: dict[str, Any] = {"command": data["command"]}
        if "polynomial" in data:
            kwargs["polynomial"] = polynomial_from_wire(data["polynomial"])
        for name in ("w", "z1", "z2"):
            if name in data:
                kwargs[name] = decode_complex(data[name])
        for name, kind in (("R", float), ("margin", float), ("grid", int), ("n", int)):
            if name in data:
                value = data[name]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise WireFormatError(f"{name} must be a number, got {value!r}")
                if kind is int and value != int(value):
                    raise WireFormatError(f"{name} must be an integer, got {value!r}")
                kwargs[name] = kind(value)
        for name in ("kind", "format", "out"):
            if name in data:
                kwargs[name] = data[name]
        return cls(**kwargs)


@dataclass(frozen=True)
class JobOutcome:
    status: int
    report: IReport | None = None
    rows: list[tuple[float, float, float]] | None = None


def job_from_report(report: dict[str, Any]) -> JobSpec:
    if report.get("schema") != SCHEMA:
        raise WireFormatError(f"unsupported report schema {report.get('schema')!r}")
    return JobSpec.from_wire(report["inputs"])


def _sides(sides: LemmaSides | None) -> dict[str, str] | None:
    if sides is None:
        return None
    return {
        "roots_side": sides.roots_side.value,
        "omitted_side": sides.omitted_side.value,
        "agreement": sides.agreement.value,
    }


def _run_inverse(job: JobSpec):
    return {"polynomial": polynomial_to_wire(n_inverse(job.polynomial))}, None, {}, EXIT_OK


def _run_norm(job: JobSpec):
    return {"norm": norm_nq(job.polynomial)}, None, {}, EXIT_OK


def _run_stability(job: JobSpec):
    verdict = is_schur_stable(job.polynomial, job.margin)
    lemmas = lemma_equivalence_check(job.polynomial, job.margin)
    result = {
        "root": None if verdict.root is None else encode_complex(verdict.root),
        "min_modulus": verdict.min_modulus,
        "lemma1": _sides(lemmas.lemma1),
        "lemma2": _sides(lemmas.lemma2),
        "reciprocity": None if lemmas.reciprocity is None else lemmas.reciprocity.value,
        "consistent": lemmas.consistent,
    }
    tolerances = {"margin": job.margin, "boundary_grid": BOUNDARY_GRID}
    return result, verdict.verdict.value, tolerances, EXIT_OK


def _covering_tolerances(job: JobSpec) -> dict[str, float | int]:
    return {
        "margin": job.margin,
        "grid": job.grid,
        "spot_checks": SPOT_CHECKS,
        "spot_shrink": SPOT_SHRINK,
    }


def _certificate(q: Polynomial, job: JobSpec):
    cert = covering_lower_bound(q, job.R, job.grid, job.margin)
    result = {
        "bound": cert.bound,
        "oracle_inradius": encode_float(cert.oracle_inradius),
        "unbounded": math.isinf(cert.oracle_inradius),
        "grid_size": cert.grid_size,
        "R": cert.R,
        "spot_radius": cert.spot_radius,
        "linear_floor": cert.linear_floor,
        "grid_tolerance": cert.grid_tolerance,
        "uncovered_boundary_samples": len(cert.uncovered_boundary_samples),
    }
    status = EXIT_NUMERIC if cert.status is CertificateStatus.INDETERMINATE else EXIT_OK
    return cert, result, status


def _run_covering(job: JobSpec):
    cert, result, status = _certificate(job.polynomial, job)
    return result, cert.status.value, _covering_tolerances(job), status


def _run_inradius(job: JobSpec):
    estimate = estimate_inradius(job.polynomial, job.R, job.grid, job.margin)
    result = {
        "radius": encode_float(estimate.radius),
        "unbounded": estimate.unbounded,
        "theta": estimate.theta,
        "w": None if estimate.w is None else encode_complex(estimate.w),
        "grid_tolerance": estimate.grid_tolerance,
        "kept_samples": len(estimate.kept),
    }
    return result, None, {"margin": job.margin, "grid": job.grid}, EXIT_OK


def _run_membership(job: JobSpec):
    found = membership(job.polynomial, job.w, Disk(0j, job.R), job.margin)
    result = {
        "witness_preimage": (
            None if found.witness_preimage is None else encode_complex(found.witness_preimage)
        ),
        "preimages": [encode_complex(z) for z in found.preimages],
    }
    status = EXIT_NUMERIC if found.verdict is MembershipVerdict.INDETERMINATE else EXIT_OK
    return result, found.verdict.value, {"margin": job.margin}, status


def _lemma3_result(q: Polynomial, w: complex, margin: float):
    checked = lemma3_bound_check(q, w, margin)
    result = {
        "membership": checked.membership.value,
        "rows": [
            {
                "k": row.k,
                "coefficient": row.coefficient,
                "bound": row.bound,
                "slack": row.slack,
                "passed": row.passed,
            }
            for row in checked.rows
        ],
        "tight": checked.is_tight(),
    }
    return checked, result


def _run_lemma3(job: JobSpec):
    checked, result = _lemma3_result(job.polynomial, job.w, job.margin)
    return result, "passed" if checked.passed else "failed", {"margin": job.margin}, EXIT_OK


def _run_distortion(job: JobSpec):
    witness = distortion_witness(job.polynomial, job.z1, job.z2)
    result = {
        "branch": witness.branch.value,
        "zeta": encode_complex(witness.zeta),
        "residual": witness.residual,
        "lhs": witness.lhs,
        "rhs": witness.rhs,
        "slack": witness.slack,
        "w": None if witness.w is None else encode_complex(witness.w),
        "R": witness.R,
        "eta": None if witness.eta is None else encode_complex(witness.eta),
        "intermediate": check_intermediate(witness),
        "violations": list(witness.violations),
    }
    tolerances = {
        "residual": RESIDUAL_TOLERANCE,
        "slack": SLACK_TOLERANCE,
        "derivative": DERIVATIVE_TOLERANCE,
    }
    return result, "verified" if witness.ok else "violated", tolerances, EXIT_OK


def _run_sharpness(job: JobSpec):
    if job.kind == "lemma3":
        w = job.w if job.w is not None else 1 + 0j
        q = extremal_lemma3(job.n, w)
        checked, result = _lemma3_result(q, w, job.margin)
        result["polynomial"] = polynomial_to_wire(q)
        verdict = "sharp" if checked.passed and checked.is_tight() else "not_sharp"
        return result, verdict, {"margin": job.margin, "relative": 1e-9}, EXIT_OK

    q = extremal_corollary3(job.n, job.R)
    cert, result, status = _certificate(q, job)
    expected = job.R / job.n
    result["polynomial"] = polynomial_to_wire(q)
    result["expected_radius"] = expected
    sharp = (
        cert.verified
        and abs(cert.oracle_inradius - expected) <= SHARPNESS_TOLERANCE * expected
    )
    tolerances = _covering_tolerances(job)
    tolerances["sharpness"] = SHARPNESS_TOLERANCE
    return result, "sharp" if sharp else "not_sharp", tolerances, status


def _run_boundary(job: JobSpec):
    thetas, values = boundary_curve(job.polynomial, job.R, job.grid)
    result = {
        "theta": [float(t) for t in thetas],
        "re": [float(v.real) for v in values],
        "im": [float(v.imag) for v in values],
    }
    return result, None, {"grid": job.grid}, EXIT_OK


RUNNERS: dict[str, Callable[[JobSpec], tuple[dict[str, Any], str | None, dict, int]]] = {
    "inverse": _run_inverse,
    "stability": _run_stability,
    "norm": _run_norm,
    "covering": _run_covering,
    "inradius": _run_inradius,
    "membership": _run_membership,
    "lemma3": _run_lemma3,
    "distortion": _run_distortion,
    "sharpness": _run_sharpness,
    "boundary": _run_boundary,
}


def _error_report(job: JobSpec, message: str) -> IReport:
    return {
        "schema": SCHEMA,
        "command": job.command,
        "inputs": job.to_wire(),
        "tolerances": {},
        "result": {},
        "verdict": None,
        "error": message,
    }


def run(job: JobSpec) -> JobOutcome:
    logger.info("Solving %s...", job.command)
    try:
        result, verdict, tolerances, status = RUNNERS[job.command](job)
    except WireFormatError as exc:
        return JobOutcome(EXIT_USAGE, _error_report(job, str(exc)))
    except PreconditionError as exc:
        logger.error("Precondition violated: %s", exc)
        return JobOutcome(EXIT_PRECONDITION, _error_report(job, str(exc)))
    except (NumericRangeError, ConvergenceError) as exc:
        logger.error("Numeric failure: %s", exc)
        return JobOutcome(EXIT_NUMERIC, _error_report(job, str(exc)))

    report: IReport = {
        "schema": SCHEMA,
        "command": job.command,
        "inputs": job.to_wire(),
        "tolerances": tolerances,
        "result": result,
        "verdict": verdict,
    }
    rows = None
    if job.output_format == "csv":
        rows = list(zip(result["theta"], result["re"], result["im"]))
    logger.info("Done.")
    return JobOutcome(status, report, rows)


def emit(outcome: JobOutcome, dest: str | None = None) -> None:
    if outcome.rows is not None:
        write_csv(("theta", "re", "im"), outcome.rows, dest)
    elif outcome.report is not None:
        write_json(outcome.report, dest)


def run_batch(jobs: Sequence[JobSpec], workers: int | None = None) -> list[JobOutcome]:
    if workers is None or workers <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="koebepoly",
        description="Covering, stability and distortion certificates for complex polynomials",
    )
    parser.add_argument(
        "COMMAND", nargs="?", choices=COMMANDS, help="Operation to run."
    )
    parser.add_argument(
        "--input",
        help='Polynomial JSON file ({"coeffs": [[re, im], ...], "nominal_degree": n}), or - for stdin.',
    )
    parser.add_argument(
        "--radius", type=float, default=1.0, help="Source disk radius R (default 1)."
    )
    parser.add_argument("--w", type=parse_complex, help="Target value, as a+bi.")
    parser.add_argument("--z1", type=parse_complex, help="First point, as a+bi.")
    parser.add_argument("--z2", type=parse_complex, help="Second point, as a+bi.")
    parser.add_argument(
        "--grid",
        type=int,
        default=DEFAULT_GRID,
        help=f"Boundary samples for the inradius oracle (default {DEFAULT_GRID}, minimum {MIN_GRID}).",
    )
    parser.add_argument(
        "--margin",
        type=float,
        default=DEFAULT_MARGIN,
        help=f"Width of the marginal band around the unit circle (default {DEFAULT_MARGIN}).",
    )
    parser.add_argument("--n", type=int, help="Degree of the extremal polynomial.")
    parser.add_argument(
        "--kind",
        choices=("lemma3", "corollary3"),
        default="corollary3",
        help="Which extremal polynomial the sharpness command checks.",
    )
    parser.add_argument("--out", help="Output file, or - for stdout (default).")
    parser.add_argument(
        "--format", choices=("json", "csv"), help="Output format (csv for boundary only)."
    )
    parser.add_argument(
        "--jobs",
        type=pathlib.Path,
        help="JSON list of job objects to run; reports are written as a JSON array.",
    )
    parser.add_argument(
        "--workers", type=int, help="Worker threads for --jobs (default: run in order)."
    )
    parser.add_argument(
        "--max-degree",
        type=int,
        default=MAX_DEGREE,
        help=f"Reject polynomials above this nominal degree (default {MAX_DEGREE}).",
    )
    parser.add_argument(
        "--version",
        "-V",
        action="version",
        version=f"%(prog)s {__version__}",
        help="Show program's version number and exit.",
    )
    parser.add_argument(
        "--verbose", "-v", action="store_true", help="Show verbose logging output."
    )
    return parser


def _job_from_args(args: argparse.Namespace) -> JobSpec:
    polynomial = None
    if args.input is not None:
        polynomial = polynomial_from_wire(load_json(args.input))
    return JobSpec(
        command=args.COMMAND,
        polynomial=polynomial,
        R=args.radius,
        w=args.w,
        z1=args.z1,
        z2=args.z2,
        n=args.n,
        kind=args.kind,
        grid=args.grid,
        margin=args.margin,
        format=args.format,
        out=args.out,
    )


def _load_jobs(path: pathlib.Path) -> list[JobSpec]:
    data = load_json(path)
    if not isinstance(data, list):
        raise WireFormatError(f"{path}: expected a JSON list of jobs")
    return [JobSpec.from_wire(item) for item in data]


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv if argv is not None else sys.argv[1:])
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if (args.COMMAND is None) == (args.jobs is None):
        parser.error("give exactly one of COMMAND or --jobs")

    try:
        if args.jobs is not None:
            jobs = _load_jobs(args.jobs)
        else:
            jobs = [_job_from_args(args)]
        for job in jobs:
            job.check_degree(args.max_degree)
    # PreconditionError here means malformed polynomial data
    except (WireFormatError, PreconditionError, OSError) as exc:
        parser.exit(EXIT_USAGE, f"{parser.prog}: error: {exc}\n")

    if args.jobs is None:
        job = jobs[0]
        outcome = run(job)
        if outcome.report is not None and "error" in outcome.report:
            print(f"{parser.prog}: error: {outcome.report['error']}", file=sys.stderr)
        else:
            emit(outcome, args.out or job.out)
        return outcome.status

    outcomes = run_batch(jobs, args.workers)
    write_json([o.report for o in outcomes], args.out)
    return max((o.status for o in outcomes), default=EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
