"""Command-line front end.

    indefzeta <command> --input job.json [--precision P] [--accuracy EPS]
              [--format text|structured] [--jobs N] [--set key=value ...]

A job document is JSON: ``{"command": ..., "precision": ..., "accuracy": ...,
"parameters": {...}}``.  Numbers are strings (``"676/3"``, ``"0.25"``, ``"-3"``)
or integers; complex numbers are ``[re, im]`` pairs; matrices are row-major
nested arrays.  Structured output echoes the parameters unchanged, so an
output document is also a valid input document.

Exit codes: 0 success, 2 unreadable job, 3 invalid parameters or domain,
4 no convergence at the requested precision.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Any

from mpmath import mp, mpc, mpf

from . import __version__
from .errors import (
    ConvergenceError,
    DomainError,
    IndefZetaError,
    PrecisionError,
    ValidationError,
)
from .mpcore import (
    AdmissibleVector,
    Characteristics,
    OmegaPoint,
    SymMatrix,
    current_digits,
    parse_rational,
    to_mp,
    working_precision,
)

SCHEMA = "indefzeta.result/1"
COMMANDS = ("theta", "zeta", "klf-s1", "klf-s0", "funceq-check", "stark")
EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_CONVERGENCE = 0, 2, 3, 4


class ParseError(Exception):
    """The job document cannot be read."""


# ---------------------------------------------------------------------------
# parameter parsing


def _exact(x, what: str):
    """An exact number from JSON: int, rational/decimal string or [re, im]."""
    if isinstance(x, bool):
        raise ParseError(f"{what}: booleans are not numbers")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        try:
            return parse_rational(x)
        except ValidationError as exc:
            raise ParseError(f"{what}: {exc}") from None
    if isinstance(x, list) and len(x) == 2:
        return (_exact(x[0], what), _exact(x[1], what))
    if isinstance(x, float):
        raise ParseError(f"{what}: give numbers as strings to keep them exact")
    raise ParseError(f"{what}: cannot read {x!r}")


def _vector(x, what: str, g: int = 2) -> tuple:
    if not isinstance(x, list) or len(x) != g:
        raise ParseError(f"{what}: expected a list of {g} numbers")
    return tuple(_exact(v, what) for v in x)


def _matrix(x, what: str) -> list:
    if not isinstance(x, list) or not x or any(not isinstance(r, list) or len(r) != len(x) for r in x):
        raise ParseError(f"{what}: expected a square nested list")
    return [[_exact(v, what) for v in row] for row in x]


def _complex_entry(v):
    return to_mp(v) if isinstance(v, tuple) else v


def _omega(params: dict) -> OmegaPoint:
    if "M" not in params:
        raise ParseError("parameter M is required")
    M = _matrix(params["M"], "M")
    N = _matrix(params["N"], "N") if params.get("N") is not None else None
    for A in (M, N):
        if A is not None and any(isinstance(v, tuple) for row in A for v in row):
            raise ParseError("M and N must be real")
    g = len(M)
    if N is None:
        N = [[0] * g for _ in range(g)]
    if len(N) != g:
        raise ParseError("M and N differ in size")
    return OmegaPoint(SymMatrix(M), SymMatrix(N))


def _cvec(params: dict, key: str, Om: OmegaPoint) -> AdmissibleVector:
    if key not in params:
        raise ParseError(f"parameter {key} is required")
    c = _vector(params[key], key, Om.g)
    return AdmissibleVector(tuple(_complex_entry(v) for v in c), Om.M)


def _real_vec(params: dict, key: str, g: int, default=None) -> tuple:
    if key not in params:
        if default is not None:
            return default
        raise ParseError(f"parameter {key} is required")
    v = _vector(params[key], key, g)
    if any(isinstance(x, tuple) for x in v):
        raise ParseError(f"{key} must be real")
    return v


def _svals(params: dict, default) -> list:
    """``s`` is one number or a list of numbers; a complex s is written [[re, im]]."""
    s = params.get("s", default)
    items = s if isinstance(s, list) else [s]
    if not items:
        raise ParseError("s: empty list")
    return [_complex_entry(_exact(x, "s")) for x in items]


# ---------------------------------------------------------------------------
# formatting


def fmt(x, digits: int) -> dict | str:
    if isinstance(x, mpc):
        return {"re": mp.nstr(x.real, digits), "im": mp.nstr(x.imag, digits)}
    if isinstance(x, (mpf, int)):
        return mp.nstr(mpf(x), digits)
    return str(x)


def _jsonable(x, digits: int):
    if isinstance(x, (mpf, mpc)):
        return fmt(x, digits)
    if isinstance(x, dict):
        return {str(k): _jsonable(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v, digits) for v in x]
    if isinstance(x, float):
        return repr(x)
    return x


# ---------------------------------------------------------------------------
# commands


def _cmd_theta(params: dict, eps, digits: int) -> dict:
    from .theta import ThetaRequest, theta, theta_null

    Om = _omega(params)
    c1, c2 = _cvec(params, "c1", Om), _cvec(params, "c2", Om)
    if "z" in params:
        z = tuple(_complex_entry(v) for v in _vector(params["z"], "z", Om.g))
        val, rep = theta(ThetaRequest(Om, c1, c2, eps, z=z))
    else:
        p = _real_vec(params, "p", Om.g)
        q = _real_vec(params, "q", Om.g)
        t = _exact(params.get("t", 1), "t")
        val, rep = theta_null(Om, p, q, c1, c2, eps, t=t)
    return {"value": val, "error_estimate": rep.error_estimate, "diagnostics": rep.as_dict()}


def _zeta_request(params: dict, eps):
    from .zeta import ZetaRequest

    Om = _omega(params)
    c1, c2 = _cvec(params, "c1", Om), _cvec(params, "c2", Om)
    chars = Characteristics(_real_vec(params, "p", 2, (0, 0)), _real_vec(params, "q", 2, (0, 0)))
    return ZetaRequest(Om, chars, c1, c2, 0, eps)


def _cmd_zeta(params: dict, eps, digits: int) -> dict:
    from .zeta import zeta_direct_many

    req = _zeta_request(params, eps)
    svals = _svals(params, "0")
    res = zeta_direct_many(req, svals)
    out = {"value": res.values[0], "error_estimate": res.error_estimate, "diagnostics": res.diagnostics}
    if len(svals) > 1:
        out["values"] = [{"s": fmt(s, digits), "value": fmt(v, digits)} for s, v in zip(res.svals, res.values)]
    return out


def _klf_common(params: dict):
    Om = _omega(params)
    c1, c2 = _cvec(params, "c1", Om), _cvec(params, "c2", Om)
    method = params.get("method", "auto")
    if method not in ("auto", "general", "pure-imaginary"):
        raise ParseError("method must be auto, general or pure-imaginary")
    pure = Om.is_pure_imaginary() and c1.is_real() and c2.is_real()
    if method == "pure-imaginary" and not pure:
        raise ValidationError("the pure imaginary formula needs N = 0 and real c")
    return Om, c1, c2, (pure if method == "auto" else method == "pure-imaginary")


def _klf_report(res, eps) -> dict:
    diag = dict(res.diagnostics)
    diag["rays"] = [p.as_dict() for p in res.plans]
    diag["pieces"] = res.pieces
    return {"value": res.value, "error_estimate": eps, "diagnostics": diag}


def _cmd_klf_s1(params: dict, eps, digits: int) -> dict:
    from .klf import klf_s1, klf_s1_pure_imaginary

    Om, c1, c2, pure = _klf_common(params)
    p = _real_vec(params, "p", 2)
    if pure:
        res = klf_s1_pure_imaginary(Om, p, c1, c2, tol=eps)
    else:
        res = klf_s1(Om, p, c1, c2, tol=eps)
    out = _klf_report(res, eps)
    out["diagnostics"]["formula"] = "pure-imaginary" if pure else "general"
    return out


def _cmd_klf_s0(params: dict, eps, digits: int) -> dict:
    from .klf import klf_s0, klf_s0_pure_imaginary

    Om, c1, c2, pure = _klf_common(params)
    q = _real_vec(params, "q", 2)
    if pure:
        res = klf_s0_pure_imaginary(Om, q, c1, c2, tol=eps)
    else:
        res = klf_s0(Om, q, c1, c2, tol=eps)
    out = _klf_report(res, eps)
    out["diagnostics"]["formula"] = "pure-imaginary" if pure else "general"
    return out


def _cmd_funceq(params: dict, eps, digits: int) -> dict:
    from .zeta import functional_equation_transport, zeta_direct_many

    req = _zeta_request(params, eps)
    svals = _svals(params, ["3/10", "1/2", "9/10"])
    tr = functional_equation_transport(req)
    lhs = zeta_direct_many(req, [1 - s for s in svals])
    rhs = zeta_direct_many(tr.request, svals)
    rows, worst = [], mpf(0)
    for s, a, b in zip(svals, lhs.values, rhs.values):
        r = abs(a - tr.prefactor * b)
        worst = max(worst, r)
        rows.append({"s": fmt(s, digits), "lhs": fmt(a, digits), "rhs": fmt(tr.prefactor * b, digits),
                     "residual": mp.nstr(r, 5)})
    return {"value": worst, "error_estimate": lhs.error_estimate + abs(tr.prefactor) * rhs.error_estimate,
            "diagnostics": {"rows": rows, "prefactor": tr.prefactor,
                            "lhs": lhs.diagnostics, "rhs": rhs.diagnostics}}


def _cmd_stark(params: dict, eps, digits: int, jobs: int = 1) -> dict:
    from .stark import StarkInstance, z_prime

    M = _matrix(params.get("M"), "M") if "M" in params else None
    if M is None:
        raise ParseError("parameter M is required")
    qs = params.get("qs")
    if not isinstance(qs, list):
        raise ParseError("qs must be a list of characteristics")
    P = params.get("P")
    if not isinstance(P, list) or len(P) != 2 or any(not isinstance(r, list) or len(r) != 2 for r in P):
        raise ParseError("P must be a 2x2 integer matrix")
    try:
        P = [[int(x) for x in row] for row in P]
    except (TypeError, ValueError):
        raise ParseError("P must have integer entries") from None
    inst = StarkInstance(SymMatrix(M), [_vector(q, "q") for q in qs], _real_vec(params, "c", 2), P)
    poly = params.get("polynomial")
    if poly is not None:
        try:
            poly = [(int(a), int(b)) for a, b in poly]
        except (TypeError, ValueError):
            raise ParseError("polynomial must be a list of [a, b] integer pairs") from None
    D = int(params.get("D", 3))
    res = z_prime(inst, polynomial=poly, D=D, tol=eps, jobs=jobs)
    diag = {
        "j_differences": res.j_differences,
        "pieces": res.pieces,
        "imaginary_part": res.imaginary_part,
        **res.diagnostics,
    }
    if res.polynomial_residual is not None:
        diag["polynomial_residual"] = mp.nstr(res.polynomial_residual.residual, 5)
        diag["reciprocal_residual"] = mp.nstr(res.polynomial_residual.reciprocal_residual, 5)
    out = {"value": res.z_prime, "error_estimate": eps, "unit": res.unit, "diagnostics": diag}
    if res.warnings:
        out["warnings"] = res.warnings
    return out


HANDLERS = {
    "theta": _cmd_theta,
    "zeta": _cmd_zeta,
    "klf-s1": _cmd_klf_s1,
    "klf-s0": _cmd_klf_s0,
    "funceq-check": _cmd_funceq,
    "stark": _cmd_stark,
}


# ---------------------------------------------------------------------------
# job handling


def _set_override(params: dict, item: str):
    if "=" not in item:
        raise ParseError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        params[key.strip()] = json.loads(raw)
    except json.JSONDecodeError:
        params[key.strip()] = raw


def load_job(args) -> dict:
    doc: dict[str, Any] = {}
    if args.input:
        try:
            with open(args.input) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read {args.input}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.input}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
        if not isinstance(doc, dict):
            raise ParseError("the job document must be a JSON object")
    command = args.command or doc.get("command")
    if command not in COMMANDS:
        raise ParseError(f"unknown or missing command {command!r}; choose from {', '.join(COMMANDS)}")
    params = dict(doc.get("parameters", {}))
    for item in args.set or []:
        _set_override(params, item)
    precision = args.precision if args.precision is not None else doc.get("precision", 30)
    try:
        precision = int(precision)
    except (TypeError, ValueError):
        raise ParseError("precision must be an integer") from None
    accuracy = args.accuracy if args.accuracy is not None else doc.get("accuracy")
    return {"command": command, "precision": precision, "accuracy": accuracy, "parameters": params}


def validate_job(job: dict):
    P = job["precision"]
    if P < 15:
        raise ValidationError("precision must be at least 15 digits")
    acc = job["accuracy"]
    if acc is None:
        eps = mpf(10) ** (-P + 5)
        job["accuracy"] = f"1e-{P - 5}"
    else:
        try:
            eps = to_mp(parse_rational(str(acc)))
        except ValidationError:
            raise ParseError(f"accuracy {acc!r} is not a number") from None
        if not eps > 0:
            raise ValidationError("accuracy must be positive")
        if eps < mpf(10) ** (-P + 5):
            raise ValidationError("accuracy must be at least 10^(5-P)")
    return eps


def run(job: dict, jobs: int = 1) -> dict:
    """Evaluate one job; returns the report (raises on failure)."""
    P = job["precision"]
    with working_precision(P):
        eps = validate_job(job)
        handler = HANDLERS[job["command"]]
        t0 = time.perf_counter()
        if job["command"] == "stark":
            out = handler(job["parameters"], eps, P, jobs)
        else:
            out = handler(job["parameters"], eps, P)
        elapsed = time.perf_counter() - t0
        report = {
            "schema": SCHEMA,
            "version": __version__,
            "command": job["command"],
            "precision": P,
            "accuracy": job["accuracy"],
            "parameters": job["parameters"],
        }
        report.update(_jsonable(out, P))
        report["timing_seconds"] = round(elapsed, 3)
        return report


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, (ConvergenceError, PrecisionError)):
        return EXIT_CONVERGENCE
    if isinstance(exc, (ValidationError, DomainError, IndefZetaError)):
        return EXIT_INVALID
    return 1


def _print_text(report: dict, out):
    print(f"{report['command']}  (precision {report['precision']}, accuracy {report['accuracy']})", file=out)
    v = report.get("value")
    if isinstance(v, dict):
        print(f"value      = {v['re']} + {v['im']} i", file=out)
    else:
        print(f"value      = {v}", file=out)
    if "unit" in report:
        print(f"unit       = {report['unit']}", file=out)
    print(f"error est. = {report.get('error_estimate')}", file=out)
    for k, val in report.get("diagnostics", {}).items():
        print(f"  {k}: {json.dumps(val)}", file=out)
    for w in report.get("warnings", []):
        print(f"warning: {w}", file=out)
    if "timing_seconds" in report:
        print(f"time       = {report['timing_seconds']} s", file=out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="indefzeta", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="taken from the job document if omitted")
    ap.add_argument("--input", "-i", help="job document (JSON)")
    ap.add_argument("--precision", "-p", type=int, help="working precision in decimal digits (default 30)")
    ap.add_argument("--accuracy", "-a", help="target absolute accuracy, e.g. 1e-25 (default 10^(5-P))")
    ap.add_argument("--format", "-f", choices=("text", "structured"), default="text")
    ap.add_argument("--jobs", "-j", type=int, default=1, help="worker processes (stark pieces)")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override one parameter; VALUE is JSON or a bare string")
    ap.add_argument("--no-timing", action="store_true", help="omit timing for byte-identical output")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    structured = args.format == "structured"
    try:
        job = load_job(args)
        report = run(job, jobs=max(1, args.jobs))
    except Exception as exc:  # reported as a structured error object
        code = _exit_code(exc)
        if code == 1 and not isinstance(exc, (ArithmeticError, ValueError)):
            raise
        err = {"schema": SCHEMA, "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
        if structured:
            print(json.dumps(err, indent=2))
        else:
            print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return code
    if args.no_timing:
        report.pop("timing_seconds", None)
    if structured:
        print(json.dumps(report, indent=2))
    else:
        _print_text(report, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
