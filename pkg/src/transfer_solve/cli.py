"""Command-line front end.

    transfer-solve solve PROBLEM --at RE,IM
    transfer-solve grid PROBLEM --re LO:HI:STEP --im LO:HI:STEP --out FILE.csv
    transfer-solve verify PROBLEM [--jmax N] [--model EXPR]
    transfer-solve hypothesis PROBLEM [--jmax N]

Results and errors are JSON on standard output. Exit codes: 0 success,
1 I/O, 2 parse or problem-file error, 3 hypothesis failure, 4 domain or
grid error, 5 no convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

from . import fexpr
from .continuation import EvalGrid, evaluate, evaluate_grid
from .core import (ContractionViolation, DomainEscape, HypothesisFailure, NoConvergence,
                   NonFiniteValue, OutsideStrip, TransferError, TruncationLimit, lattice_points)
from .problemfile import ProblemFileError, load_problem
from .solver import ProblemSpec, SolutionHandle, ensure_contractive, solve
from .verify import FAIL, VerificationReport, check_decay, residual, verify_solution

EXIT_OK, EXIT_IO, EXIT_PARSE, EXIT_HYPOTHESIS, EXIT_DOMAIN, EXIT_NO_CONVERGENCE = range(6)


class GridError(TransferError):
    kind = "grid"


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (fexpr.ParseError, ProblemFileError)):
        return EXIT_PARSE
    if isinstance(exc, (HypothesisFailure, ContractionViolation)):
        return EXIT_HYPOTHESIS
    if isinstance(exc, (DomainEscape, OutsideStrip, GridError, fexpr.EvalError, NonFiniteValue)):
        return EXIT_DOMAIN
    if isinstance(exc, (NoConvergence, TruncationLimit)):
        return EXIT_NO_CONVERGENCE
    return EXIT_IO


def error_object(exc: BaseException) -> dict:
    kind = "io" if isinstance(exc, OSError) else getattr(exc, "kind", "error")
    err = {"kind": kind, "message": str(exc)}
    if isinstance(exc, fexpr.ParseError):
        err["position"] = exc.position
    if isinstance(exc, HypothesisFailure):
        err["lambda"] = exc.lam
        err["J"] = exc.J
    if isinstance(exc, DomainEscape) and exc.point is not None:
        err["point"] = _pair(exc.point)
    return {"error": err}


def _pair(v: complex) -> list[float]:
    return [v.real, v.imag]


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _parse_point(text: str) -> complex:
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError:
        raise GridError(f"expected 're,im', got {text!r}") from None


def _parse_range(text: str) -> tuple[float, float, float]:
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise GridError(f"expected 'lo:hi:step', got {text!r}") from None
    if not step > 0 or hi < lo:
        raise GridError(f"bad range {text!r}: need lo <= hi and step > 0")
    return lo, hi, step


def reference_point(p: ProblemSpec) -> complex:
    """Where the CLI converges the level iteration: one unit left of the cutoff."""
    return complex(-p.cutoff.J - 1.0, 0.0)


def prepare(path: str) -> SolutionHandle:
    p = ensure_contractive(load_problem(path))
    return solve(p, reference_point(p))


def diagnostics(h: SolutionHandle) -> dict:
    return {
        "order": h.problem.k,
        "expression": str(h.problem.expr),
        "cutoff_J": h.problem.cutoff.J,
        "lambda": h.lambda_est,
        "mu_predicted": h.mu_predicted,
        "mu_measured": h.mu_est,
        "levels": h.level,
        "last_diff": h.last_diff,
        "error_bound": h.error_bound,
    }


def cmd_solve(args) -> int:
    at = _parse_point(args.at)
    h = prepare(args.problem)
    y = evaluate(h, at)
    out = {"s": _pair(at), "y": _pair(y), **diagnostics(h)}
    if h.problem.strip.contains(at + h.problem.k):
        out["residual"] = residual(h, at)
    _emit(out)
    return EXIT_OK


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_csv_atomic(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_grid(args) -> int:
    re_r, im_r = _parse_range(args.re), _parse_range(args.im)
    g = EvalGrid(*re_r, *im_r)
    out = Path(args.out)
    if not out.parent.exists():
        raise FileNotFoundError(f"output directory {out.parent} does not exist")
    p = load_problem(args.problem)
    bad = [s for s in g.points() if not p.strip.contains(s)]
    if bad:
        raise GridError(f"{len(bad)} grid point(s) outside the strip |Im s| < "
                        f"{p.strip.half_height}, first {bad[0]!r}")
    p = ensure_contractive(p)
    h = solve(p, reference_point(p))
    rows = evaluate_grid(h, g)
    table = []
    first_error = None
    for r in rows:
        if r.error is not None and first_error is None:
            first_error = r.error
        table.append([
            _fmt(r.s.real), _fmt(r.s.imag),
            "" if r.y is None else _fmt(r.y.real), "" if r.y is None else _fmt(r.y.imag),
            "" if r.residual is None else _fmt(r.residual),
        ])
    write_csv_atomic(out, ["re_s", "im_s", "re_y", "im_y", "residual"], table)
    res = [r.residual for r in rows if r.residual is not None]
    summary = {"out": str(out), "rows": len(rows),
               "failed_rows": sum(r.error is not None for r in rows),
               "max_residual": max(res) if res else None, **diagnostics(h)}
    if first_error is not None:
        summary.update(error_object(first_error))
        _emit(summary)
        return exit_code_for(first_error)
    _emit(summary)
    return EXIT_OK


def _hypothesis_only(p: ProblemSpec, jmax: int) -> dict:
    from dataclasses import asdict
    return {"hypothesis": asdict(check_decay(p, jmax))}


def cmd_verify(args) -> int:
    p = load_problem(args.problem)
    model = fexpr.parse(args.model, p.k) if args.model else None
    if args.hypothesis_only:
        out = _hypothesis_only(p, args.jmax)
        _emit(out)
        return EXIT_HYPOTHESIS if out["hypothesis"]["verdict"] == FAIL else EXIT_OK
    try:
        q = ensure_contractive(p)
        h = solve(q, reference_point(q))
    except HypothesisFailure as exc:
        report = VerificationReport(check_decay(p, args.jmax)).to_dict()
        report.update(error_object(exc))
        _emit(report)
        return EXIT_HYPOTHESIS
    report = verify_solution(h, args.jmax, model).to_dict()
    report["cutoff_J"] = q.cutoff.J
    _emit(report)
    return EXIT_HYPOTHESIS if report["hypothesis"]["verdict"] == FAIL else EXIT_OK


def _jmax(text: str) -> int:
    n = int(text)
    if n < 8:
        raise argparse.ArgumentTypeError("--jmax must be at least 8")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="transfer-solve",
                                 description="Solve k-th order transfer equations on a strip.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="value and diagnostics at one point")
    sp.add_argument("problem")
    sp.add_argument("--at", required=True, help="point as 're,im'")
    sp.set_defaults(func=cmd_solve)

    gp = sub.add_parser("grid", help="evaluate on a rectangular grid, write CSV")
    gp.add_argument("problem")
    gp.add_argument("--re", required=True, help="lo:hi:step")
    gp.add_argument("--im", required=True, help="lo:hi:step")
    gp.add_argument("--out", required=True)
    gp.set_defaults(func=cmd_grid)

    for name, only in (("verify", False), ("hypothesis", True)):
        vp = sub.add_parser(name, help="hypothesis check only" if only else "full verification report")
        vp.add_argument("problem")
        vp.add_argument("--jmax", type=_jmax, default=32)
        if not only:
            vp.add_argument("--model", default=None, help="asymptotic model, an expression in s")
            vp.add_argument("--hypothesis-only", action="store_true")
        vp.set_defaults(func=cmd_verify, hypothesis_only=only, model=None)
    return ap


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Let ``--at -15,0`` through; argparse would read ``-15,0`` as an option."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in ("--at", "--re", "--im"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-"):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_glue_negative_values(list(argv)))
    try:
        return args.func(args)
    except (TransferError, OSError) as exc:
        _emit(error_object(exc))
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
