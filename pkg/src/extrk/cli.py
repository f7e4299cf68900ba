"""Command-line interface: ``extrk <command> ...``.

Machine-readable output (JSON, CSV) is the default; ``--pretty`` switches to
aligned human tables.  Exit codes: 0 success, 1 failed check, 2 usage or
input error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field
from importlib import metadata

from .analysis import INF, analyze
from .exactnum import Scheme, as_scalar, composition_alphas, format_scalar
from .tableau import (
    ButcherTableau,
    merged_substeps,
    midpoint_projection_tableau,
    monoimplicit_tableau,
    symmetric_projection_extended,
    symmetric_projection_tableau,
)
from .trees import MAX_ORDER, enumerate_trees

PRECISION_ENV = "EXTRK_PRECISION_BITS"
EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0+local"


@dataclass
class RunManifest:
    command: str
    parameters: dict
    backend: str = "fractions.Fraction + Q(2^(1/3)) exact; gmpy2.mpfr floats"
    precision_bits: int | str | None = 53
    outputs: list = field(default_factory=list)
    version: str = field(default_factory=_version)
    python: str = field(default_factory=platform.python_version)

    def to_json(self) -> dict:
        return asdict(self)


class UsageError(Exception):
    pass


# helpers ----------------------------------------------------------------------

def _params(args) -> dict:
    out = {}
    for key, val in vars(args).items():
        if key in ("func",):
            continue
        out[key] = val if isinstance(val, (int, float, str, bool, list, type(None))) else str(val)
    return out


def _emit(text: str, path: str | None, manifest: RunManifest | None = None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        if manifest is not None:
            manifest.outputs.append(path)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _precision(value):
    """``--precision`` value, falling back to the environment default."""
    if value is None:
        value = os.environ.get(PRECISION_ENV)
    if value is None or value == "":
        return None
    if str(value).lower() == "exact":
        return "exact"
    try:
        bits = int(value)
    except ValueError:
        raise UsageError(f"precision must be a bit count or 'exact', got {value!r}")
    if bits < 53:
        raise UsageError("precision must be at least 53 bits")
    return None if bits == 53 else bits


def _alphas(args):
    if getattr(args, "alphas", None):
        try:
            return [as_scalar(x) for x in args.alphas]
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad --alphas entry: {exc}")
    return composition_alphas(args.scheme)


def _solver(args):
    from .integrate import JacobianMode, SolverConfig, Strategy
    return SolverConfig(strategy=Strategy(args.strategy), tolerance=args.tol,
                        max_iterations=args.max_iterations, jacobian=JacobianMode(args.jacobian))


def _load_tableau(path: str) -> ButcherTableau:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read tableau file: {exc}")
    if "A" not in obj and "tableau" in obj:
        obj = obj["tableau"]
    return ButcherTableau.from_json(obj)


def _stepper(args):
    from .integrate import MidpointProjection, RKStepper, SymmetricProjection
    method = args.method
    if method.startswith("rk:"):
        return RKStepper(_load_tableau(method[3:]), _solver(args))
    alphas = _alphas(args)
    if method == "midpoint":
        return MidpointProjection(alphas)
    if method == "symmetric":
        return SymmetricProjection.from_composition(alphas, _solver(args))
    if method == "monoimplicit":
        return RKStepper(monoimplicit_tableau(merged_substeps(alphas)), _solver(args))
    raise UsageError(f"unknown method {method!r}; use midpoint, symmetric, monoimplicit or rk:FILE")


def _problem_and_z0(args):
    from .integrate import get_problem
    try:
        prob = get_problem(args.problem)
    except KeyError as exc:
        raise UsageError(str(exc.args[0]))
    z0 = prob.z0
    if getattr(args, "z0", None):
        if len(args.z0) != prob.dim:
            raise UsageError(f"--z0 needs {prob.dim} values for {prob.name}")
        z0 = tuple(float(x) for x in args.z0)
    return prob, z0


def _h_list(values):
    hs = [float(x) for x in values]
    if any(h <= 0 for h in hs):
        raise UsageError("step sizes must be positive")
    return hs


def _order_str(x):
    return "inf" if x == INF else str(int(x))


# commands -----------------------------------------------------------------------

def cmd_tableau(args) -> int:
    alphas = _alphas(args)
    extended = None
    if args.construction == "midpoint":
        tab = midpoint_projection_tableau(alphas)
    else:
        subs = alphas if args.alphas else merged_substeps(alphas)
        if args.construction == "symmetric":
            extended = symmetric_projection_extended(subs)
            tab = symmetric_projection_tableau(subs)
        else:
            tab = monoimplicit_tableau(subs)
    manifest = RunManifest("tableau", _params(args), precision_bits="exact")
    if args.pretty:
        text = f"{args.construction} tableau, {tab.m} stages\n{tab.pretty(args.digits)}\n"
        if extended is not None:
            text += "constraint d: " + "  ".join(format_scalar(x, args.digits) for x in extended.d[0]) + "\n"
    else:
        obj = tab.to_json()
        if extended is not None:
            obj["extended"] = extended.to_json()
        obj["manifest"] = manifest.to_json()
        if args.out:
            manifest.outputs.append(args.out)
            obj["manifest"] = manifest.to_json()
        text = _dump(obj)
    _emit(text, args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    tab = _load_tableau(args.tableau)
    if not 1 <= args.max_order <= MAX_ORDER:
        raise UsageError(f"--max-order must be between 1 and {MAX_ORDER}")
    report = analyze(tab, args.max_order)
    manifest = RunManifest("analyze", _params(args), precision_bits="exact" if tab.is_exact() else 53)
    if args.pretty or args.census:
        lines = [
            f"stages                 {tab.m}",
            f"classical order        {_order_str(report.classical_order)}",
            f"pseudosymplectic order {_order_str(report.pseudosymplectic_order)}",
            f"pseudosymmetry order   {_order_str(report.pseudosymmetry_order)}",
            f"symplectic (M = 0)     {report.symplectic}",
        ]
        if args.census:
            lines += ["", "order  conditions  satisfied"]
            lines += [f"{c.order:>5}  {c.conditions:>10}  {c.satisfied:>9}" for c in report.census]
        if report.violated_conditions:
            lines += ["", "violated conditions (first failing order of each kind):"]
            for kind, key, r in report.violated_conditions:
                label = f"{key[0]} , {key[1]}" if kind == "pair" else str(key)
                lines.append(f"  {kind:<9} {label:<40} {format_scalar(r, 12)}")
        text = "\n".join(lines) + "\n"
    else:
        obj = report.to_json()
        obj["stages"] = tab.m
        obj["manifest"] = manifest.to_json()
        text = _dump(obj)
    _emit(text, args.out)
    return EXIT_OK


def cmd_integrate(args) -> int:
    from .integrate import integrate
    prec = _precision(args.precision)
    prob, z0 = _problem_and_z0(args)
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    traj = integrate(_stepper(args), prob, z0, args.h, args.steps, prec)
    manifest = RunManifest("integrate", _params(args), precision_bits=prec or 53)
    if args.out:
        manifest.outputs.append(args.out)
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(manifest.to_json()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"z{i}" for i in range(prob.dim)] + ["energy_err", "quad_err", "iterations"])
    for n, t in enumerate(traj.times):
        e = "" if traj.energy_error is None else repr(float(traj.energy_error[n]))
        qe = "" if traj.quadratic_error is None else repr(float(traj.quadratic_error[n]))
        its = 0 if n == 0 else int(traj.iterations[n - 1])
        w.writerow([repr(float(t))] + [str(x) for x in traj.states[n]] + [e, qe, its])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_drift(args) -> int:
    import warnings

    from .integrate import drift_fit
    prec = _precision(args.precision)
    prob, z0 = _problem_and_z0(args)
    hs = _h_list(args.h_list)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = drift_fit(_stepper(args), prob, z0, hs, args.T, prec, transient=args.transient,
                        quantity=args.quantity, workers=args.workers)
    for wmsg in caught:
        print(f"warning: {wmsg.message}", file=sys.stderr)
    manifest = RunManifest("drift", _params(args), precision_bits=prec or 53)
    if args.csv:
        buf = io.StringIO()
        buf.write("# manifest: " + json.dumps(manifest.to_json()) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "rate", "stderr", "floor", "below_floor"])
        for row in zip(fit.h, fit.rates, fit.stderr, fit.floors, fit.below_floor):
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
        _emit(buf.getvalue(), args.csv, manifest)
    obj = {
        "slope": fit.slope,
        "h": fit.h,
        "rates": fit.rates,
        "stderr": fit.stderr,
        "below_floor": fit.below_floor,
        "T": fit.T,
        "transient": fit.transient,
        "problem": prob.name,
        "z0": list(z0),
        "warnings": fit.warnings,
        "manifest": manifest.to_json(),
    }
    if args.pretty:
        lines = [f"{'h':>8}  {'rate':>12}  {'stderr':>10}  floor?"]
        lines += [f"{h:>8g}  {r:>12.4e}  {s:>10.2e}  {'yes' if b else 'no'}"
                  for h, r, s, b in zip(fit.h, fit.rates, fit.stderr, fit.below_floor)]
        lines.append(f"slope: {'undefined' if fit.slope is None else f'{fit.slope:.3f}'}")
        text = "\n".join(lines) + "\n"
    else:
        text = _dump(obj)
    _emit(text, args.out)
    return EXIT_OK


def cmd_defect_scan(args) -> int:
    from .integrate import defect_scan
    prec = _precision(args.precision)
    prob, z0 = _problem_and_z0(args)
    hs = _h_list(args.h_list)
    scan = defect_scan(args.measure, _stepper(args), prob, z0, hs, prec)
    manifest = RunManifest("defect-scan", _params(args), precision_bits=prec or 53)
    if args.csv:
        buf = io.StringIO()
        buf.write("# manifest: " + json.dumps(manifest.to_json()) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "defect"])
        for h, d in zip(scan.h, scan.defects):
            w.writerow([repr(h), repr(d)])
        _emit(buf.getvalue(), args.csv, manifest)
    obj = {"measure": args.measure, "slope": scan.slope, "h": scan.h, "defects": scan.defects,
           "problem": prob.name, "z0": list(z0), "manifest": manifest.to_json()}
    if args.pretty:
        lines = [f"{'h':>8}  {'defect':>12}"] + [f"{h:>8g}  {d:>12.4e}" for h, d in zip(scan.h, scan.defects)]
        lines.append(f"slope: {scan.slope:.3f}")
        text = "\n".join(lines) + "\n"
    else:
        text = _dump(obj)
    _emit(text, args.out)
    return EXIT_OK


def cmd_trees(args) -> int:
    if not 1 <= args.max <= MAX_ORDER:
        raise UsageError(f"--max must be between 1 and {MAX_ORDER}")
    table = enumerate_trees(args.max)
    manifest = RunManifest("trees", _params(args), precision_bits="exact")
    if args.pretty:
        lines = [f"{'order':>5}  {'count':>6}"]
        lines += [f"{n:>5}  {c:>6}" for n, c in enumerate(table.counts(), start=1)]
        if args.list:
            for t in table.upto(args.max):
                lines.append(f"  {t.order:>2}  gamma={t.density:<6} sigma={t.symmetry:<4} {t}")
        text = "\n".join(lines) + "\n"
    else:
        out = [json.dumps({"manifest": manifest.to_json()})]
        for n in range(1, args.max + 1):
            trees = table.by_order[n]
            out.append(json.dumps({
                "order": n,
                "count": len(trees),
                "trees": [{"levels": list(t.levels), "bracket": str(t),
                           "density": t.density, "symmetry": t.symmetry} for t in trees],
            }, ensure_ascii=False))
        text = "\n".join(out) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify_paper(args) -> int:
    from .checks import run_checks

    def progress(res):
        if args.pretty:
            status = "PASS" if res.passed else "FAIL"
            print(f"[{status}] {res.name:<44} {res.seconds:7.2f}s", file=sys.stderr)

    results = run_checks(skip_numeric=args.skip_numeric, perturb=args.perturb, progress=progress)
    failed = [r for r in results if not r.passed]
    manifest = RunManifest("verify-paper", _params(args), precision_bits="exact+numeric")
    report = {
        "passed": not failed,
        "first_failure": failed[0].name if failed else None,
        "checks": [r.to_json() for r in results],
        "manifest": manifest.to_json(),
    }
    if args.report:
        manifest.outputs.append(args.report)
        report["manifest"] = manifest.to_json()
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(_dump(report))
    if not args.pretty:
        sys.stdout.write(_dump(report))
    if failed:
        print(f"check failed: {failed[0].name}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# parser -------------------------------------------------------------------------

def _add_method_args(p, problem_default="nonseparable"):
    p.add_argument("--method", default="midpoint",
                   help="midpoint, symmetric, monoimplicit or rk:TABLEAU.json")
    p.add_argument("--scheme", default="leapfrog2", choices=[s.value for s in Scheme])
    p.add_argument("--alphas", nargs="+", help="composition coefficients, e.g. 1/2 1/2")
    p.add_argument("--problem", default=problem_default,
                   choices=["harmonic", "nonseparable", "rotation", "kepler"])
    p.add_argument("--z0", nargs="+", help="initial state (defaults to the problem's)")
    p.add_argument("--precision", help=f"bits, or 'exact' (default ${PRECISION_ENV} or 53)")
    p.add_argument("--strategy", default="newton", choices=["newton", "fixed_point"])
    p.add_argument("--jacobian", default="finite_difference",
                   choices=["finite_difference", "forward_sensitivity"])
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iterations", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extrk", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tableau", help="construct a tableau")
    p.add_argument("--construction", required=True, choices=["midpoint", "symmetric", "monoimplicit"])
    p.add_argument("--scheme", default="leapfrog2", choices=[s.value for s in Scheme])
    p.add_argument("--alphas", nargs="+",
                   help="composition coefficients (midpoint) or alternating substeps (symmetric, monoimplicit)")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--digits", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tableau)

    p = sub.add_parser("analyze", help="order analysis of a tableau file")
    p.add_argument("--tableau", required=True)
    p.add_argument("--max-order", type=int, default=10)
    p.add_argument("--census", action="store_true", help="print the per-order condition table")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("integrate", help="integrate a built-in problem, CSV output")
    _add_method_args(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("drift", help="secular energy-drift rates and their exponent")
    _add_method_args(p)
    p.add_argument("--h-list", nargs="+", required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--transient", type=float, default=0.1)
    p.add_argument("--quantity", default="energy", choices=["energy", "quadratic"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="write (h, rate) CSV here")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("defect-scan", help="symplecticity or symmetry defect versus h")
    _add_method_args(p)
    p.add_argument("--measure", default="symplectic", choices=["symplectic", "symmetry"])
    p.add_argument("--h-list", nargs="+", required=True)
    p.add_argument("--csv", help="write (h, defect) CSV here")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_defect_scan)

    p = sub.add_parser("trees", help="rooted trees by order, JSON lines")
    p.add_argument("--max", type=int, required=True)
    p.add_argument("--list", action="store_true", help="with --pretty, list every tree")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("verify-paper", help="run the reproduction checks")
    p.add_argument("--skip-numeric", action="store_true", help="exact-arithmetic checks only")
    p.add_argument("--perturb", type=float, help="shift one fixture entry by EPS")
    p.add_argument("--report", help="also write the JSON report here")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_verify_paper)
    return parser


def main(argv=None) -> int:
    from .integrate import ConvergenceError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (UsageError, ValueError, KeyError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
