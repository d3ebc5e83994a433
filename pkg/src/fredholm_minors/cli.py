"""Command-line front end: ``fredholm <command> --input problem.json``.

Reports are JSON with sorted keys on standard output.  Exit status: 0 on
success, 1 for invalid input, 2 when a numerical check fails, 3 when
D(lambda) vanishes and the command has no fallback.
"""

import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from importlib import resources

import jsonschema
import numpy as np

from . import _backend, derivative, eigencase, grassmann, minors, resolvent, series, verification
from .errors import NumericalFailure, OracleTooLarge, SingularAtLambda, ValidationError
from .kernel import UNIT, Domain, KernelSpec, PointSet, discretize, make_grid

COMMANDS = ("det", "solve", "resolvent", "minor", "fderiv", "spectrum", "eigencase", "verify", "oracle")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_SINGULAR = 3

DEFAULT_VERIFY_INSTANCES = 20


class CheckFailed(NumericalFailure):
    pass


def load_schema():
    text = resources.files("fredholm_minors").joinpath("data/problem.schema.json").read_text()
    return json.loads(text)


def load_problem(path):
    try:
        with open(path, encoding="utf-8") as fh:
            problem = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(problem, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"problem file invalid at {where}: {exc.message}") from exc
    return problem


def digest(obj):
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_kernel(problem):
    dom = problem["domain"]
    if dom["mode"] == "interval":
        domain = Domain.interval(float(dom["a"]), float(dom["b"]))
        quad = problem.get("quadrature")
        if quad is None:
            raise ValidationError("interval domains need a quadrature block")
        grid = make_grid(domain, quad["rule"], quad["m"])
    else:
        domain = Domain.discrete(dom["m"])
        quad = problem.get("quadrature", {"rule": UNIT, "m": dom["m"]})
        grid = make_grid(domain, quad["rule"], quad["m"])
    ks = problem["kernel"]
    if "builtin" in ks:
        spec = KernelSpec.builtin(ks["builtin"], **ks.get("params", {}))
    elif "separable" in ks:
        spec = KernelSpec.separable(ks["separable"]["u"], ks["separable"]["v"])
    else:
        rows = ks["matrix"]
        if any(len(r) != len(rows) for r in rows):
            raise ValidationError("matrix kernel must be square")
        spec = KernelSpec.matrix(rows)
    return discretize(spec, grid)


def series_options(problem, threads):
    block = problem.get("series", {})
    return series.SeriesOptions(
        p_max=block.get("p_max"),
        rel_tol=block.get("rel_tol", 1e-15),
        budget=block.get("budget", 2_000_000),
        threads=threads,
    )


def require(problem, key, command):
    if key not in problem:
        raise ValidationError(f"command {command!r} needs a {key!r} entry in the problem file")
    return problem[key]


def rhs(problem, K, command):
    f = require(problem, "f", command)
    x = K.grid.nodes
    if isinstance(f, str):
        return {"const": np.ones(K.m), "x": np.array(x), "x-minus-half": x - 0.5}[f]
    f = np.asarray(f, dtype=float)
    if f.shape != (K.m,):
        raise ValidationError(f"f has {f.size} samples, grid has {K.m} nodes")
    return f


def points(problem, K, default_empty=False):
    if "points" not in problem:
        if default_empty:
            return PointSet((), ())
        raise ValidationError("this command needs a 'points' entry")
    p = problem["points"]
    return PointSet(p["xs"], p["ys"]).validate(K.m)


def matrix(a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": [float(v) for v in a.ravel()]}


def vector(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def check(name, value, threshold, tol_scale):
    value = float(value)
    thr = float(threshold) * tol_scale
    return {"name": name, "value": value, "threshold": thr, "passed": bool(value <= thr)}


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(a))


def _series_or_reason(K, pts, lam, opts):
    try:
        mv = series.minor_series(K, pts, lam, opts)
    except NumericalFailure as exc:
        return None, {"status": "skipped", "reason": str(exc)}
    return mv.value, {
        "status": "ok",
        "value": mv.value,
        "p_used": mv.p_used,
        "residual_estimate": mv.residual_estimate,
        "tail_bound": mv.tail_bound,
    }


def cmd_det(problem, K, args, opts):
    lam = float(require(problem, "lambda", "det"))
    D = series.fredholm_determinant(K, lam)
    value, block = _series_or_reason(K, None, lam, opts)
    out = {"determinant": D, "series": block}
    checks = []
    if value is not None:
        checks.append(check("det_series_agreement", _rel(D, value), 1e-9, args.tol_scale))
    if K.m <= 12:
        c = series.determinant_coefficients(K)
        out["coefficients"] = vector(c)
        checks.append(check("det_polynomial_agreement", _rel(D, series.polynomial_derivative(c, lam, 0)), 1e-9,
                            args.tol_scale))
    return out, checks, {"determinant": "lu", "cross_check": "series"}


def _eigen_block(rep):
    return {
        "lambda0": rep.lam0,
        "rank": rep.rank,
        "polynomial_multiplicity": rep.multiplicity,
        "base_points": {"xs": list(rep.base_points.xs), "ys": list(rep.base_points.ys)},
        "base_minor_value": rep.base_minor_value,
        "phi": matrix(rep.phi),
        "psi": matrix(rep.psi),
    }


def _eigen_checks(rep, tol_scale):
    r = rep.residuals
    return [
        check("normalization_phi", r["normalization_phi"], 1e-8, tol_scale),
        check("normalization_psi", r["normalization_psi"], 1e-8, tol_scale),
        check("homogeneous_equation", r["homogeneous"], 1e-8, tol_scale),
        check("transposed_equation", r["transposed"], 1e-8, tol_scale),
        check("null_space_projection_phi", r["null_projection_phi"], 1e-7, tol_scale),
        check("null_space_projection_psi", r["null_projection_psi"], 1e-7, tol_scale),
        check("multiplicity_at_least_rank", float(rep.multiplicity < rep.rank), 0.0, 1.0),
    ]


def _particular(K, rep, f, opts, tol_scale):
    ok, defects = eigencase.solvability(K, rep.lam0, f, psi=rep.psi)
    out = {"solvable": ok, "defects": vector(defects)}
    checks = []
    if ok:
        phi_p = eigencase.particular_solution(K, rep.lam0, rep.base_points, f, opts=opts, check=False)
        fmax = max(1.0, float(np.max(np.abs(f))))
        out["particular_solution"] = vector(phi_p)
        checks.append(check("particular_solution_residual",
                            resolvent.equation_residual(K, phi_p, f, rep.lam0) / fmax, 1e-7, tol_scale))
    return out, checks


def cmd_solve(problem, K, args, opts):
    lam = float(require(problem, "lambda", "solve"))
    f = rhs(problem, K, "solve")
    try:
        R = resolvent.resolvent_kernel(K, lam)
    except SingularAtLambda:
        rep = eigencase.eigen_case(K, lam, opts=opts)
        out, checks = _particular(K, rep, f, opts, args.tol_scale)
        out["eigencase"] = _eigen_block(rep)
        checks = _eigen_checks(rep, args.tol_scale) + checks
        checks.append(check("solvability", float(not out["solvable"]), 0.0, 1.0))
        return out, checks, {"solution": "eigencase", "minors": "series"}
    phi = resolvent.solve_unique(K, f, lam, resolvent=R)
    scale = max(1.0, float(np.max(np.abs(phi))))
    out = {"solution": vector(phi), "determinant": R.det_at_lambda, "condition": R.condition}
    checks = [check("equation_residual", resolvent.equation_residual(K, phi, f, lam) / scale, 1e-9, args.tol_scale)]
    return out, checks, {"solution": "resolvent"}


def cmd_resolvent(problem, K, args, opts):
    lam = float(require(problem, "lambda", "resolvent"))
    R = resolvent.resolvent_kernel(K, lam)
    out = {"resolvent": matrix(R.values), "determinant": R.det_at_lambda, "condition": R.condition}
    if "offgrid" in problem:
        out["offgrid"] = [
            {"x": float(x), "y": float(y), "value": resolvent.nystrom_offgrid(K, K.spec, R, x, y)}
            for x, y in problem["offgrid"]
        ]
    checks = [
        check("inverse_identity", resolvent.inverse_identity_residual(K, R), 1e-9, args.tol_scale),
        check("trace_log_derivative", resolvent.resolvent_trace_residual(K, lam), 1e-9, args.tol_scale),
    ]
    return out, checks, {"resolvent": "lu"}


def cmd_minor(problem, K, args, opts):
    lam = float(require(problem, "lambda", "minor"))
    pts = points(problem, K)
    values = {}
    methods = {}
    value, block = _series_or_reason(K, pts, lam, opts)
    methods["series"] = block
    if value is not None:
        values["series"] = value
    try:
        values["determinantal"] = minors.minor_determinantal(K, pts, lam).value
        methods["determinantal"] = {"status": "ok", "value": values["determinantal"]}
    except SingularAtLambda as exc:
        methods["determinantal"] = {"status": "skipped", "reason": str(exc)}
    if K.m <= grassmann.MAX_ORACLE_SIZE:
        values["oracle"] = grassmann.minor_oracle(K, pts, lam).value
        methods["oracle"] = {"status": "ok", "value": values["oracle"]}
    else:
        methods["oracle"] = {"status": "skipped", "reason": f"grid larger than {grassmann.MAX_ORACLE_SIZE} nodes"}
    names = sorted(values)
    deltas = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            deltas[f"{a}-{b}"] = abs(values[a] - values[b]) / max(1.0, abs(values[a]), abs(values[b]))
    if not values:
        raise CheckFailed("no method could evaluate the minor")
    out = {"methods": methods, "deltas": deltas, "value": values.get("series", values[names[0]])}
    checks = [check("method_agreement", max(deltas.values(), default=0.0), 1e-8, args.tol_scale)]
    return out, checks, {"minor": names}


def cmd_fderiv(problem, K, args, opts):
    lam = float(require(problem, "lambda", "fderiv"))
    block = require(problem, "derivative", "fderiv")
    a, b = int(block["a"]), int(block["b"])
    if not (0 <= a < K.m and 0 <= b < K.m):
        raise ValidationError(f"derivative target ({a}, {b}) out of range for {K.m} nodes")
    pts = points(problem, K, default_empty=True)
    schedule = block.get("h_schedule", list(derivative.DEFAULT_STEPS))
    try:
        rep = derivative.fd_check(K, pts, lam, a, b, schedule, opts)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    out = {
        "analytic": rep.analytic,
        "finite_difference": rep.finite_difference,
        "rel_error": rep.rel_error,
        "h_used": rep.h_used,
        "entry_derivative": rep.analytic * float(K.weights[a] * K.weights[b]),
    }
    if args.debug_blocks:
        _, terms = derivative.dDn_dN(K, pts, lam, a, b, opts, debug_blocks=True)
        out["blocks"] = terms
    checks = [check("finite_difference_agreement", rep.rel_error, 1e-6, args.tol_scale)]
    return out, checks, {"derivative": "five-term formula", "minors": "series", "reference": "richardson"}


def cmd_spectrum(problem, K, args, opts):
    vals = []
    for lam0, mult in eigencase.find_characteristic_values(K):
        entry = {"lambda0": lam0, "algebraic_multiplicity": mult}
        try:
            entry["rank"] = eigencase.rank_of(K, lam0)
        except NumericalFailure:
            entry["rank"] = 0
        vals.append(entry)
    advisory = [{"re": z.real, "im": z.imag} for z in eigencase.complex_characteristic_values(K)]
    return {"characteristic_values": vals, "complex_advisory": advisory}, [], {"spectrum": "dense eigensolver"}


def cmd_eigencase(problem, K, args, opts):
    if "lambda" in problem:
        lam0 = float(problem["lambda"])
    else:
        found = eigencase.find_characteristic_values(K)
        if not found:
            raise CheckFailed("kernel has no real characteristic values")
        lam0 = found[0][0]
    rep = eigencase.eigen_case(K, lam0, opts=opts)
    out = {"eigencase": _eigen_block(rep)}
    checks = _eigen_checks(rep, args.tol_scale)
    if "f" in problem:
        extra, more = _particular(K, rep, rhs(problem, K, "eigencase"), opts, args.tol_scale)
        out.update(extra)
        checks += more
    return out, checks, {"minors": "series", "base_points": "max-volume on null bases"}


def cmd_oracle(problem, K, args, opts):
    lam = float(require(problem, "lambda", "oracle"))
    if K.m > grassmann.MAX_ORACLE_SIZE:
        raise OracleTooLarge(K.m, grassmann.MAX_ORACLE_SIZE)
    Z = grassmann.grassmann_partition(K, lam)
    D = series.fredholm_determinant(K, lam)
    out = {"partition_function": Z, "determinant": D}
    checks = [check("partition_equals_determinant", _rel(D, Z), 1e-10, args.tol_scale)]
    for n in range(1, min(2, K.m) + 1):
        checks.append(check(f"traced_moment_n{n}", grassmann.traced_moment_residual(K, lam, n), 1e-9, args.tol_scale))
    if "points" in problem:
        pts = points(problem, K)
        o = grassmann.minor_oracle(K, pts, lam).value
        s = series.minor_series(K, pts, lam, opts).value
        out["minor"] = {"oracle": o, "series": s}
        checks.append(check("oracle_series_agreement", _rel(s, o), 1e-10, args.tol_scale))
    if "pairs" in problem:
        pairs = [tuple(p) for p in problem["pairs"]]
        out["correlator"] = grassmann.grassmann_correlator(K, lam, pairs)
        out["wick"] = grassmann.wick_determinant(K, lam, pairs)
        checks.append(check("wick_factorization", grassmann.wick_residual(K, lam, pairs), 1e-10, args.tol_scale))
    return out, checks, {"oracle": "berezin integration", "backend": _backend.BACKEND}


def cmd_verify(problem, args):
    seed = int(os.environ.get("FREDHOLM_SEED", "0"))
    count = (problem or {}).get("verify", {}).get("instances", DEFAULT_VERIFY_INSTANCES)
    results = verification.run_suite(seed, count, args.tol_scale)
    checks = [
        {"name": r.name, "value": r.worst, "threshold": r.threshold, "passed": r.passed, "count": r.count}
        for r in results
    ]
    out = {
        "seed": seed,
        "instances": count,
        "passed": sum(c["passed"] for c in checks),
        "failed": sum(not c["passed"] for c in checks),
    }
    return out, checks, {"suite": "default"}


HANDLERS = {
    "det": cmd_det,
    "solve": cmd_solve,
    "resolvent": cmd_resolvent,
    "minor": cmd_minor,
    "fderiv": cmd_fderiv,
    "spectrum": cmd_spectrum,
    "eigencase": cmd_eigencase,
    "oracle": cmd_oracle,
}


def run(args):
    """Execute one command; returns (report, exit_code)."""
    problem = load_problem(args.input) if args.input else None
    flags = {"threads": args.threads, "tol_scale": args.tol_scale, "debug_blocks": args.debug_blocks}
    report = {"command": args.command, "flags": flags, "inputs_digest": digest(problem)}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.command == "verify":
            out, checks, method = cmd_verify(problem, args)
        else:
            if problem is None:
                raise ValidationError(f"command {args.command!r} needs --input")
            K = build_kernel(problem)
            out, checks, method = HANDLERS[args.command](problem, K, args, series_options(problem, args.threads))
    report.update(outputs=out, checks=checks, method=method)
    if caught:
        report["warnings"] = sorted({str(w.message) for w in caught})
    failed = [c["name"] for c in checks if not c["passed"]]
    report["failed_checks"] = failed
    report["status"] = "failed" if failed else "ok"
    return report, EXIT_NUMERICAL if failed else EXIT_OK


def _parser():
    p = argparse.ArgumentParser(prog="fredholm", description="Fredholm determinants, minors and resolvents on a grid.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="JSON problem file (optional for verify)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the series sums")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every check threshold")
    p.add_argument("--debug-blocks", action="store_true", help="emit the five-term derivative breakdown")
    return p


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True)


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.threads < 1:
        print("fredholm: --threads must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    if not args.tol_scale > 0:
        print("fredholm: --tol-scale must be positive", file=sys.stderr)
        return EXIT_INVALID
    start = time.perf_counter()
    try:
        report, code = run(args)
    except (ValidationError, OracleTooLarge) as exc:
        report, code = _error_report(args, exc), EXIT_INVALID
    except SingularAtLambda as exc:
        report, code = _error_report(args, exc), EXIT_SINGULAR
    except NumericalFailure as exc:
        report, code = _error_report(args, exc), EXIT_NUMERICAL
    wall = time.perf_counter() - start
    # wall time would break byte-identical single-threaded reports
    if args.threads != 1:
        report["wall_time_s"] = wall
    print(dumps(report))
    print(f"fredholm {args.command}: exit {code}, wall time {wall:.3f} s", file=sys.stderr)
    return code


def _error_report(args, exc):
    return {
        "command": args.command,
        "status": "error",
        "error": {"type": type(exc).__name__, "message": str(exc)},
    }


if __name__ == "__main__":
    sys.exit(main())
