"""Report assembly: runs the certification pipeline over a problem file and
emits plain dicts shaped by docs/report.schema.json.

Reports are deterministic for a fixed (problem, options) pair except for the
top-level timing block, which callers strip when comparing runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .cones import (DirectionAnalysis, PointContext, TangentBudget, Tolerances,
                    _snap_unit, analyze_direction, point_context,
                    sample_cone_directions)
from .cq import check_so_zangwill, run_cq_checks
from .deriv import CurveProbe, StepGrid, curve_second_deriv, second_dir_deriv
from .gencvx import probe_pseudoconvex, probe_so_pseudoconvex, probe_solpc_right
from .kkt import CERTIFIED, REFUTED, UNDECIDED, certify_direction
from .problem import Problem, ProblemValidationError

INFEASIBLE = "INFEASIBLE"
NOT_CRITICAL = "NOT_CRITICAL"


@dataclass(frozen=True)
class RunOptions:
    point: int | None = None
    direction: int | None = None
    samples: int = 64
    seed: int = 0
    skip_cq: bool = False
    n_dir: int = 32
    t0: float = 1e-2
    rho: float = 0.5
    steps: int = 24
    tol_rel: float = 1e-6
    richardson: bool = False
    tangent_steps: int = 10
    tangent_search_evals: int = 32
    function: str | None = None
    z: tuple | None = None
    lp_trace: bool = False

    def grid(self) -> StepGrid:
        return StepGrid(self.t0, self.rho, self.steps, self.tol_rel, self.richardson)

    def budget(self) -> TangentBudget:
        return TangentBudget(steps=self.tangent_steps,
                             search_evals=self.tangent_search_evals, seed=self.seed)


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _deriv_dict(sd, with_trace: bool = False) -> dict:
    out = {"value": sd.value, "status": sd.status}
    if sd.note is not None:
        out["note"] = sd.note
    if with_trace:
        out["trace"] = [[t, q] for t, q in sd.trace]
    return out


def _cq_dict(entry) -> dict:
    return {"name": entry.name, "verdict": entry.verdict, "witness": entry.witness,
            "samples": entry.samples, "seed": entry.seed, "note": entry.note,
            "doubled": entry.doubled}


def _cert_dict(cert) -> dict:
    return {"lam": list(cert.lam), "mu": list(cert.mu),
            "stationarity_residual": cert.stationarity_residual,
            "curvature": cert.curvature}


def _violation_dict(v) -> dict:
    return {"kind": v.kind, "witness": v.witness, "residuals": v.residuals}


def _problem_echo(problem: Problem) -> dict:
    return {"name": problem.name, "variables": list(problem.variables),
            "objectives": list(problem.objective_sources),
            "constraints": list(problem.constraint_sources)}


def _options_echo(command: str, o: RunOptions) -> dict:
    out = {"point": o.point, "direction": o.direction, "samples": o.samples,
           "seed": o.seed,
           "grid": {"t0": o.t0, "rho": o.rho, "steps": o.steps,
                    "tol_rel": o.tol_rel, "richardson": o.richardson}}
    if command == "check":
        out["skip_cq"] = o.skip_cq
        out["n_dir"] = o.n_dir
    if command in ("check", "cq"):
        out["tangent"] = {"steps": o.tangent_steps,
                          "search_evals": o.tangent_search_evals}
    if command in ("convexity", "deriv"):
        out["function"] = o.function
        out["z"] = list(o.z) if o.z is not None else None
    return out


def _report(command: str, problem: Problem, options: RunOptions, points: list,
            verdict: str | None, started: float) -> dict:
    return _jsonify({
        "tool": "sockkt",
        "version": __version__,
        "command": command,
        "problem": _problem_echo(problem),
        "options": _options_echo(command, options),
        "verdict": verdict,
        "points": points,
        "timing": {"seconds": time.monotonic() - started},
    })


def _selected_points(problem: Problem, options: RunOptions):
    if options.point is not None:
        if not 0 <= options.point < len(problem.points):
            raise ProblemValidationError(
                f"point index {options.point} out of range: problem has {len(problem.points)} points")
        return [(options.point, problem.points[options.point])]
    return list(enumerate(problem.points))


def _user_directions(problem: Problem, pidx: int, options: RunOptions):
    dirs = problem.directions[pidx]
    if options.direction is None:
        return list(dirs)
    if not 0 <= options.direction < len(dirs):
        raise ProblemValidationError(
            f"direction index {options.direction} out of range: point {pidx} has {len(dirs)} directions")
    return [dirs[options.direction]]


def _point_summary(pidx: int, ctx: PointContext) -> dict:
    return {
        "index": pidx,
        "x": list(ctx.xbar),
        "feasible": ctx.feasible,
        "objective_values": list(ctx.f_values),
        "constraint_values": list(ctx.g_values),
        "active_set": list(ctx.active_set),
    }


def _critical_cone_rows(ctx: PointContext):
    return [list(r) for r in ctx.grad_f] + [list(ctx.grad_g[i]) for i in ctx.active_set]


def _direction_set(ctx: PointContext, user_dirs, options: RunOptions):
    """User directions first and verbatim, then sampled critical directions
    and the zero direction, deduplicated."""
    out = [(tuple(float(v) for v in d), "user") for d in user_dirs]
    if options.direction is not None:
        return out
    seen = {tuple(round(v, 12) for v in d) for d, _ in out}
    rng = np.random.default_rng(options.seed)
    for d in sample_cone_directions(_critical_cone_rows(ctx), ctx.s, options.n_dir,
                                    rng, tol=ctx.tol.crit_tol):
        key = tuple(round(v, 12) for v in d)
        if key not in seen:
            seen.add(key)
            out.append((d, "sampled"))
    zero = tuple(0.0 for _ in range(ctx.s))
    if tuple(round(v, 12) for v in zero) not in seen:
        out.append((zero, "zero"))
    return out


def _direction_payload(da: DirectionAnalysis, origin: str) -> dict:
    return {
        "d": list(da.d),
        "origin": origin,
        "critical": da.critical,
        "J": list(da.J),
        "K": list(da.K),
        "f_slopes": list(da.f_slopes),
        "g_slopes": {i: v for i, v in sorted(da.g_slopes.items())},
        "curvature": {
            "objectives": {j: _deriv_dict(sd) for j, sd in sorted(da.f_curv.items())},
            "constraints": {i: _deriv_dict(sd) for i, sd in sorted(da.g_curv.items())},
        },
    }


def run_check(problem: Problem, options: RunOptions = RunOptions()) -> dict:
    started = time.monotonic()
    grid = options.grid()
    budget = options.budget()
    points = []
    point_verdicts = []
    for pidx, x in _selected_points(problem, options):
        ctx = point_context(problem, x)
        entry = _point_summary(pidx, ctx)
        if not ctx.feasible:
            entry["verdict"] = INFEASIBLE
            entry["directions"] = []
            points.append(entry)
            point_verdicts.append(INFEASIBLE)
            continue
        user_dirs = _user_directions(problem, pidx, options)
        canonical = tuple(u for u in (_snap_unit(d) for d in user_dirs) if u is not None)

        cq_point = None
        if not options.skip_cq:
            cq_point = run_cq_checks(ctx, None, options.samples, options.seed,
                                     grid, budget, canonical)
            entry["cq"] = {name: _cq_dict(e) for name, e in sorted(cq_point.items())}

        dir_entries = []
        tested = []
        for d, origin in _direction_set(ctx, user_dirs, options):
            da = analyze_direction(ctx, d, grid)
            payload = _direction_payload(da, origin)
            if not da.critical:
                if origin == "user":
                    payload["verdict"] = NOT_CRITICAL
                    dir_entries.append(payload)
                continue
            cq_report = None
            if not options.skip_cq:
                soz = check_so_zangwill(ctx, da, options.samples, options.seed, grid)
                payload["so_zangwill"] = _cq_dict(soz)
                cq_report = dict(cq_point)
                cq_report["so_zangwill"] = soz
            verdict = certify_direction(ctx, da, cq_report)
            payload["verdict"] = verdict.verdict
            payload["certificate"] = _cert_dict(verdict.certificate) if verdict.certificate else None
            payload["violation"] = _violation_dict(verdict.violation) if verdict.violation else None
            payload["primal"] = verdict.primal
            payload["systems"] = verdict.systems
            payload["reasons"] = list(verdict.reasons)
            if verdict.primal_note:
                payload["primal_note"] = verdict.primal_note
            dir_entries.append(payload)
            tested.append(verdict.verdict)
        entry["directions"] = dir_entries
        if any(v == REFUTED for v in tested):
            pv = REFUTED
        elif tested and all(v == CERTIFIED for v in tested):
            pv = CERTIFIED
        else:
            pv = UNDECIDED
        entry["verdict"] = pv
        points.append(entry)
        point_verdicts.append(pv)

    overall = CERTIFIED
    for level in (UNDECIDED, INFEASIBLE, REFUTED):
        if level in point_verdicts:
            overall = level
    if not point_verdicts:
        overall = UNDECIDED
    return _report("check", problem, options, points, overall, started)


def run_cq(problem: Problem, options: RunOptions = RunOptions()) -> dict:
    started = time.monotonic()
    grid = options.grid()
    budget = options.budget()
    points = []
    for pidx, x in _selected_points(problem, options):
        ctx = point_context(problem, x)
        entry = _point_summary(pidx, ctx)
        user_dirs = _user_directions(problem, pidx, options)
        canonical = tuple(u for u in (_snap_unit(d) for d in user_dirs) if u is not None)
        cq_point = run_cq_checks(ctx, None, options.samples, options.seed,
                                 grid, budget, canonical)
        entry["cq"] = {name: _cq_dict(e) for name, e in sorted(cq_point.items())}
        dir_entries = []
        for d in user_dirs:
            da = analyze_direction(ctx, d, grid)
            payload = {"d": list(d), "critical": da.critical}
            if da.critical:
                payload["so_zangwill"] = _cq_dict(
                    check_so_zangwill(ctx, da, options.samples, options.seed, grid))
            else:
                payload["note"] = "direction is not critical; second-order check skipped"
            dir_entries.append(payload)
        entry["directions"] = dir_entries
        points.append(entry)
    return _report("cq", problem, options, points, None, started)


def _function_table(problem: Problem):
    table = []
    for j in range(problem.n):
        table.append((f"f{j + 1}", problem.objectives[j], problem.objective_gradients[j],
                      problem.objective_sources[j]))
    for i in range(problem.m):
        table.append((f"g{i + 1}", problem.constraints[i], problem.constraint_gradients[i],
                      problem.constraint_sources[i]))
    return table


def _selected_functions(problem: Problem, options: RunOptions):
    table = _function_table(problem)
    if options.function is None:
        return table
    for row in table:
        if row[0] == options.function:
            return [row]
    names = ", ".join(r[0] for r in table)
    raise ProblemValidationError(f"unknown function {options.function!r}; expected one of {names}")


def run_convexity(problem: Problem, options: RunOptions = RunOptions()) -> dict:
    started = time.monotonic()
    grid = options.grid()
    if options.z is not None and len(options.z) != problem.s:
        raise ProblemValidationError(
            f"z has {len(options.z)} components, expected {problem.s}")
    box = [(-1.0, 1.0)] * problem.s
    points = []
    for pidx, x in _selected_points(problem, options):
        ctx = point_context(problem, x)
        entry = _point_summary(pidx, ctx)
        user_dirs = _user_directions(problem, pidx, options)
        probes = []
        for name, expr, grads, source in _selected_functions(problem, options):
            row = {"function": name, "source": source}
            for probe in (probe_pseudoconvex(expr, grads, x, box, options.samples, options.seed),
                          probe_so_pseudoconvex(expr, grads, x, box, options.samples,
                                                options.seed, grid)):
                row[probe.property] = {"verdict": probe.verdict, "witness": probe.witness,
                                       "samples": probe.samples, "seed": probe.seed,
                                       "note": probe.note}
            curves = []
            for d in user_dirs:
                z = options.z if options.z is not None else tuple(0.0 for _ in range(problem.s))
                v = probe_solpc_right(CurveProbe(x, d, z), expr, grads, grid, options.seed)
                curves.append({"d": list(d), "z": list(z),
                               "verdict": v.verdict, "witness": v.witness, "note": v.note})
            if curves:
                row["solpc_right"] = curves
            probes.append(row)
        entry["probes"] = probes
        points.append(entry)
    return _report("convexity", problem, options, points, None, started)


def run_deriv(problem: Problem, options: RunOptions = RunOptions()) -> dict:
    started = time.monotonic()
    grid = options.grid()
    points = []
    for pidx, x in _selected_points(problem, options):
        ctx = point_context(problem, x)
        entry = _point_summary(pidx, ctx)
        rows = []
        for d in _user_directions(problem, pidx, options):
            for name, expr, grads, source in _selected_functions(problem, options):
                row = {"function": name, "source": source, "d": list(d)}
                if options.z is not None:
                    if len(options.z) != problem.s:
                        raise ProblemValidationError(
                            f"z has {len(options.z)} components, expected {problem.s}")
                    probe = CurveProbe(x, d, options.z)
                    row["z"] = list(options.z)
                    row.update(_deriv_dict(curve_second_deriv(probe, expr, grads, grid),
                                           with_trace=True))
                else:
                    row.update(_deriv_dict(second_dir_deriv(expr, grads, x, d, grid),
                                           with_trace=True))
                rows.append(row)
        entry["derivatives"] = rows
        points.append(entry)
    return _report("deriv", problem, options, points, None, started)


RUNNERS = {"check": run_check, "cq": run_cq, "convexity": run_convexity, "deriv": run_deriv}


def run_command(command: str, problem: Problem, options: RunOptions) -> dict:
    return RUNNERS[command](problem, options)
