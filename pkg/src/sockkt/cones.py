"""Point context, direction analysis, and the cones attached to a candidate
point of an inequality-constrained program.

For a feasible xbar with active set I and a critical direction d, the two
second-order sets compared by the diagnostics are

    A(xbar, d): z such that g_i(xbar + t d + 0.5 t^2 z) <= 0 for all small
                t > 0 and every i in K(xbar, d)
    B(xbar, d): z such that grad_g_i(xbar).z + g_i''(xbar, d) <= 0 on K

A is sampled along the actual curve; B is a finite list of half-spaces.  The
first-order cones Z (feasible directions) and L (linearizing) and a sampled
tangent-cone probe follow the same pattern: cheap algebra on one side, honest
path sampling on the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .deriv import CurveProbe, SecondDirDeriv, StepGrid, curve_second_deriv, second_dir_deriv
from .expr import EvalError, evaluate
from .lp import LinearProgram, solve

# shortest all-nonpositive tail of grid samples accepted as "holds near 0"
SUFFIX_MIN = 3
# components smaller than this are snapped to exact zero after normalizing
SNAP = 1e-12


@dataclass(frozen=True)
class Tolerances:
    active_tol: float = 1e-9      # |g_i(xbar)| window that counts as active
    feas_tol: float = 1e-9        # feasibility slack at the candidate point
    crit_tol: float = 1e-9        # |slope| window that counts as vanishing
    b_tol: float = 1e-9           # slack on the half-space tests for B
    lp_tol: float = 1e-9
    cert_tol: float = 1e-8        # residual bound on claimed certificates
    cert_margin: float = 1e-8     # strict inequalities must clear this margin
    margin: float = 1e-8          # generalized-convexity witness margin

    def replaced(self, **kw) -> "Tolerances":
        vals = {k: getattr(self, k) for k in self.__dataclass_fields__}
        vals.update({k: v for k, v in kw.items() if v is not None})
        return Tolerances(**vals)


@dataclass(frozen=True)
class ConeMembership:
    """member True/False, or None when sampling could not decide."""

    member: bool | None
    witness: dict | None = None
    note: str | None = None


@dataclass(frozen=True)
class PointContext:
    xbar: tuple
    f_values: tuple
    g_values: tuple
    active_set: tuple
    grad_f: tuple                  # n rows of s floats
    grad_g: tuple                  # m rows of s floats
    feasible: bool
    tol: Tolerances = Tolerances()
    problem: object | None = field(default=None, compare=False, repr=False)

    @property
    def s(self) -> int:
        return len(self.xbar)

    @property
    def n(self) -> int:
        return len(self.f_values)

    @property
    def m(self) -> int:
        return len(self.g_values)

    def active_grads(self):
        return [self.grad_g[i] for i in self.active_set]


@dataclass(frozen=True)
class DirectionAnalysis:
    d: tuple
    critical: bool
    J: tuple                       # objective indices with vanishing slope
    K: tuple                       # active constraint indices with vanishing slope
    f_slopes: tuple
    g_slopes: dict                 # active index -> slope
    f_curv: dict                   # objective index -> SecondDirDeriv (best effort, all j)
    g_curv: dict                   # active index -> SecondDirDeriv (best effort, all active)


def _dot(row, vec) -> float:
    return math.fsum(a * b for a, b in zip(row, vec))


def point_context(problem, xbar, tol: Tolerances | None = None) -> PointContext:
    """Evaluate objectives, constraints, and gradients at xbar and classify
    the active set.  Evaluation errors at xbar itself propagate."""
    if tol is None:
        tol = getattr(problem, "tolerances", None) or Tolerances()
    xs = tuple(float(v) for v in xbar)
    if len(xs) != len(problem.variables):
        raise ValueError(f"point has {len(xs)} components, problem has {len(problem.variables)} variables")
    f_values = tuple(evaluate(e, xs) for e in problem.objectives)
    g_values = tuple(evaluate(e, xs) for e in problem.constraints)
    grad_f = tuple(tuple(evaluate(gk, xs) for gk in grads) for grads in problem.objective_gradients)
    grad_g = tuple(tuple(evaluate(gk, xs) for gk in grads) for grads in problem.constraint_gradients)
    active = tuple(i for i, gv in enumerate(g_values) if gv >= -tol.active_tol)
    feasible = all(gv <= tol.feas_tol for gv in g_values)
    return PointContext(xs, f_values, g_values, active, grad_f, grad_g, feasible, tol, problem)


def _curvature(ctx: PointContext, expr, grads, d, grid: StepGrid) -> SecondDirDeriv:
    try:
        return second_dir_deriv(expr, grads, ctx.xbar, d, grid)
    except EvalError as ex:
        return SecondDirDeriv(None, "inconclusive", (), note=f"evaluation failed: {ex}")


def analyze_direction(ctx: PointContext, d, grid: StepGrid = StepGrid()) -> DirectionAnalysis:
    """Slopes, the index sets J and K, criticality, and best-effort second
    directional derivatives for every objective and every active constraint.

    J and K mark where the slopes vanish, which is where the derivatives are
    guaranteed by the problem class; the remaining quotients are still sampled
    because the dual systems and the Lagrangian curvature reference them, and
    a non-convergent entry simply stays unavailable."""
    p = ctx.problem
    ds = tuple(float(v) for v in d)
    if len(ds) != ctx.s:
        raise ValueError("direction dimension mismatch")
    ct = ctx.tol.crit_tol
    f_slopes = tuple(_dot(row, ds) for row in ctx.grad_f)
    g_slopes = {i: _dot(ctx.grad_g[i], ds) for i in ctx.active_set}
    critical = all(v <= ct for v in f_slopes) and all(v <= ct for v in g_slopes.values())
    J = tuple(j for j, v in enumerate(f_slopes) if abs(v) <= ct)
    K = tuple(i for i in ctx.active_set if abs(g_slopes[i]) <= ct)
    f_curv = {}
    g_curv = {}
    if p is not None:
        for j in range(ctx.n):
            f_curv[j] = _curvature(ctx, p.objectives[j], p.objective_gradients[j], ds, grid)
        for i in ctx.active_set:
            g_curv[i] = _curvature(ctx, p.constraints[i], p.constraint_gradients[i], ds, grid)
    return DirectionAnalysis(ds, critical, J, K, f_slopes, g_slopes, f_curv, g_curv)


def _require_critical(da: DirectionAnalysis):
    if not da.critical:
        raise ValueError("direction is not critical at this point")


def b_halfspaces(ctx: PointContext, da: DirectionAnalysis):
    """Rows (a, rhs) with B = {z : a.z <= rhs}, or None when some needed
    curvature did not converge."""
    rows = []
    for i in da.K:
        curv = da.g_curv.get(i)
        if curv is None or not curv.converged:
            return None
        rows.append((list(ctx.grad_g[i]), -curv.value))
    return rows


def _quotient_resolution(sd) -> float:
    """Spread of the accepted agreement window: the uncertainty a converged
    quotient limit was actually measured at."""
    if sd is None or len(sd.trace) < 3:
        return 0.0
    qs = [q for _, q in sd.trace[-3:]]
    return max(qs) - min(qs)


def in_B(ctx: PointContext, da: DirectionAnalysis, z) -> ConeMembership:
    """Half-space test grad_g_i(xbar).z <= -g_i''(xbar, d) over K.

    The rhs is a quotient limit, so each row is tested no finer than the
    resolution that limit carries; b_tol alone would reject points of B on
    grid noise whenever the true curvature is 0.
    """
    _require_critical(da)
    rows = b_halfspaces(ctx, da)
    if rows is None:
        missing = [i for i in da.K if i not in da.g_curv or not da.g_curv[i].converged]
        return ConeMembership(None, note=f"curvature unavailable for constraints {missing}")
    if not rows:
        return ConeMembership(True, note="K is empty; every z qualifies")
    zs = tuple(float(v) for v in z)
    for (a, rhs), i in zip(rows, da.K):
        lhs = _dot(a, zs)
        slack = max(ctx.tol.b_tol, _quotient_resolution(da.g_curv.get(i)))
        if lhs > rhs + slack:
            return ConeMembership(False, witness={"constraint": i, "lhs": lhs, "rhs": rhs})
    return ConeMembership(True)


def _suffix_ok(values, predicate) -> int:
    """Length of the longest tail of values satisfying predicate."""
    run = 0
    for v in reversed(values):
        if v is not None and predicate(v):
            run += 1
        else:
            break
    return run


def in_A(ctx: PointContext, da: DirectionAnalysis, z, grid: StepGrid = StepGrid()) -> ConeMembership:
    """Sample g_i(xbar + t d + 0.5 t^2 z) on the grid for each i in K; z is a
    member when every curve is nonpositive on a tail of at least SUFFIX_MIN
    samples.  The sign test has no tolerance: the curve either reenters the
    feasible side or it does not."""
    _require_critical(da)
    if ctx.problem is None:
        raise ValueError("point context carries no problem; A cannot be sampled")
    if not da.K:
        return ConeMembership(True, note="K is empty; every z qualifies")
    zs = tuple(float(v) for v in z)
    probe = CurveProbe(ctx.xbar, da.d, zs)
    ts = grid.points()
    worst = None
    for i in da.K:
        g = ctx.problem.constraints[i]
        vals = []
        bad = 0
        for t in ts:
            pt = tuple(x + t * dv + 0.5 * t * t * zv for x, dv, zv in zip(ctx.xbar, da.d, zs))
            try:
                vals.append(evaluate(g, pt))
            except EvalError:
                vals.append(None)
                bad += 1
        if bad == len(ts):
            return ConeMembership(None, note=f"constraint {i} not evaluable along the curve")
        run = _suffix_ok(vals, lambda v: v <= 0.0)
        if run < SUFFIX_MIN:
            # deepest offending sample: the smallest t with a positive value
            for t, v in zip(reversed(ts), reversed(vals)):
                if v is not None and v > 0.0:
                    cand = {"constraint": i, "t": t, "value": v}
                    if worst is None or cand["t"] < worst["t"]:
                        worst = cand
                    break
    if worst is not None:
        return ConeMembership(False, witness=worst)
    return ConeMembership(True)


def in_linearizing_cone(ctx: PointContext, d) -> ConeMembership:
    """L = {d : grad_g_i(xbar).d <= 0 for all active i}, tested with crit_tol."""
    ds = tuple(float(v) for v in d)
    for i in ctx.active_set:
        slope = _dot(ctx.grad_g[i], ds)
        if slope > ctx.tol.crit_tol:
            return ConeMembership(False, witness={"constraint": i, "slope": slope})
    return ConeMembership(True)


def in_feasible_direction_cone(ctx: PointContext, d, grid: StepGrid = StepGrid()) -> ConeMembership:
    """Z membership: xbar + t d stays feasible on a tail of the grid.  The
    zero direction reduces to feasibility of xbar itself."""
    if ctx.problem is None:
        raise ValueError("point context carries no problem; Z cannot be sampled")
    ds = tuple(float(v) for v in d)
    if all(v == 0.0 for v in ds):
        return ConeMembership(ctx.feasible, note="zero direction: membership is feasibility of xbar")
    ts = grid.points()
    worst = None
    for i, g in enumerate(ctx.problem.constraints):
        vals = []
        bad = 0
        for t in ts:
            pt = tuple(x + t * dv for x, dv in zip(ctx.xbar, ds))
            try:
                vals.append(evaluate(g, pt))
            except EvalError:
                vals.append(None)
                bad += 1
        if bad == len(ts):
            return ConeMembership(None, note=f"constraint {i} not evaluable along the ray")
        run = _suffix_ok(vals, lambda v: v <= 0.0)
        if run < SUFFIX_MIN:
            for t, v in zip(reversed(ts), reversed(vals)):
                if v is not None and v > 0.0:
                    cand = {"constraint": i, "t": t, "value": v}
                    if worst is None or cand["t"] < worst["t"]:
                        worst = cand
                    break
    if worst is not None:
        return ConeMembership(False, witness=worst)
    return ConeMembership(True)


@dataclass(frozen=True)
class TangentBudget:
    steps: int = 10
    search_evals: int = 32
    seed: int = 0
    t0: float = 0.1
    rho: float = 0.5


def tangent_probe(ctx: PointContext, d, budget: TangentBudget = TangentBudget()) -> ConeMembership:
    """Can a sequence x_k -> xbar in S realize the direction d?

    At each level t_k the probe searches u near d (within radius sqrt(t_k))
    minimizing the worst constraint value at xbar + t_k u.  All levels
    admitting a feasible sample means yes; a strictly infeasible best sample
    at every level of the tail means no; anything else is inconclusive.
    """
    if ctx.problem is None:
        raise ValueError("point context carries no problem; T cannot be probed")
    ds = tuple(float(v) for v in d)
    if all(v == 0.0 for v in ds):
        return ConeMembership(ctx.feasible, note="zero direction: always tangent at a feasible point")
    rng = np.random.default_rng(budget.seed)
    s = ctx.s
    levels = [budget.t0 * budget.rho**k for k in range(budget.steps)]
    accepted = []
    rejected = []
    for t in levels:
        r = math.sqrt(t)
        cands = [ds]
        for i in range(s):
            for sgn in (1.0, -1.0):
                u = list(ds)
                u[i] += sgn * r
                cands.append(tuple(u))
        while len(cands) < budget.search_evals:
            v = rng.standard_normal(s)
            nrm = float(np.linalg.norm(v))
            if nrm < 1e-12:
                continue
            frac = float(rng.uniform(0.0, 1.0)) ** (1.0 / s)
            cands.append(tuple(dv + r * frac * vv / nrm for dv, vv in zip(ds, v)))
        best = None
        best_u = None
        for u in cands:
            pt = tuple(x + t * uv for x, uv in zip(ctx.xbar, u))
            try:
                worst = max((evaluate(g, pt) for g in ctx.problem.constraints), default=0.0)
            except EvalError:
                continue
            if best is None or worst < best:
                best = worst
                best_u = u
        if best is None:
            return ConeMembership(None, note=f"no evaluable sample at level t={t}")
        if best <= 0.0:
            accepted.append(t)
        else:
            rejected.append((t, best, best_u))
    if len(accepted) == len(levels):
        return ConeMembership(True, witness={"levels": len(levels), "direction": list(ds)})
    tail = max(3, budget.steps // 2)
    if len(rejected) >= tail and all(t in [r[0] for r in rejected] for t in levels[-tail:]):
        t_last, viol, u = rejected[-1]
        return ConeMembership(False, witness={
            "direction": list(ds), "t": t_last, "best_violation": viol,
            "best_u": list(u), "levels_rejected": len(rejected)})
    return ConeMembership(None, note=f"{len(accepted)} of {len(levels)} levels admitted feasible samples")


def in_pseudotangent(sampled_T, d, lp_tol: float = 1e-9,
                     max_weight: float | None = None) -> ConeMembership:
    """Is d a nonnegative combination of the sampled tangent directions?

    This is membership relative to the sample: a no is a witness that the
    sampled convexification misses d, not a proof about the full closure.

    The sample itself carries the probe's radius resolution, so directions
    just outside the true cone can sneak in; conic combinations can amplify
    that slack arbitrarily through near-cancelling terms with huge weights.
    max_weight caps the total weight of an admissible combination, which
    limits the amplification to max_weight times the sample resolution.
    """
    ds = [float(v) for v in d]
    if not sampled_T:
        near_zero = all(abs(v) <= lp_tol for v in ds)
        return ConeMembership(near_zero, note="empty sample: only the origin is representable")
    s = len(ds)
    rows = []
    for k in range(s):
        rows.append(([float(u[k]) for u in sampled_T], "=", ds[k]))
    out = solve(LinearProgram("min", [1.0] * len(sampled_T), rows, ["nonneg"] * len(sampled_T)), tol=lp_tol)
    if out.status != "optimal":
        return ConeMembership(False, witness={"sample_size": len(sampled_T)})
    total = math.fsum(out.x)
    if max_weight is not None and total > max_weight:
        return ConeMembership(False, witness={"sample_size": len(sampled_T),
                                              "weight_sum": total,
                                              "max_weight": max_weight},
                              note="representable only with near-cancelling weights")
    return ConeMembership(True, witness={"coefficients": out.x, "weight_sum": total})


def _snap_unit(v):
    nrm = float(np.linalg.norm(v))
    if nrm <= SNAP:
        return None
    u = np.asarray(v, dtype=float) / nrm
    u[np.abs(u) < SNAP] = 0.0
    nrm = float(np.linalg.norm(u))
    if nrm <= SNAP:
        return None
    return tuple(float(c) for c in u / nrm)


def sample_cone_directions(rows, s, n, rng, canonical=(), tol: float = 1e-9):
    """Up to n unit directions of the cone {d : row.d <= 0 for each row}.

    Candidates come from three springs: supplied canonical vectors, vertices
    of the cone boxed to [-1,1]^s under random linear objectives (these land
    on low-dimensional faces that blind rejection sampling would miss), and
    plain rejection sampling.  Deterministic for a given generator state.
    """
    rows = [list(map(float, r)) for r in rows]

    def member(u):
        return all(_dot(r, u) <= tol for r in rows)

    found = []
    seen = set()

    def push(u):
        if u is None or not member(u):
            return
        key = tuple(round(c, 12) for c in u)
        if key in seen:
            return
        seen.add(key)
        found.append(u)

    for c in canonical:
        push(_snap_unit(c))
    for i in range(s):
        for sgn in (1.0, -1.0):
            e = [0.0] * s
            e[i] = sgn
            push(tuple(e))
            if len(found) >= n:
                return found[:n]

    box = [([1.0 if j == i else 0.0 for j in range(s)], "<=", 1.0) for i in range(s)]
    box += [([-1.0 if j == i else 0.0 for j in range(s)], "<=", 1.0) for i in range(s)]
    cone_rows = [(r, "<=", 0.0) for r in rows]
    tries = 0
    while len(found) < n and tries < 8 * n:
        tries += 1
        c = rng.standard_normal(s)
        out = solve(LinearProgram("max", list(c), cone_rows + box, ["free"] * s))
        if out.status == "optimal" and out.x is not None:
            push(_snap_unit(out.x))
        if len(found) < n:
            push(_snap_unit(rng.standard_normal(s)))
    return found[:n]
