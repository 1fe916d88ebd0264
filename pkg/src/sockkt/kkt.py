"""Second-order KKT certificates and violation witnesses for one critical
direction.

Everything here reduces to small linear programs over the data collected in a
PointContext and a DirectionAnalysis:

  * find_multipliers looks for lambda >= 0 (summing to 1), mu >= 0 supported
    on the active set, with stationary Lagrangian gradient and nonnegative
    second-order Lagrangian curvature along d.
  * primal_condition searches for a z with grad_f_j.z + f_j'' < 0 on J and
    grad_g_i.z + g_i'' <= 0 on K; such a z drives a descent curve inside the
    feasible set and is the sharpest violation witness.
  * system_63 / system_64 are the two homogeneous systems whose joint
    unsolvability is equivalent to the existence of multipliers.

A violation only upgrades to REFUTED when the matching constraint
qualification diagnostics came back clean; otherwise the direction stays
UNDECIDED with the reasons recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cones import DirectionAnalysis, PointContext, _require_critical
from .lp import LinearProgram, solve, strict_system_solvable

CERTIFIED = "CERTIFIED"
REFUTED = "REFUTED"
UNDECIDED = "UNDECIDED"

CQ_CLEAN = "no-counterexample-found"


class DerivativeUnavailable(Exception):
    """A needed second directional derivative did not converge."""

    def __init__(self, objectives=(), constraints=()):
        self.objectives = tuple(objectives)
        self.constraints = tuple(constraints)
        parts = []
        if self.objectives:
            parts.append("objectives " + ", ".join(f"f{j + 1}" for j in self.objectives))
        if self.constraints:
            parts.append("constraints " + ", ".join(f"g{i + 1}" for i in self.constraints))
        super().__init__("second directional derivative unavailable for " + " and ".join(parts))


@dataclass(frozen=True)
class MultiplierCertificate:
    lam: tuple
    mu: tuple                       # full length m; zero off the active set
    stationarity_residual: float
    curvature: float | None         # Lagrangian second derivative along d


@dataclass(frozen=True)
class ViolationCertificate:
    kind: str                       # "primal-z" | "system-63" | "system-64"
    witness: dict
    residuals: dict


@dataclass(frozen=True)
class DirectionVerdict:
    verdict: str
    certificate: MultiplierCertificate | None
    violation: ViolationCertificate | None
    primal: str                     # "holds" | "violated" | "inconclusive"
    systems: dict                   # name -> "solvable" | "unsolvable" | "unavailable"
    reasons: tuple = ()
    primal_note: str | None = None


def _dot(row, vec) -> float:
    return math.fsum(a * b for a, b in zip(row, vec))


def _missing_curvatures(ctx: PointContext, da: DirectionAnalysis):
    mf = [j for j in range(ctx.n)
          if j not in da.f_curv or not da.f_curv[j].converged]
    mg = [i for i in ctx.active_set
          if i not in da.g_curv or not da.g_curv[i].converged]
    return mf, mg


def primal_condition(ctx: PointContext, da: DirectionAnalysis):
    """Search for z with grad_f_j.z + f_j''(xbar,d) < 0 on J and
    grad_g_i.z + g_i''(xbar,d) <= 0 on K.

    Returns (status, violation, note); status is "holds" when no z exists,
    "violated" with a re-verifiable witness when one does, "inconclusive"
    when J is empty or a needed derivative is unavailable.
    """
    _require_critical(da)
    missing_f = [j for j in da.J if j not in da.f_curv or not da.f_curv[j].converged]
    missing_g = [i for i in da.K if i not in da.g_curv or not da.g_curv[i].converged]
    if missing_f or missing_g:
        return "inconclusive", None, str(DerivativeUnavailable(missing_f, missing_g))
    if not da.J:
        return ("inconclusive", None,
                "no objective has vanishing slope along d; the strict part of the system is empty")
    s = ctx.s
    strict = [list(ctx.grad_f[j]) + [da.f_curv[j].value] for j in da.J]
    weak = [list(ctx.grad_g[i]) + [da.g_curv[i].value] for i in da.K]
    out = strict_system_solvable(strict, weak, strict_vars=[s], tol=ctx.tol.lp_tol)
    if not out.solvable:
        return "holds", None, None
    tau = out.witness[s]
    z = [w / tau for w in out.witness[:s]]
    residuals = {
        "objectives": {j: _dot(ctx.grad_f[j], z) + da.f_curv[j].value for j in da.J},
        "constraints": {i: _dot(ctx.grad_g[i], z) + da.g_curv[i].value for i in da.K},
    }
    return "violated", ViolationCertificate("primal-z", {"z": z}, residuals), None


def system_63_solvable(ctx: PointContext, da: DirectionAnalysis):
    """grad_f_j.u + v f_j'' < 0 for every j, grad_g_i.u + v g_i'' <= 0 on the
    active set, v > 0.  Needs every referenced second derivative."""
    _require_critical(da)
    mf, mg = _missing_curvatures(ctx, da)
    if mf or mg:
        raise DerivativeUnavailable(mf, mg)
    s = ctx.s
    strict = [list(ctx.grad_f[j]) + [da.f_curv[j].value] for j in range(ctx.n)]
    weak = [list(ctx.grad_g[i]) + [da.g_curv[i].value] for i in ctx.active_set]
    out = strict_system_solvable(strict, weak, strict_vars=[s], tol=ctx.tol.lp_tol)
    if not out.solvable:
        return False, None
    return True, {"u": out.witness[:s], "v": out.witness[s]}


def system_64_solvable(ctx: PointContext):
    """grad_f_j.u < 0 for every j, grad_g_i.u <= 0 on the active set.
    First-order data only."""
    strict = [list(r) for r in ctx.grad_f]
    weak = [list(ctx.grad_g[i]) for i in ctx.active_set]
    out = strict_system_solvable(strict, weak, tol=ctx.tol.lp_tol)
    if not out.solvable:
        return False, None
    return True, {"u": out.witness}


def _multiplier_lp(ctx: PointContext, da: DirectionAnalysis | None, pinned_f, pinned_g):
    """Feasibility LP for the multiplier system; da None drops the curvature
    row (first-order conditions)."""
    n, s = ctx.n, ctx.s
    act = list(ctx.active_set)
    nv = n + len(act)
    rows = []
    for k in range(s):
        coeffs = [ctx.grad_f[j][k] for j in range(n)] + [ctx.grad_g[i][k] for i in act]
        rows.append((coeffs, "=", 0.0))
    if da is not None:
        coeffs = [da.f_curv[j].value if j not in pinned_f else 0.0 for j in range(n)]
        coeffs += [da.g_curv[i].value if i not in pinned_g else 0.0 for i in act]
        rows.append((coeffs, ">=", 0.0))
    rows.append(([1.0] * n + [0.0] * len(act), "=", 1.0))
    for j in pinned_f:
        r = [0.0] * nv
        r[j] = 1.0
        rows.append((r, "=", 0.0))
    for p, i in enumerate(act):
        if i in pinned_g:
            r = [0.0] * nv
            r[n + p] = 1.0
            rows.append((r, "=", 0.0))
    out = solve(LinearProgram("min", [0.0] * nv, rows, ["nonneg"] * nv), tol=ctx.tol.lp_tol)
    if out.status != "optimal":
        return None
    lam = tuple(out.x[:n])
    mu = [0.0] * ctx.m
    for p, i in enumerate(act):
        mu[i] = out.x[n + p]
    residual = max(
        (abs(math.fsum([lam[j] * ctx.grad_f[j][k] for j in range(n)]
                       + [mu[i] * ctx.grad_g[i][k] for i in act]))
         for k in range(s)),
        default=0.0,
    )
    curvature = None
    if da is not None:
        curvature = math.fsum(
            [lam[j] * da.f_curv[j].value for j in range(n) if j not in pinned_f]
            + [mu[i] * da.g_curv[i].value for i in act if i not in pinned_g]
        )
    return MultiplierCertificate(lam, tuple(mu), residual, curvature)


def find_multipliers(ctx: PointContext, da: DirectionAnalysis) -> MultiplierCertificate | None:
    """Multipliers for the second-order conditions along da.d.

    Objectives or active constraints whose curvature is unavailable get their
    multiplier pinned to zero, which keeps any certificate found sound.  When
    the pinned search fails and something was pinned, nothing definitive can
    be said and DerivativeUnavailable is raised; with full data a failed
    search is a genuine "no multipliers exist".
    """
    _require_critical(da)
    mf, mg = _missing_curvatures(ctx, da)
    cert = _multiplier_lp(ctx, da, set(mf), set(mg))
    if cert is not None:
        return cert
    if mf or mg:
        raise DerivativeUnavailable(mf, mg)
    return None


def first_order_kkt(ctx: PointContext) -> MultiplierCertificate | None:
    """Plain first-order multipliers; the d = 0 reduction of the above."""
    return _multiplier_lp(ctx, None, set(), set())


def _cq_clean(cq_report, name: str) -> bool:
    if cq_report is None:
        return False
    entry = cq_report.get(name)
    return entry is not None and getattr(entry, "verdict", None) == CQ_CLEAN


def _cq_blocker(cq_report, name: str) -> str:
    if cq_report is None or cq_report.get(name) is None:
        return f"{name} diagnostic was skipped"
    return f"{name} diagnostic did not come back clean"


def certify_direction(ctx: PointContext, da: DirectionAnalysis, cq_report=None) -> DirectionVerdict:
    """Certificate, violation witnesses, and the final per-direction verdict.

    REFUTED requires both a violation and clean qualifications for the route
    that uses it: the primal z and system 63 lean on the second-order Zangwill
    condition, system 64 on Abadie (Guignard suffices for a single objective).
    A certificate alone yields CERTIFIED; a proven violation takes precedence
    over a coexisting certificate because non-minimality is the stronger fact.
    """
    _require_critical(da)
    reasons = []

    cert = None
    try:
        cert = find_multipliers(ctx, da)
    except DerivativeUnavailable as ex:
        reasons.append(f"multiplier search incomplete: {ex}")

    primal, violation, primal_note = primal_condition(ctx, da)

    systems = {}
    w63 = w64 = None
    try:
        ok63, w63 = system_63_solvable(ctx, da)
        systems["system_63"] = "solvable" if ok63 else "unsolvable"
    except DerivativeUnavailable:
        systems["system_63"] = "unavailable"
    ok64, w64 = system_64_solvable(ctx)
    systems["system_64"] = "solvable" if ok64 else "unsolvable"

    scalar = ctx.n == 1
    soz_ok = _cq_clean(cq_report, "so_zangwill")
    abadie_ok = _cq_clean(cq_report, "abadie")
    guignard_ok = _cq_clean(cq_report, "guignard")

    refuted = None
    if primal == "violated":
        if soz_ok:
            refuted = violation
        else:
            reasons.append("primal violation witness found but " + _cq_blocker(cq_report, "so_zangwill"))
    if refuted is None and systems.get("system_63") == "solvable":
        strict = [list(ctx.grad_f[j]) + [da.f_curv[j].value] for j in range(ctx.n)]
        weak = [list(ctx.grad_g[i]) + [da.g_curv[i].value] for i in ctx.active_set]
        resid = {
            "objectives": {j: _dot(strict[j][:-1], w63["u"]) + strict[j][-1] * w63["v"]
                           for j in range(ctx.n)},
            "constraints": {i: _dot(weak[p][:-1], w63["u"]) + weak[p][-1] * w63["v"]
                            for p, i in enumerate(ctx.active_set)},
        }
        v63 = ViolationCertificate("system-63", w63, resid)
        if soz_ok:
            refuted = v63
        else:
            reasons.append("system 63 is solvable but " + _cq_blocker(cq_report, "so_zangwill"))
    if refuted is None and ok64:
        resid = {
            "objectives": {j: _dot(ctx.grad_f[j], w64["u"]) for j in range(ctx.n)},
            "constraints": {i: _dot(ctx.grad_g[i], w64["u"]) for i in ctx.active_set},
        }
        v64 = ViolationCertificate("system-64", w64, resid)
        if abadie_ok or (scalar and guignard_ok):
            refuted = v64
        else:
            need = "abadie or guignard" if scalar else "abadie"
            reasons.append(f"system 64 is solvable but the {need} diagnostic did not come back clean"
                           if cq_report else f"system 64 is solvable but cq diagnostics were skipped")

    if refuted is not None:
        return DirectionVerdict(REFUTED, cert, refuted, primal, systems, tuple(reasons), primal_note)
    if cert is not None:
        return DirectionVerdict(CERTIFIED, cert, None, primal, systems, tuple(reasons), primal_note)

    if primal == "inconclusive" and primal_note:
        reasons.append(f"primal search inconclusive: {primal_note}")
    if (not reasons and systems.get("system_63") == "unsolvable"
            and systems.get("system_64") == "unsolvable"):
        reasons.append("multipliers absent although both dual systems are unsolvable; "
                       "the instance sits at the solver tolerance")
    return DirectionVerdict(UNDECIDED, None, None, primal, systems, tuple(reasons), primal_note)
