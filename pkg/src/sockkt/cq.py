"""Constraint-qualification diagnostics by counterexample search.

None of these conditions is decidable from finitely many samples, so the
checks are falsifiers: they hunt for a witness violating the equality the
qualification asserts and report "no-counterexample-found" when the hunt
comes up empty.  Three rules keep the witnesses honest:

  * boundary candidates must stay bad under small jitters toward the interior
    of the cheap side of the equality, otherwise they are mere boundary
    artifacts of the sampling;
  * a verdict hanging on a single witness is re-run with twice the samples
    (same seed, so the original draws are a prefix of the new ones);
  * relative-to-sample claims (the pseudotangent test) must survive doubling
    of the sample they are relative to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import (ConeMembership, DirectionAnalysis, PointContext, TangentBudget,
                    _dot, _require_critical, _snap_unit, b_halfspaces,
                    in_A, in_feasible_direction_cone, in_linearizing_cone,
                    in_pseudotangent, sample_cone_directions, tangent_probe)
from .deriv import StepGrid
from .lp import LinearProgram, solve

NO_COUNTEREXAMPLE = "no-counterexample-found"
FAILS = "fails"
SKIPPED = "skipped"

JITTER_ETA = 1e-3
JITTER_COUNT = 8


@dataclass(frozen=True)
class CQEntry:
    name: str
    verdict: str
    witness: dict | None
    samples: int
    seed: int
    note: str | None = None
    doubled: bool = False


def _interior_point(rows, s, bound, tol=1e-9):
    """A point of {x : a.x <= rhs} with maximal row-norm-scaled slack inside
    the box |x_i| <= bound, or None when the interior is empty."""
    lp_rows = []
    for a, rhs in rows:
        nrm = math.sqrt(math.fsum(v * v for v in a))
        lp_rows.append((list(a) + [nrm], "<=", rhs))
    for i in range(s):
        e = [0.0] * (s + 1)
        e[i] = 1.0
        lp_rows.append((list(e), "<=", bound))
        e2 = [0.0] * (s + 1)
        e2[i] = -1.0
        lp_rows.append((e2, "<=", bound))
    cap = [0.0] * s + [1.0]
    lp_rows.append((cap, "<=", 2.0 * bound))
    c = [0.0] * s + [1.0]
    out = solve(LinearProgram("max", c, lp_rows, ["free"] * s + ["nonneg"]))
    if out.status != "optimal" or out.value <= tol:
        return None
    return out.x[:s]


def _with_doubling(runner, n_samples, seed):
    """Run a counterexample search; re-run once at twice the sample count if
    the verdict hangs on exactly one witness."""
    witnesses, meta = runner(n_samples)
    doubled = False
    if len(witnesses) == 1:
        witnesses, meta = runner(2 * n_samples)
        n_samples = 2 * n_samples
        doubled = True
    return witnesses, meta, n_samples, doubled


def _direction_jitters(d, interior, rng, rows, tol):
    """Candidates near d pushed toward the interior of the cone {row.x <= 0};
    random ones must stay inside the cone to count."""
    out = []
    if interior is not None:
        nrm = math.sqrt(math.fsum(v * v for v in interior))
        if nrm > 1e-12:
            ip = [v / nrm for v in interior]
            for eta in (JITTER_ETA, 1e-2, 1e-1):
                cand = _snap_unit([(1 - eta) * a + eta * b for a, b in zip(d, ip)])
                if cand is not None:
                    out.append(cand)
    while len(out) < JITTER_COUNT:
        xi = rng.standard_normal(len(d))
        cand = _snap_unit([a + JITTER_ETA * b for a, b in zip(d, xi)])
        if cand is None:
            continue
        if all(_dot(r, cand) <= tol for r in rows):
            out.append(cand)
        if rng.uniform() < 0.02:       # cone too thin to jitter inside; give up
            break
    return out


def check_zangwill(ctx: PointContext, n_samples: int = 64, seed: int = 0,
                   grid: StepGrid = StepGrid(), canonical=()) -> CQEntry:
    """Hunt for d in the linearizing cone that no jitter makes a feasible
    direction; such a d separates cl(Z) from L."""
    rows = [list(r) for r in ctx.active_grads()]
    interior = _interior_point([(r, 0.0) for r in rows], ctx.s, 1.0) if rows else None

    def runner(n):
        rng = np.random.default_rng(seed)
        dirs = sample_cone_directions(rows, ctx.s, n, rng, canonical=canonical,
                                      tol=ctx.tol.crit_tol)
        witnesses = []
        inconclusive = 0
        for d in dirs:
            res = in_feasible_direction_cone(ctx, d, grid)
            if res.member:
                continue
            if res.member is None:
                inconclusive += 1
                continue
            saved = False
            tried = 0
            for cand in _direction_jitters(d, interior, rng, rows, ctx.tol.crit_tol):
                tried += 1
                jr = in_feasible_direction_cone(ctx, cand, grid)
                if jr.member:
                    saved = True
                    break
            if not saved:
                witnesses.append({"direction": list(d), "ray_test": res.witness,
                                  "jitters_tried": tried})
        return witnesses, {"inconclusive": inconclusive, "directions": len(dirs)}

    witnesses, meta, n, doubled = _with_doubling(runner, n_samples, seed)
    if witnesses:
        return CQEntry("zangwill", FAILS, witnesses[0], n, seed,
                       note=f"{len(witnesses)} witness(es) among {meta['directions']} directions",
                       doubled=doubled)
    note = None
    if meta["inconclusive"]:
        note = f"{meta['inconclusive']} direction(s) had unsampleable rays"
    return CQEntry("zangwill", NO_COUNTEREXAMPLE, None, n, seed, note=note, doubled=doubled)


def _sample_b_points(rows, s, n, rng, bound):
    """Points of B = {z : a.z <= rhs}: unit axis probes, a deep interior
    point, boundary contacts, and random rays stopped at or short of the
    first blocking half-space."""
    cands = []
    seen = set()

    def push(z):
        if z is None:
            return
        if any(_dot(a, z) > rhs + 1e-9 for a, rhs in rows):
            return
        key = tuple(round(v, 12) for v in z)
        if key in seen:
            return
        seen.add(key)
        cands.append(tuple(float(v) for v in z))

    for i in range(s):
        for sgn in (1.0, -1.0):
            e = [0.0] * s
            e[i] = sgn
            push(e)
    interior = _interior_point(rows, s, bound) if rows else [0.0] * s
    if interior is not None:
        push(interior)
        star = interior
    else:
        # B has empty interior; fall back to any feasible point
        feas = solve(LinearProgram("min", [0.0] * s, [(list(a), "<=", rhs) for a, rhs in rows],
                                   ["free"] * s))
        if feas.status != "optimal":
            return cands, None
        star = feas.x
        push(star)
    for a, rhs in rows:
        den = math.fsum(v * v for v in a)
        if den <= 1e-18:
            continue
        theta = (rhs - _dot(a, star)) / den
        push([x + theta * av for x, av in zip(star, a)])
    tries = 0
    while len(cands) < n and tries < 6 * n:
        tries += 1
        v = rng.standard_normal(s)
        nrm = float(np.linalg.norm(v))
        if nrm < 1e-12:
            continue
        v = v / nrm
        theta = bound
        for a, rhs in rows:
            adv = _dot(a, v)
            if adv > 1e-12:
                theta = min(theta, (rhs - _dot(a, star)) / adv)
        if theta <= 0.0:
            continue
        frac = 1.0 if tries % 2 == 0 else float(rng.uniform(0.3, 0.95))
        push([x + frac * theta * vv for x, vv in zip(star, v)])
    return cands[:n], star


def check_so_zangwill(ctx: PointContext, da: DirectionAnalysis, n_samples: int = 64,
                      seed: int = 0, grid: StepGrid = StepGrid()) -> CQEntry:
    """Hunt for z in B(xbar, d) that no jitter toward the interior of B makes
    a member of A(xbar, d); such a z separates cl(A) from B."""
    _require_critical(da)
    hs = b_halfspaces(ctx, da)
    if hs is None:
        missing = [i for i in da.K if i not in da.g_curv or not da.g_curv[i].converged]
        return CQEntry("so_zangwill", SKIPPED, None, 0, seed,
                       note=f"curvature unavailable for constraints {missing}")
    rows = []
    for a, rhs in hs:
        nrm = math.sqrt(math.fsum(v * v for v in a))
        if nrm <= 1e-12:
            # rhs is a quotient limit, resolved no finer than grid.tol_rel;
            # the emptiness call flips the whole verdict, so it gets the
            # coarser of the two tolerances
            if rhs < -max(ctx.tol.b_tol, grid.tol_rel):
                # 0.z <= negative is unsatisfiable: B is empty, and A inside it
                return CQEntry("so_zangwill", NO_COUNTEREXAMPLE, None, 0, seed,
                               note="B is empty along this direction; the equality holds vacuously")
            continue                    # 0.z <= a vanishing rhs carries no information
        rows.append((a, rhs))
    bound = 4.0 * (1.0 + max((abs(r) for _, r in rows), default=0.0))

    def runner(n):
        rng = np.random.default_rng(seed)
        cands, star = _sample_b_points(rows, ctx.s, n, rng, bound)
        witnesses = []
        inconclusive = 0
        for z in cands:
            res = in_A(ctx, da, z, grid)
            if res.member:
                continue
            if res.member is None:
                inconclusive += 1
                continue
            saved = False
            tried = 0
            jitters = []
            if star is not None and any(abs(a - b) > 1e-15 for a, b in zip(z, star)):
                for eta in (JITTER_ETA, 1e-2, 1e-1):
                    jitters.append(tuple((1 - eta) * a + eta * b for a, b in zip(z, star)))
            scale = 1.0 + math.sqrt(math.fsum(v * v for v in z))
            while len(jitters) < JITTER_COUNT:
                xi = rng.standard_normal(ctx.s)
                cand = tuple(a + JITTER_ETA * scale * b for a, b in zip(z, xi))
                if all(_dot(a, cand) <= rhs + ctx.tol.b_tol for a, rhs in rows):
                    jitters.append(cand)
                elif rng.uniform() < 0.05:
                    break
            for cand in jitters:
                tried += 1
                jr = in_A(ctx, da, cand, grid)
                if jr.member:
                    saved = True
                    break
            if not saved:
                witnesses.append({"z": list(z), "curve_test": res.witness,
                                  "jitters_tried": tried})
        return witnesses, {"inconclusive": inconclusive, "points": len(cands)}

    witnesses, meta, n, doubled = _with_doubling(runner, n_samples, seed)
    if witnesses:
        return CQEntry("so_zangwill", FAILS, witnesses[0], n, seed,
                       note=f"{len(witnesses)} witness(es) among {meta['points']} sampled points of B",
                       doubled=doubled)
    note = None
    if meta["inconclusive"]:
        note = f"{meta['inconclusive']} point(s) had unsampleable curves"
    return CQEntry("so_zangwill", NO_COUNTEREXAMPLE, None, n, seed, note=note, doubled=doubled)


def check_abadie(ctx: PointContext, n_samples: int = 64, seed: int = 0,
                 budget: TangentBudget | None = None, canonical=()) -> CQEntry:
    """Hunt for d in the linearizing cone that the tangent probe rejects and
    jitters do not save; such a d separates T(S, xbar) from L."""
    rows = [list(r) for r in ctx.active_grads()]
    interior = _interior_point([(r, 0.0) for r in rows], ctx.s, 1.0) if rows else None

    def runner(n):
        rng = np.random.default_rng(seed)
        dirs = sample_cone_directions(rows, ctx.s, n, rng, canonical=canonical,
                                      tol=ctx.tol.crit_tol)
        bud = budget if budget is not None else TangentBudget(seed=seed)
        witnesses = []
        inconclusive = 0
        for d in dirs:
            res = tangent_probe(ctx, d, bud)
            if res.member:
                continue
            if res.member is None:
                inconclusive += 1
                continue
            saved = False
            tried = 0
            for cand in _direction_jitters(d, interior, rng, rows, ctx.tol.crit_tol):
                tried += 1
                jr = tangent_probe(ctx, cand, bud)
                if jr.member:
                    saved = True
                    break
            if not saved:
                witnesses.append({"direction": list(d), "probe": res.witness,
                                  "jitters_tried": tried})
        return witnesses, {"inconclusive": inconclusive, "directions": len(dirs)}

    witnesses, meta, n, doubled = _with_doubling(runner, n_samples, seed)
    if witnesses:
        return CQEntry("abadie", FAILS, witnesses[0], n, seed,
                       note=f"{len(witnesses)} witness(es) among {meta['directions']} directions",
                       doubled=doubled)
    note = None
    if meta["inconclusive"]:
        note = f"{meta['inconclusive']} probe(s) were inconclusive"
    return CQEntry("abadie", NO_COUNTEREXAMPLE, None, n, seed, note=note, doubled=doubled)


def _sampled_tangent_set(ctx, dirs, extra, budget):
    accepted = []
    for d in list(dirs) + list(extra):
        res = tangent_probe(ctx, d, budget)
        if res.member:
            accepted.append(d)
    return accepted


def check_guignard(ctx: PointContext, n_samples: int = 64, seed: int = 0,
                   budget: TangentBudget | None = None, canonical=()) -> CQEntry:
    """Hunt for d in the linearizing cone, rejected by the tangent probe, that
    is not a nonnegative combination of probed tangent directions.

    The claim is relative to the sampled tangent set, so a candidate witness
    must survive doubling of that sample before it counts.
    """
    rows = [list(r) for r in ctx.active_grads()]
    bud = budget if budget is not None else TangentBudget(seed=seed)
    # the probe accepts directions up to its deepest search radius away from
    # the true tangent cone; cap combination weights so that slack cannot be
    # amplified past a quarter unit
    radius = math.sqrt(bud.t0 * bud.rho ** (bud.steps - 1))
    cap = 0.25 / radius

    def sphere(rng, count):
        out = []
        for _ in range(count):
            u = _snap_unit(rng.standard_normal(ctx.s))
            if u is not None:
                out.append(u)
        return out

    def runner(n):
        rng = np.random.default_rng(seed)
        dirs = sample_cone_directions(rows, ctx.s, n, rng, canonical=canonical,
                                      tol=ctx.tol.crit_tol)
        rng_sphere = np.random.default_rng([seed, 1])
        sampled_T = _sampled_tangent_set(ctx, dirs, sphere(rng_sphere, n), bud)
        big_T = None                     # doubled tangent sample, built on first use
        witnesses = []
        inconclusive = 0
        for d in dirs:
            res = tangent_probe(ctx, d, bud)
            if res.member:
                continue                 # probe-accepted directions are in the sample
            if res.member is None:
                inconclusive += 1
                continue
            rep = in_pseudotangent(sampled_T, d, ctx.tol.lp_tol, max_weight=cap)
            if rep.member:
                continue
            # stability: the miss must persist against twice the tangent sample
            if big_T is None:
                rng2 = np.random.default_rng(seed)
                dirs2 = sample_cone_directions(rows, ctx.s, 2 * n, rng2, canonical=canonical,
                                               tol=ctx.tol.crit_tol)
                big_T = _sampled_tangent_set(ctx, dirs2, sphere(np.random.default_rng([seed, 2]), 2 * n), bud)
            rep2 = in_pseudotangent(big_T, d, ctx.tol.lp_tol, max_weight=cap)
            if not rep2.member:
                witnesses.append({"direction": list(d), "probe": res.witness,
                                  "sample_size": len(sampled_T),
                                  "sample_size_doubled": len(big_T)})
        return witnesses, {"inconclusive": inconclusive, "directions": len(dirs)}

    witnesses, meta, n, doubled = _with_doubling(runner, n_samples, seed)
    if witnesses:
        return CQEntry("guignard", FAILS, witnesses[0], n, seed,
                       note=f"{len(witnesses)} witness(es) among {meta['directions']} directions",
                       doubled=doubled)
    note = None
    if meta["inconclusive"]:
        note = f"{meta['inconclusive']} probe(s) were inconclusive"
    return CQEntry("guignard", NO_COUNTEREXAMPLE, None, n, seed, note=note, doubled=doubled)


def run_cq_checks(ctx: PointContext, da: DirectionAnalysis | None = None,
                  n_samples: int = 64, seed: int = 0, grid: StepGrid = StepGrid(),
                  budget: TangentBudget | None = None, canonical=()) -> dict:
    """All point-level checks, plus the direction-level second-order Zangwill
    check when a direction analysis is supplied."""
    report = {
        "zangwill": check_zangwill(ctx, n_samples, seed, grid, canonical),
        "abadie": check_abadie(ctx, n_samples, seed, budget, canonical),
        "guignard": check_guignard(ctx, n_samples, seed, budget, canonical),
    }
    if da is not None:
        report["so_zangwill"] = check_so_zangwill(ctx, da, n_samples, seed, grid)
    return report
