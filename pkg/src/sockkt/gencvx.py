"""Sampling probes for generalized convexity.

Like the constraint-qualification checks, these are falsifiers: a "fails"
verdict carries a witness that re-verifies by evaluating the defining
implication directly (within the stated margin), and the best a clean run
can claim is that no counterexample turned up among the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import SUFFIX_MIN, _dot, _suffix_ok
from .deriv import CurveProbe, StepGrid, curve_second_deriv, second_dir_deriv
from .expr import EvalError, evaluate

NO_COUNTEREXAMPLE = "no-counterexample-found"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"

MARGIN = 1e-8
SLOPE_TOL = 1e-9


@dataclass(frozen=True)
class ConvexityVerdict:
    property: str
    verdict: str
    witness: dict | None
    samples: int
    seed: int | None
    note: str | None = None


def _sample_box(box, n, rng):
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    return lo + rng.uniform(size=(n, len(box))) * (hi - lo)


def probe_pseudoconvex(h, grad, x, box, n: int = 256, seed: int = 0,
                       margin: float = MARGIN, tol: float = SLOPE_TOL) -> ConvexityVerdict:
    """Hunt for y with h(y) < h(x) but a nonnegative slope from x toward y."""
    xs = tuple(float(v) for v in x)
    hx = evaluate(h, xs)
    gx = tuple(evaluate(gk, xs) for gk in grad)
    rng = np.random.default_rng(seed)
    for y in _sample_box(box, n, rng):
        ys = tuple(float(v) for v in y)
        if evaluate(h, ys) >= hx - margin:
            continue
        dot = _dot(gx, [a - b for a, b in zip(ys, xs)])
        if dot >= -tol:
            return ConvexityVerdict("pseudoconvex", FAILS,
                                    {"y": list(ys), "h_y": evaluate(h, ys), "h_x": hx,
                                     "slope": dot}, n, seed)
    return ConvexityVerdict("pseudoconvex", NO_COUNTEREXAMPLE, None, n, seed)


def probe_so_pseudoconvex(h, grad, x, box, n: int = 256, seed: int = 0,
                          grid: StepGrid = StepGrid(), margin: float = MARGIN,
                          tol: float = SLOPE_TOL) -> ConvexityVerdict:
    """Hunt for y with h(y) < h(x) and either a positive slope toward y, or a
    vanishing slope whose second directional derivative fails to be negative.

    Samples whose quotient limit does not converge are excluded rather than
    counted against the function.
    """
    xs = tuple(float(v) for v in x)
    hx = evaluate(h, xs)
    gx = tuple(evaluate(gk, xs) for gk in grad)
    rng = np.random.default_rng(seed)
    excluded = 0
    for y in _sample_box(box, n, rng):
        ys = tuple(float(v) for v in y)
        if evaluate(h, ys) >= hx - margin:
            continue
        u = [a - b for a, b in zip(ys, xs)]
        dot = _dot(gx, u)
        if dot > tol:
            return ConvexityVerdict("so_pseudoconvex", FAILS,
                                    {"y": list(ys), "h_y": evaluate(h, ys), "h_x": hx,
                                     "slope": dot}, n, seed)
        if dot < -tol:
            continue
        sd = second_dir_deriv(h, grad, xs, u, grid)
        if not sd.converged:
            excluded += 1
            continue
        if sd.value >= -margin:
            return ConvexityVerdict("so_pseudoconvex", FAILS,
                                    {"y": list(ys), "h_y": evaluate(h, ys), "h_x": hx,
                                     "slope": dot, "curvature": sd.value}, n, seed)
    note = f"{excluded} sample(s) excluded: quotient limit did not converge" if excluded else None
    return ConvexityVerdict("so_pseudoconvex", NO_COUNTEREXAMPLE, None, n, seed, note=note)


def probe_solpc_right(probe: CurveProbe, g, grad, grid: StepGrid = StepGrid(),
                      seed: int | None = None, margin: float = MARGIN,
                      tol: float = SLOPE_TOL) -> ConvexityVerdict:
    """Test the curve phi(t) = g(xbar + t d + 0.5 t^2 z) for second-order
    local pseudoconcavity at t = 0 on the right: a tail of phi(t) > phi(0)
    must force phi'(0) >= 0, and additionally phi''(0,1) > 0 when the slope
    vanishes.  seed is accepted for interface symmetry; the probe is a
    deterministic grid scan."""
    xs = tuple(float(v) for v in probe.x)
    phi0 = evaluate(g, xs)
    ts = grid.points()
    vals = []
    for t in ts:
        pt = tuple(x + t * dv + 0.5 * t * t * zv for x, dv, zv in zip(xs, probe.d, probe.z))
        try:
            vals.append(evaluate(g, pt))
        except EvalError:
            vals.append(None)
    run = _suffix_ok(vals, lambda v: v > phi0)
    n = len(ts)
    if run < SUFFIX_MIN:
        return ConvexityVerdict("solpc_right", NO_COUNTEREXAMPLE, None, n, seed,
                                note="no tail with phi(t) > phi(0); the premise is empty")
    tail = [(t, v - phi0) for t, v in zip(ts[n - run:], vals[n - run:])]
    slope = _dot(tuple(evaluate(gk, xs) for gk in grad), probe.d)
    if slope < -tol:
        return ConvexityVerdict("solpc_right", FAILS,
                                {"tail": tail[-SUFFIX_MIN:], "slope": slope}, n, seed)
    if slope <= tol:
        sd = curve_second_deriv(probe, g, grad, grid)
        if not sd.converged:
            return ConvexityVerdict("solpc_right", INCONCLUSIVE, None, n, seed,
                                    note=f"phi''(0,1) status: {sd.status}")
        if sd.value <= margin:
            return ConvexityVerdict("solpc_right", FAILS,
                                    {"tail": tail[-SUFFIX_MIN:], "slope": slope,
                                     "curvature": sd.value}, n, seed)
    return ConvexityVerdict("solpc_right", NO_COUNTEREXAMPLE, None, n, seed)
