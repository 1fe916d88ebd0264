"""Dense two-phase simplex with Bland's rule, plus a homogenization wrapper
that decides solvability of mixed strict/weak linear inequality systems.

Small and deterministic on purpose: every certificate downstream leans on
these vertices, so the pivot order must not depend on dict order, threading,
or library version.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LP_TOL = 1e-9


class LPError(Exception):
    """Numeric breakdown inside the solver (pivot below tolerance, or a
    homogenized optimum off its two admissible values)."""


@dataclass
class LinearProgram:
    sense: str                                       # "min" | "max"
    c: list
    rows: list                                       # (coeffs, "<="|"="|">=", rhs)
    bounds: list                                     # "free" | "nonneg" per variable

    def __post_init__(self):
        n = len(self.c)
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if len(self.bounds) != n:
            raise ValueError("bounds length must match c")
        for b in self.bounds:
            if b not in ("free", "nonneg"):
                raise ValueError(f"unknown bound kind {b!r}")
        for coeffs, rel, _ in self.rows:
            if len(coeffs) != n:
                raise ValueError("row width must match c")
            if rel not in ("<=", "=", ">="):
                raise ValueError(f"unknown relation {rel!r}")


@dataclass
class LPOutcome:
    status: str                                      # "optimal" | "infeasible" | "unbounded"
    value: float | None = None
    x: list | None = None
    ray: list | None = None
    pivots: int = 0


def _run_simplex(T, basis, cost, tol, pivots, trace, phase):
    """Iterate on tableau T (m x (n+1), rhs last) until optimal or unbounded.

    Returns (status, entering_or_None, pivots).  cost is the reduced cost row
    with -objective in its last slot; both are mutated in place.
    """
    m, w = T.shape
    n = w - 1
    while True:
        enter = -1
        for j in range(n):                           # Bland: first improving column
            if cost[j] < -tol:
                enter = j
                break
        if enter < 0:
            return "optimal", None, pivots
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > tol:
                ratio = T[i, -1] / a
                if ratio < best - tol or (abs(ratio - best) <= tol and (leave < 0 or basis[i] < basis[leave])):
                    best = ratio
                    leave = i
        if leave < 0:
            return "unbounded", enter, pivots
        p = T[leave, enter]
        if abs(p) < tol:
            raise LPError(f"pivot {p!r} below tolerance at pivot step {pivots}")
        T[leave] /= p
        for i in range(m):
            if i != leave and T[i, enter] != 0.0:
                T[i] -= T[i, enter] * T[leave]
        if cost[enter] != 0.0:
            cost -= cost[enter] * T[leave]
        if trace is not None:
            trace.append({"phase": phase, "pivot": pivots, "entering": int(enter),
                          "leaving": int(basis[leave])})
        basis[leave] = enter
        pivots += 1


def solve(lp: LinearProgram, tol: float = LP_TOL, trace: list | None = None) -> LPOutcome:
    """Two-phase dense simplex.  Free variables are split into differences of
    nonnegatives; rows are normalized to nonnegative right-hand sides."""
    n = len(lp.c)
    # column layout: variable columns first (split pairs for free vars),
    # then slack/surplus columns, then artificials
    colmap = []
    ncols = 0
    for b in lp.bounds:
        if b == "free":
            colmap.append((ncols, ncols + 1))
            ncols += 2
        else:
            colmap.append((ncols, None))
            ncols += 1

    m = len(lp.rows)
    rows_std = []
    for coeffs, rel, rhs in lp.rows:
        a = [float(v) for v in coeffs]
        b = float(rhs)
        if b < 0.0:
            a = [-v for v in a]
            b = -b
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows_std.append((a, rel, b))

    nslack = sum(1 for _, rel, _ in rows_std if rel != "=")
    nart = sum(1 for _, rel, _ in rows_std if rel != "<=")
    width = ncols + nslack + nart
    T = np.zeros((m, width + 1))
    basis = [-1] * m
    art_cols = []
    sl = ncols
    ar = ncols + nslack
    for i, (a, rel, b) in enumerate(rows_std):
        for j, v in enumerate(a):
            pos, negc = colmap[j]
            T[i, pos] += v
            if negc is not None:
                T[i, negc] -= v
        T[i, -1] = b
        if rel == "<=":
            T[i, sl] = 1.0
            basis[i] = sl
            sl += 1
        elif rel == ">=":
            T[i, sl] = -1.0
            sl += 1
        if rel != "<=":
            T[i, ar] = 1.0
            basis[i] = ar
            art_cols.append(ar)
            ar += 1

    pivots = 0

    # phase 1: drive the artificial variables to zero
    if art_cols:
        cost1 = np.zeros(width + 1)
        for j in art_cols:
            cost1[j] = 1.0
        for i, bj in enumerate(basis):
            if cost1[bj] != 0.0:
                cost1 -= cost1[bj] * T[i]
        status, _, pivots = _run_simplex(T, basis, cost1, tol, pivots, trace, 1)
        if status != "optimal":
            raise LPError("phase 1 reported unbounded; artificial objective is bounded below")
        if -cost1[-1] > tol:
            return LPOutcome("infeasible", pivots=pivots)
        art_set = set(art_cols)
        # pivot lingering artificials out of the basis; all-zero rows are redundant
        drop_rows = []
        for i in range(m):
            if basis[i] in art_set:
                pivot_col = -1
                for j in range(ncols + nslack):
                    if abs(T[i, j]) > tol:
                        pivot_col = j
                        break
                if pivot_col < 0:
                    drop_rows.append(i)
                    continue
                p = T[i, pivot_col]
                T[i] /= p
                for k in range(m):
                    if k != i and T[k, pivot_col] != 0.0:
                        T[k] -= T[k, pivot_col] * T[i]
                basis[i] = pivot_col
        if drop_rows:
            keep = [i for i in range(m) if i not in set(drop_rows)]
            T = T[keep]
            basis = [basis[i] for i in keep]
            m = len(basis)
        T = np.delete(T, art_cols, axis=1)
        width -= len(art_cols)

    # phase 2 on the true objective
    sign = 1.0 if lp.sense == "min" else -1.0
    cost2 = np.zeros(width + 1)
    for j, cv in enumerate(lp.c):
        pos, negc = colmap[j]
        cost2[pos] += sign * float(cv)
        if negc is not None:
            cost2[negc] -= sign * float(cv)
    for i, bj in enumerate(basis):
        if cost2[bj] != 0.0:
            cost2 -= cost2[bj] * T[i]
    status, enter, pivots = _run_simplex(T, basis, cost2, tol, pivots, trace, 2)

    def to_original(std_vec):
        out = []
        for pos, negc in colmap:
            v = std_vec[pos]
            if negc is not None:
                v -= std_vec[negc]
            out.append(float(v))
        return out

    if status == "unbounded":
        ray_std = np.zeros(width)
        ray_std[enter] = 1.0
        for i, bj in enumerate(basis):
            ray_std[bj] = -T[i, enter]
        return LPOutcome("unbounded", ray=to_original(ray_std), pivots=pivots)

    x_std = np.zeros(width)
    for i, bj in enumerate(basis):
        x_std[bj] = T[i, -1]
    x = to_original(x_std)
    value = float(sum(cv * xv for cv, xv in zip(lp.c, x)))
    return LPOutcome("optimal", value=value, x=x, pivots=pivots)


@dataclass
class StrictSystemOutcome:
    solvable: bool
    witness: list | None
    sigma: float


def strict_system_solvable(rows_strict, rows_weak, strict_vars=(),
                           tol: float = LP_TOL, trace: list | None = None) -> StrictSystemOutcome:
    """Decide whether some w satisfies a.w < 0 for every strict row, a.w <= 0
    for every weak row, and w_i > 0 for each designated index.

    Homogenization: maximize sigma subject to a.w + sigma <= 0 on strict rows,
    a.w <= 0 on weak rows, -w_i + sigma <= 0 on designated variables, and
    sigma <= 1.  The system is positively homogeneous, so the optimum is 0
    (unsolvable) or 1 (solvable); anything in between is a numerics failure
    and raises rather than guessing.
    """
    rows_strict = [list(map(float, r)) for r in rows_strict]
    rows_weak = [list(map(float, r)) for r in rows_weak]
    if not rows_strict and not rows_weak:
        raise ValueError("no rows given")
    if not rows_strict and not strict_vars:
        raise ValueError("system has no strict part; solvability is trivial")
    width = len(rows_strict[0]) if rows_strict else len(rows_weak[0])
    for r in rows_strict + rows_weak:
        if len(r) != width:
            raise ValueError("inconsistent row widths")
    for i in strict_vars:
        if not (0 <= i < width):
            raise ValueError(f"designated index {i} out of range")

    sig = width
    rows = []
    for a in rows_strict:
        rows.append((a + [1.0], "<=", 0.0))
    for a in rows_weak:
        rows.append((a + [0.0], "<=", 0.0))
    for i in strict_vars:
        r = [0.0] * (width + 1)
        r[i] = -1.0
        r[sig] = 1.0
        rows.append((r, "<=", 0.0))
    cap = [0.0] * (width + 1)
    cap[sig] = 1.0
    rows.append((cap, "<=", 1.0))

    c = [0.0] * width + [-1.0]
    out = solve(LinearProgram("min", c, rows, ["free"] * (width + 1)), tol=tol, trace=trace)
    if out.status != "optimal":
        raise LPError(f"homogenized system solve ended {out.status}; it is feasible and capped")
    sigma = -out.value
    if sigma >= 1.0 - tol:
        return StrictSystemOutcome(True, out.x[:width], sigma)
    if sigma <= tol:
        return StrictSystemOutcome(False, None, sigma)
    raise LPError(f"homogenized optimum sigma={sigma!r} is neither 0 nor 1; "
                  "the instance is too ill-conditioned to certify")
