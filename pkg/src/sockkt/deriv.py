"""Second-order directional derivatives by the limit definition.

For h with gradient grad_h, the quantity estimated is

    h''(x, u) = lim_{t -> 0+} 2/t^2 * [h(x + t u) - h(x) - t * grad_h(x).u]

sampled on a geometric grid t_k = t0 * rho^k.  curve_second_deriv applies the
same quotient to the curve t -> h(x + t d + 0.5 t^2 z), whose value at a point
where grad_h(x).d = 0 equals grad_h(x).z + h''(x, d) when both sides exist.

No finite-difference formula for h'' is used anywhere: the quotient is the
definition itself, and a separate classifier decides whether the sampled
sequence converged, diverged, oscillates, or is inconclusive.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .expr import evaluate

# quotient magnitude beyond which a monotone tail is declared divergent
DIVERGE_LIMIT = 1e8
# numerators below NOISE_FACTOR * eps * scale are cancellation noise, except
# an exact zero, which is reliable and stays in
NOISE_FACTOR = 1e3
_EPS = sys.float_info.epsilon

CONVERGED = "converged"
DIVERGED = "diverged"
OSCILLATING = "oscillating"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class StepGrid:
    """Geometric step grid t_k = t0 * rho^k, k = 0..steps-1."""

    t0: float = 1e-2
    rho: float = 0.5
    steps: int = 24
    tol_rel: float = 1e-6
    richardson: bool = False

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ValueError("rho must lie in (0, 1)")
        if self.t0 <= 0.0:
            raise ValueError("t0 must be positive")
        if self.steps < 3:
            raise ValueError("need at least 3 steps")

    def points(self) -> list[float]:
        return [self.t0 * self.rho**k for k in range(self.steps)]


@dataclass(frozen=True)
class CurveProbe:
    """The curve x + t d + 0.5 t^2 z probed from t = 0 on the right."""

    x: tuple[float, ...]
    d: tuple[float, ...]
    z: tuple[float, ...]


@dataclass(frozen=True)
class SecondDirDeriv:
    """Outcome of a quotient limit.

    trace holds the (t_k, q_k) pairs the verdict was judged on: steps whose
    numerator fell below the noise floor are omitted, and in Richardson mode
    the q_k are the extrapolated values, cut at the accepted window.
    """

    value: float | None
    status: str
    trace: tuple[tuple[float, float], ...]
    note: str | None = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def _quotient_rows(sample, f0: float, slope: float, grid: StepGrid):
    """(t, q, included) per step; sample(t) evaluates h along the probe path."""
    rows = []
    for t in grid.points():
        ft = sample(t)
        numer = ft - f0 - t * slope
        scale = max(abs(f0), abs(ft), abs(t * slope))
        noise = numer != 0.0 and abs(numer) < NOISE_FACTOR * _EPS * scale
        rows.append((t, 2.0 * numer / (t * t), not noise))
    return rows


def _window_agrees(qs, tol_rel: float) -> bool:
    ref = max(1.0, abs(qs[-1]))
    return all(
        abs(qs[i] - qs[j]) <= tol_rel * ref
        for i in range(len(qs))
        for j in range(i + 1, len(qs))
    )


def _tail_classify(pairs, tol_rel: float) -> SecondDirDeriv:
    """Judge a (t, q) series on its tail: last-3 agreement wins, then a
    strictly growing last-5 beyond DIVERGE_LIMIT, then sign oscillation."""
    trace = tuple(pairs)
    if len(pairs) >= 3 and _window_agrees([q for _, q in pairs[-3:]], tol_rel):
        return SecondDirDeriv(pairs[-1][1], CONVERGED, trace)
    if len(pairs) >= 5:
        mags = [abs(q) for _, q in pairs[-5:]]
        if all(a < b for a, b in zip(mags, mags[1:])) and mags[-1] > DIVERGE_LIMIT:
            return SecondDirDeriv(None, DIVERGED, trace)
    w = [q for _, q in pairs[-min(8, len(pairs)):]]
    if len(w) >= 4:
        flips = sum(1 for a, b in zip(w, w[1:]) if a * b < 0.0)
        half = len(w) // 2
        head, tail = max(map(abs, w[:half])), max(map(abs, w[half:]))
        if flips >= 2 and tail >= 0.5 * head and w[-1] != 0.0:
            return SecondDirDeriv(None, OSCILLATING, trace)
    return SecondDirDeriv(None, INCONCLUSIVE, trace)


def _classify_plain(rows, tol_rel: float) -> SecondDirDeriv:
    pairs = [(t, q) for t, q, inc in rows if inc]
    if not pairs:
        return SecondDirDeriv(None, INCONCLUSIVE, ())
    return _tail_classify(pairs, tol_rel)


def _classify_richardson(rows, rho: float, tol_rel: float) -> SecondDirDeriv:
    """Two-stage extrapolation; exact for quotient series quadratic in t.

    q(t) = c0 + c1 t + c2 t^2 gives R1_k = (q_k - rho q_{k-1})/(1 - rho) with
    the linear term cancelled, and R2 removes the quadratic one.  The first
    window of three agreeing extrapolants is accepted and the trace ends
    there; a later noisy tail cannot spoil an already settled limit.
    """
    q = [r[1] for r in rows]
    ok = [r[2] for r in rows]
    t = [r[0] for r in rows]
    r1 = {}
    for k in range(1, len(rows)):
        if ok[k] and ok[k - 1]:
            r1[k] = (q[k] - rho * q[k - 1]) / (1.0 - rho)
    pairs = []
    for k in range(2, len(rows)):
        if k in r1 and (k - 1) in r1:
            pairs.append((t[k], (r1[k] - rho * rho * r1[k - 1]) / (1.0 - rho * rho)))
    for end in range(3, len(pairs) + 1):
        window = [v for _, v in pairs[end - 3 : end]]
        if _window_agrees(window, tol_rel):
            # the largest-t entry of the window: 1/t^2 cancellation noise is
            # smallest there, and the agreement test already bounds the spread
            return SecondDirDeriv(window[0], CONVERGED, tuple(pairs[:end]))
    if not pairs:
        return SecondDirDeriv(None, INCONCLUSIVE, ())
    return _tail_classify(pairs, tol_rel)


def classify_quotients(rows, grid: StepGrid) -> SecondDirDeriv:
    """Classify a sampled quotient sequence of (t, q, included) triples."""
    if grid.richardson:
        return _classify_richardson(rows, grid.rho, grid.tol_rel)
    return _classify_plain(rows, grid.tol_rel)


def second_dir_deriv(h, grad_h, x, u, grid: StepGrid = StepGrid()) -> SecondDirDeriv:
    """Estimate h''(x, u) from the defining quotient on the grid.

    h is an expression, grad_h its symbolic gradient.  Evaluation errors along
    the path (domain violations, overflow) propagate to the caller.
    """
    xs = tuple(float(v) for v in x)
    us = tuple(float(v) for v in u)
    f0 = evaluate(h, xs)
    slope = math.fsum(evaluate(gk, xs) * uk for gk, uk in zip(grad_h, us))

    def sample(t):
        return evaluate(h, tuple(xv + t * uv for xv, uv in zip(xs, us)))

    return classify_quotients(_quotient_rows(sample, f0, slope, grid), grid)


def curve_second_deriv(probe: CurveProbe, h, grad_h, grid: StepGrid = StepGrid()) -> SecondDirDeriv:
    """Second derivative at t = 0+ of t -> h(x + t d + 0.5 t^2 z).

    With grad_h(x).d = 0 and h''(x, d) existing, the limit equals
    grad_h(x).z + h''(x, d); the quotient needs no such assumption.
    """
    xs = tuple(float(v) for v in probe.x)
    ds = tuple(float(v) for v in probe.d)
    zs = tuple(float(v) for v in probe.z)
    f0 = evaluate(h, xs)
    slope = math.fsum(evaluate(gk, xs) * dk for gk, dk in zip(grad_h, ds))

    def sample(t):
        pt = tuple(xv + t * dv + 0.5 * t * t * zv for xv, dv, zv in zip(xs, ds, zs))
        return evaluate(h, pt)

    return classify_quotients(_quotient_rows(sample, f0, slope, grid), grid)
