import random

import numpy as np
import pytest

from conftest import load_fixture, make_problem
from sockkt.cones import (
    TangentBudget,
    Tolerances,
    analyze_direction,
    b_halfspaces,
    in_A,
    in_B,
    in_feasible_direction_cone,
    in_linearizing_cone,
    in_pseudotangent,
    point_context,
    sample_cone_directions,
    tangent_probe,
)
from sockkt.deriv import StepGrid
from sockkt.expr import evaluate


def ctx_da(name, d, tol=None):
    prob = load_fixture(name)
    ctx = point_context(prob, prob.points[0], tol)
    return ctx, analyze_direction(ctx, d)


def test_point_context_classifies_active_set():
    prob = load_fixture("parabola_min")
    ctx = point_context(prob, (0.0, 0.0))
    assert ctx.feasible and ctx.active_set == (0,)
    assert ctx.grad_f == ((0.0, 1.0),)
    assert ctx.grad_g == ((0.0, -1.0),)
    inside = point_context(prob, (0.5, 1.0))
    assert inside.feasible and inside.active_set == ()
    outside = point_context(prob, (2.0, 0.0))
    assert not outside.feasible


def test_dimension_mismatch_rejected():
    prob = load_fixture("halfline")
    with pytest.raises(ValueError):
        point_context(prob, (0.0, 0.0))
    ctx = point_context(prob, (0.0,))
    with pytest.raises(ValueError):
        analyze_direction(ctx, (1.0, 0.0))


def test_direction_analysis_on_the_parabola():
    ctx, da = ctx_da("parabola_min", (1.0, 0.0))
    assert da.critical
    assert da.J == (0,) and da.K == (0,)
    assert da.f_slopes == (0.0,)
    assert da.g_slopes == {0: 0.0}
    assert da.f_curv[0].converged and da.f_curv[0].value == pytest.approx(0.0, abs=1e-10)
    assert da.g_curv[0].converged and da.g_curv[0].value == pytest.approx(2.0, abs=1e-8)


def test_noncritical_direction_is_flagged_and_refused():
    ctx, da = ctx_da("halfline", (1.0,))
    assert not da.critical          # objective slope is +1
    with pytest.raises(ValueError):
        in_A(ctx, da, (0.0,))
    with pytest.raises(ValueError):
        in_B(ctx, da, (0.0,))


def test_cubic_constraint_separates_A_from_B():
    ctx, da = ctx_da("cubic_constraint", (1.0, 0.0))
    assert ctx.grad_g == ((0.0, 0.0),)
    assert da.g_curv[0].converged and da.g_curv[0].value == pytest.approx(0.0, abs=1e-8)
    z = (1.0, 0.0)
    assert in_B(ctx, da, z).member is True
    got = in_A(ctx, da, z)
    assert got.member is False
    w = got.witness
    assert w["constraint"] == 0 and w["value"] > 0.0
    # the curve x1(t)^3 is positive at every grid point, not just the witness
    g = ctx.problem.constraints[0]
    for t in StepGrid().points():
        pt = (t + 0.5 * t * t * z[0], 0.5 * t * t * z[1])
        assert evaluate(g, pt) > 0.0


def test_parabola_zero_direction_membership():
    ctx, da = ctx_da("parabola_min", (0.0, 0.0))
    assert in_A(ctx, da, (1.0, 0.1)).member is True
    assert in_A(ctx, da, (1.0, 0.01)).member is True
    assert in_A(ctx, da, (1.0, 0.0)).member is False


def test_b_halfspaces_shapes():
    ctx, da = ctx_da("parabola_min", (1.0, 0.0))
    rows = b_halfspaces(ctx, da)
    assert len(rows) == 1
    (a, rhs), = rows
    assert a == [0.0, -1.0]
    assert rhs == pytest.approx(-2.0, abs=1e-8)

    # at d = 0 every quotient is exactly zero, so the row is (0, 0)
    prob = make_problem(["x1"], ["spow(x1, 1.5)"], variables=("x1",))
    ctx2 = point_context(prob, (0.0,))
    da2 = analyze_direction(ctx2, (0.0,))
    assert b_halfspaces(ctx2, da2) == [([0.0], 0.0)]
    # along a real ray the curvature quotient does not settle: B is unavailable
    da3 = analyze_direction(ctx2, (-1.0,), StepGrid(steps=60))
    assert not da3.g_curv[0].converged
    assert b_halfspaces(ctx2, da3) is None
    assert in_B(ctx2, da3, (0.0,)).member is None


def test_A_subset_B_on_random_samples(fixture_problems):
    rng = random.Random(11)
    checked = 0
    for name, prob in fixture_problems.items():
        ctx = point_context(prob, prob.points[0])
        rows = [list(r) for r in ctx.grad_f] + [list(ctx.grad_g[i]) for i in ctx.active_set]
        dirs = sample_cone_directions(rows, ctx.s, 6, np.random.default_rng(3))
        for d in list(dirs) + [tuple([0.0] * ctx.s)]:
            da = analyze_direction(ctx, d)
            if not da.critical:
                continue
            for _ in range(4):
                z = tuple(rng.uniform(-2, 2) for _ in range(ctx.s))
                a = in_A(ctx, da, z)
                b = in_B(ctx, da, z)
                if a.member is None or b.member is None:
                    continue
                checked += 1
                if a.member:
                    assert b.member, (name, d, z)
    assert checked >= 60


def test_zero_direction_reduces_to_first_order_cones(fixture_problems):
    rng = random.Random(23)
    for name, prob in fixture_problems.items():
        ctx = point_context(prob, prob.points[0])
        da0 = analyze_direction(ctx, tuple([0.0] * ctx.s))
        for _ in range(6):
            z = tuple(rng.uniform(-1.5, 1.5) for _ in range(ctx.s))
            assert in_A(ctx, da0, z).member == in_feasible_direction_cone(ctx, z).member, name
            assert in_B(ctx, da0, z).member == in_linearizing_cone(ctx, z).member, name


def test_membership_is_invariant_under_curve_reparametrization():
    # d -> c d with z -> c^2 z traces the same curve in a different clock
    ctx, da1 = ctx_da("parabola_min", (1.0, 0.0))
    da2 = analyze_direction(ctx, (2.0, 0.0))
    for z in [(0.5, 3.0), (0.0, 1.9), (1.0, 2.1), (-2.0, 0.3)]:
        z4 = tuple(4.0 * v for v in z)
        assert in_A(ctx, da1, z).member == in_A(ctx, da2, z4).member
        assert in_B(ctx, da1, z).member == in_B(ctx, da2, z4).member


def test_linearizing_cone_on_the_quadrant():
    prob = load_fixture("quadrant")
    ctx = point_context(prob, (0.0, 0.0))
    assert in_linearizing_cone(ctx, (1.0, 1.0)).member is True
    out = in_linearizing_cone(ctx, (-1.0, 0.0))
    assert out.member is False and out.witness["constraint"] == 0
    # feasible directions are only the two axes
    assert in_feasible_direction_cone(ctx, (1.0, 0.0)).member is True
    assert in_feasible_direction_cone(ctx, (0.0, 1.0)).member is True
    assert in_feasible_direction_cone(ctx, (1.0, 1.0)).member is False


def test_tangent_probe_on_parabola_boundary():
    prob = load_fixture("parabola_min")
    ctx = point_context(prob, (0.0, 0.0))
    assert tangent_probe(ctx, (1.0, 0.0)).member is True
    assert tangent_probe(ctx, (0.0, 1.0)).member is True
    assert tangent_probe(ctx, (0.0, -1.0)).member is False


def test_tangent_probe_is_deterministic():
    prob = load_fixture("quadrant")
    ctx = point_context(prob, (0.0, 0.0))
    budget = TangentBudget(seed=4)
    a = tangent_probe(ctx, (0.6, 0.8), budget)
    b = tangent_probe(ctx, (0.6, 0.8), budget)
    assert a == b


def test_pseudotangent_combination_and_weight_cap():
    axes = [(1.0, 0.0), (0.0, 1.0)]
    diag = (0.7071067811865476, 0.7071067811865476)
    got = in_pseudotangent(axes, diag)
    assert got.member is True
    coeffs = got.witness["coefficients"]
    assert all(c >= -1e-12 for c in coeffs)
    # reconstruct d from the certified combination
    rec = [sum(c * u[k] for c, u in zip(coeffs, axes)) for k in range(2)]
    assert rec == pytest.approx(list(diag), abs=1e-9)

    # nearly antipodal samples can only reach d through near-cancelling weights
    thin = [(1.0, 0.001), (-1.0, 0.001)]
    capped = in_pseudotangent(thin, (0.0, 1.0), max_weight=10.0)
    assert capped.member is False
    assert capped.witness["weight_sum"] > 10.0
    uncapped = in_pseudotangent(thin, (0.0, 1.0))
    assert uncapped.member is True


def test_sample_cone_directions_respects_rows():
    rows = [[0.0, 1.0]]          # d2 <= 0
    dirs = sample_cone_directions(rows, 2, 12, np.random.default_rng(0),
                                  canonical=((1.0, 0.0),))
    assert (1.0, 0.0) in dirs
    for d in dirs:
        assert sum(a * b for a, b in zip(rows[0], d)) <= 1e-9
        assert sum(v * v for v in d) == pytest.approx(1.0, abs=1e-9)
    again = sample_cone_directions(rows, 2, 12, np.random.default_rng(0),
                                   canonical=((1.0, 0.0),))
    assert dirs == again
