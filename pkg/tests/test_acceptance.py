"""End-to-end acceptance suite.

One test per shipped guarantee, at the stated tolerance, so `pytest -v`
prints a single pass/fail line for each.  Random suites use fixed seeds;
oracle values come from hand derivations or an independent solver (scipy),
never from the code under test.
"""

import json
import random

import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import (FIXTURE_DIR, FIXTURE_NAMES, load_fixture,
                      synthetic_instance)
from sockkt.cli import main
from sockkt.cones import (analyze_direction, b_halfspaces, in_A, in_B,
                          point_context, sample_cone_directions)
from sockkt.cq import (FAILS, NO_COUNTEREXAMPLE, check_so_zangwill,
                       run_cq_checks)
from sockkt.deriv import (DIVERGED, CurveProbe, StepGrid, curve_second_deriv,
                          second_dir_deriv)
from sockkt.expr import evaluate, gradient, parse
from sockkt.kkt import (CERTIFIED, REFUTED, UNDECIDED, certify_direction,
                        find_multipliers, first_order_kkt, primal_condition,
                        system_63_solvable, system_64_solvable)
from test_deriv import RICH, analytic_second_dir, poly_instance


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def fixture_analysis(name, d=None, grid=StepGrid()):
    prob = load_fixture(name)
    ctx = point_context(prob, prob.points[0])
    if d is None:
        d = prob.directions[0][0]
    return prob, ctx, analyze_direction(ctx, d, grid)


def test_criterion_01_cubic_gap_between_curve_set_and_its_linearization():
    # g = x1^3 at the origin, d = (1,0): the linearized set B is everything
    # while the true curve set A is empty, and the diagnostic must say so
    prob, ctx, da = fixture_analysis("cubic_constraint")
    grid = StepGrid()
    assert ctx.grad_g[0] == pytest.approx((0.0, 0.0), abs=1e-8)
    sd = da.g_curv[0]
    assert sd.converged and abs(sd.value) <= 1e-8

    z = (1.0, 0.0)
    assert in_B(ctx, da, z).member is True

    res = in_A(ctx, da, z, grid)
    assert res.member is False
    assert res.witness["value"] > 0.0
    g = prob.constraints[0]
    for t in grid.points():
        pt = tuple(x + t * dv + 0.5 * t * t * zv
                   for x, dv, zv in zip(ctx.xbar, da.d, z))
        assert evaluate(g, pt) > 0.0, t

    entry = check_so_zangwill(ctx, da, n_samples=32, seed=0)
    assert entry.verdict == FAILS
    assert entry.witness is not None


def test_criterion_02_parabola_curve_set_matches_its_linearization():
    # g = x1^2 - x2 at the origin, d = 0: membership in A is decided by the
    # sign of z2, exactly as the half-space description predicts
    _, ctx, da = fixture_analysis("parabola_min", d=(0.0, 0.0))
    assert in_A(ctx, da, (1.0, 0.1)).member is True
    assert in_A(ctx, da, (1.0, 0.01)).member is True
    assert in_A(ctx, da, (1.0, 0.0)).member is False
    entry = check_so_zangwill(ctx, da, n_samples=32, seed=0)
    assert entry.verdict == NO_COUNTEREXAMPLE


def test_criterion_03_parabola_certificate_with_unit_multipliers():
    # min x2 s.t. x1^2 - x2 <= 0 at the origin along d = (1,0)
    _, ctx, da = fixture_analysis("parabola_min")
    cert = find_multipliers(ctx, da)
    assert cert is not None
    assert cert.lam == pytest.approx((1.0,), abs=1e-8)
    assert cert.mu == pytest.approx((1.0,), abs=1e-8)
    assert cert.curvature == pytest.approx(2.0, abs=1e-6)
    ok63, _ = system_63_solvable(ctx, da)
    ok64, _ = system_64_solvable(ctx)
    assert not ok63 and not ok64
    cq = run_cq_checks(ctx, da, n_samples=32, seed=0)
    assert certify_direction(ctx, da, cq).verdict == CERTIFIED


def test_criterion_04_concave_objective_refuted_with_replayable_witness():
    # min x2 - x1^2 s.t. -x2 <= 0 at the origin along d = (1,0)
    _, ctx, da = fixture_analysis("concave_objective")
    assert find_multipliers(ctx, da) is None
    status, violation, _ = primal_condition(ctx, da)
    assert status == "violated"
    z = violation.witness["z"]
    for j in da.J:
        assert dot(ctx.grad_f[j], z) + da.f_curv[j].value < 0.0
    for i in da.K:
        assert dot(ctx.grad_g[i], z) + da.g_curv[i].value <= 1e-9
    cq = run_cq_checks(ctx, da, n_samples=32, seed=0)
    assert certify_direction(ctx, da, cq).verdict == REFUTED


def scipy_alternative_lp_infeasible(ctx, da):
    """Independent check of the alternative system: find (u, v), v >= 0, with
    grad_f_j.u + v*c_f_j <= -1 for every objective and grad_g_i.u + v*c_g_i <= 0
    for every active constraint."""
    s = len(ctx.xbar)
    rows, rhs = [], []
    for j in range(len(ctx.grad_f)):
        rows.append(list(ctx.grad_f[j]) + [da.f_curv[j].value])
        rhs.append(-1.0)
    for i in ctx.active_set:
        rows.append(list(ctx.grad_g[i]) + [da.g_curv[i].value])
        rhs.append(0.0)
    bounds = [(None, None)] * s + [(0.0, None)]
    out = linprog(c=[0.0] * (s + 1), A_ub=rows, b_ub=rhs, bounds=bounds,
                  method="highs")
    assert out.status in (0, 2)
    return out.status == 2


def test_criterion_05_multipliers_exist_iff_both_dual_systems_fail():
    rng = random.Random(42)
    found = absent = 0
    for _ in range(300):
        ctx, da = synthetic_instance(rng)
        cert = find_multipliers(ctx, da)
        ok63, _ = system_63_solvable(ctx, da)
        ok64, _ = system_64_solvable(ctx)
        assert (cert is not None) == (not ok63 and not ok64)
        assert (cert is not None) == scipy_alternative_lp_infeasible(ctx, da)
        if cert is not None:
            found += 1
        else:
            absent += 1
    assert found >= 30 and absent >= 30


def test_criterion_06_curve_set_membership_implies_linearized_membership():
    rng = np.random.default_rng(100)
    counted = 0
    for name in FIXTURE_NAMES:
        prob = load_fixture(name)
        ctx = point_context(prob, prob.points[0])
        s = prob.s
        rows = [list(r) for r in ctx.grad_f] + [list(r) for r in ctx.active_grads()]
        dirs = list(prob.directions[0]) + [tuple(0.0 for _ in range(s))]
        dirs += sample_cone_directions(rows, s, 4, rng, tol=ctx.tol.crit_tol)
        for d in dirs:
            da = analyze_direction(ctx, d)
            if not da.critical:
                continue
            for _ in range(7):
                z = tuple(rng.uniform(-2.0, 2.0, s))
                a = in_A(ctx, da, z)
                b = in_B(ctx, da, z)
                if a.member is None or b.member is None:
                    continue
                counted += 1
                assert not (a.member and not b.member), (name, d, z)
    assert counted >= 200


def test_criterion_07_curve_second_derivative_splits_into_slope_plus_curvature():
    rng = np.random.default_rng(7)
    grid = StepGrid()
    worst = 0.0
    counted = 0
    for name in FIXTURE_NAMES:
        prob = load_fixture(name)
        if prob.m == 0:
            continue
        ctx = point_context(prob, prob.points[0])
        s = prob.s
        rows = [list(r) for r in ctx.grad_f] + [list(r) for r in ctx.active_grads()]
        dirs = list(prob.directions[0]) + [tuple(0.0 for _ in range(s))]
        dirs += sample_cone_directions(rows, s, 2, rng, tol=ctx.tol.crit_tol)
        for d in dirs:
            for i in range(prob.m):
                g = prob.constraints[i]
                grads = prob.constraint_gradients[i]
                gx = tuple(evaluate(gk, ctx.xbar) for gk in grads)
                if abs(dot(gx, d)) > 1e-9:
                    continue
                base = second_dir_deriv(g, grads, ctx.xbar, d, grid)
                if not base.converged:
                    continue
                for _ in range(3):
                    z = tuple(rng.uniform(-2.0, 2.0, s))
                    phi = curve_second_deriv(CurveProbe(ctx.xbar, d, z), g, grads, grid)
                    if not phi.converged:
                        continue
                    counted += 1
                    worst = max(worst, abs(phi.value - (dot(gx, z) + base.value)))
    assert counted >= 50
    assert worst <= 1e-5


def scipy_stationarity_feasible(ctx):
    """Independent first-order check: lam >= 0, mu >= 0, sum(lam) = 1, and
    sum lam_j grad_f_j + sum mu_i grad_g_i = 0."""
    s = len(ctx.xbar)
    n = len(ctx.grad_f)
    act = list(ctx.active_set)
    width = n + len(act)
    a_eq, b_eq = [], []
    for k in range(s):
        a_eq.append([ctx.grad_f[j][k] for j in range(n)]
                    + [ctx.grad_g[i][k] for i in act])
        b_eq.append(0.0)
    a_eq.append([1.0] * n + [0.0] * len(act))
    b_eq.append(1.0)
    out = linprog(c=[0.0] * width, A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0.0, None)] * width, method="highs")
    assert out.status in (0, 2)
    return out.status == 0


def test_criterion_08_zero_direction_reduces_to_first_order_kkt():
    for name in FIXTURE_NAMES:
        prob = load_fixture(name)
        ctx = point_context(prob, prob.points[0])
        zero = tuple(0.0 for _ in range(prob.s))
        da = analyze_direction(ctx, zero)
        cq = run_cq_checks(ctx, da, n_samples=32, seed=0)
        got = certify_direction(ctx, da, cq)

        fo = first_order_kkt(ctx)
        assert (fo is not None) == scipy_stationarity_feasible(ctx), name
        ok64, _ = system_64_solvable(ctx)
        abadie_ok = cq["abadie"].verdict == NO_COUNTEREXAMPLE
        guignard_ok = cq["guignard"].verdict == NO_COUNTEREXAMPLE
        gate = abadie_ok or (prob.n == 1 and guignard_ok)
        if fo is not None:
            expected = CERTIFIED
        elif ok64 and gate:
            expected = REFUTED
        else:
            expected = UNDECIDED
        assert got.verdict == expected, name
        if fo is not None and got.certificate is not None:
            assert got.certificate.lam == pytest.approx(fo.lam, abs=1e-9)
            assert got.certificate.mu == pytest.approx(fo.mu, abs=1e-9)


def test_criterion_09_numeric_second_derivatives_match_symbolic_oracles():
    rng = random.Random(0)
    worst = 0.0
    for _ in range(20):
        s = rng.choice([1, 2, 3])
        src, names = poly_instance(rng, s)
        e = parse(src, names)
        x = tuple(rng.uniform(-1, 1) for _ in range(s))
        u = tuple(rng.uniform(-1, 1) for _ in range(s))
        sd = second_dir_deriv(e, gradient(e, s), x, u, RICH)
        assert sd.converged, (src, sd.status)
        worst = max(worst, abs(sd.value - analytic_second_dir(e, s, x, u)))
    assert worst <= 1e-8

    e = parse("spow(x1, 1.5)", ["x1"])
    sd = second_dir_deriv(e, gradient(e, 1), (0.0,), (1.0,), StepGrid(steps=60))
    assert sd.status == DIVERGED


def test_criterion_10_directory_check_runs_are_byte_identical(capsys):
    def one_run():
        code = main(["check", str(FIXTURE_DIR), "--seed", "0"])
        out = capsys.readouterr().out
        body = json.loads(out)
        for report in body["reports"]:
            del report["timing"]
        return code, json.dumps(body, indent=2, sort_keys=True)

    code1, text1 = one_run()
    code2, text2 = one_run()
    assert code1 == code2
    assert text1 == text2
