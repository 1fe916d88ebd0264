import random

import numpy as np
import pytest
from scipy.optimize import linprog

from sockkt.lp import LinearProgram, LPOutcome, StrictSystemOutcome, solve, strict_system_solvable


def scipy_parts(lp: LinearProgram):
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for coeffs, rel, rhs in lp.rows:
        if rel == "<=":
            a_ub.append(coeffs); b_ub.append(rhs)
        elif rel == ">=":
            a_ub.append([-c for c in coeffs]); b_ub.append(-rhs)
        else:
            a_eq.append(coeffs); b_eq.append(rhs)
    bounds = [(None, None) if b == "free" else (0, None) for b in lp.bounds]
    return (a_ub or None, b_ub or None, a_eq or None, b_eq or None, bounds)


def scipy_verdict(lp: LinearProgram) -> str:
    """optimal/infeasible/unbounded per scipy, with the HiGHS presolve fold
    (unbounded reported as infeasible) resolved by a zero-cost probe."""
    c = lp.c if lp.sense == "min" else [-v for v in lp.c]
    a_ub, b_ub, a_eq, b_eq, bounds = scipy_parts(lp)
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 0:
        return "optimal"
    probe = linprog([0.0] * len(lp.c), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq,
                    b_eq=b_eq, bounds=bounds, method="highs")
    return "infeasible" if probe.status == 2 else "unbounded"


def scipy_value(lp: LinearProgram) -> float:
    c = lp.c if lp.sense == "min" else [-v for v in lp.c]
    a_ub, b_ub, a_eq, b_eq, bounds = scipy_parts(lp)
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun if lp.sense == "min" else -res.fun


def verify_point(lp: LinearProgram, x, tol=1e-7):
    for coeffs, rel, rhs in lp.rows:
        lhs = sum(c * v for c, v in zip(coeffs, x))
        if rel == "<=":
            assert lhs <= rhs + tol
        elif rel == ">=":
            assert lhs >= rhs - tol
        else:
            assert abs(lhs - rhs) <= tol
    for b, v in zip(lp.bounds, x):
        if b == "nonneg":
            assert v >= -tol


def verify_ray(lp: LinearProgram, ray, tol=1e-7):
    # recession direction: respects homogeneous constraints, improves the cost
    for coeffs, rel, rhs in lp.rows:
        lhs = sum(c * v for c, v in zip(coeffs, ray))
        if rel == "<=":
            assert lhs <= tol
        elif rel == ">=":
            assert lhs >= -tol
        else:
            assert abs(lhs) <= tol
    for b, v in zip(lp.bounds, ray):
        if b == "nonneg":
            assert v >= -tol
    cost = sum(c * v for c, v in zip(lp.c, ray))
    assert (cost < tol) if lp.sense == "min" else (cost > -tol)
    assert any(abs(v) > tol for v in ray)


def test_textbook_optimum():
    lp = LinearProgram("max", [3.0, 5.0],
                       [([1.0, 0.0], "<=", 4.0),
                        ([0.0, 2.0], "<=", 12.0),
                        ([3.0, 2.0], "<=", 18.0)],
                       ["nonneg", "nonneg"])
    out = solve(lp)
    assert out.status == "optimal"
    assert out.value == pytest.approx(36.0, abs=1e-9)
    assert out.x == pytest.approx([2.0, 6.0], abs=1e-9)


def test_infeasible_detected():
    lp = LinearProgram("min", [1.0],
                       [([1.0], "<=", -1.0), ([1.0], ">=", 1.0)],
                       ["free"])
    assert solve(lp).status == "infeasible"


def test_unbounded_with_checkable_ray():
    lp = LinearProgram("min", [-1.0, 0.0],
                       [([1.0, -1.0], "<=", 2.0)],
                       ["nonneg", "nonneg"])
    out = solve(lp)
    assert out.status == "unbounded"
    verify_ray(lp, out.ray)


def test_equality_rows_and_free_variables():
    lp = LinearProgram("min", [1.0, 2.0, 0.0],
                       [([1.0, 1.0, 1.0], "=", 6.0),
                        ([1.0, -1.0, 0.0], ">=", 1.0),
                        ([1.0, 0.0, 0.0], ">=", -2.0),
                        ([0.0, 1.0, 0.0], ">=", -3.0)],
                       ["free", "free", "nonneg"])
    out = solve(lp)
    assert out.status == "optimal"
    verify_point(lp, out.x)
    assert out.value == pytest.approx(scipy_value(lp), abs=1e-8)


def test_validation_rejects_malformed_programs():
    with pytest.raises(ValueError):
        LinearProgram("argmin", [1.0], [], ["nonneg"])
    with pytest.raises(ValueError):
        LinearProgram("min", [1.0], [], ["positive"])
    with pytest.raises(ValueError):
        LinearProgram("min", [1.0], [([1.0, 2.0], "<=", 0.0)], ["nonneg"])
    with pytest.raises(ValueError):
        LinearProgram("min", [1.0], [([1.0], "<", 0.0)], ["nonneg"])


def random_lp(rng: random.Random) -> LinearProgram:
    nv = rng.randint(1, 4)
    nr = rng.randint(1, 5)
    rows = []
    for _ in range(nr):
        coeffs = [float(rng.randint(-4, 4)) for _ in range(nv)]
        rel = rng.choice(["<=", "<=", ">=", "="])
        rows.append((coeffs, rel, float(rng.randint(-6, 6))))
    c = [float(rng.randint(-4, 4)) for _ in range(nv)]
    bounds = [rng.choice(["nonneg", "nonneg", "free"]) for _ in range(nv)]
    return LinearProgram(rng.choice(["min", "max"]), c, rows, bounds)


def test_random_lps_agree_with_scipy():
    rng = random.Random(2024)
    statuses = {"optimal": 0, "infeasible": 0, "unbounded": 0}
    for _ in range(250):
        lp = random_lp(rng)
        out = solve(lp)
        expected = scipy_verdict(lp)
        assert out.status == expected, (lp, out.status, expected)
        statuses[out.status] += 1
        if out.status == "optimal":
            verify_point(lp, out.x)
            assert out.value == pytest.approx(scipy_value(lp), abs=1e-7)
        elif out.status == "unbounded":
            verify_ray(lp, out.ray)
    # the generator must actually exercise all three outcomes
    assert all(v > 10 for v in statuses.values()), statuses


def test_solver_is_deterministic():
    rng = random.Random(5)
    for _ in range(20):
        lp = random_lp(rng)
        a, b = solve(lp), solve(lp)
        assert a.status == b.status and a.pivots == b.pivots
        if a.x is not None:
            assert a.x == b.x


def test_strict_system_hand_instances():
    # u2 < 0 against u2 >= 2v, v > 0: unsolvable
    out = strict_system_solvable([[0.0, 1.0, 0.0]], [[0.0, -1.0, 2.0]], strict_vars=[2])
    assert not out.solvable and out.witness is None
    # u2 - 2v < 0, -u2 <= 0, v > 0: u = 0, v = 1 works
    out = strict_system_solvable([[0.0, 1.0, -2.0]], [[0.0, -1.0, 0.0]], strict_vars=[2])
    assert out.solvable
    w = out.witness
    assert w[0] * 0 + w[1] - 2 * w[2] < 0 and -w[1] <= 1e-9 and w[2] > 0


def test_strict_system_validation():
    with pytest.raises(ValueError):
        strict_system_solvable([], [])
    with pytest.raises(ValueError):
        strict_system_solvable([], [[1.0, 0.0]])
    with pytest.raises(ValueError):
        strict_system_solvable([[1.0]], [[1.0, 2.0]])
    with pytest.raises(ValueError):
        strict_system_solvable([[1.0]], [], strict_vars=[3])


def scipy_strict_feasible(rows_strict, rows_weak, strict_vars, width) -> bool:
    """By positive homogeneity, solvability equals feasibility of the scaled
    system a.w <= -1 (strict), a.w <= 0 (weak), w_i >= 1 (designated)."""
    a_ub, b_ub = [], []
    for r in rows_strict:
        a_ub.append(list(r)); b_ub.append(-1.0)
    for r in rows_weak:
        a_ub.append(list(r)); b_ub.append(0.0)
    for i in strict_vars:
        row = [0.0] * width
        row[i] = -1.0
        a_ub.append(row); b_ub.append(-1.0)
    res = linprog([0.0] * width, A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * width, method="highs")
    return res.status == 0


def test_random_strict_systems_agree_with_scipy():
    rng = random.Random(99)
    solvable = unsolvable = 0
    for _ in range(200):
        width = rng.randint(1, 4)
        ns, nw = rng.randint(1, 3), rng.randint(0, 3)
        rs = [[float(rng.randint(-3, 3)) for _ in range(width)] for _ in range(ns)]
        rw = [[float(rng.randint(-3, 3)) for _ in range(width)] for _ in range(nw)]
        sv = [width - 1] if rng.random() < 0.5 else []
        out = strict_system_solvable(rs, rw, strict_vars=sv)
        assert out.solvable == scipy_strict_feasible(rs, rw, sv, width)
        if out.solvable:
            solvable += 1
            w = out.witness
            for r in rs:
                assert sum(a * b for a, b in zip(r, w)) < 0
            for r in rw:
                assert sum(a * b for a, b in zip(r, w)) <= 1e-9
            for i in sv:
                assert w[i] > 0
        else:
            unsolvable += 1
    assert solvable > 30 and unsolvable > 30


def test_outcome_shape():
    out = solve(LinearProgram("min", [1.0], [([1.0], ">=", 2.0)], ["nonneg"]))
    assert isinstance(out, LPOutcome)
    assert out.pivots >= 1
    sso = strict_system_solvable([[1.0]], [])
    assert isinstance(sso, StrictSystemOutcome)
    assert sso.solvable and sso.sigma == pytest.approx(1.0, abs=1e-9)
