import json
from pathlib import Path

import pytest

from sockkt.cones import analyze_direction, point_context
from sockkt.problem import load_problem_dict, load_problem_file

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

FIXTURE_NAMES = sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.json"


def load_fixture(name: str):
    return load_problem_file(str(fixture_path(name)))


def make_problem(objectives, constraints=(), variables=("x1", "x2"), tolerances=None):
    """Inline problem document for tests that do not need a fixture file."""
    doc = {
        "name": "inline",
        "variables": list(variables),
        "objectives": list(objectives),
        "constraints": list(constraints),
        "points": [[0.0] * len(variables)],
    }
    if tolerances:
        doc["tolerances"] = dict(tolerances)
    return load_problem_dict(doc)


@pytest.fixture(scope="session")
def fixture_problems():
    return {name: load_fixture(name) for name in FIXTURE_NAMES}


@pytest.fixture(scope="session")
def fixture_contexts(fixture_problems):
    out = {}
    for name, prob in fixture_problems.items():
        out[name] = [point_context(prob, pt) for pt in prob.points]
    return out


def analyzed(prob, point_idx=0, direction_idx=0, grid=None):
    ctx = point_context(prob, prob.points[point_idx])
    d = prob.directions[point_idx][direction_idx]
    if grid is None:
        da = analyze_direction(ctx, d)
    else:
        da = analyze_direction(ctx, d, grid)
    return ctx, da


def fixture_doc(name: str) -> dict:
    return json.loads(fixture_path(name).read_text())


def synthetic_instance(rng):
    """Random (gradients, curvature scalars) instance for the dual-system
    equivalence suite: integer grid [-3, 3], s <= 4, n <= 3, |I| <= 3.

    The geometry is irrelevant for the equivalence, so the point sits at the
    origin with every constraint active and d = 0 making all data admissible.
    """
    from sockkt.cones import DirectionAnalysis, PointContext
    from sockkt.deriv import CONVERGED, SecondDirDeriv

    s = rng.randint(1, 4)
    n = rng.randint(1, 3)
    m = rng.randint(0, 3)
    grad_f = tuple(tuple(float(rng.randint(-3, 3)) for _ in range(s)) for _ in range(n))
    grad_g = tuple(tuple(float(rng.randint(-3, 3)) for _ in range(s)) for _ in range(m))
    f2 = [float(rng.randint(-3, 3)) for _ in range(n)]
    g2 = [float(rng.randint(-3, 3)) for _ in range(m)]
    ctx = PointContext(
        xbar=(0.0,) * s,
        f_values=(0.0,) * n,
        g_values=(0.0,) * m,
        active_set=tuple(range(m)),
        grad_f=grad_f,
        grad_g=grad_g,
        feasible=True,
    )
    da = DirectionAnalysis(
        d=(0.0,) * s,
        critical=True,
        J=tuple(range(n)),
        K=tuple(range(m)),
        f_slopes=(0.0,) * n,
        g_slopes={i: 0.0 for i in range(m)},
        f_curv={j: SecondDirDeriv(f2[j], CONVERGED, ()) for j in range(n)},
        g_curv={i: SecondDirDeriv(g2[i], CONVERGED, ()) for i in range(m)},
    )
    return ctx, da
