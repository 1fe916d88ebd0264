"""Problem-file ingestion: schema validation, expression parsing, and the
semantic checks the schema cannot express."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .cones import Tolerances
from .expr import Expr, ParseError, gradient, parse


class ProblemValidationError(Exception):
    pass


def _load_schema(name: str) -> dict:
    with resources.files("sockkt").joinpath(f"schemas/{name}").open("r", encoding="utf-8") as fh:
        return json.load(fh)


_PROBLEM_SCHEMA = _load_schema("problem.schema.json")
_REPORT_SCHEMA = _load_schema("report.schema.json")


def problem_schema() -> dict:
    return _PROBLEM_SCHEMA


def report_schema() -> dict:
    return _REPORT_SCHEMA


def validate_against(schema: dict, instance) -> None:
    """First schema violation as a ProblemValidationError with its JSON path."""
    validator = jsonschema.Draft202012Validator(schema)
    for err in sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path)):
        path = "$" + "".join(f"[{p!r}]" if isinstance(p, str) else f"[{p}]"
                             for p in err.absolute_path)
        raise ProblemValidationError(f"{path}: {err.message}")


@dataclass(frozen=True)
class Problem:
    name: str
    variables: tuple[str, ...]
    objectives: tuple[Expr, ...]
    objective_sources: tuple[str, ...]
    objective_gradients: tuple[tuple[Expr, ...], ...]
    constraints: tuple[Expr, ...]
    constraint_sources: tuple[str, ...]
    constraint_gradients: tuple[tuple[Expr, ...], ...]
    points: tuple[tuple[float, ...], ...]
    directions: tuple[tuple[tuple[float, ...], ...], ...]
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def s(self) -> int:
        return len(self.variables)

    @property
    def n(self) -> int:
        return len(self.objectives)

    @property
    def m(self) -> int:
        return len(self.constraints)


def _parse_exprs(sources, variables, label):
    trees = []
    for idx, src in enumerate(sources):
        try:
            trees.append(parse(src, variables))
        except ParseError as ex:
            raise ProblemValidationError(f"{label} {idx + 1}: {ex.message} (offset {ex.offset})") from ex
    return tuple(trees)


def load_problem_dict(doc: dict) -> Problem:
    validate_against(_PROBLEM_SCHEMA, doc)
    variables = tuple(doc["variables"])
    s = len(variables)
    objectives = _parse_exprs(doc["objectives"], list(variables), "objective")
    constraints = _parse_exprs(doc.get("constraints", []), list(variables), "constraint")

    points = []
    for idx, pt in enumerate(doc["points"]):
        if len(pt) != s:
            raise ProblemValidationError(
                f"point {idx} has {len(pt)} components, expected {s}")
        points.append(tuple(float(v) for v in pt))

    raw_dirs = doc.get("directions")
    if raw_dirs is None:
        directions = tuple(() for _ in points)
    else:
        if len(raw_dirs) != len(points):
            raise ProblemValidationError(
                f"directions lists {len(raw_dirs)} point entries, expected {len(points)}")
        directions = []
        for pidx, dlist in enumerate(raw_dirs):
            vecs = []
            for didx, d in enumerate(dlist):
                if len(d) != s:
                    raise ProblemValidationError(
                        f"direction {didx} of point {pidx} has {len(d)} components, expected {s}")
                vecs.append(tuple(float(v) for v in d))
            directions.append(tuple(vecs))
        directions = tuple(directions)

    tol = Tolerances().replaced(**doc.get("tolerances", {}))
    return Problem(
        name=doc["name"],
        variables=variables,
        objectives=objectives,
        objective_sources=tuple(doc["objectives"]),
        objective_gradients=tuple(gradient(e, s) for e in objectives),
        constraints=constraints,
        constraint_sources=tuple(doc.get("constraints", [])),
        constraint_gradients=tuple(gradient(e, s) for e in constraints),
        points=tuple(points),
        directions=directions,
        tolerances=tol,
    )


def load_problem_file(path) -> Problem:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as ex:
            raise ProblemValidationError(f"not valid JSON: {ex}") from ex
    return load_problem_dict(doc)
