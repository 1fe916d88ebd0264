"""Request models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class ProblemDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    variables: list[str] = Field(min_length=1)
    objectives: list[str] = Field(min_length=1)
    constraints: list[str] = Field(default_factory=list)
    points: list[list[float]] = Field(min_length=1)
    directions: list[list[list[float]]] | None = None
    tolerances: dict[str, float] | None = None


class RunOptionsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    point: int | None = Field(default=None, ge=0)
    direction: int | None = Field(default=None, ge=0)
    samples: int = Field(default=64, ge=1, le=100_000)
    seed: int = Field(default=0, ge=0)
    skip_cq: bool = False
    n_dir: int = Field(default=32, ge=0, le=10_000)
    t0: float = Field(default=1e-2, gt=0)
    rho: float = Field(default=0.5, gt=0, lt=1)
    steps: int = Field(default=24, ge=4, le=200)
    tol_rel: float = Field(default=1e-6, gt=0)
    richardson: bool = False
    tangent_steps: int = Field(default=10, ge=1, le=64)
    tangent_search_evals: int = Field(default=32, ge=1, le=4096)
    function: str | None = None
    z: list[float] | None = None
    lp_trace: bool = False


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    problem: ProblemDocument
    options: RunOptionsModel = Field(default_factory=RunOptionsModel)
