"""HTTP wrapper around the certification pipeline.

Error mapping: anything wrong with the submitted problem (schema violations,
unparsable expressions, points where the data cannot be evaluated) is a 422
with kind "validation" or "evaluation"; solver breakdowns are a 500 with
kind "numerical".
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..expr import EvalError, ExprError
from ..lp import LPError
from ..problem import ProblemValidationError, load_problem_dict
from ..run import RunOptions, run_command
from .models import RunRequest


def _execute(command: str, req: RunRequest) -> dict:
    try:
        problem = load_problem_dict(req.problem.model_dump(exclude_none=True))
        opts = req.options.model_dump()
        if opts["z"] is not None:
            opts["z"] = tuple(opts["z"])
        return run_command(command, problem, RunOptions(**opts))
    except ProblemValidationError as ex:
        raise HTTPException(422, {"kind": "validation", "message": str(ex)}) from ex
    except EvalError as ex:
        raise HTTPException(422, {"kind": "evaluation", "message": ex.message,
                                  "offset": ex.offset}) from ex
    except ExprError as ex:
        raise HTTPException(422, {"kind": "validation", "message": ex.message,
                                  "offset": ex.offset}) from ex
    except LPError as ex:
        raise HTTPException(500, {"kind": "numerical", "message": str(ex)}) from ex


def create_app() -> FastAPI:
    app = FastAPI(title="sockkt service", version=__version__)

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/v1/check")
    def check(req: RunRequest) -> dict:
        return _execute("check", req)

    @app.post("/v1/cq")
    def cq(req: RunRequest) -> dict:
        return _execute("cq", req)

    @app.post("/v1/convexity")
    def convexity(req: RunRequest) -> dict:
        return _execute("convexity", req)

    @app.post("/v1/deriv")
    def deriv(req: RunRequest) -> dict:
        return _execute("deriv", req)

    return app
