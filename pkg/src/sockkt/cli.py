"""Command-line front end.

The CLI is a thin client of the HTTP service: by default it mounts the app
in-process, with --server it talks to a remote instance.  Problem files are
validated against the shipped schema before leaving the client, and every
response is validated against the report schema on the way back.

Exit codes: 0 verdict CERTIFIED/UNDECIDED or non-check commands, 1 verdict
REFUTED or INFEASIBLE, 2 validation or parse failure, 3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .problem import ProblemValidationError, problem_schema, report_schema, validate_against

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Client:
    """POSTs run requests either to an in-process app or a remote server."""

    def __init__(self, server: str | None):
        if server is None:
            import warnings
            with warnings.catch_warnings():
                # starlette tags its testclient deprecation as a UserWarning
                warnings.simplefilter("ignore", Warning)
                from fastapi.testclient import TestClient

            from .service import create_app
            self._http = TestClient(create_app())
        else:
            import httpx
            self._http = httpx.Client(base_url=server, timeout=300.0)

    def run(self, command: str, problem_doc: dict, options: dict) -> dict:
        resp = self._http.post(f"/v1/{command}", json={"problem": problem_doc,
                                                       "options": options})
        if resp.status_code == 200:
            return resp.json()
        detail = resp.json().get("detail")
        if isinstance(detail, dict):
            kind = detail.get("kind", "validation")
            message = detail.get("message", str(detail))
        else:
            kind, message = "validation", str(detail)
        code = EXIT_NUMERICAL if kind == "numerical" else EXIT_VALIDATION
        raise CLIError(f"{kind} error: {message}", code)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sockkt",
        description="Second-order KKT certificates, violation witnesses, and "
                    "constraint-qualification diagnostics for problem files.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("path", help="problem file or directory of problem files")
    common.add_argument("--point", type=int, default=None,
                        help="restrict to the point with this index")
    common.add_argument("--direction", type=int, default=None,
                        help="restrict to the user direction with this index")
    common.add_argument("--samples", type=int, default=64)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--summary", action="store_true",
                        help="human-readable summary on stderr")
    common.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    common.add_argument("--t0", type=float, default=1e-2)
    common.add_argument("--rho", type=float, default=0.5)
    common.add_argument("--steps", type=int, default=24)
    common.add_argument("--tol-rel", type=float, default=1e-6)
    common.add_argument("--richardson", action="store_true")
    common.add_argument("--tangent-steps", type=int, default=10)
    common.add_argument("--tangent-search-evals", type=int, default=32)
    common.add_argument("--lp-trace", action="store_true")

    check = sub.add_parser("check", parents=[common],
                           help="certify or refute second-order KKT conditions")
    check.add_argument("--skip-cq", action="store_true",
                       help="skip constraint-qualification diagnostics")
    check.add_argument("--n-dir", type=int, default=32,
                       help="number of sampled critical directions per point")

    sub.add_parser("cq", parents=[common], help="constraint-qualification diagnostics")

    for name, text in (("convexity", "generalized convexity probes"),
                       ("deriv", "second-order directional derivatives with traces")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--function", default=None,
                       help="probe a single function, e.g. f1 or g2")
        p.add_argument("--z", default=None,
                       help="comma-separated curvature vector for curve probes")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _options_payload(args: argparse.Namespace) -> dict:
    payload = {
        "point": args.point,
        "direction": args.direction,
        "samples": args.samples,
        "seed": args.seed,
        "t0": args.t0,
        "rho": args.rho,
        "steps": args.steps,
        "tol_rel": args.tol_rel,
        "richardson": args.richardson,
        "tangent_steps": args.tangent_steps,
        "tangent_search_evals": args.tangent_search_evals,
        "lp_trace": args.lp_trace,
    }
    if args.command == "check":
        payload["skip_cq"] = args.skip_cq
        payload["n_dir"] = args.n_dir
    if args.command in ("convexity", "deriv"):
        payload["function"] = args.function
        if args.z is not None:
            try:
                payload["z"] = [float(v) for v in args.z.split(",")]
            except ValueError:
                raise CLIError(f"--z must be comma-separated numbers, got {args.z!r}",
                               EXIT_VALIDATION) from None
    return payload


def _problem_files(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        if not files:
            raise CLIError(f"no .json problem files in {path}", EXIT_VALIDATION)
        return files
    if not p.exists():
        raise CLIError(f"no such file: {path}", EXIT_VALIDATION)
    return [p]


def _load_doc(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as ex:
        raise CLIError(f"{path}: not valid JSON: {ex}", EXIT_VALIDATION) from ex
    try:
        validate_against(problem_schema(), doc)
    except ProblemValidationError as ex:
        raise CLIError(f"{path}: {ex}", EXIT_VALIDATION) from ex
    return doc


def _summarize(report: dict, out) -> None:
    name = report["problem"]["name"]
    command = report["command"]
    verdict = report.get("verdict")
    head = f"{name} [{command}]"
    if verdict:
        head += f": {verdict}"
    print(head, file=out)
    for pt in report["points"]:
        line = f"  point {pt['index']} x={pt['x']}"
        if "verdict" in pt:
            line += f": {pt['verdict']}"
        print(line, file=out)
        for cq_name, entry in sorted(pt.get("cq", {}).items()):
            print(f"    {cq_name}: {entry['verdict']}", file=out)
        for d in pt.get("directions", []):
            bits = [f"d={d['d']}"]
            if "verdict" in d:
                bits.append(d["verdict"])
            elif "so_zangwill" in d:
                bits.append("so_zangwill " + d["so_zangwill"]["verdict"])
            print("    " + " ".join(bits), file=out)
        for row in pt.get("probes", []):
            for key in ("pseudoconvex", "so_pseudoconvex"):
                print(f"    {row['function']} {key}: {row[key]['verdict']}", file=out)
        for row in pt.get("derivatives", []):
            print(f"    {row['function']} d={row['d']}: {row['status']}"
                  f" value={row['value']}", file=out)


def _exit_code(report: dict) -> int:
    if report.get("verdict") in ("REFUTED", "INFEASIBLE"):
        return EXIT_REFUTED
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app
        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    try:
        files = _problem_files(args.path)
        options = _options_payload(args)
        client = _Client(args.server)
        reports = []
        for path in files:
            doc = _load_doc(path)
            report = client.run(args.command, doc, options)
            try:
                validate_against(report_schema(), report)
            except ProblemValidationError as ex:
                raise CLIError(f"service returned a malformed report: {ex}",
                               EXIT_NUMERICAL) from ex
            reports.append(report)
    except CLIError as ex:
        print(f"sockkt: {ex}", file=sys.stderr)
        return ex.code

    if len(reports) == 1:
        print(json.dumps(reports[0], indent=2, sort_keys=True))
    else:
        print(json.dumps({"reports": reports}, indent=2, sort_keys=True))
    if args.summary:
        for report in reports:
            _summarize(report, sys.stderr)
    return max(_exit_code(r) for r in reports)


if __name__ == "__main__":
    sys.exit(main())
