"""Command-line client for the experiment service.

Every subcommand speaks the HTTP API. Without ``--server`` the app is
mounted in-process, so no server needs to be running; with ``--server``
the same requests go over the network (paths in the config are then
resolved on the server). Exit codes: 0 success, 1 configuration or
input error, 2 numeric failure.
"""

import argparse
import asyncio
import sys

import httpx

from . import __version__
from .config import load_config
from .errors import MvilError, NumericError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def _body_of(resp) -> dict:
    try:
        return resp.json()
    except ValueError:
        return {"detail": resp.text}


def request_json(server, method: str, path: str, payload: dict) -> tuple:
    """One API call, in-process by default. Returns (status_code, body)."""
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.request(method, path, json=payload)
            return resp.status_code, _body_of(resp)

    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())

    async def go():
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://mvil.internal") as client:
            resp = await client.request(method, path, json=payload)
            return resp.status_code, _body_of(resp)

    return asyncio.run(go())


def _exit_code_for(status: int, body: dict) -> int:
    if status < 400:
        return EXIT_OK
    if isinstance(body, dict) and body.get("error_kind") == "numeric":
        return EXIT_NUMERIC
    return EXIT_CONFIG


def _print_failure(status: int, body: dict) -> None:
    detail = body.get("detail") if isinstance(body, dict) else body
    print(f"error (HTTP {status}): {detail}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except MvilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.deterministic:
        config = config.model_copy(update={"deterministic": True})

    payload = {
        "config": config.model_dump(),
        "repeats": args.repeats,
        "ablation": args.ablation,
        "single_view_baselines": args.single_view_baselines,
        "dump_embeddings": args.dump_embeddings,
    }
    status, body = request_json(args.server, "POST", "/experiments/run", payload)
    if status >= 400:
        _print_failure(status, body)
        return _exit_code_for(status, body)

    for line in body["report_text"].splitlines():
        if line.startswith("[summary]"):
            print(line)
        elif line.startswith("view_") and " = ACC " in line:
            print(line)
    if "ablation" in body["summary"]:
        for name, rows in body["summary"]["ablation"].items():
            print(f"ablation {name}: ACC {100 * rows['acc_mean']:.2f} "
                  f"({100 * rows['acc_std']:.2f}) MAF1 {100 * rows['maf1_mean']:.2f} "
                  f"({100 * rows['maf1_std']:.2f})")
    print(f"report written to {body['report_path']}")
    return EXIT_OK


def cmd_check_grad(args) -> int:
    payload = {"size": args.size, "tol": args.tol, "step": args.step}
    status, body = request_json(args.server, "POST", "/gradient-check", payload)
    if status >= 400:
        _print_failure(status, body)
        return _exit_code_for(status, body)
    for case in body["cases"]:
        flag = "pass" if case["passed"] else "FAIL"
        print(f"{flag}  {case['name']}: max relative error {case['max_rel_error']:.3e}")
    if body["passed"]:
        print(f"all gradients match finite differences within {body['tol']:g}")
        return EXIT_OK
    print("gradient check FAILED", file=sys.stderr)
    return EXIT_NUMERIC


def cmd_make_synthetic(args) -> int:
    payload = {"views": args.views, "n": args.n, "classes": args.classes,
               "seed": args.seed, "out_dir": args.out}
    status, body = request_json(args.server, "POST", "/synthetic-dataset", payload)
    if status >= 400:
        _print_failure(status, body)
        return _exit_code_for(status, body)
    print(f"wrote {len(body['view_files'])} views + labels to {body['directory']}")
    for name in body["view_files"]:
        print(f"  {name}")
    print(f"  {body['label_file']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mvil",
        description="Streaming multi-view training experiments over the mvil service.",
    )
    parser.add_argument("--version", action="version", version=f"mvil {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True, help="JSON config file")
    run.add_argument("--repeats", type=int, default=1)
    run.add_argument("--ablation", action="store_true",
                     help="also run the four component variants")
    run.add_argument("--single-view-baselines", action="store_true",
                     help="also train each view alone for the accumulation table")
    run.add_argument("--dump-embeddings", action="store_true",
                     help="write per-view representations next to the report")
    run.add_argument("--deterministic", action="store_true",
                     help="force deterministic reporting (no wall time)")
    run.add_argument("--server", default=None, help="remote service URL")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check-grad", help="finite-difference gradient check")
    check.add_argument("--size", default="small")
    check.add_argument("--tol", type=float, default=1e-6)
    check.add_argument("--step", type=float, default=1e-5)
    check.add_argument("--server", default=None)
    check.set_defaults(func=cmd_check_grad)

    synth = sub.add_parser("make-synthetic",
                           help="write the complementary-view synthetic dataset")
    synth.add_argument("--views", type=int, default=3)
    synth.add_argument("--n", type=int, default=300)
    synth.add_argument("--classes", type=int, default=3)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--server", default=None)
    synth.set_defaults(func=cmd_make_synthetic)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MvilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"cannot reach service: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
