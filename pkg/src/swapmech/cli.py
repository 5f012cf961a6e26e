"""swapmech command line: a thin client of the service API.

By default requests run against the in-process app over an ASGI transport,
so no server is needed and artifacts are reproducible offline; ``--server``
points the same requests at a remote instance instead.  Without ``--out`` the
artifact goes to stdout (summary to stderr); with ``--out`` the artifact is
written to the file and the summary goes to stdout.

Exit codes: 0 success, 2 invalid config, 3 numerical failure, 1 transport or
unexpected error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from . import __version__
from .runconfig import CONFIG_TYPES

EXIT_OK = 0
EXIT_TRANSPORT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

IN_PROCESS_BASE_URL = "http://swapmech.internal"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapmech",
        description="Two-atom swap gate mediated by a mechanical oscillator: "
                    "design and simulation tool",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name in CONFIG_TYPES:
        p = sub.add_parser(name, help=f"run the {name} computation")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="write the artifact here")
        p.add_argument(
            "--strict",
            action=argparse.BooleanOptionalAction,
            default=True,
            help="reject unknown config keys (default on)",
        )
        p.add_argument(
            "--server",
            default=None,
            help="base URL of a running service; default runs in-process",
        )

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _post(server: str | None, path: str, payload: dict, params: dict) -> httpx.Response:
    if server is not None:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload, params=params)

    # In-process request over the ASGI transport: same wire format as a
    # remote server, no sockets involved.
    import anyio

    async def go() -> httpx.Response:
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url=IN_PROCESS_BASE_URL, timeout=None
        ) as client:
            return await client.post(path, json=payload, params=params)

    return anyio.run(go)


def _load_config_payload(args) -> dict:
    path = Path(args.config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise _CliConfigError(f"cannot read config {path}: {err}")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as err:
        raise _CliConfigError(
            f"config is not valid JSON: {err.msg} at line {err.lineno}, "
            f"column {err.colno}"
        )
    if not isinstance(payload, dict):
        raise _CliConfigError("config root must be a JSON object")
    if args.subcommand == "compare":
        _resolve_compare_files(payload)
    return payload


def _resolve_compare_files(payload: dict) -> None:
    """Inline the two trajectory files; relative paths resolve against cwd."""
    for key in ("file_a", "file_b"):
        value = payload.get(key)
        if value is None:
            continue
        file_path = Path(value)
        try:
            payload[f"csv_{key[-1]}"] = file_path.read_text(encoding="utf-8")
        except OSError as err:
            raise _CliConfigError(f"cannot read {key} ({file_path}): {err}")
        payload[key] = None


class _CliConfigError(Exception):
    pass


def _run_remote(args) -> int:
    try:
        payload = _load_config_payload(args)
    except _CliConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        response = _post(
            args.server,
            f"/v1/{args.subcommand}",
            payload,
            {"strict": str(args.strict).lower()},
        )
    except httpx.HTTPError as err:
        print(f"error: transport failure: {err}", file=sys.stderr)
        return EXIT_TRANSPORT

    if response.status_code == 200:
        body = response.json()
        if args.out:
            Path(args.out).write_text(body["artifact"], encoding="utf-8",
                                      newline="\n")
            sys.stdout.write(body["summary"])
        else:
            sys.stderr.write(body["summary"])
            sys.stdout.write(body["artifact"])
        return EXIT_OK

    if response.status_code >= 500:
        print(f"error: server failure {response.status_code}: "
              f"{response.text[:200]}", file=sys.stderr)
        return EXIT_TRANSPORT
    kind, message = _error_fields(response)
    print(f"error ({kind}): {message}", file=sys.stderr)
    return EXIT_NUMERICAL if kind == "numerical" else EXIT_CONFIG


def _error_fields(response: httpx.Response) -> tuple[str, str]:
    try:
        body = response.json()
    except ValueError:
        return "config", response.text
    detail = body.get("detail") if isinstance(body, dict) else body
    if isinstance(detail, dict) and "kind" in detail:
        return detail["kind"], detail.get("message", "")
    # FastAPI's native validation errors arrive as a list of dicts.
    return "config", json.dumps(detail)


def _run_serve(args) -> int:
    import uvicorn

    uvicorn.run("swapmech.service:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.subcommand == "serve":
        return _run_serve(args)
    return _run_remote(args)


if __name__ == "__main__":
    sys.exit(main())
