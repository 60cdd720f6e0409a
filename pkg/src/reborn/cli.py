"""Admin command line.

Every subcommand except ``serve`` is a thin client of the HTTP API: with
``--server`` it talks to a running instance over the network, otherwise it
spins the app up in-process and issues the same requests against it.  Either
way the CLI never touches service internals directly.
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Protocol

from .config import load_config


class ApiClient(Protocol):
    def get(self, url: str, **kwargs): ...

    def post(self, url: str, **kwargs): ...


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reborn",
        description="Administer a reborn knowledge database.",
    )
    parser.add_argument(
        "--server",
        metavar="URL",
        help="base URL of a running service (default: run in-process)",
    )
    parser.add_argument(
        "--config",
        metavar="PATH",
        help="path to a JSON config file (in-process mode only)",
    )
    parser.add_argument(
        "--data-dir",
        metavar="DIR",
        help="override the data directory (in-process mode only)",
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="print raw JSON responses instead of human-readable text",
    )

    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="deposit an RO-Crate file or harvest a DOI")
    p_ingest.add_argument("source", help="path to a crate (.json or .zip) or a DOI to harvest")

    p_validate = sub.add_parser("validate", help="validate a crate without storing it")
    p_validate.add_argument("path", help="path to a crate (.json or .zip)")

    sub.add_parser("reindex", help="rebuild the search indexes from the catalog")

    sub.add_parser("list-types", help="list the registered data types")

    p_search = sub.add_parser("search", help="run a hybrid search")
    p_search.add_argument("query")
    p_search.add_argument("-k", type=int, default=10, help="number of hits (default 10)")
    p_search.add_argument(
        "--w-sparse", type=float, default=None, help="sparse weight in [0, 1]"
    )

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        return _serve(args)

    with _client(args) as client:
        handler = {
            "ingest": _ingest,
            "validate": _validate,
            "reindex": _reindex,
            "list-types": _list_types,
            "search": _search,
        }[args.command]
        return handler(client, args)


@contextmanager
def _client(args: argparse.Namespace) -> Iterator[ApiClient]:
    if args.server:
        import httpx

        with httpx.Client(base_url=args.server.rstrip("/"), timeout=60.0) as client:
            yield client
        return

    # In-process: build the app and route requests through its ASGI stack so
    # the CLI exercises exactly what a remote client would.
    from fastapi.testclient import TestClient

    from .api import create_app

    config = load_config(args.config)
    if args.data_dir:
        from dataclasses import replace

        config = replace(config, data_dir=Path(args.data_dir))
    with TestClient(create_app(config), raise_server_exceptions=False) as client:
        yield client


def _serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config)
    if args.data_dir:
        from dataclasses import replace

        config = replace(config, data_dir=Path(args.data_dir))
    host = args.host if args.host is not None else config.host
    port = args.port if args.port is not None else config.port
    uvicorn.run(create_app(config), host=host, port=port)
    return 0


def _fail(response, as_json: bool) -> int:
    if as_json:
        print(response.text, file=sys.stderr)
    else:
        try:
            error = response.json()["error"]
            print(f"error [{error['code']}]: {error['message']}", file=sys.stderr)
            for violation in error.get("details", {}).get("violations", []):
                print(
                    f"  {violation['code']} at {violation['where']}: {violation['message']}",
                    file=sys.stderr,
                )
        except (ValueError, KeyError):
            print(f"error: HTTP {response.status_code}: {response.text}", file=sys.stderr)
    return 1


def _read_source(path: Path) -> bytes:
    """Read crate bytes; a directory means its ro-crate-metadata.json."""
    if path.is_dir():
        path = path / "ro-crate-metadata.json"
    return path.read_bytes()


def _ingest(client: ApiClient, args: argparse.Namespace) -> int:
    path = Path(args.source)
    if path.exists():
        body = _read_source(path)
    else:
        body = json.dumps({"doi": args.source}).encode("utf-8")
    response = client.post(
        "/api/ingest", content=body, headers={"content-type": "application/json"}
    )
    if response.status_code != 200:
        return _fail(response, args.json)
    payload = response.json()
    if args.json:
        print(response.text)
    else:
        print(
            f"deposited {payload['article_pid']} "
            f"({payload['statements_indexed']} statement(s) indexed)"
        )
    return 0


def _validate(client: ApiClient, args: argparse.Namespace) -> int:
    response = client.post(
        "/api/validate",
        content=_read_source(Path(args.path)),
        headers={"content-type": "application/json"},
    )
    if response.status_code != 200:
        return _fail(response, args.json)
    payload = response.json()
    if args.json:
        print(response.text)
    elif payload["ok"]:
        print("ok")
    else:
        for violation in payload["violations"]:
            print(f"{violation['code']} at {violation['where']}: {violation['message']}")
    return 0 if payload["ok"] else 1


def _reindex(client: ApiClient, args: argparse.Namespace) -> int:
    response = client.post("/api/admin/reindex")
    if response.status_code != 200:
        return _fail(response, args.json)
    payload = response.json()
    if args.json:
        print(response.text)
    else:
        print(
            f"reindexed {payload['articles']} article(s): "
            f"{payload['statements_sparse']} sparse, "
            f"{payload['statements_dense']} dense"
        )
    return 0


def _list_types(client: ApiClient, args: argparse.Namespace) -> int:
    response = client.get("/api/types")
    if response.status_code != 200:
        return _fail(response, args.json)
    if args.json:
        print(response.text)
    else:
        for entry in response.json():
            print(f"{entry['pid']}\t{entry['name']}\t{entry['definition']}")
    return 0


def _search(client: ApiClient, args: argparse.Namespace) -> int:
    params: dict[str, object] = {"q": args.query, "k": args.k}
    if args.w_sparse is not None:
        params["w_sparse"] = args.w_sparse
    response = client.get("/api/search", params=params)
    if response.status_code != 200:
        return _fail(response, args.json)
    if args.json:
        print(response.text)
    else:
        for rank, hit in enumerate(response.json()["hits"], start=1):
            print(
                f"{rank:2d}. {hit['fused_score']:.4f}  {hit['statement_pid']}  {hit['label']}"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
