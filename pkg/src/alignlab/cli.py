"""Command-line client for the alignlab service.

The CLI builds one request per invocation, sends it to the service (an
in-process instance by default, a remote base URL with --server), writes the
returned rows to a CSV or JSON results file with the manifest JSON alongside,
and prints a short table.

Exit codes: 0 success, 2 invalid configuration, 3 run completed with flags
(overflow guards, zero-hit tails, missing flip threshold, flagged checks).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import httpx

from . import __version__
from .reporting import ResultRow, rows_to_csv, rows_to_json

_ENDPOINTS = {
    "score": "/v1/score",
    "simulate-moments": "/v1/simulate-moments",
    "ell-profile": "/v1/ell-profile",
    "transform": "/v1/transform",
    "bounds": "/v1/bounds",
    "rate": "/v1/rate",
    "verify-all": "/v1/verify-all",
}


class _InProcessTransport(httpx.BaseTransport):
    """Serve requests against the ASGI app without a network socket."""

    def __init__(self):
        from .service import create_app

        self._asgi = httpx.ASGITransport(app=create_app())

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def call():
            response = await self._asgi.handle_async_request(request)
            content = await response.aread()
            return response.status_code, response.headers, content

        status, headers, content = asyncio.run(call())
        return httpx.Response(status_code=status, headers=headers, content=content)


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    return httpx.Client(base_url="http://alignlab.internal", transport=_InProcessTransport(), timeout=None)


def _float_list(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _add_common(sub: argparse.ArgumentParser, *, reps_default: Optional[int]) -> None:
    sub.add_argument("--n", type=int, default=None, help="sequence length")
    sub.add_argument("--p", type=float, default=None, help="probability of a 1")
    if reps_default is not None:
        sub.add_argument("--reps", type=int, default=None, help=f"replicates (default {reps_default})")
    sub.add_argument("--seed", type=int, default=None, help="master seed (random and recorded if omitted)")
    sub.add_argument("--workers", type=int, default=None, help="worker threads (default $ALIGNLAB_WORKERS or 1)")
    sub.add_argument("--config", type=str, default=None, help="JSON config file; flags override its keys")
    sub.add_argument("--server", type=str, default=None, help="service base URL (default: in-process)")
    sub.add_argument("--output", type=str, default=None, help="results file path")
    sub.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None, help="results format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alignlab",
        description="Alignment-score Monte Carlo lab (thin client over the alignlab service)",
    )
    parser.add_argument("--version", action="version", version=f"alignlab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sc = subs.add_parser("score", help="score one pair of sequences")
    sc.add_argument("--x", type=str, default=None, help="first sequence, e.g. 1101")
    sc.add_argument("--y", type=str, default=None, help="second sequence, e.g. 1011")
    sc.add_argument("--scheme", type=str, default=None, help="JSON scheme file (default: binary LCS)")
    _add_common(sc, reps_default=None)

    mo = subs.add_parser("simulate-moments", help="mean, central moments, and exponential moments")
    mo.add_argument("--r", dest="r_list", type=str, default=None, help="comma list of moment orders")
    mo.add_argument("--s", dest="s_list", type=str, default=None, help="comma list of mgf growth rates")
    _add_common(mo, reps_default=10_000)

    el = subs.add_parser("ell-profile", help="conditional means over a zero-count window")
    el.add_argument("--u-lo", dest="u_lo", type=int, default=None)
    el.add_argument("--u-hi", dest="u_hi", type=int, default=None)
    _add_common(el, reps_default=1_000)

    tr = subs.add_parser("transform", help="flip-transformation increment experiment")
    tr.add_argument("--eps-target", dest="eps_target", type=float, default=None)
    _add_common(tr, reps_default=2_000)

    bo = subs.add_parser("bounds", help="closed-form constants and bound table")
    bo.add_argument("--eps0", type=float, default=None, help="flip gain threshold")
    bo.add_argument("--r", dest="r_list", type=str, default=None)
    bo.add_argument("--s", dest="s_list", type=str, default=None)
    _add_common(bo, reps_default=None)

    ra = subs.add_parser("rate", help="tail rates, cumulants, and their transform")
    ra.add_argument("--s", dest="s_list", type=str, default=None, help="comma list of tail levels in [0,1]")
    ra.add_argument("--t", dest="t_list", type=str, default=None, help="comma list of cumulant arguments")
    ra.add_argument("--n-grid", dest="n_grid", type=str, default=None, help="comma list of sizes for the limit fit")
    _add_common(ra, reps_default=10_000)

    va = subs.add_parser("verify-all", help="run the whole check battery once")
    va.add_argument("--eps-target", dest="eps_target", type=float, default=None)
    va.add_argument("--s", dest="s_list", type=str, default=None)
    _add_common(va, reps_default=10_000)

    sv = subs.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", type=str, default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8351)
    return parser


_REPS_DEFAULTS = {
    "simulate-moments": 10_000,
    "ell-profile": 1_000,
    "transform": 2_000,
    "rate": 10_000,
    "verify-all": 10_000,
}

_P_DEFAULTS = {"transform": 0.05, "verify-all": 0.05}


def _build_payload(args: argparse.Namespace) -> Dict:
    """Merge config-file values and flags into one request body."""
    payload: Dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            payload.update(json.load(fh))

    def put(key: str, value):
        if value is not None:
            payload[key] = value

    put("n", getattr(args, "n", None))
    put("p", getattr(args, "p", None))
    put("reps", getattr(args, "reps", None))
    put("seed", getattr(args, "seed", None))
    put("eps_target", getattr(args, "eps_target", None))
    put("eps0", getattr(args, "eps0", None))
    put("u_lo", getattr(args, "u_lo", None))
    put("u_hi", getattr(args, "u_hi", None))
    put("x", getattr(args, "x", None))
    put("y", getattr(args, "y", None))
    if getattr(args, "r_list", None):
        payload["r_list"] = _float_list(args.r_list)
    if getattr(args, "s_list", None):
        payload["s_list"] = _float_list(args.s_list)
    if getattr(args, "t_list", None):
        payload["t_list"] = _float_list(args.t_list)
    if getattr(args, "n_grid", None):
        payload["n_grid"] = _int_list(args.n_grid)
    if getattr(args, "scheme", None):
        with open(args.scheme) as fh:
            payload["scheme"] = json.load(fh)

    workers = getattr(args, "workers", None)
    if workers is None:
        workers = payload.get("workers")
    if workers is None:
        workers = int(os.environ.get("ALIGNLAB_WORKERS", "1"))
    if args.command != "score":
        payload["workers"] = workers
    payload.setdefault("reps", _REPS_DEFAULTS.get(args.command))
    payload.setdefault("p", _P_DEFAULTS.get(args.command))
    payload = {k: v for k, v in payload.items() if v is not None}
    payload.pop("output", None)
    payload.pop("format", None)
    return payload


def _write_outputs(args: argparse.Namespace, body: Dict) -> Path:
    fmt = getattr(args, "fmt", None) or "csv"
    out = getattr(args, "output", None) or f"alignlab-{args.command}.{fmt}"
    out_path = Path(out)
    rows = [ResultRow(**row) for row in body["rows"]]
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    out_path.write_text(text)
    manifest_path = out_path.parent / (out_path.stem + ".manifest.json")
    manifest_path.write_text(json.dumps(body["manifest"], indent=2, sort_keys=True) + "\n")
    return out_path


def _print_summary(args: argparse.Namespace, body: Dict, out_path: Path) -> None:
    rows = body["rows"]
    if args.command == "score" and rows:
        value = rows[0]["value"]
        print(int(value) if value == int(value) else value)
    else:
        width = max((len(r["name"]) for r in rows), default=4)
        for r in rows:
            se = "" if r["std_error"] is None else f"  +/- {r['std_error']:.6g}"
            print(f"{r['name']:<{width}}  {r['value']:.10g}{se}")
    for flag in body["flags"]:
        print(f"FLAG: {flag}", file=sys.stderr)
    manifest_path = out_path.parent / (out_path.stem + ".manifest.json")
    print(f"results: {out_path}  manifest: {manifest_path}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    payload = _build_payload(args)
    try:
        with _client(getattr(args, "server", None)) as client:
            response = client.post(_ENDPOINTS[args.command], json=payload)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 2
    if response.status_code in (400, 422):
        detail = response.json().get("detail", response.text)
        print(f"error: invalid configuration: {detail}", file=sys.stderr)
        return 2
    if response.status_code != 200:
        print(f"error: service returned {response.status_code}: {response.text}", file=sys.stderr)
        return 2
    body = response.json()
    out_path = _write_outputs(args, body)
    _print_summary(args, body, out_path)
    return 3 if body["flags"] else 0


if __name__ == "__main__":
    sys.exit(main())
