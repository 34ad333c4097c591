"""Batch command-line client for the computation service.

Subcommands mirror the service endpoints one-to-one; the CLI only builds the
request model, dispatches it (in-process by default, over HTTP with
--server), and serializes the response.  Exit codes: 0 success, 1 usage,
2 domain error, 3 numeric non-convergence, 4 coefficient coverage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .errors import RsmomError


def _load_config(path: str) -> dict:
    """Optional `key = value` config file; flags override file values."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise RsmomError(f"config line without '=': {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rsmom",
        description="moments of self-dual Rankin-Selberg central values",
    )
    ap.add_argument("--server", help="dispatch to a running service URL")
    ap.add_argument("--config", help="key = value config file")
    ap.add_argument("--format", choices=["json", "csv"], default="json")
    ap.add_argument("--output", help="write result to this path")
    sub = ap.add_subparsers(dest="command")

    def add_forms(p):
        p.add_argument(
            "--form",
            action="append",
            dest="forms",
            help="delta | 11a | 37a | curve:a1,a2,a3,a4,a6 | file:path "
            "(repeat for tensor factors)",
        )
        p.add_argument("--pmax", type=int, default=None)

    p = sub.add_parser("classgroup", help="forms, structure, character table")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--conductor", type=int, default=1)

    p = sub.add_parser("central", help="one central value via the smoothed sum")
    add_forms(p)
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--conductor", type=int, default=1)
    p.add_argument("--character", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--damping", type=float, default=0.25)
    p.add_argument("--basechange-conductor", type=float, default=None)

    p = sub.add_parser("average", help="character average, route a|b|both")
    add_forms(p)
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--conductor", type=int, default=1)
    p.add_argument("--route", choices=["a", "b", "both"], default="both")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--damping", type=float, default=0.25)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-main-term", action="store_true")

    p = sub.add_parser("shifted", help="shifted convolution grid and fits")
    add_forms(p)
    p.add_argument("--q", type=int, action="append", dest="q_list")
    p.add_argument("--Y", type=float, action="append", dest="y_list")
    p.add_argument("--window", choices=["compact", "gauss_log"], default="compact")
    p.add_argument("--no-fit", action="store_true")

    p = sub.add_parser("whittaker", help="(y, W_{p,nu}(y)) table")
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--nu-real", type=float, default=0.0)
    p.add_argument("--nu-imag", type=float, default=0.0)
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--weight-q", type=int, default=None)
    p.add_argument("--y", type=float, action="append", dest="y_values")

    sub.add_parser("selftest", help="fast invariant sweep")
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8707)
    return ap


def _dispatch(path: str, payload: dict, server: str | None) -> dict:
    if server:
        import httpx

        r = httpx.post(f"{server.rstrip('/')}{path}", json=payload, timeout=3600.0)
        if r.status_code != 200:
            detail = r.json().get("detail", {})
            raise RsmomError(detail.get("message", r.text))
        return r.json()
    from fastapi.testclient import TestClient

    from .service import app

    with TestClient(app, raise_server_exceptions=False) as client:
        r = client.post(path, json=payload)
    if r.status_code != 200:
        detail = r.json().get("detail", {})
        msg = detail.get("message", str(detail)) if isinstance(detail, dict) else str(detail)
        exc = RsmomError(msg)
        exc.exit_code = detail.get("exit_code", 2) if isinstance(detail, dict) else 2
        raise exc
    return r.json()


def _to_csv(command: str, data: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if command == "average":
        rep = data["report"]
        w.writerow(["row_type", "conductor", "value"])
        for row in rep["per_character"]:
            w.writerow(["character", row["conductor"], repr(row["value"])])
        for name in ("H", "H_route_b", "main_term", "residual", "route_gap"):
            if rep.get(name) is not None:
                w.writerow([name, "", repr(rep[name])])
    elif command == "shifted":
        w.writerow(["Y", "q", "S", "S_normalized"])
        for row in data["grid"]:
            w.writerow([row["Y"], row["q"], repr(row["S"]), repr(row["S_normalized"])])
    elif command == "whittaker":
        w.writerow(["y", "value"])
        for y, v in data["rows"]:
            w.writerow([y, repr(v)])
    else:
        raise RsmomError(f"no CSV serialization for '{command}'")
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if args.command is None:
        ap.print_usage()
        return 1
    cfg = {}
    if args.config:
        try:
            cfg = _load_config(args.config)
        except (OSError, RsmomError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    def get(name, default=None):
        val = getattr(args, name, None)
        if val in (None, []) and name in cfg:
            return cfg[name]
        return val if val not in (None, []) else default

    try:
        if args.command == "serve":
            import uvicorn

            from .service import app

            uvicorn.run(app, host=args.host, port=args.port)
            return 0
        if args.command == "selftest":
            data = _dispatch("/selftest", {}, args.server)
            print(json.dumps(data, indent=2, sort_keys=True))
            return 0 if data["passed"] else 3
        if args.command == "classgroup":
            payload = {
                "discriminant": int(get("disc")),
                "conductor": int(get("conductor", 1)),
            }
            data = _dispatch("/classgroup", payload, args.server)
        elif args.command == "central":
            payload = {
                "forms": get("forms", ["delta"]) or ["delta"],
                "discriminant": int(get("disc")),
                "conductor": int(get("conductor", 1)),
                "character_index": get("character"),
                "k": get("k"),
                "damping": float(get("damping", 0.25)),
                "p_max": int(get("pmax", 10_000) or 10_000),
                "basechange_conductor": get("basechange_conductor"),
            }
            data = _dispatch("/central", payload, args.server)
        elif args.command == "average":
            payload = {
                "forms": get("forms", ["delta"]) or ["delta"],
                "discriminant": int(get("disc")),
                "conductor": int(get("conductor", 1)),
                "route": get("route", "both"),
                "k": get("k"),
                "damping": float(get("damping", 0.25)),
                "p_max": int(get("pmax", 10_000) or 10_000),
                "threads": int(get("threads", 1)),
                "with_main_term": not args.no_main_term,
            }
            data = _dispatch("/average", payload, args.server)
        elif args.command == "shifted":
            payload = {
                "forms": get("forms", ["delta"]) or ["delta"],
                "q_list": [int(v) for v in (get("q_list") or [1, 2, 4, 8])],
                "y_list": [float(v) for v in (get("y_list") or [1e3, 1e4, 1e5, 1e6])],
                "window": get("window", "compact"),
                "p_max": int(get("pmax", 1_000_000) or 1_000_000),
                "fit": not args.no_fit,
            }
            data = _dispatch("/shifted", payload, args.server)
        elif args.command == "whittaker":
            payload = {
                "p": float(get("p", 0.0)),
                "nu_real": float(get("nu_real", 0.0)),
                "nu_imag": float(get("nu_imag", 0.0)),
                "normalized": bool(args.normalized),
                "weight_q": get("weight_q"),
                "y_values": [float(v) for v in (get("y_values") or [0.5, 1.0, 2.0])],
            }
            data = _dispatch("/whittaker", payload, args.server)
        else:
            ap.print_usage()
            return 1
    except RsmomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code

    text = (
        json.dumps(data, indent=2, sort_keys=True)
        if args.format == "json"
        else _to_csv(args.command, data)
    )
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + ("\n" if not text.endswith("\n") else ""))
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
