"""Command-line client for the simulator service.

Subcommands mirror the service endpoints; by default requests run against an
in-process instance of the app, `--server URL` targets a running one. Output
files go to --out, the CLOUDMPC_OUT_DIR environment variable, or the working
directory, in that order.

Exit codes: 0 success, 2 invalid scenario configuration, 1 anything else.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

import httpx


def _read_scenario(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        print(f"error: scenario file not found: {path}", file=sys.stderr)
        raise SystemExit(1)
    except json.JSONDecodeError as exc:
        print(f"config error <file>: invalid JSON: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(path, json=payload)

    from cloudmpc.service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://cloudmpc.local",
                                     timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _config_error_text(response: httpx.Response) -> str:
    try:
        detail = response.json()["detail"]
    except Exception:
        return response.text
    if isinstance(detail, dict) and "key" in detail:
        return str(detail["message"])
    if isinstance(detail, list) and detail:
        first = detail[0]
        loc = ".".join(str(p) for p in first.get("loc", []) if p not in ("body", "scenario"))
        return f"{loc}: {first.get('msg', 'invalid value')}"
    return str(detail)


def _call(server: str | None, path: str, payload: dict) -> dict:
    response = _post(server, path, payload)
    if response.status_code == 200:
        return response.json()
    if response.status_code == 422:
        print(f"config error {_config_error_text(response)}", file=sys.stderr)
        raise SystemExit(2)
    print(f"error: {path} returned {response.status_code}: {response.text}",
          file=sys.stderr)
    raise SystemExit(1)


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("CLOUDMPC_OUT_DIR", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    # atomic per file: concurrent runs into the same directory never interleave
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
    print(f"wrote {path}")


def cmd_run(args) -> int:
    payload = {"scenario": _read_scenario(args.scenario_file), "seed": args.seed}
    data = _call(args.server, "/run", payload)
    out = _out_dir(args.out)
    _write(out / "trace.csv", data["trace_csv"])
    _write(out / "drops.csv", data["drops_csv"])
    _write(out / "metrics.json",
           json.dumps(data["metrics"], indent=2, sort_keys=True) + "\n")
    return 0


def cmd_lqr(args) -> int:
    data = _call(args.server, "/lqr", {"scenario": _read_scenario(args.scenario_file)})
    print("Riccati solution P:")
    for row in data["riccati_solution"]:
        print("  " + "  ".join(f"{v: .6g}" for v in row))
    print("gain K:")
    for row in data["gain"]:
        print("  " + "  ".join(f"{v: .6g}" for v in row))
    mags = ", ".join(f"{v:.6g}" for v in data["closed_loop_eigenvalue_magnitudes"])
    print(f"closed-loop eigenvalue magnitudes: {mags}")
    return 0


def cmd_terminal_set(args) -> int:
    data = _call(args.server, "/terminal-set",
                 {"scenario": _read_scenario(args.scenario_file)})
    out = _out_dir(args.out)
    _write(out / "terminal_set.csv", data["csv"])
    print(f"{len(data['rows'])} rows, {len(data['vertices'])} vertices")
    return 0


def cmd_sweep(args) -> int:
    payload = {"scenario": _read_scenario(args.scenario_file), "seeds": args.seeds}
    data = _call(args.server, "/sweep", payload)
    out = _out_dir(args.out)
    _write(out / "sweep.json", json.dumps(data, indent=2, sort_keys=True) + "\n")
    agg = data["aggregate"]
    for key in sorted(agg["mean"]):
        print(f"{key}: mean {agg['mean'][key]:.6g} std {agg['std'][key]:.6g}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from cloudmpc.service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudmpc",
        description="Cloud-assisted MPC simulator (client for the cloudmpc service)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out=True):
        p.add_argument("scenario_file", help="path to a scenario JSON file")
        p.add_argument("--server", default=None,
                       help="base URL of a running service (default: in-process)")
        if out:
            p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("run", help="simulate a scenario; write trace.csv, drops.csv, metrics.json")
    add_common(p)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("lqr", help="print the Riccati solution, gain, and closed-loop eigenvalues")
    add_common(p, out=False)
    p.set_defaults(func=cmd_lqr)

    p = sub.add_parser("terminal-set", help="write the terminal set rows/vertices CSV")
    add_common(p)
    p.set_defaults(func=cmd_terminal_set)

    p = sub.add_parser("sweep", help="run several seeds and write aggregate metrics")
    add_common(p)
    p.add_argument("--seeds", type=int, required=True, help="number of seeds to run")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
