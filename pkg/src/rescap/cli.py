"""Thin command-line client.

Runs the pipeline in-process by default, or against a running service with
--server; either way the same report JSON and CSV tables land in --out.
Exit codes: 0 success, 2 configuration error, 3 assumption violated
(no resonance / degenerate / hypotheses unmet), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config_file
from .errors import (
    AssumptionError,
    BlowUpError,
    CapError,
    ConfigError,
    DegenerateError,
    DomainError,
    NoResonanceError,
    SolvabilityError,
    UnsupportedOrderError,
)
from .pipeline import COMMANDS, CommandResult

_CONFIG_ERRORS = (ConfigError, DomainError, UnsupportedOrderError, FileNotFoundError)
_ASSUMPTION_ERRORS = (NoResonanceError, DegenerateError, AssumptionError)
_NUMERIC_ERRORS = (BlowUpError, CapError, SolvabilityError, ArithmeticError)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rescap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("resonance", "averaged", "classify", "simulate", "capture"):
        cp = sub.add_parser(name, help=f"run the {name} analysis")
        cp.add_argument("--config", required=True, help="config file (dotted text or JSON)")
        cp.add_argument("--out", default=None, help="output directory (default: config output.directory)")
        cp.add_argument("--seed", type=int, default=None, help="override monte_carlo.seed")
        cp.add_argument("--paths", type=int, default=None, help="override the path count")
        cp.add_argument("--order", type=int, default=None, help="override the averaging order")
        cp.add_argument("--server", default=None, help="base URL of a running rescap service")
    sp = sub.add_parser("serve", help="start the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    return parser


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.monte_carlo.seed = args.seed
    if args.paths is not None:
        cfg.monte_carlo.n_paths = args.paths
        cfg.simulate.n_paths = args.paths
    if args.order is not None:
        if not 1 <= args.order <= 4:
            raise ConfigError("--order must be between 1 and 4")
        cfg.integration.order = args.order
    return cfg


def _run_remote(server: str, command: str, cfg) -> CommandResult:
    import httpx

    url = server.rstrip("/") + "/" + command
    resp = httpx.post(url, json=cfg.model_dump(), timeout=600.0)
    if resp.status_code == 422:
        raise ConfigError(resp.text)
    if resp.status_code == 409:
        raise AssumptionError(resp.text)
    if resp.status_code != 200:
        raise BlowUpError(f"service error {resp.status_code}: {resp.text}")
    body = resp.json()
    return CommandResult(report=body["report"], tables=body.get("tables", {}))


def _write_outputs(result: CommandResult, out_dir: Path, formats) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in formats:
        (out_dir / "report.json").write_text(result.report_json(), encoding="utf-8")
    if "csv" in formats:
        for name, text in result.tables.items():
            (out_dir / name).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0
    try:
        cfg = _apply_overrides(load_config_file(args.config), args)
        if args.server:
            result = _run_remote(args.server, args.command, cfg)
        else:
            result = COMMANDS[args.command](cfg)
        out_dir = Path(args.out) if args.out else Path(cfg.output.directory)
        _write_outputs(result, out_dir, cfg.output.formats)
        summary = {k: v for k, v in result.report.items() if k not in ("config", "coefficients", "paths")}
        print(json.dumps(summary, sort_keys=True))
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _ASSUMPTION_ERRORS as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return 3
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
