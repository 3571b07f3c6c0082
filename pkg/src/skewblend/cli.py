"""Command-line front end: ``skewblend <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 certification
failure or a failed computation.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import jobs
from .errors import ConfigError, OracleMismatch, SkewBlendError


def _value(text: str):
    """--set values are JSON when they parse as JSON, strings otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skewblend", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in jobs.COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} job")
        sp.add_argument("--config", help="JSON job config; --set entries override its params")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help=f"parameter override; keys: {', '.join(sorted(jobs.COMMANDS[name]))}")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory (default: out)")
        sp.add_argument("--workers", type=int, default=None,
                        help=f"worker processes (default: ${jobs.WORKERS_ENV} or 1)")
    sp = sub.add_parser("pin", help="recompute or check a regression-pinned oracle value")
    sp.add_argument("oracle", nargs="?", help="oracle id; omit with --list")
    sp.add_argument("--recompute", action="store_true", help="recompute main path and oracle, then store")
    sp.add_argument("--store", default=None, help=f"pin store (default: ${jobs.PIN_STORE_ENV} or pins.json)")
    sp.add_argument("--list", action="store_true", help="list registered oracles")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--workers", type=int, default=None)
    return ap


def _config(args) -> jobs.JobConfig:
    base = {"command": args.command}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = jobs.JobConfig.from_json(fh.read())
        except (OSError, ConfigError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
        if cfg.command != args.command:
            raise ConfigError(f"{args.config}: config is for {cfg.command!r}, not {args.command!r}")
        base = cfg.to_dict()
    params = dict(base.get("params", {}))
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        params[key] = _value(val)
    base["params"] = params
    if args.seed is not None:
        base["seed"] = args.seed
    if args.out is not None:
        base["out"] = args.out
    return jobs.JobConfig.from_dict(base)


def _pin(args) -> int:
    if args.list:
        for k, o in sorted(jobs.ORACLES.items()):
            print(f"{k}: {o.description}")
        return jobs.EXIT_OK
    if not args.oracle:
        print("pin: an oracle id is required (see --list)", file=sys.stderr)
        return jobs.EXIT_USAGE
    store = args.store or jobs.default_store()
    try:
        entry = jobs.pin(args.oracle, args.recompute, store)
    except KeyError:
        print(f"pin: no stored value for {args.oracle!r} in {store}; "
              f"run 'skewblend pin {args.oracle} --recompute' first", file=sys.stderr)
        return jobs.EXIT_USAGE
    except OracleMismatch as exc:
        print(f"pin: {exc}", file=sys.stderr)
        return jobs.EXIT_FAILED
    print(jobs.dumps(entry), end="")
    return jobs.EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return jobs.EXIT_OK if exc.code == 0 else jobs.EXIT_USAGE
    try:
        if args.command == "pin":
            return _pin(args)
        cfg = _config(args)
        rep = jobs.run(cfg, args.workers)
    except ConfigError as exc:
        where = f" (config {args.config})" if getattr(args, "config", None) else ""
        print(f"{args.command}: {exc}{where}", file=sys.stderr)
        return jobs.EXIT_USAGE
    except SkewBlendError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return jobs.EXIT_FAILED
    if rep.message:
        print(rep.message, file=sys.stderr)
    print(jobs.dumps({"exit_code": rep.exit_code, "artifacts": rep.artifacts}), end="")
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
