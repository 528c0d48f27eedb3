"""Command-line front end.

    mwemit run <config-or-name> [--out DIR]
    mwemit sweep <config-or-name> --key SECTION.KEY --values v1,v2,...
    mwemit list-scenarios
    mwemit --version

<config-or-name> is a path to a config file, or the name of a packaged
scenario (see list-scenarios). Exit codes: 0 success, 1 configuration
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import ScenarioConfig, parse_config
from .errors import ConfigError, ConvergenceError, QuadratureError, StepSizeError
from .runner import load_packaged, packaged_scenarios, run_scenario, write_outputs

_NUMERICAL = (ConvergenceError, QuadratureError, StepSizeError, FloatingPointError)


def _load_text(source: str) -> str:
    path = Path(source)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    if path.suffix or os.sep in source:
        raise FileNotFoundError(f"config file not found: {source}")
    return load_packaged(source)


def _override(text: str, dotted: str, value: str) -> str:
    """Set section.key = value in config text, replacing or appending."""
    if dotted.count(".") != 1:
        raise ConfigError([(0, f"sweep key must look like section.key, got '{dotted}'")])
    section, key = dotted.split(".")
    lines = text.splitlines()
    current = None
    header_at = None
    for i, line in enumerate(lines):
        body = line.split("#", 1)[0].strip()
        if body.startswith("[") and body.endswith("]"):
            current = body[1:-1].strip()
            if current == section:
                header_at = i
            continue
        if current == section and body.partition("=")[0].strip() == key:
            lines[i] = f"{key} = {value}"
            return "\n".join(lines) + "\n"
    if header_at is not None:
        lines.insert(header_at + 1, f"{key} = {value}")
    else:
        lines += ["", f"[{section}]", f"{key} = {value}"]
    return "\n".join(lines) + "\n"


def _print_config_error(exc: ConfigError) -> None:
    for lineno, message in exc.errors:
        where = f"line {lineno}: " if lineno else ""
        print(f"config error: {where}{message}", file=sys.stderr)


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = parse_config(_load_text(args.config))
    except ConfigError as exc:
        _print_config_error(exc)
        return 1
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        result = run_scenario(config)
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for path in write_outputs(result, config, out_dir=args.out):
        print(path)
    return 0


def _slug(value: str) -> str:
    return value.replace(",", "+").replace(" ", "").replace(os.sep, "_")


def _cmd_sweep(args: argparse.Namespace) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        print("config error: --values must list at least one value", file=sys.stderr)
        return 1
    try:
        base_text = _load_text(args.config)
        configs: list[ScenarioConfig] = [
            parse_config(_override(base_text, args.key, v)) for v in values
        ]
    except ConfigError as exc:
        _print_config_error(exc)
        return 1
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    base_dir = Path(args.out) if args.out else Path("outputs") / configs[0].name
    workers = min(len(configs), os.cpu_count() or 1, 4)
    try:
        # map() yields in submission order, so output order and exit
        # behavior do not depend on scheduling
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for value, config, result in zip(values, configs, pool.map(run_scenario, configs)):
                sub = base_dir / f"{args.key.replace('.', '_')}_{_slug(value)}"
                for path in write_outputs(result, config, out_dir=sub):
                    print(path)
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_list(_: argparse.Namespace) -> int:
    for name, description in packaged_scenarios().items():
        print(f"{name:15s} {description}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mwemit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mwemit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("config", help="config file path or packaged scenario name")
    p_run.add_argument("--out", help="output directory (default: outputs/<name>)")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario once per value of one key")
    p_sweep.add_argument("config", help="config file path or packaged scenario name")
    p_sweep.add_argument("--key", required=True, help="dotted key, e.g. model.detuning")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", help="base output directory (one subdirectory per value)")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_list = sub.add_parser("list-scenarios", help="show packaged scenarios")
    p_list.set_defaults(fn=_cmd_list)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
