"""Command line entry point: render figure spec files."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .render import DataError, render
from .spec import SpecError, load_spec


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mwemit-figures",
        description="Render figures from mwemit CSV output tables.",
    )
    parser.add_argument(
        "--version", action="version", version=f"mwemit-figures {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render one figure spec file")
    p_render.add_argument("spec", help="path to a .spec file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "render":
        try:
            spec = load_spec(args.spec)
            out = render(spec)
        except (SpecError, DataError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(out)
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
