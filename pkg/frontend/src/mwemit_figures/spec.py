"""Figure spec files: flat key = value, same comment rules as the data."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("population_log", "emission_rate", "meanfield", "steady_scan")


class SpecError(ValueError):
    """Malformed or incomplete figure spec."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[Path, ...]       # CSV paths, resolved against the spec file
    output: Path                   # image path, resolved the same way
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    columns: tuple[str, ...] = field(default_factory=tuple)  # empty: all data columns


def _strip(line: str) -> str:
    for marker in ("#", ";"):
        pos = line.find(marker)
        if pos >= 0:
            line = line[:pos]
    return line.strip()


def parse_spec(text: str, base: Path) -> FigureSpec:
    """Parse spec text; relative paths are taken relative to ``base``."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip(raw)
        if not body:
            continue
        key, eq, value = body.partition("=")
        if not eq:
            raise SpecError(f"line {lineno}: expected 'key = value', got '{body}'")
        key = key.strip()
        if key in pairs:
            raise SpecError(f"line {lineno}: duplicate key '{key}'")
        pairs[key] = value.strip()

    for required in ("kind", "input", "output"):
        if required not in pairs:
            raise SpecError(f"missing required key '{required}'")
    kind = pairs.pop("kind")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {', '.join(KINDS)}; got '{kind}'")

    def _resolve(p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    inputs = tuple(
        _resolve(p.strip()) for p in pairs.pop("input").split(",") if p.strip()
    )
    if not inputs:
        raise SpecError("'input' must list at least one CSV path")
    output = _resolve(pairs.pop("output"))
    columns = tuple(
        c.strip() for c in pairs.pop("columns", "").split(",") if c.strip()
    )
    known = {"xlabel", "ylabel", "title"}
    unknown = set(pairs) - known
    if unknown:
        raise SpecError(f"unknown keys: {', '.join(sorted(unknown))}")
    return FigureSpec(
        kind=kind,
        inputs=inputs,
        output=output,
        xlabel=pairs.get("xlabel", ""),
        ylabel=pairs.get("ylabel", ""),
        title=pairs.get("title", ""),
        columns=columns,
    )


def load_spec(path: str | Path) -> FigureSpec:
    path = Path(path)
    return parse_spec(path.read_text(encoding="utf-8"), path.parent)
