"""Read mwemit CSV tables and draw one curve per data column."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spec import FigureSpec


class DataError(ValueError):
    """Input CSV unusable for the requested figure."""


@dataclass(frozen=True)
class Table:
    path: Path
    columns: tuple[str, ...]
    units: tuple[str, ...]
    data: np.ndarray  # (rows, columns)
    meta: dict[str, str]  # provenance: version, conventions


def read_table(path: Path) -> Table:
    """Parse a provenance-headed CSV; tolerant of nothing else."""
    if not path.is_file():
        raise DataError(f"input CSV not found: {path}")
    header: tuple[str, ...] | None = None
    units: tuple[str, ...] = ()
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if raw.startswith("#"):
            body = raw.lstrip("#").strip()
            if body.startswith("units:"):
                units = tuple(u.strip() for u in body[len("units:") :].split(","))
            elif body.startswith("mwemit "):
                meta["version"] = body.split(None, 1)[1]
            elif body.startswith("conventions "):
                meta["conventions"] = body.split(None, 1)[1]
            continue
        if not raw.strip():
            continue
        if header is None:
            header = tuple(c.strip() for c in raw.split(","))
            continue
        try:
            row = [float(x) for x in raw.split(",")]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric cell ({exc})") from exc
        if len(row) != len(header):
            raise DataError(
                f"{path}:{lineno}: row has {len(row)} cells but header lists "
                f"{len(header)} columns"
            )
        rows.append(row)
    if header is None:
        raise DataError(f"{path}: no header row found")
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return Table(path=path, columns=header, units=units, data=data, meta=meta)


def _column(table: Table, name: str) -> np.ndarray:
    try:
        idx = table.columns.index(name)
    except ValueError:
        available = ", ".join(table.columns)
        raise DataError(
            f"column '{name}' not found in {table.path}; available: {available}"
        ) from None
    return table.data[:, idx]


_MARKED = {"steady_scan"}
_LOG_Y = {"population_log"}


def build_figure(spec: FigureSpec):
    """Draw the figure described by spec; returns (fig, ax), not yet saved.

    The x axis is each table's first column; every other column (or the
    spec's explicit subset) becomes one curve labeled by its column name,
    which is the legend metadata the CSV header provides.
    """
    tables = [read_table(p) for p in spec.inputs]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        style = "o-" if spec.kind in _MARKED else "-"
        for table in tables:
            x = table.data[:, 0]
            wanted = spec.columns or table.columns[1:]
            for name in wanted:
                if name == table.columns[0]:
                    continue
                y = _column(table, name)
                label = name if len(tables) == 1 else f"{table.path.stem}:{name}"
                ax.plot(x, y, style, markersize=3, linewidth=1.2, label=label)
        if spec.kind in _LOG_Y:
            ax.set_yscale("log")
        ax.set_xlabel(spec.xlabel or _default_xlabel(tables[0]))
        ax.set_ylabel(spec.ylabel)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
    except Exception:
        plt.close(fig)
        raise
    return fig, ax


def render(spec: FigureSpec) -> Path:
    """Build the figure and write it to spec.output."""
    fig, _ = build_figure(spec)
    try:
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, dpi=150)
    finally:
        plt.close(fig)
    return spec.output


def _default_xlabel(table: Table) -> str:
    name = table.columns[0]
    if table.units and len(table.units) == len(table.columns):
        return f"{name} [{table.units[0]}]"
    return name
