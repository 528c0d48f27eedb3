"""Execute validated scenarios and write their CSV/JSON outputs.

Each scenario kind maps onto one solver entry point. Everything here
is deterministic: no clocks, no randomness, fixed float formatting
(scientific, 12 significant digits), sorted JSON keys. Repeated runs
produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import ScenarioConfig, serialize
from .conventions import conventions_hash
from .kernels import rate_pair, rate_pair_numeric
from .lattice import (
    Lattice,
    build_lattice,
    build_rate_matrix,
    classify_collective_regime,
    coupling_matrix_J,
    evolve_hopping,
    evolve_single_excitation,
    symmetric_decay_rate,
)
from .meanfield import bloch_invariant, polarization_summary, solve_meanfield
from .params import ModelParams, derive
from .semiclassical import emission_slope_t0, fully_inverted, integrate_semiclassical
from .single_emitter import (
    amplitude_volterra,
    classify_single_regime,
    steady_population,
    volterra_plateau,
)

__all__ = [
    "ResultTable",
    "RunResult",
    "run_scenario",
    "write_outputs",
    "packaged_scenarios",
    "load_packaged",
]


@dataclass(frozen=True, eq=False)
class ResultTable:
    """One output table: named columns, one unit label per column."""

    name: str
    columns: tuple[str, ...]
    units: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.columns):
            raise ValueError("rows must be 2-D with one entry per column")
        if len(self.units) != len(self.columns):
            raise ValueError("one unit label per column")


@dataclass(frozen=True, eq=False)
class RunResult:
    tables: tuple[ResultTable, ...]
    summary: dict[str, Any]


def _lattice_from(p: ModelParams, periodic: bool) -> Lattice:
    return build_lattice(p.dim, p.shape, p.spacing, periodic=periodic)


def _center_index(p: ModelParams) -> int:
    center = tuple(n // 2 for n in p.shape)
    return int(np.ravel_multi_index(center, p.shape))


def _run_single_decay(config: ScenarioConfig) -> RunResult:
    run, scen = config.run, config.scenario
    alpha = derive(config.model).alpha
    t_max = run["t_max_alpha2"] / alpha**2
    dt = run["dt_alpha2"] / alpha**2
    stride = run["stride"]
    detunings = scen["detunings_alpha2"]
    cols, units, curves = ["t_alpha2"], ["alpha^2 t"], []
    data: list[np.ndarray] = []
    for v in detunings:
        p = dataclasses.replace(config.model, detuning=v * alpha**2)
        res = amplitude_volterra(p, t_max, dt)
        pop = np.abs(res.series.values[::stride]) ** 2
        if not data:
            data.append(res.series.times[::stride] * alpha**2)
        data.append(pop)
        cols.append(f"pop_d{v:g}")
        units.append("|A|^2")
        curves.append(
            {
                "detuning_alpha2": float(v),
                "regime": classify_single_regime(alpha, p.detuning),
                "plateau_ideal": steady_population(alpha, p.detuning),
                "population_final": float(pop[-1]),
                "volterra_error": float(res.error_estimate),
            }
        )
    table = ResultTable(
        name="population",
        columns=tuple(cols),
        units=tuple(units),
        rows=np.column_stack(data),
    )
    return RunResult(
        tables=(table,),
        summary={"alpha": alpha, "curves": curves},
    )


def _run_steady_scan(config: ScenarioConfig) -> RunResult:
    run, scen = config.run, config.scenario
    ratios, deltas = scen["ratios"], scen["deltas_alpha2"]
    method = scen["method"]
    cols = ["delta_alpha2", "plateau_ideal"]
    units = ["Delta/alpha^2", "|A|^2"]
    data = [np.asarray(deltas, dtype=float)]
    alpha_any = derive(config.model).alpha
    data.append(np.array([steady_population(alpha_any, v * alpha_any**2) for v in deltas]))
    ratio_stats = []
    for ratio in ratios:
        p_r = dataclasses.replace(config.model, trap=config.model.rabi / ratio)
        alpha = derive(p_r).alpha
        vals = []
        for v in deltas:
            p = dataclasses.replace(p_r, detuning=v * alpha**2)
            if method == "volterra":
                vals.append(
                    volterra_plateau(
                        p,
                        t_max=run["t_max_alpha2"] / alpha**2,
                        dt=run["dt_alpha2"] / alpha**2,
                    )
                )
            else:
                vals.append(steady_population(alpha, p.detuning))
        arr = np.array(vals)
        data.append(arr)
        cols.append(f"plateau_r{ratio:g}")
        units.append("|A|^2")
        ratio_stats.append(
            {
                "ratio": float(ratio),
                "max_gap_to_ideal": float(np.max(np.abs(arr - data[1]))),
            }
        )
    table = ResultTable(
        name="steady_scan",
        columns=tuple(cols),
        units=tuple(units),
        rows=np.column_stack(data),
    )
    return RunResult(
        tables=(table,),
        summary={"method": method, "threshold_alpha2": 0.5, "ratios": ratio_stats},
    )


def _run_lattice_decay(config: ScenarioConfig) -> RunResult:
    run, p = config.run, config.model
    periodic = config.scenario["boundary"] == "periodic"
    lat = _lattice_from(p, periodic)
    matrix = build_rate_matrix(p, lat)
    a0 = np.ones(p.n_sites) / np.sqrt(p.n_sites)
    traj = evolve_single_excitation(matrix, a0, run["t_max"], run["dt"], rtol=run["rtol"])
    stride = run["stride"]
    times = traj.times[::stride]
    vals = traj.values[::stride]
    pop_total = np.sum(np.abs(vals) ** 2, axis=1)
    pop_center = np.abs(vals[:, _center_index(p)]) ** 2
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        gamma_coll = symmetric_decay_rate(matrix)
    d = derive(p)
    assert d.xi is not None and d.chi is not None
    table = ResultTable(
        name="decay",
        columns=("t", "pop_total", "pop_center"),
        units=("1/Omega", "1", "1"),
        rows=np.column_stack([times, pop_total, pop_center]),
    )
    return RunResult(
        tables=(table,),
        summary={
            "boundary": config.scenario["boundary"],
            "gamma0": d.gamma0,
            "gamma_coll": gamma_coll,
            "rate_spread_flagged": bool(caught),
            "xi": d.xi,
            "chi": d.chi,
            "regime": classify_collective_regime(d.xi, d.chi, p.n_sites),
            "population_final": float(pop_total[-1]),
        },
    )


def _run_superradiance(config: ScenarioConfig) -> RunResult:
    run, p0 = config.run, config.model
    xis = config.scenario["xis"]
    n_points = run["n_points"]
    t_grid = np.linspace(0.0, run["t_max_gamma0"], n_points)
    data = [t_grid]
    cols, units, curves = ["t_gamma0"], ["Gamma0 t"], []
    m_sites = p0.n_sites
    for xi in xis:
        k0 = 1.0 / (xi * p0.spacing)
        p = dataclasses.replace(p0, detuning=k0**2 / (2.0 * p0.mass))
        d = derive(p)
        assert d.gamma0 is not None and d.xi is not None and d.chi is not None
        matrix = build_rate_matrix(p, _lattice_from(p, periodic=True))
        traj = integrate_semiclassical(
            fully_inverted(m_sites), matrix, run["t_max_gamma0"] / d.gamma0
        )
        scale = m_sites * d.gamma0
        data.append(np.interp(t_grid, traj.times * d.gamma0, traj.rate / scale))
        cols.append(f"rate_xi{xi:g}")
        units.append("R/(M Gamma0)")
        slope = emission_slope_t0(matrix)
        curves.append(
            {
                "xi": float(xi),
                "detuning": p.detuning,
                "gamma0": d.gamma0,
                "initial_rate_over_mgamma0": float(traj.rate[0] / scale),
                "slope0_closed": slope,
                "slope0_sign": "+" if slope > 0 else "-",
                "identity_drift_max": float(np.max(np.abs(traj.identity_drift))),
                "regime": classify_collective_regime(d.xi, d.chi, m_sites),
            }
        )
    table = ResultTable(
        name="emission",
        columns=tuple(cols),
        units=tuple(units),
        rows=np.column_stack(data),
    )
    return RunResult(tables=(table,), summary={"n_sites": m_sites, "curves": curves})


def _run_hopping(config: ScenarioConfig) -> RunResult:
    run, p = config.run, config.model
    lat = _lattice_from(p, periodic=True)
    coupling = coupling_matrix_J(p, lat)
    center = _center_index(p)
    if config.scenario["initial"] == "center":
        a0 = np.zeros(p.n_sites, dtype=complex)
        a0[center] = 1.0
    else:
        a0 = np.ones(p.n_sites, dtype=complex) / np.sqrt(p.n_sites)
    traj = evolve_hopping(coupling, a0, run["t_max"], dt=run.get("dt"), rtol=run["rtol"])
    stride = run["stride"]
    times = traj.times[::stride]
    vals = traj.values[::stride]
    probs = np.abs(vals) ** 2
    neighbors = [i for i in (center - 1, center + 1) if 0 <= i < p.n_sites and i != center]
    norm_dev = np.abs(probs.sum(axis=1) - 1.0)
    d = derive(p)
    table = ResultTable(
        name="transport",
        columns=("t", "pop_start", "pop_neighbors", "norm_dev"),
        units=("1/Omega", "1", "1", "1"),
        rows=np.column_stack(
            [times, probs[:, center], probs[:, neighbors].sum(axis=1), norm_dev]
        ),
    )
    return RunResult(
        tables=(table,),
        summary={
            "xi": d.xi,
            "j_nearest": float(coupling.entries[center, neighbors[0]].real) if neighbors else 0.0,
            "norm_dev_max": float(norm_dev.max()),
            "initial": config.scenario["initial"],
        },
    )


def _run_meanfield(config: ScenarioConfig) -> RunResult:
    run, scen, p = config.run, config.scenario, config.model
    lat = _lattice_from(p, periodic=True)
    traj = solve_meanfield(p, lat, scen["y0"], scen["z0"], run["t_max"], run["dt"])
    summary = polarization_summary(traj, scen["tail_fraction"])
    inv = bloch_invariant(traj)
    stride = run["stride"]
    table = ResultTable(
        name="polarization",
        columns=("t", "re_y", "im_y", "abs_y", "z"),
        units=("1/Omega", "1", "1", "1", "1"),
        rows=np.column_stack(
            [
                traj.times[::stride],
                traj.y[::stride].real,
                traj.y[::stride].imag,
                np.abs(traj.y[::stride]),
                traj.z[::stride],
            ]
        ),
    )
    out: dict[str, Any] = {
        "y0": scen["y0"],
        "z0": scen["z0"],
        "y_st": {"re": summary.y_st.real, "im": summary.y_st.imag, "abs": abs(summary.y_st)},
        "z_st": summary.z_st,
        "converged": summary.converged,
        "bloch_drift_max": float(np.max(np.abs(inv - inv[0]))),
    }
    if scen["y0"] > 0:
        out["growth_factor"] = float(np.max(np.abs(traj.y)) / scen["y0"])
    return RunResult(tables=(table,), summary=out)


def _run_rates_table(config: ScenarioConfig) -> RunResult:
    p = config.model
    seps = config.scenario["separations"]
    tol = config.run["quad_tol"]
    rows = []
    worst = 0.0
    for n in seps:
        r = np.array([n * p.spacing, 0.0, 0.0])
        closed = rate_pair(p, r)
        numeric = rate_pair_numeric(p, r, tol=tol)
        rows.append(
            [
                n,
                closed.value.real,
                closed.value.imag,
                numeric.value.real,
                numeric.value.imag,
                numeric.error_bound or 0.0,
            ]
        )
        worst = max(worst, abs(closed.value - numeric.value) / abs(closed.value))
    d = derive(p)
    table = ResultTable(
        name="rates",
        columns=("separation", "re_closed", "im_closed", "re_quad", "im_quad", "quad_bound"),
        units=("d0", "Omega", "Omega", "Omega", "Omega", "Omega"),
        rows=np.array(rows, dtype=float),
    )
    return RunResult(
        tables=(table,),
        summary={
            "side": "above_band" if p.detuning > 0 else "below_band",
            "xi": d.xi,
            "gamma0_abs": d.gamma0_abs,
            "max_rel_deviation": worst,
        },
    )


_RUNNERS = {
    "single_decay": _run_single_decay,
    "steady_state_scan": _run_steady_scan,
    "lattice_decay": _run_lattice_decay,
    "superradiance": _run_superradiance,
    "hopping": _run_hopping,
    "meanfield": _run_meanfield,
    "rates_table": _run_rates_table,
}


def run_scenario(config: ScenarioConfig) -> RunResult:
    """Execute one validated scenario; returns tables plus scalar summary."""
    return _RUNNERS[config.kind](config)


def _format_float(x: float) -> str:
    return f"{x:.11e}"


def _provenance(config: ScenarioConfig, units: tuple[str, ...]) -> list[str]:
    lines = [f"# mwemit {__version__}", f"# conventions {conventions_hash()}"]
    lines += [f"# {line}" if line else "#" for line in serialize(config).splitlines()]
    lines.append(f"# units: {', '.join(units)}")
    return lines


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_outputs(result: RunResult, config: ScenarioConfig, out_dir: str | Path | None = None) -> list[Path]:
    """Write one CSV per table and one JSON summary; returns the paths.

    Output directory precedence: explicit argument, then the config's
    [output] directory, then outputs/<name>.
    """
    if out_dir is None:
        out_dir = config.output.directory or Path("outputs") / config.name
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    single = len(result.tables) == 1
    if "csv" in config.output.formats:
        for table in result.tables:
            stem = config.name if single else f"{config.name}_{table.name}"
            path = out_dir / f"{stem}.csv"
            lines = _provenance(config, table.units)
            lines.append(",".join(table.columns))
            for row in table.rows:
                lines.append(",".join(_format_float(x) for x in row))
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)
    if "json" in config.output.formats:
        path = out_dir / f"{config.name}_summary.json"
        payload = {
            "name": config.name,
            "kind": config.kind,
            "version": __version__,
            "conventions": conventions_hash(),
            "results": _json_ready(result.summary),
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written


def packaged_scenarios() -> dict[str, str]:
    """Named scenarios shipped with the package: name -> description."""
    out = {}
    root = resources.files("mwemit").joinpath("scenarios")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".cfg"):
            first = entry.read_text(encoding="utf-8").splitlines()[0]
            out[entry.name[:-4]] = first.lstrip("# ").strip()
    return out


def load_packaged(name: str) -> str:
    """Text of a shipped scenario config."""
    entry = resources.files("mwemit").joinpath("scenarios", f"{name}.cfg")
    if not entry.is_file():
        known = ", ".join(sorted(packaged_scenarios()))
        raise FileNotFoundError(f"no packaged scenario '{name}'; known: {known}")
    return entry.read_text(encoding="utf-8")
