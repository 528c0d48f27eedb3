"""Scenario configuration: a sectioned key=value format with full validation.

Format (documented in docs/config_format.md):

    # comment
    [scenario]
    kind = single_decay
    name = fig2
    detunings_alpha2 = -8, -1, -0.2, 0.2, 8

    [model]
    trap = 50

    [run]
    t_max_alpha2 = 30

    [output]
    directory = outputs/fig2

Sections are [scenario], [model], [run], [output]. Every key is checked
against the schema of the scenario kind; validation reports all
problems at once, each with its line number, instead of stopping at
the first. parse and serialize round-trip: parse(serialize(c)) == c.
"""

from __future__ import annotations

import difflib
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ConfigError
from .params import ModelParams

__all__ = ["ScenarioConfig", "OutputSpec", "KINDS", "parse_config", "serialize"]

KINDS = (
    "single_decay",
    "steady_state_scan",
    "lattice_decay",
    "superradiance",
    "hopping",
    "meanfield",
    "rates_table",
)

_SECTIONS = ("scenario", "model", "run", "output")


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(text: str) -> int:
    try:
        return int(text, 10)
    except ValueError:
        raise ValueError(f"expected an integer, got '{text}'") from None


def _float_list(text: str) -> tuple[float, ...]:
    parts = [s.strip() for s in text.split(",") if s.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_float(s) for s in parts)


def _int_list(text: str) -> tuple[int, ...]:
    parts = [s.strip() for s in text.split(",") if s.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(_int(s) for s in parts)


def _vec3(text: str) -> tuple[float, float, float]:
    v = _float_list(text)
    if len(v) != 3:
        raise ValueError(f"expected 3 components, got {len(v)}")
    return (v[0], v[1], v[2])


def _str(text: str) -> str:
    return text


def _enum(*choices: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in choices:
            raise ValueError(f"must be one of {', '.join(choices)}; got '{text}'")
        return text

    return parse


def _formats(text: str) -> tuple[str, ...]:
    parts = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in parts if s not in ("csv", "json")]
    if bad or not parts:
        raise ValueError("formats must list csv and/or json")
    return parts


@dataclass(frozen=True)
class _Field:
    parse: Callable[[str], Any]
    default: Any = None          # None with required=False means "absent"
    required: bool = False
    check: Callable[[Any], str | None] = lambda v: None  # extra rule -> message


def _positive(v) -> str | None:
    ok = all(x > 0 for x in v) if isinstance(v, tuple) else v > 0
    return None if ok else "must be positive"


def _nonneg(v) -> str | None:
    return None if v >= 0 else "must be >= 0"


def _unit_interval(v) -> str | None:
    return None if 0 < v <= 0.9 else "must be in (0, 0.9]"


def _bounded_one(v) -> str | None:
    return None if abs(v) <= 1 else "must lie in [-1, 1]"


def _nonempty(v) -> str | None:
    return None if len(v) > 0 else "must not be empty"


# Model keys shared by the lattice-backed kinds.
_MODEL_COMMON: dict[str, _Field] = {
    "rabi": _Field(_float, 1.0, check=_positive),
    "trap": _Field(_float, 50.0, check=_positive),
    "mass": _Field(_float, 0.5, check=_positive),
}


def _model(extra: dict[str, _Field], **overrides: Any) -> dict[str, _Field]:
    out = dict(_MODEL_COMMON)
    for key, default in overrides.items():
        out[key] = _Field(out[key].parse, default, check=out[key].check)
    out.update(extra)
    return out


_SCHEMAS: dict[str, dict[str, dict[str, _Field]]] = {
    # Population decay |A(t)|^2 for a list of detunings; times in 1/alpha^2.
    "single_decay": {
        "scenario": {
            "detunings_alpha2": _Field(_float_list, required=True, check=_nonempty),
        },
        "model": _model({}),
        "run": {
            "t_max_alpha2": _Field(_float, 30.0, check=_positive),
            "dt_alpha2": _Field(_float, 0.005, check=_positive),
            "stride": _Field(_int, 50, check=_positive),
        },
    },
    # Steady trapped population vs detuning for several Omega/omega0.
    "steady_state_scan": {
        "scenario": {
            "ratios": _Field(_float_list, required=True, check=_positive),
            "deltas_alpha2": _Field(_float_list, required=True, check=_nonempty),
            "method": _Field(_enum("volterra", "analytic"), "volterra"),
        },
        "model": {
            "rabi": _MODEL_COMMON["rabi"],
            "mass": _MODEL_COMMON["mass"],
        },
        "run": {
            "t_max_alpha2": _Field(_float, 60.0, check=_positive),
            "dt_alpha2": _Field(_float, 0.008, check=_positive),
        },
    },
    # Single-excitation collective decay above the band.
    "lattice_decay": {
        "scenario": {
            "boundary": _Field(_enum("periodic", "open"), "periodic"),
        },
        "model": _model(
            {
                "detuning": _Field(_float, required=True),
                "spacing": _Field(_float, 1.0, check=_positive),
                "shape": _Field(_int_list, required=True, check=_positive),
                "laser_k": _Field(_vec3, (0.0, 0.0, 0.0)),
            }
        ),
        "run": {
            "t_max": _Field(_float, required=True, check=_positive),
            "dt": _Field(_float, required=True, check=_positive),
            "stride": _Field(_int, 1, check=_positive),
            "rtol": _Field(_float, 1e-6, check=_positive),
        },
    },
    # Fully inverted semiclassical emission rate for a list of xi.
    "superradiance": {
        "scenario": {
            "xis": _Field(_float_list, required=True, check=_positive),
        },
        "model": _model(
            {
                "spacing": _Field(_float, 5.0, check=_positive),
                "shape": _Field(_int_list, (100,), check=_positive),
            },
            trap=200.0,
        ),
        "run": {
            "t_max_gamma0": _Field(_float, 2.5, check=_positive),
            "n_points": _Field(_int, 401, check=_positive),
        },
    },
    # Coherent transport below the band (no decay channel).
    "hopping": {
        "scenario": {
            "initial": _Field(_enum("center", "uniform"), "center"),
        },
        "model": _model(
            {
                "detuning": _Field(_float, required=True),
                "spacing": _Field(_float, 5.0, check=_positive),
                "shape": _Field(_int_list, required=True, check=_positive),
            },
            trap=200.0,
        ),
        "run": {
            "t_max": _Field(_float, required=True, check=_positive),
            "dt": _Field(_float, None),
            "stride": _Field(_int, 1, check=_positive),
            "rtol": _Field(_float, 1e-9, check=_positive),
        },
    },
    # Hartree polarization growth from an explicit seed.
    "meanfield": {
        "scenario": {
            "y0": _Field(_float, 1e-6, check=_nonneg),
            "z0": _Field(_float, 1.0, check=_bounded_one),
            "tail_fraction": _Field(_float, 0.2, check=_unit_interval),
        },
        "model": _model(
            {
                "detuning": _Field(_float, 0.0),
                # default None: filled in as 10 * x0(trap, mass)
                "spacing": _Field(_float, None, check=_positive),
                "shape": _Field(_int_list, (1000,), check=_positive),
            }
        ),
        "run": {
            "t_max": _Field(_float, 4000.0, check=_positive),
            "dt": _Field(_float, 0.125, check=_positive),
            "stride": _Field(_int, 8, check=_positive),
        },
    },
    # Closed-form vs quadrature pair rates at a list of separations.
    "rates_table": {
        "scenario": {
            "separations": _Field(_float_list, required=True, check=_positive),
        },
        "model": _model(
            {
                "detuning": _Field(_float, required=True),
                "spacing": _Field(_float, 5.0, check=_positive),
                "laser_k": _Field(_vec3, (0.0, 0.0, 0.0)),
            },
            trap=200.0,
        ),
        "run": {
            "quad_tol": _Field(_float, 0.01, check=_positive),
        },
    },
}

_SCENARIO_COMMON: dict[str, _Field] = {
    "kind": _Field(_enum(*KINDS), required=True),
    "name": _Field(_str, "run"),
}

_OUTPUT_SCHEMA: dict[str, _Field] = {
    "directory": _Field(_str, ""),
    "formats": _Field(_formats, ("csv", "json")),
}


@dataclass(frozen=True)
class OutputSpec:
    directory: str = ""
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated scenario: kind, typed blocks, defaults filled."""

    kind: str
    name: str
    scenario: dict[str, Any] = field(default_factory=dict)
    model: ModelParams = field(default_factory=ModelParams)
    run: dict[str, Any] = field(default_factory=dict)
    output: OutputSpec = field(default_factory=OutputSpec)


_HEADER_RE = re.compile(r"^\[([^\]]*)\]$")


def _suggest(key: str, known) -> str:
    close = difflib.get_close_matches(key, list(known), n=1)
    return f"; did you mean '{close[0]}'?" if close else ""


def _scan(text: str, errors: list[tuple[int, str]]):
    """First pass: raw (section, key) -> (value text, line number)."""
    raw: dict[str, dict[str, tuple[str, int]]] = {s: {} for s in _SECTIONS}
    section_lines: dict[str, int] = {}
    section: str | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        m = _HEADER_RE.match(body)
        if m:
            name = m.group(1).strip()
            if name not in _SECTIONS:
                errors.append(
                    (lineno, f"unknown section [{name}]{_suggest(name, _SECTIONS)}")
                )
                section = None
            else:
                section = name
                section_lines[name] = lineno
            continue
        if "=" not in body:
            errors.append((lineno, f"expected 'key = value', got '{body}'"))
            continue
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if section is None:
            errors.append((lineno, f"key '{key}' is not inside a known [section]"))
            continue
        if key in raw[section]:
            errors.append((lineno, f"duplicate key '{key}' in [{section}]"))
            continue
        raw[section][key] = (value, lineno)
    return raw, section_lines


def _apply_schema(
    raw: dict[str, tuple[str, int]],
    schema: dict[str, _Field],
    section: str,
    section_line: int,
    errors: list[tuple[int, str]],
) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, (value, lineno) in raw.items():
        spec = schema.get(key)
        if spec is None:
            errors.append(
                (lineno, f"unknown key '{key}' in [{section}]{_suggest(key, schema)}")
            )
            continue
        try:
            parsed = spec.parse(value)
        except ValueError as exc:
            errors.append((lineno, f"key '{key}': {exc}"))
            continue
        problem = spec.check(parsed)
        if problem is not None:
            errors.append((lineno, f"key '{key}': {problem}"))
            continue
        out[key] = parsed
    for key, spec in schema.items():
        if key in out or key in raw:
            continue
        if spec.required:
            errors.append(
                (section_line, f"missing required key '{key}' in [{section}]")
            )
        elif spec.default is not None:
            out[key] = spec.default
    return out


def _default_spacing(model: dict[str, Any]) -> float:
    # meanfield lattices default to d0 = 10 x0 so neighbor overlap is small
    x0 = (2.0 * model["mass"] * model["trap"]) ** -0.5
    return 10.0 * x0


def _cross_checks(
    kind: str,
    model: dict[str, Any],
    raw_model: dict[str, tuple[str, int]],
    model_line: int,
    errors: list[tuple[int, str]],
):
    def where(key: str) -> int:
        return raw_model[key][1] if key in raw_model else model_line

    detuning = model.get("detuning")
    if detuning is None:
        return
    if kind == "rates_table" and detuning == 0:
        errors.append(
            (where("detuning"), "rates_table needs detuning != 0 (xi is undefined at 0)")
        )
    if kind == "lattice_decay" and detuning <= 0:
        errors.append(
            (where("detuning"), "lattice_decay needs detuning > 0 (band regime)")
        )
    if kind == "hopping" and detuning >= 0:
        errors.append(
            (where("detuning"), "hopping needs detuning < 0 (gap regime)")
        )


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate; raises ConfigError carrying every problem found."""
    errors: list[tuple[int, str]] = []
    raw, section_lines = _scan(text, errors)

    kind_entry = raw["scenario"].get("kind")
    if kind_entry is None:
        errors.append((section_lines.get("scenario", 0), "missing required key 'kind' in [scenario]"))
        raise ConfigError(errors)
    kind_text, kind_line = kind_entry
    if kind_text not in KINDS:
        errors.append(
            (kind_line, f"unknown scenario kind '{kind_text}'{_suggest(kind_text, KINDS)}")
        )
        raise ConfigError(errors)

    schema = _SCHEMAS[kind_text]
    scen_schema = dict(_SCENARIO_COMMON)
    scen_schema.update(schema["scenario"])
    scen = _apply_schema(
        raw["scenario"], scen_schema, "scenario", section_lines.get("scenario", 0), errors
    )
    model_line = section_lines.get("model", 0)
    model = _apply_schema(raw["model"], schema["model"], "model", model_line, errors)
    run = _apply_schema(raw["run"], schema["run"], "run", section_lines.get("run", 0), errors)
    out = _apply_schema(
        raw["output"], _OUTPUT_SCHEMA, "output", section_lines.get("output", 0), errors
    )
    if kind_text == "meanfield" and "spacing" not in model and "mass" in model and "trap" in model:
        model["spacing"] = _default_spacing(model)
    _cross_checks(kind_text, model, raw["model"], model_line, errors)

    params: ModelParams | None = None
    if not errors:
        shape = tuple(model.pop("shape", (1,)))
        try:
            params = ModelParams(dim=len(shape), shape=shape, **model)
        except ValueError as exc:
            errors.append((model_line, str(exc)))
    if errors:
        raise ConfigError(sorted(errors))
    assert params is not None
    name = scen.pop("name")
    scen.pop("kind")
    return ScenarioConfig(
        kind=kind_text,
        name=name,
        scenario=scen,
        model=params,
        run=run,
        output=OutputSpec(directory=out["directory"], formats=out["formats"]),
    )


def _format_value(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(config: ScenarioConfig) -> str:
    """Canonical text form; parse(serialize(c)) == c.

    Keys equal to their schema default are omitted; parsing fills them
    back in, so the round trip is exact without echoing every default.
    """
    schema = _SCHEMAS[config.kind]
    lines = ["[scenario]", f"kind = {config.kind}", f"name = {config.name}"]
    for key in schema["scenario"]:
        value = config.scenario.get(key)
        if value is not None and value != schema["scenario"][key].default:
            lines.append(f"{key} = {_format_value(value)}")

    model_lines = []
    model_schema = schema["model"]
    for key in model_schema:
        if key == "shape":
            value: Any = config.model.shape
        else:
            value = getattr(config.model, key)
        default = model_schema[key].default
        if config.kind == "meanfield" and key == "spacing":
            default = _default_spacing({"mass": config.model.mass, "trap": config.model.trap})
        if value != default:
            model_lines.append(f"{key} = {_format_value(value)}")
    if model_lines:
        lines.append("")
        lines.append("[model]")
        lines.extend(model_lines)

    run_lines = [
        f"{key} = {_format_value(config.run[key])}"
        for key in schema["run"]
        if config.run.get(key) is not None and config.run[key] != schema["run"][key].default
    ]
    if run_lines:
        lines.append("")
        lines.append("[run]")
        lines.extend(run_lines)

    out_lines = []
    if config.output.directory:
        out_lines.append(f"directory = {config.output.directory}")
    if config.output.formats != _OUTPUT_SCHEMA["formats"].default:
        out_lines.append(f"formats = {', '.join(config.output.formats)}")
    if out_lines:
        lines.append("")
        lines.append("[output]")
        lines.extend(out_lines)
    return "\n".join(lines) + "\n"
