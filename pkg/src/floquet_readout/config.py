"""Run configuration: presets, TOML files, command-line overrides and the echo.

A configuration is built in layers, later ones winning: named preset, config
file, `--set section.key=value` overrides, then dedicated CLI flags. Files
and the echo use four flat TOML sections:

    [drive]   B_x_T, g_ex, g_hx, Omega1p_GHz, Delta1_GHz, Omega2p_GHz,
              Omega2m_GHz, Delta2_GHz ("auto" or omitted: resonant with target)
    [rates]   Gamma_ab (|a> -> |b>), gamma_ab (dephasing of ρ_ab), ns⁻¹
    [readout] epsilon, T_max_ns, grid, target, prob_model
    [engine]  M, M_max, trunc_tol, probe_times_ns, rates_angular,
              cond_threshold, ode_rel_tol, seed, threads
"""

import copy
import logging
import re
import tomllib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError
from .hamiltonian import DriveParams
from .liouville import RATE_KEY, RateMatrices
from .readout import EngineOptions, ReadoutConfig
from .utils import DRIVE_PRESETS, ENGINE_DEFAULTS, RATE_PRESETS, READOUT_DEFAULTS

logger = logging.getLogger(__name__)

SECTIONS = ("drive", "rates", "readout", "engine")

# key -> accepted kind
SCHEMA = {
    "drive": {
        "B_x_T": "float",
        "g_ex": "float",
        "g_hx": "float",
        "Omega1p_GHz": "float",
        "Delta1_GHz": "float",
        "Omega2p_GHz": "complex",
        "Omega2m_GHz": "complex",
        "Delta2_GHz": "float-or-auto",
    },
    "readout": {
        "epsilon": "float",
        "T_max_ns": "float",
        "grid": "int",
        "target": "str",
        "prob_model": "str",
    },
    "engine": {
        "M": "int-or-auto",
        "M_max": "int",
        "trunc_tol": "float",
        "probe_times_ns": "float-list",
        "rates_angular": "bool",
        "cond_threshold": "float",
        "ode_rel_tol": "float",
        "seed": "int",
        "threads": "int-or-none",
    },
}

_ASSIGNMENT = re.compile(r"^\s*([A-Za-z0-9_.\-]+)\s*=")
_SECTION = re.compile(r"^\s*\[([A-Za-z0-9_.\-]+)\]")
_TOML_LINE = re.compile(r"at line (\d+)")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run."""

    readout: ReadoutConfig
    threads: int | None = None
    layers: dict = field(default=None, compare=False, repr=False)
    preset: str = field(default="paper-sim", compare=False)

    @property
    def drive(self) -> DriveParams:
        return self.readout.drive

    @property
    def rates(self) -> RateMatrices:
        return self.readout.rates

    @property
    def engine(self) -> EngineOptions:
        return self.readout.engine

    def derive(self, key: str, value: float) -> "RunConfig":
        """New RunConfig with one numeric `section.key` replaced; integral values fill int keys."""
        section, name = _split_key(key)
        _check_key(section, name)
        if SCHEMA.get(section, {}).get(name, "").startswith("int") and float(value).is_integer():
            value = int(value)
        layers = copy.deepcopy(self.layers)
        layers[section][name] = value
        return build_run_config(layers, self.preset)


# Layers

def preset_layers(preset: str = "paper-sim") -> dict:
    if preset not in DRIVE_PRESETS:
        raise ValidationError(f"Unknown preset: {preset}. Must be one of {list(DRIVE_PRESETS)}",
                              invariant="preset")
    return {
        "drive": dict(DRIVE_PRESETS[preset]),
        "rates": dict(RATE_PRESETS[preset]),
        "readout": dict(READOUT_DEFAULTS),
        "engine": copy.deepcopy(ENGINE_DEFAULTS),
    }


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION.match(line)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return number
            continue
        assignment = _ASSIGNMENT.match(line)
        if key is not None and assignment and current == section and assignment.group(1) == key:
            return number
    return None


def _key_at_line(text: str, line: int) -> str | None:
    current = None
    for number, content in enumerate(text.splitlines(), start=1):
        header = _SECTION.match(content)
        if header:
            current = header.group(1)
        if number == line:
            assignment = _ASSIGNMENT.match(content)
            if assignment:
                return f"{current}.{assignment.group(1)}" if current else assignment.group(1)
            return current
    return None


def _check_key(section: str, key: str, text: str | None = None) -> None:
    line = _line_of(text, section, key) if text else None
    if section == "rates":
        if not RATE_KEY.match(key):
            raise ParseError("Unknown rate key", key=f"rates.{key}", line=line)
        return
    if key not in SCHEMA[section]:
        raise ParseError("Unknown key", key=f"{section}.{key}", line=line)


def _merge(layers: dict, data: dict, text: str | None = None) -> None:
    for section, values in data.items():
        if section not in SECTIONS:
            raise ParseError("Unknown section", key=section,
                             line=_line_of(text, section) if text else None)
        if not isinstance(values, dict):
            raise ParseError("Expected a table", key=section)
        for key, value in values.items():
            _check_key(section, key, text)
            layers[section][key] = value


def _parse_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw.strip()


def _split_key(name: str) -> tuple[str, str]:
    name = name.strip()
    if "." not in name:
        raise ParseError("Key must be section.key", key=name)
    section, key = name.split(".", 1)
    if section not in SECTIONS:
        raise ParseError("Unknown section", key=name)
    return section, key


def apply_overrides(layers: dict, overrides) -> dict:
    """Apply `section.key=value` strings; values are TOML literals, else bare strings.

    Raises:
        ParseError: For malformed overrides or unknown keys
    """
    for item in overrides or ():
        if "=" not in item:
            raise ParseError("Override must look like section.key=value", key=item)
        name, raw = item.split("=", 1)
        section, key = _split_key(name)
        _check_key(section, key)
        layers[section][key] = _parse_value(raw)
    return layers


# Typed construction

def _typed(section: str, key: str, value):
    kind = "float" if section == "rates" else SCHEMA[section][key]
    name = f"{section}.{key}"

    def fail(expected):
        raise ValidationError(f"{name} must be {expected}, got {value!r}", invariant=f"{name} type")

    if kind in ("float", "float-or-auto"):
        if kind == "float-or-auto" and value in (None, "auto"):
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if kind == "complex":
        if isinstance(value, bool):
            fail("a number or complex string")
        if isinstance(value, (int, float)):
            return complex(value)
        try:
            return complex(str(value).replace(" ", ""))
        except ValueError:
            fail("a number or complex string")
    if kind in ("int", "int-or-auto", "int-or-none"):
        if kind == "int-or-auto" and value == "auto":
            return None
        if kind == "int-or-none" and value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            fail("true or false")
        return value
    if kind == "str":
        if not isinstance(value, str):
            fail("a string")
        return value
    if kind == "float-list":
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            fail("a list of numbers")
        return tuple(float(v) for v in value)
    raise AssertionError(kind)


def build_run_config(layers: dict, preset: str = "paper-sim") -> RunConfig:
    """Turn merged layers into a validated RunConfig.

    Raises:
        ValidationError: Naming the violated invariant
    """
    d = {k: _typed("drive", k, v) for k, v in layers["drive"].items()}
    r = {k: _typed("readout", k, v) for k, v in layers["readout"].items()}
    e = {k: _typed("engine", k, v) for k, v in layers["engine"].items()}
    rates = RateMatrices.from_named({k: _typed("rates", k, v) for k, v in layers["rates"].items()})
    if not rates.is_completely_positive():
        logger.warning("Dephasing rates are not completely positive (margin %.3g ns⁻¹); "
                       "density matrices can lose positivity", rates.dephasing_margin)
    drive = DriveParams(
        B_x=d["B_x_T"], g_ex=d["g_ex"], g_hx=d["g_hx"], Omega1p=d["Omega1p_GHz"],
        Delta1=d["Delta1_GHz"], Omega2p=d["Omega2p_GHz"], Omega2m=d["Omega2m_GHz"],
        Delta2=d.get("Delta2_GHz"),
    )
    threads = e["threads"]
    engine = EngineOptions(
        M=e["M"], M_max=e["M_max"], trunc_tol=e["trunc_tol"], probe_times=e["probe_times_ns"],
        rates_angular=e["rates_angular"], cond_threshold=e["cond_threshold"],
        ode_rel_tol=e["ode_rel_tol"], seed=e["seed"], threads=threads or 1,
    )
    readout = ReadoutConfig(
        drive=drive, rates=rates, epsilon=r["epsilon"], T_max=r["T_max_ns"], grid=r["grid"],
        target=r["target"], prob_model=r["prob_model"], engine=engine,
    )
    return RunConfig(readout, threads, layers, preset)


def parse_config(path: str | Path | None = None, overrides=None, preset: str = "paper-sim",
                 text: str | None = None) -> RunConfig:
    """Resolve a RunConfig from a preset, an optional TOML file and overrides.

    Args:
        path: TOML file; ignored when text is given
        overrides: `section.key=value` strings applied after the file
        preset: Base preset name
        text: TOML text instead of a file

    Returns:
        Validated RunConfig

    Raises:
        FileNotFoundError: If path does not exist
        ParseError: With line/key diagnostics for malformed text or unknown keys
        ValidationError: Naming the violated invariant
    """
    layers = preset_layers(preset)
    if text is None and path is not None:
        text = Path(path).read_text(encoding="utf-8")
    if text:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            line = getattr(e, "lineno", None)
            if line is None:
                match = _TOML_LINE.search(str(e))
                line = int(match.group(1)) if match else None
            key = _key_at_line(text, line) if line else None
            raise ParseError(f"Malformed config: {e}", key=key, line=line) from e
        _merge(layers, data, text)
        logger.debug("Merged config %s over preset %s", path or "<text>", preset)
    apply_overrides(layers, overrides)
    return build_run_config(layers, preset)


# Echo

def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, complex):
        return f'"{value!r}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def config_tables(cfg: RunConfig) -> dict:
    """Resolved configuration as section -> key -> plain value (None entries dropped)."""
    drive, engine, readout = cfg.drive, cfg.engine, cfg.readout
    tables = {
        "drive": {
            "B_x_T": drive.B_x, "g_ex": drive.g_ex, "g_hx": drive.g_hx,
            "Omega1p_GHz": drive.Omega1p, "Delta1_GHz": drive.Delta1,
            "Omega2p_GHz": drive.Omega2p, "Omega2m_GHz": drive.Omega2m, "Delta2_GHz": drive.Delta2,
        },
        "rates": cfg.rates.to_named(include_zero=True),
        "readout": {
            "epsilon": readout.epsilon, "T_max_ns": readout.T_max, "grid": readout.grid,
            "target": readout.target, "prob_model": readout.prob_model,
        },
        "engine": {
            "M": "auto" if engine.M is None else engine.M, "M_max": engine.M_max,
            "trunc_tol": engine.trunc_tol, "probe_times_ns": list(engine.probe_times),
            "rates_angular": engine.rates_angular, "cond_threshold": engine.cond_threshold,
            "ode_rel_tol": engine.ode_rel_tol, "seed": engine.seed, "threads": cfg.threads,
        },
    }
    return {section: {k: v for k, v in values.items() if v is not None} for section, values in tables.items()}


def dump_config(cfg: RunConfig) -> str:
    """Resolved configuration as TOML text that parses back to an equal RunConfig."""
    lines = [f"# preset: {cfg.preset}"]
    for section, values in config_tables(cfg).items():
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {_toml_value(value)}" for key, value in values.items())
        lines.append("")
    return "\n".join(lines)
