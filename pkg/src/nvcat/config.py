"""Scenario configuration: an INI file with a fixed schema.

Precedence is ``--set`` flags > file > per-experiment defaults > schema
defaults.  Frequencies are ordinary frequencies in Hz (converted with 2π),
pressure is in Torr (converted with 1 Torr = 133.322 Pa).
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .units import ExperimentParams, torr_to_pa

EXPERIMENTS = (
    "fidelity-scan",
    "fock-ladder",
    "qnd",
    "cat",
    "interference",
    "thermal",
    "decoherence",
    "sweep-Dm",
    "table-numbers",
)
SWEEP_AXES = ("G", "f_m2", "d", "nbar", "s")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _float(v: str) -> float:
    x = float(v)
    if not math.isfinite(x):
        raise ValueError("must be finite")
    return x


def _opt_float(v: str):
    return None if v.strip().lower() in ("", "none", "auto") else _float(v)


def _int(v: str) -> int:
    return int(v)


def _floats(v: str) -> list:
    return [_float(x) for x in v.replace(";", ",").split(",") if x.strip()]


def _ints(v: str) -> list:
    return [int(x) for x in v.split(",") if x.strip()]


def _signs(v: str) -> list:
    out = []
    for x in v.split(","):
        x = x.strip()
        if not x:
            continue
        if x not in ("+", "-"):
            raise ValueError(f"sign must be + or -, got {x!r}")
        out.append(x)
    return out


def _str(v: str) -> str:
    return v.strip()


def _choice(options):
    def parse(v: str) -> str:
        v = v.strip()
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v

    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: str
    check: Callable[[Any], bool] | None
    help: str


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _opt_nonneg(x):
    return x is None or x >= 0


def _all(pred):
    return lambda xs: all(pred(x) for x in xs)


def _pow2(x):
    return x >= 2 and not (x & (x - 1))


SCHEMA: dict[str, dict[str, Key]] = {
    "scenario": {
        "experiment": Key(_choice(EXPERIMENTS), "table-numbers", None, "which experiment to run"),
    },
    "params": {
        "d": Key(_float, "30e-9", _pos, "diamond diameter [m]"),
        "rho": Key(_float, "3500", _pos, "diamond density [kg/m^3]"),
        "f_m0": Key(_float, "20e3", _pos, "initial trap frequency [Hz]"),
        "f_m1": Key(_float, "20e3", _pos, "trap frequency after the state-preserving sweep [Hz]"),
        "f_m2": Key(_float, "20e3", _pos, "final trap frequency for the cat protocol [Hz]"),
        "G": Key(_float, "3e4", _nonneg, "magnetic field gradient [T/m]"),
        "P_torr": Key(_float, "1e-11", _nonneg, "background gas pressure [Torr]"),
        "T_b": Key(_float, "4.5", _nonneg, "background gas temperature [K]"),
        "T_i": Key(_float, "300", _nonneg, "internal temperature of the diamond [K]"),
        "m_a": Key(_float, "4.83e-26", _pos, "gas molecule mass [kg]"),
        "flight_time": Key(_float, "10e-3", _pos, "free-flight time [s]"),
        "z_width": Key(_opt_float, "auto", _opt_nonneg, "interference width for blackbody decoherence [m]; auto = D_m"),
        "Im_eps": Key(_opt_float, "auto", _opt_nonneg, "Im[(eps-1)/(eps+2)]; auto = calibrated 3 Hz value"),
        "qnd_detuning": Key(_float, "5", _pos, "||Omega| - omega_m/2| in units of lambda"),
        "T2": Key(_float, "1.8e-3", _pos, "spin dephasing time [s]"),
    },
    "numerics": {
        "fock_dim": Key(_int, "0", _nonneg, "Fock truncation; 0 = automatic"),
        "grid_points": Key(_int, "65536", _pow2, "position grid points (power of two)"),
        "grid_extent": Key(_float, "4e-6", _pos, "position grid extent [m]"),
        "time_samples": Key(_int, "21", _pos, "density snapshots over one trap period (cat)"),
        "s_values": Key(_floats, "3,4,5,6,6.3,7,8,9,10,12,15,20,30,40", _all(lambda s: s > 2), "s = omega_m/lambda values"),
        "trace_s": Key(_floats, "6.3,10", _all(lambda s: s > 2), "s values whose fidelity-vs-time traces are written"),
        "ladder_max": Key(_int, "5", _pos, "highest Fock state for the ladder"),
        "ladder_mode": Key(_choice(("ideal", "full", "both")), "both", None, "ladder Hamiltonian"),
        "hold_time": Key(_float, "20e-6", _pos, "QND hold time [s]"),
        "qnd_n": Key(_ints, "0,1,2,3", _all(_nonneg), "phonon numbers for the QND run"),
        "n": Key(_ints, "0", _all(_nonneg), "initial Fock states for cat / interference"),
        "sign": Key(_signs, "+", None, "cat parity signs"),
        "nbar": Key(_floats, "0,0.01,0.1", _all(_nonneg), "thermal occupations"),
        "csv_stride": Key(_int, "1", _pos, "write every k-th grid point to density CSVs"),
        "workers": Key(_int, "0", _nonneg, "sweep worker processes; 0 = all cores"),
    },
    "sweep": {
        "param": Key(_choice(SWEEP_AXES), "f_m2", None, "swept parameter"),
        "values": Key(_floats, "", None, "comma-separated values in config units"),
    },
    "output": {
        "path": Key(_str, "nvcat-out", None, "output directory (NVCAT_OUTPUT_DIR overrides)"),
        "format": Key(_choice(("csv",)), "csv", None, "table format; scalar reports are always JSON"),
    },
}

# Per-experiment defaults layered between schema defaults and the file.
EXPERIMENT_DEFAULTS = {
    "fidelity-scan": {"params": {"f_m0": "0.5e6", "f_m1": "0.5e6", "f_m2": "0.5e6", "G": "1e5"}, "numerics": {"fock_dim": "64"}},
    "fock-ladder": {"params": {"f_m0": "0.5e6", "f_m1": "0.5e6", "f_m2": "0.5e6", "G": "1e5"}},
    "qnd": {"params": {"f_m0": "0.5e6", "f_m1": "0.5e6", "f_m2": "0.5e6", "G": "1e5"}},
    "cat": {"params": {"f_m0": "100e3", "f_m1": "100e3", "f_m2": "20e3", "G": "4e4"},
            "numerics": {"grid_points": "2048", "grid_extent": "32e-9", "n": "0,1"}},
    "sweep-Dm": {"params": {"G": "1e5"}},
}


def help_text() -> str:
    lines = ["configuration keys (section.key = default: description):"]
    for sec, keys in SCHEMA.items():
        for name, k in keys.items():
            lines.append(f"  {sec}.{name} = {k.default or '(empty)'}: {k.help}")
    return "\n".join(lines)


@dataclass(frozen=True)
class ScenarioConfig:
    experiment: str
    raw: dict  # section -> key -> string, fully resolved
    values: dict  # section -> key -> parsed value

    @property
    def numerics(self) -> dict:
        return self.values["numerics"]

    @property
    def output(self) -> dict:
        return self.values["output"]

    @property
    def sweep(self) -> dict:
        return self.values["sweep"]

    def params(self) -> ExperimentParams:
        p = self.values["params"]
        two_pi = 2 * math.pi
        return ExperimentParams(
            d=p["d"],
            rho=p["rho"],
            omega_m0=two_pi * p["f_m0"],
            omega_m1=two_pi * p["f_m1"],
            omega_m2=two_pi * p["f_m2"],
            G=p["G"],
            P=torr_to_pa(p["P_torr"]),
            T_b=p["T_b"],
            T_i=p["T_i"],
            m_a=p["m_a"],
            flight_time=p["flight_time"],
            z_width=p["z_width"],
            Im_eps=p["Im_eps"],
            qnd_detuning=p["qnd_detuning"],
            T2=p["T2"],
        )

    def with_overrides(self, overrides: dict) -> "ScenarioConfig":
        raw = {s: dict(k) for s, k in self.raw.items()}
        for (sec, key), v in overrides.items():
            raw[sec][key] = v
        return _finalize(raw)


def _read_file(path: Path) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (G, T_b, ...)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{sec}]")
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{path}: unknown key {sec}.{key}")
            out.setdefault(sec, {})[key] = val
    return out


def parse_override(item: str) -> tuple[tuple[str, str], str]:
    """``section.key=value`` -> ((section, key), value)."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    lhs, value = item.split("=", 1)
    if "." not in lhs:
        raise ConfigError(f"override {item!r} must name section.key")
    sec, key = lhs.strip().split(".", 1)
    if sec not in SCHEMA or key not in SCHEMA[sec]:
        raise ConfigError(f"unknown key {sec}.{key}")
    return (sec, key), value.strip()


def _finalize(raw: dict) -> ScenarioConfig:
    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for name, spec in keys.items():
            text = raw[sec][name]
            try:
                val = spec.parse(text)
            except ValueError as exc:
                raise ConfigError(f"{sec}.{name} = {text!r}: {exc}") from None
            if spec.check is not None and not spec.check(val):
                raise ConfigError(f"{sec}.{name} = {text!r} is out of range ({spec.help})")
            values[sec][name] = val
    p = values["params"]
    if values["scenario"]["experiment"] == "cat" and not (p["f_m2"] <= p["f_m1"] <= p["f_m0"]):
        raise ConfigError("params.f_m2 <= params.f_m1 <= params.f_m0 is required for the cat experiment")
    return ScenarioConfig(values["scenario"]["experiment"], raw, values)


def load(path: str | Path | None = None, overrides: dict | None = None, experiment: str | None = None) -> ScenarioConfig:
    """Resolve a configuration.  ``experiment`` (from the command line) wins over the file."""
    file_vals = _read_file(Path(path)) if path else {}
    overrides = dict(overrides or {})
    if experiment is not None:
        overrides[("scenario", "experiment")] = experiment
    exp = overrides.get(("scenario", "experiment"), file_vals.get("scenario", {}).get("experiment", SCHEMA["scenario"]["experiment"].default))
    if exp not in EXPERIMENTS:
        raise ConfigError(f"scenario.experiment = {exp!r}: must be one of {', '.join(EXPERIMENTS)}")
    raw = {sec: {k: spec.default for k, spec in keys.items()} for sec, keys in SCHEMA.items()}
    for sec, kv in EXPERIMENT_DEFAULTS.get(exp, {}).items():
        raw[sec].update(kv)
    for sec, kv in file_vals.items():
        raw[sec].update(kv)
    for (sec, key), v in overrides.items():
        raw[sec][key] = v
    return _finalize(raw)
