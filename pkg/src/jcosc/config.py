"""TOML run-configuration loading and validation.

Layout: one ``[device]`` table plus optional per-task tables.  Every key
is checked against the schema below — unknown sections or keys are hard
errors so a typo cannot silently fall back to a default.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

try:
    import tomllib  # py>=3.11
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from .errors import ConfigError
from .params import DeviceParams, QubitSign

_REQUIRED = object()


def _as_float(v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError
    f = float(v)
    if not math.isfinite(f):
        raise TypeError
    return f


def _as_int(v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError
    return v


def _as_bool(v: Any) -> bool:
    if not isinstance(v, bool):
        raise TypeError
    return v


def _as_str(v: Any) -> str:
    if not isinstance(v, str):
        raise TypeError
    return v


# section -> key -> (caster, default); _REQUIRED marks keys that must be
# present whenever the section is used by the requested task
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "device": {
        "cavity_freq_ghz": (_as_float, _REQUIRED),
        "qubit_freq_ghz": (_as_float, _REQUIRED),
        "coupling_ghz": (_as_float, _REQUIRED),
        "kappa_ghz": (_as_float, _REQUIRED),
        "drive_amp_ghz": (_as_float, _REQUIRED),
        "drive_freq_ghz": (_as_float, _REQUIRED),
        "sigma_z": (_as_int, _REQUIRED),
    },
    "grid": {
        "omega_min_ghz": (_as_float, None),
        "omega_max_ghz": (_as_float, None),
        "omega_steps": (_as_int, 1),
        "xi_min_ghz": (_as_float, None),
        "xi_max_ghz": (_as_float, None),
        "xi_steps": (_as_int, 1),
        "xi_log": (_as_bool, False),
    },
    "quantum": {
        "n_max": (_as_int, 2000),
        "n_traj": (_as_int, 200),
        "t_sample_ns": (_as_float, None),    # None -> 2.5/kappa
        "avg_window_ns": (_as_float, 0.0),
        "tol": (_as_float, 1e-8),
        "oracle": (_as_bool, False),
        "fail_on_truncation": (_as_bool, False),
    },
    "cuts": {
        "fixed_axis": (_as_str, "xi"),
        "fixed_value_ghz": (_as_float, None),
    },
    "spectra": {
        "model": (_as_str, "jc"),
        "n_max": (_as_int, 1000),
        "delta2_ghz": (_as_float, -2.0),
        "coupling2_ghz": (_as_float, 0.25),
        "ec_ghz": (_as_float, 0.2),
        "ej_ghz": (_as_float, 30.0),
        "charge_cutoff": (_as_int, 60),
        "level_cutoff": (_as_int, 10),
    },
    "run": {
        "task": (_as_str, None),             # informational, set by presets
        "seed": (_as_int, 1),
        "workers": (_as_int, 0),             # 0 -> auto
        "format": (_as_str, "csv"),
        "render_png": (_as_bool, False),
    },
}


@dataclass
class RunConfig:
    """Validated configuration: defaults merged, types checked."""
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    source: Optional[str] = None

    def get(self, section: str, key: str) -> Any:
        return self.sections[section][key]

    def set(self, section: str, key: str, value: Any) -> None:
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in section [{section}]")
        self.sections[section][key] = value

    def device(self) -> DeviceParams:
        dev = self.sections["device"]
        missing = [k for k, v in dev.items() if v is _REQUIRED]
        if missing:
            raise ConfigError(
                f"missing required [device] key(s): {', '.join(sorted(missing))}")
        sz = dev["sigma_z"]
        if sz not in (-1, 1):
            raise ConfigError(f"sigma_z must be -1 or +1, got {sz}")
        try:
            return DeviceParams(
                cavity_freq=dev["cavity_freq_ghz"],
                qubit_freq=dev["qubit_freq_ghz"],
                coupling=dev["coupling_ghz"],
                cavity_decay=dev["kappa_ghz"],
                drive_amp=dev["drive_amp_ghz"],
                drive_freq=dev["drive_freq_ghz"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def sigma(self) -> QubitSign:
        return QubitSign(self.get("device", "sigma_z"))

    def snapshot(self) -> Dict[str, Dict[str, Any]]:
        """Plain-dict copy with unresolved required markers dropped."""
        return {
            s: {k: v for k, v in kv.items() if v is not _REQUIRED}
            for s, kv in self.sections.items()
        }


def _empty_config() -> RunConfig:
    sections = {
        s: {k: default for k, (_, default) in keys.items()}
        for s, keys in SCHEMA.items()
    }
    return RunConfig(sections=sections)


def validate_raw(raw: Dict[str, Any], source: Optional[str] = None) -> RunConfig:
    cfg = _empty_config()
    cfg.source = source
    for section, table in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key, value in table.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            caster, _ = SCHEMA[section][key]
            try:
                cfg.sections[section][key] = caster(value)
            except TypeError:
                raise ConfigError(
                    f"bad type for [{section}] {key}: got {value!r}") from None
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from None
    return validate_raw(raw, source=path)


def default_config() -> RunConfig:
    return _empty_config()


def _toml_scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_toml(cfg: RunConfig) -> str:
    """Round-trippable TOML text of all resolved (non-None) keys."""
    lines = []
    for section, kv in cfg.sections.items():
        body = [(k, v) for k, v in kv.items()
                if v is not None and v is not _REQUIRED]
        if not body:
            continue
        lines.append(f"[{section}]")
        for k, v in body:
            lines.append(f"{k} = {_toml_scalar(v)}")
        lines.append("")
    return "\n".join(lines)
