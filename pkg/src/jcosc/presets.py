"""Named figure-reproduction presets, each expanding to a full run config.

All presets share the base device (9.07 GHz cavity, -1 GHz qubit detuning,
g = 0.2 GHz, kappa = 1 MHz) unless noted.  Drive normalization xi_1 =
kappa/sqrt(2); map axes span 0.5*xi_1 to 400*xi_1.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict

from .config import RunConfig, validate_raw
from .errors import ConfigError

_KAPPA = 1e-3
_XI1 = _KAPPA / math.sqrt(2.0)

_BASE_DEVICE = {
    "cavity_freq_ghz": 9.07,
    "qubit_freq_ghz": 8.07,
    "coupling_ghz": 0.2,
    "kappa_ghz": _KAPPA,
    "drive_amp_ghz": 0.0,
    "drive_freq_ghz": 9.07,
    "sigma_z": -1,
}

_MAP_GRID = {
    "omega_min_ghz": 9.02,
    "omega_max_ghz": 9.12,
    "xi_min_ghz": 0.5 * _XI1,
    "xi_max_ghz": 400.0 * _XI1,
    "xi_log": True,
}


@dataclass(frozen=True)
class Preset:
    name: str
    task: str
    description: str
    raw: Dict[str, Any]

    def expand(self) -> RunConfig:
        cfg = validate_raw(self.raw, source=f"preset:{self.name}")
        cfg.set("run", "task", self.task)
        return cfg


def _p(name, task, description, **sections) -> Preset:
    return Preset(name, task, description, sections)


_ALL = [
    _p("fig1b", "quantum-map",
       "Trajectory-averaged response map |<a>|(drive freq, drive amp) at "
       "t = 2.5/kappa, desk scale (n_max=2000, 200 trajectories, 60x40). "
       "Hours of CPU; raise n_max to 10000 for the full-fidelity mode.",
       device=dict(_BASE_DEVICE),
       grid={**_MAP_GRID, "omega_steps": 60, "xi_steps": 40},
       quantum={"n_max": 2000, "n_traj": 200, "t_sample_ns": 2500.0},
       run={"render_png": True}),
    _p("fig2a", "semiclassical",
       "Stationary-amplitude map with the fold (bistable) wedge between "
       "the two critical drives, 400x200 grid.",
       device=dict(_BASE_DEVICE),
       grid={**_MAP_GRID, "omega_steps": 400, "xi_steps": 200}),
    _p("fig2b", "cuts",
       "Fixed-amplitude cut at xi = 6.3*xi_1 across the fold: trajectory "
       "response next to the stationary branches.",
       device=dict(_BASE_DEVICE),
       grid={"omega_min_ghz": 9.02, "omega_max_ghz": 9.12,
             "omega_steps": 201},
       cuts={"fixed_axis": "xi", "fixed_value_ghz": 6.3 * _XI1},
       quantum={"n_max": 400, "n_traj": 200, "t_sample_ns": 2500.0}),
    _p("fig2c", "cuts",
       "Bare-frequency drive-amplitude cut (log axis): the step and its "
       "gain near the upper critical drive.",
       device=dict(_BASE_DEVICE),
       grid={"xi_min_ghz": 0.5 * _XI1, "xi_max_ghz": 400.0 * _XI1,
             "xi_steps": 120, "xi_log": True},
       cuts={"fixed_axis": "omega", "fixed_value_ghz": 9.07},
       quantum={"n_max": 2000, "n_traj": 200, "t_sample_ns": 2500.0}),
    _p("fig2d", "cuts",
       "Bare-frequency cut on a linear amplitude axis zoomed into the "
       "step region around the upper critical drive.",
       device=dict(_BASE_DEVICE),
       grid={"xi_min_ghz": 0.10, "xi_max_ghz": 0.18, "xi_steps": 120},
       cuts={"fixed_axis": "omega", "fixed_value_ghz": 9.07},
       quantum={"n_max": 2000, "n_traj": 200, "t_sample_ns": 2500.0}),
    _p("fig3a", "spectra",
       "Dressed cavity ladder for both qubit signs: mirror-symmetric "
       "about the bare frequency.",
       device=dict(_BASE_DEVICE),
       spectra={"model": "jc", "n_max": 1000}),
    _p("fig3b", "spectra",
       "Two qubits sharing the cavity (detunings -1 and -2 GHz, both "
       "couplings 0.25 GHz): spectator state breaks the mirror symmetry.",
       device={**_BASE_DEVICE, "coupling_ghz": 0.25},
       spectra={"model": "two-qubit", "n_max": 1000,
                "delta2_ghz": -2.0, "coupling2_ghz": 0.25}),
    _p("fig3c", "spectra",
       "Weakly anharmonic multilevel artificial atom (E_C=0.2 GHz, "
       "E_J=30 GHz, g=0.29 GHz): higher levels break the symmetry.",
       device={**_BASE_DEVICE, "coupling_ghz": 0.29},
       spectra={"model": "transmon", "n_max": 1000,
                "ec_ghz": 0.2, "ej_ghz": 30.0}),
]

PRESETS: Dict[str, Preset] = {p.name: p for p in _ALL}


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset '{name}' (known: {known})")
    return PRESETS[name]
