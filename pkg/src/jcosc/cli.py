"""``jc-osc`` command line.

Subcommands: ``semiclassical``, ``quantum-map``, ``cuts``,
``critical-points``, ``spectra``, ``presets``.  Exit codes: 0 success,
2 configuration/validation error, 3 numerical-domain error, 4 truncation
flagged while --fail-on-truncation is active.
"""

import argparse
import json
import os
import sys
import time
from typing import List, Optional

import numpy as np

from . import __version__
from .config import RunConfig, default_config, dump_toml, load_config
from .errors import ConfigError, JcOscError, TruncationError
from .params import QubitSign
from .presets import PRESETS, get_preset
from .semiclassical import critical_point_c1, critical_point_c2
from .spectra import (MultiQubitSpec, TransmonSpec, jc_ladder,
                      transmon_ladder, two_qubit_ladder)
from .sweep import (QUANTUM_COLUMNS, SPECTRA_COLUMNS, QuantumOpts,
                    SweepResult, build_axis, build_meta, check_truncation,
                    dump_trajectories, quantum_sweep, render_png,
                    semiclassical_sweep, write_result, _atomic_write_text)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_TRUNCATION = 4


def _add_global(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="TOML run configuration")
    p.add_argument("--output", metavar="PATH", help="result file path")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="parallel workers (default: JC_OSC_WORKERS or all cores)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--render-png", action="store_const", const=True,
                   default=None, help="also write a grayscale heatmap")


def _add_omega_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega-min", type=float, default=None, metavar="GHZ")
    p.add_argument("--omega-max", type=float, default=None, metavar="GHZ")
    p.add_argument("--omega-steps", type=int, default=None)


def _add_xi_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--xi-min", type=float, default=None, metavar="GHZ")
    p.add_argument("--xi-max", type=float, default=None, metavar="GHZ")
    p.add_argument("--xi-steps", type=int, default=None)
    p.add_argument("--xi-log", action="store_const", const=True, default=None,
                   help="log-spaced drive-amplitude axis")


def _add_quantum(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nmax", type=int, default=None,
                   help="Fock-space truncation")
    p.add_argument("--ntraj", type=int, default=None,
                   help="trajectories per grid point")
    p.add_argument("--tsample-ns", type=float, default=None,
                   help="sample time (default 2.5/kappa)")
    p.add_argument("--avg-window-ns", type=float, default=None,
                   help="average over the trailing window instead of one sample")
    p.add_argument("--tol", type=float, default=None,
                   help="per-step integration error tolerance")
    p.add_argument("--oracle", action="store_const", const=True, default=None,
                   help="deterministic density-matrix evolution (small nmax)")
    p.add_argument("--fail-on-truncation", action="store_const", const=True,
                   default=None, help="exit 4 if any point hits the Fock cap")
    p.add_argument("--dump-traj", metavar="DIR", default=None,
                   help="write one JSON per trajectory into DIR")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="jc-osc",
        description="Driven dispersive cavity-QED sweep toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("semiclassical",
                       help="stationary-amplitude grid with root counts")
    _add_global(p)
    _add_omega_grid(p)
    _add_xi_grid(p)

    p = sub.add_parser("quantum-map",
                       help="trajectory-ensemble response on an (omega, xi) grid")
    _add_global(p)
    _add_omega_grid(p)
    _add_xi_grid(p)
    _add_quantum(p)

    p = sub.add_parser("cuts", help="one-dimensional quantum scan")
    _add_global(p)
    _add_omega_grid(p)
    _add_xi_grid(p)
    _add_quantum(p)
    p.add_argument("--fixed-axis", choices=("xi", "omega"), default=None)
    p.add_argument("--fixed-value", type=float, default=None, metavar="GHZ")

    p = sub.add_parser("critical-points",
                       help="fold cusps of the stationary response (JSON)")
    _add_global(p)

    p = sub.add_parser("spectra", help="excitation-dependent ladder spectra")
    _add_global(p)
    p.add_argument("--model", choices=("jc", "two-qubit", "transmon"),
                   default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--delta2-ghz", type=float, default=None,
                   help="second-qubit detuning (two-qubit model)")
    p.add_argument("--coupling2-ghz", type=float, default=None,
                   help="second-qubit coupling (two-qubit model)")
    p.add_argument("--ec-ghz", type=float, default=None,
                   help="charging energy (transmon model)")
    p.add_argument("--ej-ghz", type=float, default=None,
                   help="Josephson energy (transmon model)")
    p.add_argument("--charge-cutoff", type=int, default=None)
    p.add_argument("--level-cutoff", type=int, default=None)

    p = sub.add_parser("presets", help="list or expand figure presets")
    p.add_argument("--name", default=None)
    p.add_argument("--output", metavar="FILE", default=None)

    return ap


# ---------------------------------------------------------------------------
# config assembly


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    return cfg


def _override(cfg: RunConfig, section: str, key: str, value) -> None:
    if value is not None:
        cfg.set(section, key, value)


def _apply_common(cfg: RunConfig, args) -> None:
    _override(cfg, "run", "seed", getattr(args, "seed", None))
    _override(cfg, "run", "workers", getattr(args, "workers", None))
    _override(cfg, "run", "format", getattr(args, "format", None))
    _override(cfg, "run", "render_png", getattr(args, "render_png", None))


def _apply_grid(cfg: RunConfig, args) -> None:
    _override(cfg, "grid", "omega_min_ghz", getattr(args, "omega_min", None))
    _override(cfg, "grid", "omega_max_ghz", getattr(args, "omega_max", None))
    _override(cfg, "grid", "omega_steps", getattr(args, "omega_steps", None))
    _override(cfg, "grid", "xi_min_ghz", getattr(args, "xi_min", None))
    _override(cfg, "grid", "xi_max_ghz", getattr(args, "xi_max", None))
    _override(cfg, "grid", "xi_steps", getattr(args, "xi_steps", None))
    _override(cfg, "grid", "xi_log", getattr(args, "xi_log", None))


def _apply_quantum(cfg: RunConfig, args) -> None:
    _override(cfg, "quantum", "n_max", getattr(args, "nmax", None))
    _override(cfg, "quantum", "n_traj", getattr(args, "ntraj", None))
    _override(cfg, "quantum", "t_sample_ns", getattr(args, "tsample_ns", None))
    _override(cfg, "quantum", "avg_window_ns",
              getattr(args, "avg_window_ns", None))
    _override(cfg, "quantum", "tol", getattr(args, "tol", None))
    _override(cfg, "quantum", "oracle", getattr(args, "oracle", None))
    _override(cfg, "quantum", "fail_on_truncation",
              getattr(args, "fail_on_truncation", None))


def _quantum_opts(cfg: RunConfig) -> QuantumOpts:
    q = cfg.sections["quantum"]
    if q["n_max"] < 1:
        raise ConfigError(f"n_max must be >= 1, got {q['n_max']}")
    if q["n_traj"] < 1:
        raise ConfigError(f"n_traj must be >= 1, got {q['n_traj']}")
    if q["tol"] <= 0.0:
        raise ConfigError("tol must be positive")
    return QuantumOpts(
        n_max=q["n_max"], n_traj=q["n_traj"], t_sample_ns=q["t_sample_ns"],
        avg_window_ns=q["avg_window_ns"], tol=q["tol"], oracle=q["oracle"],
        fail_on_truncation=q["fail_on_truncation"])


def resolve_workers(cfg: RunConfig) -> int:
    w = cfg.get("run", "workers")
    if w < 0:
        raise ConfigError(f"workers must be >= 0, got {w}")
    if w == 0:
        env = os.environ.get("JC_OSC_WORKERS", "").strip()
        if env:
            try:
                w = int(env)
            except ValueError:
                raise ConfigError(
                    f"JC_OSC_WORKERS must be an integer, got {env!r}") from None
            if w < 1:
                raise ConfigError(f"JC_OSC_WORKERS must be >= 1, got {w}")
    if w == 0:
        w = os.cpu_count() or 1
    return w


def _axes(cfg: RunConfig):
    g = cfg.sections["grid"]
    omega = build_axis(g["omega_min_ghz"], g["omega_max_ghz"],
                       g["omega_steps"], log=False, name="omega grid")
    xi = build_axis(g["xi_min_ghz"], g["xi_max_ghz"], g["xi_steps"],
                    log=g["xi_log"], name="xi grid")
    if np.any(xi < 0.0):
        raise ConfigError("drive amplitudes must be non-negative")
    return omega, xi


def _out_path(args, cfg: RunConfig, stem: str) -> str:
    if args.output:
        return args.output
    ext = "csv" if cfg.get("run", "format") == "csv" else "json"
    return f"{stem}.{ext}"


def _emit(result: SweepResult, cfg: RunConfig, args, task: str,
          device, sigma, workers: int, wall: float,
          png_values=None) -> List[str]:
    fmt = cfg.get("run", "format")
    out = _out_path(args, cfg, task.replace("-", "_"))
    meta = build_meta(result, device, sigma, cfg.snapshot(), task,
                      seed=cfg.get("run", "seed"), workers=workers,
                      wall_time_s=wall)
    written = write_result(result, out, fmt=fmt, meta=meta)
    if cfg.get("run", "render_png") and png_values is not None:
        png = os.path.splitext(out)[0] + ".png"
        written.append(render_png(result, png, png_values))
    for pth in written:
        print(pth)
    return written


# ---------------------------------------------------------------------------
# subcommands


def cmd_semiclassical(args) -> int:
    cfg = _load(args)
    _apply_common(cfg, args)
    _apply_grid(cfg, args)
    device, sigma = cfg.device(), cfg.sigma()
    omega, xi = _axes(cfg)
    t0 = time.monotonic()
    result = semiclassical_sweep(device, sigma, omega, xi,
                                 progress=sys.stderr.isatty())
    wall = time.monotonic() - t0
    bright_else_dim = [
        (b if b is not None else d)
        for d, b in zip(result.column("a_dim"), result.column("a_bright"))
    ]
    _emit(result, cfg, args, "semiclassical", device, sigma,
          workers=1, wall=wall, png_values=bright_else_dim)
    return EXIT_OK


def _run_quantum(args, omega, xi, cfg: RunConfig, task: str) -> int:
    device, sigma = cfg.device(), cfg.sigma()
    opts = _quantum_opts(cfg)
    workers = resolve_workers(cfg)
    seed = cfg.get("run", "seed")
    t0 = time.monotonic()
    result = quantum_sweep(device, sigma, omega, xi, opts, base_seed=seed,
                           workers=workers, progress=sys.stderr.isatty())
    wall = time.monotonic() - t0
    _emit(result, cfg, args, task, device, sigma, workers=workers,
          wall=wall, png_values=result.column("het_amp"))
    dump_dir = getattr(args, "dump_traj", None)
    if dump_dir:
        n = dump_trajectories(device, sigma, omega, xi, opts, seed, dump_dir)
        print(f"{dump_dir} ({n} trajectory files)")
    if opts.fail_on_truncation:
        check_truncation(result, opts.n_max)
    return EXIT_OK


def cmd_quantum_map(args) -> int:
    cfg = _load(args)
    _apply_common(cfg, args)
    _apply_grid(cfg, args)
    _apply_quantum(cfg, args)
    omega, xi = _axes(cfg)
    return _run_quantum(args, omega, xi, cfg, "quantum-map")


def cmd_cuts(args) -> int:
    cfg = _load(args)
    _apply_common(cfg, args)
    _apply_grid(cfg, args)
    _apply_quantum(cfg, args)
    _override(cfg, "cuts", "fixed_axis", args.fixed_axis)
    _override(cfg, "cuts", "fixed_value_ghz", args.fixed_value)
    fixed_axis = cfg.get("cuts", "fixed_axis")
    fixed_value = cfg.get("cuts", "fixed_value_ghz")
    if fixed_value is None:
        raise ConfigError("cuts: no fixed_value_ghz given")
    g = cfg.sections["grid"]
    if fixed_axis == "xi":
        if fixed_value < 0.0:
            raise ConfigError("drive amplitudes must be non-negative")
        omega = build_axis(g["omega_min_ghz"], g["omega_max_ghz"],
                           g["omega_steps"], log=False, name="omega grid")
        xi = np.array([float(fixed_value)])
    elif fixed_axis == "omega":
        xi = build_axis(g["xi_min_ghz"], g["xi_max_ghz"], g["xi_steps"],
                        log=g["xi_log"], name="xi grid")
        if np.any(xi < 0.0):
            raise ConfigError("drive amplitudes must be non-negative")
        omega = np.array([float(fixed_value)])
    else:
        raise ConfigError(f"cuts: fixed_axis must be 'xi' or 'omega', "
                          f"got '{fixed_axis}'")
    return _run_quantum(args, omega, xi, cfg, "cuts")


def cmd_critical_points(args) -> int:
    cfg = _load(args)
    _apply_common(cfg, args)
    device, sigma = cfg.device(), cfg.sigma()
    payload = {"device": cfg.snapshot().get("device", {})}
    for kind, fn in (("C1", critical_point_c1), ("C2", critical_point_c2)):
        payload[kind] = {}
        for method in ("analytic", "numeric"):
            cp = fn(device, sigma, method=method)
            payload[kind][method] = {
                "xi_ghz": cp.xi,
                "detuning_ghz": cp.detuning,
                "drive_freq_ghz": device.cavity_freq + cp.detuning,
            }
    text = json.dumps(payload, indent=1) + "\n"
    if args.output:
        _atomic_write_text(args.output, text)
        print(args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_spectra(args) -> int:
    cfg = _load(args)
    _apply_common(cfg, args)
    for key, flag in (("model", "model"), ("n_max", "n_max"),
                      ("delta2_ghz", "delta2_ghz"),
                      ("coupling2_ghz", "coupling2_ghz"),
                      ("ec_ghz", "ec_ghz"), ("ej_ghz", "ej_ghz"),
                      ("charge_cutoff", "charge_cutoff"),
                      ("level_cutoff", "level_cutoff")):
        _override(cfg, "spectra", key, getattr(args, flag, None))
    device, sigma = cfg.device(), cfg.sigma()
    sp = cfg.sections["spectra"]
    model, n_max = sp["model"], sp["n_max"]
    if n_max < 3:
        raise ConfigError(f"spectra n_max must be >= 3, got {n_max}")
    t0 = time.monotonic()
    if model == "jc":
        ladders = [jc_ladder(device, QubitSign.MINUS, range(n_max + 1)),
                   jc_ladder(device, QubitSign.PLUS, range(n_max + 1))]
    elif model == "two-qubit":
        mspec = MultiQubitSpec(
            detunings=(device.delta, sp["delta2_ghz"]),
            couplings=(device.coupling, sp["coupling2_ghz"]))
        ladders = two_qubit_ladder(device.cavity_freq, mspec, n_max)
    elif model == "transmon":
        tspec = TransmonSpec(
            e_c=sp["ec_ghz"], e_j=sp["ej_ghz"], coupling=device.coupling,
            charge_cutoff=sp["charge_cutoff"],
            level_cutoff=sp["level_cutoff"])
        ladders = transmon_ladder(device.cavity_freq, tspec, n_max)
    else:
        raise ConfigError(f"unknown spectra model '{model}'")
    wall = time.monotonic() - t0
    rows = [(lad.branch_label, int(n), float(f))
            for lad in ladders
            for n, f in zip(lad.numbers, lad.freqs)]
    result = SweepResult(axes=[], columns=SPECTRA_COLUMNS, rows=rows)
    _emit(result, cfg, args, "spectra", device, sigma, workers=1, wall=wall)
    return EXIT_OK


def cmd_presets(args) -> int:
    if not args.name:
        width = max(len(n) for n in PRESETS)
        for name in sorted(PRESETS):
            p = PRESETS[name]
            print(f"{name:<{width}}  [{p.task}] {p.description}")
        return EXIT_OK
    preset = get_preset(args.name)
    text = dump_toml(preset.expand())
    if args.output:
        _atomic_write_text(args.output, text)
        print(args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "semiclassical": cmd_semiclassical,
    "quantum-map": cmd_quantum_map,
    "cuts": cmd_cuts,
    "critical-points": cmd_critical_points,
    "spectra": cmd_spectra,
    "presets": cmd_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"jc-osc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"jc-osc: truncation: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except JcOscError as exc:
        print(f"jc-osc: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def run() -> None:  # console-script entry
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
