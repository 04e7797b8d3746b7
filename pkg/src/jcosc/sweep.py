"""Grid orchestration, parallel execution, and artifact persistence.

A sweep is a dense (xi, omega) product grid; each point is independent,
so execution order never matters: rows are keyed by point index and the
per-point RNG streams are derived from (base_seed, point_index, traj),
making output bytes identical for any worker count.
"""

import json
import os
import sys
import tempfile
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .dynamics import ensemble_average, master_equation_evolve, mcwf_trajectory
from .errors import ConfigError, JcOscError, TruncationError
from .params import DeviceParams, QubitSign, chi_of_amplitude, derive_scales
from .semiclassical import Branch, solve_amplitudes

SEMICLASSICAL_COLUMNS = ("omega_ghz", "xi_ghz", "n_roots",
                         "a_dim", "a_middle", "a_bright")
QUANTUM_COLUMNS = ("omega_ghz", "xi_ghz", "het_amp", "mean_n",
                   "stderr", "truncation_flag")
SPECTRA_COLUMNS = ("branch", "N", "transition_freq_ghz")


@dataclass
class SweepResult:
    axes: List[Tuple[str, np.ndarray]]   # outer axis first
    columns: Tuple[str, ...]
    rows: List[tuple]                    # dense, outer axis slowest
    meta: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def build_axis(vmin: Optional[float], vmax: Optional[float], steps: int,
               log: bool = False, name: str = "axis") -> np.ndarray:
    if vmin is None:
        raise ConfigError(f"{name}: no minimum given")
    if steps < 1:
        raise ConfigError(f"{name}: steps must be >= 1, got {steps}")
    if steps == 1:
        return np.array([float(vmin)])
    if vmax is None:
        raise ConfigError(f"{name}: no maximum given")
    if vmax <= vmin:
        raise ConfigError(f"{name}: max must exceed min")
    if log:
        if vmin <= 0.0:
            raise ConfigError(f"{name}: log spacing needs positive minimum")
        return np.geomspace(float(vmin), float(vmax), steps)
    return np.linspace(float(vmin), float(vmax), steps)


def _progress(done: int, total: int) -> None:
    sys.stderr.write(f"\r{done}/{total} points")
    if done >= total:
        sys.stderr.write("\n")
    sys.stderr.flush()


# ---------------------------------------------------------------------------
# semiclassical grids (cheap, never parallelized)


def semiclassical_sweep(device: DeviceParams, sigma: QubitSign,
                        omega: np.ndarray, xi: np.ndarray,
                        progress: bool = False) -> SweepResult:
    rows: List[tuple] = []
    total = xi.size * omega.size
    for i, x in enumerate(xi):
        for j, om in enumerate(omega):
            p = device.replace(drive_amp=float(x), drive_freq=float(om))
            sol = solve_amplitudes(p, sigma)
            by_branch = {r.branch: float(r.amplitude) for r in sol.roots}
            rows.append((
                float(om), float(x), len(sol.roots),
                by_branch.get(Branch.DIM),
                by_branch.get(Branch.MIDDLE),
                by_branch.get(Branch.BRIGHT),
            ))
            if progress:
                _progress(i * omega.size + j + 1, total)
    return SweepResult(axes=[("xi_ghz", xi), ("omega_ghz", omega)],
                       columns=SEMICLASSICAL_COLUMNS, rows=rows)


# ---------------------------------------------------------------------------
# quantum grids


@dataclass(frozen=True)
class QuantumOpts:
    n_max: int = 2000
    n_traj: int = 200
    t_sample_ns: Optional[float] = None   # None -> 2.5/kappa
    avg_window_ns: float = 0.0
    tol: float = 1e-8
    oracle: bool = False
    fail_on_truncation: bool = False


def sample_times(device: DeviceParams, opts: QuantumOpts) -> np.ndarray:
    t_end = opts.t_sample_ns
    if t_end is None:
        t_end = 2.5 / device.cavity_decay
    if t_end <= 0.0:
        raise ConfigError(f"t_sample_ns must be positive, got {t_end}")
    if opts.avg_window_ns == 0.0:
        return np.array([float(t_end)])
    if not 0.0 < opts.avg_window_ns < t_end:
        raise ConfigError("avg_window_ns must lie in [0, t_sample_ns)")
    # sample the closing window densely enough to average over ringing
    n_in = 8
    w = opts.avg_window_ns
    return np.linspace(t_end - w, t_end, n_in + 1)


def _quantum_point(args) -> Tuple[int, tuple]:
    (idx, device, sigma, om, x, opts, t_samples, base_seed) = args
    try:
        return idx, _quantum_point_inner(
            idx, device, sigma, om, x, opts, t_samples, base_seed)
    except JcOscError as exc:
        raise type(exc)(
            f"at omega_ghz={om!r}, xi_ghz={x!r}: {exc}") from None


def _quantum_point_inner(idx, device, sigma, om, x, opts,
                         t_samples, base_seed) -> tuple:
    p = device.replace(drive_amp=float(x), drive_freq=float(om))
    if opts.oracle:
        fld, occ = master_equation_evolve(p, sigma, opts.n_max, t_samples)
        amp = np.abs(fld)
        het = float(np.mean(amp))
        mean_n = float(np.mean(occ))
        stderr = 0.0
        truncated = False
    else:
        res = ensemble_average(p, sigma, opts.n_max, t_samples,
                               n_traj=opts.n_traj, base_seed=base_seed,
                               point_index=idx, tol=opts.tol)
        het = float(np.mean(res.het_amp))
        mean_n = float(np.mean(res.occupation))
        # window average of correlated samples: report the mean of the
        # per-sample jackknife errors rather than pretending independence
        stderr = float(np.mean(res.stderr))
        truncated = bool(res.truncated)
    return (float(om), float(x), het, mean_n, stderr, int(truncated))


def quantum_sweep(device: DeviceParams, sigma: QubitSign,
                  omega: np.ndarray, xi: np.ndarray, opts: QuantumOpts,
                  base_seed: int, workers: int = 1,
                  progress: bool = False) -> SweepResult:
    t_samples = sample_times(device, opts)
    tasks = []
    idx = 0
    for x in xi:
        for om in omega:
            tasks.append((idx, device, sigma, float(om), float(x), opts,
                          t_samples, base_seed))
            idx += 1
    total = len(tasks)
    rows: List[Optional[tuple]] = [None] * total

    if workers <= 1:
        for task in tasks:
            i, row = _quantum_point(task)
            rows[i] = row
            if progress:
                _progress(i + 1, total)
    else:
        done = 0
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pending = {pool.submit(_quantum_point, t) for t in tasks}
            while pending:
                finished, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in finished:
                    i, row = fut.result()   # propagates worker errors
                    rows[i] = row
                    done += 1
                    if progress:
                        _progress(done, total)

    result = SweepResult(axes=[("xi_ghz", xi), ("omega_ghz", omega)],
                         columns=QUANTUM_COLUMNS, rows=list(rows))
    result.meta["t_samples_ns"] = [float(t) for t in t_samples]
    return result


def check_truncation(result: SweepResult, n_max: int) -> None:
    """Raise (exit-code-4 class) if any grid point hit the Fock-space cap.

    Called after artifacts are persisted so a flagged run still leaves
    its (honestly flagged) data on disk.
    """
    flagged = [r for r in result.rows if r[5]]
    if flagged:
        om, x = flagged[0][0], flagged[0][1]
        raise TruncationError(
            f"{len(flagged)} grid point(s) hit the Fock-space cap "
            f"n_max={n_max}; first at omega_ghz={om}, xi_ghz={x}")


def dump_trajectories(device: DeviceParams, sigma: QubitSign,
                      omega: np.ndarray, xi: np.ndarray, opts: QuantumOpts,
                      base_seed: int, out_dir: str) -> int:
    """Re-run every trajectory of the sweep, writing one JSON per trajectory.

    Uses the same per-point seed streams as :func:`quantum_sweep`, so the
    dumped records are exactly the trajectories behind the CSV statistics.
    """
    if opts.oracle:
        raise ConfigError("trajectory dumps require trajectory mode, not --oracle")
    os.makedirs(out_dir, exist_ok=True)
    t_samples = sample_times(device, opts)
    from .dynamics import trajectory_seed

    count = 0
    idx = 0
    for x in xi:
        for om in omega:
            p = device.replace(drive_amp=float(x), drive_freq=float(om))
            for j in range(opts.n_traj):
                seed = trajectory_seed(base_seed, idx, j)
                rec = mcwf_trajectory(p, sigma, opts.n_max, t_samples,
                                      seed=seed, tol=opts.tol,
                                      record_jump_times=True)
                payload = {
                    "omega_ghz": float(om),
                    "xi_ghz": float(x),
                    "times": [float(t) for t in rec.times],
                    "re_a": [float(v) for v in rec.field.real],
                    "im_a": [float(v) for v in rec.field.imag],
                    "jump_times": [float(t) for t in rec.jump_times],
                    "n_jumps": rec.n_jumps,
                    "seed": rec.seed,
                    "truncated": rec.truncated,
                }
                name = f"point{idx:05d}_traj{j:04d}.json"
                _atomic_write_text(os.path.join(out_dir, name),
                                   json.dumps(payload, indent=1))
                count += 1
            idx += 1
    return count


# ---------------------------------------------------------------------------
# persistence


def _fmt_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))   # shortest round-trip decimal form
    return str(v)


def result_csv_text(result: SweepResult) -> str:
    lines = [",".join(result.columns)]
    for row in result.rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _py_scalar(v: Any):
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def result_json_text(result: SweepResult) -> str:
    payload = {
        "columns": list(result.columns),
        "rows": [[_py_scalar(v) for v in row] for row in result.rows],
        "axes": {name: [float(v) for v in ax] for name, ax in result.axes},
    }
    return json.dumps(payload, indent=1) + "\n"


def _atomic_write_text(path: str, text: str) -> None:
    path = os.path.abspath(path)
    d = os.path.dirname(path)
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".partial-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_meta(result: SweepResult, device: DeviceParams, sigma: QubitSign,
               config_snapshot: Dict[str, Any], task: str, seed: int,
               workers: int, wall_time_s: float) -> Dict[str, Any]:
    scales = derive_scales(device)
    chi0 = chi_of_amplitude(device, sigma, 0.0)
    axes: Dict[str, Any] = {}
    for name, ax in result.axes:
        axes[name] = [float(v) for v in ax]
        if name == "omega_ghz":
            axes["detuning_over_chi0"] = [
                float((v - device.cavity_freq) / chi0) for v in ax]
        elif name == "xi_ghz":
            axes["xi_over_xi1"] = [float(v / scales.xi1) for v in ax]
    meta = {
        "task": task,
        "version": __version__,
        "seed": seed,
        "config": config_snapshot,
        "axes": axes,
        "chi0_ghz": float(chi0),
        "xi1_ghz": float(scales.xi1),
        "extra": dict(result.meta),
        "runtime": {"wall_time_s": wall_time_s, "workers": workers},
    }
    return meta


def write_result(result: SweepResult, path: str, fmt: str = "csv",
                 meta: Optional[Dict[str, Any]] = None) -> List[str]:
    """Write the table plus its meta sidecar; returns all paths written."""
    if fmt == "csv":
        _atomic_write_text(path, result_csv_text(result))
    elif fmt == "json":
        _atomic_write_text(path, result_json_text(result))
    else:
        raise ConfigError(f"unknown output format '{fmt}'")
    written = [path]
    if meta is not None:
        mpath = path + ".meta.json"
        _atomic_write_text(mpath, json.dumps(meta, indent=1) + "\n")
        written.append(mpath)
    return written


def render_png(result: SweepResult, path: str, values: Sequence,
               scale: int = 6) -> str:
    """Grayscale raster of per-point values, dark pixels = large values."""
    from PIL import Image

    (yname, yax), (xname, xax) = result.axes
    ny, nx = yax.size, xax.size
    vals = np.array([np.nan if v is None else float(v) for v in values])
    grid = vals.reshape(ny, nx)
    finite = np.isfinite(grid)
    vmax = np.nanmax(grid) if finite.any() else 1.0
    if not np.isfinite(vmax) or vmax <= 0.0:
        vmax = 1.0
    norm = np.where(finite, np.clip(grid / vmax, 0.0, 1.0), 0.0)
    # sqrt stretch keeps dim-branch structure visible next to bright cells
    pix = (255.0 * (1.0 - np.sqrt(norm))).astype(np.uint8)
    pix = pix[::-1, :]   # largest y at the top
    img = Image.fromarray(pix, mode="L")
    img = img.resize((nx * scale, ny * scale), Image.NEAREST)
    tmp = path + ".partial"
    img.save(tmp, format="PNG")
    os.replace(tmp, path)
    return path
