"""Quantum time evolution of the driven, qubit-conditioned cavity.

The cavity is evolved in the frame rotating at the drive, with the qubit
frozen in one of its two eigenmanifolds.  The number-basis generator is
tridiagonal: a dressed, intensity-dependent diagonal plus a linear drive
coupling.  Two integrators are provided:

* :func:`mcwf_trajectory` / :func:`ensemble_average` — stochastic
  wavefunction unravelling with photon loss as the jump channel (scales to
  thousands of levels),
* :func:`master_equation_evolve` — dense density-matrix integration, usable
  as a cross-check oracle at small truncation.

All frequencies are linear GHz, times are ns.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DomainError, StepUnderflowError
from .params import DeviceParams, QubitSign

__all__ = [
    "TrajectoryRecord",
    "EnsembleResult",
    "build_hamiltonian",
    "mcwf_trajectory",
    "ensemble_average",
    "master_equation_evolve",
    "linear_cavity_alpha",
]


def build_hamiltonian(
    params: DeviceParams, sigma: QubitSign, n_max: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Rotating-frame generator for the cavity conditioned on the qubit sign.

    Returns ``(diag, offd)`` in linear GHz: ``diag[n]`` is the energy of
    number level ``n`` relative to the vacuum, ``offd[n]`` couples levels
    ``n`` and ``n + 1``.
    """
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    s = int(sigma)
    n = np.arange(n_max + 1, dtype=float)
    radicand = params.delta**2 + 4.0 * params.coupling**2 * (n + (1 + s) / 2.0)
    diag = (params.cavity_freq - params.drive_freq) * n - s * np.sqrt(radicand) / 2.0
    diag -= diag[0]
    eps = params.drive_amp / (2.0 * np.sqrt(2.0))
    offd = eps * np.sqrt(n[:-1] + 1.0)
    return diag, offd


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    field: np.ndarray          # complex <a>(t), normalized, rotating frame
    occupation: np.ndarray     # <n>(t)
    n_jumps: int
    n_steps: int
    seed: int
    truncated: bool
    max_tail_fraction: float
    final_window: int
    jump_times: Optional[np.ndarray] = None   # only when recording requested


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_field: np.ndarray     # complex ensemble mean of <a>(t)
    het_amp: np.ndarray        # |mean_field|
    stderr: np.ndarray         # jackknife stderr of |mean_field|
    occupation: np.ndarray     # ensemble mean of <n>(t)
    occupation_stderr: np.ndarray
    n_traj: int
    mean_jumps: float
    truncated: bool
    truncated_fraction: float
    fields: Optional[np.ndarray] = None   # per-trajectory samples if kept


def _check_times(t_samples: Sequence[float]) -> np.ndarray:
    t = np.asarray(t_samples, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("need a non-empty 1-d array of sample times")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise DomainError("sample times must be non-negative and increasing")
    return t


def _window_start(params: DeviceParams, n_max: int, n_est: Optional[float]) -> int:
    if n_est is None:
        # linear-response guess at this detuning, safe for the dim branch
        kap = params.cavity_decay
        det = params.cavity_freq - params.drive_freq
        n_est = (params.drive_amp**2 / (2.0 * kap**2)) / (1.0 + (2.0 * det / kap) ** 2)
    n_est = min(float(n_est), float(n_max))
    return min(n_max + 1, 64 + int(4.0 * n_est))


def mcwf_trajectory(
    params: DeviceParams,
    sigma: QubitSign,
    n_max: int,
    t_samples: Sequence[float],
    seed: int,
    n_est: Optional[float] = None,
    tol: float = 1e-8,
    max_steps: int = 200_000_000,
    record_jump_times: bool = False,
) -> TrajectoryRecord:
    """Single stochastic-wavefunction trajectory from the vacuum."""
    t = _check_times(t_samples)
    diag, offd = build_hamiltonian(params, sigma, n_max)
    N = n_max + 1
    delta = np.zeros(N)
    delta[: N - 1] = np.diff(diag)
    sqn = np.sqrt(np.arange(1, N + 1, dtype=float))
    w0 = _window_start(params, n_max, n_est)

    eps = params.drive_amp / (2.0 * np.sqrt(2.0))
    dmax = float(np.max(np.abs(delta))) if N > 1 else 0.0
    rate = (2.0 * np.pi * (dmax + eps * np.sqrt(w0))
            + np.pi * params.cavity_decay * w0)
    h0 = float(np.clip(0.5 / max(rate, 1e-9), 1e-6, 2.0))

    out_a = np.zeros(t.size, np.complex128)
    out_n = np.zeros(t.size, np.float64)
    if record_jump_times:
        # capacity from the worst-case emission rate at full occupancy
        cap = int(3.0 * np.pi * params.cavity_decay * n_max * t[-1]) + 1024
        out_jt = np.zeros(cap, np.float64)
    else:
        out_jt = np.zeros(0, np.float64)
    status, n_jumps, n_steps, truncated, max_tail, w_final = (
        _kernels.mcwf_trajectory_kernel(
            delta, offd, sqn, params.cavity_decay, t,
            np.uint64(seed), w0, tol, h0, max_steps, out_a, out_n, out_jt,
        )
    )
    if status == _kernels.STATUS_STEP_UNDERFLOW:
        raise StepUnderflowError("adaptive step collapsed below 1e-9 ns")
    if status == _kernels.STATUS_MAX_STEPS:
        raise ConvergenceError(f"step budget {max_steps} exhausted at t<{t[-1]} ns")
    jt = out_jt[: min(int(n_jumps), out_jt.size)] if record_jump_times else None
    return TrajectoryRecord(
        times=t, field=out_a, occupation=out_n, n_jumps=int(n_jumps),
        n_steps=int(n_steps), seed=int(seed), truncated=bool(truncated),
        max_tail_fraction=float(max_tail), final_window=int(w_final),
        jump_times=jt,
    )


def trajectory_seed(base_seed: int, point_index: int, traj_index: int) -> int:
    """Deterministic, collision-resistant per-trajectory seed."""
    ss = np.random.SeedSequence((base_seed, point_index, traj_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _jackknife_abs_mean(fields: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Stderr of |mean(z)| over axis 0 by leave-one-out resampling."""
    m = fields.shape[0]
    mean = fields.mean(axis=0)
    if m < 2:
        return np.abs(mean), np.zeros(fields.shape[1])
    total = fields.sum(axis=0)
    leave_one = np.abs((total[None, :] - fields) / (m - 1))
    bar = leave_one.mean(axis=0)
    var = ((leave_one - bar[None, :]) ** 2).sum(axis=0) * (m - 1) / m
    return np.abs(mean), np.sqrt(var)


def ensemble_average(
    params: DeviceParams,
    sigma: QubitSign,
    n_max: int,
    t_samples: Sequence[float],
    n_traj: int,
    base_seed: int,
    point_index: int = 0,
    n_est: Optional[float] = None,
    tol: float = 1e-8,
    keep_fields: bool = False,
    progress: Optional[Callable[[int, int], None]] = None,
) -> EnsembleResult:
    """Average `n_traj` independent trajectories at one drive point."""
    if n_traj < 1:
        raise DomainError("n_traj must be positive")
    t = _check_times(t_samples)
    fields = np.zeros((n_traj, t.size), np.complex128)
    occ = np.zeros((n_traj, t.size), np.float64)
    jumps = 0
    trunc_count = 0
    for k in range(n_traj):
        rec = mcwf_trajectory(
            params, sigma, n_max, t,
            seed=trajectory_seed(base_seed, point_index, k),
            n_est=n_est, tol=tol,
        )
        fields[k] = rec.field
        occ[k] = rec.occupation
        jumps += rec.n_jumps
        trunc_count += int(rec.truncated)
        if progress is not None:
            progress(k + 1, n_traj)
    mean_field = fields.mean(axis=0)
    het_amp, stderr = _jackknife_abs_mean(fields)
    occ_mean = occ.mean(axis=0)
    occ_err = occ.std(axis=0, ddof=1) / np.sqrt(n_traj) if n_traj > 1 else np.zeros(t.size)
    return EnsembleResult(
        times=t, mean_field=mean_field, het_amp=het_amp, stderr=stderr,
        occupation=occ_mean, occupation_stderr=occ_err, n_traj=n_traj,
        mean_jumps=jumps / n_traj, truncated=trunc_count > 0,
        truncated_fraction=trunc_count / n_traj,
        fields=fields if keep_fields else None,
    )


def master_equation_evolve(
    params: DeviceParams,
    sigma: QubitSign,
    n_max: int,
    t_samples: Sequence[float],
    dt: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Dense Lindblad integration; returns (<a>(t), <n>(t)) at the samples.

    Fixed-step classical RK4 on the full density matrix — O(n_max^2) memory,
    meant for cross-checks at small truncation rather than production maps.
    """
    t = _check_times(t_samples)
    diag, offd = build_hamiltonian(params, sigma, n_max)
    N = n_max + 1
    H = np.zeros((N, N), np.complex128)
    H[np.arange(N), np.arange(N)] = diag
    H[np.arange(N - 1), np.arange(1, N)] = offd
    H[np.arange(1, N), np.arange(N - 1)] = offd
    H *= 2.0 * np.pi
    kap = 2.0 * np.pi * params.cavity_decay
    nvec = np.arange(N, dtype=float)
    sq = np.sqrt(np.arange(1, N, dtype=float))
    damp = 0.5 * kap * (nvec[:, None] + nvec[None, :])
    gain = kap * (sq[:, None] * sq[None, :])

    def lindblad(r: np.ndarray) -> np.ndarray:
        out = -1j * (H @ r - r @ H)
        out[: N - 1, : N - 1] += gain * r[1:, 1:]
        out -= damp * r
        return out

    if dt is None:
        rate = (2.0 * np.pi * (np.max(np.abs(diag)) + 2.0 * (np.max(offd) if N > 1 else 0.0))
                + kap * n_max)
        dt = min(0.25, 0.5 / max(rate, 1e-9))

    rho = np.zeros((N, N), np.complex128)
    rho[0, 0] = 1.0
    out_a = np.zeros(t.size, np.complex128)
    out_n = np.zeros(t.size, np.float64)

    def record(k: int) -> None:
        out_a[k] = np.sum(sq * np.diag(rho, -1))
        out_n[k] = float(np.real(np.sum(nvec * np.real(np.diag(rho)))))

    t_prev = 0.0
    for k, tk in enumerate(t):
        span = tk - t_prev
        if span > 0:
            n_sub = max(1, int(np.ceil(span / dt)))
            h = span / n_sub
            for _ in range(n_sub):
                k1 = lindblad(rho)
                k2 = lindblad(rho + 0.5 * h * k1)
                k3 = lindblad(rho + 0.5 * h * k2)
                k4 = lindblad(rho + h * k3)
                rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        record(k)
        t_prev = tk
    return out_a, out_n


def linear_cavity_alpha(params: DeviceParams, t_samples: Sequence[float]) -> np.ndarray:
    """Closed-form field of an empty driven cavity from vacuum (zero coupling)."""
    t = np.asarray(t_samples, dtype=float)
    eps = params.drive_amp / (2.0 * np.sqrt(2.0))
    det = params.cavity_freq - params.drive_freq
    lam = np.pi * params.cavity_decay + 2j * np.pi * det
    alpha_ss = -2j * np.pi * eps / lam
    return alpha_ss * (1.0 - np.exp(-lam * t))
