"""Steady-state amplitude analysis of the driven oscillator.

The stationary amplitude A (with u = A^2) of the damped driven nonlinear
cavity solves

    F(u) = u * { [wd^2 - (wc - chi(sqrt(u)))^2]^2 + kappa^2 wd^2 } - 4 wc^2 xi^2

in linear-GHz arithmetic, where chi is the amplitude-dependent frequency
shift. Near resonance this is A^2 [(Omega + chi)^2 + kappa^2/4] = xi^2.

Everything here works off the drive-independent part

    G(u; Omega) = u * { [wd^2 - (wc - chi)^2]^2 + kappa^2 wd^2 }

whose interior critical points (the fold pair u_a < u_b, present for Omega
inside the bistable window) bracket every root exactly: the equation has
three roots iff 4 wc^2 xi^2 lies between the local minimum G(u_b) and the
local maximum G(u_a). Critical drives are located at the fold merges
(G' = G'' = 0), which avoids the resolution bias of scanning root counts
over a (Omega, xi) grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, root

from .errors import ConvergenceError, GridResolutionError
from .params import DeviceParams, QubitSign, chi_of_amplitude

__all__ = [
    "Stability",
    "Branch",
    "AmplitudeRoot",
    "SemiclassicalSolution",
    "CriticalPoint",
    "BistabilityMap",
    "StepMetrics",
    "solve_amplitudes",
    "bistability_map",
    "bistable_drive_range",
    "critical_point_c1",
    "critical_point_c2",
    "step_metrics",
    "kerr_comparison_boundary",
]


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class Branch(str, Enum):
    DIM = "dim"
    MIDDLE = "middle"
    BRIGHT = "bright"


@dataclass(frozen=True)
class AmplitudeRoot:
    amplitude: float
    stability: Stability
    branch: Branch


@dataclass(frozen=True)
class SemiclassicalSolution:
    """All stationary amplitudes at one (detuning, drive) point."""

    detuning: float  # Omega = drive_freq - cavity_freq, GHz
    drive_amp: float  # xi, GHz
    roots: tuple[AmplitudeRoot, ...]
    bistable: bool


@dataclass(frozen=True)
class CriticalPoint:
    xi: float
    detuning: float
    kind: str  # "C1" | "C2"
    method: str  # "analytic" | "numeric"


@dataclass(frozen=True)
class StepMetrics:
    ratio: float  # bright/dim amplitude ratio 2 g^2/(kappa |delta|)
    gain: float  # analytic peak dA/dxi, sqrt(2) g / (kappa^{3/2} |delta|^{1/2})
    gain_numeric: float  # max finite-difference dA/dxi along the Omega=0 cut


@dataclass(frozen=True)
class BistabilityMap:
    """Root-count grid plus the cells where the count changes."""

    omega_grid: np.ndarray
    xi_grid: np.ndarray
    counts: np.ndarray  # shape (len(xi_grid), len(omega_grid)), values in {1,3}
    boundary_cells: frozenset  # {(i_xi, i_omega)} cells with a differing 4-neighbor


# ---------------------------------------------------------------------------
# shift models: chi(u) together with its first two u-derivatives


@dataclass(frozen=True)
class _ShiftModel:
    chi: Callable
    dchi: Callable
    d2chi: Callable
    u_scan_max: Optional[float] = None  # cap where the model stops being trusted


def _jc_shift(params: DeviceParams, sigma: QubitSign) -> _ShiftModel:
    g, d, s = params.coupling, params.delta, float(sigma)
    g2 = g * g

    def chi(u):
        return s * g2 / np.sqrt(2.0 * g2 * (u + s) + d * d)

    def dchi(u):
        return -s * g2 * g2 * (2.0 * g2 * (u + s) + d * d) ** -1.5

    def d2chi(u):
        return 3.0 * s * g2**3 * (2.0 * g2 * (u + s) + d * d) ** -2.5

    return _ShiftModel(chi, dchi, d2chi)


def _kerr_shift(params: DeviceParams, sigma: QubitSign) -> _ShiftModel:
    # tangent of the full shift at u=0: chi_K(u) = chi(0) + chi'(0) u.
    # Same small-amplitude resonance and fold onset; no saturation, so the
    # upper critical point never occurs.
    g, d, s = params.coupling, params.delta, float(sigma)
    r0 = d * d + 2.0 * g * g * s
    c0 = s * g * g / np.sqrt(r0)
    c1 = -s * g**4 * r0**-1.5

    def chi(u):
        return c0 + c1 * np.asarray(u, dtype=float)

    def dchi(u):
        return np.full_like(np.asarray(u, dtype=float), c1)

    def d2chi(u):
        return np.zeros_like(np.asarray(u, dtype=float))

    # the unbounded linear extrapolation eventually drags chi_K through the
    # cavity frequency itself, creating a spurious second resonance; cap the
    # fold scan far before that (|chi_K| <= wc/4) so only the physical fold
    # pair is ever seen
    u_cap = (0.25 * params.cavity_freq - abs(c0)) / abs(c1)
    return _ShiftModel(chi, dchi, d2chi, u_scan_max=u_cap)


# ---------------------------------------------------------------------------
# G(u; Omega) and its fold structure


def _G_and_derivs(u, omega, params, model):
    """G, G', G'' at u (vectorized), linear-GHz arithmetic."""
    wc, k = params.cavity_freq, params.cavity_decay
    wd = wc + omega
    c = model.chi(u)
    c1 = model.dchi(u)
    c2 = model.d2chi(u)
    a = wc - c
    t = wd * wd - a * a
    t1 = 2.0 * a * c1
    t2 = 2.0 * (a * c2 - c1 * c1)
    H = t * t + k * k * wd * wd
    H1 = 2.0 * t * t1
    H2 = 2.0 * (t1 * t1 + t * t2)
    return u * H, H + u * H1, 2.0 * H1 + u * H2


@dataclass(frozen=True)
class _FoldInfo:
    """Fold pair at one detuning (u_a < u_b), or None fields if monotone."""

    u_a: Optional[float]
    u_b: Optional[float]
    g_max: Optional[float]  # G(u_a), local maximum
    g_min: Optional[float]  # G(u_b), local minimum

    @property
    def exists(self) -> bool:
        return self.u_a is not None


def _default_u_max(params: DeviceParams) -> float:
    # Folds require |chi(u)| of order kappa or larger; |chi| falls to kappa at
    # u ~ g^4/(2 g^2 kappa^2). A decade of headroom on top of that.
    g, k = params.coupling, params.cavity_decay
    return max(1e4, 10.0 * g * g / (2.0 * k * k))


def _fold_info(params, model, omega, n_grid=8192, u_max=None) -> _FoldInfo:
    if u_max is None:
        u_max = _default_u_max(params)
    if model.u_scan_max is not None:
        u_max = min(u_max, model.u_scan_max)
    ug = np.geomspace(1e-10, u_max, n_grid)
    _, g1, _ = _G_and_derivs(ug, omega, params, model)
    sign = np.sign(g1)
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(flips) == 0:
        return _FoldInfo(None, None, None, None)
    if len(flips) != 2:
        raise GridResolutionError(
            f"expected 0 or 2 interior critical points, found {len(flips)} "
            f"at detuning {omega!r}"
        )

    def g1_scalar(u):
        return _G_and_derivs(float(u), omega, params, model)[1]

    u_a = brentq(g1_scalar, ug[flips[0]], ug[flips[0] + 1], rtol=1e-14)
    u_b = brentq(g1_scalar, ug[flips[1]], ug[flips[1] + 1], rtol=1e-14)
    ga = _G_and_derivs(u_a, omega, params, model)[0]
    gb = _G_and_derivs(u_b, omega, params, model)[0]
    if not ga > gb:
        if gb - ga <= 1e-9 * abs(ga):
            # fold contrast below arithmetic precision: window closed here
            return _FoldInfo(None, None, None, None)
        raise GridResolutionError("fold ordering violated; grid too coarse")
    return _FoldInfo(u_a, u_b, ga, gb)


# ---------------------------------------------------------------------------
# root solving


def _bracketed_root(params, model, omega, target, lo, hi):
    def f(u):
        return _G_and_derivs(float(u), omega, params, model)[0] - target

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    # an open upper bracket is expanded until it closes (F(inf) > 0 always);
    # interior brackets from the fold pair already straddle the root
    attempts = 0
    while flo * fhi > 0.0:
        hi *= 4.0
        fhi = f(hi)
        attempts += 1
        if attempts > 200:
            raise GridResolutionError("root bracket did not close")
    return brentq(f, lo, hi, rtol=1e-13, maxiter=200)


def _solve_point(params, sigma, model, omega, xi) -> SemiclassicalSolution:
    wc = params.cavity_freq
    if xi == 0.0:
        zero = AmplitudeRoot(0.0, Stability.STABLE, Branch.DIM)
        return SemiclassicalSolution(omega, xi, (zero,), False)
    target = 4.0 * wc * wc * xi * xi
    fold = _fold_info(params, model, omega)
    hi0 = 4.0 * (2.0 * xi / params.cavity_decay) ** 2 + 1.0
    if fold.exists and fold.g_min < target < fold.g_max:
        u_roots = (
            _bracketed_root(params, model, omega, target, 0.0, fold.u_a),
            _bracketed_root(params, model, omega, target, fold.u_a, fold.u_b),
            _bracketed_root(params, model, omega, target, fold.u_b, max(hi0, fold.u_b * 2)),
        )
        roots = (
            AmplitudeRoot(np.sqrt(u_roots[0]), Stability.STABLE, Branch.DIM),
            AmplitudeRoot(np.sqrt(u_roots[1]), Stability.UNSTABLE, Branch.MIDDLE),
            AmplitudeRoot(np.sqrt(u_roots[2]), Stability.STABLE, Branch.BRIGHT),
        )
        return SemiclassicalSolution(omega, xi, roots, True)
    # single root
    if fold.exists:
        # which side of the fold interval it sits on decides the label
        if target >= fold.g_max:
            u = _bracketed_root(params, model, omega, target, fold.u_b, max(hi0, fold.u_b * 2))
            branch = Branch.BRIGHT
        else:
            u = _bracketed_root(params, model, omega, target, 0.0, fold.u_a)
            branch = Branch.DIM
    else:
        # monotone response: bright iff the pulled detuning Omega + chi(A) is
        # inside the half-maximum linewidth (the root rides the resonance)
        u = _bracketed_root(params, model, omega, target, 0.0, hi0)
        pulled = omega + float(model.chi(u))
        branch = (
            Branch.BRIGHT
            if abs(pulled) <= np.sqrt(3.0) * params.cavity_decay / 2.0
            else Branch.DIM
        )
    return SemiclassicalSolution(
        omega, xi, (AmplitudeRoot(np.sqrt(u), Stability.STABLE, branch),), False
    )


def solve_amplitudes(params: DeviceParams, sigma: QubitSign) -> SemiclassicalSolution:
    """All stationary amplitudes at the drive point stored in ``params``.

    Roots are bracketed exactly by the fold pair of G (never grid-limited),
    then refined by Brent iteration to relative 1e-13 in u = A^2. A
    three-root solution is ordered dim < middle < bright with the middle
    branch unstable; a lone root is labeled by the side of the S-curve knee
    it falls on. xi = 0 returns the single zero root.
    """
    return _solve_point(
        params, sigma, _jc_shift(params, sigma), params.drive_detuning, params.drive_amp
    )


def _count_grid(params, sigma, model, omega_grid, xi_grid) -> BistabilityMap:
    omega_grid = np.asarray(omega_grid, dtype=float)
    xi_grid = np.asarray(xi_grid, dtype=float)
    if omega_grid.size == 0 or xi_grid.size == 0:
        raise GridResolutionError("empty grid")
    if np.any(np.diff(omega_grid) <= 0) or np.any(np.diff(xi_grid) <= 0):
        raise GridResolutionError("grids must be strictly increasing")
    wc = params.cavity_freq
    targets = 4.0 * wc * wc * xi_grid * xi_grid  # one per row
    counts = np.ones((xi_grid.size, omega_grid.size), dtype=np.int8)
    for j, om in enumerate(omega_grid):
        fold = _fold_info(params, model, om)
        if fold.exists:
            three = (targets > fold.g_min) & (targets < fold.g_max)
            counts[three, j] = 3
    boundary = set()
    nx, no = counts.shape
    for i in range(nx):
        for j in range(no):
            c = counts[i, j]
            if (
                (i > 0 and counts[i - 1, j] != c)
                or (i + 1 < nx and counts[i + 1, j] != c)
                or (j > 0 and counts[i, j - 1] != c)
                or (j + 1 < no and counts[i, j + 1] != c)
            ):
                boundary.add((i, j))
    return BistabilityMap(omega_grid, xi_grid, counts, frozenset(boundary))


def bistability_map(params, sigma, omega_grid, xi_grid) -> BistabilityMap:
    """Root-count map over a rectangular (Omega, xi) grid.

    Counts are derived from the fold interval of G at each detuning (three
    roots iff 4 wc^2 xi^2 falls inside it), so no root solving is involved
    and narrow features are not lost to xi-grid resolution.
    """
    return _count_grid(params, sigma, _jc_shift(params, sigma), omega_grid, xi_grid)


def kerr_comparison_boundary(params, sigma, omega_grid, xi_grid) -> BistabilityMap:
    """Same map for the tangent (Kerr/Duffing) approximation of the shift.

    The shift is linearized about zero amplitude, chi_K(u) = chi(0) + chi'(0) u,
    which reproduces the lower fold onset but never saturates, so the bistable
    region has no upper closing point.
    """
    return _count_grid(params, sigma, _kerr_shift(params, sigma), omega_grid, xi_grid)


def bistable_drive_range(params, sigma, omega) -> Optional[tuple[float, float]]:
    """(xi_low, xi_high) of the three-root window at one detuning, or None."""
    fold = _fold_info(params, _jc_shift(params, sigma), omega)
    if not fold.exists:
        return None
    wc = params.cavity_freq
    return (np.sqrt(fold.g_min) / (2.0 * wc), np.sqrt(fold.g_max) / (2.0 * wc))


# ---------------------------------------------------------------------------
# critical points


def _cusp_newton(params, model, u0, om0):
    """Polish a fold-merge point: solve G'(u)=0, G''(u)=0 for (u, Omega)."""
    k = params.cavity_decay
    wc = params.cavity_freq

    def eqs(x):
        u, om = np.exp(x[0]), x[1]
        _, g1, g2 = _G_and_derivs(u, om, params, model)
        s = (2.0 * wc * max(abs(om), k)) ** 2  # conditioning scale
        return [g1 / s, g2 * u / s]

    sol = root(eqs, [np.log(u0), om0], tol=1e-13)
    if not sol.success:
        raise ConvergenceError(f"cusp polish failed: {sol.message}")
    return float(np.exp(sol.x[0])), float(sol.x[1])


def _numeric_cusps(params, sigma, model=None):
    """Both fold-merge points as ((u, Omega, xi) low-xi, (u, Omega, xi) high-xi)."""
    if model is None:
        model = _jc_shift(params, sigma)
    wc, k = params.cavity_freq, params.cavity_decay
    om_res = -float(model.chi(0.0))
    lo = min(0.0, om_res) - 5.0 * k
    hi = max(0.0, om_res) + 5.0 * k
    oms = np.linspace(lo, hi, 1024)
    present = np.array([_fold_info(params, model, om).exists for om in oms])
    if not present.any():
        raise ConvergenceError("no fold window found near the resonance")
    idx = np.nonzero(present)[0]
    cusps = []
    for edge_in, edge_out in ((idx[0], idx[0] - 1), (idx[-1], idx[-1] + 1)):
        if edge_out < 0 or edge_out >= oms.size:
            raise ConvergenceError("fold window touches the scan boundary")
        a, b = oms[edge_in], oms[edge_out]  # a has folds, b does not
        info = _fold_info(params, model, a)
        for _ in range(48):
            m = 0.5 * (a + b)
            fi = _fold_info(params, model, m)
            if fi.exists:
                a, info = m, fi
            else:
                b = m
        u_seed = np.sqrt(info.u_a * info.u_b)  # geometric mean of merging pair
        try:
            u, om = _cusp_newton(params, model, u_seed, a)
        except ConvergenceError:
            # the 48-deep bisection already pins Omega to machine width; the
            # Newton system is singular exactly at the cusp, so failure here
            # just means there was nothing left to polish
            u, om = u_seed, a
        g = _G_and_derivs(u, om, params, model)[0]
        cusps.append((u, om, float(np.sqrt(g) / (2.0 * wc))))
    cusps.sort(key=lambda c: c[2])
    return cusps[0], cusps[1]


def critical_point_c1(params, sigma, method: str = "analytic") -> CriticalPoint:
    """Opening point of the bistable region (minimum drive).

    Analytic: xi = (|delta| kappa)^{3/2} / (3^{3/4} g^2), with the detuning
    pulled sqrt(3) kappa/2 from the small-amplitude resonance Omega = -chi(0)
    toward the bare cavity frequency. Numeric: low-drive fold merge of G.
    """
    if method == "numeric":
        low, _ = _numeric_cusps(params, sigma)
        return CriticalPoint(low[2], low[1], "C1", "numeric")
    if method != "analytic":
        raise ValueError(f"unknown method {method!r}")
    g, d, k = params.coupling, abs(params.delta), params.cavity_decay
    xi = (d * k) ** 1.5 / (3.0**0.75 * g * g)
    om_res = -chi_of_amplitude(params, sigma, 0.0)
    om = om_res - np.sign(om_res) * np.sqrt(3.0) * k / 2.0
    return CriticalPoint(xi, om, "C1", "analytic")


def critical_point_c2(params, sigma, method: str = "analytic") -> CriticalPoint:
    """Closing point of the bistable region (maximum drive).

    Analytic: xi = g/sqrt(2) at the bare cavity frequency (Omega = 0).
    Numeric: high-drive fold merge of G.
    """
    if method == "numeric":
        _, high = _numeric_cusps(params, sigma)
        return CriticalPoint(high[2], high[1], "C2", "numeric")
    if method != "analytic":
        raise ValueError(f"unknown method {method!r}")
    return CriticalPoint(params.coupling / np.sqrt(2.0), 0.0, "C2", "analytic")


def step_metrics(params, sigma, n_xi: int = 2001) -> StepMetrics:
    """Step size and transfer gain of the bare-frequency response.

    ratio = 2 g^2/(kappa |delta|) (bright/dim amplitude contrast);
    gain = sqrt(2) g/(kappa^{3/2} |delta|^{1/2}) (analytic peak dA/dxi);
    gain_numeric = max finite-difference dA/dxi along the Omega = 0 cut,
    scanned around the closing critical drive where the step lives.
    """
    g, d, k = params.coupling, abs(params.delta), params.cavity_decay
    ratio = 2.0 * g * g / (k * d)
    gain = np.sqrt(2.0) * g / (k**1.5 * np.sqrt(d))
    model = _jc_shift(params, sigma)
    xi_c2 = params.coupling / np.sqrt(2.0)
    xis = np.linspace(0.6 * xi_c2, 1.4 * xi_c2, n_xi)
    amps = np.empty_like(xis)
    for i, xi in enumerate(xis):
        sol = _solve_point(params, sigma, model, 0.0, float(xi))
        amps[i] = max(r.amplitude for r in sol.roots if r.stability == Stability.STABLE)
    gain_num = float(np.max(np.diff(amps) / np.diff(xis)))
    return StepMetrics(ratio, gain, gain_num)
