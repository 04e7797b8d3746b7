"""Physical parameters, unit conventions, and derived excitation scales.

Unit conventions used across the whole package:

- every stored frequency or rate is a *linear* frequency in GHz (cycles/ns);
  factors of 2*pi are applied inside dynamics kernels only;
- time is in ns;
- hbar = 1, photon amplitudes dimensionless.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import DomainError, NoRootError

__all__ = [
    "QubitSign",
    "DeviceParams",
    "DerivedScales",
    "chi_of_amplitude",
    "derive_scales",
]


class QubitSign(IntEnum):
    """Frozen qubit-population eigenvalue; it is a constant of motion here."""

    MINUS = -1
    PLUS = 1


@dataclass(frozen=True)
class DeviceParams:
    """One cavity-qubit system plus its coherent drive.

    All fields are linear frequencies in GHz. ``drive_amp`` may be zero,
    everything else must be strictly positive, and the qubit-cavity detuning
    must be nonzero (dispersive regime).
    """

    cavity_freq: float
    qubit_freq: float
    coupling: float
    cavity_decay: float
    drive_amp: float
    drive_freq: float

    def __post_init__(self):
        for name in ("cavity_freq", "qubit_freq", "coupling", "cavity_decay", "drive_freq"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.drive_amp < 0.0:
            raise DomainError(f"drive_amp must be >= 0, got {self.drive_amp!r}")
        if self.qubit_freq == self.cavity_freq:
            raise DomainError("qubit_freq == cavity_freq: detuning must be nonzero")

    @property
    def delta(self) -> float:
        """Qubit-cavity detuning (GHz), sign included."""
        return self.qubit_freq - self.cavity_freq

    @property
    def drive_detuning(self) -> float:
        """Drive-cavity detuning Omega = drive_freq - cavity_freq (GHz)."""
        return self.drive_freq - self.cavity_freq

    def replace(self, **kw) -> "DeviceParams":
        d = {f: getattr(self, f) for f in (
            "cavity_freq", "qubit_freq", "coupling", "cavity_decay",
            "drive_amp", "drive_freq")}
        d.update(kw)
        return DeviceParams(**d)

    def hierarchy_warnings(self, threshold: float = 0.5) -> list[str]:
        """Check the scale hierarchy kappa << g^2/|delta| << g << |delta| << omega_c.

        Each "<<" is tested as a ratio <= threshold; violations come back as
        human-readable warning strings (never exceptions).
        """
        g, d, wc, k = self.coupling, abs(self.delta), self.cavity_freq, self.cavity_decay
        chain = [
            ("kappa", k, "g^2/|delta|", g * g / d),
            ("g^2/|delta|", g * g / d, "g", g),
            ("g", g, "|delta|", d),
            ("|delta|", d, "omega_c", wc),
        ]
        out = []
        for lo_name, lo, hi_name, hi in chain:
            if lo > threshold * hi:
                out.append(
                    f"hierarchy: {lo_name}={lo:.4g} not << {hi_name}={hi:.4g} "
                    f"(ratio {lo / hi:.3g} > {threshold})"
                )
        return out


def chi_of_amplitude(params: DeviceParams, sigma: QubitSign, amplitude):
    """Amplitude-dependent cavity frequency shift chi(A), in GHz.

    chi = sigma * g^2 / sqrt(2 g^2 (A^2 + sigma) + delta^2). Sign follows
    sigma; magnitude decreases monotonically with A (saturation). Accepts a
    scalar or ndarray amplitude; raises DomainError if the radicand is not
    strictly positive anywhere (possible for sigma=-1, A<1 when 2g^2 >= delta^2).
    """
    a = np.asarray(amplitude, dtype=float)
    if np.any(a < 0):
        raise DomainError("amplitude must be >= 0")
    g, d = params.coupling, params.delta
    radicand = 2.0 * g * g * (a * a + float(sigma)) + d * d
    if np.any(radicand <= 0.0):
        raise DomainError(
            "radicand 2g^2(A^2+sigma)+delta^2 <= 0: outside the dispersive domain"
        )
    out = float(sigma) * g * g / np.sqrt(radicand)
    return out if out.ndim else float(out)


def _chi_of_total_excitations(params: DeviceParams, n):
    # |chi| evaluated on the excitation-number form: radicand delta^2 + 4 g^2 N.
    # Sign dropped -- only used for the |chi(N)| = kappa inversion.
    g, d = params.coupling, params.delta
    return g * g / np.sqrt(d * d + 4.0 * g * g * np.asarray(n, dtype=float))


@dataclass(frozen=True)
class DerivedScales:
    """Characteristic excitation scales and normalizations.

    - ``chi0``: small-amplitude dispersive shift g^2/delta (signed, GHz);
    - ``n_crit``: delta^2/(4 g^2), where the perturbative expansion in photon
      number stops converging (the dimensionally consistent form);
    - ``n_bare``: excitation number where |chi(N)| falls to kappa and the
      response returns to the bare cavity;
    - ``n_sc``: g^4/(kappa |delta|^3), above which neighboring number peaks
      overlap and the semiclassical picture applies;
    - ``xi1``: kappa/sqrt(2) (GHz), the drive normalization used for map axes.
    """

    delta: float
    chi0: float
    n_crit: float
    n_bare: float
    n_sc: float
    xi1: float


def derive_scales(params: DeviceParams) -> DerivedScales:
    """Populate DerivedScales; pure function of the inputs.

    n_bare is found by bisecting |chi(N)| = kappa on N in [1, 1e12] to a
    relative width of 1e-9. Raises NoRootError when kappa >= |chi(1)| (the
    shift is already below the linewidth at the single-excitation level).
    """
    g, d, k = params.coupling, params.delta, params.cavity_decay
    if not _chi_of_total_excitations(params, 1.0) > k:
        raise NoRootError(
            "no n_bare: |chi(N=1)| <= kappa; system is never dispersively resolved"
        )
    lo, hi = 1.0, 1e12
    if _chi_of_total_excitations(params, hi) >= k:
        raise NoRootError("no n_bare below N=1e12")
    while hi - lo > 1e-9 * lo:
        mid = 0.5 * (lo + hi)
        if _chi_of_total_excitations(params, mid) > k:
            lo = mid
        else:
            hi = mid
    n_bare = 0.5 * (lo + hi)
    return DerivedScales(
        delta=d,
        chi0=g * g / d,
        n_crit=d * d / (4.0 * g * g),
        n_bare=n_bare,
        n_sc=g**4 / (k * abs(d) ** 3),
        xi1=k / np.sqrt(2.0),
    )
