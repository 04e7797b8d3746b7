"""Excitation-dependent transition frequencies of the dressed cavity.

Three ladder models, all undriven and lossless:

* :func:`jc_ladder` — single two-level system, closed form per manifold;
* :func:`two_qubit_ladder` — two two-level systems sharing the cavity,
  diagonalized per conserved total-excitation block (dims 1/3/4);
* :func:`transmon_ladder` — weakly anharmonic multilevel artificial atom,
  charge-basis diagonalization feeding number-conserving cavity blocks.

Ladder entries are indexed by total excitation number N; the reported
frequency is E(N+1) − E(N) along the branch adiabatically connected to the
labeled bare state (maximum-overlap continuation, failure threshold 0.5).
"""

import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .errors import BranchFollowingError, ConvergenceError, DomainError
from .params import DeviceParams, QubitSign

__all__ = [
    "SpectrumLadder",
    "MultiQubitSpec",
    "TransmonSpec",
    "jc_ladder",
    "two_qubit_ladder",
    "transmon_ladder",
    "transmon_levels",
]


@dataclass(frozen=True)
class SpectrumLadder:
    branch_label: str
    numbers: np.ndarray        # excitation numbers N, sorted ascending
    freqs: np.ndarray          # transition frequency E(N+1)-E(N), GHz

    @property
    def entries(self) -> List[Tuple[int, float]]:
        return list(zip(self.numbers.tolist(), self.freqs.tolist()))


def jc_ladder(params: DeviceParams, sigma: QubitSign, n_range: Sequence[int]) -> SpectrumLadder:
    """Exact dressed ladder of one manifold of the two-level model."""
    n = np.unique(np.asarray(list(n_range), dtype=int))
    if n.size == 0 or n[0] < 0:
        raise DomainError("excitation numbers must be non-negative")
    s = int(sigma)
    shift = (1 + s) // 2
    g2 = params.coupling**2
    d2 = params.delta**2
    lo = np.sqrt(d2 + 4.0 * g2 * (n + shift))
    hi = np.sqrt(d2 + 4.0 * g2 * (n + 1 + shift))
    freqs = params.cavity_freq - s * (hi - lo) / 2.0
    return SpectrumLadder(f"sigma_z={s:+d}", n, freqs)


# ---------------------------------------------------------------------------
# two-qubit extension

@dataclass(frozen=True)
class MultiQubitSpec:
    detunings: Tuple[float, float]
    couplings: Tuple[float, float]
    active_index: int = 0

    def __post_init__(self):
        if len(self.detunings) != 2 or len(self.couplings) != 2:
            raise DomainError("exactly two qubits are supported")
        if any(g < 0 for g in self.couplings):
            raise DomainError("couplings must be non-negative")
        if self.active_index not in (0, 1):
            raise DomainError("active_index must be 0 or 1")
        if any(d == 0 for d in self.detunings):
            raise DomainError("qubit-cavity detunings must be nonzero")


# global ordering of the qubit sector: (q0, q1) occupation
_TQ_STATES = ((0, 0), (1, 0), (0, 1), (1, 1))


def _tq_block(M: int, d1: float, d2: float, g1: float, g2: float):
    """Eigensystem of one total-excitation block, energies relative to
    cavity_freq*M.  Returns (kept-state indices, eigvals, eigvecs)."""
    kept = [i for i, (a, b) in enumerate(_TQ_STATES) if a + b <= M]
    dim = len(kept)
    H = np.zeros((dim, dim))
    pos = {i: k for k, i in enumerate(kept)}
    diag = {0: 0.0, 1: d1, 2: d2, 3: d1 + d2}
    for i in kept:
        H[pos[i], pos[i]] = diag[i]
    rM = np.sqrt(M)
    rM1 = np.sqrt(M - 1) if M >= 1 else 0.0
    pairs = [(0, 1, g1 * rM), (0, 2, g2 * rM), (1, 3, g2 * rM1), (2, 3, g1 * rM1)]
    for i, j, v in pairs:
        if i in pos and j in pos:
            H[pos[i], pos[j]] = v
            H[pos[j], pos[i]] = v
    vals, vecs = eigh(H)
    return kept, vals, vecs


def _follow_branch(block_iter, seed_global_index, n_states, label, cavity_freq):
    """Maximum-overlap continuation through successive excitation blocks.

    block_iter yields (M, kept_indices, eigvals, eigvecs); the qubit-sector
    coordinates are compared in the fixed global frame across blocks.
    """
    prev = np.zeros(n_states)
    prev[seed_global_index] = 1.0
    energies = []
    numbers = []
    for M, kept, vals, vecs in block_iter:
        proj = np.array([prev[i] for i in kept])
        ov = vecs.T @ proj
        k = int(np.argmax(np.abs(ov)))
        if abs(ov[k]) < 0.5:
            raise BranchFollowingError(
                f"branch '{label}' ambiguous at N={M}: best overlap {abs(ov[k]):.3f}")
        energies.append(cavity_freq * M + vals[k])
        numbers.append(M)
        prev = np.zeros(n_states)
        for row, i in enumerate(kept):
            prev[i] = vecs[row, k]
    e = np.array(energies)
    n = np.array(numbers)
    return SpectrumLadder(label, n[:-1], e[1:] - e[:-1])


_STATE_WORD = {0: "ground", 1: "excited"}


def two_qubit_ladder(cavity_freq: float, spec: MultiQubitSpec, n_max: int) -> List[SpectrumLadder]:
    """Ladders of all four bare qubit configurations up to N = n_max - 1."""
    if n_max < 3:
        raise DomainError("n_max must be at least 3")
    d1, d2 = spec.detunings
    g1, g2 = spec.couplings
    blocks = [_tq_block(M, d1, d2, g1, g2) for M in range(n_max + 1)]

    ladders = []
    act = spec.active_index
    for a_state in (0, 1):
        for s_state in (0, 1):
            occ = [0, 0]
            occ[act] = a_state
            occ[1 - act] = s_state
            seed = _TQ_STATES.index(tuple(occ))
            m0 = a_state + s_state
            it = ((M, *blocks[M]) for M in range(m0, n_max + 1))
            # ";" keeps the label a single cell in comma-separated output
            label = (f"active={_STATE_WORD[a_state]};"
                     f"spectator={_STATE_WORD[s_state]}")
            ladders.append(_follow_branch(it, seed, 4, label, cavity_freq))
    return ladders


# ---------------------------------------------------------------------------
# transmon extension

@dataclass(frozen=True)
class TransmonSpec:
    e_c: float
    e_j: float
    coupling: float
    charge_cutoff: int = 60
    level_cutoff: int = 10

    def __post_init__(self):
        if self.e_c <= 0 or self.e_j <= 0:
            raise DomainError("charging and tunneling energies must be positive")
        if self.coupling < 0:
            raise DomainError("coupling must be non-negative")
        if self.charge_cutoff < 10:
            raise DomainError("charge_cutoff must be at least 10")
        if not 2 <= self.level_cutoff <= 2 * self.charge_cutoff:
            raise DomainError("level_cutoff out of range")
        if self.e_j / self.e_c < 20:
            warnings.warn(
                f"e_j/e_c = {self.e_j / self.e_c:.1f} is below the weakly "
                "anharmonic regime (>= 20)", stacklevel=2)


def _charge_basis_levels(e_c: float, e_j: float, cutoff: int, n_levels: int):
    k = np.arange(-cutoff, cutoff + 1, dtype=float)
    diag = 4.0 * e_c * k**2
    off = np.full(k.size - 1, -e_j / 2.0)
    vals, vecs = eigh_tridiagonal(diag, off, select="i",
                                  select_range=(0, n_levels - 1))
    return vals - vals[0], vecs, k


def transmon_levels(spec: TransmonSpec):
    """Bare artificial-atom levels (relative to ground) and the neighbor
    coupling strengths normalized to reproduce spec.coupling on 0-1.

    Raises ConvergenceError unless doubling the charge-basis cutoff moves
    every kept level by less than 1e-9 GHz.
    """
    levels, vecs, k = _charge_basis_levels(
        spec.e_c, spec.e_j, spec.charge_cutoff, spec.level_cutoff)
    check, _, _ = _charge_basis_levels(
        spec.e_c, spec.e_j, 2 * spec.charge_cutoff, spec.level_cutoff)
    drift = np.max(np.abs(levels - check))
    if drift > 1e-9:
        raise ConvergenceError(
            f"charge-basis levels move by {drift:.2e} GHz when the cutoff "
            f"doubles; raise charge_cutoff (now {spec.charge_cutoff})")
    # charge-operator matrix elements between adjacent levels; parity makes
    # same-level and next-nearest elements vanish identically
    dip = np.array([
        abs(np.sum(vecs[:, j] * k * vecs[:, j + 1]))
        for j in range(spec.level_cutoff - 1)
    ])
    if dip[0] <= 0:
        raise ConvergenceError("vanishing 0-1 dipole element")
    couplings = spec.coupling * dip / dip[0]
    return levels, couplings


def _transmon_block(M: int, cavity_freq: float, levels: np.ndarray,
                    couplings: np.ndarray):
    jmax = min(M, levels.size - 1)
    dim = jmax + 1
    diag = np.array([cavity_freq * (M - j) + levels[j] for j in range(dim)])
    if dim == 1:
        return list(range(dim)), diag - cavity_freq * M, np.ones((1, 1))
    off = np.array([couplings[j] * np.sqrt(M - j) for j in range(dim - 1)])
    vals, vecs = eigh_tridiagonal(diag - cavity_freq * M, off)
    return list(range(dim)), vals, vecs


def transmon_ladder(cavity_freq: float, spec: TransmonSpec, n_max: int) -> List[SpectrumLadder]:
    """Cavity-like ladders for the atom held in its ground or first excited
    level, up to N = n_max - 1 total excitations."""
    if n_max < 3:
        raise DomainError("n_max must be at least 3")
    levels, couplings = transmon_levels(spec)
    blocks = [_transmon_block(M, cavity_freq, levels, couplings)
              for M in range(n_max + 1)]
    ladders = []
    for t, word in ((0, "ground"), (1, "excited")):
        it = ((M, *blocks[M]) for M in range(t, n_max + 1))
        ladders.append(_follow_branch(it, t, spec.level_cutoff,
                                      f"transmon={word}", cavity_freq))
    return ladders
