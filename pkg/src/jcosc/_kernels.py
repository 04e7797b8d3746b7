"""Jitted compute kernels for stochastic wavefunction evolution.

Everything here operates on plain arrays so the hot loops stay allocation-free
and bitwise deterministic for a fixed seed.  The object-level API wrapping
these kernels lives in dynamics.py.

Frame conventions: amplitudes are stored in the drive rotating frame with the
number-diagonal part of the generator absorbed into link phases
z_n(t) = exp(-2i pi (d_{n+1}-d_n) t), so the integrated vector only carries
the slow envelope.  All rate arrays are linear-frequency (GHz); the 2*pi
lives inside this module.
"""

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) tableau with the quartic dense-output polynomial
# (same layout scipy's RK45 uses).

_C = np.array([0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0])

_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0,
     -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
     -2187.0 / 6784.0, 11.0 / 84.0],
])

_ERR = np.array([71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
                 -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0])

_P = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0],
])

_TWO_PI = 2.0 * np.pi

# splitmix64 constants
_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)
_SH11 = np.uint64(11)
_INV_2_53 = 1.0 / 9007199254740992.0

# status codes returned by the trajectory kernel
STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


@njit(cache=True, inline="always")
def _sm64_next(state):
    s = state + _SM_GAMMA
    z = s
    z = (z ^ (z >> _SH30)) * _SM_MUL1
    z = (z ^ (z >> _SH27)) * _SM_MUL2
    z = z ^ (z >> _SH31)
    return s, (z >> _SH11) * _INV_2_53


@njit(cache=True, inline="always")
def _rhs(phi, zst, offd, kap_pi, W, K, row):
    # d phi_n/dt = -2i pi (o_{n-1} conj(z_{n-1}) phi_{n-1} + o_n z_n phi_{n+1})
    #              - pi kappa n phi_n
    for n in range(W):
        c = 0.0j
        if n > 0:
            c += offd[n - 1] * np.conj(zst[n - 1]) * phi[n - 1]
        if n + 1 < W:
            c += offd[n] * zst[n] * phi[n + 1]
        K[row, n] = -1j * _TWO_PI * c - (kap_pi * n) * phi[n]


@njit(cache=True, inline="always")
def _stage_phases(EC, delta, h, W):
    for j in range(7):
        ch = _C[j] * h
        for n in range(W):
            EC[j, n] = np.exp(-1j * _TWO_PI * delta[n] * ch)


@njit(cache=True, inline="always")
def _qcoef(theta, out):
    # dense-output weights; out[0] multiplies the step-start state
    out[0] = 1.0
    t1 = theta
    t2 = t1 * theta
    t3 = t2 * theta
    t4 = t3 * theta
    for l in range(7):
        out[l + 1] = _P[l, 0] * t1 + _P[l, 1] * t2 + _P[l, 2] * t3 + _P[l, 3] * t4


@njit(cache=True, inline="always")
def _dense_state(phi, K, h, q, W, out):
    for n in range(W):
        out[n] = phi[n]
    for l in range(7):
        w = h * q[l + 1]
        if w != 0.0:
            for n in range(W):
                out[n] += w * K[l, n]


@njit(cache=True)
def mcwf_trajectory_kernel(delta, offd, sqn, kappa, t_samples, seed,
                           w0, tol, h0, max_steps, out_a, out_n, out_jt):
    """Evolve one quantum trajectory from vacuum, sampling at t_samples.

    delta[n]  : gap between number levels n+1 and n of the rotating-frame
                generator, linear GHz (length N-1 used, array length N)
    offd[n]   : drive coupling between levels n and n+1, linear GHz
    sqn[n]    : sqrt(n+1) lookup
    out_a     : normalized field expectation at each sample time
    out_n     : normalized occupation at each sample time
    out_jt    : jump times, filled up to capacity (size 0 disables)

    Returns (status, n_jumps, n_steps, truncated, max_tail_fraction, W_final).
    """
    N = sqn.shape[0]
    ns = t_samples.shape[0]
    kap_pi = np.pi * kappa

    phi = np.zeros(N, np.complex128)
    phi[0] = 1.0 + 0.0j
    ytmp = np.zeros(N, np.complex128)
    yden = np.zeros(N, np.complex128)
    zst = np.zeros(N, np.complex128)
    zbase = np.ones(N, np.complex128)
    K = np.zeros((7, N), np.complex128)
    EC = np.zeros((7, N), np.complex128)
    G = np.zeros((8, 8))
    q = np.zeros(8)

    W = w0
    if W > N:
        W = N
    if W < 2:
        W = 2

    # emit any samples at (or before) t = 0: vacuum
    s_idx = 0
    while s_idx < ns and t_samples[s_idx] <= 0.0:
        out_a[s_idx] = 0.0j
        out_n[s_idx] = 0.0
        s_idx += 1

    rng = seed
    rng, u = _sm64_next(rng)
    while u <= 0.0:
        rng, u = _sm64_next(rng)
    r = u

    # fastest link-phase rotation bounds the step so stage sampling cannot
    # alias the oscillating coefficients past the error estimator
    dmax = 0.0
    for n in range(W - 1):
        ad = abs(delta[n])
        if ad > dmax:
            dmax = ad
    hmax = 0.25 / max(dmax, 1e-12)

    klat = int(np.floor(4.0 * np.log2(max(min(h0, hmax), 1e-9))))
    h = 2.0 ** (klat / 4.0)
    _stage_phases(EC, delta, h, W)
    _rhs(phi, zbase, offd, kap_pi, W, K, 0)

    t = 0.0
    nrm2 = 1.0
    n_jumps = 0
    n_steps = 0
    truncated = False
    max_tail = 0.0
    accepted_since_sync = 0
    status = STATUS_OK

    while s_idx < ns:
        if n_steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        n_steps += 1

        # --- stages 1..6 (stage-6 argument is the 5th-order solution) ---
        for j in range(1, 7):
            for n in range(W):
                ytmp[n] = phi[n]
            for l in range(j):
                alj = _A[j, l]
                if alj != 0.0:
                    ha = h * alj
                    for n in range(W):
                        ytmp[n] += ha * K[l, n]
            for n in range(W):
                zst[n] = zbase[n] * EC[j, n]
            _rhs(ytmp, zst, offd, kap_pi, W, K, j)

        # --- embedded error estimate ---
        err2 = 0.0
        for n in range(W):
            e = (_ERR[0] * K[0, n] + _ERR[2] * K[2, n] + _ERR[3] * K[3, n]
                 + _ERR[4] * K[4, n] + _ERR[5] * K[5, n] + _ERR[6] * K[6, n])
            err2 += e.real * e.real + e.imag * e.imag
        err = h * np.sqrt(err2)
        sc = tol * (np.sqrt(nrm2) + 1e-300)

        if err > sc:
            fac = 0.9 * (sc / err) ** 0.2
            dk = int(np.floor(4.0 * np.log2(fac)))
            if dk > -1:
                dk = -1
            klat += dk
            h = 2.0 ** (klat / 4.0)
            if h < 1e-9:
                status = STATUS_STEP_UNDERFLOW
                break
            _stage_phases(EC, delta, h, W)
            continue

        # accepted; ytmp currently holds the end-of-step state
        N1 = 0.0
        for n in range(W):
            N1 += ytmp[n].real * ytmp[n].real + ytmp[n].imag * ytmp[n].imag

        jump = N1 < r
        theta_end = 1.0
        if jump:
            # Gram matrix of {phi, h*K_l} so the norm along the dense
            # interpolant is a cheap scalar polynomial evaluation
            for a in range(8):
                for b in range(8):
                    G[a, b] = 0.0
            for n in range(W):
                v0r = phi[n].real
                v0i = phi[n].imag
                G[0, 0] += v0r * v0r + v0i * v0i
                for l in range(7):
                    vlr = h * K[l, n].real
                    vli = h * K[l, n].imag
                    G[0, l + 1] += v0r * vlr + v0i * vli
                    for m in range(l, 7):
                        G[l + 1, m + 1] += vlr * (h * K[m, n].real) + vli * (h * K[m, n].imag)
            for a in range(8):
                for b in range(a):
                    G[a, b] = G[b, a]

            lo = 0.0
            hi = 1.0
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                _qcoef(mid, q)
                nv = 0.0
                for a in range(8):
                    qa = q[a]
                    if qa != 0.0:
                        for b in range(8):
                            nv += qa * q[b] * G[a, b]
                if nv > r:
                    lo = mid
                else:
                    hi = mid
            theta_end = 0.5 * (lo + hi)

        t_eff = t + theta_end * h

        # --- emit samples that fall inside the accepted (partial) step ---
        while s_idx < ns and t_samples[s_idx] <= t_eff + 1e-12:
            ts = t_samples[s_idx]
            th = (ts - t) / h
            if th < 0.0:
                th = 0.0
            if th > theta_end:
                th = theta_end
            _qcoef(th, q)
            _dense_state(phi, K, h, q, W, yden)
            norm_s = 0.0
            occ = 0.0
            fld = 0.0j
            dt_s = th * h
            for n in range(W):
                p = yden[n].real * yden[n].real + yden[n].imag * yden[n].imag
                norm_s += p
                occ += n * p
                if n + 1 < W:
                    zl = zbase[n] * np.exp(-1j * _TWO_PI * delta[n] * dt_s)
                    fld += sqn[n] * np.conj(yden[n]) * yden[n + 1] * zl
            if norm_s <= 0.0:
                norm_s = 1.0
            out_a[s_idx] = fld / norm_s
            out_n[s_idx] = occ / norm_s
            s_idx += 1
        if s_idx >= ns:
            break

        if jump:
            _qcoef(theta_end, q)
            _dense_state(phi, K, h, q, W, yden)
            s = theta_end * h
            for n in range(W):
                zbase[n] = zbase[n] * np.exp(-1j * _TWO_PI * delta[n] * s)
            w = 0.0
            for n in range(W - 1):
                p = yden[n + 1].real * yden[n + 1].real + yden[n + 1].imag * yden[n + 1].imag
                w += sqn[n] * sqn[n] * p
            if w > 1e-300:
                inv = 1.0 / np.sqrt(w)
                for n in range(W - 1):
                    phi[n] = sqn[n] * zbase[n] * yden[n + 1] * inv
                phi[W - 1] = 0.0j
                if n_jumps < out_jt.shape[0]:
                    out_jt[n_jumps] = t_eff
                n_jumps += 1
            else:
                # annihilation has nothing to act on; reset scale only
                nv = 0.0
                for n in range(W):
                    nv += yden[n].real * yden[n].real + yden[n].imag * yden[n].imag
                inv = 1.0 / np.sqrt(nv)
                for n in range(W):
                    phi[n] = yden[n] * inv
            t = t_eff
            nrm2 = 1.0
            rng, u = _sm64_next(rng)
            while u <= 0.0:
                rng, u = _sm64_next(rng)
            r = u
            _rhs(phi, zbase, offd, kap_pi, W, K, 0)
            continue

        # --- plain commit ---
        for n in range(W):
            phi[n] = ytmp[n]
            K[0, n] = K[6, n]
        for n in range(W):
            zbase[n] = zbase[n] * EC[6, n]
        t = t + h
        nrm2 = N1
        accepted_since_sync += 1
        if accepted_since_sync >= 4096:
            accepted_since_sync = 0
            for n in range(W):
                zbase[n] = np.exp(-1j * _TWO_PI * delta[n] * t)

        # --- truncation window management ---
        tail = 0.0
        lo_n = W - 3
        if lo_n < 0:
            lo_n = 0
        for n in range(lo_n, W):
            tail += phi[n].real * phi[n].real + phi[n].imag * phi[n].imag
        tail_frac = tail / (nrm2 + 1e-300)
        if tail_frac > 1e-13:
            if W < N:
                W_new = W + 64
                if int(W * 1.25) > W_new:
                    W_new = int(W * 1.25)
                if W_new > N:
                    W_new = N
                W = W_new
                dmax = 0.0
                for n in range(W - 1):
                    ad = abs(delta[n])
                    if ad > dmax:
                        dmax = ad
                hmax = 0.25 / max(dmax, 1e-12)
                while h > hmax and klat > -120:
                    klat -= 1
                    h = 2.0 ** (klat / 4.0)
                _stage_phases(EC, delta, h, W)
                for n in range(W):
                    zbase[n] = np.exp(-1j * _TWO_PI * delta[n] * t)
                _rhs(phi, zbase, offd, kap_pi, W, K, 0)
            else:
                if tail_frac > max_tail:
                    max_tail = tail_frac
                if tail_frac > 1e-10:
                    truncated = True

        # --- step-size growth with lattice hysteresis ---
        if err < sc:
            fac = 0.9 * (sc / (err + 1e-300)) ** 0.2
            if fac > 5.0:
                fac = 5.0
            if fac >= 1.35:
                dk = int(np.floor(4.0 * np.log2(fac)))
                h_try = 2.0 ** ((klat + dk) / 4.0)
                if h_try <= hmax:
                    klat += dk
                    h = h_try
                    _stage_phases(EC, delta, h, W)

    return status, n_jumps, n_steps, truncated, max_tail, W
