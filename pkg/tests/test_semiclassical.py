import numpy as np
import pytest

from jcosc import DeviceParams, GridResolutionError, QubitSign
from jcosc.semiclassical import (
    Branch,
    Stability,
    bistability_map,
    bistable_drive_range,
    critical_point_c1,
    critical_point_c2,
    kerr_comparison_boundary,
    solve_amplitudes,
    step_metrics,
    _G_and_derivs,
    _jc_shift,
)

S = QubitSign.MINUS

# frozen numeric fold-merge points for the base device (sigma=-1), computed
# independently with a dense root-count scan + cusp Newton solve
C1_XI, C1_OM = 3.34293798e-04, 0.04082452
C2_XI, C2_OM = 1.38497560e-01, 9.74335e-05


def drive_at(params, omega, xi):
    return params.replace(drive_freq=params.cavity_freq + omega, drive_amp=xi)


class TestSolveAmplitudes:
    def test_linear_cavity_closed_form(self, base_device):
        # coupling negligible -> linear response with the exact closed form
        p = drive_at(base_device.replace(coupling=1e-15), 5e-4, 2e-3)
        sol = solve_amplitudes(p, S)
        wd, wc, k = p.drive_freq, p.cavity_freq, p.cavity_decay
        expect = 2 * wc * p.drive_amp / np.sqrt((wd**2 - wc**2) ** 2 + k**2 * wd**2)
        assert len(sol.roots) == 1
        assert sol.roots[0].amplitude == pytest.approx(expect, rel=1e-10)

    def test_bare_resonance_strong_drive(self, base_device):
        # far above the closing point the shift has saturated away and the
        # response approaches the bare-cavity resonant value 2 xi / kappa
        p = drive_at(base_device, 0.0, 2.0)
        sol = solve_amplitudes(p, S)
        assert len(sol.roots) == 1
        assert sol.roots[0].amplitude == pytest.approx(2 * 2.0 / 0.001, rel=0.01)
        assert sol.roots[0].branch is Branch.BRIGHT

    def test_three_roots_midway(self, base_device):
        p = drive_at(base_device, 0.5 * (C1_OM + C2_OM), np.sqrt(C1_XI * C2_XI))
        sol = solve_amplitudes(p, S)
        assert sol.bistable and len(sol.roots) == 3
        a = [r.amplitude for r in sol.roots]
        assert a[0] < a[1] < a[2]
        assert [r.branch for r in sol.roots] == [Branch.DIM, Branch.MIDDLE, Branch.BRIGHT]
        assert [r.stability for r in sol.roots] == [
            Stability.STABLE,
            Stability.UNSTABLE,
            Stability.STABLE,
        ]

    def test_zero_drive(self, base_device):
        sol = solve_amplitudes(drive_at(base_device, 0.01, 0.0), S)
        assert not sol.bistable
        assert len(sol.roots) == 1 and sol.roots[0].amplitude == 0.0

    def test_residuals(self, base_device):
        # every root satisfies the amplitude equation to 1e-8 of the drive term
        model = _jc_shift(base_device, S)
        rng = np.random.default_rng(3)
        for _ in range(40):
            om = rng.uniform(-0.01, 0.05)
            xi = 10 ** rng.uniform(-4, -0.5)
            sol = solve_amplitudes(drive_at(base_device, om, xi), S)
            target = 4 * base_device.cavity_freq**2 * xi**2
            for r in sol.roots:
                g = _G_and_derivs(r.amplitude**2, om, base_device, model)[0]
                assert abs(g - target) <= 1e-8 * target

    def test_root_count_odd(self, base_device):
        rng = np.random.default_rng(11)
        for _ in range(60):
            om = rng.uniform(-0.01, 0.05)
            xi = 10 ** rng.uniform(-4.5, -0.3)
            sol = solve_amplitudes(drive_at(base_device, om, xi), S)
            assert len(sol.roots) in (1, 3)
            assert sol.bistable == (len(sol.roots) == 3)


class TestBistabilityMap:
    def test_all_single_below_onset(self, base_device):
        xi_onset = critical_point_c1(base_device, S).xi
        m = bistability_map(
            base_device, S, np.linspace(-0.01, 0.05, 31), np.array([0.5 * xi_onset])
        )
        assert np.all(m.counts == 1)
        assert m.boundary_cells == frozenset()

    def test_all_single_above_coupling(self, base_device):
        m = bistability_map(
            base_device, S, np.linspace(-0.05, 0.05, 41), np.array([0.25])
        )
        assert np.all(m.counts == 1)

    def test_region_corners_near_critical_points(self, base_device):
        om = np.linspace(-0.002, 0.045, 80)
        xi = np.geomspace(2e-4, 0.2, 60)
        m = bistability_map(base_device, S, om, xi)
        rows, cols = np.nonzero(m.counts == 3)
        assert rows.size > 0
        # drive extent of the region brackets the fold-merge drives; the
        # wedge narrows toward both tips so the outermost populated rows sit
        # strictly inside (C1_XI, C2_XI) at this resolution
        assert C1_XI < xi[rows.min()] < 2.0 * C1_XI
        assert 0.6 * C2_XI < xi[rows.max()] <= 1.01 * C2_XI
        # low-drive corner sits at the opening detuning, high-drive corner
        # near the bare frequency
        assert om[cols[rows == rows.min()]].mean() == pytest.approx(C1_OM, abs=0.002)
        assert abs(om[cols[rows == rows.max()]].mean()) < 0.002
        assert len(m.boundary_cells) > 0

    def test_boundary_cells_flag_count_changes(self, base_device):
        om = np.linspace(0.035, 0.045, 21)
        xi = np.geomspace(3e-4, 1e-3, 11)
        m = bistability_map(base_device, S, om, xi)
        for i in range(xi.size):
            for j in range(om.size):
                neigh = []
                if i > 0:
                    neigh.append(m.counts[i - 1, j])
                if i + 1 < xi.size:
                    neigh.append(m.counts[i + 1, j])
                if j > 0:
                    neigh.append(m.counts[i, j - 1])
                if j + 1 < om.size:
                    neigh.append(m.counts[i, j + 1])
                expect = any(n != m.counts[i, j] for n in neigh)
                assert ((i, j) in m.boundary_cells) == expect

    def test_rejects_bad_grids(self, base_device):
        with pytest.raises(GridResolutionError):
            bistability_map(base_device, S, np.array([0.0, -0.01]), np.array([1e-3]))
        with pytest.raises(GridResolutionError):
            bistability_map(base_device, S, np.array([]), np.array([1e-3]))


class TestCriticalPoints:
    def test_analytic_c1(self, base_device):
        c = critical_point_c1(base_device, S)
        assert c.xi == pytest.approx((1e-3) ** 1.5 / (3**0.75 * 0.04), rel=1e-12)
        # pulled sqrt(3) kappa / 2 from the small-amplitude resonance toward
        # the bare frequency; resonance is above the cavity for sigma=-1
        assert c.detuning == pytest.approx(0.04 / np.sqrt(0.92) - np.sqrt(3) / 2 * 1e-3, rel=1e-12)
        assert c.kind == "C1" and c.method == "analytic"

    def test_analytic_c2(self, base_device):
        c = critical_point_c2(base_device, S)
        assert c.xi == pytest.approx(0.2 / np.sqrt(2), rel=1e-12)
        assert c.detuning == 0.0

    def test_numeric_matches_frozen_oracle(self, base_device):
        c1 = critical_point_c1(base_device, S, "numeric")
        c2 = critical_point_c2(base_device, S, "numeric")
        assert c1.xi == pytest.approx(C1_XI, rel=1e-6)
        assert c1.detuning == pytest.approx(C1_OM, abs=1e-7)
        assert c2.xi == pytest.approx(C2_XI, rel=1e-6)
        assert c2.detuning == pytest.approx(C2_OM, abs=1e-7)
        assert c1.method == "numeric" and c2.method == "numeric"

    def test_numeric_close_to_analytic(self, base_device):
        k = base_device.cavity_decay
        c1n = critical_point_c1(base_device, S, "numeric")
        c1a = critical_point_c1(base_device, S)
        assert c1n.xi == pytest.approx(c1a.xi, rel=0.05)
        assert c1n.detuning == pytest.approx(c1a.detuning, abs=k)
        c2n = critical_point_c2(base_device, S, "numeric")
        assert c2n.xi == pytest.approx(0.2 / np.sqrt(2), rel=0.10)
        assert abs(c2n.detuning) < 5 * k

    def test_kappa_scaling_of_onset(self, base_device):
        # opening drive scales like kappa^{3/2} -> vanishes with loss
        a = critical_point_c1(base_device, S).xi
        b = critical_point_c1(base_device.replace(cavity_decay=1e-4), S).xi
        assert b == pytest.approx(a / 10**1.5, rel=1e-12)

    def test_doubling_g_doubles_c2(self, base_device):
        a = critical_point_c2(base_device, S)
        b = critical_point_c2(base_device.replace(coupling=0.4), S)
        assert b.xi == pytest.approx(2 * a.xi, rel=1e-12)
        bn = critical_point_c2(base_device.replace(coupling=0.4), S, "numeric")
        assert bn.xi == pytest.approx(2 * a.xi, rel=0.10)

    def test_sigma_plus_mirror(self, base_device):
        # excited-manifold wedge lives below the bare frequency
        c1 = critical_point_c1(base_device, QubitSign.PLUS, "numeric")
        c1a = critical_point_c1(base_device, QubitSign.PLUS)
        assert c1.detuning < 0 and c1a.detuning < 0
        assert c1.detuning == pytest.approx(c1a.detuning, abs=base_device.cavity_decay)

    def test_delta_positive_mirror_same_numbers(self, base_device, mirror_device):
        # detuning enters the amplitude equation only squared
        a = critical_point_c1(base_device, S, "numeric")
        b = critical_point_c1(mirror_device, S, "numeric")
        assert b.xi == pytest.approx(a.xi, rel=1e-9)
        assert b.detuning == pytest.approx(a.detuning, abs=1e-9)


class TestStepMetrics:
    def test_formulas(self, base_device):
        m = step_metrics(base_device, S)
        assert m.ratio == pytest.approx(80.0, rel=1e-12)
        assert m.gain == pytest.approx(np.sqrt(2) * 0.2 / 1e-3**1.5, rel=1e-12)

    def test_numeric_gain_within_factor_two(self, base_device):
        m = step_metrics(base_device, S)
        assert 0.5 < m.gain_numeric / m.gain < 2.0
        # frozen from the oracle scan of the bare-frequency cut
        assert m.gain_numeric == pytest.approx(1.059e4, rel=0.02)

    def test_kappa_scaling_of_ratio(self, base_device):
        a = step_metrics(base_device, S).ratio
        b = step_metrics(base_device.replace(cavity_decay=4e-3), S).ratio
        assert b == pytest.approx(a / 4, rel=1e-12)

    def test_monotone_response_at_bare_frequency(self, base_device):
        # A(xi) never decreases along the Omega=0 cut (no fold crosses it)
        xis = np.geomspace(1e-4, 0.5, 101)
        amps = []
        for xi in xis:
            sol = solve_amplitudes(drive_at(base_device, 0.0, float(xi)), S)
            assert len(sol.roots) == 1
            amps.append(sol.roots[0].amplitude)
        assert np.all(np.diff(amps) > 0)


class TestKerrComparison:
    def test_boundaries_coincide_near_onset(self, base_device):
        om = np.linspace(0.0395, 0.0425, 41)
        xi = np.geomspace(0.7 * C1_XI, 2.1 * C1_XI, 25)
        mj = bistability_map(base_device, S, om, xi)
        mk = kerr_comparison_boundary(base_device, S, om, xi)
        assert (mj.counts == 3).sum() > 10 and (mk.counts == 3).sum() > 10
        for b1, b2 in ((mj.boundary_cells, mk.boundary_cells),
                       (mk.boundary_cells, mj.boundary_cells)):
            for (i, j) in b1:
                assert min(max(abs(i - i2), abs(j - j2)) for (i2, j2) in b2) <= 1

    def test_kerr_never_closes(self, base_device):
        # at xi = g the saturating model has no three-root cells left while
        # the linearized model is still bistable (below its resonance)
        om = np.linspace(-0.055, 0.055, 45)
        xi = np.array([0.2])
        assert np.all(bistability_map(base_device, S, om, xi).counts == 1)
        mk = kerr_comparison_boundary(base_device, S, om, xi)
        assert (mk.counts == 3).sum() > 0

    def test_vanishing_coupling_no_bistability(self, base_device):
        p = base_device.replace(coupling=1e-15)
        om = np.linspace(-0.01, 0.01, 11)
        xi = np.geomspace(1e-4, 0.2, 11)
        assert np.all(bistability_map(p, S, om, xi).counts == 1)
        assert np.all(kerr_comparison_boundary(p, S, om, xi).counts == 1)


class TestReflectionSymmetry:
    def test_high_amplitude_roots_mirror(self, base_device):
        # A(Omega, +1) vs A(-Omega, -1): same multiplicity cells, stable
        # roots with A^2 > 100 agree to a few percent
        omegas = np.linspace(-0.06, 0.06, 41)
        xis = np.geomspace(3e-3, 0.12, 12)
        worst = 0.0
        n_pairs = 0
        for xi in xis:
            for om in omegas:
                sp = solve_amplitudes(drive_at(base_device, +om, float(xi)), QubitSign.PLUS)
                sm = solve_amplitudes(drive_at(base_device, -om, float(xi)), QubitSign.MINUS)
                if len(sp.roots) != len(sm.roots):
                    continue  # fold edges shift by O(1/A^2); skip unpaired cells
                for rp, rm in zip(sp.roots, sm.roots):
                    if rp.stability is not Stability.STABLE:
                        continue
                    if min(rp.amplitude, rm.amplitude) ** 2 <= 100.0:
                        continue
                    assert rp.branch == rm.branch
                    rel = abs(rp.amplitude - rm.amplitude) / rm.amplitude
                    worst = max(worst, rel)
                    n_pairs += 1
        assert n_pairs > 30
        assert worst < 0.05


class TestDriveRange:
    def test_nested_inside_critical_drives(self, base_device):
        rng = bistable_drive_range(base_device, S, 0.01)
        assert rng is not None
        assert C1_XI < rng[0] < rng[1] < C2_XI

    def test_none_outside_window(self, base_device):
        assert bistable_drive_range(base_device, S, 0.0) is None
        assert bistable_drive_range(base_device, S, 0.05) is None
        assert bistable_drive_range(base_device, S, -0.01) is None
