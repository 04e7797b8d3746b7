import numpy as np
import pytest

from jcosc import (
    DeviceParams,
    DomainError,
    NoRootError,
    QubitSign,
    chi_of_amplitude,
    derive_scales,
)


def test_qubit_sign_two_values():
    assert {int(s) for s in QubitSign} == {-1, 1}
    assert int(QubitSign.MINUS) == -1 and int(QubitSign.PLUS) == 1


class TestDeviceParams:
    def test_valid_construction(self, base_device):
        assert base_device.delta == pytest.approx(-1.0)
        assert base_device.drive_detuning == pytest.approx(0.0)

    @pytest.mark.parametrize("field,value", [
        ("cavity_freq", 0.0),
        ("coupling", -0.1),
        ("cavity_decay", 0.0),
        ("drive_freq", -9.0),
        ("drive_amp", -1e-6),
    ])
    def test_rejects_bad_field(self, base_device, field, value):
        with pytest.raises(DomainError):
            base_device.replace(**{field: value})

    def test_rejects_zero_detuning(self, base_device):
        with pytest.raises(DomainError):
            base_device.replace(qubit_freq=base_device.cavity_freq)

    def test_zero_drive_amp_allowed(self, base_device):
        assert base_device.replace(drive_amp=0.0).drive_amp == 0.0

    def test_hierarchy_clean_for_base_device(self, base_device):
        assert base_device.hierarchy_warnings() == []

    def test_hierarchy_flags_weak_dispersive(self, base_device):
        # g comparable to |delta| breaks two links of the chain
        bad = base_device.replace(coupling=0.9)
        msgs = bad.hierarchy_warnings()
        assert any("not <<" in m for m in msgs)

    def test_hierarchy_threshold_configurable(self, base_device):
        # |delta|/omega_c = 1/9.07 ~ 0.11: passes at 0.5, fails at 0.1
        assert base_device.hierarchy_warnings(threshold=0.1)


class TestChiOfAmplitude:
    def test_zero_amplitude_ground(self, base_device):
        # -g^2/sqrt(delta^2 - 2 g^2) = -0.04/sqrt(0.92)
        val = chi_of_amplitude(base_device, QubitSign.MINUS, 0.0)
        assert val == pytest.approx(-0.04 / np.sqrt(0.92), rel=1e-14)
        assert val == pytest.approx(-0.0417029, abs=5e-8)
        # close to the plain dispersive shift g^2/|delta|
        assert abs(val) == pytest.approx(0.04, rel=0.05)

    def test_zero_amplitude_excited(self, base_device):
        val = chi_of_amplitude(base_device, QubitSign.PLUS, 0.0)
        assert val == pytest.approx(0.04 / np.sqrt(1.08), rel=1e-14)
        assert val == pytest.approx(0.0384900179, abs=5e-9)

    def test_sign_follows_sigma(self, base_device):
        for a in (0.0, 1.0, 7.3, 400.0):
            assert chi_of_amplitude(base_device, QubitSign.MINUS, a) < 0
            assert chi_of_amplitude(base_device, QubitSign.PLUS, a) > 0

    @pytest.mark.parametrize("sigma", [QubitSign.MINUS, QubitSign.PLUS])
    def test_magnitude_decreases_and_saturates(self, base_device, sigma):
        amps = np.geomspace(1.0, 1e7, 200)
        vals = np.abs(chi_of_amplitude(base_device, sigma, amps))
        assert np.all(np.diff(vals) < 0)
        # tail behaves like g/(sqrt(2) A) -> 0
        assert vals[-1] == pytest.approx(0.2 / np.sqrt(2) / 1e7, rel=1e-3)

    def test_array_matches_scalar(self, base_device):
        amps = np.array([0.0, 0.5, 2.0, 31.0])
        arr = chi_of_amplitude(base_device, QubitSign.MINUS, amps)
        for a, v in zip(amps, arr):
            assert v == chi_of_amplitude(base_device, QubitSign.MINUS, float(a))

    def test_mirror_identity(self, base_device):
        # chi(A; +1) == -chi(A'; -1) exactly when A'^2 = A^2 + 2
        rng = np.random.default_rng(7)
        a = rng.uniform(0.0, 50.0, 100)
        ap = np.sqrt(a * a + 2.0)
        plus = chi_of_amplitude(base_device, QubitSign.PLUS, a)
        minus = chi_of_amplitude(base_device, QubitSign.MINUS, ap)
        np.testing.assert_allclose(plus, -minus, rtol=1e-14)

    def test_domain_error_outside_dispersive(self):
        # 2 g^2 > delta^2 makes the sigma=-1 radicand negative at A=0
        p = DeviceParams(9.07, 10.07, 0.9, 0.001, 0.0, 9.07)
        with pytest.raises(DomainError):
            chi_of_amplitude(p, QubitSign.MINUS, 0.0)

    def test_negative_amplitude_rejected(self, base_device):
        with pytest.raises(DomainError):
            chi_of_amplitude(base_device, QubitSign.MINUS, -1.0)


class TestDeriveScales:
    def test_scale_values(self, base_device):
        s = derive_scales(base_device)
        assert s.n_sc == pytest.approx(1.6, rel=1e-12)
        assert s.n_crit == pytest.approx(6.25, rel=1e-12)
        assert s.chi0 == pytest.approx(-0.04, rel=1e-12)
        assert s.xi1 == pytest.approx(0.001 / np.sqrt(2), rel=1e-12)
        assert s.delta == pytest.approx(-1.0)

    def test_n_bare_matches_closed_form(self, base_device):
        # |chi(N)| = kappa inverts exactly to (g^4/kappa^2 - delta^2)/(4 g^2)
        s = derive_scales(base_device)
        assert s.n_bare == pytest.approx(9993.75, rel=1e-8)

    def test_n_bare_satisfies_defining_relation(self, base_device):
        s = derive_scales(base_device)
        g, d = base_device.coupling, base_device.delta
        chi_n = g * g / np.sqrt(d * d + 4 * g * g * s.n_bare)
        assert chi_n == pytest.approx(base_device.cavity_decay, rel=1e-7)

    def test_n_bare_much_larger_than_n_crit(self, base_device):
        s = derive_scales(base_device)
        assert s.n_bare > 100 * s.n_crit

    def test_pure_function(self, base_device):
        assert derive_scales(base_device) == derive_scales(base_device)

    def test_no_root_when_overdamped(self, base_device):
        # kappa >= |chi(1)|: shift never resolved
        with pytest.raises(NoRootError):
            derive_scales(base_device.replace(cavity_decay=0.05))

    def test_no_root_at_vanishing_coupling(self, base_device):
        with pytest.raises(NoRootError):
            derive_scales(base_device.replace(coupling=1e-9))
