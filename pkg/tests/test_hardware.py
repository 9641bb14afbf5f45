import math

import numpy as np
import pytest

from trpgates import hardware as hw
from trpgates.hamiltonians import SweepParams

TABLE1 = SweepParams(5.8511, 2.9280e-4, 80.0)
B400 = hw.HBAR * 400.0  # b / hbar = 400 s^-1
EJ0_RF = hw.HBAR * 1e11


@pytest.fixture(scope="module")
def phys():
    return hw.from_dimensionless(TABLE1, B400)


def _rf(phys, b_scale=1.0, beta=1.1, threshold=0.05):
    p = hw.PhysicalSweep(phys.a, phys.b * b_scale, phys.B_twist, phys.T0)
    L = hw.rfsquid_inductance_for_beta(beta, EJ0_RF, 0.25)
    C = (1e-9) ** 2 / L
    return p, hw.rfsquid_schedule(p, L, C, EJ0_RF, 0.25, threshold=threshold)


def _rel(got, want, scale=None):
    scale = np.max(np.abs(want)) if scale is None else scale
    return float(np.max(np.abs(np.asarray(got) - want)) / scale)


# ------------------------------------------------------------ dimensionless map


def test_constants():
    assert hw.PHI0 == pytest.approx(2.067833848e-15, rel=1e-9)
    assert hw.HBAR == pytest.approx(1.054571817e-34, rel=1e-9)


def test_natural_units():
    p = hw.from_dimensionless(SweepParams(1.0, 1e-4, 80.0), hw.HBAR)
    assert p.a == pytest.approx(hw.HBAR, rel=1e-15)  # a / hbar = 1 s^-1
    assert p.T0 == pytest.approx(80.0, rel=1e-15)


def test_table1_physical_values(phys):
    # 30-digit evaluation of a = lam b^2/hbar, B = eta4 a^3/(hbar b^2), T0 = tau0 b/a
    assert phys.a == pytest.approx(9.8726482595670810574649479842e-29, rel=1e-13)
    assert phys.B_twist == pytest.approx(1501493994.66352939008, rel=1e-13)
    assert phys.T0 == pytest.approx(0.0341816068773393037206679085984, rel=1e-13)


def test_roundtrip(phys):
    back = hw.to_dimensionless(phys)
    for name in ("lam", "eta4", "tau0"):
        assert getattr(back, name) == pytest.approx(getattr(TABLE1, name), rel=1e-12)


def test_invalid_physical():
    with pytest.raises(hw.HardwareError):
        hw.from_dimensionless(TABLE1, 0.0)
    with pytest.raises(hw.HardwareError):
        hw.PhysicalSweep(-1.0, 1.0, 1.0, 1.0)


# ------------------------------------------------------------------ waveforms


def test_waveform_csv_roundtrip(tmp_path, phys):
    waves = hw.nmr_schedule(phys, 64)
    w = waves["twist_phase"]
    path = w.write_csv(tmp_path / "w.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == f"# channel=twist_phase units=rad T0_seconds={phys.T0!r}"
    assert lines[1] == "t_seconds,value"
    back = hw.read_waveform_csv(path)
    assert np.array_equal(back.values, w.values) and np.array_equal(back.times, w.times)
    assert back.times[0] == pytest.approx(-phys.T0 / 2) and back.times[-1] == pytest.approx(phys.T0 / 2)


def test_waveform_invariants():
    with pytest.raises(ValueError):
        hw.Waveform("x", "V", [0, 1, 1], [0, 0, 0], 1.0)
    with pytest.raises(ValueError):
        hw.Waveform("x", "V", [0, 1], [0], 1.0)


# ------------------------------------------------------------------------ NMR


def test_nmr_forward_inverse(phys):
    nmr = hw.nmr_translate(phys)
    assert nmr.omega1 == pytest.approx(800.0, rel=1e-14)  # 2 b / hbar
    back = hw.nmr_inverse(nmr)
    for name in ("a", "b", "B_twist", "T0"):
        assert getattr(back, name) == pytest.approx(getattr(phys, name), rel=1e-12)
    lam, eta4 = hw.nmr_dimensionless(nmr)
    assert lam == pytest.approx(TABLE1.lam, rel=1e-12)
    assert eta4 == pytest.approx(TABLE1.eta4, rel=1e-12)


def test_nmr_factor_two():
    p = hw.from_dimensionless(TABLE1, hw.HBAR * 200.0)
    assert hw.nmr_translate(p).omega1 == pytest.approx(400.0, rel=1e-14)


def test_nmr_script_b_from_experimental_settings():
    # omega1 = 393 Hz, T0 = 41.00 ms, A = 50000 Hz, eta4 = 4.50e-4; 30-digit value
    b_script = hw.nmr_script_b(393.0, 50000.0, 0.041, 4.5e-4)
    assert b_script == pytest.approx(29864.2270263970631082, rel=1e-13)
    lam, eta4 = hw.nmr_dimensionless(hw.NMRParameters(393.0, 50000.0, b_script, 0.041))
    assert eta4 == pytest.approx(4.5e-4, rel=1e-13)
    assert lam == pytest.approx(4 * 50000 / (393.0**2 * 0.041), rel=1e-14)


def test_nmr_reconstruction(phys):
    waves = hw.nmr_schedule(phys)
    at, bcos = hw.nmr_reconstruct(waves)
    t = waves["detector_offset"].times
    assert _rel(at, phys.sigma_z_coefficient(t)) <= 1e-10
    assert _rel(bcos, phys.sigma_x_coefficient(t), phys.b) <= 1e-10


# --------------------------------------------------------------- charge qubit


CG, EC = 1e-16, hw.HBAR * 1e10


def test_charge_schedule_shape(phys):
    waves, report = hw.charge_qubit_schedule(phys, CG, EC, sample_count=101)
    dv = waves["gate_voltage_offset"].values
    t = waves["gate_voltage_offset"].times
    vdc = report["gate_voltage_dc_V"]
    assert vdc == pytest.approx(hw.E_CHARGE / CG)
    assert dv[50] == 0.0 and t[50] == 0.0  # V_g(0) = e/C_g
    assert waves["squid_flux"].values[50] == 0.0
    # linear in t, antisymmetric about the dc level
    assert np.max(np.abs(np.diff(dv, 2))) <= 1e-12 * np.max(np.abs(dv))
    assert dv[0] == pytest.approx(-dv[-1], rel=1e-14)
    # Phi_x(T0/2)/Phi0 = (B/2)(T0/2)^4 / pi
    assert waves["squid_flux"].values[-1] == pytest.approx(0.5 * phys.B_twist * (phys.T0 / 2) ** 4 / math.pi, rel=1e-14)


def test_charge_reconstruction(phys):
    waves, report = hw.charge_qubit_schedule(phys, CG, EC)
    at, bcos = hw.charge_qubit_reconstruct(waves, CG, EC, report["EJ0_used"])
    t = waves["squid_flux"].times
    assert _rel(at, phys.sigma_z_coefficient(t)) <= 1e-10
    assert _rel(bcos, phys.sigma_x_coefficient(t), phys.b) <= 1e-10


def test_charge_ej_mismatch(phys):
    _, report = hw.charge_qubit_schedule(phys, CG, EC, EJ0=1.1 * phys.b)
    assert report["EJ0_relative_mismatch"] == pytest.approx(0.1)
    assert "rescaled" not in report
    _, report = hw.charge_qubit_schedule(phys, CG, EC, EJ0=1.1 * phys.b, rescale=True)
    # lam ~ 1/b^2, eta4 ~ b^2, tau0 ~ b
    assert report["rescaled"]["lam"] == pytest.approx(TABLE1.lam / 1.21, rel=1e-12)
    assert report["rescaled"]["eta4"] == pytest.approx(TABLE1.eta4 * 1.21, rel=1e-12)
    assert report["rescaled"]["tau0"] == pytest.approx(TABLE1.tau0 / 1.1, rel=1e-12)
    with pytest.raises(hw.HardwareError):
        hw.charge_qubit_schedule(phys, CG, 0.0)


# ------------------------------------------------------------------ rf-SQUID


def test_rfsquid_constants(phys):
    _, (_, consts) = _rf(phys)
    assert consts.beta_L0 == pytest.approx(1.1, rel=1e-12)
    assert consts.omega_star0 == pytest.approx(math.sqrt(0.1) * 1e9, rel=1e-12)
    ej = 2 * EJ0_RF * math.sin(0.25)
    assert consts.EJ_operating == pytest.approx(ej, rel=1e-14)
    assert consts.I0 == pytest.approx(8e-9 / hw.HBAR * 0.1**1.5 * ej, rel=1e-12)
    d = hw.HBAR / (8e-9 * math.sqrt(0.1) * 3.5 * math.cos(0.25) * EJ0_RF)
    assert consts.D == pytest.approx(d, rel=1e-12)
    assert consts.C == pytest.approx(d * 400 * 2 * math.pi / consts.omega_star0 * math.exp(consts.I0), rel=1e-12)
    assert consts.theta0 / math.pi == pytest.approx(0.5 - 0.25 / math.pi)


def test_rfsquid_reconstruction(phys):
    p, (waves, consts) = _rf(phys)
    at, bcos = hw.rfsquid_reconstruct(waves, consts)
    t = waves["loop_flux_bias"].times
    assert _rel(at, p.sigma_z_coefficient(t)) <= 1e-10
    assert _rel(bcos, p.sigma_x_coefficient(t), p.b) <= 1e-10


def test_rfsquid_loop_flux_is_half_quantum_at_zero(phys):
    _, (waves, _) = _rf(phys)
    bias = waves["loop_flux_bias"].values
    assert bias[len(bias) // 2 - 1] == pytest.approx(-bias[len(bias) // 2], rel=1e-12)
    assert np.all(np.diff(bias) > 0)


def test_rfsquid_no_double_well(phys):
    L = hw.rfsquid_inductance_for_beta(0.9, EJ0_RF, 0.25)
    with pytest.raises(hw.HardwareError, match="double well"):
        hw.rfsquid_schedule(phys, L, 1e-18 / L, EJ0_RF, 0.25)


def test_rfsquid_validity_flags(phys):
    _, (_, ok) = _rf(phys, threshold=0.2)
    assert ok.flags["valid"]
    _, (_, bad) = _rf(phys, b_scale=1000.0)
    assert not bad.flags["small_flux_offset"]
    assert not bad.flags["small_dEJ"]
    assert not bad.flags["small_dbeta"]
    assert not bad.flags["valid"]


def test_rfsquid_dbeta_at_published_point(phys):
    # delta beta / (beta - 1) = beta tan(theta0) (C + D) / (beta - 1) at the published constants
    _, (_, consts) = _rf(phys)
    want = 1.1 * math.tan(consts.theta0) * (consts.C + consts.D) / 0.1
    assert consts.flags["max_rel_dbeta"] == pytest.approx(want, rel=1e-3)
    assert consts.flags["small_flux_offset"] and consts.flags["small_dEJ"]


# ------------------------------------------------------- persistent-current


PCQ = dict(x1=0.46, x2=0.41, z1=4.0, z2=2.1)


def test_pcq_prefactors():
    pf = hw.pcq_prefactors(**PCQ)
    assert round(pf.p1, 2) == 0.61
    assert round(pf.p2, 1) == -3.1
    assert round(pf.p3, 2) == 0.68
    assert round(pf.p4, 1) == 5.9
    assert pf.p1 == pytest.approx(0.608308605341246290801, rel=1e-14)


def test_pcq_small_b_limit(phys):
    ej0 = phys.b * 1e20
    waves = hw.pcq_schedule(phys, ej0, 1e-4, **PCQ)
    np.testing.assert_allclose(waves["delta1"].values, 0.6083086053412463e-4, rtol=1e-9)
    np.testing.assert_allclose(waves["delta2"].values, -0.68249258160237389e-4, rtol=1e-9)


def test_pcq_reconstruction(phys):
    ej0 = phys.b * 1e4
    waves = hw.pcq_schedule(phys, ej0, 1e-4, **PCQ)
    at, bcos = hw.pcq_reconstruct(waves, ej0, 1e-4, **PCQ)
    t = waves["delta1"].times
    # z1 d1 + z2 d2 = z0 - (b/EJ0) tau and x1 d1 + x2 d2 = (b/EJ0) cos phi
    tau = phys.a / phys.b * t
    z = 4.0 * waves["delta1"].values + 2.1 * waves["delta2"].values
    assert np.max(np.abs(z - (1e-4 - 1e-4 * tau))) <= 1e-12
    assert _rel(at, phys.sigma_z_coefficient(t)) <= 1e-10  # E_J0 (b/E_J0) tau = a t
    assert _rel(bcos, phys.sigma_x_coefficient(t), phys.b) <= 1e-10


def test_pcq_singular():
    with pytest.raises(hw.HardwareError, match="singular"):
        hw.pcq_prefactors(x1=1.0, x2=2.0, z1=1.0, z2=2.0)


def test_report_json(tmp_path, phys):
    _, (_, consts) = _rf(phys)
    path = hw.write_report(consts.to_dict(), tmp_path / "r.json")
    import json

    doc = json.loads(path.read_text())
    assert doc["beta_L0"] == pytest.approx(1.1)
    assert isinstance(doc["validity"]["valid"], bool)
