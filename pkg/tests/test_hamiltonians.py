import math

import numpy as np
import pytest

from trpgates.hamiltonians import (
    SIGMA_Z,
    SweepParams,
    TwoQubitParams,
    dh_dtau,
    h1,
    h2_base,
    hamiltonian,
    is_hermitian,
    resonance_times,
    twist_phi4,
    twist_rate,
)

TABLE1 = SweepParams(5.8511, 2.9280e-4, 80.0)
VCP = TwoQubitParams(SweepParams(5.1, 2.4e-4, 120.0), d1=11.702, d2=-2.6, d3=-0.41, d4=6.6650, c4=5.0003)


def test_params_validation():
    for bad in [(0, 1e-4, 80), (5, -1e-4, 80), (5, 1e-4, 0), (5, 1e-4, math.inf), (math.nan, 1e-4, 80)]:
        with pytest.raises(ValueError):
            SweepParams(*bad)
    with pytest.raises(ValueError):
        TwoQubitParams(TABLE1, d1=math.nan, d2=0, d3=1, d4=0, c4=0)


def test_params_helpers():
    assert TABLE1.non_adiabatic
    assert not SweepParams(0.5, 1e-4, 80).non_adiabatic
    assert TABLE1.window == (-40.0, 40.0)
    moved = VCP.replace(lam=5.2, c4=5.0)
    assert moved.lam == 5.2 and moved.c4 == 5.0 and moved.d1 == VCP.d1 and moved.tau0 == 120.0
    assert VCP.dim == 4 and TABLE1.dim == 2


def test_twist_values():
    # eta4 tau^4 / (2 lam) and 2 eta4 tau^3 / lam at tau = 40, evaluated at 30 digits
    assert twist_phi4(40.0, TABLE1) == pytest.approx(64.0535967595836680, rel=1e-14)
    assert twist_rate(40.0, TABLE1) == pytest.approx(6.40535967595836680, rel=1e-14)
    assert twist_phi4(0.0, TABLE1) == 0.0
    assert twist_phi4(-13.0, TABLE1) == twist_phi4(13.0, TABLE1)


def test_h1_structure():
    for tau in (-40.0, -3.3, 0.0, 12.5, 40.0):
        h = h1(tau, TABLE1)
        assert is_hermitian(h)
        assert abs(np.trace(h)) < 1e-15
        # closed-form eigenvalues +-sqrt(tau^2 + 1)/lambda
        r = math.sqrt(tau**2 + 1) / TABLE1.lam
        np.testing.assert_allclose(np.linalg.eigvalsh(h), [-r, r], rtol=1e-13)
    h0 = h1(0.0, TABLE1)
    np.testing.assert_allclose(h0, [[0, -1 / 5.8511], [-1 / 5.8511, 0]], atol=1e-16)


def test_h1_twist_enters_transverse_phase():
    tau = 20.0
    h = h1(tau, TABLE1)
    phi = twist_phi4(tau, TABLE1)
    # <0|H|1> = -(cos phi - i sin phi)/lambda
    assert h[0, 1] == pytest.approx(-complex(math.cos(phi), -math.sin(phi)) / TABLE1.lam, abs=1e-15)
    assert h[0, 0].real == pytest.approx(tau / TABLE1.lam)


def test_h2_diagonal_at_zero():
    p = VCP
    h = h2_base(0.0, p)
    assert is_hermitian(h)
    z1 = -(p.d1 + p.d2) / 2
    z2 = -p.d2 / 2
    k = math.pi / 2 * p.d4
    want = [z1 + z2 - k, z1 - z2 + k, -z1 + z2 + k, -z1 - z2 - k]
    np.testing.assert_allclose(np.diag(h).real, want, rtol=1e-14)
    assert abs(np.trace(h)) < 1e-13


def test_h2_uncoupled_spectrum():
    # d1 = d2 = d4 = 0, d3 = 1: two identical spins, spectrum {-2r, 0, 0, 2r}
    p = TwoQubitParams(SweepParams(4.0, 3e-4, 100.0), d1=0, d2=0, d3=1, d4=0, c4=0)
    for tau in (-17.0, 0.0, 9.0):
        r = math.sqrt(tau**2 + 1) / 4.0
        np.testing.assert_allclose(np.linalg.eigvalsh(h2_base(tau, p)), [-2 * r, 0, 0, 2 * r], atol=1e-14)


def test_h2_separates_into_single_qubit_terms():
    p = TwoQubitParams(TABLE1, d1=0, d2=0, d3=1, d4=0, c4=0)
    tau = 7.0
    eye = np.eye(2)
    want = np.kron(h1(tau, TABLE1), eye) + np.kron(eye, h1(tau, TABLE1))
    np.testing.assert_allclose(h2_base(tau, p), want, atol=1e-15)


@pytest.mark.parametrize("params", [TABLE1, VCP])
def test_dh_dtau_matches_finite_difference(params):
    for tau in (-35.0, -2.0, 0.3, 18.0):
        step = 1e-5
        fd = (hamiltonian(tau + step, params) - hamiltonian(tau - step, params)) / (2 * step)
        np.testing.assert_allclose(dh_dtau(tau, params), fd, atol=1e-8)


def test_dh_dtau_at_zero_is_pure_sweep():
    # the twist rate vanishes at tau = 0, leaving +(1/lambda) sigma_z
    np.testing.assert_allclose(dh_dtau(0.0, TABLE1), SIGMA_Z / TABLE1.lam, atol=1e-16)


def test_resonance_times():
    res = resonance_times(TABLE1)
    assert [r.in_window for r in res] == [False, True, False]
    assert res[2].tau == pytest.approx(58.4405727765230534, rel=1e-14)
    assert res[0].tau == -res[2].tau
    wide = resonance_times(SweepParams(5.0, 8.1464e-4, 80.0))
    assert all(r.in_window for r in wide)  # 1/sqrt(8.1464e-4) = 35.04 < 40
