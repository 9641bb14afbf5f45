import cmath
import math

import numpy as np
import pytest

from trpgates import targets


@pytest.mark.parametrize("name", targets.GATE_NAMES)
def test_every_target_is_unitary(name):
    assert targets.is_unitary(targets.target(name), 1e-15)


def test_aliases():
    assert targets.canonical_name("vcp") == "V_CP"
    assert targets.canonical_name("Hadamard") == "H"
    assert targets.canonical_name("V_PI8") == "V_PI8"
    assert targets.gate_dim("cnot") == 4 and targets.gate_dim("not") == 2
    with pytest.raises(ValueError):
        targets.target("toffoli")


def test_modified_gates():
    np.testing.assert_array_equal(targets.target("V_CP"), np.diag([1, 1, -1, 1]))
    vp = targets.target("V_P")
    assert vp[0, 1] == pytest.approx(cmath.exp(1j * math.pi / 4))
    assert vp[1, 0] == pytest.approx(cmath.exp(-1j * math.pi / 4))
    assert vp[0, 0] == 0 and vp[1, 1] == 0


def test_universality_residuals():
    res = targets.verify_universality()
    assert set(res) == {"phase_from_vp", "pi8_from_vpi8", "cnot_from_vcp", "sigmaz_from_phase"}
    assert max(res.values()) <= 1e-14


def test_targets_are_fresh_copies():
    a = targets.target("H")
    a[0, 0] = 7
    assert targets.target("H")[0, 0] != 7
