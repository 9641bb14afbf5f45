"""Target gates and the universality identities that tie them together."""

from __future__ import annotations

import cmath
import math

import numpy as np

_S = 1.0 / math.sqrt(2.0)

# CLI-facing names -> canonical names
ALIASES = {
    "hadamard": "H",
    "phase": "P",
    "pi8": "PI8",
    "not": "NOT",
    "cnot": "CNOT",
    "cp": "CP",
    "vp": "V_P",
    "vpi8": "V_PI8",
    "vcp": "V_CP",
    "sigmaz": "SIGMA_Z",
    "identity": "I",
}


def _off(theta: float) -> np.ndarray:
    return np.array([[0, cmath.exp(1j * theta)], [cmath.exp(-1j * theta), 0]], dtype=complex)


_GATES = {
    "H": lambda: np.array([[_S, _S], [_S, -_S]], dtype=complex),
    "P": lambda: np.diag([1, 1j]).astype(complex),
    "PI8": lambda: np.diag([1, cmath.exp(1j * math.pi / 4)]),
    "NOT": lambda: np.array([[0, 1], [1, 0]], dtype=complex),
    "CNOT": lambda: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CP": lambda: np.diag([1, 1, 1, -1]).astype(complex),
    "V_P": lambda: _off(math.pi / 4),
    "V_PI8": lambda: _off(math.pi / 8),
    "V_CP": lambda: np.diag([1, 1, -1, 1]).astype(complex),
    "SIGMA_Z": lambda: np.diag([1, -1]).astype(complex),
    "I": lambda: np.eye(2, dtype=complex),
}

GATE_NAMES = tuple(_GATES)


def canonical_name(name: str) -> str:
    key = ALIASES.get(name.lower(), name.upper())
    if key not in _GATES:
        raise ValueError(f"unknown gate {name!r}; choose from {sorted(ALIASES)}")
    return key


def target(name: str) -> np.ndarray:
    """Exact target matrix by canonical (``V_CP``) or CLI (``vcp``) name."""
    return _GATES[canonical_name(name)]()


def gate_dim(name: str) -> int:
    return target(name).shape[0]


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))) <= tol


def verify_universality() -> dict[str, float]:
    """Frobenius residuals of the identities composing the universal set."""
    h, nt, p = target("H"), target("NOT"), target("P")
    i2, sz = target("I"), target("SIGMA_Z")
    ih = np.kron(i2, h)
    cnot = ih @ np.kron(sz, i2) @ target("V_CP") @ ih
    return {
        "phase_from_vp": float(np.linalg.norm(cmath.exp(1j * math.pi / 4) * nt @ target("V_P") - p)),
        "pi8_from_vpi8": float(
            np.linalg.norm(cmath.exp(1j * math.pi / 8) * nt @ target("V_PI8") - target("PI8"))
        ),
        "cnot_from_vcp": float(np.linalg.norm(cnot - target("CNOT"))),
        "sigmaz_from_phase": float(np.linalg.norm(p @ p - sz)),
    }
