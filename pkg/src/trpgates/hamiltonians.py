"""Dimensionless TRP Hamiltonians for one and two qubits.

Time is the dimensionless sweep time tau = (a/b) t and the Schrodinger
equation reads ``i d|psi>/dtau = H(tau)|psi>``.  The sweep runs over
``-tau0/2 <= tau <= tau0/2`` and carries the quartic twist
``phi4(tau) = (eta4 / 2 lambda) tau**4``.

Sign convention: the longitudinal term enters as ``+(tau/lambda) sigma_z``
for every qubit, together with ``-(1/lambda)[cos phi sigma_x + sin phi sigma_y]``.
With this choice the rotating-frame detuning is ``(tau - eta4 tau**3)/lambda``,
which vanishes at the three resonance times 0 and ``+-1/sqrt(eta4)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

# qubit 1 is the left (most significant) tensor slot: |00>, |01>, |10>, |11>
S1X = np.kron(SIGMA_X, IDENTITY2)
S1Y = np.kron(SIGMA_Y, IDENTITY2)
S1Z = np.kron(SIGMA_Z, IDENTITY2)
S2X = np.kron(IDENTITY2, SIGMA_X)
S2Y = np.kron(IDENTITY2, SIGMA_Y)
S2Z = np.kron(IDENTITY2, SIGMA_Z)
ZZ = np.kron(SIGMA_Z, SIGMA_Z)

HERMITIAN_TOL = 1e-14


@dataclass(frozen=True)
class SweepParams:
    """Dimensionless quartic TRP sweep: inversion rate, twist strength, duration."""

    lam: float
    eta4: float
    tau0: float

    def __post_init__(self) -> None:
        for name in ("lam", "eta4", "tau0"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def non_adiabatic(self) -> bool:
        """True when lambda > 1 (the regime all TRP gates live in)."""
        return self.lam > 1.0

    @property
    def window(self) -> tuple[float, float]:
        return (-0.5 * self.tau0, 0.5 * self.tau0)

    @property
    def dim(self) -> int:
        return 2

    def replace(self, **changes: float) -> "SweepParams":
        fields = {"lam": self.lam, "eta4": self.eta4, "tau0": self.tau0}
        fields.update(changes)
        return SweepParams(**fields)


@dataclass(frozen=True)
class TwoQubitParams:
    """Sweep parameters plus the two-qubit couplings d1..d4 and the level-4 shift c4."""

    sweep: SweepParams
    d1: float
    d2: float
    d3: float
    d4: float
    c4: float

    def __post_init__(self) -> None:
        for name in ("d1", "d2", "d3", "d4", "c4"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")

    @property
    def lam(self) -> float:
        return self.sweep.lam

    @property
    def eta4(self) -> float:
        return self.sweep.eta4

    @property
    def tau0(self) -> float:
        return self.sweep.tau0

    @property
    def window(self) -> tuple[float, float]:
        return self.sweep.window

    @property
    def dim(self) -> int:
        return 4

    def replace(self, **changes: float) -> "TwoQubitParams":
        sweep_keys = {k: changes.pop(k) for k in ("lam", "eta4", "tau0") if k in changes}
        fields = {k: getattr(self, k) for k in ("d1", "d2", "d3", "d4", "c4")}
        fields.update(changes)
        return TwoQubitParams(sweep=self.sweep.replace(**sweep_keys), **fields)


Params = Union[SweepParams, TwoQubitParams]


class ResonanceTime(NamedTuple):
    tau: float
    in_window: bool


def _sweep(params: Params) -> SweepParams:
    return params.sweep if isinstance(params, TwoQubitParams) else params


def twist_phi4(tau: float, params: Params) -> float:
    """Quartic twist profile phi4(tau) = (eta4 / 2 lambda) tau^4."""
    sp = _sweep(params)
    return sp.eta4 / (2.0 * sp.lam) * tau**4


def twist_rate(tau: float, params: Params) -> float:
    """d phi4 / d tau = (2 eta4 / lambda) tau^3."""
    sp = _sweep(params)
    return 2.0 * sp.eta4 / sp.lam * tau**3


def _symmetrize(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + h.conj().T)


def h1(tau: float, params: SweepParams) -> np.ndarray:
    """One-qubit Hamiltonian H1(tau) (2x2, traceless)."""
    lam = params.lam
    phi = twist_phi4(tau, params)
    z = tau / lam
    x = -complex(math.cos(phi), -math.sin(phi)) / lam  # <0|H|1> = -(cos phi - i sin phi)/lam
    return np.array([[z, x], [x.conjugate(), -z]])


def h2_base(tau: float, params: TwoQubitParams) -> np.ndarray:
    """Two-qubit Hamiltonian before the degeneracy-breaking shift (4x4, traceless)."""
    lam = params.lam
    phi = twist_phi4(tau, params)
    c, s = math.cos(phi), math.sin(phi)
    z1 = -(params.d1 + params.d2) / 2.0 + tau / lam
    z2 = -params.d2 / 2.0 + tau / lam
    h = (
        z1 * S1Z
        - (params.d3 / lam) * (c * S1X + s * S1Y)
        + z2 * S2Z
        - (1.0 / lam) * (c * S2X + s * S2Y)
        - (math.pi / 2.0) * params.d4 * ZZ
    )
    return _symmetrize(h)


def hamiltonian(tau: float, params: Params) -> np.ndarray:
    """Dispatch to h1 or h2_base by parameter type."""
    if isinstance(params, TwoQubitParams):
        return h2_base(tau, params)
    return h1(tau, params)


def dh_dtau(tau: float, params: Params) -> np.ndarray:
    """Analytic dH/dtau (the level-4 shift is not part of it)."""
    lam = _sweep(params).lam
    phi = twist_phi4(tau, params)
    rate = twist_rate(tau, params)
    c, s = math.cos(phi), math.sin(phi)
    # d/dtau [cos phi X + sin phi Y] = rate * (-sin phi X + cos phi Y)
    if isinstance(params, TwoQubitParams):
        d = (1.0 / lam) * (S1Z + S2Z) - (rate / lam) * (
            params.d3 * (-s * S1X + c * S1Y) + (-s * S2X + c * S2Y)
        )
    else:
        z = 1.0 / lam
        x = -(rate / lam) * complex(-s, -c)  # <0|dH|1> for -rate/lam (-s X + c Y)
        d = np.array([[z, x], [x.conjugate(), -z]])
    return _symmetrize(d)


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and bool(
        np.max(np.abs(h - h.conj().T), initial=0.0) <= tol
    )


def resonance_times(params: Params) -> list[ResonanceTime]:
    """Roots of tau = eta4 tau^3, each flagged by whether it lies inside the sweep."""
    sp = _sweep(params)
    side = 1.0 / math.sqrt(sp.eta4)
    lo, hi = sp.window
    return [ResonanceTime(t, lo <= t <= hi) for t in (-side, 0.0, side)]
