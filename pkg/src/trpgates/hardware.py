"""Physical control schedules for TRP sweeps.

Dimensionless parameters map to a physical sweep through

    tau = (a/b) t,   lambda = hbar a / b^2,   eta4 = (hbar b^2 / a^3) B,   tau0 = a T0 / b,

with the twist phi_trp(t) = (B/2) t^4 (B in s^-4).  Each backend turns the
physical sweep into control waveforms whose forward maps reproduce the
TRP Hamiltonian -a t sigma_z - b cos(phi_trp) sigma_x (the sigma_y part
follows from the rotating-wave approximation).

SI units throughout: energies in joules, times in seconds; flux waveforms are
emitted in units of the flux quantum.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.constants import e as E_CHARGE
from scipy.constants import h as PLANCK
from scipy.constants import hbar as HBAR

from trpgates.hamiltonians import SweepParams

PHI0 = PLANCK / (2 * E_CHARGE)
DEFAULT_SAMPLES = 4096
DEFAULT_VALIDITY_THRESHOLD = 0.05


class HardwareError(ValueError):
    """Physical constants that cannot realize the requested sweep."""


@dataclass(frozen=True)
class PhysicalSweep:
    a: float  # J/s, inversion rate
    b: float  # J, transverse strength
    B_twist: float  # s^-4, twist strength
    T0: float  # s, inversion time

    def __post_init__(self) -> None:
        for name in ("a", "b", "B_twist", "T0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise HardwareError(f"{name} must be positive and finite, got {v!r}")

    def phi_trp(self, t):
        return 0.5 * self.B_twist * np.asarray(t, dtype=float) ** 4

    def times(self, sample_count: int = DEFAULT_SAMPLES) -> np.ndarray:
        if sample_count < 2:
            raise HardwareError("sample_count must be >= 2")
        return np.linspace(-0.5 * self.T0, 0.5 * self.T0, sample_count)

    def sigma_z_coefficient(self, t):
        """a t (the magnitude of the sigma_z coefficient)."""
        return self.a * np.asarray(t, dtype=float)

    def sigma_x_coefficient(self, t):
        """b cos(phi_trp(t))."""
        return self.b * np.cos(self.phi_trp(t))


def from_dimensionless(params: SweepParams, b: float) -> PhysicalSweep:
    """a = lambda b^2 / hbar, B = eta4 a^3 / (hbar b^2), T0 = tau0 b / a."""
    if not (math.isfinite(b) and b > 0):
        raise HardwareError(f"b must be positive, got {b!r}")
    a = params.lam * b * b / HBAR
    return PhysicalSweep(a=a, b=b, B_twist=params.eta4 * a**3 / (HBAR * b * b), T0=params.tau0 * b / a)


def to_dimensionless(phys: PhysicalSweep) -> SweepParams:
    return SweepParams(
        lam=HBAR * phys.a / phys.b**2,
        eta4=HBAR * phys.b**2 * phys.B_twist / phys.a**3,
        tau0=phys.a * phys.T0 / phys.b,
    )


@dataclass
class Waveform:
    channel: str
    units: str
    times: np.ndarray
    values: np.ndarray
    T0: float
    flags: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# channel={self.channel} units={self.units} T0_seconds={self.T0!r}\n")
            w = csv.writer(fh)
            w.writerow(["t_seconds", "value"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])
        return path


def read_waveform_csv(path) -> Waveform:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in header)
        rows = list(csv.reader(fh))
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return Waveform(meta["channel"], meta["units"], data[:, 0], data[:, 1], float(meta["T0_seconds"]))


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable))
    return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


# ------------------------------------------------------------------------ NMR


@dataclass(frozen=True)
class NMRParameters:
    omega1: float  # s^-1, rf amplitude 2b/hbar
    A: float  # s^-1, sweep amplitude a T0 / hbar
    B_script: float  # dimensionless twist B T0^4 / 2
    T0: float  # s


def nmr_translate(phys: PhysicalSweep) -> NMRParameters:
    """omega1 = 2b/hbar, A = a T0 / hbar, script-B = B T0^4 / 2."""
    return NMRParameters(
        omega1=2 * phys.b / HBAR,
        A=phys.a * phys.T0 / HBAR,
        B_script=0.5 * phys.B_twist * phys.T0**4,
        T0=phys.T0,
    )


def nmr_inverse(nmr: NMRParameters) -> PhysicalSweep:
    b = 0.5 * HBAR * nmr.omega1
    a = HBAR * nmr.A / nmr.T0
    return PhysicalSweep(a=a, b=b, B_twist=2 * nmr.B_script / nmr.T0**4, T0=nmr.T0)


def nmr_dimensionless(nmr: NMRParameters) -> tuple[float, float]:
    """lambda = 4A / (omega1^2 T0), eta4 = script-B omega1^2 / (2 A^3 T0)."""
    lam = 4 * nmr.A / (nmr.omega1**2 * nmr.T0)
    eta4 = nmr.B_script * nmr.omega1**2 / (2 * nmr.A**3 * nmr.T0)
    return lam, eta4


def nmr_script_b(omega1: float, A: float, T0: float, eta4: float) -> float:
    """Solve the eta4 relation for script-B given the other experimental settings."""
    return 2 * eta4 * A**3 * T0 / omega1**2


def nmr_schedule(phys: PhysicalSweep, sample_count: int = DEFAULT_SAMPLES) -> dict[str, Waveform]:
    """Detector frequency offset 2at/hbar, rf amplitude omega1 and twist phase phi_trp."""
    t = phys.times(sample_count)
    nmr = nmr_translate(phys)
    return {
        "detector_offset": Waveform("detector_offset", "rad_per_s", t, 2 * phys.a * t / HBAR, phys.T0),
        "rf_amplitude": Waveform("rf_amplitude", "rad_per_s", t, np.full_like(t, nmr.omega1), phys.T0),
        "twist_phase": Waveform("twist_phase", "rad", t, phys.phi_trp(t), phys.T0),
    }


def nmr_reconstruct(waves: dict[str, Waveform]) -> tuple[np.ndarray, np.ndarray]:
    at = 0.5 * HBAR * waves["detector_offset"].values
    bcos = 0.5 * HBAR * waves["rf_amplitude"].values * np.cos(waves["twist_phase"].values)
    return at, bcos


# --------------------------------------------------------------- charge qubit


def charge_qubit_schedule(
    phys: PhysicalSweep,
    Cg: float,
    Ec: float,
    EJ0: Optional[float] = None,
    rescale: bool = False,
    sample_count: int = DEFAULT_SAMPLES,
) -> tuple[dict[str, Waveform], dict]:
    """Gate voltage V_g(t) = (e/C_g)(1 - a t / 2E_c) and dc-SQUID flux Phi_x = (Phi0/pi) phi_trp.

    The voltage channel ``gate_voltage_offset`` holds V_g - e/C_g; the dc
    level e/C_g is in the report as ``gate_voltage_dc_V``.

    The map needs the junction energy E_J0 to equal b.  When a fabricated
    ``EJ0`` is supplied and differs, the mismatch is reported; with
    ``rescale=True`` b is set to E_J0 (a, B, T0 kept), which changes lambda,
    eta4 and tau0, and the new values are reported.
    """
    if Cg <= 0 or Ec <= 0:
        raise HardwareError("C_g and E_c must be positive")
    report: dict = {"backend": "charge", "EJ0_required": phys.b}
    if EJ0 is not None:
        mismatch = (EJ0 - phys.b) / phys.b
        report["EJ0_supplied"] = EJ0
        report["EJ0_relative_mismatch"] = mismatch
        if rescale and mismatch != 0:
            phys = PhysicalSweep(a=phys.a, b=EJ0, B_twist=phys.B_twist, T0=phys.T0)
            sp = to_dimensionless(phys)
            report["rescaled"] = {"lam": sp.lam, "eta4": sp.eta4, "tau0": sp.tau0}
    t = phys.times(sample_count)
    # V_g - e/C_g is emitted rather than V_g: the sweep is a ~1e-6 modulation
    # of the dc level and adding the two would cost four digits
    dvg = -(E_CHARGE / Cg) * phys.a * t / (2 * Ec)
    phix = phys.phi_trp(t) / math.pi
    waves = {
        "gate_voltage_offset": Waveform("gate_voltage_offset", "V", t, dvg, phys.T0),
        "squid_flux": Waveform("squid_flux", "Phi0", t, phix, phys.T0),
    }
    report.update(
        {"Cg": Cg, "Ec": Ec, "EJ0_used": phys.b, "T0_seconds": phys.T0, "gate_voltage_dc_V": E_CHARGE / Cg}
    )
    return waves, report


def charge_qubit_reconstruct(waves: dict[str, Waveform], Cg: float, Ec: float, EJ0: float):
    """B_z/2 = 2E_c(1 - 2 n_g) with n_g = C_g V_g / 2e;  B_x/2 = E_J0 cos(pi Phi_x / Phi0).

    With V_g = e/C_g + dV the first map is 2E_c(1 - 2 n_g) = -2E_c C_g dV / e.
    """
    at = -2 * Ec * Cg * waves["gate_voltage_offset"].values / E_CHARGE
    bcos = EJ0 * np.cos(math.pi * waves["squid_flux"].values)
    return at, bcos


# ------------------------------------------------------------------ rf-SQUID


@dataclass
class RFSquidConstants:
    EJ_operating: float  # E_J at the dc-SQUID operating flux, J
    beta_L0: float
    omega_star0: float  # s^-1
    I0: float
    C: float
    D: float
    theta0: float  # pi * Phi~x0 / Phi0
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "EJ_operating_J": self.EJ_operating,
            "beta_L0": self.beta_L0,
            "omega_star0_per_s": self.omega_star0,
            "omega_star0_GHz": self.omega_star0 / 1e9,
            "I0": self.I0,
            "C": self.C,
            "D": self.D,
            "squid_flux_operating_Phi0": self.theta0 / math.pi,
            "validity": self.flags,
        }


def rfsquid_inductance_for_beta(beta_L0: float, EJ0: float, epsilon: float) -> float:
    """Loop inductance L that gives the requested beta_L0 at the operating point."""
    ej = 2 * EJ0 * math.cos(math.pi * (0.5 - epsilon / math.pi))
    return beta_L0 * PHI0**2 / (4 * math.pi**2 * ej)


def rfsquid_schedule(
    phys: PhysicalSweep,
    L: float,
    C: float,
    EJ0: float,
    epsilon: float,
    sample_count: int = DEFAULT_SAMPLES,
    threshold: float = DEFAULT_VALIDITY_THRESHOLD,
) -> tuple[dict[str, Waveform], RFSquidConstants]:
    """Loop flux Phi_x(t) and dc-SQUID flux offset delta Phi~x(t) for an rf-SQUID qubit.

    The loop flux is emitted as its bias Phi_x/Phi0 - 1/2 (channel
    ``loop_flux_bias``); the dc-SQUID flux as delta Phi~x / Phi0 about the
    operating point reported in the constants.

    The dc-SQUID operates at Phi~x0/Phi0 = 1/2 - epsilon/pi.  The
    small-parameter conditions of the linearization are checked against
    ``threshold`` and reported in ``constants.flags``; violating them is not
    an error.
    """
    if L <= 0 or C <= 0 or EJ0 <= 0:
        raise HardwareError("L, C and E_J0 must be positive")
    theta0 = math.pi * (0.5 - epsilon / math.pi)
    ej = 2 * EJ0 * math.cos(theta0)
    beta = ej / (PHI0**2 / (4 * math.pi**2 * L))
    if not beta > 1:
        raise HardwareError(f"beta_L0 = {beta:.6g} <= 1: the rf-SQUID potential has no double well")
    sqrt_lc = math.sqrt(L * C)
    omega0 = math.sqrt((beta - 1) / (L * C))
    i0 = 8 * sqrt_lc / HBAR * (beta - 1) ** 1.5 * ej
    d = (1 / (8 * sqrt_lc)) * (1 / math.sin(theta0)) / ((5 * beta - 2) * math.sqrt(beta - 1)) * (HBAR / EJ0)
    c = d * (phys.b / HBAR) * (2 * math.pi / omega0) * math.exp(i0)

    t = phys.times(sample_count)
    # Phi_x/Phi0 = 1/2 + bias; the bias is emitted directly because it is ~1e-6
    # of the half quantum and would lose digits if added to 1/2 first
    bias = 0.5 * phys.a * t / (math.pi * ej * math.sqrt(6 * (beta - 1)))
    x = c * np.cos(phys.phi_trp(t)) - d  # pi dPhi~x / Phi0
    dphi = x / math.pi

    d_ej = np.max(np.abs(-math.tan(theta0) * x))  # |delta E_J| / E_J(op)
    d_beta = beta * d_ej / (beta - 1)  # |delta beta_L| / (beta_L0 - 1)
    flags = {
        "threshold": threshold,
        "max_pi_dPhi_over_Phi0": float(np.max(np.abs(x))),
        "max_rel_dEJ": float(d_ej),
        "max_rel_dbeta": float(d_beta),
        "small_flux_offset": bool(np.max(np.abs(x)) < threshold),
        "small_dEJ": bool(d_ej < threshold),
        "small_dbeta": bool(d_beta < threshold),
    }
    flags["valid"] = flags["small_flux_offset"] and flags["small_dEJ"] and flags["small_dbeta"]
    consts = RFSquidConstants(ej, beta, omega0, i0, c, d, theta0, flags)
    waves = {
        "loop_flux_bias": Waveform("loop_flux_bias", "Phi0_minus_half", t, bias, phys.T0, flags),
        "squid_flux_offset": Waveform("squid_flux_offset", "Phi0", t, dphi, phys.T0, flags),
    }
    return waves, consts


def rfsquid_reconstruct(waves: dict[str, Waveform], consts: RFSquidConstants):
    """Forward maps: at from the loop-flux bias, b cos(phi) from the linearized tunneling amplitude."""
    beta = consts.beta_L0
    at = 2 * math.pi * waves["loop_flux_bias"].values * consts.EJ_operating * math.sqrt(6 * (beta - 1))
    x = math.pi * waves["squid_flux_offset"].values
    rel_dej = -math.tan(consts.theta0) * x
    bcos = (HBAR * consts.omega_star0 / (2 * math.pi)) * math.exp(-consts.I0) * (
        1 - 0.5 * consts.I0 * (5 * beta - 2) / (beta - 1) * rel_dej
    )
    return at, bcos


# -------------------------------------------------- persistent-current qubit


@dataclass(frozen=True)
class PCQPrefactors:
    """delta1 = p1 [z0 - (b/EJ0) tau] + p2 (b/EJ0) cos phi;  delta2 = p3 [(b/EJ0) tau - z0] + p4 (b/EJ0) cos phi."""

    p1: float
    p2: float
    p3: float
    p4: float


def pcq_prefactors(x1: float, x2: float, z1: float, z2: float) -> PCQPrefactors:
    g = x1 * z2 - x2 * z1
    if abs(g) <= 1e-12:
        raise HardwareError(f"singular flux control: G = x1 z2 - x2 z1 = {g:.3e}")
    return PCQPrefactors(p1=-x2 / g, p2=z2 / g, p3=-x1 / g, p4=-z1 / g)


def pcq_schedule(
    phys: PhysicalSweep,
    EJ0: float,
    z0: float,
    x1: float,
    x2: float,
    z1: float,
    z2: float,
    sample_count: int = DEFAULT_SAMPLES,
) -> dict[str, Waveform]:
    """Frustration offsets delta1(tau), delta2(tau) solving the 2x2 control system.

    z1 d1 + z2 d2 = z0 - (b/E_J0) tau   and   x1 d1 + x2 d2 = (b/E_J0) cos phi_trp.
    """
    g = x1 * z2 - x2 * z1
    if abs(g) <= 1e-12:
        raise HardwareError(f"singular flux control: G = x1 z2 - x2 z1 = {g:.3e}")
    t = phys.times(sample_count)
    tau = (phys.a / phys.b) * t
    r = phys.b / EJ0
    cosphi = np.cos(phys.phi_trp(t))
    d1 = (x2 / g) * (r * tau - z0) + (z2 / g) * r * cosphi
    d2 = (x1 / g) * (z0 - r * tau) - (z1 / g) * r * cosphi
    return {
        "delta1": Waveform("delta1", "frustration", t, d1, phys.T0),
        "delta2": Waveform("delta2", "frustration", t, d2, phys.T0),
    }


def pcq_reconstruct(waves: dict[str, Waveform], EJ0: float, z0: float, x1: float, x2: float, z1: float, z2: float):
    """at = E_J0 (z0 - z1 d1 - z2 d2);  b cos phi = E_J0 (x1 d1 + x2 d2)."""
    d1, d2 = waves["delta1"].values, waves["delta2"].values
    return EJ0 * (z0 - z1 * d1 - z2 * d2), EJ0 * (x1 * d1 + x2 * d2)
