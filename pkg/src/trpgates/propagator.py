"""Instantaneous-eigenbasis propagation of TRP sweeps.

The state is expanded as

    |psi(tau)> = sum_k a_k(tau) |E_k(tau)> exp[-i Theta_k(tau)],
    Theta_k = int (E_k - gdot_k) dtau,   gdot_k = i <E_k|d/dtau|E_k>,

and the amplitudes obey

    da_k/dtau = -sum_{l != k} a_l Gamma_kl exp[-i (Theta_l - Theta_k)],
    Gamma_kl = <E_k|d/dtau|E_l>.

Amplitudes and the two phase integrals (dynamical and geometric) are
advanced together by an adaptive Dormand-Prince 5(4) integrator.  Between
accepted steps the eigenvectors are carried along by discrete parallel
transport: every new frame is permuted and rephased so that its overlap with
the previous accepted frame is real and positive.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from trpgates import metrics
from trpgates.hamiltonians import Params, TwoQubitParams, dh_dtau, hamiltonian

DEGENERACY_TOL = 1e-9
_OFF = {d: ~np.eye(d, dtype=bool) for d in (2, 4)}
AMBIGUITY_TOL = 1e-3


class PropagationError(RuntimeError):
    """Base class for numerical failures during a sweep."""


class EigenConvergenceError(PropagationError):
    def __init__(self, residual: float):
        super().__init__(f"eigen-decomposition did not converge (residual {residual:.3e})")
        self.residual = residual


class NearDegeneracyError(PropagationError):
    def __init__(self, k: int, l: int, gap: float, tau: float):
        super().__init__(f"levels {k} and {l} nearly degenerate at tau={tau:.6g} (gap {gap:.3e})")
        self.pair = (k, l)
        self.gap = gap
        self.tau = tau


class AmbiguousMatchError(PropagationError):
    """Two candidate eigenvectors overlap a tracked level almost equally: the step is too large."""


class IntegrationError(PropagationError):
    def __init__(self, message: str, last_tau: float, column: Optional[int] = None):
        super().__init__(message)
        self.last_tau = last_tau
        self.column = column


@dataclass(frozen=True)
class IntegratorOptions:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_steps: int = 1_000_000
    initial_step: Optional[float] = None  # defaults to tau0 / 1e4
    min_step: float = 1e-12
    norm_tol: float = 1e-6
    initial_gauge: str = "largest"  # or "first"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.initial_gauge not in ("largest", "first"):
            raise ValueError(f"unknown initial_gauge {self.initial_gauge!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class EigenFrame:
    tau: float
    energies: np.ndarray
    vectors: np.ndarray  # column k is |E_k>

    @property
    def dim(self) -> int:
        return len(self.energies)


@dataclass
class GateResult:
    unitary: np.ndarray
    tr_p: float
    fidelity: float
    steps_accepted: int
    steps_rejected: int
    max_norm_drift: float
    target: Optional[str] = None
    params: Optional[Params] = None
    notes: list[str] = field(default_factory=list)


@dataclass
class ColumnResult:
    state: np.ndarray
    steps_accepted: int
    steps_rejected: int
    max_norm_drift: float


# ---------------------------------------------------------------- eigenframes


def eig_hermitian(h: np.ndarray, tau: float = 0.0) -> EigenFrame:
    """Full eigen-decomposition of a small Hermitian matrix, energies ascending."""
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.abs(h).max()) * len(w))
    residual = float(np.abs(h @ v - v * w).max()) / scale
    if not residual <= 1e-12:
        raise EigenConvergenceError(residual)
    return EigenFrame(tau, w, v)


def fix_gauge(frame: EigenFrame, convention: str = "largest") -> EigenFrame:
    """Make one component of every eigenvector real and positive.

    ``largest`` picks each column's largest-magnitude component, ``first``
    the first component whose magnitude exceeds 1e-8.
    """
    v = frame.vectors.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        if convention == "largest":
            j = int(np.argmax(np.abs(col)))
        else:
            j = int(np.flatnonzero(np.abs(col) > 1e-8)[0])
        v[:, k] = col * (abs(col[j]) / col[j])
        v[j, k] = abs(col[j])  # exactly real, not real up to rounding
    return EigenFrame(frame.tau, frame.energies, v)


def gauge_align(prev: EigenFrame, nxt: EigenFrame, ambiguity: float = AMBIGUITY_TOL) -> EigenFrame:
    """Permute and rephase ``nxt`` so it continues ``prev`` level by level."""
    overlap = prev.vectors.conj().T @ nxt.vectors
    mag = np.abs(overlap)
    dim = prev.dim
    perm = mag.argmax(axis=1)
    if len(set(perm.tolist())) < dim:
        rows, cols = linear_sum_assignment(-mag)
        perm = cols[np.argsort(rows)]
    if dim > 1:
        top2 = np.partition(mag, dim - 2, axis=1)[:, -2:]
        gap = top2[:, 1] - top2[:, 0]
        if gap.min() < ambiguity:
            k = int(gap.argmin())
            raise AmbiguousMatchError(
                f"level {k} matched ambiguously at tau={nxt.tau:.6g} "
                f"(overlaps {top2[k, 1]:.4f}, {top2[k, 0]:.4f})"
            )
    ov = overlap[np.arange(dim), perm]
    absov = np.abs(ov)
    phases = np.where(absov > 0, absov / np.where(absov > 0, ov, 1.0), 1.0)
    return EigenFrame(nxt.tau, nxt.energies[perm], nxt.vectors[:, perm] * phases)


def coupling_matrix(
    frame: EigenFrame,
    dH: np.ndarray,
    reference: Optional[EigenFrame] = None,
    degeneracy_tol: float = DEGENERACY_TOL,
) -> np.ndarray:
    """Non-adiabatic couplings Gamma_kl = <E_k| d/dtau |E_l>.

    Off-diagonal entries use the Hellmann-Feynman form
    <E_k|dH|E_l> / (E_l - E_k).  The diagonal depends on the gauge: for a
    frame rephased so that <reference_k|E_k> is real, differentiating that
    constraint gives Gamma_kk = -i Im(sum_{l!=k} <ref_k|E_l> Gamma_lk) / <ref_k|E_k>.
    Without a reference the frame is taken to be locally parallel
    transported and the diagonal is zero.
    """
    e = frame.energies
    v = frame.vectors
    gaps = e[None, :] - e[:, None]
    dim = len(e)
    off = _OFF[dim] if dim in _OFF else ~np.eye(dim, dtype=bool)
    safe = np.where(off, gaps, 1.0)
    if np.abs(safe).min() < degeneracy_tol:
        k, l = np.argwhere((np.abs(gaps) < degeneracy_tol) & off)[0]
        raise NearDegeneracyError(int(k), int(l), float(abs(gaps[k, l])), frame.tau)
    gamma = (v.conj().T @ dH @ v) / safe
    gamma[~off] = 0.0
    if reference is not None:
        ov = reference.vectors.conj().T @ v  # ov[k, l] = <ref_k|E_l>
        s = np.einsum("kl,lk->k", ov * off, gamma)
        gamma[np.diag_indices(dim)] = -1j * s.imag / ov.diagonal().real
    return gamma


def geometric_rate(gamma: np.ndarray) -> np.ndarray:
    """gdot_k = i Gamma_kk (real)."""
    return (1j * gamma.diagonal()).real


# ------------------------------------------------------------ equations of motion


class _Sweep:
    """Right-hand side of the amplitude / phase system for one parameter point."""

    def __init__(self, params: Params, opts: IntegratorOptions):
        self.params = params
        self.opts = opts
        self.dim = params.dim
        self.shift = np.zeros(self.dim)
        if isinstance(params, TwoQubitParams):
            # level "4": top of the ascending order at the sweep start, tracked by continuity
            self.shift[-1] = params.c4

    def frame(self, tau: float, reference: Optional[EigenFrame]) -> EigenFrame:
        fr = eig_hermitian(hamiltonian(tau, self.params), tau)
        if reference is None:
            return fix_gauge(fr, self.opts.initial_gauge)
        return gauge_align(reference, fr)

    def rhs(self, tau: float, y: np.ndarray, reference: EigenFrame) -> tuple[np.ndarray, EigenFrame]:
        """Derivative of the packed state [amplitudes (d x m, row-major), dyn (d), geo (d)]."""
        d = self.dim
        fr = self.frame(tau, reference)
        gamma = coupling_matrix(fr, dh_dtau(tau, self.params), reference)
        energies = fr.energies + self.shift
        gdot = geometric_rate(gamma)
        theta = (y[-2 * d : -d] - y[-d:]).real
        phase = np.exp(-1j * theta)[:, None]
        amps = y[: -2 * d].reshape(d, -1)
        # -sum_l Gamma_kl a_l e^{-i Theta_l} e^{+i Theta_k}
        np.fill_diagonal(gamma, 0.0)
        da = -(gamma @ (amps * phase)) / phase
        return np.concatenate([da.ravel(), energies, gdot]).astype(complex), fr


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)  # fifth- minus fourth-order weights


def _dp_step(sweep: _Sweep, tau: float, y: np.ndarray, h: float, ref: EigenFrame, k1: Optional[np.ndarray]):
    k = []
    fr = ref
    for i in range(7):
        if i == 0 and k1 is not None:
            k.append(k1)
            continue
        yi = y.copy()
        for j, a in enumerate(_A[i]):
            if a:
                yi += h * a * k[j]
        f, fr = sweep.rhs(tau + _C[i] * h, yi, ref)
        k.append(f)
    # the last stage sits at tau + h on the fifth-order solution (FSAL row)
    err = h * sum(e * kk for e, kk in zip(_E, k))
    return yi, err, fr, k[-1]


def _rebased(k_last: np.ndarray, dim: int) -> np.ndarray:
    """First stage of the next step from the last stage of this one.

    Once the frame at tau + h becomes the new reference it is parallel
    transported at that instant, so only its geometric rate changes (to 0);
    the off-diagonal couplings and energies are unchanged.
    """
    k1 = k_last.copy()
    k1[-dim:] = 0.0
    return k1


def _initial_state(sweep: _Sweep, columns: np.ndarray) -> tuple[np.ndarray, EigenFrame]:
    """Project computational-basis input columns onto the initial eigenframe."""
    lo, _ = sweep.params.window
    fr = sweep.frame(lo, None)
    amps = fr.vectors.conj().T @ columns
    y = np.concatenate([amps.ravel(), np.zeros(2 * sweep.dim, dtype=complex)])
    return y, fr


def _final_state(sweep: _Sweep, y: np.ndarray, fr: EigenFrame) -> np.ndarray:
    d = sweep.dim
    theta = (y[-2 * d : -d] - y[-d:]).real
    amps = y[: -2 * d].reshape(d, -1)
    return fr.vectors @ (amps * np.exp(-1j * theta)[:, None])


def _integrate(params: Params, columns: np.ndarray, opts: IntegratorOptions, label: Optional[int] = None):
    sweep = _Sweep(params, opts)
    d = sweep.dim
    lo, hi = params.window
    y, ref = _initial_state(sweep, columns)
    tau = lo
    h = opts.initial_step or params.tau0 / 1e4
    accepted = rejected = 0
    max_drift = 0.0
    k1 = None
    while tau < hi:
        if accepted + rejected >= opts.max_steps:
            raise IntegrationError(f"step cap {opts.max_steps} reached", tau, label)
        h = min(h, hi - tau)
        if h < opts.min_step and hi - tau > opts.min_step:
            raise IntegrationError(f"step size underflow ({h:.3e})", tau, label)
        try:
            y_new, err, fr, k_last = _dp_step(sweep, tau, y, h, ref, k1)
        except (AmbiguousMatchError, NearDegeneracyError):
            rejected += 1
            h *= 0.25
            continue
        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        enorm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
        if not np.isfinite(enorm):
            rejected += 1
            h *= 0.25
            continue
        if enorm <= 1.0:
            tau = hi if hi - (tau + h) < 1e-14 * max(1.0, abs(hi)) else tau + h
            y = y_new
            ref = fr
            k1 = _rebased(k_last, d)
            accepted += 1
            norms = np.sum(np.abs(y[: -2 * d].reshape(d, -1)) ** 2, axis=0)
            drift = float(np.max(np.abs(norms - 1.0)))
            max_drift = max(max_drift, drift)
            if drift > opts.norm_tol:
                raise IntegrationError(f"norm drift {drift:.3e} exceeds {opts.norm_tol:.1e}", tau, label)
            factor = 5.0 if enorm == 0 else min(5.0, 0.9 * enorm**-0.2)
        else:
            rejected += 1
            factor = max(0.2, 0.9 * enorm**-0.2)
        h *= factor
    return _final_state(sweep, y, ref), accepted, rejected, max_drift


def propagate_column(
    params: Params, initial_basis_index: int, opts: IntegratorOptions = IntegratorOptions()
) -> ColumnResult:
    """Evolve computational basis state ``initial_basis_index`` across the sweep."""
    d = params.dim
    if not 0 <= initial_basis_index < d:
        raise ValueError(f"basis index {initial_basis_index} outside 0..{d - 1}")
    col = np.zeros((d, 1), dtype=complex)
    col[initial_basis_index, 0] = 1.0
    state, acc, rej, drift = _integrate(params, col, opts, initial_basis_index)
    return ColumnResult(state[:, 0], acc, rej, drift)


def propagate_column_fixed(params: Params, initial_basis_index: int, step: float) -> np.ndarray:
    """Classical fixed-step RK4 on the same equations (reference for convergence checks)."""
    sweep = _Sweep(params, IntegratorOptions())
    d = sweep.dim
    lo, hi = params.window
    n = max(1, int(math.ceil((hi - lo) / step)))
    h = (hi - lo) / n
    col = np.zeros((d, 1), dtype=complex)
    col[initial_basis_index, 0] = 1.0
    y, ref = _initial_state(sweep, col)
    tau = lo
    for i in range(n):
        k1, _ = sweep.rhs(tau, y, ref)
        k2, _ = sweep.rhs(tau + h / 2, y + h / 2 * k1, ref)
        k3, _ = sweep.rhs(tau + h / 2, y + h / 2 * k2, ref)
        tau = lo + (i + 1) * h
        k4, ref_new = sweep.rhs(tau, y + h * k3, ref)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ref = ref_new
    return _final_state(sweep, y, ref)[:, 0]


# ------------------------------------------------------------------ unitaries


def _column_job(args):
    params, index, opts = args
    return propagate_column(params, index, opts)


def propagate_unitary(params: Params, opts: IntegratorOptions = IntegratorOptions()) -> tuple[np.ndarray, ColumnResult]:
    """Realized unitary U_a in the computational basis.

    The phase integrals Theta_k are the same for every input column, so by
    default all columns ride on one integration (a d x d amplitude block under
    a shared step-size controller).  With ``opts.workers > 1`` the columns are
    instead integrated independently in worker processes.
    """
    d = params.dim
    if opts.workers > 1:
        jobs = [(params, i, opts) for i in range(d)]
        with ProcessPoolExecutor(max_workers=min(opts.workers, d)) as pool:
            cols = list(pool.map(_column_job, jobs))
        u = np.column_stack([c.state for c in cols])
        stats = ColumnResult(
            u,
            sum(c.steps_accepted for c in cols),
            sum(c.steps_rejected for c in cols),
            max(c.max_norm_drift for c in cols),
        )
        return u, stats
    u, acc, rej, drift = _integrate(params, np.eye(d, dtype=complex), opts)
    return u, ColumnResult(u, acc, rej, drift)


def assemble_unitary(
    params: Params, target: np.ndarray, opts: IntegratorOptions = IntegratorOptions(), target_name: Optional[str] = None
) -> GateResult:
    """Simulate every basis column, then score U_a against ``target``."""
    target = np.asarray(target, dtype=complex)
    if target.shape != (params.dim, params.dim):
        raise ValueError(f"target is {target.shape}, parameters describe a {params.dim}-dim system")
    u, stats = propagate_unitary(params, opts)
    tp = metrics.tr_p(u, target)
    result = GateResult(
        unitary=u,
        tr_p=tp,
        fidelity=metrics.fidelity_from_tr_p(tp, params.dim),
        steps_accepted=stats.steps_accepted,
        steps_rejected=stats.steps_rejected,
        max_norm_drift=stats.max_norm_drift,
        target=target_name,
        params=params,
    )
    if params.dim == 4:
        result.notes.append(metrics.TWO_QUBIT_FIDELITY_NOTE)
    return result


def with_options(opts: IntegratorOptions, **changes) -> IntegratorOptions:
    return replace(opts, **changes)
