"""Gate-error scores: Tr P, fidelity, per-state error probability.

With D = U_a - U_t and P = D^dagger D, Tr P bounds the worst-case error
probability P_e from above and is cheap to evaluate, so it is the
optimization objective.  For n qubits, F_n = 1 - Tr P / 2^(n+1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_QUBIT_FIDELITY_NOTE = (
    "fidelity uses F = 1 - TrP/8 for two qubits; the published V_CP fidelity "
    "0.999683 corresponds to 1 - TrP/4 and is not reproduced by that relation"
)


@dataclass
class ScoreReport:
    tr_p: float
    fidelity: float
    pe_bound: float
    worst_case_pe_estimate: float


def _pair(actual, target) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=complex)
    t = np.asarray(target, dtype=complex)
    if a.shape != t.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {t.shape}")
    return a, t


def tr_p(actual, target) -> float:
    """Tr[(U_a - U_t)^dagger (U_a - U_t)], the squared Frobenius distance."""
    a, t = _pair(actual, target)
    d = a - t
    return float(np.vdot(d, d).real)


def fidelity(actual, target) -> float:
    """F_n = Re Tr(U_a^dagger U_t) / 2^n."""
    a, t = _pair(actual, target)
    return float(np.trace(a.conj().T @ t).real / a.shape[0])


def fidelity_from_tr_p(trp: float, dim: int) -> float:
    """F_n = 1 - Tr P / 2^(n+1), with dim = 2^n."""
    return 1.0 - trp / (2 * dim)


def pe_state(actual, target, psi, squared: bool = False) -> float:
    """Error probability <psi_perp|psi_perp> for one input state.

    psi_perp = (I - |psi_t><psi_t|) |psi_a> with psi_a = U_a psi and
    psi_t = U_t psi.  ``squared=True`` returns the literal |<psi_perp|psi_perp>|^2.
    """
    a, t = _pair(actual, target)
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise ValueError("input state must be normalized")
    psi_a = a @ psi
    psi_t = t @ psi
    perp = psi_a - psi_t * np.vdot(psi_t, psi_a)
    p = float(np.vdot(perp, perp).real)
    return p * p if squared else p


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def worst_case_pe(actual, target, samples: int = 256, climb_steps: int = 50, seed: int = 0) -> float:
    """Sampled lower estimate of max_psi pe_state (Haar samples plus hill climbing)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    a, t = _pair(actual, target)
    dim = a.shape[0]
    rng = np.random.default_rng(seed)
    starts = [random_state(dim, rng) for _ in range(samples)]
    scores = [pe_state(a, t, s) for s in starts]
    order = np.argsort(scores)[::-1][: max(1, min(8, samples))]
    best = max(scores)
    for i in order:
        psi, val, step = starts[i], scores[i], 0.3
        for _ in range(climb_steps):
            cand = psi + step * (rng.normal(size=dim) + 1j * rng.normal(size=dim))
            cand /= np.linalg.norm(cand)
            cval = pe_state(a, t, cand)
            if cval > val:
                psi, val = cand, cval
            else:
                step *= 0.8
        best = max(best, val)
    return best


def score(actual, target, samples: int = 256, seed: int = 0) -> ScoreReport:
    tp = tr_p(actual, target)
    return ScoreReport(
        tr_p=tp,
        fidelity=fidelity(actual, target),
        pe_bound=tp,
        worst_case_pe_estimate=worst_case_pe(actual, target, samples=samples, seed=seed),
    )
