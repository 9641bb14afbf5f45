"""Derivative-free searches over sweep parameters.

The objective is Tr P between the simulated unitary and a target gate.
Downhill simplex is used for one-qubit gates (lambda, eta4) and simulated
annealing for the two-qubit gate (up to seven parameters).  Optimizers work
on internal coordinates in which eta4 is logarithmic; everything reported
back (traces, tables) is in the physical parameter values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from trpgates import metrics
from trpgates.hamiltonians import Params, SweepParams, TwoQubitParams
from trpgates.propagator import IntegratorOptions, PropagationError, propagate_unitary
from trpgates.targets import canonical_name, target

SWEEP_FIELDS = ("lam", "eta4", "tau0")
TWO_QUBIT_FIELDS = ("lam", "eta4", "d1", "d2", "d3", "d4", "c4", "tau0")
LOG_FIELDS = frozenset({"eta4"})


@dataclass
class ObjectiveSpec:
    """What to optimize: a target gate, a template point and its free fields."""

    target: str
    template: Params
    free: tuple[str, ...]
    opts: IntegratorOptions = field(default_factory=IntegratorOptions)
    bounds: Optional[dict[str, tuple[float, float]]] = None

    def __post_init__(self) -> None:
        self.target = canonical_name(self.target)
        if not self.free:
            raise ValueError("at least one free parameter is required")
        allowed = TWO_QUBIT_FIELDS if isinstance(self.template, TwoQubitParams) else SWEEP_FIELDS
        for name in self.free:
            if name not in allowed:
                raise ValueError(f"{name!r} is not a parameter of {type(self.template).__name__}")
        if target(self.target).shape[0] != self.template.dim:
            raise ValueError(f"target {self.target} does not match a {self.template.dim}-dim system")
        for name, (lo, hi) in (self.bounds or {}).items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bad bounds for {name}: {(lo, hi)}")

    def values(self, params: Optional[Params] = None) -> np.ndarray:
        params = params or self.template
        return np.array([getattr(params, name) for name in self.free], dtype=float)

    def point(self, values: Sequence[float]) -> Params:
        return self.template.replace(**dict(zip(self.free, map(float, values))))

    def to_internal(self, values: Sequence[float]) -> np.ndarray:
        return np.array(
            [math.log(v) if n in LOG_FIELDS else v for n, v in zip(self.free, values)], dtype=float
        )

    def to_physical(self, x: Sequence[float]) -> np.ndarray:
        return np.array(
            [math.exp(v) if n in LOG_FIELDS else v for n, v in zip(self.free, x)], dtype=float
        )

    def in_bounds(self, values: Sequence[float]) -> bool:
        for name, v in zip(self.free, values):
            lo, hi = (self.bounds or {}).get(name, (-math.inf, math.inf))
            if not lo <= v <= hi:
                return False
        return True


@dataclass
class OptimizationTrace:
    evaluations: list[tuple[list[float], float]] = field(default_factory=list)
    best: tuple[list[float], float] = ([], math.inf)
    termination_reason: str = ""
    free: tuple[str, ...] = ()

    def record(self, values: Sequence[float], f: float) -> None:
        v = [float(x) for x in values]
        self.evaluations.append((v, f))
        if f < self.best[1] or not self.best[0]:
            self.best = (v, f)

    def to_dict(self) -> dict:
        return {
            "free": list(self.free),
            "termination_reason": self.termination_reason,
            "best": {"values": self.best[0], "tr_p": self.best[1]},
            "evaluations": [{"values": v, "tr_p": f} for v, f in self.evaluations],
        }


def evaluate(spec: ObjectiveSpec, values: Sequence[float]) -> float:
    """Tr P at a physical parameter vector; failures and out-of-bounds points score +inf."""
    if not spec.in_bounds(values):
        return math.inf
    try:
        params = spec.point(values)
        u, _ = propagate_unitary(params, spec.opts)
    except (PropagationError, ValueError, FloatingPointError):
        return math.inf
    return metrics.tr_p(u, target(spec.target))


Objective = Union[ObjectiveSpec, Callable[[np.ndarray], float]]


def _wrap(objective: Objective, trace: OptimizationTrace):
    """Return (internal-coordinate function, to_internal, to_physical)."""
    if isinstance(objective, ObjectiveSpec):
        spec = objective
        trace.free = spec.free

        def fun(x):
            values = spec.to_physical(x)
            f = evaluate(spec, values)
            trace.record(values, f)
            return f

        return fun, spec.to_internal, spec.to_physical

    def fun(x):
        f = float(objective(np.asarray(x, dtype=float)))
        if not math.isfinite(f):
            f = math.inf
        trace.record(x, f)
        return f

    ident = lambda v: np.asarray(v, dtype=float)  # noqa: E731
    return fun, ident, ident


# ---------------------------------------------------------------- Nelder-Mead

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


def _nelder_mead_internal(fun, simplex: np.ndarray, fvals: np.ndarray, max_evals: int, ftol: float, xtol: float, used: int):
    n = simplex.shape[1]
    evals = used
    reason = "max_evals"
    while evals < max_evals:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        spread = fvals[-1] - fvals[0] if np.all(np.isfinite(fvals)) else math.inf
        diameter = float(np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)))
        if spread < ftol:
            reason = "ftol"
            break
        if diameter < xtol:
            reason = "xtol"
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + REFLECT * (centroid - worst)
        fr = fun(xr)
        evals += 1
        if fr < fvals[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = fun(xe) if evals < max_evals else math.inf
            evals += 1
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if evals >= max_evals:
            break
        if fr < fvals[-1]:
            xc = centroid + CONTRACT * (xr - centroid)  # outside contraction
            fc = fun(xc)
            evals += 1
            accept = fc <= fr
        else:
            xc = centroid + CONTRACT * (worst - centroid)  # inside contraction
            fc = fun(xc)
            evals += 1
            accept = fc < fvals[-1]
        if accept:
            simplex[-1], fvals[-1] = xc, fc
            continue
        for i in range(1, n + 1):
            if evals >= max_evals:
                break
            simplex[i] = simplex[0] + SHRINK * (simplex[i] - simplex[0])
            fvals[i] = fun(simplex[i])
            evals += 1
    order = np.argsort(fvals, kind="stable")
    return simplex[order], fvals[order], reason


def _check_simplex(simplex: np.ndarray) -> None:
    n = simplex.shape[1]
    if simplex.shape[0] != n + 1:
        raise ValueError(f"a simplex in {n} dimensions needs {n + 1} vertices, got {simplex.shape[0]}")
    edges = simplex[1:] - simplex[0]
    if np.linalg.matrix_rank(edges, tol=1e-14 * max(1.0, float(np.abs(edges).max()))) < n:
        raise ValueError("degenerate simplex: vertices are not affinely independent")


def initial_simplex(center: Sequence[float], rel_step: float = 0.01, abs_step: float = 1e-6) -> np.ndarray:
    """Axis-aligned simplex around ``center`` (physical coordinates)."""
    center = np.asarray(center, dtype=float)
    verts = [center.copy()]
    for i, v in enumerate(center):
        p = center.copy()
        p[i] = v + max(abs(v) * rel_step, abs_step)
        verts.append(p)
    return np.array(verts)


def nelder_mead(
    objective: Objective,
    simplex: Sequence[Sequence[float]],
    max_evals: int = 200,
    ftol: float = 1e-12,
    xtol: float = 1e-10,
) -> OptimizationTrace:
    """Downhill simplex with reflection 1, expansion 2, contraction 1/2, shrink 1/2.

    ``simplex`` holds n + 1 vertices in physical coordinates.  Stops when the
    objective spread falls below ``ftol``, the simplex diameter (in internal
    coordinates) below ``xtol``, or after ``max_evals`` evaluations.
    """
    trace = OptimizationTrace()
    fun, to_int, _ = _wrap(objective, trace)
    pts = np.array([to_int(v) for v in np.asarray(simplex, dtype=float)])
    _check_simplex(pts)
    fvals = np.array([fun(p) for p in pts])
    _, _, reason = _nelder_mead_internal(fun, pts, fvals, max_evals, ftol, xtol, len(pts))
    trace.termination_reason = reason
    return trace


# -------------------------------------------------------- simulated annealing


@dataclass
class AnnealSchedule:
    t0: Optional[float] = None  # default: 10 x the starting objective
    decay: float = 0.95
    sweep_length: int = 50
    sweeps: int = 20
    floor: float = 1e-12
    scales: Optional[Sequence[float]] = None  # physical units per free parameter
    rel_scale: float = 1e-3
    abs_scale: float = 1e-6
    polish_evals: int = 100

    def __post_init__(self) -> None:
        if not 0 < self.decay <= 1:
            raise ValueError("decay must be in (0, 1]")
        if self.sweep_length < 1 or self.sweeps < 0 or self.polish_evals < 0:
            raise ValueError("sweep_length >= 1, sweeps >= 0, polish_evals >= 0 required")


def _internal_scales(free: Sequence[str], start: np.ndarray, schedule: AnnealSchedule) -> np.ndarray:
    if schedule.scales is not None:
        phys = np.asarray(schedule.scales, dtype=float)
    else:
        phys = np.maximum(np.abs(start) * schedule.rel_scale, schedule.abs_scale)
    out = []
    for name, s, v in zip(free, phys, start):
        out.append(s / abs(v) if name in LOG_FIELDS and v else s)  # d(log v) = dv / v
    return np.array(out)


def simulated_annealing(
    objective: Objective,
    start: Sequence[float],
    schedule: AnnealSchedule = AnnealSchedule(),
    seed: int = 0,
    free: Optional[Sequence[str]] = None,
) -> OptimizationTrace:
    """Metropolis search with Gaussian proposals and a geometric temperature schedule.

    The temperature drops by ``decay`` after every ``sweep_length`` proposals
    and never below ``floor``; a zero starting temperature is greedy descent.
    The best point is polished by ``nelder_mead``.  The same seed always
    yields the same trace.
    """
    trace = OptimizationTrace()
    fun, to_int, _ = _wrap(objective, trace)
    start = np.asarray(start, dtype=float)
    names = tuple(free or (objective.free if isinstance(objective, ObjectiveSpec) else ()))
    if not names:
        names = tuple(f"x{i}" for i in range(start.size))
    elif len(names) != start.size:
        raise ValueError(f"{len(names)} parameter names for a {start.size}-dim start point")
    if isinstance(objective, ObjectiveSpec) and not objective.in_bounds(start):
        raise ValueError("start point lies outside the bounds")
    rng = np.random.default_rng(seed)
    x = to_int(start)
    fx = fun(x)
    best_x, best_f = x.copy(), fx
    scales = _internal_scales(names, start, schedule)
    temp = schedule.t0 if schedule.t0 is not None else 10.0 * fx
    if not math.isfinite(temp):
        temp = 1.0
    for _ in range(schedule.sweeps):
        for _ in range(schedule.sweep_length):
            cand = x + scales * rng.standard_normal(x.size)
            fc = fun(cand)
            delta = fc - fx
            u = rng.random()
            if delta <= 0 or (temp > 0 and math.isfinite(fc) and u < math.exp(-delta / temp)):
                x, fx = cand, fc
                if fx < best_f:
                    best_x, best_f = x.copy(), fx
        temp = max(temp * schedule.decay, schedule.floor) if temp > 0 else 0.0
    if schedule.polish_evals > 0:
        n = best_x.size
        pts = [best_x.copy()]
        for i in range(n):
            p = best_x.copy()
            p[i] += scales[i]
            pts.append(p)
        pts = np.array(pts)
        fvals = np.array([best_f] + [fun(p) for p in pts[1:]])
        _nelder_mead_internal(fun, pts, fvals, schedule.polish_evals, 1e-12, 1e-10, n + 1)
        trace.termination_reason = "polished"
    else:
        trace.termination_reason = "schedule_complete"
    return trace


# ----------------------------------------------------------- sensitivity rows


@dataclass
class SensitivityRow:
    axis: str
    value: float
    tr_p: float
    error: Optional[str] = None


def sensitivity_table(
    spec: ObjectiveSpec,
    center: Params,
    axis: str,
    values: Optional[Sequence[float]] = None,
    deltas: Optional[Sequence[float]] = None,
) -> list[SensitivityRow]:
    """Tr P along one parameter axis with everything else held at ``center``.

    Give either absolute ``values`` or ``deltas`` relative to the center value.
    A failing row is reported with ``tr_p = inf`` and the error text.
    """
    if axis not in spec.free:
        raise ValueError(f"axis {axis!r} is not a free parameter of the objective")
    if (values is None) == (deltas is None):
        raise ValueError("give exactly one of values or deltas")
    c = getattr(center, axis)
    pts = list(values) if values is not None else [c + d for d in deltas]
    tgt = target(spec.target)
    rows = []
    for v in pts:
        try:
            u, _ = propagate_unitary(center.replace(**{axis: float(v)}), spec.opts)
            rows.append(SensitivityRow(axis, float(v), metrics.tr_p(u, tgt)))
        except (PropagationError, ValueError) as exc:
            rows.append(SensitivityRow(axis, float(v), math.inf, f"row {axis}={v}: {exc}"))
    return rows
