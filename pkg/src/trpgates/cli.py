"""Batch front-end: simulate, optimize, translate, tables, verify.

Runs are configured by a flat ``key = value`` document with dotted keys
(``sweep.lambda = 5.8511``); any key can be overridden on the command line
with ``--set key=value``.  Exit codes: 0 success, 1 numerical failure,
2 configuration error.  Errors are also written to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from trpgates import hardware, metrics, optimize, reference, targets
from trpgates.hamiltonians import SweepParams, TwoQubitParams
from trpgates.propagator import IntegratorOptions, PropagationError, assemble_unitary, propagate_unitary

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2
COMMANDS = ("simulate", "optimize", "translate", "tables", "verify")


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _str_list(text: str) -> list[str]:
    return [x for x in text.replace(" ", "").split(",") if x]


# key -> parser; every accepted key is listed here
SCHEMA: dict[str, Callable[[str], object]] = {
    "sweep.lambda": float,
    "sweep.eta4": float,
    "sweep.tau0": float,
    "twoqubit.d1": float,
    "twoqubit.d2": float,
    "twoqubit.d3": float,
    "twoqubit.d4": float,
    "twoqubit.c4": float,
    "target.name": str,
    "target.file": str,
    "integrator.abs_tol": float,
    "integrator.rel_tol": float,
    "integrator.max_steps": int,
    "integrator.initial_step": float,
    "integrator.initial_gauge": str,
    "integrator.workers": int,
    "optimize.algorithm": str,
    "optimize.seed": int,
    "optimize.free": _str_list,
    "optimize.max_evals": int,
    "optimize.simplex_step": float,
    "optimize.schedule.t0": float,
    "optimize.schedule.decay": float,
    "optimize.schedule.sweep_length": int,
    "optimize.schedule.sweeps": int,
    "optimize.schedule.rel_scale": float,
    "optimize.schedule.abs_scale": float,
    "optimize.schedule.polish_evals": int,
    "hardware.backend": str,
    "hardware.b_over_hbar": float,
    "hardware.sample_count": int,
    "hardware.threshold": float,
    "hardware.omega1": float,
    "hardware.nmr_A": float,
    "hardware.T0": float,
    "hardware.cg": float,
    "hardware.ec_over_hbar": float,
    "hardware.ej0_over_hbar": float,
    "hardware.rescale": _bool,
    "hardware.inductance": float,
    "hardware.capacitance": float,
    "hardware.beta_l0": float,
    "hardware.sqrt_lc": float,
    "hardware.epsilon": float,
    "hardware.z0": float,
    "hardware.x1": float,
    "hardware.x2": float,
    "hardware.z1": float,
    "hardware.z2": float,
    "tables.which": _int_list,
    "tables.workers": int,
    "output.path": str,
    "output.format": str,
}

TWO_QUBIT_KEYS = ("twoqubit.d1", "twoqubit.d2", "twoqubit.d3", "twoqubit.d4", "twoqubit.c4")


# ------------------------------------------------------------------- config


def read_config_text(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    return dict(parser["run"])


def parse_config(raw: dict[str, str]) -> dict[str, object]:
    """Type-check raw strings against SCHEMA; unknown keys are rejected."""
    cfg: dict[str, object] = {}
    for key, text in raw.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}", key)
        try:
            cfg[key] = SCHEMA[key](text.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", key) from exc
    return cfg


def load_config(path: Optional[str], overrides: list[str]) -> dict[str, object]:
    raw: dict[str, str] = {}
    if path:
        try:
            raw.update(read_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v
    return parse_config(raw)


def _require(cfg: dict, *keys: str) -> list:
    for k in keys:
        if k not in cfg:
            raise ConfigError(f"missing required key {k}", k)
    return [cfg[k] for k in keys]


def integrator_options(cfg: dict) -> IntegratorOptions:
    fields = {
        "integrator.abs_tol": "abs_tol",
        "integrator.rel_tol": "rel_tol",
        "integrator.max_steps": "max_steps",
        "integrator.initial_step": "initial_step",
        "integrator.initial_gauge": "initial_gauge",
        "integrator.workers": "workers",
    }
    kwargs = {attr: cfg[k] for k, attr in fields.items() if k in cfg}
    try:
        return IntegratorOptions(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), next(iter(k for k in fields if k in cfg), None)) from exc


def sweep_params(cfg: dict) -> SweepParams:
    lam, eta4, tau0 = _require(cfg, "sweep.lambda", "sweep.eta4", "sweep.tau0")
    try:
        return SweepParams(lam, eta4, tau0)
    except ValueError as exc:
        raise ConfigError(str(exc), "sweep") from exc


def system_params(cfg: dict, dim: int):
    sweep = sweep_params(cfg)
    if dim == 2:
        extra = [k for k in TWO_QUBIT_KEYS if k in cfg]
        if extra:
            raise ConfigError(f"{extra[0]} given for a one-qubit target", extra[0])
        return sweep
    d1, d2, d3, d4, c4 = _require(cfg, *TWO_QUBIT_KEYS)
    return TwoQubitParams(sweep, d1=d1, d2=d2, d3=d3, d4=d4, c4=c4)


def _matrix_from_json(obj) -> np.ndarray:
    return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)


def resolve_target(cfg: dict) -> tuple[str, np.ndarray]:
    if "target.file" in cfg:
        if "target.name" in cfg:
            raise ConfigError("give target.name or target.file, not both", "target.file")
        path = str(cfg["target.file"])
        try:
            u = _matrix_from_json(json.loads(Path(path).read_text()))
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read target matrix {path}: {exc}", "target.file") from exc
        if u.shape not in ((2, 2), (4, 4)) or not targets.is_unitary(u, 1e-8):
            raise ConfigError("target.file must hold a 2x2 or 4x4 unitary as {re, im}", "target.file")
        return Path(path).stem, u
    (name,) = _require(cfg, "target.name")
    try:
        canon = targets.canonical_name(str(name))
    except ValueError as exc:
        raise ConfigError(f"unknown target {name!r}", "target.name") from exc
    return canon, targets.target(canon)


# ------------------------------------------------------------------ emitters


def matrix_json(u: np.ndarray) -> dict:
    u = np.asarray(u, dtype=complex)
    return {"re": u.real.tolist(), "im": u.imag.tolist()}


def params_json(params) -> dict:
    out = {"lambda": params.lam, "eta4": params.eta4, "tau0": params.tau0}
    if isinstance(params, TwoQubitParams):
        out.update({k: getattr(params, k) for k in ("d1", "d2", "d3", "d4", "c4")})
    return out


def _dump(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")
    return path


def _out_dir(cfg: dict, cli_out: Optional[str]) -> Path:
    return Path(cli_out or cfg.get("output.path") or ".")


# ------------------------------------------------------------------ commands


def cmd_simulate(cfg: dict, out: Path) -> dict:
    name, tgt = resolve_target(cfg)
    params = system_params(cfg, tgt.shape[0])
    opts = integrator_options(cfg)
    fmt = cfg.get("output.format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"output.format must be json or csv, got {fmt!r}", "output.format")
    res = assemble_unitary(params, tgt, opts, name)
    doc = {
        "target": name,
        "params": params_json(params),
        "tr_p": res.tr_p,
        "fidelity": res.fidelity,
        "unitary": matrix_json(res.unitary),
        "diagnostics": {
            "steps_accepted": res.steps_accepted,
            "steps_rejected": res.steps_rejected,
            "max_norm_drift": res.max_norm_drift,
            "unitarity_defect": float(np.max(np.abs(res.unitary.conj().T @ res.unitary - np.eye(params.dim)))),
            "abs_tol": opts.abs_tol,
            "rel_tol": opts.rel_tol,
            "notes": res.notes,
        },
    }
    _dump(doc, out / "simulate.json")
    if fmt == "csv":
        with open(out / "unitary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "col", "re", "im"])
            for (i, j), z in np.ndenumerate(res.unitary):
                w.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])
    return doc


def _anneal_schedule(cfg: dict) -> optimize.AnnealSchedule:
    keys = ("t0", "decay", "sweep_length", "sweeps", "rel_scale", "abs_scale", "polish_evals")
    kwargs = {k: cfg[f"optimize.schedule.{k}"] for k in keys if f"optimize.schedule.{k}" in cfg}
    try:
        return optimize.AnnealSchedule(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), "optimize.schedule") from exc


def cmd_optimize(cfg: dict, out: Path) -> dict:
    (algorithm,) = _require(cfg, "optimize.algorithm")
    if algorithm not in ("simplex", "anneal"):
        raise ConfigError(f"optimize.algorithm must be simplex or anneal, got {algorithm!r}", "optimize.algorithm")
    if algorithm == "anneal":
        _require(cfg, "optimize.seed")
    name, _ = resolve_target(cfg)
    if "target.file" in cfg:
        raise ConfigError("optimize needs a named target", "target.file")
    dim = targets.gate_dim(name)
    params = system_params(cfg, dim)
    if (algorithm == "simplex") != (dim == 2):
        _warn(f"{algorithm} on a {dim}-dim target: the published pairing is simplex for one qubit, anneal for two")
    free = tuple(cfg.get("optimize.free", ["lam", "eta4"]))
    try:
        spec = optimize.ObjectiveSpec(name, params, free, integrator_options(cfg))
    except ValueError as exc:
        raise ConfigError(str(exc), "optimize.free") from exc
    start = spec.values()
    if algorithm == "simplex":
        simplex = optimize.initial_simplex(start, cfg.get("optimize.simplex_step", 0.01))
        trace = optimize.nelder_mead(spec, simplex, max_evals=cfg.get("optimize.max_evals", 200))
    else:
        trace = optimize.simulated_annealing(spec, start, _anneal_schedule(cfg), seed=cfg["optimize.seed"], free=free)
    doc = trace.to_dict()
    doc.update({"algorithm": algorithm, "target": name, "seed": cfg.get("optimize.seed"), "start": start.tolist()})
    _dump(doc, out / "optimize_trace.json")
    best = {
        "target": name,
        "algorithm": algorithm,
        "evaluations": len(trace.evaluations),
        "termination_reason": trace.termination_reason,
        "tr_p": trace.best[1],
        "params": params_json(spec.point(trace.best[0])) if trace.best[0] else None,
    }
    _dump(best, out / "optimize_best.json")
    if not math.isfinite(trace.best[1]):
        raise PropagationError("every objective evaluation failed")
    return best


def _translate_sweep(cfg: dict, backend: str):
    """Physical sweep plus echo entries for the report."""
    echo: dict = {}
    if backend == "nmr" and "hardware.omega1" in cfg:
        omega1, A, T0 = _require(cfg, "hardware.omega1", "hardware.nmr_A", "hardware.T0")
        (eta4,) = _require(cfg, "sweep.eta4")
        nmr = hardware.NMRParameters(omega1, A, hardware.nmr_script_b(omega1, A, T0, eta4), T0)
        phys = hardware.nmr_inverse(nmr)
        return phys, echo
    (b_over_hbar,) = _require(cfg, "hardware.b_over_hbar")
    if b_over_hbar <= 0:
        raise ConfigError("hardware.b_over_hbar must be positive", "hardware.b_over_hbar")
    phys = hardware.from_dimensionless(sweep_params(cfg), hardware.HBAR * b_over_hbar)
    echo["b_over_hbar"] = b_over_hbar
    return phys, echo


def cmd_translate(cfg: dict, out: Path) -> dict:
    (backend,) = _require(cfg, "hardware.backend")
    if backend not in ("nmr", "charge", "rfsquid", "pcq"):
        raise ConfigError(f"hardware.backend must be nmr, charge, rfsquid or pcq, got {backend!r}", "hardware.backend")
    n = cfg.get("hardware.sample_count", hardware.DEFAULT_SAMPLES)
    phys, report = _translate_sweep(cfg, backend)
    sp = hardware.to_dimensionless(phys)
    report.update(
        {
            "backend": backend,
            "a_J_per_s": phys.a,
            "b_J": phys.b,
            "B_twist_per_s4": phys.B_twist,
            "T0_seconds": phys.T0,
            "lambda": sp.lam,
            "eta4": sp.eta4,
            "tau0": sp.tau0,
        }
    )
    hbar = hardware.HBAR
    if backend == "nmr":
        waves = hardware.nmr_schedule(phys, n)
        nmr = hardware.nmr_translate(phys)
        report.update({"omega1_per_s": nmr.omega1, "A_per_s": nmr.A, "B_script": nmr.B_script})
        at, bcos = hardware.nmr_reconstruct(waves)
    elif backend == "charge":
        cg, ec = _require(cfg, "hardware.cg", "hardware.ec_over_hbar")
        ej0 = cfg["hardware.ej0_over_hbar"] * hbar if "hardware.ej0_over_hbar" in cfg else None
        waves, extra = hardware.charge_qubit_schedule(phys, cg, ec * hbar, ej0, cfg.get("hardware.rescale", False), n)
        report.update(extra)
        at, bcos = hardware.charge_qubit_reconstruct(waves, cg, ec * hbar, extra["EJ0_used"])
        if "rescaled" in extra:
            phys = hardware.PhysicalSweep(phys.a, extra["EJ0_used"], phys.B_twist, phys.T0)
    elif backend == "rfsquid":
        (ej0,) = _require(cfg, "hardware.ej0_over_hbar")
        (eps,) = _require(cfg, "hardware.epsilon")
        ej0 *= hbar
        if "hardware.beta_l0" in cfg:
            beta, sqrt_lc = _require(cfg, "hardware.beta_l0", "hardware.sqrt_lc")
            L = hardware.rfsquid_inductance_for_beta(beta, ej0, eps)
            C = sqrt_lc**2 / L
        else:
            L, C = _require(cfg, "hardware.inductance", "hardware.capacitance")
        waves, consts = hardware.rfsquid_schedule(
            phys, L, C, ej0, eps, n, cfg.get("hardware.threshold", hardware.DEFAULT_VALIDITY_THRESHOLD)
        )
        report.update(consts.to_dict())
        report.update({"inductance_H": L, "capacitance_F": C, "epsilon": eps})
        at, bcos = hardware.rfsquid_reconstruct(waves, consts)
    else:
        keys = ("hardware.ej0_over_hbar", "hardware.z0", "hardware.x1", "hardware.x2", "hardware.z1", "hardware.z2")
        ej0, z0, x1, x2, z1, z2 = _require(cfg, *keys)
        ej0 *= hbar
        waves = hardware.pcq_schedule(phys, ej0, z0, x1, x2, z1, z2, n)
        pf = hardware.pcq_prefactors(x1, x2, z1, z2)
        report.update({"prefactors": [pf.p1, pf.p2, pf.p3, pf.p4], "b_over_EJ0": phys.b / ej0, "z0": z0})
        at, bcos = hardware.pcq_reconstruct(waves, ej0, z0, x1, x2, z1, z2)
    t = next(iter(waves.values())).times
    want_at, want_b = phys.sigma_z_coefficient(t), phys.sigma_x_coefficient(t)
    report["reconstruction_rel_error"] = {
        "sigma_z": float(np.max(np.abs(at - want_at)) / np.max(np.abs(want_at))),
        "sigma_x": float(np.max(np.abs(bcos - want_b)) / phys.b),
    }
    out.mkdir(parents=True, exist_ok=True)
    report["files"] = [w.write_csv(out / f"{backend}_{ch}.csv").name for ch, w in waves.items()]
    hardware.write_report(report, out / f"{backend}_report.json")
    return report


def _table_row(job):
    table_no, block_idx, row_idx, params, target_name, opts = job
    try:
        u, _ = propagate_unitary(params, opts)
        return metrics.tr_p(u, targets.target(target_name)), ""
    except PropagationError as exc:
        return math.inf, f"{type(exc).__name__}: {exc}"


def run_tables(which: list[int], opts: IntegratorOptions, workers: int = 1) -> dict[int, list[dict]]:
    """Reproduce the requested sensitivity tables; row order follows the published layout."""
    for n in which:
        if n not in reference.TABLES:
            raise ConfigError(f"no table {n}; choose from 1..7", "tables.which")
    jobs, layout = [], []
    for n in which:
        tab = reference.TABLES[n]
        for bi, block in enumerate(tab.blocks):
            for ri, point in enumerate(reference.block_points(tab, block)):
                jobs.append((n, bi, ri, point, tab.target, opts))
                layout.append((n, bi, block, ri, point))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_table_row, jobs))
    else:
        results = [_table_row(j) for j in jobs]
    tables: dict[int, list[dict]] = {n: [] for n in which}
    for (n, bi, block, ri, point), (trp, err) in zip(layout, results):
        row = {"block": bi + 1, "axis": block.axis, "value": block.values[ri]}
        row.update(params_json(point))
        row.update({"published_tr_p": block.published[ri], "tr_p": trp, "error": err})
        tables[n].append(row)
    return tables


def cmd_tables(cfg: dict, out: Path) -> dict:
    which = cfg.get("tables.which", sorted(reference.TABLES))
    tables = run_tables(which, integrator_options(cfg), cfg.get("tables.workers", 1))
    out.mkdir(parents=True, exist_ok=True)
    for n, rows in tables.items():
        with open(out / f"table{n}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    failed = [r for rows in tables.values() for r in rows if r["error"]]
    summary = {"tables": list(tables), "rows": sum(len(r) for r in tables.values()), "failed_rows": len(failed)}
    if failed:
        raise PropagationError(f"{len(failed)} table rows failed; see the error column")
    return summary


def run_verify(samples: int = 8, seed: int = 0) -> dict:
    """Universality residuals plus the fidelity <-> Tr P identity on random unitaries."""
    rng = np.random.default_rng(seed)
    res = targets.verify_universality()
    worst = 0.0
    for dim in (2, 4):
        for _ in range(samples):
            a = _haar_unitary(dim, rng)
            b = _haar_unitary(dim, rng)
            worst = max(worst, abs(metrics.fidelity(a, b) - metrics.fidelity_from_tr_p(metrics.tr_p(a, b), dim)))
    res["fidelity_identity"] = worst
    return res


def _haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


VERIFY_TOL = {"fidelity_identity": 1e-12}


def cmd_verify(cfg: dict, out: Path) -> dict:
    res = run_verify(seed=cfg.get("optimize.seed", 0))
    bad = [k for k, v in res.items() if v > VERIFY_TOL.get(k, 1e-14)]
    doc = {"residuals": res, "passed": not bad}
    _dump(doc, out / "verify.json")
    if bad:
        raise PropagationError(f"identity check failed: {', '.join(bad)}")
    return doc


HANDLERS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "translate": cmd_translate,
    "tables": cmd_tables,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------- main


def _warn(message: str) -> None:
    print(json.dumps({"warning": message}), file=sys.stderr)


def _fail(code: int, kind: str, message: str, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code, **extra}), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trpgates", description="Twisted-rapid-passage gate synthesis.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", help="output directory (default: output.path or .)")
    p.add_argument("--seed", type=int, help="random seed (sets optimize.seed)")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer", "optimize.seed")
            overrides.append(f"optimize.seed={args.seed}")
        cfg = load_config(args.config, overrides)
        doc = HANDLERS[args.command](cfg, _out_dir(cfg, args.out))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), key=exc.key)
    except hardware.HardwareError as exc:
        return _fail(EXIT_CONFIG, "hardware", str(exc))
    except PropagationError as exc:
        extra = {"last_tau": exc.last_tau} if hasattr(exc, "last_tau") else {}
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc), **extra)
    print(json.dumps(_summary(args.command, doc), sort_keys=True))
    return EXIT_OK


def _summary(command: str, doc: dict) -> dict:
    if command == "simulate":
        return {k: doc[k] for k in ("target", "tr_p", "fidelity")}
    if command == "translate":
        keep = ("backend", "lambda", "eta4", "tau0", "reconstruction_rel_error", "files")
        return {k: doc[k] for k in keep if k in doc}
    return doc


if __name__ == "__main__":
    sys.exit(main())
