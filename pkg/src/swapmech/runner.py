"""Subcommand execution: validated config in, deterministic artifacts out.

Every float is printed with 17 significant digits and lines end with LF, so
identical configs produce byte-identical artifacts.  Sweep points run in
parallel (thread count from SWAPMECH_THREADS) but rows are emitted in grid
order regardless of completion order.
"""

from __future__ import annotations

import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    compare_population_series,
    default_initial_state,
    full_model_simulate,
    integrate_effective_ode,
    solve_effective_closed_form,
)
from .gate import NoSolutionError, feasibility, swap_time
from .linalg import basis_state
from .params import SystemParams
from .reduction import coefficients
from .runconfig import (
    CompareConfig,
    ConfigError,
    FeasibilityConfig,
    GateTimeConfig,
    SimulateEffectiveConfig,
    SimulateFullConfig,
    SweepConfig,
)

THREADS_ENV = "SWAPMECH_THREADS"


@dataclass(frozen=True)
class RunResult:
    subcommand: str
    summary: str  # human-readable report for stdout
    artifact: str  # deterministic primary artifact
    artifact_kind: str  # "csv" | "json"


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def _jsonable(value):
    """Strict-JSON payloads: non-finite floats become strings."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return format(value, "g")  # "inf", "-inf", "nan"
    return value


def _json_artifact(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True,
                      allow_nan=False) + "\n"


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1, got {n}")
        return n
    return min(4, os.cpu_count() or 1)


# --- subcommands -------------------------------------------------------------

def run_feasibility(cfg: FeasibilityConfig) -> RunResult:
    params = cfg.params.to_params(cfg.units)
    report = feasibility(params, s_max=cfg.s_max)
    lines = [
        f"x_zpf_m {_fmt(report.x_zpf)}",
        f"t_quantum_K {_fmt(report.t_quantum)}",
        f"lambda_rad_s {_fmt(report.lam)}",
        f"lambda_prime {_fmt(report.lambda_prime)}",
        f"lambda_per_gprime {_fmt(report.lambda_per_gprime)}",
    ]
    for sol in report.gate_times:
        lines.append(f"gate_time_s{sol.s} {_fmt(sol.T)} {_fmt(sol.t_seconds)}")
    lines.append(f"decay_margin_ratio {_fmt(report.decay_margin_ratio)}")
    for check in report.hierarchy.checks:
        lines.append(f"hierarchy.{check.name} {_fmt(check.value)} {check.status}")
    summary = "\n".join(lines) + "\n"
    return RunResult("feasibility", summary, _json_artifact(report.as_dict()), "json")


def run_gate_time(cfg: GateTimeConfig) -> RunResult:
    n, lambda_prime, _ = cfg.resolve()
    omega_m = cfg.omega_m_angular()
    rows = []
    for s in range(cfg.s_max + 1):
        try:
            sol = swap_time(n, lambda_prime, s, omega_m=omega_m)
        except NoSolutionError:
            break
        rows.append([str(sol.s), _fmt(sol.T), _fmt(sol.t_seconds)])
    if not rows:
        raise NoSolutionError(
            f"no swap-time branch exists for n={n}, lambda'={lambda_prime:.6g} "
            f"(n=1 requires lambda' >= pi/2)"
        )
    csv = _csv(["s", "T", "t_seconds"], rows)
    summary = f"n={n} lambda_prime={_fmt(lambda_prime)} branches={len(rows)}\n"
    return RunResult("gate-time", summary, csv, "csv")


def _effective_csv(record) -> str:
    rows = []
    for i, tau in enumerate(record.times):
        b1, b2 = record.amplitudes[i]
        rows.append([
            _fmt(tau),
            _fmt(b1.real), _fmt(b1.imag),
            _fmt(b2.real), _fmt(b2.imag),
            _fmt(record.populations[i, 0]), _fmt(record.populations[i, 1]),
        ])
    return _csv(
        ["tau", "re_b1", "im_b1", "re_b2", "im_b2", "pop_g1f2", "pop_f1g2"], rows
    )


def run_simulate_effective(cfg: SimulateEffectiveConfig) -> RunResult:
    n, lambda_prime, _ = cfg.resolve()
    b0 = cfg.initial_amplitudes()
    span = (float(cfg.tau_span[0]), float(cfg.tau_span[1]))
    if cfg.solver == "rk4":
        record = integrate_effective_ode(
            lambda_prime, n, b0, span, cfg.integrator.to_config()
        )
    else:
        record = solve_effective_closed_form(
            lambda_prime, n, b0, span, num=cfg.samples
        )
    csv = _effective_csv(record)
    summary = (
        f"n={n} lambda_prime={_fmt(lambda_prime)} solver={cfg.solver} "
        f"samples={record.nsamples} norm_drift={_fmt(record.norm_drift)}\n"
    )
    return RunResult("simulate-effective", summary, csv, "csv")


def _initial_state_from_label(params: SystemParams, label: str):
    levels = {"g": 0, "f": 1}
    atoms = (levels[label[0]], levels[label[2]])
    space = default_initial_state(params).space
    return basis_state(space, atoms + (0,) * (space.nslots - 2))


def run_simulate_full(cfg: SimulateFullConfig) -> RunResult:
    params = cfg.params.to_params(cfg.units)
    omega_m = params.omega_m
    span = (cfg.t_span[0] / omega_m, cfg.t_span[1] / omega_m)
    psi0 = _initial_state_from_label(params, cfg.initial_state)
    result = full_model_simulate(
        params,
        psi0=psi0,
        t_span=span,
        cfg=cfg.integrator.to_config(),
        audit_cutoff=cfg.audit_cutoff,
        cutoff_tolerance=cfg.cutoff_tolerance,
        stage=cfg.stage,
    )
    record = result.trajectory
    header = (["t"] + [f"pop_{lab}" for lab in record.labels] + ["n_cavity"])
    rows = []
    for i, t in enumerate(record.times):
        row = [_fmt(omega_m * t)]  # time in units of 1/omega_m, like the config
        row.extend(_fmt(p) for p in record.populations[i])
        row.append(_fmt(result.photon_expectation[i]))
        rows.append(row)
    csv = _csv(header, rows)
    lines = [
        f"samples={record.nsamples} norm_drift={_fmt(record.norm_drift)}",
        f"max_photon_expectation {_fmt(float(np.max(result.photon_expectation)))}",
        f"qubit_pop_g1f2_final {_fmt(result.qubit_populations['g1f2'][-1])}",
        f"qubit_pop_f1g2_final {_fmt(result.qubit_populations['f1g2'][-1])}",
    ]
    if result.cutoff_shift is not None:
        lines.append(f"cutoff_shift {_fmt(result.cutoff_shift)}")
    for check in result.hierarchy.checks:
        lines.append(f"hierarchy.{check.name} {_fmt(check.value)} {check.status}")
    return RunResult("simulate-full", "\n".join(lines) + "\n", csv, "csv")


_FREQUENCY_AXES = {"Omega", "g", "delta", "Delta", "gprime", "omega_m", "epsilon"}


def _sweep_point(cfg: SweepConfig, base: SystemParams | None, value: float):
    """(lambda_prime, T, fidelity) strings for one grid point."""
    axis = cfg.axis.parameter
    if axis == "lambda_prime":
        lambda_prime = value
        n = cfg.n if cfg.n is not None else base.n
    else:
        factor = 2.0 * np.pi if (cfg.units == "hertz" and axis in _FREQUENCY_AXES) else 1.0
        v = factor * value
        changes = {
            "Omega": {"Omega": v},
            "g": {"g1": v, "g2": v},
            "delta": {"delta": v},
            "Delta": {"Delta1": v, "Delta2": v},
            "gprime": {"gprime": v},
            "omega_m": {"omega_m": v},
            "X0": {"X0": v},
            "epsilon": {"epsilon": v},
        }[axis]
        point = base.with_(**changes)
        lambda_prime = coefficients(point).lambda_prime
        n = point.n
    if not lambda_prime > 0.0:
        return _fmt(lambda_prime), "", ""
    try:
        sol = swap_time(n, lambda_prime, cfg.s)
    except NoSolutionError:
        return _fmt(lambda_prime), "", ""
    record = integrate_effective_ode(
        lambda_prime, n, (1.0, 0.0), (0.0, sol.T), cfg.integrator.to_config()
    )
    fidelity = record.population_at("f1g2", sol.T)
    return _fmt(lambda_prime), _fmt(sol.T), _fmt(fidelity)


def run_sweep(cfg: SweepConfig) -> RunResult:
    base = cfg.params.to_params(cfg.units) if cfg.params is not None else None
    grid = cfg.axis.grid()
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        results = list(pool.map(lambda v: _sweep_point(cfg, base, v), grid))
    rows = [
        [_fmt(value), lp, t, fid]
        for value, (lp, t, fid) in zip(grid, results)
    ]
    csv = _csv([cfg.axis.parameter, "lambda_prime", "T", "fidelity"], rows)
    solved = sum(1 for _, t, _f in results if t)
    summary = f"points={len(grid)} solved={solved} s={cfg.s}\n"
    return RunResult("sweep", summary, csv, "csv")


def _parse_trajectory_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError("trajectory csv is empty")
    header = lines[0].split(",")
    if len(header) < 2:
        raise ConfigError("trajectory csv needs a time column and populations")
    pop_cols = {
        name[len("pop_"):]: idx
        for idx, name in enumerate(header)
        if name.startswith("pop_")
    }
    if not pop_cols:
        raise ConfigError("trajectory csv has no pop_* columns")
    times, series = [], {lab: [] for lab in pop_cols}
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        try:
            times.append(float(cells[0]))
            for lab, idx in pop_cols.items():
                series[lab].append(float(cells[idx]))
        except (ValueError, IndexError):
            raise ConfigError(
                f"trajectory csv line {lineno} is malformed: {ln[:60]!r}"
            ) from None
    return np.asarray(times), {k: np.asarray(v) for k, v in series.items()}


def run_compare(cfg: CompareConfig) -> RunResult:
    if cfg.csv_a is None or cfg.csv_b is None:
        raise ConfigError(
            "compare needs inline csv content; the CLI resolves file paths"
        )
    times_a, pops_a = _parse_trajectory_csv(cfg.csv_a)
    times_b, pops_b = _parse_trajectory_csv(cfg.csv_b)
    shared = set(pops_a) & set(pops_b)
    if cfg.labels:
        missing = [lab for lab in cfg.labels if lab not in shared]
        if missing:
            raise ConfigError(
                f"labels not present in both trajectories: {missing}"
            )
        labels = list(cfg.labels)
    else:
        labels = sorted(shared)
    if not labels:
        raise ConfigError("trajectories share no population columns")
    worst = compare_population_series(times_a, pops_a, times_b, pops_b, labels)
    per_label = {
        lab: compare_population_series(times_a, pops_a, times_b, pops_b, [lab])
        for lab in labels
    }
    lines = [f"max_population_deviation {_fmt(worst)}"]
    lines.extend(f"deviation.{lab} {_fmt(per_label[lab])}" for lab in labels)
    summary = "\n".join(lines) + "\n"
    payload = {
        "max_population_deviation": worst,
        "per_label": per_label,
        "labels": list(labels),
    }
    return RunResult("compare", summary, _json_artifact(payload), "json")


_RUNNERS = {
    "feasibility": run_feasibility,
    "gate-time": run_gate_time,
    "simulate-effective": run_simulate_effective,
    "simulate-full": run_simulate_full,
    "sweep": run_sweep,
    "compare": run_compare,
}


def run_subcommand(subcommand: str, cfg) -> RunResult:
    try:
        runner = _RUNNERS[subcommand]
    except KeyError:
        raise ConfigError(f"unknown subcommand {subcommand!r}") from None
    return runner(cfg)
