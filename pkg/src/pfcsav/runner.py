"""Run loop and convergence-study drivers."""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .adaptive import energy_rate, next_step_size, ratio_root
from .config import RunConfig
from .diagnostics import (EnergyLog, EnergyRecord, convergence_order, discrete_modified_energy,
                          linf_error)
from .integrator import SavStepper, StepState
from .model import c0_bounds_hold, e1, modified_energy, original_energy, resolve_c0, sav_r
from .scenarios import MeshPlan, ic_polycrystal, ic_random, ic_smooth, step_ratios
from .spectral import Grid, write_snapshot

log = logging.getLogger(__name__)

ENERGY_TOL = 1e-10


class RunError(RuntimeError):
    def __init__(self, step: int, cause: Exception, dump: Path | None):
        self.step = step
        self.dump = dump
        where = f"; state dumped to {dump}" if dump else ""
        super().__init__(f"run aborted at step {step}: {cause}{where}")


@dataclass
class RunResult:
    summary: dict
    records: list[EnergyRecord]
    phi: np.ndarray
    times: np.ndarray
    snapshots: list[tuple[float, float, Path | None]] = field(default_factory=list)


def initial_field(cfg: RunConfig, grid: Grid) -> np.ndarray:
    if cfg.scenario == "smooth":
        return ic_smooth(grid)
    if cfg.scenario == "random":
        return ic_random(grid, cfg.scenario_params.get("mean", 0.08),
                         cfg.scenario_params.get("amplitude", 0.08), cfg.seed)
    if cfg.scenario == "polycrystal":
        return ic_polycrystal(grid)
    raise ValueError(f"unknown scenario {cfg.scenario!r}")


class _Clock:
    """Supplies step sizes from a prescribed mesh or the adaptive controller."""

    def __init__(self, plan: MeshPlan):
        self.plan = plan
        self.T = plan.T
        self.steps = None if plan.kind == "adaptive" else np.diff(plan.times())

    def next_tau(self, n: int, t: float, tau_n: float | None, energies: list[float]) -> float | None:
        if self.steps is not None:
            return float(self.steps[n]) if n < len(self.steps) else None
        remaining = self.T - t
        if remaining <= 1e-12 * max(1.0, self.T):
            return None
        ap = self.plan.adaptive
        if n == 0:
            tau = ap.tau_min
        else:
            rate = energy_rate(energies[-2], energies[-1], tau_n)
            tau = next_step_size(rate, tau_n, ap)
        return min(tau, remaining)


def run(cfg: RunConfig, phi0: np.ndarray | None = None, keep_records: bool = True) -> RunResult:
    """Starter step, then BDF2 steps along the mesh; logs and snapshots as it goes.

    The energy row for step n is written once tau_{n+1} is known, since the
    discrete modified energy at step n depends on gamma_{n+1}.
    """
    wall = time.perf_counter()
    grid = Grid(cfg.L, cfg.M)
    if phi0 is None:
        phi0 = initial_field(cfg, grid)
    grid.check(phi0)
    plan = cfg.mesh
    p = cfg.model
    e1_0 = e1(grid, phi0, p)
    c0 = resolve_c0(p.c0_policy, plan.tau_max, e1_0)
    p = p.with_c0(c0)
    stepper = SavStepper(grid, p, cfg.sigma, cfg.dealias)
    clock = _Clock(plan)

    out = Path(cfg.output_dir) if cfg.output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    elog = EnergyLog(out / "energy.csv" if out else None)
    pending_snaps = list(cfg.snapshot_times)
    snapshots = []

    mass0 = float(np.mean(phi0))
    state = StepState(phi_prev=phi0, phi_curr=phi0, r_curr=math.nan,
                      tau_prev=math.nan, t_curr=0.0, step_index=0)
    energies = [original_energy(grid, phi0, p)]
    use_modified = cfg.mesh.kind == "adaptive" and cfg.mesh.adaptive.rate_energy == "modified"
    rate_series = energies
    times = [0.0]
    stats = {"max_mass_drift": 0.0, "energy_increases": 0, "c0_bound_warnings": 0,
             "min_denominator": math.inf}
    e_mod_prev = None

    def snap(st: StepState):
        while pending_snaps and pending_snaps[0] <= st.t_curr + 1e-12:
            req = pending_snaps.pop(0)
            path = None
            if out is not None:
                path = out / f"snap_{len(snapshots):04d}"
                write_snapshot(path, grid, st.phi_curr, st.t_curr)
            snapshots.append((req, st.t_curr, path))

    def emit(st: StepState, tau_next: float, gamma_next: float):
        nonlocal e_mod_prev
        e_mod = discrete_modified_energy(grid, st, cfg.sigma, gamma_next, p)
        rec = EnergyRecord(st.step_index, st.t_curr, tau_next, gamma_next, energies[-1], e_mod,
                           st.r_curr, st.r_ratio, float(np.mean(st.phi_curr)))
        if e_mod_prev is not None and e_mod - e_mod_prev > ENERGY_TOL * max(1.0, abs(e_mod_prev)):
            stats["energy_increases"] += 1
        e_mod_prev = e_mod
        elog.append(rec)
        if not keep_records:
            elog.records.clear()

    try:
        state = replace(state, r_curr=sav_r(grid, phi0, p))
        if use_modified:
            rate_series = [modified_energy(grid, phi0, state.r_curr, p)]
        snap(state)
        while True:
            n = state.step_index
            tau_n = None if n == 0 else state.tau_prev
            tau_next = clock.next_tau(n, state.t_curr, tau_n, rate_series)
            if tau_next is None:
                break
            gamma_next = 1.0 if n == 0 else tau_next / tau_n
            emit(state, tau_next, gamma_next)
            state = stepper.start(state.phi_curr, state.r_curr, tau_next) if n == 0 \
                else stepper.bdf2(state, tau_next)
            stats["min_denominator"] = min(stats["min_denominator"], stepper.last_denominator)
            energies.append(original_energy(grid, state.phi_curr, p))
            if use_modified:
                rate_series.append(modified_energy(grid, state.phi_curr, state.r_curr, p))
            times.append(state.t_curr)
            drift = abs(float(np.mean(state.phi_curr)) - mass0)
            stats["max_mass_drift"] = max(stats["max_mass_drift"], drift)
            if not c0_bounds_hold(e1(grid, state.phi_curr, p), c0):
                if stats["c0_bound_warnings"] == 0:
                    log.warning("C0/2 <= E1 + C0 <= 2 C0 fails at step %d (t=%g)",
                                state.step_index, state.t_curr)
                stats["c0_bound_warnings"] += 1
            snap(state)
        emit(state, state.tau_prev if state.step_index else 0.0, 1.0)
    except Exception as exc:
        dump = None
        if out is not None:
            dump = out / f"failure_step{state.step_index:06d}"
            write_snapshot(dump, grid, state.phi_curr, state.t_curr)
        raise RunError(state.step_index, exc, dump) from exc
    finally:
        elog.close()

    times = np.asarray(times)
    taus = np.diff(times)
    ratios = step_ratios(times) if len(times) > 2 else np.array([1.0])
    summary = {
        "scenario": cfg.scenario,
        "steps": int(len(taus)),
        "bdf2_steps": int(max(0, len(taus) - 1)),
        "t_final": float(times[-1]),
        "tau_min": float(taus.min()) if len(taus) else 0.0,
        "tau_max": float(taus.max()) if len(taus) else 0.0,
        "max_ratio": float(ratios.max()),
        "ratio_limit": ratio_root(cfg.sigma),
        "E_original_final": float(energies[-1]),
        "E_modified_final": float(e_mod_prev),
        "r_final": float(state.r_curr),
        "C0": float(c0),
        "sigma": cfg.sigma,
        "wall_time": time.perf_counter() - wall,
        **{k: float(v) if isinstance(v, float) else v for k, v in stats.items()},
    }
    if out is not None:
        (out / "summary.json").write_text(json.dumps(summary, sort_keys=True) + "\n")
        meta = {"C0": c0, "snapshots": [[req, t, str(pth)] for req, t, pth in snapshots]}
        (out / "run_meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    return RunResult(summary, elog.records, state.phi_curr, times, snapshots)


# ------------------------------------------------------------- convergence

@dataclass
class StudyRow:
    M: int
    tau: float
    max_gamma: float
    error: float
    order: float | None
    # worst |mean(phi^n) - mean(phi^0)| of this run and its reference; not written to CSV
    mass_drift: float = 0.0


def _with_mesh(cfg: RunConfig, **mesh_changes) -> RunConfig:
    return replace(cfg, mesh=replace(cfg.mesh, **mesh_changes), output_dir=None,
                   snapshot_times=())


def convergence_study(template: RunConfig, step_counts: Sequence[int], kind: str = "uniform",
                      reference_steps: int | None = None) -> tuple[list[StudyRow], RunResult]:
    """Temporal study: L-infinity error at T against a fine uniform reference.

    ``step_counts`` are numbers of base subintervals on [0, T]; the starter
    split of the first interval is applied on top of them.
    """
    T = template.T
    if reference_steps is None:
        reference_steps = 8 * max(step_counts)
    if reference_steps <= max(step_counts):
        raise ValueError("the reference step must be finer than every studied step")
    ref = run(_with_mesh(template, kind="uniform", tau=T / reference_steps), keep_records=False)
    rows = []
    for m in step_counts:
        res = run(_with_mesh(template, kind=kind, tau=T / m), keep_records=False)
        drift = max(res.summary["max_mass_drift"], ref.summary["max_mass_drift"])
        rows.append(StudyRow(m, res.summary["tau_max"], res.summary["max_ratio"],
                             linf_error(res.phi, ref.phi), None, drift))
    orders = convergence_order([(r.tau, r.error) for r in rows])
    for row, order in zip(rows[1:], orders):
        row.order = order
    return rows, ref


def space_study(template: RunConfig, grid_sizes: Sequence[int],
                reference_M: int | None = None) -> list[StudyRow]:
    """Spatial study at a fixed mesh: error on the coarse nodes vs a fine grid."""
    if reference_M is None:
        reference_M = 2 * max(grid_sizes)
    if any(reference_M % m for m in grid_sizes):
        raise ValueError("reference grid size must be a multiple of every studied size")
    base = replace(template, output_dir=None, snapshot_times=())
    ref = run(replace(base, M=reference_M), keep_records=False)
    rows = []
    for m in grid_sizes:
        res = run(replace(base, M=m), keep_records=False)
        stride = reference_M // m
        drift = max(res.summary["max_mass_drift"], ref.summary["max_mass_drift"])
        rows.append(StudyRow(m, res.summary["tau_max"], res.summary["max_ratio"],
                             linf_error(res.phi, ref.phi[::stride, ::stride]), None, drift))
    return rows


STUDY_HEADER = "M,tau,max_gamma,error,order"


def write_study(rows: Sequence[StudyRow], path: str | Path) -> None:
    lines = [STUDY_HEADER]
    for r in rows:
        order = "" if r.order is None else f"{r.order:.17g}"
        lines.append(f"{r.M},{r.tau:.17g},{r.max_gamma:.17g},{r.error:.17g},{order}")
    Path(path).write_text("\n".join(lines) + "\n")
