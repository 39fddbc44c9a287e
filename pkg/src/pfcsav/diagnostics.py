"""Energy and mass monitors, error norms and observed convergence orders."""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .adaptive import stability_g
from .integrator import StepState
from .model import ModelParams, modified_energy
from .spectral import Grid, hminus1_norm

CSV_HEADER = "step,t,tau,gamma,E_original,E_modified_discrete,r,r_ratio,mass"


@dataclass(frozen=True)
class EnergyRecord:
    """One row of the energy log.

    ``tau`` and ``gamma`` describe the step leaving ``t`` (tau_{n+1} and
    tau_{n+1}/tau_n), which is the ratio the discrete modified energy at
    step n depends on.  The last row of a run uses gamma = 1.
    """

    step: int
    t: float
    tau: float
    gamma: float
    E_original: float
    E_modified_discrete: float
    r: float
    r_ratio: float
    mass: float


def discrete_modified_energy(grid: Grid, state: StepState, sigma: float, gamma_next: float,
                             p: ModelParams) -> float:
    """E-bar(phi^n, r^n) + g(gamma_{n+1}) ||grad^{-1}(phi^n - phi^{n-1})||^2 / tau_n."""
    base = modified_energy(grid, state.phi_curr, state.r_curr, p)
    g = stability_g(gamma_next, sigma)
    if g == 0 or state.step_index == 0:
        return base
    scale = float(np.max(np.abs(state.phi_curr)))
    inc = hminus1_norm(grid, state.phi_curr - state.phi_prev, scale=scale)
    return base + g * inc**2 / state.tau_prev


def linf_error(f: np.ndarray, ref: np.ndarray) -> float:
    if np.shape(f) != np.shape(ref):
        raise ValueError(f"shape mismatch {np.shape(f)} vs {np.shape(ref)}")
    return float(np.max(np.abs(np.asarray(f) - np.asarray(ref))))


def convergence_order(errs: Sequence[tuple[float, float]]) -> list[float]:
    """Pairwise observed orders log(e_i/e_{i+1}) / log(tau_i/tau_{i+1})."""
    if len(errs) < 2:
        raise ValueError("need at least two (tau, error) pairs")
    orders = []
    for (t0, e0), (t1, e1) in zip(errs, errs[1:]):
        if min(t0, t1, e0, e1) <= 0:
            raise ValueError("step sizes and errors must be positive")
        if t0 == t1:
            raise ValueError("consecutive step sizes coincide")
        orders.append(math.log10(e0 / e1) / math.log10(t0 / t1))
    return orders


def r_tracking_error(records: Iterable[EnergyRecord]) -> float:
    """max_n |r^{n+1} / sqrt(E1^n + C0) - 1| over a run."""
    ratios = [rec.r_ratio for rec in records]
    if not ratios:
        raise ValueError("no records")
    return max(abs(x - 1.0) for x in ratios)


def format_record(rec: EnergyRecord) -> str:
    out = [str(rec.step)]
    out += [f"{float(v):.17g}" for v in astuple(rec)[1:]]
    return ",".join(out)


class EnergyLog:
    """Append-only CSV writer for EnergyRecords."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[EnergyRecord] = []
        self._fh = None
        if path is not None:
            self._fh = open(path, "w", newline="")
            self._fh.write(CSV_HEADER + "\n")

    def append(self, rec: EnergyRecord) -> None:
        self.records.append(rec)
        if self._fh is not None:
            self._fh.write(format_record(rec) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_energy_csv(path: str | Path) -> list[EnergyRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != CSV_HEADER:
            raise ValueError(f"unexpected energy log header: {','.join(header)}")
        return [EnergyRecord(int(row[0]), *(float(v) for v in row[1:])) for row in reader if row]
