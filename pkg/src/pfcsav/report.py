"""Render figures from the files a run or study leaves on disk.

Only reads CSV / snapshot outputs; the solver itself never imports this.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import read_energy_csv  # noqa: E402
from .spectral import read_snapshot  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_energy(csv_path: Path, out: Path) -> list[Path]:
    recs = read_energy_csv(csv_path)
    t = np.array([r.t for r in recs])
    written = []
    meta = csv_path.parent / "run_meta.json"
    c0 = json.loads(meta.read_text())["C0"] if meta.exists() else 0.0

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(t, [r.E_original for r in recs], label="original")
    ax.plot(t, [r.E_modified_discrete - c0 for r in recs], "--", label="discrete modified - C0")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend()
    written.append(_save(fig, out / "energy.png"))

    tau = np.array([r.tau for r in recs[:-1]])
    if len(tau):
        fig, (a1, a2) = plt.subplots(2, 1, figsize=(5, 5), sharex=True)
        a1.semilogy(t[:-1], tau, ".-", ms=2)
        a1.set_ylabel("tau")
        a2.plot(t[:-1], [r.gamma for r in recs[:-1]], ".", ms=2)
        a2.set_ylabel("ratio")
        a2.set_xlabel("t")
        written.append(_save(fig, out / "steps.png"))

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(t, [r.r_ratio for r in recs])
    ax.set_xlabel("t")
    ax.set_ylabel("r / sqrt(E1 + C0)")
    written.append(_save(fig, out / "r_ratio.png"))
    return written


def plot_study(csv_path: Path, out: Path) -> Path:
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    err = np.array([float(r["error"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if csv_path.stem == "study_space":
        ax.semilogy([int(r["M"]) for r in rows], err, "o-")
        ax.set_xlabel("M (grid points per side)")
    else:
        tau = np.array([float(r["tau"]) for r in rows])
        ax.loglog(tau, err, "o-", label="observed")
        ax.loglog(tau, err[-1] * (tau / tau[-1]) ** 2, "k:", label="slope 2")
        ax.set_xlabel("tau")
        ax.legend()
    ax.set_ylabel("max-norm error")
    return _save(fig, out / f"{csv_path.stem}.png")


def plot_snapshot(stem: Path, out: Path) -> Path:
    grid, phi, t = read_snapshot(stem)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(phi, origin="lower", extent=(0, grid.L, 0, grid.L), cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(f"t = {t:.4g}")
    return _save(fig, out / f"{stem.name}.png")


def render(directory: str | Path) -> list[Path]:
    """Draw every figure the files in ``directory`` support."""
    d = Path(directory)
    written = []
    if (d / "energy.csv").exists():
        written += plot_energy(d / "energy.csv", d)
    for name in ("study_time", "study_space"):
        if (d / f"{name}.csv").exists():
            written.append(plot_study(d / f"{name}.csv", d))
    for meta in sorted(d.glob("snap_*.meta")):
        written.append(plot_snapshot(meta.with_suffix(""), d))
    return written
