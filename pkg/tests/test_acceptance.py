"""Acceptance criteria for the solver, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL] criterion N: ...`` line; the
lines are also collected into a summary section at the end of the pytest
session. Run with ``pytest tests/test_acceptance.py -v -s`` or directly as
``python tests/test_acceptance.py``.

Expensive runs are session-scoped fixtures so that the mass conservation
criterion can inspect every run regardless of test order.
"""
from __future__ import annotations

import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from pfcsav.adaptive import ratio_root
from pfcsav.config import parse_config
from pfcsav.diagnostics import convergence_order, r_tracking_error
from pfcsav.integrator import StepState, bdf2_step, first_order_step
from pfcsav.model import ModelParams, sav_r
from pfcsav.runner import convergence_study, run, space_study
from pfcsav.scenarios import POLYCRYSTAL_BACKGROUND, MeshPlan, ic_polycrystal, step_ratios
from pfcsav.spectral import Grid

from conftest import ACCEPTANCE_LINES, DenseOracle

SMOOTH = ("[scenario]\nname = smooth\n[grid]\nL = 32\nM = 64\n[model]\nepsilon = 0.025\n"
          "beta = 1\nsigma = 1\n{model}[time]\nT = {T}\ntau = {tau}\n{time}")

RANDOM = ("[scenario]\nname = random\nseed = 7\n[grid]\nL = 64\nM = 128\n[model]\n"
          "epsilon = 0.1\nc0 = 100\n[time]\n{time}")

ENERGY_RTOL = 1e-10
MASS_TOL = 1e-12

# name -> worst mass drift of the runs behind a fixture
MASS_DRIFTS: dict[str, float] = {}


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.3g}" for x in xs) + "]"


# ------------------------------------------------------------------ fixtures

@pytest.fixture(scope="session")
def uniform_study():
    cfg = parse_config(SMOOTH.format(model="c0_factor = 100\n", T=1, tau=0.1, time=""))
    (rows, ref), secs = timed(convergence_study, cfg, [10, 20, 40, 80], "uniform",
                              reference_steps=640)
    MASS_DRIFTS["uniform time study"] = max(r.mass_drift for r in rows)
    return rows, secs


@pytest.fixture(scope="session")
def perturbed_study():
    cfg = parse_config(SMOOTH.format(model="c0_factor = 10000\n", T=1, tau=0.1,
                                     time="mesh_seed = 0\nratio_cap = none\n"))
    (rows, ref), secs = timed(convergence_study, cfg, [20, 40, 80, 160], "perturbed",
                              reference_steps=1280)
    MASS_DRIFTS["perturbed time study"] = max(r.mass_drift for r in rows)
    return rows, secs


@pytest.fixture(scope="session")
def r_ladder():
    out = []
    for n in (80, 160, 320, 640):
        res = run(parse_config(SMOOTH.format(model="c0 = inv_tau\n", T=1, tau=repr(1 / n),
                                             time="")))
        MASS_DRIFTS[f"r ladder tau=1/{n}"] = res.summary["max_mass_drift"]
        out.append((1 / n, r_tracking_error(res.records), res.summary["C0"]))
    return out


@pytest.fixture(scope="session")
def space_rows():
    cfg = parse_config(SMOOTH.format(model="", T=0.1, tau=1e-4, time=""))
    rows, secs = timed(space_study, cfg, [8, 16, 32], reference_M=64)
    MASS_DRIFTS["space study"] = max(r.mass_drift for r in rows)
    return rows, secs


@pytest.fixture(scope="session")
def stability_run():
    cfg = parse_config(RANDOM.format(time="T = 100\nmesh = perturbed\ntau = 0.1\nfraction = 0.4\n"
                                          "ratio_cap = 4.8645\n"))
    times = cfg.mesh.times()[:502]  # starter step + 500 BDF2 steps
    plan = MeshPlan("explicit", float(times[-1]), explicit=tuple(times), starter_exponent=None)
    res, secs = timed(run, replace(cfg, mesh=plan))
    MASS_DRIFTS["stability run"] = res.summary["max_mass_drift"]
    return res, secs


@pytest.fixture(scope="session")
def adaptive_pair():
    ad, t_ad = timed(run, parse_config(RANDOM.format(
        time="T = 200\nmesh = adaptive\ntau_min = 0.01\ntau_max = 1\ngamma_ada = 1e5\n")),
        keep_records=False)
    un, t_un = timed(run, parse_config(RANDOM.format(time="T = 200\nmesh = uniform\ntau = 0.01\n")),
                     keep_records=False)
    MASS_DRIFTS["adaptive run"] = ad.summary["max_mass_drift"]
    MASS_DRIFTS["uniform tau=0.01 run"] = un.summary["max_mass_drift"]
    return ad, un, t_ad + t_un


@pytest.fixture(scope="session")
def polycrystal_run():
    cfg = parse_config("[scenario]\nname = polycrystal\n[grid]\nL = 200\nM = 256\n[model]\n"
                       "epsilon = 0.25\n[time]\nT = 100\nmesh = adaptive\ntau_min = 0.01\n"
                       "tau_max = 1\ngamma_ada = 10\n")
    res = run(cfg)
    MASS_DRIFTS["polycrystal run"] = res.summary["max_mass_drift"]
    return res, ic_polycrystal(Grid(cfg.L, cfg.M))


# ------------------------------------------------------------------ criteria

def test_criterion_1_temporal_order(uniform_study):
    rows, secs = uniform_study
    orders = [r.order for r in rows[1:]]
    ok = all(1.7 <= o <= 2.3 for o in orders) and rows[-1].error <= 1e-5 and secs <= 60
    verdict(1, ok, f"orders {fmt(orders)} in [1.7, 2.3], final error {rows[-1].error:.3g} "
                   f"<= 1e-5, {secs:.1f} s <= 60 s")


def test_criterion_2_random_mesh_order(perturbed_study):
    rows, secs = perturbed_study
    orders = [r.order for r in rows[1:]]
    mean = float(np.mean(orders))
    ok = 1.6 <= mean <= 2.6 and secs <= 60
    verdict(2, ok, f"orders {fmt(orders)}, mean {mean:.3f} in [1.6, 2.6], "
                   f"max ratio {max(r.max_gamma for r in rows):.2f}, {secs:.1f} s <= 60 s")


def test_criterion_3_r_ratio_order(r_ladder):
    orders = convergence_order([(tau, err) for tau, err, _ in r_ladder])
    ok = all(1.7 <= o <= 2.3 for o in orders)
    assert all(np.isclose(c0, 1 / tau) for tau, _, c0 in r_ladder)
    verdict(3, ok, f"errors {fmt([e for _, e, _ in r_ladder])}, orders {fmt(orders)} in [1.7, 2.3]")


def test_criterion_4_spectral_accuracy(space_rows):
    rows, secs = space_rows
    e = [r.error for r in rows]
    drops = [a / b if b > 0 else np.inf for a, b in zip(e, e[1:])]
    ok = all(d >= 1e2 or b <= 1e-11 for d, b in zip(drops, e[1:])) and secs <= 120
    verdict(4, ok, f"errors M=8,16,32 {fmt(e)}, drops {fmt(drops)} >= 1e2, {secs:.1f} s <= 120 s")


def test_criterion_5_energy_stability(stability_run):
    res, secs = stability_run
    e = np.array([r.E_modified_discrete for r in res.records])
    viol = int(np.sum(np.diff(e) > ENERGY_RTOL * np.abs(e[:-1])))
    n_bdf2 = res.summary["bdf2_steps"]
    gmax = float(step_ratios(res.times).max())
    ok = viol == 0 and n_bdf2 == 500 and gmax <= 4.8645 + 1e-12 and secs <= 120
    verdict(5, ok, f"{n_bdf2} BDF2 steps, max ratio {gmax:.4f}, {viol} violations, "
                   f"{secs:.1f} s <= 120 s")


def test_criterion_6_mass_conservation(uniform_study, perturbed_study, r_ladder, space_rows,
                                       stability_run, adaptive_pair, polycrystal_run):
    worst = max(MASS_DRIFTS.values())
    name = max(MASS_DRIFTS, key=MASS_DRIFTS.get)
    verdict(6, worst <= MASS_TOL, f"worst mass drift {worst:.3g} ({name}) over "
                                  f"{len(MASS_DRIFTS)} run groups <= 1e-12")


def test_criterion_7_dense_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for M in (4, 8):
        rng = np.random.default_rng(7000 + M)
        for _ in range(20):
            grid = Grid(float(rng.uniform(4, 12)), M)
            p = ModelParams(epsilon=float(rng.uniform(0.05, 0.5)), S=float(rng.uniform(0, 1)),
                            c0=float(rng.uniform(20, 200)))
            oracle = DenseOracle(grid, p)
            phi0 = rng.uniform(-0.8, 0.8, grid.shape)
            r0 = sav_r(grid, phi0, p)
            tau0, tau1 = rng.uniform(0.005, 0.3, 2)
            phi1, r1 = first_order_step(grid, phi0, r0, tau0, p)
            ophi1, or1 = oracle.first_order(phi0, r0, tau0)
            new = bdf2_step(grid, StepState(phi0, phi1, r1, tau0), tau1, 1.0, p)
            ophi2, or2 = oracle.bdf2(phi0, phi1, r1, tau0, tau1, 1.0)
            worst = max(worst, np.max(np.abs(phi1 - ophi1)), abs(r1 - or1),
                        np.max(np.abs(new.phi_curr - ophi2)), abs(new.r_curr - or2))
    secs = time.perf_counter() - t0
    verdict(7, worst <= 1e-11 and secs <= 10,
            f"40 cases on 4x4 and 8x8, max deviation {worst:.2e} <= 1e-11, {secs:.1f} s <= 10 s")


def test_criterion_8_stability_root():
    root = ratio_root(1.0)
    roots = [ratio_root(s) for s in (0.6, 0.75, 0.9, 1.0)]
    ok = abs(root - 4.8645) <= 1e-3 and all(a > b for a, b in zip(roots, roots[1:]))
    verdict(8, ok, f"ratio_root(1) = {root:.6f} (4.8645 +- 1e-3), "
                   f"sigma 0.6..1 -> {fmt(roots)} decreasing")


@pytest.mark.slow
def test_criterion_9_adaptive_consistency(adaptive_pair):
    ad, un, secs = adaptive_pair
    ea, eu = ad.summary["E_original_final"], un.summary["E_original_final"]
    rel = abs(ea - eu) / abs(eu)
    frac = ad.summary["steps"] / un.summary["steps"]
    ok = rel <= 0.01 and frac <= 0.25 and secs <= 600
    verdict(9, ok, f"energy {ea:.6g} vs {eu:.6g} (rel {rel:.2e} <= 1e-2), steps "
                   f"{ad.summary['steps']}/{un.summary['steps']} = {frac:.3f} <= 0.25, "
                   f"{secs:.0f} s <= 600 s")


def test_criterion_10_polycrystal(polycrystal_run):
    res, phi0 = polycrystal_run
    e = np.array([r.E_modified_discrete for r in res.records])
    monotone = bool(np.all(np.diff(e) <= ENERGY_RTOL * np.abs(e[:-1])))
    f0 = float(np.mean(np.abs(phi0 - POLYCRYSTAL_BACKGROUND) > 0.05))
    f1 = float(np.mean(np.abs(res.phi - POLYCRYSTAL_BACKGROUND) > 0.05))
    ok = res.times[-1] == 100.0 and monotone and f1 > f0
    verdict(10, ok, f"reached t={res.times[-1]:g} in {res.summary['steps']} steps, energy "
                    f"monotone={monotone}, crystal fraction {f0:.3f} -> {f1:.3f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
