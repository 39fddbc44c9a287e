"""Initial conditions and temporal meshes for the PFC experiments.

Randomness comes from SplitMix64 so that seeds reproduce bit for bit on
any platform and in any language: output i (i = 1, 2, ...) of seed s is
``mix(s + i * 0x9E3779B97F4A7C15 mod 2**64)`` with the standard SplitMix64
finalizer, and a uniform double in [0, 1) is ``(z >> 11) * 2**-53``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adaptive import AdaptiveParams
from .spectral import Grid

log = logging.getLogger(__name__)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

POLYCRYSTAL_BACKGROUND = 0.285


class SplitMix64:
    def __init__(self, seed: int):
        self.state = np.uint64(int(seed) % 2**64)
        self.count = 0

    def next_u64(self, n: int) -> np.ndarray:
        idx = np.arange(self.count + 1, self.count + n + 1, dtype=np.uint64)
        self.count += n
        with np.errstate(over="ignore"):
            z = self.state + idx * _GOLDEN
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """n doubles in [0, 1)."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def symmetric(self, n: int) -> np.ndarray:
        """n doubles in [-1, 1)."""
        return 2.0 * self.uniform(n) - 1.0


# ---------------------------------------------------------------- initial data

def ic_smooth(grid: Grid) -> np.ndarray:
    """sin(pi x / 16) cos(pi y / 16)."""
    if not math.isclose(grid.L / 32 - round(grid.L / 32), 0.0, abs_tol=1e-12) or grid.L < 32:
        log.warning("smooth initial data is only periodic for L a multiple of 32 (L=%g)", grid.L)
    X, Y = grid.coords
    return np.sin(np.pi * X / 16) * np.cos(np.pi * Y / 16)


def ic_random(grid: Grid, mean: float, amplitude: float, seed: int) -> np.ndarray:
    """mean + amplitude * U(-1, 1), drawn row by row from SplitMix64(seed)."""
    if amplitude < 0:
        raise ValueError(f"amplitude must be nonnegative, got {amplitude}")
    eta = SplitMix64(seed).symmetric(grid.M * grid.M).reshape(grid.shape)
    return mean + amplitude * eta


@dataclass(frozen=True)
class Crystallite:
    center: tuple[float, float]
    half_width: float
    theta: float

    def overlaps(self, other: Crystallite) -> bool:
        reach = self.half_width + other.half_width
        return (abs(self.center[0] - other.center[0]) < reach
                and abs(self.center[1] - other.center[1]) < reach)


def default_crystallites(L: float, half_width: float = 20.0) -> list[Crystallite]:
    """Three 40x40 seeds on the horizontal midline at x = L/4, L/2, 3L/4."""
    return [
        Crystallite((L / 4, L / 2), half_width, -np.pi / 4),
        Crystallite((L / 2, L / 2), half_width, 0.0),
        Crystallite((3 * L / 4, L / 2), half_width, np.pi / 4),
    ]


def crystal_profile(xl: np.ndarray, yl: np.ndarray) -> np.ndarray:
    q = 0.66
    return POLYCRYSTAL_BACKGROUND + 0.446 * (
        np.cos(q / np.sqrt(3) * yl) * np.cos(q * xl) - 0.5 * np.cos(2 * q / np.sqrt(3) * yl)
    )


def ic_polycrystal(grid: Grid, blocks: Sequence[Crystallite] | None = None) -> np.ndarray:
    """Liquid at 0.285 with rotated triangular-lattice seeds in square blocks.

    Inside a block the lattice is evaluated in block-centred coordinates
    rotated by the block's angle.
    """
    if blocks is None:
        blocks = default_crystallites(grid.L)
    for i, a in enumerate(blocks):
        for b in blocks[i + 1:]:
            if a.overlaps(b):
                raise ValueError(f"crystallite blocks overlap: {a} and {b}")
    X, Y = grid.coords
    phi = np.full(grid.shape, POLYCRYSTAL_BACKGROUND)
    for blk in blocks:
        dx = X - blk.center[0]
        dy = Y - blk.center[1]
        inside = (np.abs(dx) <= blk.half_width) & (np.abs(dy) <= blk.half_width)
        c, s = np.cos(blk.theta), np.sin(blk.theta)
        xl = dx * c - dy * s
        yl = dx * s + dy * c
        phi[inside] = crystal_profile(xl[inside], yl[inside])
    return phi


# ---------------------------------------------------------------- time meshes

def mesh_uniform(tau: float, T: float) -> np.ndarray:
    """0, tau, 2 tau, ..., T with the last step shortened to land on T."""
    if not 0 < tau <= T:
        raise ValueError(f"need 0 < tau <= T, got tau={tau}, T={T}")
    n = int(math.floor(T / tau + 1e-9))
    times = np.arange(n + 1) * tau
    if T - times[-1] > 1e-9 * tau:
        times = np.append(times, T)
    else:
        times[-1] = T
    return times


def mesh_random_perturbed(tau: float, T: float, fraction: float, seed: int) -> np.ndarray:
    """Uniform mesh of N = round(T/tau) steps with interior nodes moved by
    fraction * (T/N) * U(-1, 1); the endpoints stay put."""
    if not 0 <= fraction < 0.5:
        raise ValueError(f"perturbation fraction must be in [0, 1/2), got {fraction}")
    n = max(1, int(round(T / tau)))
    h = T / n
    times = np.arange(n + 1) * h
    times[-1] = T
    if n > 1 and fraction > 0:
        times[1:-1] += fraction * h * SplitMix64(seed).symmetric(n - 1)
    return times


def starter_step(tau_max_plan: float, exponent: float = 4.0 / 3.0) -> float:
    """min(tau, tau^exponent): the first-order starter step size."""
    if not tau_max_plan > 0:
        raise ValueError(f"tau must be positive, got {tau_max_plan}")
    return min(tau_max_plan, tau_max_plan**exponent)


def limit_ratios(steps: Sequence[float], cap: float) -> list[float]:
    """Split steps so every adjacent ratio is at most ``cap``.

    A step exceeding cap * previous is replaced by a geometric ramp of
    pieces; the ramp's tail is halved rather than left as a sliver.
    """
    out = [float(steps[0])]
    for d in steps[1:]:
        d = float(d)
        while d > cap * out[-1]:
            piece = cap * out[-1]
            if d < 2 * piece:
                out += [d / 2, d / 2]
                d = 0.0
                break
            out.append(piece)
            d -= piece
        if d > 0:
            out.append(d)
    return out


def apply_starter(times: np.ndarray, exponent: float | None = 4.0 / 3.0,
                  cap: float | None = None) -> np.ndarray:
    """Shrink the first step to the starter size and optionally cap ratios."""
    times = np.asarray(times, dtype=float)
    T = times[-1]
    steps = list(np.diff(times))
    if exponent is not None:
        # shrinking the first step can lower the mesh maximum, so repeat
        for _ in range(100):
            s = starter_step(max(steps), exponent)
            if steps[0] <= s * (1 + 1e-12):
                break
            rem = steps[0] - s
            if rem < s and len(steps) > 1:
                steps = [s, rem + steps[1], *steps[2:]]
            else:
                steps = [s, rem, *steps[1:]]
    if cap is not None:
        steps = limit_ratios(steps, cap)
    out = np.concatenate([[0.0], np.cumsum(steps)])
    out[-1] = T
    return out


def step_ratios(times: np.ndarray) -> np.ndarray:
    steps = np.diff(times)
    return steps[1:] / steps[:-1]


@dataclass(frozen=True)
class MeshPlan:
    """A temporal mesh recipe.

    kind is one of ``uniform``, ``perturbed``, ``adaptive``, ``explicit``.
    ``starter_exponent=None`` keeps the first step as generated; ``ratio_cap``
    applies to the prescribed kinds (adaptive plans carry their own cap).
    """

    kind: str
    T: float
    tau: float | None = None
    fraction: float = 0.4
    seed: int = 0
    adaptive: AdaptiveParams | None = None
    explicit: tuple[float, ...] | None = None
    starter_exponent: float | None = 4.0 / 3.0
    ratio_cap: float | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "perturbed", "adaptive", "explicit"):
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got {self.T}")
        if self.kind in ("uniform", "perturbed") and not (self.tau and self.tau > 0):
            raise ValueError(f"{self.kind} mesh needs a positive tau")
        if self.kind == "adaptive" and self.adaptive is None:
            raise ValueError("adaptive mesh needs AdaptiveParams")
        if self.kind == "explicit":
            t = np.asarray(self.explicit or (), dtype=float)
            if t.size < 2 or t[0] != 0 or not math.isclose(t[-1], self.T) or np.any(np.diff(t) <= 0):
                raise ValueError("explicit times must increase strictly from 0 to T")

    @property
    def tau_max(self) -> float:
        """Largest step the plan can take; the reference step for C0 = 1/tau."""
        if self.kind == "adaptive":
            return self.adaptive.tau_max
        return float(np.max(np.diff(self.times())))

    def times(self) -> np.ndarray:
        if self.kind == "adaptive":
            raise ValueError("adaptive meshes are generated during the run")
        if self.kind == "uniform":
            base = mesh_uniform(self.tau, self.T)
        elif self.kind == "perturbed":
            base = mesh_random_perturbed(self.tau, self.T, self.fraction, self.seed)
        else:
            base = np.asarray(self.explicit, dtype=float)
        return apply_starter(base, self.starter_exponent, self.ratio_cap)
