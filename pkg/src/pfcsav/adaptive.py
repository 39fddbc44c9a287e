"""Step-size selection driven by the energy variation, with a ratio cap.

The cap comes from the stability functions g and G: for adjacent ratios
up to the positive root of z -> G(z, z) the discrete modified energy of
the BDF2-SAV scheme cannot increase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import brentq

STABLE_RATIO = 4.8645


def stability_g(gamma: float, sigma: float) -> float:
    return (2 * sigma - 1) * gamma**1.5 / (2 * (1 + gamma))


def stability_G(s: float, z: float, sigma: float) -> float:
    w = 2 * sigma - 1
    return (2 + 4 * sigma * s - w * s**1.5) / (1 + s) - w * z**1.5 / (1 + z)


@lru_cache(maxsize=64)
def ratio_root(sigma: float) -> float:
    """Positive root of z -> G(z, z; sigma); ``inf`` at sigma = 1/2."""
    if not 0.5 <= sigma <= 1.0:
        raise ValueError(f"sigma must lie in [1/2, 1], got {sigma}")
    if sigma == 0.5:
        return math.inf
    f = lambda z: stability_G(z, z, sigma)
    lo, hi = 1.0, 1e6
    if f(lo) * f(hi) > 0:
        raise ValueError(f"no sign change of G(z, z) on [{lo}, {hi}] for sigma={sigma}")
    return brentq(f, lo, hi, xtol=1e-12, rtol=1e-14)


@dataclass(frozen=True)
class AdaptiveParams:
    """tau_min, tau_max, the sensitivity gamma_ada and the adjacent-ratio cap.

    ``ratio_cap=None`` disables the cap. ``rate_energy`` picks which energy's
    time derivative drives the rule: ``original`` or ``modified`` (phi, r form).
    """

    tau_min: float
    tau_max: float
    gamma_ada: float
    ratio_cap: float | None = STABLE_RATIO
    rate_energy: str = "original"

    def __post_init__(self):
        if not 0 < self.tau_min <= self.tau_max:
            raise ValueError(f"need 0 < tau_min <= tau_max, got {self.tau_min}, {self.tau_max}")
        if not self.gamma_ada > 0:
            raise ValueError(f"gamma_ada must be positive, got {self.gamma_ada}")
        if self.ratio_cap is not None and not self.ratio_cap >= 1:
            raise ValueError(f"ratio cap must be >= 1, got {self.ratio_cap}")
        if self.rate_energy not in ("original", "modified"):
            raise ValueError(f"rate_energy must be original or modified, got {self.rate_energy!r}")


def energy_rate(e_prev: float, e_curr: float, tau: float) -> float:
    """Backward difference (E^n - E^{n-1}) / tau_n."""
    if tau == 0:
        raise ZeroDivisionError("energy rate needs a nonzero step")
    return (e_curr - e_prev) / tau


def next_step_size(e_rate: float, tau_n: float, p: AdaptiveParams) -> float:
    """min(max(tau_min, tau_max / sqrt(1 + gamma_ada E'^2)), cap * tau_n)."""
    if not tau_n > 0:
        raise ValueError(f"tau_n must be positive, got {tau_n}")
    tau = max(p.tau_min, p.tau_max / math.sqrt(1.0 + p.gamma_ada * e_rate**2))
    if p.ratio_cap is not None:
        tau = min(tau, p.ratio_cap * tau_n)
    return tau
