"""PFC free energies, the double-well nonlinearity and the SAV variable."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .spectral import Grid, quadratic_form

log = logging.getLogger(__name__)


class SavRadicandError(ValueError):
    """E1(phi) + C0 is not positive, so r = sqrt(E1 + C0) does not exist."""


@dataclass(frozen=True)
class C0Policy:
    """How the SAV shift C0 is chosen.

    ``kind="fixed"`` uses ``value``; ``kind="inv_tau"`` takes
    max(k/tau_ref, 2|E1(phi0)|) with k = ``value`` (default 1), so that
    C0 >= 1/tau and C0/2 <= E1(phi0) + C0 <= 2 C0 both hold at t=0.
    """

    kind: str = "inv_tau"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "inv_tau"):
            raise ValueError(f"unknown C0 policy {self.kind!r}")
        if self.kind == "fixed" and not (self.value is not None and self.value > 0):
            raise ValueError("a fixed C0 must be a positive number")
        if self.kind == "inv_tau" and self.value is not None and not self.value >= 1:
            raise ValueError("the inv_tau factor must be >= 1")

    @classmethod
    def fixed(cls, value: float) -> C0Policy:
        return cls("fixed", float(value))

    @classmethod
    def inverse_tau(cls, factor: float | None = None) -> C0Policy:
        return cls("inv_tau", factor)


@dataclass(frozen=True)
class ModelParams:
    """beta, epsilon, stabilization S (defaults to epsilon) and the C0 policy.

    ``c0`` holds the resolved shift once :func:`resolve_c0` has run.
    """

    epsilon: float
    beta: float = 1.0
    S: float | None = None
    c0_policy: C0Policy = field(default_factory=C0Policy)
    c0: float | None = None

    def __post_init__(self):
        if self.S is None:
            object.__setattr__(self, "S", self.epsilon)
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 < self.epsilon < self.beta**2:
            raise ValueError(f"need 0 < epsilon < beta^2, got epsilon={self.epsilon}")
        if self.S < 0:
            raise ValueError(f"S must be nonnegative, got {self.S}")
        if self.c0 is not None and not self.c0 > 0:
            raise ValueError(f"C0 must be positive, got {self.c0}")

    @property
    def shift(self) -> float:
        """S + epsilon, the quadratic coefficient of F."""
        return self.S + self.epsilon

    def with_c0(self, c0: float) -> ModelParams:
        return replace(self, c0=float(c0))

    def require_c0(self) -> float:
        if self.c0 is None:
            raise ValueError("C0 has not been resolved; call resolve_c0 first")
        return self.c0


def double_well_F(phi, S: float, epsilon: float):
    return 0.25 * phi**4 - 0.5 * (S + epsilon) * phi**2


def dF(phi, S: float, epsilon: float):
    return phi**3 - (S + epsilon) * phi


def e1(grid: Grid, phi: np.ndarray, p: ModelParams) -> float:
    """E1(phi) = integral of F(phi) by the rectangle rule."""
    grid.check(phi)
    return grid.h**2 * float(np.sum(double_well_F(phi, p.S, p.epsilon)))


def bilaplace_energy(grid: Grid, phi_hat: np.ndarray, beta: float) -> float:
    """||(Laplacian + beta) phi||^2 from a half-spectrum of phi."""
    return quadratic_form(grid, phi_hat, (beta - grid.rk2) ** 2)


def original_energy(grid: Grid, phi: np.ndarray, p: ModelParams) -> float:
    grid.check(phi)
    quad = 0.5 * bilaplace_energy(grid, grid.rfft(phi), p.beta)
    bulk = grid.h**2 * float(np.sum(0.25 * phi**4 - 0.5 * p.epsilon * phi**2))
    return quad + bulk


def sav_r(grid: Grid, phi: np.ndarray, p: ModelParams) -> float:
    c0 = p.require_c0()
    radicand = e1(grid, phi, p) + c0
    if not radicand > 0:
        raise SavRadicandError(
            f"E1 + C0 = {radicand:.6g} <= 0; C0 = {c0:.6g} is too small for this field"
        )
    return float(np.sqrt(radicand))


def modified_energy(grid: Grid, phi: np.ndarray, r: float, p: ModelParams) -> float:
    """1/2 ||(Laplacian + beta) phi||^2 + S/2 ||phi||^2 + r^2."""
    grid.check(phi)
    c = grid.rfft(phi)
    quad = 0.5 * bilaplace_energy(grid, c, p.beta)
    mass = 0.5 * p.S * quadratic_form(grid, c, np.ones_like(grid.rk2))
    return quad + mass + r * r


def c0_bounds_hold(e1_value: float, c0: float) -> bool:
    """C0/2 <= E1 + C0 <= 2 C0."""
    return 0.5 * c0 <= e1_value + c0 <= 2 * c0


def resolve_c0(policy: C0Policy, tau_ref: float, e1_0: float) -> float:
    """Resolve C0 from the policy, the reference step and E1 at t=0."""
    if not tau_ref > 0:
        raise ValueError(f"tau_ref must be positive, got {tau_ref}")
    if policy.kind == "fixed":
        c0 = policy.value
        if not c0_bounds_hold(e1_0, c0):
            log.warning("fixed C0=%g violates C0/2 <= E1+C0 <= 2C0 at t=0 (E1=%g)", c0, e1_0)
        return c0
    factor = 1.0 if policy.value is None else policy.value
    return max(factor / tau_ref, 2.0 * abs(e1_0))
