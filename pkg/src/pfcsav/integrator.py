"""Linear SAV time steppers: first-order starter and variable-step BDF2.

Both steppers reduce to two constant-coefficient sixth-order solves, which
are diagonal in Fourier space, plus one explicit scalar update for r.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, SavRadicandError, e1
from .spectral import Grid, triple_product

log = logging.getLogger(__name__)


class StepError(RuntimeError):
    pass


@dataclass(frozen=True)
class BdfCoefficients:
    """F2 phi = (a phi^{n+1} - b phi^n + c phi^{n-1}) / tau_{n+1}."""

    a: float
    b: float
    c: float
    sigma: float
    gamma: float


def bdf2_coefficients(sigma: float, gamma: float) -> BdfCoefficients:
    if not 0.5 <= sigma <= 1.0:
        raise ValueError(f"sigma must lie in [1/2, 1], got {sigma}")
    if not gamma > 0:
        raise ValueError(f"step ratio must be positive, got {gamma}")
    w = 2 * sigma - 1
    return BdfCoefficients(
        a=(1 + 2 * sigma * gamma) / (1 + gamma),
        b=1 + w * gamma,
        c=w * gamma**2 / (1 + gamma),
        sigma=sigma,
        gamma=gamma,
    )


def extrapolant(phi_n: np.ndarray, phi_nm1: np.ndarray, sigma: float, gamma: float) -> np.ndarray:
    """phi^n + sigma*gamma*(phi^n - phi^{n-1})."""
    if np.shape(phi_n) != np.shape(phi_nm1):
        raise ValueError("extrapolant needs fields on the same grid")
    return phi_n + sigma * gamma * (phi_n - phi_nm1)


@dataclass(frozen=True)
class StepState:
    """Everything the two-step recursion needs to advance.

    ``r_ratio`` is r^n / sqrt(E1(phi^{n-1}) + C0) for the step that produced
    this state (1 at t=0).
    """

    phi_prev: np.ndarray
    phi_curr: np.ndarray
    r_curr: float
    tau_prev: float
    t_curr: float = 0.0
    step_index: int = 0
    r_ratio: float = 1.0


class SavStepper:
    """Scratch-holding stepper for one grid and parameter set.

    Not safe to share between threads; make one per run.
    """

    def __init__(self, grid: Grid, params: ModelParams, sigma: float = 1.0,
                 dealias: bool = False):
        if not 0.5 <= sigma <= 1.0:
            raise ValueError(f"sigma must lie in [1/2, 1], got {sigma}")
        self.grid = grid
        self.params = params
        self.c0 = params.require_c0()
        self.sigma = sigma
        self.dealias = dealias
        k2 = grid.rk2
        self._k2 = k2
        self._lsym = (params.beta - k2) ** 2 + params.S
        self._k2l = k2 * self._lsym  # symbol of -Laplacian o L
        w = np.full(k2.shape[1], 2.0)
        w[0] = w[-1] = 1.0
        self._w = w * (grid.h / grid.M) ** 2
        self.last_denominator = 1.0

    def _inner(self, fh: np.ndarray, gh: np.ndarray) -> float:
        """Rectangle-rule inner product from two half-spectra."""
        return float(np.sum(self._w * (fh.real * gh.real + fh.imag * gh.imag)))

    def _nonlinear(self, phi_star: np.ndarray, phi_n: np.ndarray) -> tuple[np.ndarray, float]:
        """Half-spectrum of F'(phi*) / sqrt(E1(phi^n) + C0), Nyquist removed."""
        p = self.params
        radicand = e1(self.grid, phi_n, p) + self.c0
        if not radicand > 0:
            raise SavRadicandError(f"E1 + C0 = {radicand:.6g} <= 0 (C0 = {self.c0:.6g})")
        cube = triple_product(self.grid, phi_star, phi_star, phi_star, self.dealias)
        bh = self.grid.rfft(cube - p.shift * phi_star) / np.sqrt(radicand)
        return self.grid.zero_nyquist(bh), float(np.sqrt(radicand))

    def _solve(self, a_over_tau: float, theta: float, rhs: np.ndarray, bh: np.ndarray,
               phi_n_hat: np.ndarray, r_n: float):
        """Solve (a/tau + theta k^2 L) phi = rhs + r Lap b coupled with the r update."""
        A = a_over_tau + theta * self._k2l
        p1 = rhs / A
        p2 = -self._k2 * bh / A
        denom = 1.0 - 0.5 * self._inner(bh, p2)
        self.last_denominator = denom
        if not denom > 0:
            raise StepError(f"scalar-solve denominator {denom:.3e} <= 0")
        r_next = (r_n + 0.5 * self._inner(bh, p1 - phi_n_hat)) / denom
        phi_hat = p1 + r_next * p2
        return phi_hat, r_next

    def _finish(self, phi_hat: np.ndarray, r_next: float) -> np.ndarray:
        phi = self.grid.irfft(phi_hat)
        if not np.all(np.isfinite(phi)) or not np.isfinite(r_next):
            raise StepError("step produced non-finite values")
        if r_next <= 0:
            log.warning("auxiliary variable became nonpositive: r=%g", r_next)
        return phi

    def first_order(self, phi0: np.ndarray, r0: float, tau1: float) -> tuple[np.ndarray, float, float]:
        """One step of the first-order SAV scheme; returns (phi1, r1, r_ratio)."""
        if not tau1 > 0:
            raise ValueError(f"step size must be positive, got {tau1}")
        self.grid.check(phi0)
        ph = self.grid.rfft(phi0)
        bh, sq = self._nonlinear(phi0, phi0)
        phi_hat, r1 = self._solve(1.0 / tau1, 1.0, ph / tau1, bh, ph, r0)
        return self._finish(phi_hat, r1), r1, r1 / sq

    def start(self, phi0: np.ndarray, r0: float, tau1: float) -> StepState:
        phi1, r1, ratio = self.first_order(phi0, r0, tau1)
        return StepState(phi_prev=phi0, phi_curr=phi1, r_curr=r1, tau_prev=tau1,
                         t_curr=tau1, step_index=1, r_ratio=ratio)

    def bdf2(self, state: StepState, tau_next: float) -> StepState:
        if not tau_next > 0:
            raise ValueError(f"step size must be positive, got {tau_next}")
        gamma = tau_next / state.tau_prev
        co = bdf2_coefficients(self.sigma, gamma)
        s = self.sigma
        phi_n, phi_nm1 = state.phi_curr, state.phi_prev
        self.grid.check(phi_n, phi_nm1)
        nh = self.grid.rfft(phi_n)
        mh = self.grid.rfft(phi_nm1)
        phi_star = extrapolant(phi_n, phi_nm1, s, gamma)
        bh, sq = self._nonlinear(phi_star, phi_n)
        rhs = (co.b * nh - co.c * mh) / tau_next - (1 - s) * self._k2l * nh
        phi_hat, r_next = self._solve(co.a / tau_next, s, rhs, bh, nh, state.r_curr)
        return StepState(
            phi_prev=phi_n,
            phi_curr=self._finish(phi_hat, r_next),
            r_curr=r_next,
            tau_prev=tau_next,
            t_curr=state.t_curr + tau_next,
            step_index=state.step_index + 1,
            r_ratio=r_next / sq,
        )

    def chemical_potential(self, phi_prev: np.ndarray, phi_curr: np.ndarray,
                           phi_next: np.ndarray, r_next: float, gamma: float) -> np.ndarray:
        """mu^{n+sigma} = L phi^{n+sigma} + r^{n+1} b^n."""
        s = self.sigma
        phi_star = extrapolant(phi_curr, phi_prev, s, gamma)
        bh, _ = self._nonlinear(phi_star, phi_curr)
        mix = self.grid.rfft(s * phi_next + (1 - s) * phi_curr)
        return self.grid.irfft(self._lsym * mix + r_next * bh)


def first_order_step(grid: Grid, phi0: np.ndarray, r0: float, tau1: float,
                     p: ModelParams, dealias: bool = False) -> tuple[np.ndarray, float]:
    phi1, r1, _ = SavStepper(grid, p, 1.0, dealias).first_order(phi0, r0, tau1)
    return phi1, r1


def bdf2_step(grid: Grid, state: StepState, tau_next: float, sigma: float,
              p: ModelParams, dealias: bool = False) -> StepState:
    return SavStepper(grid, p, sigma, dealias).bdf2(state, tau_next)


def chemical_potential(grid: Grid, state: StepState, new: StepState, sigma: float,
                       p: ModelParams) -> np.ndarray:
    """mu^{n+sigma} for the step that took ``state`` to ``new``."""
    gamma = new.tau_prev / state.tau_prev
    return SavStepper(grid, p, sigma).chemical_potential(
        state.phi_prev, state.phi_curr, new.phi_curr, new.r_curr, gamma
    )

