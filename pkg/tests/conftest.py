import numpy as np
import pytest

from pfcsav.spectral import Grid

ACCEPTANCE_LINES: list[str] = []


def dft_matrix(M: int) -> np.ndarray:
    j = np.arange(M)
    return np.exp(-2j * np.pi * np.outer(j, j) / M)


def dense_operator(grid: Grid, symbol_full: np.ndarray) -> np.ndarray:
    """Real-space matrix of a Fourier multiplier, assembled from explicit DFT matrices.

    Fields are flattened row-major ([y, x]); the 2-D DFT is kron(W, W).
    """
    M = grid.M
    W = np.kron(dft_matrix(M), dft_matrix(M))
    Winv = W.conj().T / M**2
    return (Winv @ np.diag(symbol_full.ravel()) @ W).real


def wavenumbers(grid: Grid) -> np.ndarray:
    """Integer mode index k in {-M/2..M/2-1} times 2 pi / L, built by hand."""
    M = grid.M
    idx = np.array([k if k < M // 2 else k - M for k in range(M)])
    return 2 * np.pi * idx / grid.L


def full_k2(grid: Grid) -> np.ndarray:
    k = wavenumbers(grid)
    KX, KY = np.meshgrid(k, k)
    return KX**2 + KY**2


def nyquist_projection(grid: Grid) -> np.ndarray:
    M = grid.M
    keep = np.ones((M, M))
    keep[M // 2, :] = 0
    keep[:, M // 2] = 0
    return dense_operator(grid, keep)


# ---------------------------------------------------------------- dense oracle

class DenseOracle:
    """Assembles the coupled (M^2 + 1) x (M^2 + 1) system in (phi^{n+1}, r^{n+1})."""

    def __init__(self, grid, p):
        k2 = full_k2(grid)
        self.grid = grid
        self.p = p
        self.lap = dense_operator(grid, -k2)
        self.L = dense_operator(grid, (p.beta - k2) ** 2 + p.S)
        self.P = nyquist_projection(grid)
        self.w = grid.h**2

    def b(self, phi_star, phi_n):
        p = self.p
        e1 = self.w * np.sum(0.25 * phi_n**4 - 0.5 * (p.S + p.epsilon) * phi_n**2)
        raw = (phi_star**3 - (p.S + p.epsilon) * phi_star) / np.sqrt(e1 + p.c0)
        return self.P @ raw.ravel()

    def solve(self, a_tau, theta, rhs, b, phi_n, r_n):
        N = self.grid.M**2
        K = np.zeros((N + 1, N + 1))
        K[:N, :N] = a_tau * np.eye(N) - theta * self.lap @ self.L
        K[:N, N] = -self.lap @ b
        K[N, :N] = -0.5 * self.w * b
        K[N, N] = 1.0
        f = np.append(rhs, r_n - 0.5 * self.w * b @ phi_n)
        x = np.linalg.solve(K, f)
        return x[:N].reshape(self.grid.shape), x[N]

    def first_order(self, phi0, r0, tau):
        b = self.b(phi0, phi0)
        return self.solve(1 / tau, 1.0, phi0.ravel() / tau, b, phi0.ravel(), r0)

    def bdf2(self, phi_nm1, phi_n, r_n, tau_n, tau, sigma):
        gam = tau / tau_n
        a = (1 + 2 * sigma * gam) / (1 + gam)
        bb = 1 + (2 * sigma - 1) * gam
        c = (2 * sigma - 1) * gam**2 / (1 + gam)
        star = phi_n + sigma * gam * (phi_n - phi_nm1)
        b = self.b(star, phi_n)
        rhs = (bb * phi_n.ravel() - c * phi_nm1.ravel()) / tau \
            + (1 - sigma) * self.lap @ self.L @ phi_n.ravel()
        return self.solve(a / tau, sigma, rhs, b, phi_n.ravel(), r_n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
