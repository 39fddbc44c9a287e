"""Periodic 2-D grid and Fourier-diagonal operators.

A field is a real ``numpy`` array of shape ``(M, M)`` indexed ``f[j, i]``
with ``j`` the y index and ``i`` the x index, i.e. row-major, y-major.
Sample points are ``x_i = i * L / M``; the endpoint ``L`` is excluded.

Transform convention: the forward transform is unscaled and the inverse
divides by ``M**2`` (the ``numpy.fft`` default).  With the rectangle-rule
inner product ``(f, g) = h**2 * sum(f * g)`` the Parseval identity reads

    ||f||**2 = (h / M)**2 * sum(|f_hat|**2),   h = L / M.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft

SNAPSHOT_FORMAT = "pfc2d-v1"


class GridMismatchError(ValueError):
    pass


class NonZeroMeanError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Square periodic grid on (0, L)^2 with M samples per direction."""

    L: float
    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 4 or self.M % 2:
            raise ValueError(f"M must be an even integer >= 4, got {self.M}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def shape(self) -> tuple[int, int]:
        return (self.M, self.M)

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.M) * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays ``(X, Y)`` of shape (M, M) with ``X[j, i] = x_i``."""
        return tuple(np.meshgrid(self.x, self.x, indexing="xy"))

    @cached_property
    def kappa(self) -> np.ndarray:
        """Physical wavenumbers in FFT order: index M/2 carries -M/2."""
        return 2 * np.pi / self.L * np.fft.fftfreq(self.M, d=1.0 / self.M)

    @cached_property
    def k2(self) -> np.ndarray:
        """|kappa|^2 on the full (M, M) spectral layout."""
        return self.kappa[:, None] ** 2 + self.kappa[None, :] ** 2

    @cached_property
    def rk2(self) -> np.ndarray:
        """|kappa|^2 on the half-spectrum layout used by ``rfft``."""
        kx = 2 * np.pi / self.L * np.arange(self.M // 2 + 1)
        return self.kappa[:, None] ** 2 + kx[None, :] ** 2

    # half-spectrum transforms used on the hot path of the steppers
    def rfft(self, f: np.ndarray) -> np.ndarray:
        return scipy.fft.rfft2(f)

    def irfft(self, c: np.ndarray) -> np.ndarray:
        return scipy.fft.irfft2(c, s=self.shape)

    def zero_nyquist(self, c: np.ndarray) -> np.ndarray:
        """Zero the -M/2 modes of a half-spectrum array in place."""
        c[self.M // 2, :] = 0.0
        c[:, -1] = 0.0
        return c

    def check(self, *fields: np.ndarray) -> None:
        for f in fields:
            if np.shape(f) != self.shape:
                raise GridMismatchError(
                    f"field of shape {np.shape(f)} does not live on a {self.M}x{self.M} grid"
                )


def _finite(f: np.ndarray) -> None:
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")


def forward_transform(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Unscaled 2-D DFT; ``c[l, k]`` is the coefficient of exp(i(kx + ly)2pi/L)."""
    grid.check(f)
    _finite(f)
    return np.fft.fft2(f)


def inverse_transform(grid: Grid, c: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    grid.check(c)
    f = np.fft.ifft2(c)
    scale = max(1.0, float(np.max(np.abs(f.real))))
    residue = float(np.max(np.abs(f.imag)))
    if residue > tol * scale:
        raise ValueError(
            f"coefficients are not conjugate symmetric: imaginary residue {residue:.3e}"
        )
    return f.real.copy()


def _apply_symbol(grid: Grid, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    grid.check(f)
    return grid.irfft(symbol * grid.rfft(f))


def apply_laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    return _apply_symbol(grid, f, -grid.rk2)


def apply_shifted_biharmonic(grid: Grid, f: np.ndarray, beta: float) -> np.ndarray:
    """(Laplacian + beta)^2 f, spectral symbol (beta - |kappa|^2)^2."""
    return _apply_symbol(grid, f, (beta - grid.rk2) ** 2)


def _check_zero_mean(f: np.ndarray, scale: float = 0.0, tol: float = 1e-10) -> None:
    mean = float(np.mean(f))
    bound = tol * max(float(np.max(np.abs(f))), scale)
    if abs(mean) > bound:
        raise NonZeroMeanError(
            f"inverse Laplacian needs a zero-mean field; residual mass mean={mean:.3e}"
        )


def _inverse_k2(grid: Grid) -> np.ndarray:
    inv = np.zeros_like(grid.rk2)
    nz = grid.rk2 > 0
    inv[nz] = 1.0 / grid.rk2[nz]
    return inv


def apply_inverse_laplacian(grid: Grid, f: np.ndarray, scale: float = 0.0) -> np.ndarray:
    """Zero-mean solution psi of -Laplacian(psi) = f.

    ``scale`` widens the zero-mean tolerance for fields that are small
    differences of O(scale) data.
    """
    grid.check(f)
    _check_zero_mean(f, scale)
    return _apply_symbol(grid, f, _inverse_k2(grid))


def quadratic_form(grid: Grid, c: np.ndarray, symbol: np.ndarray) -> float:
    """h^2 * sum(f * S f) for a half-spectrum ``c`` of f and a real symbol S.

    Interior half-spectrum columns stand for two conjugate modes each.
    """
    w = np.full(grid.rk2.shape[1], 2.0)
    w[0] = w[-1] = 1.0
    return (grid.h / grid.M) ** 2 * float(np.sum(w * symbol * (c.real**2 + c.imag**2)))


def l2_inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    grid.check(f, g)
    return grid.h**2 * float(np.sum(f * g))


def l2_norm(grid: Grid, f: np.ndarray) -> float:
    return np.sqrt(l2_inner(grid, f, f))


def hminus1_norm(grid: Grid, f: np.ndarray, scale: float = 0.0) -> float:
    """||grad^{-1} f||, evaluated directly from the Fourier coefficients."""
    grid.check(f)
    _check_zero_mean(f, scale)
    fh = np.fft.fft2(f)
    inv = np.zeros_like(grid.k2)
    nz = grid.k2 > 0
    inv[nz] = 1.0 / grid.k2[nz]
    return float(np.sqrt((grid.h / grid.M) ** 2 * np.sum(np.abs(fh) ** 2 * inv)))


def _pad(c: np.ndarray, n: int) -> np.ndarray:
    m = c.shape[0]
    out = np.zeros((n, n), dtype=complex)
    s = np.fft.fftshift(c)
    s[0, :] = 0.0  # Nyquist row/column sit first after the shift
    s[:, 0] = 0.0
    lo = n // 2 - m // 2
    out[lo:lo + m, lo:lo + m] = s
    return np.fft.ifftshift(out)


def _truncate(c: np.ndarray, m: int) -> np.ndarray:
    n = c.shape[0]
    lo = n // 2 - m // 2
    s = np.fft.fftshift(c)[lo:lo + m, lo:lo + m].copy()
    s[0, :] = 0.0
    s[:, 0] = 0.0
    return np.fft.ifftshift(s)


def triple_product(grid: Grid, f: np.ndarray, g: np.ndarray, h: np.ndarray,
                   dealias: bool = False) -> np.ndarray:
    """Pointwise f*g*h, optionally free of aliasing.

    With ``dealias`` the factors are zero-padded to a 2M grid, which is the
    padding a cubic product needs (3/2 only suffices for quadratic ones),
    multiplied there and truncated back with the Nyquist modes removed.
    """
    grid.check(f, g, h)
    if not dealias:
        return f * g * h
    n = 2 * grid.M
    factor = (n / grid.M) ** 2
    up = [np.fft.ifft2(_pad(np.fft.fft2(a), n)).real * factor for a in (f, g, h)]
    prod = np.fft.fft2(up[0] * up[1] * up[2]) / factor
    return np.fft.ifft2(_truncate(prod, grid.M)).real


def write_snapshot(stem: str | Path, grid: Grid, f: np.ndarray, t: float) -> tuple[Path, Path]:
    """Write ``<stem>.meta`` (text) and ``<stem>.bin`` (M*M little-endian f64)."""
    grid.check(f)
    stem = Path(stem)
    meta = stem.with_suffix(".meta")
    data = stem.with_suffix(".bin")
    meta.write_text(
        f"format={SNAPSHOT_FORMAT}\nM={grid.M}\nL={float(grid.L)!r}\nt={float(t)!r}\n"
    )
    np.ascontiguousarray(f, dtype="<f8").tofile(data)
    return meta, data


def read_snapshot(stem: str | Path) -> tuple[Grid, np.ndarray, float]:
    stem = Path(stem)
    meta = {}
    for line in stem.with_suffix(".meta").read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    if meta.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"unsupported snapshot format {meta.get('format')!r}")
    grid = Grid(L=float(meta["L"]), M=int(meta["M"]))
    f = np.fromfile(stem.with_suffix(".bin"), dtype="<f8")
    if f.size != grid.M**2:
        raise ValueError(f"expected {grid.M**2} samples, found {f.size}")
    return grid, f.reshape(grid.shape).astype(float), float(meta["t"])
