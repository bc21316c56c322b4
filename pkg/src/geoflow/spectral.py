"""Spectral calculus on periodic grids.

Sign and layout conventions:

* stream function and vorticity: ``omega = -Laplacian(psi)``
* velocity: ``u = (d psi/dy, -d psi/dx)``, hence ``omega = dv/dx - du/dy``
* physical arrays are indexed ``[ix, iy]`` with ``x = lx * ix / nx``
* spectral arrays use the NumPy ``rfft2`` layout (unnormalised), shape
  ``(nx, ny // 2 + 1)``
* integrals use the rectangle rule on the uniform grid
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2:
    """Uniform grid on the flat torus ``[0, lx) x [0, ly)``."""

    nx: int
    ny: int
    lx: float = TWO_PI
    ly: float = TWO_PI

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or not _is_pow2(int(n)) or n < 16:
                raise ValueError(f"{name} must be a power of two >= 16, got {n!r}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("domain lengths must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny // 2 + 1)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx) * self.dx
        y = np.arange(self.ny) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    @cached_property
    def index_x(self) -> np.ndarray:
        """Integer wavenumber index along x, column vector."""
        return np.fft.fftfreq(self.nx, 1.0 / self.nx)[:, None]

    @cached_property
    def index_y(self) -> np.ndarray:
        return np.fft.rfftfreq(self.ny, 1.0 / self.ny)[None, :]

    @cached_property
    def kx(self) -> np.ndarray:
        return self.index_x * (TWO_PI / self.lx)

    @cached_property
    def ky(self) -> np.ndarray:
        return self.index_y * (TWO_PI / self.ly)

    @cached_property
    def k2(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def inv_k2(self) -> np.ndarray:
        k2 = self.k2.copy()
        k2[0, 0] = 1.0
        out = 1.0 / k2
        out[0, 0] = 0.0
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True for modes kept by the 2/3 rule (``|k_i| <= n_i / 3``)."""
        return (np.abs(self.index_x) <= self.nx / 3) & (np.abs(self.index_y) <= self.ny / 3)

    @property
    def kmax_dealiased(self) -> float:
        """Largest retained wavenumber component after dealiasing."""
        return max((self.nx // 3) * TWO_PI / self.lx, (self.ny // 3) * TWO_PI / self.ly)

    def to_spectral(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(a)

    def to_physical(self, a_hat: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(a_hat, s=self.shape)

    def integrate(self, a: np.ndarray) -> float:
        return float(np.sum(a) * self.cell_area)


@dataclass(frozen=True)
class VorticityField2D:
    """Mean-zero real vorticity on the 2-torus, stored spectrally."""

    grid: Grid2
    omega_hat: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.omega_hat, dtype=complex)
        if w.shape != self.grid.spectral_shape:
            raise ValueError(f"omega_hat shape {w.shape} != {self.grid.spectral_shape}")
        scale = max(1.0, float(np.abs(w).max(initial=0.0)))
        if abs(w[0, 0]) > 1e-10 * scale * w.size:
            raise ValueError("vorticity must have zero mean (k=0 coefficient)")
        w = w.copy()
        w[0, 0] = 0.0
        w.flags.writeable = False
        object.__setattr__(self, "omega_hat", w)

    @classmethod
    def from_physical(cls, grid: Grid2, omega: np.ndarray, remove_mean: bool = False):
        omega = np.asarray(omega, dtype=float)
        if omega.shape != grid.shape:
            raise ValueError(f"omega shape {omega.shape} != {grid.shape}")
        if remove_mean:
            omega = omega - omega.mean()
        return cls(grid, grid.to_spectral(omega))

    @classmethod
    def from_streamfunction(cls, grid: Grid2, psi: np.ndarray):
        psi_hat = grid.to_spectral(np.asarray(psi, dtype=float))
        w = grid.k2 * psi_hat
        w[0, 0] = 0.0
        return cls(grid, w)

    @classmethod
    def zeros(cls, grid: Grid2):
        return cls(grid, np.zeros(grid.spectral_shape, dtype=complex))

    def physical(self) -> np.ndarray:
        return self.grid.to_physical(self.omega_hat)

    def streamfunction_hat(self) -> np.ndarray:
        return self.omega_hat * self.grid.inv_k2

    def streamfunction(self) -> np.ndarray:
        return self.grid.to_physical(self.streamfunction_hat())

    def with_hat(self, omega_hat: np.ndarray) -> "VorticityField2D":
        return VorticityField2D(self.grid, omega_hat)


def velocity_from_vorticity(w: VorticityField2D) -> tuple[np.ndarray, np.ndarray]:
    """Biot-Savart law in spectral space: returns ``(u_hat, v_hat)``."""
    g = w.grid
    psi_hat = w.omega_hat * g.inv_k2
    return 1j * g.ky * psi_hat, -1j * g.kx * psi_hat


def velocity_physical(w: VorticityField2D) -> tuple[np.ndarray, np.ndarray]:
    u_hat, v_hat = velocity_from_vorticity(w)
    return w.grid.to_physical(u_hat), w.grid.to_physical(v_hat)


def curl_hat(grid: Grid2, u_hat: np.ndarray, v_hat: np.ndarray) -> np.ndarray:
    return 1j * grid.kx * v_hat - 1j * grid.ky * u_hat


def divergence_hat(grid: Grid2, u_hat: np.ndarray, v_hat: np.ndarray) -> np.ndarray:
    return 1j * grid.kx * u_hat + 1j * grid.ky * v_hat


def gradient_physical(grid: Grid2, a_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return grid.to_physical(1j * grid.kx * a_hat), grid.to_physical(1j * grid.ky * a_hat)


def energy2d(w: VorticityField2D) -> float:
    """Kinetic energy ``1/2 int |u|^2``."""
    u, v = velocity_physical(w)
    return 0.5 * w.grid.integrate(u * u + v * v)


def enstrophy(w: VorticityField2D) -> float:
    """``int omega^2`` (no factor 1/2)."""
    om = w.physical()
    return w.grid.integrate(om * om)


def casimir_moment(w: VorticityField2D, p: int) -> float:
    """``int omega^p`` for integer ``p`` in 1..8."""
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or not 1 <= p <= 8:
        raise ValueError(f"casimir order p must be an integer in 1..8, got {p!r}")
    om = w.physical()
    return w.grid.integrate(om**p)


def dealias(w: VorticityField2D) -> VorticityField2D:
    """2/3-rule truncation."""
    return w.with_hat(w.omega_hat * w.grid.dealias_mask)


# --------------------------------------------------------------------------
# three-dimensional periodic fields


@dataclass(frozen=True)
class VelocityField3D:
    """Real vector field on the cube torus ``[0, 2 pi)^3``; ``u`` has shape ``(3, n, n, n)``."""

    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 4 or u.shape[0] != 3 or not (u.shape[1] == u.shape[2] == u.shape[3]):
            raise ValueError(f"expected shape (3, n, n, n), got {u.shape}")
        n = u.shape[1]
        if not _is_pow2(n) or n < 8:
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.u.shape[1]

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.n) ** 3

    def spectral(self) -> np.ndarray:
        return np.fft.rfftn(self.u, axes=(1, 2, 3))

    @classmethod
    def from_spectral(cls, u_hat: np.ndarray, n: int) -> "VelocityField3D":
        return cls(np.fft.irfftn(u_hat, s=(n, n, n), axes=(1, 2, 3)))


_WAVE3_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def wavevectors3(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(k, k2)`` for the ``rfftn`` layout with Nyquist components zeroed.

    ``k`` has shape ``(3, n, n, n//2+1)``. Nyquist modes are dropped so that
    the derivative and projection operators are exact on real fields.
    """
    if n not in _WAVE3_CACHE:
        full = np.fft.fftfreq(n, 1.0 / n)
        half = np.fft.rfftfreq(n, 1.0 / n)
        full[n // 2] = 0.0
        half[-1] = 0.0
        k = np.stack(np.meshgrid(full, full, half, indexing="ij"))
        k2 = np.sum(k * k, axis=0)
        k.flags.writeable = False
        k2.flags.writeable = False
        _WAVE3_CACHE[n] = (k, k2)
    return _WAVE3_CACHE[n]


def nyquist_mask3(n: int) -> np.ndarray:
    full = np.ones(n, dtype=bool)
    full[n // 2] = False
    half = np.ones(n // 2 + 1, dtype=bool)
    half[-1] = False
    return full[:, None, None] & full[None, :, None] & half[None, None, :]


def project_divfree(u: VelocityField3D) -> VelocityField3D:
    """Leray projection ``u_hat - k (k . u_hat) / |k|^2``; Nyquist modes are removed."""
    n = u.n
    k, k2 = wavevectors3(n)
    uh = u.spectral() * nyquist_mask3(n)
    safe = np.where(k2 == 0, 1.0, k2)
    kdotu = np.sum(k * uh, axis=0) / safe
    uh = uh - k * kdotu
    return VelocityField3D.from_spectral(uh, n)


def inner3(a: VelocityField3D, b: VelocityField3D) -> float:
    """L2 pairing ``int a . b`` by the rectangle rule."""
    return float(np.sum(a.u * b.u) * a.cell_volume)
