"""Helicity, inverse curl and Beltrami diagnostics on the 3-torus ``[0, 2 pi)^3``.

On this torus the smallest nonzero curl eigenvalue in absolute value is 1, so
``|H(u)| <= ||u||^2 = 2 E(u)`` for every mean-free divergence-free field.
"""

from __future__ import annotations

import numpy as np

from .spectral import VelocityField3D, inner3, nyquist_mask3, project_divfree, wavevectors3

MIN_ABC_GRID = 32


class MeanFlowError(ValueError):
    """A uniform component lies in the kernel of curl and has no inverse."""


def abc_field(A: float, B: float, C: float, n: int = 32) -> VelocityField3D:
    """``u = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)``; satisfies ``curl u = u``."""
    if n < MIN_ABC_GRID:
        raise ValueError(f"ABC fields need a grid of at least {MIN_ABC_GRID}^3")
    x = 2 * np.pi * np.arange(n) / n
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    return VelocityField3D(
        np.stack([A * np.sin(Z) + C * np.cos(Y), B * np.sin(X) + A * np.cos(Z), C * np.sin(Y) + B * np.cos(X)])
    )


def _curl_hat(uh: np.ndarray, k: np.ndarray) -> np.ndarray:
    return 1j * np.stack(
        [k[1] * uh[2] - k[2] * uh[1], k[2] * uh[0] - k[0] * uh[2], k[0] * uh[1] - k[1] * uh[0]]
    )


def curl(u: VelocityField3D) -> VelocityField3D:
    k, _ = wavevectors3(u.n)
    return VelocityField3D.from_spectral(_curl_hat(u.spectral() * nyquist_mask3(u.n), k), u.n)


def divergence_norm(u: VelocityField3D) -> float:
    """Relative L2 norm of ``div u`` (spectral)."""
    k, _ = wavevectors3(u.n)
    uh = u.spectral() * nyquist_mask3(u.n)
    div = np.sum(k * uh, axis=0)
    scale = np.sqrt(np.sum(np.abs(uh) ** 2)) + 1e-300
    return float(np.sqrt(np.sum(np.abs(div) ** 2)) / scale)


def inv_curl(u: VelocityField3D, tol: float = 1e-10) -> VelocityField3D:
    """Divergence-free ``w`` with ``curl w = u``: ``w_hat = i k x u_hat / |k|^2``."""
    uh = u.spectral()
    total = np.sqrt(np.sum(np.abs(uh) ** 2)) + 1e-300
    if np.sqrt(np.sum(np.abs(uh[:, 0, 0, 0]) ** 2)) > tol * total:
        raise MeanFlowError("field has a mean component; curl is not invertible on it")
    if divergence_norm(u) > tol:
        raise ValueError("field is not divergence-free")
    k, k2 = wavevectors3(u.n)
    safe = np.where(k2 == 0, 1.0, k2)
    wh = _curl_hat(uh * nyquist_mask3(u.n), k) / safe
    wh[:, 0, 0, 0] = 0.0
    return VelocityField3D.from_spectral(wh, u.n)


def energy3d(u: VelocityField3D) -> float:
    return 0.5 * inner3(u, u)


def helicity(u: VelocityField3D) -> float:
    """``H(u) = int u . curl^{-1} u``."""
    return inner3(u, inv_curl(u))


def velocity_helicity(v: VelocityField3D) -> float:
    """``int (curl v) . v``, the helicity of the vorticity of ``v``."""
    return inner3(curl(v), v)


def beltrami_residual(u: VelocityField3D, lam: float) -> float:
    """``||curl u - lam u|| / ||u||`` (0 for the zero field)."""
    nu = np.sqrt(inner3(u, u))
    if nu == 0.0:
        return 0.0
    c = curl(u)
    d = VelocityField3D(c.u - lam * u.u)
    return float(np.sqrt(inner3(d, d)) / nu)


def mirror_x(u: VelocityField3D) -> VelocityField3D:
    """Pull-back under ``x -> -x``: ``(-u_x, u_y, u_z)`` evaluated at the reflected point."""
    idx = (-np.arange(u.n)) % u.n
    r = u.u[:, idx, :, :]
    return VelocityField3D(np.stack([-r[0], r[1], r[2]]))


def translate(u: VelocityField3D, shift) -> VelocityField3D:
    """``u(x - shift)`` by a spectral phase (any real shift)."""
    k, _ = wavevectors3(u.n)
    s = np.asarray(shift, dtype=float).reshape(3, 1, 1, 1)
    phase = np.exp(-1j * np.sum(k * s, axis=0))
    return VelocityField3D.from_spectral(u.spectral() * nyquist_mask3(u.n) * phase, u.n)


def random_divfree(n: int, kmax: int, seed: int, slope: float = 0.0) -> VelocityField3D:
    """Band-limited (``|k| <= kmax``) mean-free divergence-free field with random phases.

    Mode amplitudes scale like ``|k|^-slope``.
    """
    rng = np.random.default_rng(seed)
    k, k2 = wavevectors3(n)
    kk = np.sqrt(k2)
    shape = (3,) + k2.shape
    uh = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * ((kk > 0) & (kk <= kmax))
    uh *= np.where(kk > 0, kk, 1.0) ** (-slope)
    u = VelocityField3D.from_spectral(uh, n)
    return project_divfree(u)


def helicity_energy_ratio(u: VelocityField3D) -> float:
    """``|H| / (2 E)``; at most 1 on the unit torus."""
    return abs(helicity(u)) / (2.0 * energy3d(u))
