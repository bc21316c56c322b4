"""Pseudo-spectral 2D Euler in vorticity form on the flat torus.

Solves ``d omega/dt + u . grad omega = -nu_h (-Laplacian)^p omega`` with the
2/3 rule and an integrating-factor RK4 step (plain RK4 when ``nu_h = 0``).
The state is always kept inside the dealiased band, so the inviscid
semi-discrete system is an exact Galerkin truncation and conserves energy
and enstrophy up to time-stepping error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .spectral import (
    Grid2,
    VorticityField2D,
    casimir_moment,
    dealias,
    energy2d,
    enstrophy,
)

log = logging.getLogger(__name__)


class CFLViolation(RuntimeError):
    """Raised when ``dt * max|u| * kmax`` exceeds the configured limit."""


class DegenerateFieldError(ValueError):
    pass


@dataclass(frozen=True)
class EulerConfig:
    grid: Grid2
    dt: float
    t_end: float
    nu_h: float = 0.0
    hv_order: int = 4
    output_every: int = 10
    snapshot_every: int = 0
    seed: int = 0
    cfl_max: float = 0.5
    blob_threshold: float = 0.2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.nu_h < 0:
            raise ValueError("nu_h must be non-negative")
        if self.hv_order < 1:
            raise ValueError("hv_order must be >= 1")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


# --------------------------------------------------------------------------
# right-hand side and time stepping


class _Operators:
    """Precomputed spectral multipliers for one grid."""

    _cache: dict = {}

    def __init__(self, grid: Grid2):
        self.grid = grid
        self.mask = grid.dealias_mask
        self.ikx = 1j * grid.kx
        self.iky = 1j * grid.ky
        self.u_mult = 1j * grid.ky * grid.inv_k2
        self.v_mult = -1j * grid.kx * grid.inv_k2

    @classmethod
    def for_grid(cls, grid: Grid2) -> "_Operators":
        ops = cls._cache.get(grid)
        if ops is None:
            ops = cls._cache[grid] = cls(grid)
        return ops

    def velocity(self, w_hat):
        g = self.grid
        return g.to_physical(self.u_mult * w_hat), g.to_physical(self.v_mult * w_hat)

    def advection(self, w_hat, uv=None):
        g = self.grid
        u, v = self.velocity(w_hat) if uv is None else uv
        wx = g.to_physical(self.ikx * w_hat)
        wy = g.to_physical(self.iky * w_hat)
        out = -g.to_spectral(u * wx + v * wy) * self.mask
        out[0, 0] = 0.0
        return out


def rhs(w: VorticityField2D, nu_h: float = 0.0, hv_order: int = 4) -> np.ndarray:
    """``d omega_hat / dt`` including the hyperviscous term."""
    ops = _Operators.for_grid(w.grid)
    out = ops.advection(w.omega_hat * ops.mask)
    if nu_h > 0:
        out = out - nu_h * w.grid.k2**hv_order * w.omega_hat
    return out


def max_speed(w_hat: np.ndarray, grid: Grid2) -> float:
    u, v = _Operators.for_grid(grid).velocity(w_hat)
    return float(np.sqrt(np.max(u * u + v * v)))


def cfl_number(w_hat: np.ndarray, grid: Grid2, dt: float) -> float:
    return dt * max_speed(w_hat, grid) * grid.kmax_dealiased


def _if_rk4_stages(w_hat, grid, dt, nu_h, hv_order, cfl_max=None, first_uv=None):
    """One integrating-factor RK4 step; returns ``(new_hat, stage_hats)``.

    Stage fields are the vorticities at which the nonlinear term was
    evaluated (t, t+dt/2, t+dt/2, t+dt) and are reused for tracer advection.
    """
    ops = _Operators.for_grid(grid)
    if nu_h > 0:
        e_half = np.exp(-0.5 * dt * nu_h * grid.k2**hv_order)
        e_full = e_half * e_half
    else:
        e_half = e_full = 1.0
    uv = ops.velocity(w_hat) if first_uv is None else first_uv
    if cfl_max is not None:
        umax = float(np.sqrt(np.max(uv[0] ** 2 + uv[1] ** 2)))
        c = dt * umax * grid.kmax_dealiased
        if c > cfl_max:
            raise CFLViolation(
                f"CFL number {c:.3g} exceeds {cfl_max} (dt={dt}, max|u|={umax:.4g}, "
                f"kmax={grid.kmax_dealiased:.4g})"
            )
    k1 = ops.advection(w_hat, uv)
    a = e_half * (w_hat + 0.5 * dt * k1)
    k2 = ops.advection(a)
    b = e_half * w_hat + 0.5 * dt * k2
    k3 = ops.advection(b)
    c_ = e_full * w_hat + dt * e_half * k3
    k4 = ops.advection(c_)
    new = e_full * w_hat + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    new = new * ops.mask
    new[0, 0] = 0.0
    return new, (w_hat, a, b, c_)


def step_rk4(w: VorticityField2D, dt: float, nu_h: float = 0.0, hv_order: int = 4,
             cfl_max: float | None = None) -> VorticityField2D:
    """Advance one step; the result is projected onto the dealiased band."""
    w_hat = w.omega_hat * w.grid.dealias_mask
    new, _ = _if_rk4_stages(w_hat, w.grid, dt, nu_h, hv_order, cfl_max)
    return w.with_hat(new)


# --------------------------------------------------------------------------
# initial conditions


def random_vorticity(grid: Grid2, seed: int, k0: float = 6.0, energy: float = 1.0) -> VorticityField2D:
    """Isotropic random field, ``|omega_k| ~ |k|^3 exp(-(|k|/k0)^2)`` with random phases."""
    rng = np.random.default_rng(seed)
    kmag = np.sqrt(grid.k2)
    amp = kmag**3 * np.exp(-((kmag / k0) ** 2))
    phase = np.exp(2j * np.pi * rng.random(grid.spectral_shape))
    # round trip through physical space enforces Hermitian symmetry
    w_hat = grid.to_spectral(grid.to_physical(amp * phase)) * grid.dealias_mask
    w_hat[0, 0] = 0.0
    w = VorticityField2D(grid, w_hat)
    e = energy2d(w)
    return w.with_hat(w_hat * np.sqrt(energy / e))


def shear_flow(grid: Grid2, k: int = 1, amplitude: float = 1.0) -> VorticityField2D:
    """Kolmogorov shear ``psi = amplitude * cos(k y)``."""
    _, y = grid.coords
    return VorticityField2D.from_streamfunction(grid, amplitude * np.cos(k * y))


def perturbed_shear(grid: Grid2, seed: int, k: int = 1, eps: float = 0.05) -> VorticityField2D:
    base = shear_flow(grid, k)
    noise = random_vorticity(grid, seed, k0=3.0, energy=1.0)
    scale = eps * np.sqrt(enstrophy(base) / enstrophy(noise))
    return dealias(base.with_hat(base.omega_hat + scale * noise.omega_hat))


# --------------------------------------------------------------------------
# diagnostics


def max_gradient(w: VorticityField2D) -> float:
    g = w.grid
    ops = _Operators.for_grid(g)
    wx = g.to_physical(ops.ikx * w.omega_hat)
    wy = g.to_physical(ops.iky * w.omega_hat)
    return float(np.sqrt(np.max(wx * wx + wy * wy)))


@dataclass
class BlobSummary:
    count: int
    circulation: np.ndarray
    area: np.ndarray
    centroid: np.ndarray
    background_circulation: float
    labels: np.ndarray = field(repr=False)

    @property
    def total_circulation(self) -> float:
        """Blob circulations plus the sub-threshold remainder; equals ``int omega = 0``."""
        return float(self.circulation.sum() + self.background_circulation)


def detect_blobs(w: VorticityField2D, threshold: float = 0.2) -> BlobSummary:
    """Periodic 4-connected components of ``|omega| > threshold * max|omega|``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    g = w.grid
    om = w.physical()
    peak = np.abs(om).max()
    if peak == 0.0:
        empty = np.zeros(0)
        return BlobSummary(0, empty, empty, np.zeros((0, 2)), 0.0, np.zeros(g.shape, np.int32))
    mask = np.abs(om) > threshold * peak
    labels, count = _kernels.label_periodic(mask)
    flat = labels.ravel()
    circ = np.bincount(flat, weights=om.ravel(), minlength=count + 1) * g.cell_area
    area = np.bincount(flat, minlength=count + 1) * g.cell_area
    x, y = g.coords
    wts = np.abs(om).ravel()
    cent = np.empty((count + 1, 2))
    for axis, (coord, length) in enumerate(((x, g.lx), (y, g.ly))):
        ang = 2 * np.pi * coord.ravel() / length
        c = np.bincount(flat, weights=wts * np.cos(ang), minlength=count + 1)
        s = np.bincount(flat, weights=wts * np.sin(ang), minlength=count + 1)
        cent[:, axis] = np.mod(np.arctan2(s, c), 2 * np.pi) * length / (2 * np.pi)
    return BlobSummary(
        count=count,
        circulation=circ[1:],
        area=area[1:],
        centroid=cent[1:],
        background_circulation=float(circ[0]),
        labels=labels,
    )


@dataclass
class SteadyFit:
    residual: float
    psi_nodes: np.ndarray
    F_nodes: np.ndarray

    def F(self, s):
        return _interp_extrap(np.asarray(s, dtype=float), self.psi_nodes, self.F_nodes)


def _interp_extrap(s, xp, fp):
    if xp.size == 1:
        return np.full_like(s, fp[0])
    out = np.interp(s, xp, fp)
    lo = s < xp[0]
    hi = s > xp[-1]
    out[lo] = fp[0] + (s[lo] - xp[0]) * (fp[1] - fp[0]) / (xp[1] - xp[0])
    out[hi] = fp[-1] + (s[hi] - xp[-1]) * (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
    return out


def steady_functional_fit(w: VorticityField2D, nbins: int = 64) -> SteadyFit:
    """Fit ``Laplacian(psi) = F(psi)`` by equal-count binning in ``psi``.

    ``F`` is the piecewise-linear curve through the per-bin means; the
    residual is the RMS misfit divided by ``RMS(Laplacian psi)``.
    """
    psi = w.streamfunction().ravel()
    lap = -w.physical().ravel()
    spread = psi.max() - psi.min()
    if not spread > 1e-12 * max(1.0, np.abs(psi).max()) or not np.any(lap):
        raise DegenerateFieldError("stream function is constant; no functional relation to fit")
    order = np.argsort(psi, kind="stable")
    chunks = np.array_split(order, min(nbins, psi.size))
    xs = np.array([psi[c].mean() for c in chunks])
    fs = np.array([lap[c].mean() for c in chunks])
    ux, inv = np.unique(xs, return_inverse=True)
    uf = np.bincount(inv, weights=fs) / np.bincount(inv)
    fit = _interp_extrap(psi, ux, uf)
    resid = np.sqrt(np.mean((lap - fit) ** 2)) / np.sqrt(np.mean(lap**2))
    return SteadyFit(float(resid), ux, uf)


@dataclass
class DiagnosticSeries:
    t: list = field(default_factory=list)
    E: list = field(default_factory=list)
    Omega: list = field(default_factory=list)
    C3: list = field(default_factory=list)
    C4: list = field(default_factory=list)
    maxgrad: list = field(default_factory=list)
    nblobs: list = field(default_factory=list)

    COLUMNS = ("t", "E", "Omega", "C3", "C4", "maxgrad", "nblobs")

    def record(self, t: float, w: VorticityField2D, threshold: float):
        self.t.append(t)
        self.E.append(energy2d(w))
        self.Omega.append(enstrophy(w))
        self.C3.append(casimir_moment(w, 3))
        self.C4.append(casimir_moment(w, 4))
        self.maxgrad.append(max_gradient(w))
        self.nblobs.append(detect_blobs(w, threshold).count)

    def rows(self):
        return zip(*(getattr(self, c) for c in self.COLUMNS))

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))


@dataclass
class RunResult:
    series: DiagnosticSeries
    snapshots: list  # (t, VorticityField2D)
    final: VorticityField2D


def run(config: EulerConfig, w0: VorticityField2D) -> RunResult:
    """Integrate from ``w0`` to ``config.t_end``, recording diagnostics.

    Raises :class:`CFLViolation` as soon as a step would exceed ``cfl_max``.
    """
    grid = config.grid
    if w0.grid != grid:
        raise ValueError("initial field grid differs from config grid")
    w_hat = w0.omega_hat * grid.dealias_mask
    series = DiagnosticSeries()
    snaps = []
    n = config.n_steps
    for step in range(n + 1):
        t = step * config.dt
        cur = None
        if step % config.output_every == 0 or step == n:
            cur = w0.with_hat(w_hat)
            series.record(t, cur, config.blob_threshold)
        if config.snapshot_every and (step % config.snapshot_every == 0 or step == n):
            snaps.append((t, cur if cur is not None else w0.with_hat(w_hat)))
        if step == n:
            break
        w_hat, _ = _if_rk4_stages(w_hat, grid, config.dt, config.nu_h, config.hv_order, config.cfl_max)
    return RunResult(series, snaps, w0.with_hat(w_hat))


# --------------------------------------------------------------------------
# Lagrangian tracers and gradient growth


def evaluate_at_points(grid: Grid2, a_hat: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Spectral (trigonometric) interpolation of a real field at arbitrary points."""
    pts = np.atleast_2d(points)
    ex = np.exp(1j * pts[:, 0:1] * grid.kx[:, 0][None, :])  # (P, nx)
    ey = np.exp(1j * pts[:, 1:2] * grid.ky[0, :][None, :])  # (P, ny//2+1)
    weight = np.full(grid.ny // 2 + 1, 2.0)
    weight[0] = 1.0
    if grid.ny % 2 == 0:
        weight[-1] = 1.0
    tmp = ex @ (a_hat * weight[None, :])
    return np.real(np.sum(tmp * ey, axis=1)) / (grid.nx * grid.ny)


def _tracer_velocity(grid, u_hat, v_hat, pts):
    return np.stack([evaluate_at_points(grid, u_hat, pts), evaluate_at_points(grid, v_hat, pts)], axis=1)


def advect_in_velocity(grid: Grid2, u_hat: np.ndarray, v_hat: np.ndarray, seeds, dt: float, n_steps: int):
    """RK4 tracers in a frozen spectral velocity field (which may carry a mean flow)."""
    x = np.array(seeds, dtype=float, copy=True).reshape(-1, 2)
    out = [x.copy()]
    for _ in range(n_steps):
        k1 = _tracer_velocity(grid, u_hat, v_hat, x)
        k2 = _tracer_velocity(grid, u_hat, v_hat, x + 0.5 * dt * k1)
        k3 = _tracer_velocity(grid, u_hat, v_hat, x + 0.5 * dt * k2)
        k4 = _tracer_velocity(grid, u_hat, v_hat, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x.copy())
    return np.array(out)


def advect_tracers(w0: VorticityField2D, seeds, dt: float, n_steps: int, nu_h: float = 0.0,
                   hv_order: int = 4, frozen: bool = False):
    """Tracer trajectories, shape ``(n_steps + 1, n_tracers, 2)`` (unwrapped coordinates).

    With ``frozen=False`` the vorticity is evolved alongside the tracers and
    each RK4 stage uses the matching stage vorticity.
    """
    grid = w0.grid
    ops = _Operators.for_grid(grid)
    w_hat = w0.omega_hat * grid.dealias_mask
    if frozen:
        return advect_in_velocity(grid, ops.u_mult * w_hat, ops.v_mult * w_hat, seeds, dt, n_steps)
    x = np.array(seeds, dtype=float, copy=True).reshape(-1, 2)
    out = [x.copy()]
    for _ in range(n_steps):
        new_hat, stages = _if_rk4_stages(w_hat, grid, dt, nu_h, hv_order)
        vel = [lambda p, s=s: _tracer_velocity(grid, ops.u_mult * s, ops.v_mult * s, p) for s in stages]
        k1 = vel[0](x)
        k2 = vel[1](x + 0.5 * dt * k1)
        k3 = vel[2](x + 0.5 * dt * k2)
        k4 = vel[3](x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x.copy())
        w_hat = new_hat
    return np.array(out)


@dataclass
class GrowthFit:
    rate: float
    intercept: float
    r_squared: float


def gradient_growth(t, maxgrad) -> GrowthFit:
    """Least-squares fit ``log max|grad omega| ~ rate * t + intercept``."""
    t = np.asarray(t, dtype=float)
    g = np.log(np.asarray(maxgrad, dtype=float))
    if t.size < 2:
        raise ValueError("need at least two samples")
    rate, intercept = np.polyfit(t, g, 1)
    pred = rate * t + intercept
    ss_res = np.sum((g - pred) ** 2)
    ss_tot = np.sum((g - g.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GrowthFit(float(rate), float(intercept), float(r2))
