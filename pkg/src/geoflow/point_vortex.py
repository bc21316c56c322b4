"""Point vortices on the plane, upper half-plane, unit sphere and flat torus.

Hamiltonian conventions: ``Gamma_i dx_i/dt = dH/dy_i``, ``Gamma_i dy_i/dt = -dH/dx_i``
with ``H = sum_{i<j} Gamma_i Gamma_j G(x_i, x_j)`` and ``G`` the Green's function
of ``-Laplacian`` for each geometry (plane ``-ln r / 2 pi``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels

GEOMETRIES = ("plane", "half_plane", "sphere", "torus")
TORUS_ROWS = 8
COLLISION_DISTANCE = 1e-9


class CollapseError(RuntimeError):
    """Two vortices came closer than the collision distance (collapse candidate)."""


@dataclass(frozen=True)
class VortexSystem:
    geometry: str
    positions: np.ndarray = field(repr=False)
    gamma: np.ndarray
    period: float = 2 * np.pi

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}; choose from {GEOMETRIES}")
        pos = np.array(self.positions, dtype=float)
        gam = np.array(self.gamma, dtype=float).ravel()
        dim = 3 if self.geometry == "sphere" else 2
        if pos.ndim != 2 or pos.shape[1] != dim:
            raise ValueError(f"positions must have shape (n, {dim}) for {self.geometry}")
        if gam.shape != (pos.shape[0],):
            raise ValueError("one strength per vortex required")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(gam))):
            raise ValueError("positions and strengths must be finite")
        if self.geometry == "half_plane" and np.any(pos[:, 1] <= 0):
            raise ValueError("half-plane vortices need y > 0")
        if self.geometry == "sphere":
            norms = np.linalg.norm(pos, axis=1)
            if np.any(np.abs(norms - 1) > 1e-6):
                raise ValueError("sphere positions must be unit vectors")
            pos = pos / norms[:, None]
        if self.geometry == "torus":
            if not self.period > 0:
                raise ValueError("torus period must be positive")
            if abs(gam.sum()) > 1e-12 * max(1.0, np.abs(gam).sum()):
                raise ValueError("torus systems require zero total circulation")
        pos.flags.writeable = False
        gam.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "gamma", gam)
        _, minsep = _velocity(self.geometry, pos, gam, self.period)
        if minsep < COLLISION_DISTANCE:
            raise CollapseError(f"vortices closer than {COLLISION_DISTANCE}")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def with_positions(self, pos) -> "VortexSystem":
        return VortexSystem(self.geometry, pos, self.gamma, self.period)

    def reversed(self) -> "VortexSystem":
        """Same positions with strengths negated (time reversal)."""
        return VortexSystem(self.geometry, self.positions, -self.gamma, self.period)


def _velocity(geometry, pos, gamma, period):
    if geometry == "plane":
        return _kernels.plane_velocity(pos, gamma)
    if geometry == "half_plane":
        return _kernels.halfplane_velocity(pos, gamma)
    if geometry == "sphere":
        return _kernels.sphere_velocity(pos, gamma)
    return _kernels.torus_velocity(pos, gamma, period, TORUS_ROWS)


def rhs(sys: VortexSystem) -> np.ndarray:
    vel, minsep = _velocity(sys.geometry, sys.positions, sys.gamma, sys.period)
    if minsep < COLLISION_DISTANCE:
        raise CollapseError(f"separation {minsep:.3g} below {COLLISION_DISTANCE}")
    return vel


# --------------------------------------------------------------------------
# first integrals


@dataclass
class ConservedSet:
    H: float
    P: np.ndarray | None = None  # linear impulse (plane, torus)
    L: float | None = None  # angular impulse (plane)
    M: np.ndarray | None = None  # moment vector (sphere)
    Py: float | None = None  # x-translation impulse (half-plane)

    def as_dict(self) -> dict[str, float]:
        out = {"H": self.H}
        if self.P is not None:
            out["Px"], out["Py"] = float(self.P[0]), float(self.P[1])
        if self.L is not None:
            out["L"] = self.L
        if self.M is not None:
            out.update(Mx=float(self.M[0]), My=float(self.M[1]), Mz=float(self.M[2]))
        if self.Py is not None:
            out["I"] = self.Py
        return out


def _pairs(n):
    return np.triu_indices(n, 1)


def conserved(sys: VortexSystem) -> ConservedSet:
    """First integrals for the geometry (see module docstring for conventions)."""
    x, g = sys.positions, sys.gamma
    i, j = _pairs(sys.n)
    gg = g[i] * g[j]
    if sys.geometry == "plane":
        r = np.linalg.norm(x[i] - x[j], axis=1)
        H = float(-np.sum(gg * np.log(r)) / (2 * np.pi))
        return ConservedSet(H, P=g @ x, L=float(g @ np.sum(x * x, axis=1)))
    if sys.geometry == "half_plane":
        r = np.linalg.norm(x[i] - x[j], axis=1)
        img = x * np.array([1.0, -1.0])
        rimg = np.linalg.norm(x[:, None, :] - img[None, :, :], axis=2)
        H = -np.sum(gg * np.log(r)) / (2 * np.pi) + np.sum(np.outer(g, g) * np.log(rimg)) / (4 * np.pi)
        return ConservedSet(float(H), Py=float(g @ x[:, 1]))
    if sys.geometry == "sphere":
        dots = np.einsum("ij,ij->i", x[i], x[j])
        H = float(-np.sum(gg * np.log(2.0 - 2.0 * dots)) / (4 * np.pi))
        return ConservedSet(H, M=g @ x)
    d = x[i] - x[j]
    phi = _kernels.torus_pair_potential(d[:, 0], d[:, 1], sys.period, TORUS_ROWS)
    return ConservedSet(float(np.sum(gg * phi)), P=g @ x)


def _integral_vector(sys: VortexSystem) -> dict[str, float]:
    return conserved(sys).as_dict()


def drift(c0: dict, c1: dict) -> dict[str, float]:
    """Per-integral drift ``|Q1 - Q0| / max(1, |Q0|)``."""
    return {k: abs(c1[k] - c0[k]) / max(1.0, abs(c0[k])) for k in c0}


# --------------------------------------------------------------------------
# adaptive Dormand-Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def dopri(f, y0, t_out, tol, project=None, h0=None, max_steps=10_000_000):
    """Integrate ``y' = f(y)`` (autonomous) and return states at ``t_out``.

    Steps are clipped to land exactly on output times; ``project`` is applied
    to every accepted state. Returns ``(states, n_accepted, n_rejected)``.
    """
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=float)
    t = float(t_out[0])
    direction = 1.0 if t_out[-1] >= t else -1.0
    out = [y.copy()]
    k1 = f(y)
    if h0 is None:
        scale = tol + tol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k1 / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    else:
        h = abs(h0)
    acc = rej = 0
    for target in t_out[1:]:
        while direction * (target - t) > 0:
            if acc + rej > max_steps:
                raise RuntimeError("maximum number of steps exceeded")
            last = abs(target - t) <= h * (1 + 1e-12)
            hs = abs(target - t) if last else h
            hd = direction * hs
            ks = [k1]
            for s in range(1, 7):
                ys = y + hd * sum(a * k for a, k in zip(_A[s], ks))
                ks.append(f(ys))
            y5 = y + hd * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
            errv = hd * sum(e * k for e, k in zip(_E, ks))
            sc = tol + tol * np.maximum(np.abs(y), np.abs(y5))
            err = np.sqrt(np.mean((errv / sc) ** 2))
            if err <= 1.0:
                acc += 1
                t = float(target) if last else t + hd
                y = project(y5) if project is not None else y5
                k1 = f(y) if project is not None else ks[6]
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                if not last or fac < 1.0:
                    h = hs * fac
            else:
                rej += 1
                h = hs * max(0.2, 0.9 * err ** -0.2)
            if h < 1e-14 * max(1.0, abs(t)):
                raise CollapseError(f"step size underflow at t={t:.6g} (collapse candidate)")
        out.append(y.copy())
    return np.array(out), acc, rej


@dataclass
class Trajectory:
    system: VortexSystem
    t: np.ndarray
    positions: np.ndarray  # (len(t), n, dim)
    n_accepted: int = 0
    n_rejected: int = 0

    def state(self, k: int) -> VortexSystem:
        return self.system.with_positions(self.positions[k])

    def integrals(self) -> list[dict[str, float]]:
        return [_integral_vector(self.state(k)) for k in range(len(self.t))]

    def max_drift(self) -> dict[str, float]:
        rows = self.integrals()
        out = {k: 0.0 for k in rows[0]}
        for r in rows[1:]:
            for k, v in drift(rows[0], r).items():
                out[k] = max(out[k], v)
        return out


def _flow(sys: VortexSystem):
    shape = sys.positions.shape
    geom, gam, period = sys.geometry, sys.gamma, sys.period

    def f(y):
        vel, minsep = _velocity(geom, y.reshape(shape), gam, period)
        if minsep < COLLISION_DISTANCE:
            raise CollapseError(f"separation {minsep:.3g} below {COLLISION_DISTANCE} (collapse candidate)")
        return vel.ravel()

    project = None
    if geom == "sphere":

        def project(y):
            p = y.reshape(shape)
            return (p / np.linalg.norm(p, axis=1)[:, None]).ravel()

    return f, project


def integrate(sys: VortexSystem, t_end: float, tol: float = 1e-10, n_out: int = 100, t_out=None) -> Trajectory:
    """Adaptive DP5(4) integration with outputs at ``t_out`` (default: ``n_out`` even samples)."""
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    if t_out is None:
        t_out = np.linspace(0.0, t_end, n_out + 1)
    t_out = np.asarray(t_out, dtype=float)
    f, project = _flow(sys)
    states, acc, rej = dopri(f, sys.positions.ravel(), t_out, tol, project)
    return Trajectory(sys, t_out, states.reshape(len(t_out), *sys.positions.shape), acc, rej)


def advance(sys: VortexSystem, dt: float, tol: float = 1e-12) -> VortexSystem:
    if dt == 0:
        return sys
    traj = integrate(sys, dt, tol, t_out=[0.0, dt])
    return sys.with_positions(traj.positions[-1])


# --------------------------------------------------------------------------
# Poincare sections and Lyapunov exponents


@dataclass(frozen=True)
class Section:
    """Hyperplane ``positions[vortex, coord] = value`` crossed with sign ``direction``."""

    vortex: int
    coord: int
    value: float = 0.0
    direction: int = 1

    def __call__(self, pos: np.ndarray) -> float:
        return float(pos[self.vortex, self.coord] - self.value)


def poincare_section(traj: Trajectory, section: Section, tol: float = 1e-12, xtol: float = 1e-12):
    """Crossing times and states, located by bisection on re-integrated segments."""
    sys = traj.system
    vals = np.array([section(p) for p in traj.positions])
    times, states = [], []
    for k in range(len(vals) - 1):
        a, b = vals[k], vals[k + 1]
        if section.direction > 0:
            hit = a < 0 <= b
        elif section.direction < 0:
            hit = a > 0 >= b
        else:
            hit = (a < 0 <= b) or (a > 0 >= b)
        if not hit:
            continue
        start = sys.with_positions(traj.positions[k])
        t0 = traj.t[k]
        lo, hi = 0.0, traj.t[k + 1] - t0
        flo = a
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            fm = section(advance(start, mid, tol).positions)
            if np.sign(fm) == np.sign(flo) and fm != 0:
                lo, flo = mid, fm
            else:
                hi = mid
        tc = 0.5 * (lo + hi)
        times.append(t0 + tc)
        states.append(advance(start, tc, tol).positions)
    return np.array(times), np.array(states)


def lyapunov_max(sys: VortexSystem, t_end: float, delta0: float = 1e-8, seed: int = 0,
                 renorm_every: float = 1.0, tol: float = 1e-12) -> float:
    """Largest Lyapunov exponent from two-trajectory renormalisation."""
    rng = np.random.default_rng(seed)
    pert = rng.normal(size=sys.positions.shape)
    if sys.geometry == "sphere":
        # keep the perturbation tangent to the sphere
        pert -= np.sum(pert * sys.positions, axis=1)[:, None] * sys.positions
    pert *= delta0 / np.linalg.norm(pert)
    a = sys
    b = _perturbed(sys, sys.positions + pert)
    n_int = int(round(t_end / renorm_every))
    total = 0.0
    for _ in range(n_int):
        a = advance(a, renorm_every, tol)
        b = advance(b, renorm_every, tol)
        d = b.positions - a.positions
        dist = np.linalg.norm(d)
        total += np.log(dist / delta0)
        b = _perturbed(sys, a.positions + d * (delta0 / dist))
    return total / (n_int * renorm_every)


def _perturbed(sys, pos):
    if sys.geometry == "sphere":
        pos = pos / np.linalg.norm(pos, axis=1)[:, None]
    return sys.with_positions(pos)


# --------------------------------------------------------------------------
# closed forms and named configurations


def corotation_rate(gamma: float, d: float) -> float:
    """Angular velocity of two equal vortices of strength ``gamma`` at distance ``d``."""
    return gamma / (np.pi * d * d)


def halfplane_pair(a: float, b: float) -> VortexSystem:
    """Vortex ``+1`` at ``(0, a)`` and ``-1`` at ``(0, b)`` above the wall."""
    return VortexSystem("half_plane", [[0.0, a], [0.0, b]], [1.0, -1.0])


def halfplane_cusp_ratio() -> float:
    """Height ratio ``b / a`` at which the lower vortex is momentarily at rest.

    Found by root-finding on the instantaneous speed; the trajectory of that
    vortex has a cusp at this configuration.
    """
    return brentq(lambda r: rhs(halfplane_pair(1.0, r))[0, 0], 1.5, 20.0, xtol=1e-15, rtol=1e-15)


GOLDEN = (1 + np.sqrt(5)) / 2


def random_system(geometry: str, n: int, seed: int, period: float = 2 * np.pi) -> VortexSystem:
    """Seeded random system with well-separated vortices (minimum distance 0.3)."""
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        gam = rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n)
        if geometry == "sphere":
            pos = rng.normal(size=(n, 3))
            pos /= np.linalg.norm(pos, axis=1)[:, None]
        elif geometry == "half_plane":
            pos = np.column_stack([rng.uniform(-1, 1, n), rng.uniform(0.3, 2.0, n)])
        elif geometry == "torus":
            pos = rng.uniform(0, period, (n, 2))
            gam[-1] = -gam[:-1].sum()
            if abs(gam[-1]) < 0.3:
                continue
        else:
            pos = rng.uniform(-1, 1, (n, 2))
        d = np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)
        if geometry == "torus":
            dd = pos[:, None] - pos[None, :]
            dd -= period * np.round(dd / period)
            d = np.linalg.norm(dd, axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() > 0.3:
            return VortexSystem(geometry, pos, gam, period)
    raise RuntimeError("could not draw a well-separated system")
