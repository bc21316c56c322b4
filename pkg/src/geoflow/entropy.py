"""Epsilon-entropy estimators for finite sets and weighted ensembles.

Covering numbers come from one farthest-point (Gonzalez) ordering of the
points. The prefix of the ordering that brings the covering radius to
``<= eps`` is an eps-cover; the prefix at radius ``2 eps`` is a maximal
``2 eps``-separated set, which no eps-ball can hit twice. That gives

    packing <= true covering number <= greedy covering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import euler2d
from .spectral import Grid2, VorticityField2D

MAX_DIM = 64
SPARSE_CELL = 5
LADDER_LEVELS = 6


@dataclass(frozen=True)
class WeightedEnsemble:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        w = np.array(self.weights, dtype=float).ravel()
        if p.ndim != 2 or p.shape[0] == 0:
            raise ValueError("points must be a nonempty (N, n) array")
        if p.shape[1] > MAX_DIM:
            raise ValueError(f"dimension {p.shape[1]} exceeds {MAX_DIM}")
        if w.shape != (p.shape[0],):
            raise ValueError("one weight per point")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        p.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "WeightedEnsemble":
        p = np.asarray(points, dtype=float)
        n = p.shape[0]
        return cls(p, np.full(n, 1.0 / n))

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def finite_entropy(weights) -> float:
    """``-sum w log2 w`` with ``0 log 0 = 0``."""
    w = np.asarray(weights, dtype=float).ravel()
    if np.any(w < 0):
        raise ValueError("negative weight")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must sum to 1")
    nz = w[w > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


# --------------------------------------------------------------------------
# covering numbers of point sets


@dataclass
class FarthestPointOrder:
    """Gonzalez ordering: ``radii[k]`` is the covering radius of the first ``k + 1`` centers."""

    points: np.ndarray
    order: np.ndarray
    radii: np.ndarray

    def count(self, eps: float) -> int:
        """Centers needed to cover every point within ``eps`` (non-increasing in eps)."""
        # radii is non-increasing; first k with radii[k] <= eps
        k = np.searchsorted(-self.radii, -eps, side="left")
        return int(min(k, self.radii.size - 1) + 1)

    def coverage_index(self, eps: float) -> np.ndarray:
        """Per point, the number of leading centers after which it is within ``eps``."""
        c = self.points[self.order[: self.count(eps)]]
        d = np.linalg.norm(self.points[:, None, :] - c[None, :, :], axis=2)
        return np.argmax(d <= eps, axis=1) + 1


def farthest_point_order(points, stop_radius: float = 0.0) -> FarthestPointOrder:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.shape[0] == 0:
        raise ValueError("empty point set")
    n = p.shape[0]
    order = [0]
    dist = np.linalg.norm(p - p[0], axis=1)
    radii = [float(dist.max())]
    while radii[-1] > stop_radius and len(order) < n:
        nxt = int(np.argmax(dist))
        order.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(p - p[nxt], axis=1))
        radii.append(float(dist.max()))
    return FarthestPointOrder(p, np.array(order), np.array(radii))


@dataclass
class CoveringBounds:
    covering: int
    packing: int

    @property
    def entropy(self) -> float:
        """log2 of the greedy covering number (the reported estimate)."""
        return float(np.log2(self.covering))

    @property
    def lower(self) -> float:
        return float(np.log2(self.packing))


def eps_entropy_set(points, eps: float) -> CoveringBounds:
    """Greedy covering count and maximal ``2 eps``-separated packing count."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    fpo = farthest_point_order(points, stop_radius=eps)
    return CoveringBounds(fpo.count(eps), fpo.count(2 * eps))


# --------------------------------------------------------------------------
# cube counts and measure entropy


def _cells(points: np.ndarray, n: int, eps: float) -> np.ndarray:
    if not eps > 0:
        raise ValueError("eps must be positive")
    if n < 1 or n > points.shape[1]:
        raise ValueError(f"n must be in [1, {points.shape[1]}]")
    return np.floor(points[:, :n] / eps).astype(np.int64)


def cube_entropy(points, ns: int | Sequence[int], eps: float) -> float:
    """log2 of the largest number of occupied eps-cubes over the projections to the first n coordinates."""
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    ns = [ns] if np.isscalar(ns) else list(ns)
    best = 0
    for n in ns:
        best = max(best, np.unique(_cells(p, int(n), eps), axis=0).shape[0])
    return float(np.log2(best))


@dataclass
class MeasureEntropy:
    value: float
    n_cells: int
    undersampled: bool


def _cell_masses(ens: WeightedEnsemble, n: int, eps: float):
    cells = _cells(ens.points, n, eps)
    _, inv, counts = np.unique(cells, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    mass = np.bincount(inv, weights=ens.weights)
    return inv, mass, counts


def measure_entropy(ens: WeightedEnsemble, n: int, eps: float, printed_sign: bool = False) -> MeasureEntropy:
    """``H_{eps,n} = -sum_j mu(K_j) log2 mu(K_j)`` over eps-cubes of the first n coordinates.

    ``printed_sign=True`` returns ``+sum``, the form without the minus sign.
    ``undersampled`` flags that more than half of the occupied cells hold fewer
    than 5 samples.
    """
    _, mass, counts = _cell_masses(ens, n, eps)
    nz = mass[mass > 0]
    s = float(np.sum(nz * np.log2(nz)))
    value = s if printed_sign else max(0.0, -s)
    return MeasureEntropy(value, int(mass.size), bool(np.mean(counts < SPARSE_CELL) > 0.5))


class EpsDeltaProfile:
    """Precomputed data for ``H_{eps,delta}`` queries on one ensemble.

    Candidate compact sets come from discarding the lightest cubes on a fixed
    dyadic ladder of cube sides (independent of eps). Covering counts of a
    candidate use the full-set farthest-point order, so they are monotone
    under inclusion and in eps. Hence the estimate is non-increasing in both
    eps and delta.
    """

    def __init__(self, ens: WeightedEnsemble, n: int | None = None, levels: int = LADDER_LEVELS):
        n = ens.dim if n is None else n
        self.ens = ens
        self.pts = ens.points[:, :n]
        self.fpo = farthest_point_order(self.pts)
        lo = self.pts.min(axis=0)
        span = float(np.ptp(self.pts, axis=0).max()) or 1.0
        self.chains = []
        for j in range(1, levels + 1):
            side = span / 2**j
            cells = np.floor((self.pts - lo) / side).astype(np.int64)
            _, inv, _ = np.unique(cells, axis=0, return_inverse=True, return_counts=True)
            inv = inv.ravel()
            mass = np.bincount(inv, weights=ens.weights)
            order = np.lexsort((np.arange(mass.size), mass))  # lightest first, stable
            self.chains.append((inv, order, np.cumsum(mass[order])))

    def _kept(self, delta: float):
        yield np.ones(self.pts.shape[0], dtype=bool)
        for inv, order, cum in self.chains:
            k = int(np.searchsorted(cum, delta + 1e-15, side="right"))
            if k == 0 or k >= order.size:
                continue
            dropped = np.zeros(order.size, dtype=bool)
            dropped[order[:k]] = True
            yield ~dropped[inv]

    def count(self, eps: float, delta: float) -> int:
        if not eps > 0:
            raise ValueError("eps must be positive")
        if not 0 <= delta < 1:
            raise ValueError("delta must be in [0, 1)")
        idx = self.fpo.coverage_index(eps)
        return min(int(idx[keep].max()) for keep in self._kept(delta))

    def entropy(self, eps: float, delta: float) -> float:
        return float(np.log2(self.count(eps, delta)))


def eps_delta_entropy(ens: WeightedEnsemble, eps: float, delta: float, n: int | None = None) -> float:
    """``H_{eps,delta}``: least covering entropy over candidate sets missing at most delta of the mass."""
    return EpsDeltaProfile(ens, n).entropy(eps, delta)


# --------------------------------------------------------------------------
# entropy-decrease experiment


def _embedding_modes(grid: Grid2, n: int):
    ix = np.broadcast_to(grid.index_x, grid.spectral_shape)
    iy = np.broadcast_to(grid.index_y, grid.spectral_shape)
    k2 = grid.k2
    mask = ((iy > 0) | ((iy == 0) & (ix > 0))) & (k2 > 0)
    sel = np.argwhere(mask)
    sel = sel[np.lexsort((iy[mask], ix[mask], k2[mask]))][: (n + 1) // 2]
    return sel[:, 0], sel[:, 1]


def _coords(c: np.ndarray, n: int) -> np.ndarray:
    out = np.sqrt(2.0) * np.stack([c.real, c.imag], axis=-1)
    return out.reshape(c.shape[:-1] + (-1,))[..., :n]


def fourier_embedding(w: VorticityField2D, n: int) -> np.ndarray:
    """First ``n`` real coordinates of the velocity spectrum, lowest ``|k|`` first.

    One mode per conjugate pair contributes ``sqrt(2) (Re c, Im c)`` with
    ``c = omega_hat / (|k| nx ny)``; modes are ordered by ``(|k|^2, kx, ky)``.
    """
    g = w.grid
    a, b = _embedding_modes(g, n)
    c = w.omega_hat[a, b] / (np.sqrt(g.k2[a, b]) * g.nx * g.ny)
    return _coords(c, n)


def translation_orbit(w: VorticityField2D, n: int, m: int = 64) -> np.ndarray:
    """Embeddings of ``w(x - s)`` for ``s`` on an ``m x m`` lattice of the torus, shape ``(m*m, n)``."""
    g = w.grid
    a, b = _embedding_modes(g, n)
    c = w.omega_hat[a, b] / (np.sqrt(g.k2[a, b]) * g.nx * g.ny)
    kx = np.broadcast_to(g.kx, g.spectral_shape)[a, b]
    ky = np.broadcast_to(g.ky, g.spectral_shape)[a, b]
    sx, sy = np.meshgrid(g.lx * np.arange(m) / m, g.ly * np.arange(m) / m, indexing="ij")
    phase = np.exp(-1j * (sx.reshape(-1, 1) * kx + sy.reshape(-1, 1) * ky))
    return _coords(c * phase, n)


@dataclass(frozen=True)
class EntropyExperimentConfig:
    n_grid: int = 64
    members: int = 32
    ns: tuple = (8,)
    eps: float | None = None
    cells_per_axis: int = 8
    dt: float = 0.01
    t_end: float = 2.0
    output_every: int = 20
    seed: int = 0
    k0: float = 6.0
    nu_h: float = 0.0
    hv_order: int = 4
    frozen: bool = False
    translates: bool = False

    def __post_init__(self):
        if self.members < 32:
            raise ValueError("the experiment needs at least 32 ensemble members")
        if not self.dt > 0 or self.t_end < 0 or self.output_every < 1:
            raise ValueError("invalid time stepping parameters")
        if any(int(n) < 1 or int(n) > MAX_DIM for n in self.ns):
            raise ValueError(f"each n must lie in [1, {MAX_DIM}]")


@dataclass
class ExperimentResult:
    eps: float
    rows: list = field(default_factory=list)
    ensembles: list = field(default_factory=list, repr=False)

    @property
    def columns(self) -> list[str]:
        return list(self.rows[0].keys()) if self.rows else []


def initial_ensemble(cfg: EntropyExperimentConfig) -> list[VorticityField2D]:
    grid = Grid2(cfg.n_grid, cfg.n_grid)
    if cfg.translates:
        base = euler2d.random_vorticity(grid, cfg.seed, cfg.k0)
        rng = np.random.default_rng(cfg.seed + 1)
        shifts = rng.integers(0, cfg.n_grid, size=(cfg.members, 2))
        return [
            VorticityField2D.from_physical(grid, np.roll(base.physical(), tuple(s), axis=(0, 1)))
            for s in shifts
        ]
    return [euler2d.random_vorticity(grid, cfg.seed * 100_003 + m, cfg.k0) for m in range(cfg.members)]


def entropy_decrease_experiment(cfg: EntropyExperimentConfig, keep_ensembles: bool = False) -> ExperimentResult:
    """Evolve the ensemble and report ``H_{eps,n}(mu_t)`` at each output time (observational)."""
    fields = initial_ensemble(cfg)
    nmax = max(int(n) for n in cfg.ns)
    emb0 = np.array([fourier_embedding(w, nmax) for w in fields])
    eps = cfg.eps if cfg.eps is not None else float(np.ptp(emb0, axis=0).max()) / cfg.cells_per_axis
    result = ExperimentResult(eps)
    n_steps = int(round(cfg.t_end / cfg.dt))

    def record(t, ws):
        emb = np.array([fourier_embedding(w, nmax) for w in ws])
        ens = WeightedEnsemble.uniform(emb)
        row = {"t": t}
        for n in cfg.ns:
            row[f"H_eps_n{int(n)}"] = measure_entropy(ens, int(n), eps).value
        result.rows.append(row)
        if keep_ensembles:
            result.ensembles.append(emb)

    record(0.0, fields)
    for i in range(1, n_steps + 1):
        if not cfg.frozen:
            fields = [euler2d.step_rk4(w, cfg.dt, cfg.nu_h, cfg.hv_order, cfl_max=1.0) for w in fields]
        if i % cfg.output_every == 0 or i == n_steps:
            record(i * cfg.dt, fields)
    return result
