"""Sticking particles on the line.

* :func:`event_driven_run` is the exact oracle: free flight between
  collisions, colliding clusters merge with summed mass and momentum.
* :func:`variational_minimize` recovers the same motion as the least-action
  path in the extended configuration space ``Z`` (positions ``x`` plus hidden
  coordinates ``y``), enumerating the chains of strata the path can visit.
* :func:`continuum_evolve` is the monotone-rearrangement form for a continuum
  of particles: free flight projected onto nondecreasing profiles.
* :func:`shock_velocity` is the smallest-enclosing-ball rule.

All inner products on ``R^n`` are mass weighted, ``<a, b> = sum m_i a_i b_i``,
so the orthogonal projection onto a stratum is the momentum-conserving merge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _kernels

MAX_VARIATIONAL_N = 6


@dataclass(frozen=True)
class StickySystem:
    masses: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=float).ravel()
        x = np.array(self.positions, dtype=float).ravel()
        v = np.array(self.velocities, dtype=float).ravel()
        if not (m.size == x.size == v.size) or m.size == 0:
            raise ValueError("masses, positions and velocities need equal nonzero length")
        if np.any(m <= 0):
            raise ValueError("masses must be positive")
        if np.any(np.diff(x) < 0):
            raise ValueError("positions must be nondecreasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v)) and np.all(np.isfinite(m))):
            raise ValueError("non-finite input")
        for name, a in (("masses", m), ("positions", x), ("velocities", v)):
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.masses.size

    @property
    def momentum(self) -> float:
        return float(self.masses @ self.velocities)

    @property
    def energy(self) -> float:
        return float(0.5 * self.masses @ self.velocities**2)

    @classmethod
    def random(cls, n: int, seed: int) -> "StickySystem":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(0.5, 2.0, n), np.sort(rng.uniform(0.0, 1.0, n)), rng.uniform(-1.0, 1.0, n))


# --------------------------------------------------------------------------
# event-driven oracle


@dataclass
class MergeEvent:
    time: float
    members: tuple[int, ...]  # particle indices of the merged cluster
    parts: tuple[tuple[int, ...], ...]  # the clusters that fused
    velocity: float
    momentum_before: float
    momentum_after: float
    energy_before: float
    energy_after: float


@dataclass
class _Cluster:
    members: tuple[int, ...]
    mass: float
    x: float  # position at the run's current time
    v: float


@dataclass
class StickyRun:
    """Piecewise-linear oracle trajectory with its merge log."""

    system: StickySystem
    t_end: float
    events: list[MergeEvent]
    _breaks: list = field(repr=False)  # (t, x, v) per-particle state right after each event time

    def state(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-particle ``(positions, velocities)`` at time ``t``."""
        if t < 0:
            raise ValueError("t must be non-negative")
        idx = 0
        for k, (tb, _, _) in enumerate(self._breaks):
            if tb <= t:
                idx = k
        tb, x, v = self._breaks[idx]
        return x + (t - tb) * v, v.copy()

    def positions(self, t: float) -> np.ndarray:
        return self.state(t)[0]

    def hidden(self, t: float) -> np.ndarray:
        """Hidden coordinates: each merge adds its lost relative velocity as a y-rate."""
        y = np.zeros(self.system.n)
        for tb, rate in self._hidden_rates():
            if tb < t:
                y += (t - tb) * rate
        return y

    def _hidden_rates(self):
        out = []
        prev_v = self._breaks[0][2]
        for tb, _, v in self._breaks[1:]:
            out.append((tb, prev_v - v))
            prev_v = v
        return out

    def endpoint(self, t: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """``(x, y)`` at time ``t`` under the hidden-coordinate convention."""
        return self.positions(t), self.hidden(t)

    def final_partition(self) -> tuple[int, ...]:
        x, v = self.state(self.t_end)
        sizes = []
        i = 0
        n = x.size
        while i < n:
            j = i
            while j + 1 < n and x[j + 1] == x[i] and v[j + 1] == v[i]:
                j += 1
            sizes.append(j - i + 1)
            i = j + 1
        return tuple(sizes)


def event_driven_run(sys: StickySystem, t_end: float, rel_tol: float = 1e-12) -> StickyRun:
    """Exact event-driven sticky dynamics on ``[0, t_end]``."""
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    m = sys.masses
    clusters = [_Cluster((i,), m[i], sys.positions[i], sys.velocities[i]) for i in range(sys.n)]
    t = 0.0
    events: list[MergeEvent] = []
    breaks = [(0.0, sys.positions.copy(), sys.velocities.copy())]
    scale = max(1.0, np.abs(sys.positions).max(), np.abs(sys.velocities).max())

    def per_particle():
        x = np.empty(sys.n)
        v = np.empty(sys.n)
        for c in clusters:
            x[list(c.members)] = c.x
            v[list(c.members)] = c.v
        return x, v

    while True:
        # collision time of each adjacent pair
        taus = []
        for a, b in zip(clusters[:-1], clusters[1:]):
            dv = a.v - b.v
            gap = b.x - a.x
            if dv > 0:
                taus.append(max(gap, 0.0) / dv)
            else:
                taus.append(np.inf)
        if not taus or min(taus) == np.inf or t + min(taus) > t_end:
            break
        tau = min(taus)
        for c in clusters:
            c.x += tau * c.v
        t += tau
        hit = [k for k, s in enumerate(taus) if s <= tau + rel_tol * max(tau, 1.0)]
        # group hits into maximal runs of adjacent contacts
        groups = []
        for k in hit:
            if groups and groups[-1][-1] == k:
                groups[-1].append(k + 1)
            else:
                groups.append([k, k + 1])
        new = []
        last = 0
        merged_at = []
        for g in groups:
            new.extend(clusters[last : g[0]])
            parts = [clusters[k] for k in g]
            mass = sum(p.mass for p in parts)
            mom = sum(p.mass * p.v for p in parts)
            e_before = sum(0.5 * p.mass * p.v * p.v for p in parts)
            xc = sum(p.mass * p.x for p in parts) / mass
            vc = mom / mass
            members = tuple(i for p in parts for i in p.members)
            merged = _Cluster(members, mass, xc, vc)
            new.append(merged)
            merged_at.append(
                MergeEvent(
                    t, members, tuple(p.members for p in parts), vc, mom, mass * vc,
                    e_before, 0.5 * mass * vc * vc,
                )
            )
            last = g[-1] + 1
        new.extend(clusters[last:])
        clusters = new
        events.extend(merged_at)
        x, v = per_particle()
        breaks.append((t, x, v))
        if abs(t) > 1e6 * scale:
            break
    return StickyRun(sys, t_end, events, breaks)


# --------------------------------------------------------------------------
# strata and the variational principle


Partition = tuple  # block sizes (m_1, ..., m_k) of consecutive particles


def _blocks(sizes: Partition):
    out = []
    start = 0
    for s in sizes:
        out.append(range(start, start + s))
        start += s
    return out


def _cuts(sizes: Partition) -> frozenset:
    """Gaps (between particle g and g+1) that are closed by the partition."""
    closed = set()
    for b in _blocks(sizes):
        closed.update(range(b.start, b.stop - 1))
    return frozenset(closed)


def _from_cuts(n: int, closed) -> Partition:
    sizes = []
    run = 1
    for g in range(n - 1):
        if g in closed:
            run += 1
        else:
            sizes.append(run)
            run = 1
    sizes.append(run)
    return tuple(sizes)


def _delta_basis(sizes: Partition, sqrt_m: np.ndarray) -> np.ndarray:
    """Orthonormal basis (scaled coordinates) of the stratum ``Delta_P``; columns."""
    n = sqrt_m.size
    cols = []
    for b in _blocks(sizes):
        e = np.zeros(n)
        e[list(b)] = sqrt_m[list(b)]
        cols.append(e / np.linalg.norm(e))
    return np.array(cols).T


def _perp_basis(sizes: Partition, sqrt_m: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``Delta_P^perp`` in scaled coordinates."""
    n = sqrt_m.size
    D = _delta_basis(sizes, sqrt_m)
    if D.shape[1] == n:
        return np.zeros((n, 0))
    proj = np.eye(n) - D @ D.T
    u, s, _ = np.linalg.svd(proj)
    return u[:, : n - D.shape[1]]


@dataclass
class CollisionHistory:
    """Chain of partitions ``P_1 < P_2 < ...`` (each strictly coarser) entered at ``times``."""

    partitions: list
    times: list

    def __post_init__(self):
        if len(self.partitions) != len(self.times):
            raise ValueError("one time per partition")
        t = np.asarray(self.times, dtype=float)
        if t.size and (np.any(t < 0) or np.any(t > 1) or np.any(np.diff(t) <= 0)):
            raise ValueError("times must be strictly increasing within [0, 1]")
        prev = None
        for p in self.partitions:
            c = _cuts(p)
            if prev is not None and not (prev < c):
                raise ValueError("each partition must strictly coarsen the previous one")
            prev = c

    @property
    def n_events(self) -> int:
        return len(self.times)


@dataclass
class PiecewisePath:
    """Piecewise-linear path in ``Z``: nodes ``(x, y)`` at increasing times (unscaled)."""

    times: np.ndarray
    nodes: np.ndarray  # (len(times), 2n)

    def at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.nodes[:, c]) for c in range(self.nodes.shape[1])])

    def x(self, t: float) -> np.ndarray:
        return self.at(t)[: self.nodes.shape[1] // 2]


class InconsistentHistory(ValueError):
    pass


def _final_partition_ok(sizes, x1, y1, masses, tol):
    """``x1 in Delta_P`` and ``y1 in Delta_P^perp`` (mass-weighted)."""
    scale = max(1.0, np.abs(x1).max(), np.abs(y1).max())
    for b in _blocks(sizes):
        idx = list(b)
        if np.ptp(x1[idx]) > tol * scale:
            return False
        if abs(masses[idx] @ y1[idx]) > tol * scale * masses[idx].sum():
            return False
    return True


def _junction_spaces(history: CollisionHistory, sqrt_m):
    """Basis of each junction subspace ``Delta_{P_k} (+) Delta_{P_{k-1}}^perp`` in ``R^{2n}``."""
    n = sqrt_m.size
    prev = tuple([1] * n)
    spaces = []
    for p in history.partitions:
        D = _delta_basis(p, sqrt_m)
        Pp = _perp_basis(prev, sqrt_m)
        B = np.zeros((2 * n, D.shape[1] + Pp.shape[1]))
        B[:n, : D.shape[1]] = D
        B[n:, D.shape[1] :] = Pp
        spaces.append(B)
        prev = p
    return spaces


def _solve_junctions(spaces, times, z0s, z1s):
    """Optimal junction points (scaled coordinates) for fixed event times in (0, 1)."""
    dt = np.diff(np.concatenate([[0.0], times, [1.0]]))
    K = len(spaces)
    if K == 0:
        return [z0s, z1s]
    offs = np.concatenate([[0], np.cumsum([B.shape[1] for B in spaces])])
    n2 = z0s.size
    A = np.zeros(((K + 1) * n2, offs[-1]))
    b = np.zeros((K + 1) * n2)
    # segment k: A c - b = (J_{k+1} - J_k) / sqrt(dt_k), J_0 = z0 and J_{K+1} = z1
    for k in range(K + 1):
        w = 1.0 / np.sqrt(dt[k])
        rows = slice(k * n2, (k + 1) * n2)
        if k < K:
            A[rows, offs[k] : offs[k + 1]] += w * spaces[k]
        else:
            b[rows] -= w * z1s
        if k > 0:
            A[rows, offs[k - 1] : offs[k]] -= w * spaces[k - 1]
        else:
            b[rows] += w * z0s
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return [z0s] + [spaces[k] @ coef[offs[k] : offs[k + 1]] for k in range(K)] + [z1s]


def _check_endpoint_spaces(history, z0s, z1s, sqrt_m, tol=1e-9):
    n = sqrt_m.size
    m = sqrt_m**2
    x1 = z1s[:n] / sqrt_m
    y1 = z1s[n:] / sqrt_m
    last = history.partitions[-1] if history.partitions else tuple([1] * n)
    if not _final_partition_ok(last, x1, y1, m, tol):
        raise InconsistentHistory("z1 does not lie in the final stratum of the history")
    if history.partitions and history.times[-1] == 1.0:
        prev = history.partitions[-2] if len(history.partitions) > 1 else tuple([1] * n)
        P = _perp_basis(prev, sqrt_m)
        ys = z1s[n:]
        if np.linalg.norm(ys - P @ (P.T @ ys)) > tol * max(1.0, np.linalg.norm(ys)):
            raise InconsistentHistory("a merge at t = 1 cannot carry hidden motion")
    if history.partitions and history.times[0] == 0.0:
        x0 = z0s[:n] / sqrt_m
        if not _final_partition_ok(history.partitions[0], x0, np.zeros(n), m, tol):
            raise InconsistentHistory("a merge at t = 0 needs the particles to coincide initially")


def _scaled(z, sqrt_m):
    n = sqrt_m.size
    z = np.asarray(z, dtype=float)
    if z.shape != (2 * n,):
        raise ValueError(f"endpoints must have length {2 * n}")
    return np.concatenate([z[:n] * sqrt_m, z[n:] * sqrt_m])


def _unscaled_nodes(nodes, sqrt_m):
    n = sqrt_m.size
    out = np.array(nodes)
    out[:, :n] /= sqrt_m
    out[:, n:] /= sqrt_m
    return out


def stratum_action(history: CollisionHistory, z0, z1, masses=None):
    """Least action within a fixed history and its piecewise-linear path.

    ``z0 = (x0, 0)`` and ``z1 = (x1, y1)`` are length ``2n``; the action is
    ``sum_k |J_{k+1} - J_k|^2 / (2 dt_k)`` minimised over junctions ``J_k`` in
    ``Delta_{P_k} (+) Delta_{P_{k-1}}^perp``.
    """
    z0 = np.asarray(z0, dtype=float)
    n = z0.size // 2
    masses = np.ones(n) if masses is None else np.asarray(masses, dtype=float)
    sqrt_m = np.sqrt(masses)
    z0s, z1s = _scaled(z0, sqrt_m), _scaled(z1, sqrt_m)
    if np.any(z0[n:] != 0):
        raise InconsistentHistory("z0 must have zero hidden coordinates")
    _check_endpoint_spaces(history, z0s, z1s, sqrt_m)
    spaces = _junction_spaces(history, sqrt_m)
    times = list(history.times)
    # a merge on the boundary pins its junction to the endpoint
    head = bool(times) and times[0] == 0.0
    tail = bool(times) and times[-1] == 1.0
    inner = slice(1 if head else 0, len(times) - 1 if tail else len(times))
    nodes = _solve_junctions(spaces[inner], times[inner], z0s, z1s)
    nodes = ([z0s] if head else []) + nodes + ([z1s] if tail else [])
    t_nodes = np.concatenate([[0.0], times, [1.0]])
    dt = np.diff(t_nodes)
    action = sum(0.5 * np.sum((nodes[k + 1] - nodes[k]) ** 2) / dt[k] for k in range(len(dt)) if dt[k] > 0)
    return float(action), PiecewisePath(t_nodes, _unscaled_nodes(nodes, sqrt_m))


def _admissible(path: PiecewisePath, n: int, tol: float) -> bool:
    x = path.nodes[:, :n]
    scale = max(1.0, np.abs(x).max())
    return bool(np.all(np.diff(x, axis=1) >= -tol * scale))


def _chains(n: int, target: frozenset):
    """All strictly increasing chains of closed-gap sets from {} to ``target``."""
    gaps = sorted(target)
    if not gaps:
        yield []
        return
    # ordered set partitions of the target gaps
    for k in range(1, len(gaps) + 1):
        for labels in itertools.product(range(k), repeat=len(gaps)):
            if set(labels) != set(range(k)):
                continue
            chain = []
            closed = set()
            for step in range(k):
                closed |= {g for g, l in zip(gaps, labels) if l == step}
                chain.append(_from_cuts(n, closed))
            yield chain


def _candidate_final_partitions(x1, y1, masses, tol):
    n = x1.size
    scale = max(1.0, np.abs(x1).max())
    touching = [g for g in range(n - 1) if abs(x1[g + 1] - x1[g]) <= tol * scale]
    out = []
    for r in range(len(touching) + 1):
        for sub in itertools.combinations(touching, r):
            p = _from_cuts(n, set(sub))
            if _final_partition_ok(p, x1, y1, masses, tol):
                out.append(frozenset(sub))
    return out


def _optimize_times(chain, z0s, z1s, sqrt_m, rng, n_starts=3):
    """Minimise the action over event times for a fixed chain; returns (action, times) or None."""
    K = len(chain)
    spaces = _junction_spaces(CollisionHistory(chain, list(np.linspace(0, 1, K + 2)[1:-1])), sqrt_m)

    def action_and_grad(t):
        dt = np.diff(np.concatenate([[0.0], t, [1.0]]))
        if np.any(dt <= 0):
            return np.inf, np.zeros(K)
        nodes = _solve_junctions(spaces, t, z0s, z1s)
        vel2 = np.array([np.sum((nodes[k + 1] - nodes[k]) ** 2) for k in range(K + 1)]) / dt**2
        # envelope theorem: d action / d t_k = jump of kinetic energy across junction k
        return float(0.5 * vel2 @ dt), 0.5 * (vel2[1:] - vel2[:-1])

    def to_t(u):
        e = np.exp(u - u.max())
        return np.cumsum(e / e.sum())[:-1]

    def obj(u):
        e = np.exp(u - u.max())
        p = e / e.sum()
        t = np.cumsum(p)[:-1]
        a, g = action_and_grad(t)
        if not np.isfinite(a):
            return a, np.zeros_like(u)
        # dt_i/du_k = p_k [k <= i] - t_i p_k
        below = np.arange(K + 1)[None, :] <= np.arange(K)[:, None]
        jac = p[None, :] * (below - t[:, None])
        return a, g @ jac

    def valid(t):
        return np.all(t > 0) and np.all(t < 1) and np.all(np.diff(t) > 0)

    best = None
    starts = [np.zeros(K + 1)] + [rng.normal(size=K + 1) for _ in range(n_starts - 1)]
    for u0 in starts:
        res = optimize.minimize(obj, u0, jac=True, method="BFGS", options={"gtol": 1e-13})
        t = to_t(res.x)
        if not valid(t):
            continue
        # polish the stationarity condition: equal kinetic energy across each junction
        sol = optimize.root(lambda tt: action_and_grad(tt)[1] if valid(tt) else np.full(K, 1e6), t, tol=1e-15)
        if valid(sol.x) and np.abs(action_and_grad(sol.x)[1]).max() <= np.abs(action_and_grad(t)[1]).max():
            t = sol.x
        a = action_and_grad(t)[0]
        if np.isfinite(a) and (best is None or a < best[0] - 1e-14):
            best = (a, t)
    return best


@dataclass
class VariationalResult:
    history: CollisionHistory
    action: float
    path: PiecewisePath
    candidates: list  # (action, chain) for every admissible chain tried


def variational_minimize(z0, z1, masses=None, seed: int = 0, tol: float = 1e-9) -> VariationalResult:
    """Least-action path in ``Z`` from ``z0 = (x0, 0)`` to ``z1 = (x1, y1)``.

    Enumerates every chain of coarsenings that ends in a stratum containing
    ``z1``, optimises the event times of each, and keeps the admissible
    minimiser (fewest events among ties).
    """
    z0 = np.asarray(z0, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    n = z0.size // 2
    if n > MAX_VARIATIONAL_N:
        raise ValueError(f"variational enumeration supports N <= {MAX_VARIATIONAL_N}, got {n}")
    masses = np.ones(n) if masses is None else np.asarray(masses, dtype=float)
    sqrt_m = np.sqrt(masses)
    z0s, z1s = _scaled(z0, sqrt_m), _scaled(z1, sqrt_m)
    if np.any(z0[n:] != 0):
        raise InconsistentHistory("z0 must have zero hidden coordinates")
    if np.any(np.diff(z0[:n]) < 0) or np.any(np.diff(z1[:n]) < -tol):
        raise ValueError("positions must be nondecreasing")
    rng = np.random.default_rng(seed)
    finals = _candidate_final_partitions(z1[:n], z1[n:], masses, tol)
    if not finals:
        raise InconsistentHistory("z1 lies in no stratum of Z")
    found = []
    for target in finals:
        for chain in _chains(n, target):
            if not chain:
                hist = CollisionHistory([], [])
                a, path = stratum_action(hist, z0, z1, masses)
            else:
                best = _optimize_times(chain, z0s, z1s, sqrt_m, rng)
                if best is None:
                    continue
                hist = CollisionHistory(chain, list(best[1]))
                a, path = stratum_action(hist, z0, z1, masses)
            if _admissible(path, n, tol):
                found.append((a, hist, path))
    if not found:
        raise InconsistentHistory("no admissible history connects z0 and z1")
    amin = min(f[0] for f in found)
    ties = [f for f in found if f[0] <= amin + 1e-10 * max(1.0, abs(amin))]
    a, hist, path = min(ties, key=lambda f: (f[1].n_events, f[0]))
    return VariationalResult(hist, a, path, [(f[0], f[1].partitions) for f in found])


# --------------------------------------------------------------------------
# continuum formulation


@dataclass(frozen=True)
class MonotoneProfile:
    values: np.ndarray

    def __post_init__(self):
        f = np.array(self.values, dtype=float).ravel()
        if np.any(np.diff(f) < 0):
            raise ValueError("profile must be nondecreasing")
        f.flags.writeable = False
        object.__setattr__(self, "values", f)

    @property
    def s(self) -> np.ndarray:
        n = self.values.size
        return (np.arange(n) + 0.5) / n


def monotone_projection(f, weights=None) -> np.ndarray:
    """Weighted L2 projection onto nondecreasing sequences (pool adjacent violators)."""
    f = np.asarray(f, dtype=float)
    w = np.ones_like(f) if weights is None else np.asarray(weights, dtype=float)
    return _kernels.pav(f, w)


def continuum_evolve(f0: MonotoneProfile, v0, t: float) -> MonotoneProfile:
    """Sticky evolution of a monotone profile: projection of free flight ``f0 + t v0``."""
    v0 = np.asarray(v0, dtype=float).ravel()
    if v0.shape != f0.values.shape:
        raise ValueError("velocity samples must match the profile")
    if f0.values.size < 64:
        raise ValueError("continuum profiles need at least 64 samples")
    return MonotoneProfile(monotone_projection(f0.values + t * v0))


def embed_particles(sys: StickySystem, samples_per_unit_mass: int = 16):
    """Step-profile embedding of a particle system with integer masses.

    Particle ``i`` occupies ``m_i * samples_per_unit_mass`` consecutive samples.
    """
    m = sys.masses
    if not np.allclose(m, np.round(m)):
        raise ValueError("embedding requires integer masses")
    counts = (np.round(m).astype(int)) * samples_per_unit_mass
    f = np.repeat(sys.positions, counts)
    v = np.repeat(sys.velocities, counts)
    return MonotoneProfile(f), v, counts


# --------------------------------------------------------------------------
# circle law


def _circumball(R: np.ndarray):
    """Smallest ball with all points of ``R`` on its boundary (center in their affine hull)."""
    k = R.shape[0]
    if k == 0:
        return None, -1.0
    p0 = R[0]
    if k == 1:
        return p0.copy(), 0.0
    A = R[1:] - p0
    # center c = p0 + A^T lam with |c - p_i| = |c - p0|  =>  2 A A^T lam = |A_i|^2
    G = 2.0 * A @ A.T
    b = np.sum(A * A, axis=1)
    try:
        lam = np.linalg.solve(G, b)
    except np.linalg.LinAlgError:
        return None, np.inf
    if not np.all(np.isfinite(lam)) or np.linalg.cond(G) > 1e12:
        return None, np.inf
    c = p0 + A.T @ lam
    return c, float(np.linalg.norm(c - p0))


def _welzl(P: list, R: list, d: int, eps: float):
    c, r = _circumball(np.array(R).reshape(len(R), d)) if R else (None, -1.0)
    if len(R) == d + 1:
        return c, r
    pts = list(P)
    i = 0
    while i < len(pts):
        p = pts[i]
        if c is None or np.linalg.norm(p - c) > r + eps:
            c, r = _welzl(pts[:i], R + [p], d, eps)
            # move-to-front
            pts.insert(0, pts.pop(i))
        i += 1
    return c, r


def shock_velocity(velocities) -> np.ndarray:
    """Center of the smallest ball covering the colliding velocities (d <= 3, at most 64 of them)."""
    V = np.atleast_2d(np.asarray(velocities, dtype=float))
    if V.size == 0:
        raise ValueError("empty velocity set")
    if V.ndim != 2 or V.shape[1] not in (1, 2, 3):
        raise ValueError("velocities must be d-vectors with d in {1, 2, 3}")
    if V.shape[0] > 64:
        raise ValueError("at most 64 velocities supported")
    d = V.shape[1]
    uniq = np.unique(V, axis=0)
    scale = max(1.0, np.abs(uniq).max())
    rng = np.random.default_rng(0)
    pts = [uniq[i] for i in rng.permutation(len(uniq))]
    c, _ = _welzl(pts, [], d, 1e-12 * scale)
    return c


def shock_velocity_bruteforce(velocities) -> tuple[np.ndarray, float]:
    """Smallest enclosing ball by checking every support subset of size <= d + 1."""
    V = np.atleast_2d(np.asarray(velocities, dtype=float))
    d = V.shape[1]
    scale = max(1.0, np.abs(V).max())
    best = (None, np.inf)
    for k in range(1, d + 2):
        for sub in itertools.combinations(range(V.shape[0]), k):
            c, r = _circumball(V[list(sub)])
            if c is None or r >= best[1]:
                continue
            if np.all(np.linalg.norm(V - c, axis=1) <= r + 1e-12 * scale):
                best = (c, r)
    return best
