"""SU(N) sine-bracket truncation of 2D Euler on the torus.

Construction (N odd, ``M = (N - 1) / 2``, ``q = exp(2 pi i / N)``)::

    g = diag(conj(q)^j)          clock
    h e_j = e_{j+1 mod N}        shift,   g h = conj(q) h g
    T_m = exp(i pi m1 m2 / N) g^m1 h^m2

so that ``T_m^dagger = T_{-m}`` and
``[T_m, T_n] = -2i sin(pi (m x n) / N) T_{m+n}`` with ``m x n = m1 n2 - m2 n1``.

A mean-zero field ``omega = sum_k c_k exp(i k.x)`` with ``|k_i| <= M`` maps to
the skew-Hermitian traceless matrix ``W = i sum_k c_k T_k``. The quantized
Laplacian is diagonal on the ``T_k`` with eigenvalue ``-|k|^2`` (symmetric
representatives), and the dynamics is ``dW/dtau = [P, W]`` with
``Laplacian_N P = W``. For large N this reproduces ``d omega/dt = {psi, omega}``
with physical time ``t = 2 pi tau / N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .spectral import Grid2, VorticityField2D


class ConvergenceError(RuntimeError):
    pass


def _check_n(N: int) -> int:
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 3 or N % 2 == 0:
        raise ValueError(f"N must be an odd integer >= 3, got {N!r}")
    return int(N)


def symmetric_rep(m, N: int):
    """Representative of ``m mod N`` in ``[-(N-1)/2, (N-1)/2]``."""
    return (np.asarray(m) + (N - 1) // 2) % N - (N - 1) // 2


@lru_cache(maxsize=32)
def _tables(N: int):
    s = symmetric_rep(np.arange(N), N)
    m1, m2 = np.meshgrid(s, s, indexing="ij")
    phase = np.exp(1j * np.pi * m1 * m2 / N)
    lap = -(m1**2 + m2**2).astype(float)
    inv_lap = np.zeros_like(lap)
    nz = lap != 0
    inv_lap[nz] = 1.0 / lap[nz]
    a = np.arange(N)[:, None]
    cols = (a - np.arange(N)[None, :]) % N
    for arr in (phase, lap, inv_lap, cols):
        arr.flags.writeable = False
    return phase, lap, inv_lap, cols


def clock_shift(N: int) -> tuple[np.ndarray, np.ndarray]:
    N = _check_n(N)
    q = np.exp(2j * np.pi / N)
    g = np.diag(np.conj(q) ** np.arange(N))
    h = np.roll(np.eye(N), 1, axis=0)
    return g, h


def basis_matrix(N: int, k, reduce: bool = True) -> np.ndarray:
    """``T_k`` built from clock and shift powers.

    With ``reduce=True`` (default) ``k`` is first mapped to its symmetric
    representative; ``reduce=False`` uses the integers as given, which is the
    form in which the product rule holds without wraparound signs.
    """
    N = _check_n(N)
    k = np.asarray(k, dtype=int)
    if k.shape != (2,):
        raise ValueError("k must be an integer pair")
    if np.all(k % N == 0):
        raise ValueError("T_k is undefined for k = 0 mod N")
    if reduce:
        k = symmetric_rep(k, N)
    g, h = clock_shift(N)
    gp = np.linalg.matrix_power(g, int(k[0]) % N)
    hp = np.linalg.matrix_power(h, int(k[1]) % N)
    return np.exp(1j * np.pi * k[0] * k[1] / N) * (gp @ hp)


def structure_constant(N: int, k, l) -> float:
    """Sine-bracket coefficient scaled to compare with the Poisson constant ``k x l``."""
    c = k[0] * l[1] - k[1] * l[0]
    return N / np.pi * np.sin(np.pi * c / N)


# --------------------------------------------------------------------------
# coefficient <-> matrix maps (O(N^2 log N))


def coeffs_to_matrix(C: np.ndarray) -> np.ndarray:
    """``W = i sum_m C[m mod N] T_m`` for an ``(N, N)`` coefficient table."""
    N = C.shape[0]
    phase, _, _, cols = _tables(N)
    F = 1j * np.fft.fft(C * phase, axis=0)
    W = np.empty((N, N), dtype=complex)
    W[np.arange(N)[:, None], cols] = F
    return W


def matrix_to_coeffs(W: np.ndarray) -> np.ndarray:
    N = W.shape[0]
    phase, _, _, cols = _tables(N)
    F = W[np.arange(N)[:, None], cols]
    return np.fft.ifft(F, axis=0) / 1j * np.conj(phase)


@dataclass(frozen=True)
class ZeitlinState:
    N: int
    W: np.ndarray = field(repr=False)

    def __post_init__(self):
        N = _check_n(self.N)
        W = np.array(self.W, dtype=complex)
        if W.shape != (N, N):
            raise ValueError(f"W must be {N}x{N}")
        scale = max(1.0, np.abs(W).max(initial=0.0))
        if np.abs(W + W.conj().T).max() > 1e-10 * scale:
            raise ValueError("W must be skew-Hermitian")
        if abs(np.trace(W)) > 1e-10 * scale * N:
            raise ValueError("W must be traceless")
        W.flags.writeable = False
        object.__setattr__(self, "W", W)

    @classmethod
    def random(cls, N: int, seed: int, decay: float = 2.0) -> "ZeitlinState":
        """Random state with coefficients decaying like ``|k|^-decay``."""
        N = _check_n(N)
        rng = np.random.default_rng(seed)
        _, lap, _, _ = _tables(N)
        kk = np.sqrt(-lap)
        amp = np.where(kk > 0, (1.0 + kk) ** -decay, 0.0)
        C = amp * (rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N)))
        # Hermitian symmetry c_{-k} = conj(c_k) makes W skew-Hermitian
        neg = (-np.arange(N)) % N
        C = 0.5 * (C + np.conj(C[neg][:, neg]))
        return cls(N, project(coeffs_to_matrix(C)))


def project(W: np.ndarray) -> np.ndarray:
    """Nearest traceless skew-Hermitian matrix."""
    W = 0.5 * (W - W.conj().T)
    return W - (np.trace(W) / W.shape[0]) * np.eye(W.shape[0])


def to_matrix(w: VorticityField2D, N: int, tol: float = 1e-12) -> ZeitlinState:
    """Map a band-limited field (``|k_i| <= (N-1)/2``, 2 pi-periodic) onto ``W``."""
    N = _check_n(N)
    g = w.grid
    if not (np.isclose(g.lx, 2 * np.pi) and np.isclose(g.ly, 2 * np.pi)):
        raise ValueError("field must live on the 2 pi torus")
    M = (N - 1) // 2
    full = np.fft.fft2(w.physical()) / (g.nx * g.ny)
    ix = np.fft.fftfreq(g.nx, 1.0 / g.nx)[:, None]
    iy = np.fft.fftfreq(g.ny, 1.0 / g.ny)[None, :]
    outside = (np.abs(ix) > M) | (np.abs(iy) > M)
    scale = max(np.abs(full).max(), 1e-300)
    if np.abs(full[outside]).max(initial=0.0) > tol * scale:
        raise ValueError(f"field exceeds the band |k_i| <= {M} representable at N={N}")
    s = symmetric_rep(np.arange(N), N)
    C = full[np.ix_(s % g.nx, s % g.ny)]
    C[0, 0] = 0.0
    return ZeitlinState(N, project(coeffs_to_matrix(C)))


def default_grid(N: int) -> Grid2:
    n = 16
    while n <= N:
        n *= 2
    return Grid2(n, n)


def from_matrix(state: ZeitlinState, grid: Grid2 | None = None) -> VorticityField2D:
    N = state.N
    grid = default_grid(N) if grid is None else grid
    C = matrix_to_coeffs(state.W)
    s = symmetric_rep(np.arange(N), N)
    fits_x = np.abs(s) < grid.nx // 2
    fits_y = np.abs(s) < grid.ny // 2
    dropped = ~(fits_x[:, None] & fits_y[None, :])
    if np.abs(C[dropped]).max(initial=0.0) > 1e-12 * max(np.abs(C).max(), 1e-300):
        raise ValueError("grid too coarse for the modes present in W")
    full = np.zeros((grid.nx, grid.ny), dtype=complex)
    full[np.ix_(s[fits_x] % grid.nx, s[fits_y] % grid.ny)] = C[np.ix_(fits_x, fits_y)]
    phys = np.real(np.fft.ifft2(full)) * grid.nx * grid.ny
    return VorticityField2D.from_physical(grid, phys, remove_mean=True)


# --------------------------------------------------------------------------
# dynamics


def stream_matrix(W: np.ndarray) -> np.ndarray:
    """Solve ``Laplacian_N P = W``."""
    _, _, inv_lap, _ = _tables(W.shape[0])
    return coeffs_to_matrix(matrix_to_coeffs(W) * inv_lap)


def zeitlin_rhs(W: np.ndarray) -> np.ndarray:
    P = stream_matrix(W)
    return P @ W - W @ P


def energy(W: np.ndarray) -> float:
    """Quantized kinetic energy, normalised to match ``1/2 int psi omega`` as N grows."""
    N = W.shape[0]
    P = stream_matrix(W)
    return float(np.real(2 * np.pi**2 / N * np.trace(P @ W)))


def casimirs(W: np.ndarray, orders=(2, 3, 4, 5)) -> dict[int, float]:
    """``tr(A^k)`` for the Hermitian ``A = W / i``."""
    A = -1j * W
    out = {}
    Ak = A
    for k in range(1, max(orders) + 1):
        if k > 1:
            Ak = Ak @ A
        if k in orders:
            out[k] = float(np.real(np.trace(Ak)))
    return out


def step_isospectral(state: ZeitlinState, dt: float, tol: float = 1e-12, max_iter: int = 50) -> ZeitlinState:
    """Isospectral midpoint step ``W' = Q W Q^dagger`` with a Cayley factor ``Q``.

    The midpoint matrix solves ``Wt = W + dt/2 [B, Wt] + dt^2/4 B Wt B`` with
    ``B = P(Wt)`` by fixed-point iteration.
    """
    W = state.W
    N = state.N
    Wt = W.copy()
    h = 0.5 * dt
    scale = max(np.linalg.norm(W), 1e-300)
    for _ in range(max_iter):
        B = stream_matrix(Wt)
        BW = B @ Wt
        new = W + h * (BW - Wt @ B) + h * h * (BW @ B)
        diff = np.linalg.norm(new - Wt)
        Wt = new
        if not np.isfinite(diff) or diff > 1e8 * scale:
            raise ConvergenceError(f"isospectral fixed point diverged (dt={dt})")
        if diff <= tol * scale:
            break
    else:
        raise ConvergenceError(f"isospectral fixed point did not converge in {max_iter} iterations (dt={dt})")
    B = stream_matrix(Wt)
    I = np.eye(N)
    Q = np.linalg.solve((I - h * B).T, (I + h * B).T).T  # (I + hB)(I - hB)^-1
    return ZeitlinState(N, project(Q @ W @ Q.conj().T))


def step_rk4(state: ZeitlinState, dt: float) -> ZeitlinState:
    W = state.W
    k1 = zeitlin_rhs(W)
    k2 = zeitlin_rhs(W + 0.5 * dt * k1)
    k3 = zeitlin_rhs(W + 0.5 * dt * k2)
    k4 = zeitlin_rhs(W + dt * k3)
    return ZeitlinState(state.N, project(W + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)))


STEPPERS = {"isospectral": step_isospectral, "rk4": step_rk4}


def run(state: ZeitlinState, dt: float, n_steps: int, output_every: int = 1, method: str = "isospectral"):
    """Integrate and return ``(rows, final)``; rows are ``(t, energy, tr2, tr3, tr4, tr5)``."""
    if method not in STEPPERS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(STEPPERS)}")
    if output_every < 1:
        raise ValueError("output_every must be >= 1")
    step = STEPPERS[method]
    rows = []

    def record(t, s):
        c = casimirs(s.W)
        rows.append((t, energy(s.W), c[2], c[3], c[4], c[5]))

    record(0.0, state)
    for i in range(1, n_steps + 1):
        state = step(state, dt)
        if i % output_every == 0 or i == n_steps:
            record(i * dt, state)
    return rows, state
