"""Madelung transform and a split-step solver for the periodic 1D NLS.

The wave function is ``psi = sqrt(rho) exp(i theta / 2)``, so ``|psi|^2 = rho``
and ``arg psi = theta / 2``. The Schroedinger equation

    i psi_t = -psi_xx + V psi - f(|psi|^2) psi

maps under this transform to the barotropic system with ``v = theta_x``

    rho_t + (rho v)_x = 0
    v_t + v v_x + (2 V - 2 f(rho) - 2 (sqrt rho)_xx / sqrt rho)_x = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * np.pi
ZERO_FLOOR = 1e-6
RHO_FLOOR = 1e-12


class ZeroCrossingError(ValueError):
    """The wave function vanishes somewhere; the phase is undefined."""


def _wavenumbers(n: int, L: float) -> np.ndarray:
    return TWO_PI * np.fft.fftfreq(n, d=L / n)


def _ddx(a: np.ndarray, L: float, order: int = 1) -> np.ndarray:
    k = _wavenumbers(a.size, L)
    ah = np.fft.fft(a)
    if order % 2 and a.size % 2 == 0:
        k = k.copy()
        k[a.size // 2] = 0.0
    return np.real(np.fft.ifft((1j * k) ** order * ah)) if np.isrealobj(a) else np.fft.ifft((1j * k) ** order * ah)


@dataclass(frozen=True)
class WaveFunction1D:
    psi: np.ndarray
    L: float = TWO_PI

    def __post_init__(self):
        psi = np.array(self.psi, dtype=complex).ravel()
        if psi.size < 4:
            raise ValueError("need at least 4 samples")
        if not np.all(np.isfinite(psi)):
            raise ValueError("wave function must be finite")
        if self.L <= 0:
            raise ValueError("period must be positive")
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)

    @property
    def n(self) -> int:
        return self.psi.size

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.L / self.n

    def norm2(self) -> float:
        """``int |psi|^2 dx`` by the periodic trapezoid rule."""
        return float(np.sum(np.abs(self.psi) ** 2) * self.L / self.n)


@dataclass(frozen=True)
class MadelungPair:
    """Density and phase on a periodic grid.

    ``theta`` is a continuous branch: ``theta(x + L) = theta(x) + 4 pi winding``.
    """

    rho: np.ndarray
    theta: np.ndarray
    L: float = TWO_PI
    winding: int = 0

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).ravel()
        theta = np.array(self.theta, dtype=float).ravel()
        if rho.shape != theta.shape:
            raise ValueError("rho and theta need equal length")
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(theta))):
            raise ValueError("non-finite samples")
        if np.any(rho <= 0):
            raise ValueError("rho must be positive")
        for name, a in (("rho", rho), ("theta", theta)):
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.rho.size

    def velocity(self) -> np.ndarray:
        """``v = theta_x``; the winding contributes a uniform part."""
        slope = 4.0 * np.pi * self.winding / self.L
        x = np.arange(self.n) * self.L / self.n
        periodic = self.theta - slope * x
        return _ddx(periodic, self.L) + slope


def madelung_forward(pair: MadelungPair) -> WaveFunction1D:
    return WaveFunction1D(np.sqrt(pair.rho) * np.exp(0.5j * pair.theta), pair.L)


def madelung_inverse(wf: WaveFunction1D, floor: float = ZERO_FLOOR) -> MadelungPair:
    """Density and continuous phase branch; ``arg psi[0]`` is taken in ``(-pi, pi]``."""
    amp = np.abs(wf.psi)
    if amp.min() <= floor:
        raise ZeroCrossingError(f"|psi| drops to {amp.min():.3g}; phase undefined")
    phase = np.unwrap(np.angle(wf.psi))
    closing = np.angle(wf.psi[0] / wf.psi[-1])
    winding = int(round((phase[-1] + closing - phase[0]) / TWO_PI))
    return MadelungPair(amp**2, 2.0 * phase, wf.L, winding)


# --------------------------------------------------------------------------
# NLS model and integrator


@dataclass(frozen=True)
class NlsModel:
    """Potential samples and a nonlinearity ``f(rho)``.

    ``f`` is a polynomial (coefficients in increasing degree) or, when
    ``f_table`` is given, piecewise-linear interpolation of ``(rho, f)`` pairs.
    """

    V: np.ndarray
    f_poly: tuple = (0.0, 1.0)
    f_table: tuple | None = None

    def __post_init__(self):
        V = np.array(self.V, dtype=float).ravel()
        if not np.all(np.isfinite(V)):
            raise ValueError("potential must be finite")
        V.flags.writeable = False
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "f_poly", tuple(float(c) for c in self.f_poly))
        if self.f_table is not None:
            r, fv = (np.asarray(a, dtype=float) for a in self.f_table)
            if r.ndim != 1 or r.shape != fv.shape or r.size < 2 or np.any(np.diff(r) <= 0):
                raise ValueError("f_table needs increasing rho nodes and matching values")
            object.__setattr__(self, "f_table", (r, fv))

    def f(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        if self.f_table is not None:
            r, fv = self.f_table
            if rho.min() < r[0] or rho.max() > r[-1]:
                raise ValueError("rho outside the tabulated range of f")
            return np.interp(rho, r, fv)
        return np.polynomial.polynomial.polyval(rho, self.f_poly)

    def F(self, rho: np.ndarray) -> np.ndarray:
        """Antiderivative of ``f`` with ``F(0) = 0`` (table: from its first node)."""
        rho = np.asarray(rho, dtype=float)
        if self.f_table is not None:
            r, fv = self.f_table
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (fv[1:] + fv[:-1]) * np.diff(r))])
            i = np.clip(np.searchsorted(r, rho) - 1, 0, r.size - 2)
            frac = rho - r[i]
            slope = (fv[i + 1] - fv[i]) / (r[i + 1] - r[i])
            return cum[i] + fv[i] * frac + 0.5 * slope * frac**2
        return np.polynomial.polynomial.polyval(rho, np.polynomial.polynomial.polyint(self.f_poly))

    @classmethod
    def free(cls, n: int) -> "NlsModel":
        return cls(np.zeros(n), (0.0,))


def _check_model(wf: WaveFunction1D, model: NlsModel):
    if model.V.size != wf.n:
        raise ValueError("potential and wave function sizes differ")


def max_stable_dt(n: int, L: float) -> float:
    kmax = np.abs(_wavenumbers(n, L)).max()
    return np.pi / kmax**2


def nls_step(wf: WaveFunction1D, model: NlsModel, dt: float) -> WaveFunction1D:
    """Strang step: half kinetic, full potential and nonlinearity, half kinetic."""
    _check_model(wf, model)
    if not dt < max_stable_dt(wf.n, wf.L):
        raise ValueError("dt * kmax^2 must stay below pi")
    k2 = _wavenumbers(wf.n, wf.L) ** 2
    half = np.exp(-0.5j * k2 * dt)
    psi = np.fft.ifft(half * np.fft.fft(wf.psi))
    psi = psi * np.exp(-1j * (model.V - model.f(np.abs(psi) ** 2)) * dt)
    psi = np.fft.ifft(half * np.fft.fft(psi))
    return WaveFunction1D(psi, wf.L)


def nls_evolve(wf: WaveFunction1D, model: NlsModel, dt: float, n_steps: int, keep_every: int = 0):
    """Advance ``n_steps``; returns the final state and any kept states (including the start)."""
    kept = [wf] if keep_every else []
    for i in range(n_steps):
        wf = nls_step(wf, model, dt)
        if keep_every and (i + 1) % keep_every == 0:
            kept.append(wf)
    return wf, kept


def nls_energy(wf: WaveFunction1D, model: NlsModel) -> float:
    """``int |psi_x|^2 + V |psi|^2 - F(|psi|^2) dx``."""
    _check_model(wf, model)
    rho = np.abs(wf.psi) ** 2
    dpsi = _ddx(wf.psi, wf.L)
    dens = np.abs(dpsi) ** 2 + model.V * rho - model.F(rho)
    return float(np.sum(dens) * wf.L / wf.n)


# --------------------------------------------------------------------------
# hydrodynamic residuals


def quantum_pressure(rho: np.ndarray, L: float) -> np.ndarray:
    """``(sqrt rho)_xx / sqrt rho``, spectrally."""
    a = np.sqrt(rho)
    return _ddx(a, L, 2) / a


@dataclass
class Residuals:
    continuity: float
    momentum: float
    continuity_field: np.ndarray = field(repr=False)
    momentum_field: np.ndarray = field(repr=False)


def barotropic_residual(series: Sequence[MadelungPair], h: float, model: NlsModel) -> Residuals:
    """Max-norm residuals of the barotropic system at the middle of three equally spaced snapshots."""
    if len(series) != 3:
        raise ValueError("need three snapshots (t - h, t, t + h)")
    if h <= 0:
        raise ValueError("h must be positive")
    for p in series:
        if p.rho.min() < RHO_FLOOR:
            raise ValueError("rho below the positivity floor")
        if p.n != model.V.size:
            raise ValueError("model and pair sizes differ")
    prev, mid, nxt = series
    L = mid.L
    rho_t = (nxt.rho - prev.rho) / (2 * h)
    v_prev, v_mid, v_next = prev.velocity(), mid.velocity(), nxt.velocity()
    v_t = (v_next - v_prev) / (2 * h)
    cont = rho_t + _ddx(mid.rho * v_mid, L)
    pot = 2 * model.V - 2 * model.f(mid.rho) - 2 * quantum_pressure(mid.rho, L)
    mom = v_t + v_mid * _ddx(v_mid, L) + _ddx(pot, L)
    return Residuals(float(np.abs(cont).max()), float(np.abs(mom).max()), cont, mom)


def smooth_test_state(
    n: int = 128, L: float = TWO_PI, amplitude: float = 0.2, phase_amplitude: float = 0.3, seed: int = 0
) -> WaveFunction1D:
    """Zero-free smooth wave function with a few random low modes in amplitude and phase."""
    rng = np.random.default_rng(seed)
    x = np.arange(n) * L / n
    kk = TWO_PI / L * np.arange(1, 4)
    amp = 1.0 + amplitude * sum(rng.uniform(-1, 1) * np.cos(k * x + rng.uniform(0, TWO_PI)) for k in kk) / 3
    phase = phase_amplitude * sum(rng.uniform(-1, 1) * np.sin(k * x + rng.uniform(0, TWO_PI)) for k in kk)
    return WaveFunction1D(amp * np.exp(1j * phase), L)


@dataclass
class ConvergenceStudy:
    dts: np.ndarray
    continuity: np.ndarray
    momentum: np.ndarray

    def orders(self) -> tuple[np.ndarray, np.ndarray]:
        r = self.dts[:-1] / self.dts[1:]
        return (
            np.log(self.continuity[:-1] / self.continuity[1:]) / np.log(r),
            np.log(self.momentum[:-1] / self.momentum[1:]) / np.log(r),
        )

    def rows(self):
        oc, om = self.orders()
        out = []
        for i, dt in enumerate(self.dts):
            out.append(
                {
                    "dt": float(dt),
                    "continuity": float(self.continuity[i]),
                    "momentum": float(self.momentum[i]),
                    "order_continuity": float(oc[i - 1]) if i else float("nan"),
                    "order_momentum": float(om[i - 1]) if i else float("nan"),
                }
            )
        return out


def residual_convergence(
    wf0: WaveFunction1D, model: NlsModel, t: float, dts: Sequence[float]
) -> ConvergenceStudy:
    """Residuals of NLS-evolved data at time ``t`` for each ``dt``; snapshots spaced by ``dt``."""
    cont, mom = [], []
    for dt in dts:
        n = int(round(t / dt))
        if not np.isclose(n * dt, t, rtol=1e-10, atol=0):
            raise ValueError("each dt must divide t")
        wf, _ = nls_evolve(wf0, model, dt, n - 1)
        w1 = nls_step(wf, model, dt)
        w2 = nls_step(w1, model, dt)
        res = barotropic_residual([madelung_inverse(w) for w in (wf, w1, w2)], dt, model)
        cont.append(res.continuity)
        mom.append(res.momentum)
    return ConvergenceStudy(np.asarray(dts, dtype=float), np.array(cont), np.array(mom))


