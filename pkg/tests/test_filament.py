import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation

from geoflow import filament as F


def ellipse_uniform_arclength(a, b, m):
    """Ellipse sampled at uniform arclength, with the analytic curvature at each sample."""
    speed = lambda t: np.hypot(a * np.sin(t), b * np.cos(t))
    total = quad(speed, 0, 2 * np.pi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    ts = [0.0]
    for j in range(1, m):
        target = j * total / m
        ts.append(brentq(lambda t: quad(speed, 0, t, epsabs=1e-13, epsrel=1e-13, limit=200)[0] - target, 0, 2 * np.pi, xtol=1e-15))
    t = np.array(ts)
    kappa = a * b / (a**2 * np.sin(t) ** 2 + b**2 * np.cos(t) ** 2) ** 1.5
    return F.Filament(np.c_[a * np.cos(t), b * np.sin(t), np.zeros(m)]), kappa


def helix_exact(a, b, m, t):
    """Screw motion of the helix: rotation about z and translation along z."""
    c2 = a * a + b * b
    kappa = a / c2
    c = np.sqrt(c2)
    omega = -b * kappa / (c * a)
    vz = a * kappa / c
    u = 2 * np.pi * np.arange(m) / m
    return np.c_[a * np.cos(u + omega * t), a * np.sin(u + omega * t), b * u + vz * t]


class TestStencils:
    @pytest.mark.parametrize("deriv", [1, 2, 3])
    def test_polynomial_exactness(self, deriv):
        offs, w = F.centered_weights(deriv)
        for p in range(F.FD_ORDER + deriv):
            expected = np.prod(np.arange(p - deriv + 1, p + 1)) * 0.0**(p - deriv) if p >= deriv else 0.0
            assert np.dot(w, offs.astype(float) ** p) == pytest.approx(expected, abs=1e-9)


class TestFilament:
    def test_validation(self):
        with pytest.raises(ValueError):
            F.Filament(np.zeros((8, 3)))
        pts = F.circle(1.0, 32).points.copy()
        pts[5] = pts[4]
        with pytest.raises(F.DegenerateEdgeError):
            F.Filament(pts)

    @pytest.mark.parametrize("R", [0.5, 1.0, 3.0])
    def test_circle_length_and_impulse(self, R):
        c = F.circle(R, 128)
        assert c.length() == pytest.approx(2 * np.pi * R, rel=1e-13)
        np.testing.assert_allclose(c.impulse(), [0, 0, np.pi * R**2], atol=1e-12)


class TestBinormalRhs:
    @pytest.mark.parametrize("R", [0.5, 2.0, 10.0, 1e4])
    def test_circle_velocity(self, R):
        v = F.binormal_rhs(F.circle(R, 64))
        np.testing.assert_allclose(v, np.tile([0, 0, 1 / R], (64, 1)), atol=1e-12 / R)

    def test_straight_line_at_rest(self):
        z = np.linspace(0, 10, 64, endpoint=False)
        line = F.Filament(np.c_[np.zeros(64), np.zeros(64), z], shift=(0, 0, 10))
        np.testing.assert_array_equal(F.binormal_rhs(line), 0.0)

    def test_orthogonal_to_tangent(self):
        kn = F.random_knot(1)
        v = F.binormal_rhs(kn)
        t = kn.derivative(1)
        cos = np.sum(v * t, axis=1) / (np.linalg.norm(v, axis=1) * np.linalg.norm(t, axis=1))
        assert np.abs(cos).max() < 1e-12

    def test_reversal_flips_velocity(self):
        kn = F.random_knot(2)
        rev = kn.reversed()
        v = F.binormal_rhs(kn)
        vr = F.binormal_rhs(rev)
        # vertex j of the reversal is vertex -j of the original
        np.testing.assert_allclose(vr, -np.roll(v[::-1], 1, axis=0), atol=1e-12)


class TestStep:
    def test_circle_translation(self):
        c = F.circle(1.0, 256)
        out = F.run(c, 1e-4, 1000).final
        r = np.linalg.norm(out.points[:, :2], axis=1)
        assert np.abs(r - 1.0).max() < 1e-8
        assert out.points[:, 2].mean() / 0.1 == pytest.approx(1.0, abs=1e-6)

    def test_reversed_circle_mirrors(self):
        c = F.circle(0.8, 64)
        a = F.run(c, 2e-3, 50).final
        b = F.run(c.reversed(), 2e-3, 50).final
        mirrored = a.points * [1, 1, -1]
        np.testing.assert_allclose(b.points, np.roll(mirrored[::-1], 1, axis=0), atol=1e-13)

    def test_helix_screw_motion(self):
        a, b, m, T = 1.0, 0.5, 64, 1.0
        fil = F.helix(a, b, 1, m)
        n = int(np.ceil(T / (0.9 * F.stable_dt(fil))))
        out = F.run(fil, T / n, n).final
        np.testing.assert_allclose(out.points, helix_exact(a, b, m, T), atol=1e-7)
        phi = np.unwrap(np.arctan2(out.points[:, 1], out.points[:, 0]))
        pitch = np.polyfit(phi, out.points[:, 2], 1)[0]
        assert pitch == pytest.approx(b, abs=1e-9)

    @pytest.mark.parametrize("seed", range(2))
    def test_knot_length_and_impulse(self, seed):
        kn = F.random_knot(seed, m=128)
        n = int(np.ceil(0.5 / (0.9 * F.stable_dt(kn))))
        res = F.run(kn, 0.5 / n, n)
        assert np.abs(res.lengths - res.lengths[0]).max() / res.lengths[0] < 0.5e-6
        I = res.impulses
        assert np.abs(I - I[0]).max() / np.linalg.norm(I[0]) < 0.5e-6
        assert len(res.rows()) == n + 1

    def test_curvature_bound(self):
        c = F.circle(0.1, 64)
        with pytest.raises(ValueError):
            F.step_rk4(c, 1e-3)

    def test_dispersive_bound(self):
        with pytest.raises(ValueError):
            F.step_rk4(F.circle(1.0, 256), 1e-3)

    def test_resolution_loss(self):
        t = np.sort(np.r_[np.linspace(0, np.pi, 40, endpoint=False), np.linspace(np.pi, 2 * np.pi, 8, endpoint=False)])
        fil = F.Filament(np.c_[np.cos(t), np.sin(t), np.zeros_like(t)])
        with pytest.raises(F.ResolutionError):
            F.step_rk4(fil, 1e-5)

    def test_reparametrize_uniform(self):
        t = np.linspace(0, 2 * np.pi, 80, endpoint=False)
        t = t + 0.2 * np.sin(t)
        fil = F.Filament(np.c_[2 * np.cos(t), np.sin(t), 0.3 * np.sin(2 * t)])
        out = F.reparametrize(fil)
        ds = np.diff(np.r_[out.arclength(), out.length()])
        assert np.ptp(ds) / ds.mean() < 1e-5
        np.testing.assert_array_equal(out.points[0], fil.points[0])


class TestHasimoto:
    @pytest.mark.parametrize("R", [0.5, 2.0])
    def test_circle(self, R):
        psi = F.hasimoto(F.circle(R, 64)).psi
        np.testing.assert_allclose(psi, 1 / R, atol=1e-12)

    @pytest.mark.parametrize("a,b,turns", [(1.0, 0.5, 1), (0.7, 1.2, 2), (2.0, 0.3, 1)])
    def test_helix(self, a, b, turns):
        fil = F.helix(a, b, turns, 256)
        k0, t0 = a / (a * a + b * b), b / (a * a + b * b)
        s = np.sqrt(a * a + b * b) * 2 * np.pi * turns * np.arange(256) / 256
        np.testing.assert_allclose(F.hasimoto(fil).psi, k0 * np.exp(1j * t0 * s), atol=1e-8)

    def test_ellipse(self):
        errs = []
        for m in (128, 256):
            fil, kappa = ellipse_uniform_arclength(2.0, 1.0, m)
            psi = F.hasimoto(fil).psi
            assert np.abs(psi.imag).max() == 0.0
            errs.append(np.abs(psi.real / kappa - 1).max())
        assert errs[1] < 5e-8
        assert np.log2(errs[0] / errs[1]) > 7.0

    def test_vanishing_curvature(self):
        z = np.linspace(0, 10, 64, endpoint=False)
        line = F.Filament(np.c_[np.zeros(64), np.zeros(64), z], shift=(0, 0, 10))
        with pytest.raises(F.VanishingCurvatureError):
            F.hasimoto(line)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_rigid_motion_invariance(self, seed):
        rng = np.random.default_rng(seed)
        kn = F.random_knot(seed % 5, m=128)
        R = Rotation.random(random_state=seed).as_matrix()
        moved = F.rigid_motion(kn, R, rng.normal(size=3))
        a, b = F.hasimoto(kn).psi, F.hasimoto(moved).psi
        np.testing.assert_allclose(np.abs(b), np.abs(a), rtol=1e-9)
        phase = np.angle(b / a)
        assert np.ptp(np.unwrap(phase)) < 1e-8

    def test_nls_residual_reported(self):
        c = F.random_knot(0, m=128)
        dt = 0.5 * F.stable_dt(c)
        frames = F.run(c, dt, 2, keep_frames=True).frames
        r = F.hasimoto_nls_residual(frames, dt)
        assert np.isfinite(r)
