from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoflow import euler2d as E
from geoflow.spectral import Grid2, VorticityField2D, dealias, enstrophy


def flood_fill_count(mask):
    """Reference periodic 4-connected component count by breadth-first search."""
    nx, ny = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    count = 0
    for i in range(nx):
        for j in range(ny):
            if mask[i, j] and not seen[i, j]:
                count += 1
                seen[i, j] = True
                q = deque([(i, j)])
                while q:
                    a, b = q.popleft()
                    for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        c, d = (a + da) % nx, (b + db) % ny
                        if mask[c, d] and not seen[c, d]:
                            seen[c, d] = True
                            q.append((c, d))
    return count


def convolution_rhs(w: VorticityField2D):
    """-(u . grad omega) by direct summation over Fourier-mode pairs."""
    g = w.grid
    n = g.nx
    phys = w.physical()
    c = np.fft.fft2(phys) / n**2
    k = np.fft.fftfreq(n, 1.0 / n)
    modes = [(a, b) for a in range(n) for b in range(n) if abs(c[a, b]) > 1e-14]
    out = np.zeros((n, n), dtype=complex)
    for a, b in modes:
        p = np.array([k[a], k[b]])
        p2 = p @ p
        # u_hat = (i p_y, -i p_x) omega_hat / |p|^2
        up = np.array([1j * p[1], -1j * p[0]]) * c[a, b] / p2
        for e, f in modes:
            q = np.array([k[e], k[f]])
            out[(a + e) % n, (b + f) % n] -= (up @ (1j * q)) * c[e, f]
    full = out * n**2
    return full[:, : n // 2 + 1] * g.dealias_mask


class TestRhs:
    def test_zero(self):
        w = VorticityField2D.zeros(Grid2(16, 16))
        assert not np.any(E.rhs(w))

    @pytest.mark.parametrize("k", [1, 3])
    def test_parallel_shear_is_steady(self, k):
        w = E.shear_flow(Grid2(64, 64), k)
        assert np.abs(E.rhs(w)).max() < 1e-13 * np.abs(w.omega_hat).max()

    @pytest.mark.parametrize("modes", [[(1, 0), (0, 2)], [(1, 1), (2, -1)], [(3, 1), (-1, 2), (2, 2)]])
    def test_matches_convolution_sum(self, modes):
        g = Grid2(16, 16)
        x, y = g.coords
        rng = np.random.default_rng(len(modes))
        om = sum(rng.normal() * np.cos(a * x + b * y + rng.uniform(0, 6)) for a, b in modes)
        w = VorticityField2D.from_physical(g, om)
        assert np.abs(E.rhs(w) - convolution_rhs(w)).max() < 1e-12 * g.nx * g.ny

    @pytest.mark.parametrize("seed", range(3))
    def test_conserves_quadratic_invariants(self, seed):
        # <rhs, omega> = 0 and <rhs, psi> = 0 for the dealiased Galerkin system
        g = Grid2(32, 32)
        w = E.random_vorticity(g, seed)
        r = E.rhs(w)
        pair = lambda a, b: np.vdot(g.to_physical(a), g.to_physical(b)).real
        scale = np.abs(r).max() * np.abs(w.omega_hat).max()
        assert abs(pair(r, w.omega_hat)) < 1e-9 * scale
        assert abs(pair(r, w.streamfunction_hat())) < 1e-9 * scale

    def test_hyperviscous_term(self):
        g = Grid2(32, 32)
        w = E.shear_flow(g, 2)
        r = E.rhs(w, nu_h=1e-3, hv_order=2)
        np.testing.assert_allclose(r, -1e-3 * g.k2**2 * w.omega_hat, atol=1e-12)


class TestStep:
    def test_zero_stays_zero(self):
        w = VorticityField2D.zeros(Grid2(16, 16))
        assert not np.any(E.step_rk4(w, 0.1).omega_hat)

    def test_richardson_order(self):
        g = Grid2(32, 32)
        w0 = E.random_vorticity(g, 7, k0=3.0)

        def advance(dt):
            w = w0
            for _ in range(int(round(0.8 / dt))):
                w = E.step_rk4(w, dt)
            return w.omega_hat

        a, b, c = advance(0.04), advance(0.02), advance(0.01)
        order = np.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))
        assert order > 3.9

    def test_cfl_violation(self):
        g = Grid2(32, 32)
        w = E.random_vorticity(g, 0)
        with pytest.raises(E.CFLViolation, match="CFL"):
            E.step_rk4(w, 1.0, cfl_max=0.5)

    def test_mean_mode_pinned(self):
        w = E.step_rk4(E.random_vorticity(Grid2(32, 32), 1), 0.01)
        assert w.omega_hat[0, 0] == 0

    def test_hyperviscosity_dissipates(self):
        g = Grid2(32, 32)
        cfg = E.EulerConfig(g, dt=0.01, t_end=0.5, nu_h=1e-6, output_every=5)
        s = E.run(cfg, E.random_vorticity(g, 3)).series
        assert np.all(np.diff(s.array("Omega")) <= 1e-12)
        assert np.all(np.diff(s.array("E")) <= 1e-12)


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [dict(dt=0.0), dict(dt=-1.0), dict(nu_h=-1.0), dict(output_every=0), dict(hv_order=0)]
    )
    def test_invalid(self, kw):
        base = dict(grid=Grid2(16, 16), dt=0.1, t_end=1.0)
        base.update(kw)
        with pytest.raises(ValueError):
            E.EulerConfig(**base)

    def test_grid_mismatch(self):
        cfg = E.EulerConfig(Grid2(16, 16), dt=0.1, t_end=0.1)
        with pytest.raises(ValueError):
            E.run(cfg, VorticityField2D.zeros(Grid2(32, 32)))


class TestRun:
    def test_deterministic(self):
        g = Grid2(32, 32)
        cfg = E.EulerConfig(g, dt=0.02, t_end=0.2, output_every=2)
        a = E.run(cfg, E.random_vorticity(g, 5)).series
        b = E.run(cfg, E.random_vorticity(g, 5)).series
        assert list(a.rows()) == list(b.rows())

    def test_output_cadence_and_snapshots(self):
        g = Grid2(16, 16)
        cfg = E.EulerConfig(g, dt=0.05, t_end=0.5, output_every=3, snapshot_every=5)
        res = E.run(cfg, E.shear_flow(g))
        assert res.series.t == pytest.approx([0.0, 0.15, 0.3, 0.45, 0.5])
        assert [t for t, _ in res.snapshots] == pytest.approx([0.0, 0.25, 0.5])

    def test_shear_enstrophy_short(self):
        g = Grid2(32, 32)
        cfg = E.EulerConfig(g, dt=0.04, t_end=2.0, output_every=10)
        om = E.run(cfg, E.shear_flow(g)).series.array("Omega")
        assert np.abs(om / om[0] - 1).max() < 1e-12

    def test_random_run_conserves_energy(self):
        g = Grid2(32, 32)
        cfg = E.EulerConfig(g, dt=0.01, t_end=1.0, output_every=20)
        s = E.run(cfg, E.random_vorticity(g, 2, k0=3.0)).series
        for name in ("E", "Omega"):
            a = s.array(name)
            assert np.abs(a / a[0] - 1).max() < 1e-6


class TestSteadyFit:
    def test_cosine(self):
        g = Grid2(32, 32)
        x, y = g.coords
        fit = E.steady_functional_fit(VorticityField2D.from_streamfunction(g, np.cos(y)))
        assert fit.residual < 1e-12
        s = np.linspace(-1, 1, 11)
        np.testing.assert_allclose(fit.F(s), -s, atol=1e-12)

    def test_two_mode_eigenfunction(self):
        g = Grid2(32, 32)
        x, y = g.coords
        psi = np.cos(3 * x) + np.sin(3 * y)
        fit = E.steady_functional_fit(VorticityField2D.from_streamfunction(g, psi))
        assert fit.residual < 1e-12
        assert fit.F(np.array([0.5]))[0] == pytest.approx(-4.5)

    @pytest.mark.parametrize("seed", range(3))
    def test_random_is_not_steady(self, seed):
        fit = E.steady_functional_fit(E.random_vorticity(Grid2(64, 64), seed))
        assert fit.residual > 0.1

    def test_zero_is_degenerate(self):
        with pytest.raises(E.DegenerateFieldError):
            E.steady_functional_fit(VorticityField2D.zeros(Grid2(16, 16)))


def gaussian(g, x0, y0, sigma, amp):
    x, y = g.coords
    dx = (x - x0 + np.pi) % (2 * np.pi) - np.pi
    dy = (y - y0 + np.pi) % (2 * np.pi) - np.pi
    return amp * np.exp(-(dx**2 + dy**2) / (2 * sigma**2))


class TestBlobs:
    def test_opposite_gaussians(self):
        g = Grid2(128, 128)
        sigma = 0.3
        om = gaussian(g, 1.5, 1.5, sigma, 1.0) - gaussian(g, 4.5, 4.5, sigma, 1.0)
        b = E.detect_blobs(VorticityField2D.from_physical(g, om, remove_mean=True))
        assert b.count == 2
        # circulation inside |omega| > 0.2 max of a Gaussian: 2 pi sigma^2 (1 - 0.2)
        expect = 2 * np.pi * sigma**2 * 0.8
        assert sorted(b.circulation) == pytest.approx([-expect, expect], rel=0.05)
        assert b.total_circulation == pytest.approx(0.0, abs=1e-12)

    def test_single_disk(self):
        g = Grid2(64, 64)
        x, y = g.coords
        disk = ((x - 3) ** 2 + (y - 3) ** 2 < 1).astype(float)
        b = E.detect_blobs(VorticityField2D.from_physical(g, disk, remove_mean=True), 0.5)
        assert b.count == 1
        assert b.centroid[0] == pytest.approx([3.0, 3.0], abs=0.1)

    def test_merged_across_seam(self):
        g = Grid2(64, 64)
        om = gaussian(g, 0.0, 0.0, 0.4, 1.0)
        b = E.detect_blobs(VorticityField2D.from_physical(g, om, remove_mean=True))
        assert b.count == 1
        c = b.centroid[0]
        assert min(c[0], 2 * np.pi - c[0]) < 1e-6 and min(c[1], 2 * np.pi - c[1]) < 1e-6

    def test_checkerboard_matches_flood_fill(self):
        g = Grid2(64, 64)
        x, y = g.coords
        om = np.sin(8 * x) * np.sin(8 * y)
        w = VorticityField2D.from_physical(g, om)
        b = E.detect_blobs(w, 0.5)
        expect = flood_fill_count(np.abs(w.physical()) > 0.5 * np.abs(w.physical()).max())
        assert b.count == expect == 256

    @pytest.mark.parametrize("threshold", [0.0, 1.0, -0.1])
    def test_bad_threshold(self, threshold):
        with pytest.raises(ValueError):
            E.detect_blobs(E.shear_flow(Grid2(16, 16)), threshold)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.05, 0.9))
    def test_count_matches_flood_fill(self, seed, thr):
        g = Grid2(32, 32)
        w = E.random_vorticity(g, seed, k0=4.0)
        om = w.physical()
        b = E.detect_blobs(w, thr)
        assert b.count == flood_fill_count(np.abs(om) > thr * np.abs(om).max())
        assert abs(b.total_circulation) < 1e-10


class TestTracers:
    def test_interpolation_on_grid_points(self):
        g = Grid2(32, 32)
        w = E.random_vorticity(g, 4)
        x, y = g.coords
        pts = np.stack([x.ravel()[::37], y.ravel()[::37]], axis=1)
        vals = E.evaluate_at_points(g, w.omega_hat, pts)
        np.testing.assert_allclose(vals, w.physical().ravel()[::37], atol=1e-12)

    def test_uniform_flow_translation(self):
        g = Grid2(16, 16)
        u_hat = np.zeros(g.spectral_shape, complex)
        u_hat[0, 0] = g.nx * g.ny  # u = 1
        v_hat = np.zeros_like(u_hat)
        traj = E.advect_in_velocity(g, u_hat, v_hat, [[0.1, 0.2]], 0.1, 10)
        np.testing.assert_allclose(traj[-1, 0], [1.1, 0.2], atol=1e-12)

    @pytest.mark.parametrize("frozen", [True, False])
    def test_shear_streamline(self, frozen):
        g = Grid2(32, 32)
        w = E.shear_flow(g, 1)
        seeds = np.array([[0.3, 0.7], [2.0, 4.0]])
        traj = E.advect_tracers(w, seeds, 0.05, 40, frozen=frozen)
        psi0 = np.cos(seeds[:, 1])
        np.testing.assert_allclose(np.cos(traj[-1, :, 1]), psi0, atol=1e-12)
        # psi = cos(y) gives u = psi_y = -sin(y)
        np.testing.assert_allclose(traj[-1, :, 0] - seeds[:, 0], -2.0 * np.sin(seeds[:, 1]), atol=1e-10)

    def test_streamline_error_is_fourth_order(self):
        g = Grid2(32, 32)
        x, y = g.coords
        w = VorticityField2D.from_streamfunction(g, np.cos(x) * np.cos(y) + 0.3 * np.sin(2 * x))
        seed = np.array([[0.4, 0.9]])
        psi_at = lambda p: np.cos(p[..., 0]) * np.cos(p[..., 1]) + 0.3 * np.sin(2 * p[..., 0])
        errs = []
        for n in (20, 40):
            traj = E.advect_tracers(w, seed, 2.0 / n, n, frozen=True)
            errs.append(abs(psi_at(traj[-1, 0]) - psi_at(seed[0])))
        assert np.log2(errs[0] / errs[1]) > 3.5


class TestGradientGrowth:
    def test_exponential_fit(self):
        t = np.linspace(0, 5, 21)
        fit = E.gradient_growth(t, 3.0 * np.exp(0.7 * t))
        assert fit.rate == pytest.approx(0.7)
        assert fit.intercept == pytest.approx(np.log(3.0))
        assert fit.r_squared == pytest.approx(1.0)

    def test_too_short(self):
        with pytest.raises(ValueError):
            E.gradient_growth([0.0], [1.0])

    def test_max_gradient_closed_form(self):
        g = Grid2(32, 32)
        w = E.shear_flow(g, 2)  # omega = 4 cos(2y)
        assert E.max_gradient(w) == pytest.approx(8.0, rel=1e-3)


def test_random_vorticity_unit_energy_and_band():
    g = Grid2(64, 64)
    w = E.random_vorticity(g, 11)
    from geoflow.spectral import energy2d

    assert energy2d(w) == pytest.approx(1.0, rel=1e-12)
    assert np.array_equal(dealias(w).omega_hat, w.omega_hat)
    assert enstrophy(w) > 0
