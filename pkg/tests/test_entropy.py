import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoflow import entropy as E
from geoflow import euler2d
from geoflow.spectral import Grid2, VorticityField2D


def brute_min_cover_1d(x, eps):
    """Exact minimal eps-ball cover on the line (greedy from the left is optimal)."""
    x = np.sort(x)
    count, i = 0, 0
    while i < x.size:
        count += 1
        right = x[i] + 2 * eps
        while i < x.size and x[i] <= right + 1e-15:
            i += 1
    return count


class TestFiniteEntropy:
    def test_point_mass(self):
        assert E.finite_entropy([1.0, 0.0, 0.0]) == 0.0

    @pytest.mark.parametrize("n", [1, 2, 7, 64, 1000])
    def test_uniform(self, n):
        assert E.finite_entropy(np.full(n, 1.0 / n)) == pytest.approx(np.log2(n), abs=1e-12)

    def test_half_quarter_quarter(self):
        assert E.finite_entropy([0.5, 0.25, 0.25]) == pytest.approx(1.5, abs=1e-15)

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            E.finite_entropy([1.5, -0.5])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=50).filter(lambda v: sum(v) > 1e-3))
    def test_bounds(self, raw):
        w = np.array(raw) / np.sum(raw)
        w /= w.sum()
        h = E.finite_entropy(w)
        assert -1e-12 <= h <= np.log2(len(w)) + 1e-12


class TestEnsemble:
    def test_weight_sum(self):
        with pytest.raises(ValueError):
            E.WeightedEnsemble(np.zeros((3, 2)), [0.5, 0.5, 0.1])

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            E.WeightedEnsemble.uniform(np.zeros((4, 65)))

    def test_negative(self):
        with pytest.raises(ValueError):
            E.WeightedEnsemble(np.zeros((2, 1)), [1.5, -0.5])

    def test_immutable(self):
        ens = E.WeightedEnsemble.uniform(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            ens.points[0, 0] = 1.0


class TestCovering:
    @pytest.mark.parametrize("eps", [1e-3, 0.5, 10.0])
    def test_single_point(self, eps):
        b = E.eps_entropy_set([[0.3, 0.7]], eps)
        assert b.covering == 1 and b.entropy == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            E.eps_entropy_set(np.zeros((0, 2)), 0.1)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            E.eps_entropy_set([[0.0]], 0.0)

    def test_segment(self):
        x = np.linspace(0.0, 1.0, 2001)[:, None]
        b = E.eps_entropy_set(x, 1 / 8)
        assert 4 <= b.covering <= 8
        assert b.packing <= 4 <= b.covering

    @pytest.mark.parametrize("seed", range(20))
    def test_sandwich_unit_square(self, seed):
        pts = np.random.default_rng(seed).uniform(size=(100, 2))
        for eps in (0.05, 0.1, 0.2, 0.4):
            b = E.eps_entropy_set(pts, eps)
            assert b.packing <= b.covering
            assert b.lower <= b.entropy

    @pytest.mark.parametrize("seed", range(10))
    def test_bounds_bracket_exact_1d(self, seed):
        x = np.random.default_rng(seed).uniform(size=60)
        for eps in (0.01, 0.03, 0.1):
            exact = brute_min_cover_1d(x, eps)
            b = E.eps_entropy_set(x[:, None], eps)
            assert b.packing <= exact <= b.covering

    def test_cover_is_valid(self):
        pts = np.random.default_rng(1).normal(size=(300, 3))
        fpo = E.farthest_point_order(pts)
        for eps in (0.3, 0.7, 1.5):
            c = pts[fpo.order[: fpo.count(eps)]]
            d = np.linalg.norm(pts[:, None] - c[None], axis=2).min(axis=1)
            assert d.max() <= eps
            sep = E.eps_entropy_set(pts, eps).packing
            centers = pts[fpo.order[:sep]]
            dd = np.linalg.norm(centers[:, None] - centers[None], axis=2)
            assert sep == 1 or dd[~np.eye(sep, dtype=bool)].min() > 2 * eps


class TestCubeEntropy:
    def test_one_cube(self):
        pts = np.random.default_rng(0).uniform(0.1, 0.2, size=(50, 3))
        assert E.cube_entropy(pts, 3, 0.25) == 0.0

    def test_unit_square(self):
        pts = np.random.default_rng(0).uniform(size=(20000, 2))
        assert E.cube_entropy(pts, 2, 0.25) == pytest.approx(4.0, abs=1e-12)

    def test_sup_over_n(self):
        pts = np.random.default_rng(0).uniform(size=(20000, 3))
        assert E.cube_entropy(pts, [1, 2, 3], 0.5) == pytest.approx(3.0)
        assert E.cube_entropy(pts, [1], 0.5) == pytest.approx(1.0)

    def test_n_too_large(self):
        with pytest.raises(ValueError):
            E.cube_entropy(np.zeros((3, 2)), 3, 0.1)

    @pytest.mark.parametrize("seed", range(3))
    def test_rotation_slope(self, seed):
        rng = np.random.default_rng(seed)
        sq = np.column_stack([rng.uniform(size=200_000), rng.uniform(size=200_000), np.zeros(200_000)])
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        rot = sq @ q.T + 2.0
        epss = np.array([1 / 8, 1 / 16, 1 / 32])
        x = np.log2(1 / epss)

        def slope(p):
            return np.polyfit(x, [E.cube_entropy(p, 3, e) for e in epss], 1)[0]

        s0, s1 = slope(sq), slope(rot)
        assert abs(s1 - s0) / s0 < 0.10
        assert abs(s0 - 2.0) < 0.05


class TestMeasureEntropy:
    def test_point_mass(self):
        ens = E.WeightedEnsemble.uniform(np.full((40, 4), 0.3))
        assert E.measure_entropy(ens, 4, 0.01).value == 0.0

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("eps", [1 / 4, 1 / 8])
    def test_lebesgue(self, d, eps):
        pts = np.random.default_rng(d).uniform(size=(200_000, d))
        m = E.measure_entropy(E.WeightedEnsemble.uniform(pts), d, eps)
        target = d * np.log2(1 / eps)
        assert abs(m.value - target) / target < 0.05
        assert not m.undersampled

    def test_printed_sign(self):
        pts = np.random.default_rng(0).uniform(size=(5000, 2))
        ens = E.WeightedEnsemble.uniform(pts)
        a = E.measure_entropy(ens, 2, 0.25)
        b = E.measure_entropy(ens, 2, 0.25, printed_sign=True)
        assert b.value == pytest.approx(-a.value) and b.value < 0

    def test_weighted_matches_finite_entropy(self):
        w = np.array([0.5, 0.25, 0.125, 0.125])
        pts = np.array([[0.0], [1.0], [2.0], [3.0]])
        m = E.measure_entropy(E.WeightedEnsemble(pts, w), 1, 0.5)
        assert m.value == pytest.approx(E.finite_entropy(w))

    def test_undersampled_flag(self):
        pts = np.random.default_rng(0).uniform(size=(200, 3))
        assert E.measure_entropy(E.WeightedEnsemble.uniform(pts), 3, 0.05).undersampled

    @pytest.mark.parametrize("seed", range(4))
    def test_product_additivity(self, seed):
        rng = np.random.default_rng(seed)
        N = 400_000
        a = rng.beta(2.0, 5.0, size=(N, 2))
        b = rng.uniform(size=(N, 1)) ** 2
        eps = 1 / 8
        ha = E.measure_entropy(E.WeightedEnsemble.uniform(a), 2, eps).value
        hb = E.measure_entropy(E.WeightedEnsemble.uniform(b), 1, eps).value
        hab = E.measure_entropy(E.WeightedEnsemble.uniform(np.hstack([a, b])), 3, eps).value
        assert abs(hab - (ha + hb)) / (ha + hb) < 0.05


class TestEpsDelta:
    @pytest.mark.parametrize("seed", range(8))
    def test_monotone_in_delta_and_eps(self, seed):
        rng = np.random.default_rng(seed)
        pts = np.vstack([rng.normal(size=(250, 2)) * 0.1, rng.uniform(-2, 2, size=(50, 2))])
        w = rng.uniform(0.2, 1.0, size=300)
        ens = E.WeightedEnsemble(pts, w / w.sum())
        prof = E.EpsDeltaProfile(ens)
        deltas = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4]
        epss = [0.05, 0.1, 0.2, 0.4, 0.8]
        table = np.array([[prof.entropy(e, d) for d in deltas] for e in epss])
        assert np.all(np.diff(table, axis=1) <= 1e-12)
        assert np.all(np.diff(table, axis=0) <= 1e-12)
        assert E.eps_delta_entropy(ens, 0.1, 0.0) >= E.eps_delta_entropy(ens, 0.1, 0.1)

    def test_delta_zero_is_full_cover(self):
        pts = np.random.default_rng(0).uniform(size=(150, 3))
        ens = E.WeightedEnsemble.uniform(pts)
        assert E.eps_delta_entropy(ens, 0.2, 0.0) == pytest.approx(E.eps_entropy_set(pts, 0.2).entropy)

    def test_outliers_discarded(self):
        rng = np.random.default_rng(0)
        core = rng.uniform(0, 0.05, size=(95, 2))
        far = rng.uniform(10, 20, size=(5, 2))
        ens = E.WeightedEnsemble.uniform(np.vstack([core, far]))
        assert E.eps_delta_entropy(ens, 0.1, 0.06) == 0.0
        assert E.eps_delta_entropy(ens, 0.1, 0.0) > 0.0

    def test_delta_range(self):
        ens = E.WeightedEnsemble.uniform(np.zeros((3, 1)))
        with pytest.raises(ValueError):
            E.eps_delta_entropy(ens, 0.1, 1.0)


class TestEmbedding:
    def test_mode_order_and_scaling(self):
        g = Grid2(32, 32)
        x, y = g.coords
        w = VorticityField2D.from_physical(g, 2.0 * np.cos(x) + 5.0 * np.cos(y))
        c = E.fourier_embedding(w, 4)
        # |k| = 1 modes ordered (0, 1) then (1, 0); a cos amplitude A gives c = A / 2
        np.testing.assert_allclose(c, [np.sqrt(2) * 2.5, 0.0, np.sqrt(2) * 1.0, 0.0], atol=1e-14)

    @pytest.mark.parametrize("seed", range(3))
    def test_energy_identity(self, seed):
        g = Grid2(32, 32)
        w = euler2d.random_vorticity(g, seed, k0=3)
        c = E.fourier_embedding(w, 64)
        # full-spectrum energy density from the retained modes bounds the partial sum
        psi = w.streamfunction_hat()
        full = np.fft.irfft2(psi, s=g.shape)
        assert np.sum(c**2) <= 2 * np.mean(full * w.physical()) + 1e-12

    def test_orbit_matches_grid_shift(self):
        g = Grid2(64, 64)
        w = euler2d.random_vorticity(g, 0, 6)
        orbit = E.translation_orbit(w, 8, 32)
        for a, b in [(0, 0), (2, 0), (0, 6), (10, 4)]:
            shifted = VorticityField2D.from_physical(g, np.roll(w.physical(), (a, b), axis=(0, 1)))
            np.testing.assert_allclose(orbit[(a // 2) * 32 + b // 2], E.fourier_embedding(shifted, 8), atol=1e-15)


class TestExperiment:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            E.EntropyExperimentConfig(members=16)
        with pytest.raises(ValueError):
            E.EntropyExperimentConfig(ns=(65,))

    def test_frozen_constant(self):
        cfg = E.EntropyExperimentConfig(t_end=0.2, output_every=5, frozen=True)
        res = E.entropy_decrease_experiment(cfg)
        h = [r["H_eps_n8"] for r in res.rows]
        assert len(h) == 5 and len(set(h)) == 1
        assert res.columns == ["t", "H_eps_n8"]

    def test_columns_per_n(self):
        cfg = E.EntropyExperimentConfig(t_end=0.04, output_every=2, ns=(2, 8), eps=0.01)
        res = E.entropy_decrease_experiment(cfg)
        assert res.columns == ["t", "H_eps_n2", "H_eps_n8"]
        assert res.eps == 0.01
        assert all(0 <= r["H_eps_n2"] <= 5 + 1e-12 for r in res.rows)

    def test_seeded_reproducible(self):
        cfg = E.EntropyExperimentConfig(t_end=0.04, output_every=2, seed=3)
        assert E.entropy_decrease_experiment(cfg).rows == E.entropy_decrease_experiment(cfg).rows

    @pytest.mark.parametrize("shift", [(1, 0), (0, 5), (17, 33)])
    def test_euler_commutes_with_shift(self, shift):
        g = Grid2(64, 64)
        w = euler2d.random_vorticity(g, 2, 6)
        roll = lambda f: VorticityField2D.from_physical(g, np.roll(f.physical(), shift, axis=(0, 1)))
        a, b = roll(w), w
        for _ in range(10):
            a = euler2d.step_rk4(a, 0.01, 0.0, 4, cfl_max=1.0)
            b = euler2d.step_rk4(b, 0.01, 0.0, 4, cfl_max=1.0)
        np.testing.assert_allclose(a.physical(), roll(b).physical(), atol=1e-12)

    def test_translate_orbit_dimension(self):
        g = Grid2(64, 64)
        w = euler2d.random_vorticity(g, 0, 6)
        slopes = []
        for _ in range(2):
            P = E.translation_orbit(w, 8, 96)
            span = np.ptp(P, axis=0).max()
            h = [E.eps_entropy_set(P, span / k).entropy for k in (2, 4, 8)]
            slopes.append(np.polyfit(np.log2([2, 4, 8]), h, 1)[0])
            for _ in range(20):
                w = euler2d.step_rk4(w, 0.01, 0.0, 4, cfl_max=1.0)
        assert all(abs(s - 2.0) < 0.25 for s in slopes)
        assert abs(slopes[0] - slopes[1]) < 0.2

    def test_translate_ensemble_amplitudes_invariant(self):
        cfg = E.EntropyExperimentConfig(t_end=0.1, output_every=5, translates=True)
        res = E.entropy_decrease_experiment(cfg, keep_ensembles=True)
        for emb in res.ensembles:
            amp = emb[:, 0::2] ** 2 + emb[:, 1::2] ** 2
            np.testing.assert_allclose(amp, np.broadcast_to(amp[0], amp.shape), rtol=1e-10, atol=1e-18)
