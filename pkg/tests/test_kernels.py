"""The compiled kernels agree with the pure-Python fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from geoflow import _kernels

py = _kernels.python
cy = _kernels.compiled
needs_compiled = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def brute_pav(y, w):
    """Isotonic regression via the min-max formula (independent oracle)."""
    n = len(y)
    out = np.empty(n)
    for i in range(n):
        best = -np.inf
        for a in range(i + 1):
            worst = np.inf
            for b in range(i, n):
                worst = min(worst, np.dot(w[a : b + 1], y[a : b + 1]) / w[a : b + 1].sum())
            best = max(best, worst)
        out[i] = best
    return out


def brute_label_count(mask):
    """Component count on the torus by labelling a 3x3 tiling and identifying copies."""
    n, m = mask.shape
    big = np.tile(mask, (3, 3))
    lab, _ = ndimage.label(big)
    center = lab[n : 2 * n, m : 2 * m]
    # two cells belong together if their labels agree in some periodic copy
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            a = parent[a]
        return a

    for di in range(3):
        for dj in range(3):
            block = lab[di * n : (di + 1) * n, dj * m : (dj + 1) * m]
            for a, b in zip(center[mask], block[mask]):
                ra, rb = find(("c", a)), find(("b", b))
                if ra != rb:
                    parent[ra] = rb
    return len({find(("c", a)) for a in center[mask]})


class TestPav:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=12), st.integers(0, 2**32 - 1))
    def test_python_matches_oracle(self, y, seed):
        y = np.array(y)
        w = np.random.default_rng(seed).uniform(0.1, 3.0, y.size)
        np.testing.assert_allclose(py.pav(y, w), brute_pav(y, w), atol=1e-10)

    @needs_compiled
    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=0, max_size=200), st.integers(0, 2**32 - 1))
    def test_backends_agree(self, y, seed):
        y = np.array(y, dtype=float)
        w = np.random.default_rng(seed).uniform(0.1, 3.0, y.size)
        np.testing.assert_allclose(cy.pav(y, w), py.pav(y, w), rtol=1e-13, atol=1e-12)

    @pytest.mark.parametrize("impl", [py, cy] if cy else [py], ids=lambda m: m.__name__.rsplit(".", 1)[-1])
    def test_sorted_is_fixed(self, impl):
        y = np.sort(np.random.default_rng(0).normal(size=50))
        np.testing.assert_array_equal(impl.pav(y, np.ones(50)), y)


class TestLabels:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.2, 0.7))
    def test_count_matches_tiling_oracle(self, seed, p):
        mask = np.random.default_rng(seed).uniform(size=(12, 10)) < p
        _, count = py.label_periodic(mask)
        assert count == brute_label_count(mask)

    @needs_compiled
    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("shape", [(16, 16), (32, 8), (7, 13)])
    def test_backends_agree(self, seed, shape):
        mask = np.random.default_rng(seed).uniform(size=shape) < 0.45
        lp, cp_ = py.label_periodic(mask)
        lc, cc = cy.label_periodic(mask)
        assert cp_ == cc
        np.testing.assert_array_equal(lp, lc)

    def test_seam_merge(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[0, 3] = mask[7, 3] = True
        mask[4, 0] = mask[4, 7] = True
        for impl in filter(None, [py, cy]):
            _, count = impl.label_periodic(mask)
            assert count == 2


def _system(geometry, n, seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-1.5, 1.5, n)
    if geometry == "sphere":
        pos = rng.normal(size=(n, 3))
        pos /= np.linalg.norm(pos, axis=1)[:, None]
    elif geometry == "half_plane":
        pos = np.column_stack([rng.uniform(-1, 1, n), rng.uniform(0.2, 2, n)])
    else:
        pos = rng.uniform(0, 2 * np.pi, (n, 2))
        g[-1] = -g[:-1].sum()
    return pos, g


@needs_compiled
class TestVelocityBackends:
    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("n", [2, 5, 17])
    @pytest.mark.parametrize("name,geom", [("plane_velocity", "plane"), ("halfplane_velocity", "half_plane"),
                                           ("sphere_velocity", "sphere")])
    def test_agree(self, name, geom, n, seed):
        pos, g = _system(geom, n, seed)
        vp, sp = getattr(py, name)(pos, g)
        vc, sc = getattr(cy, name)(pos, g)
        np.testing.assert_allclose(vc, vp, rtol=1e-11, atol=1e-12)
        assert sc == pytest.approx(sp, rel=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("n", [2, 6])
    def test_torus(self, n, seed):
        pos, g = _system("torus", n, seed)
        vp, sp = py.torus_velocity(pos, g, 2 * np.pi, 8)
        vc, sc = cy.torus_velocity(pos, g, 2 * np.pi, 8)
        np.testing.assert_allclose(vc, vp, rtol=1e-11, atol=1e-12)
        assert sc == pytest.approx(sp, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_torus_potential(self, dx, dy):
        if np.hypot(dx - 2 * np.pi * np.round(dx / (2 * np.pi)), dy - 2 * np.pi * np.round(dy / (2 * np.pi))) < 1e-3:
            return
        a = py.torus_pair_potential(np.array([dx]), np.array([dy]), 2 * np.pi, 8)
        b = cy.torus_pair_potential(np.array([dx]), np.array([dy]), 2 * np.pi, 8)
        np.testing.assert_allclose(b, a, rtol=1e-11, atol=1e-12)


class TestSelection:
    def test_backend_name(self):
        assert _kernels.BACKEND == ("cython" if cy is not None else "python")

    def test_force_fallback(self):
        env = dict(os.environ, GEOFLOW_PURE_PYTHON="1")
        out = subprocess.run(
            [sys.executable, "-c", "from geoflow import _kernels; print(_kernels.BACKEND)"],
            capture_output=True, text=True, env=env, check=True,
        )
        assert out.stdout.strip() == "python"
