"""Pure-Python/NumPy reference implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with an identical
signature and identical results (up to floating-point summation order).
"""

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * np.pi


def pav(y, w):
    """Weighted least-squares projection of ``y`` onto nondecreasing sequences."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n = y.size
    vals = np.empty(n)
    wts = np.empty(n)
    sizes = np.empty(n, dtype=np.intp)
    top = -1
    for i in range(n):
        top += 1
        vals[top] = y[i]
        wts[top] = w[i]
        sizes[top] = 1
        while top > 0 and vals[top - 1] > vals[top]:
            wsum = wts[top - 1] + wts[top]
            vals[top - 1] = (wts[top - 1] * vals[top - 1] + wts[top] * vals[top]) / wsum
            wts[top - 1] = wsum
            sizes[top - 1] += sizes[top]
            top -= 1
    return np.repeat(vals[: top + 1], sizes[: top + 1])


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def label_periodic(mask):
    """4-connected component labels on a doubly periodic grid.

    Returns ``(labels, count)``; labels are numbered 1..count in raster order
    of each component's first cell, 0 marks background.
    """
    mask = np.asarray(mask, dtype=bool)
    raw, nraw = ndimage.label(mask)
    parent = list(range(nraw + 1))

    def union(a, b):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for a, b in zip(raw[0, :], raw[-1, :]):
        if a and b:
            union(a, b)
    for a, b in zip(raw[:, 0], raw[:, -1]):
        if a and b:
            union(a, b)

    roots = np.array([_find(parent, i) for i in range(nraw + 1)], dtype=np.intp)
    merged = roots[raw]
    # canonical numbering: order of first appearance in raster scan
    flat = merged.ravel()
    nz = flat[flat > 0]
    _, first = np.unique(nz, return_index=True)
    order = np.unique(nz)[np.argsort(first)]
    remap = np.zeros(nraw + 1, dtype=np.int32)
    remap[order] = np.arange(1, order.size + 1, dtype=np.int32)
    return remap[merged].astype(np.int32), int(order.size)


def _pair_deltas(pos):
    d = pos[:, None, :] - pos[None, :, :]
    return d


def plane_velocity(pos, gamma):
    """Kirchhoff velocities on the plane; returns ``(vel, min_separation)``."""
    pos = np.asarray(pos, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    d = _pair_deltas(pos)
    r2 = np.einsum("ijk,ijk->ij", d, d)
    n = pos.shape[0]
    np.fill_diagonal(r2, np.inf)
    coef = gamma[None, :] / (TWO_PI * r2)
    vel = np.empty_like(pos)
    vel[:, 0] = -np.sum(coef * d[:, :, 1], axis=1)
    vel[:, 1] = np.sum(coef * d[:, :, 0], axis=1)
    minsep = np.sqrt(r2.min()) if n > 1 else np.inf
    return vel, minsep


def halfplane_velocity(pos, gamma):
    """Upper half-plane velocities: plane kernel plus mirror images of opposite sign."""
    pos = np.asarray(pos, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    vel, minsep = plane_velocity(pos, gamma)
    img = pos.copy()
    img[:, 1] = -img[:, 1]
    d = pos[:, None, :] - img[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    coef = -gamma[None, :] / (TWO_PI * r2)
    vel[:, 0] -= np.sum(coef * d[:, :, 1], axis=1)
    vel[:, 1] += np.sum(coef * d[:, :, 0], axis=1)
    return vel, min(minsep, 2.0 * pos[:, 1].min())


def sphere_velocity(pos, gamma):
    """Unit-sphere velocities ``sum_j G_j/(4 pi) (x_j x x_i)/(1 - x_i.x_j)``."""
    pos = np.asarray(pos, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n = pos.shape[0]
    dots = pos @ pos.T
    denom = 1.0 - dots
    np.fill_diagonal(denom, np.inf)
    cross = np.cross(pos[None, :, :], pos[:, None, :])  # [i, j] = x_j x x_i
    coef = gamma[None, :] / (4.0 * np.pi * denom)
    vel = np.einsum("ij,ijk->ik", coef, cross)
    if n > 1:
        chord2 = 2.0 * denom
        minsep = np.sqrt(max(chord2.min(), 0.0))
    else:
        minsep = np.inf
    return vel, minsep


def _wrap(d, period):
    return d - period * np.floor(d / period + 0.5)


def torus_velocity(pos, gamma, period, nrows):
    """Doubly periodic velocities on the square torus of side ``period``.

    Rows of images along x are summed in closed form (cotangent), rows
    along y symmetrically up to ``nrows``, and the uniform compensating
    background vorticity contributes the linear shear term.
    """
    pos = np.asarray(pos, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    L = float(period)
    n = pos.shape[0]
    d = _wrap(_pair_deltas(pos), L)
    dx = d[:, :, 0]
    dy = d[:, :, 1]
    shifts = np.arange(-nrows, nrows + 1, dtype=float)
    a2 = TWO_PI * dx / L
    b2 = TWO_PI * (dy[:, :, None] - shifts * L) / L
    den = np.cosh(b2) - np.cos(a2)[:, :, None]
    eye = np.eye(n, dtype=bool)
    den[eye] = np.inf
    urow = -np.sum(np.sinh(b2) / den, axis=2) / (2.0 * L) + dy / L**2
    vrow = np.sin(a2) * np.sum(1.0 / den, axis=2) / (2.0 * L)
    urow[eye] = 0.0
    vrow[eye] = 0.0
    vel = np.empty((n, 2))
    vel[:, 0] = urow @ gamma
    vel[:, 1] = vrow @ gamma
    r2 = dx**2 + dy**2
    r2[eye] = np.inf
    minsep = np.sqrt(r2.min()) if n > 1 else np.inf
    return vel, minsep


def torus_pair_potential(dx, dy, period, nrows):
    """Periodic Green's function of ``-Laplacian`` on the torus, up to a constant."""
    L = float(period)
    dx = _wrap(np.asarray(dx, dtype=float), L)
    dy = _wrap(np.asarray(dy, dtype=float), L)
    a2 = TWO_PI * dx / L
    total = np.log(np.cosh(TWO_PI * dy / L) - np.cos(a2))
    for n in range(1, nrows + 1):
        for s in (n, -n):
            b2 = TWO_PI * (dy - s * L) / L
            total = total + np.log1p(-np.cos(a2) / np.cosh(b2)) + np.log1p(np.exp(-2.0 * np.abs(b2)))
    return -total / (4.0 * np.pi) + dy**2 / (2.0 * L**2)
