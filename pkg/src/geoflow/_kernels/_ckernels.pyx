# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, cosh, sinh, log, log1p, exp, fabs, floor, INFINITY, M_PI

cnp.import_array()


def pav(y, w):
    cdef const double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = yy.shape[0]
    cdef double[::1] vals = np.empty(n)
    cdef double[::1] wts = np.empty(n)
    cdef Py_ssize_t[::1] sizes = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t i, j, k, top = -1
    cdef double wsum
    for i in range(n):
        top += 1
        vals[top] = yy[i]
        wts[top] = ww[i]
        sizes[top] = 1
        while top > 0 and vals[top - 1] > vals[top]:
            wsum = wts[top - 1] + wts[top]
            vals[top - 1] = (wts[top - 1] * vals[top - 1] + wts[top] * vals[top]) / wsum
            wts[top - 1] = wsum
            sizes[top - 1] += sizes[top]
            top -= 1
    out = np.empty(n)
    cdef double[::1] o = out
    k = 0
    for i in range(top + 1):
        for j in range(sizes[i]):
            o[k] = vals[i]
            k += 1
    return out


cdef Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t i) noexcept nogil:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


cdef void _union(Py_ssize_t[::1] parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef Py_ssize_t ra = _find(parent, a)
    cdef Py_ssize_t rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


def label_periodic(mask):
    cdef const cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t nx = m.shape[0], ny = m.shape[1]
    cdef Py_ssize_t[::1] parent = np.arange(nx * ny, dtype=np.intp)
    cdef Py_ssize_t i, j, idx, r
    cdef int count = 0
    with nogil:
        for i in range(nx):
            for j in range(ny):
                if not m[i, j]:
                    continue
                idx = i * ny + j
                if m[(i + 1) % nx, j]:
                    _union(parent, idx, ((i + 1) % nx) * ny + j)
                if m[i, (j + 1) % ny]:
                    _union(parent, idx, i * ny + (j + 1) % ny)
    labels = np.zeros((nx, ny), dtype=np.int32)
    cdef int[:, ::1] lab = labels
    cdef int[::1] root_label = np.zeros(nx * ny, dtype=np.int32)
    for i in range(nx):
        for j in range(ny):
            if not m[i, j]:
                continue
            r = _find(parent, i * ny + j)
            if root_label[r] == 0:
                count += 1
                root_label[r] = count
            lab[i, j] = root_label[r]
    return labels, count


def plane_velocity(pos, gamma):
    cdef const double[:, ::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i, j
    vel = np.zeros((n, 2))
    cdef double[:, ::1] v = vel
    cdef double dx, dy, r2, c, minr2 = INFINITY
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = p[i, 0] - p[j, 0]
            dy = p[i, 1] - p[j, 1]
            r2 = dx * dx + dy * dy
            if r2 < minr2:
                minr2 = r2
            c = g[j] / (2.0 * M_PI * r2)
            v[i, 0] -= c * dy
            v[i, 1] += c * dx
    return vel, sqrt(minr2)


def halfplane_velocity(pos, gamma):
    cdef const double[:, ::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i, j
    vel = np.zeros((n, 2))
    cdef double[:, ::1] v = vel
    cdef double dx, dy, r2, c, minr2 = INFINITY, ymin = INFINITY
    for i in range(n):
        if p[i, 1] < ymin:
            ymin = p[i, 1]
        for j in range(n):
            if i != j:
                dx = p[i, 0] - p[j, 0]
                dy = p[i, 1] - p[j, 1]
                r2 = dx * dx + dy * dy
                if r2 < minr2:
                    minr2 = r2
                c = g[j] / (2.0 * M_PI * r2)
                v[i, 0] -= c * dy
                v[i, 1] += c * dx
            dx = p[i, 0] - p[j, 0]
            dy = p[i, 1] + p[j, 1]
            r2 = dx * dx + dy * dy
            c = -g[j] / (2.0 * M_PI * r2)
            v[i, 0] -= c * dy
            v[i, 1] += c * dx
    return vel, min(sqrt(minr2), 2.0 * ymin)


def sphere_velocity(pos, gamma):
    cdef const double[:, ::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i, j
    vel = np.zeros((n, 3))
    cdef double[:, ::1] v = vel
    cdef double den, c, mind = INFINITY
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            den = 1.0 - (p[i, 0] * p[j, 0] + p[i, 1] * p[j, 1] + p[i, 2] * p[j, 2])
            if den < mind:
                mind = den
            c = g[j] / (4.0 * M_PI * den)
            v[i, 0] += c * (p[j, 1] * p[i, 2] - p[j, 2] * p[i, 1])
            v[i, 1] += c * (p[j, 2] * p[i, 0] - p[j, 0] * p[i, 2])
            v[i, 2] += c * (p[j, 0] * p[i, 1] - p[j, 1] * p[i, 0])
    if mind == INFINITY:
        return vel, INFINITY
    return vel, sqrt(max(2.0 * mind, 0.0))


cdef inline double _wrap(double d, double period) noexcept nogil:
    return d - period * floor(d / period + 0.5)


cdef double[::1] _row_factors(int nrows):
    # exp(-2 pi s) for s = -nrows..nrows; image rows differ by these factors
    f = np.empty(2 * nrows + 1)
    cdef double[::1] fv = f
    cdef int s
    for s in range(-nrows, nrows + 1):
        fv[s + nrows] = exp(-2.0 * M_PI * s)
    return fv


def torus_velocity(pos, gamma, double period, int nrows):
    cdef const double[:, ::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], i, j
    cdef int s, nr = 2 * nrows + 1
    cdef double[::1] q = _row_factors(nrows)
    vel = np.zeros((n, 2))
    cdef double[:, ::1] v = vel
    cdef double L = period, dx, dy, a2, e0, e, ie, den, su, sv, cosa, minr2 = INFINITY
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = _wrap(p[i, 0] - p[j, 0], L)
            dy = _wrap(p[i, 1] - p[j, 1], L)
            if dx * dx + dy * dy < minr2:
                minr2 = dx * dx + dy * dy
            a2 = 2.0 * M_PI * dx / L
            cosa = cos(a2)
            e0 = exp(2.0 * M_PI * dy / L)
            su = 0.0
            sv = 0.0
            for s in range(nr):
                e = e0 * q[s]
                ie = 1.0 / e
                den = 0.5 * (e + ie) - cosa
                su += 0.5 * (e - ie) / den
                sv += 1.0 / den
            v[i, 0] += g[j] * (-su / (2.0 * L) + dy / (L * L))
            v[i, 1] += g[j] * sin(a2) * sv / (2.0 * L)
    return vel, sqrt(minr2)


def torus_pair_potential(dx, dy, double period, int nrows):
    dxa = np.asarray(dx, dtype=np.float64)
    dya = np.asarray(dy, dtype=np.float64)
    shape = np.broadcast(dxa, dya).shape
    cdef const double[::1] X = np.ascontiguousarray(np.broadcast_to(dxa, shape), dtype=np.float64).ravel()
    cdef const double[::1] Y = np.ascontiguousarray(np.broadcast_to(dya, shape), dtype=np.float64).ravel()
    out = np.empty(X.shape[0])
    cdef double[::1] o = out
    cdef double[::1] q = _row_factors(nrows)
    cdef Py_ssize_t k
    cdef int s
    cdef double L = period, x, y, a2, total, prod, cosa, e0, e, ie, small
    for k in range(X.shape[0]):
        x = _wrap(X[k], L)
        y = _wrap(Y[k], L)
        a2 = 2.0 * M_PI * x / L
        cosa = cos(a2)
        e0 = exp(2.0 * M_PI * y / L)
        total = log(0.5 * (e0 + 1.0 / e0) - cosa)
        prod = 1.0
        for s in range(2 * nrows + 1):
            if s == nrows:
                continue
            e = e0 * q[s]
            ie = 1.0 / e
            small = e if e < ie else ie
            prod *= (1.0 - cosa / (0.5 * (e + ie))) * (1.0 + small * small)
        total += log(prod)
        o[k] = -total / (4.0 * M_PI) + y * y / (2.0 * L * L)
    if len(shape) == 0:
        return float(out[0])
    return out.reshape(shape)
