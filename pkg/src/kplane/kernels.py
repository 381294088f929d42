"""Hot numeric kernels with numba and pure-numpy implementations.

Every public kernel ``name`` is bound to ``_name_numba`` when numba is active
(see :mod:`kplane._accel`) and to ``_name_numpy`` otherwise.  Both versions
are kept importable so tests and ``benchmarks/bench_kernels.py`` can compare
them directly through :data:`IMPLEMENTATIONS`.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Gauss-Legendre nodes by Newton iteration on the three-term recurrence


def _gauss_legendre_numpy(n):
    i = np.arange(1, n + 1, dtype=np.float64)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    dp = np.ones_like(x)
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    # final derivative at the converged nodes
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x[::-1].copy(), w[::-1].copy()


@njit
def _gauss_legendre_numba(n):
    x = np.empty(n)
    w = np.empty(n)
    for i in range(n):
        z = math.cos(math.pi * (i + 0.75) / (n + 0.5))
        dp = 1.0
        for _ in range(100):
            p0 = 1.0
            p1 = z
            for j in range(2, n + 1):
                p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j
                p0 = p1
                p1 = p2
            dp = n * (z * p1 - p0) / (z * z - 1.0)
            dz = p1 / dp
            z -= dz
            if abs(dz) < 1e-15:
                break
        p0 = 1.0
        p1 = z
        for j in range(2, n + 1):
            p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j
            p0 = p1
            p1 = p2
        dp = n * (z * p1 - p0) / (z * z - 1.0)
        x[n - 1 - i] = z
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp)
    return x, w


# ---------------------------------------------------------------------------
# C * (1 + |L x + x0|^2) ** (-power), the flat extremal family


def _extremal_values_numpy(x, L, x0, C, power):
    y = x @ L.T + x0
    return C * (1.0 + np.sum(y * y, axis=-1)) ** (-power)


@njit
def _extremal_values_numba(x, L, x0, C, power):
    n, d = x.shape
    out = np.empty(n)
    for i in range(n):
        s = 1.0
        for r in range(d):
            acc = x0[r]
            for c in range(d):
                acc += L[r, c] * x[i, c]
            s += acc * acc
        out[i] = C * s ** (-power)
    return out


# ---------------------------------------------------------------------------
# polynomial bump  amp * (1 - |x - c|^2 / rho^2) ** power  inside the ball


def _bump_values_numpy(x, center, radius, power, amp):
    r2 = np.sum((x - center) ** 2, axis=-1) / (radius * radius)
    out = np.zeros(x.shape[0])
    inside = r2 < 1.0
    out[inside] = amp * (1.0 - r2[inside]) ** power
    return out


@njit
def _bump_values_numba(x, center, radius, power, amp):
    n, d = x.shape
    out = np.zeros(n)
    inv = 1.0 / (radius * radius)
    for i in range(n):
        r2 = 0.0
        for c in range(d):
            t = x[i, c] - center[c]
            r2 += t * t
        r2 *= inv
        if r2 < 1.0:
            out[i] = amp * (1.0 - r2) ** power
    return out


# ---------------------------------------------------------------------------
# multilinear interpolation on a regular grid, zero outside the box


def _multilinear_numpy(values, lo, hi, x):
    shape = np.array(values.shape)
    d = len(shape)
    n = x.shape[0]
    h = (hi - lo) / (shape - 1)
    u = (x - lo) / h
    inside = np.all((x >= lo) & (x <= hi), axis=1)
    i0 = np.clip(np.floor(u).astype(np.int64), 0, shape - 2)
    frac = u - i0
    out = np.zeros(n)
    flat = values.ravel()
    strides = np.array([int(np.prod(shape[j + 1:])) for j in range(d)], dtype=np.int64)
    for corner in range(1 << d):
        bits = np.array([(corner >> j) & 1 for j in range(d)])
        wgt = np.prod(np.where(bits == 1, frac, 1.0 - frac), axis=1)
        idx = (i0 + bits) @ strides
        out += wgt * flat[np.clip(idx, 0, flat.size - 1)]
    out[~inside] = 0.0
    return out


@njit
def _multilinear_numba(values, lo, hi, x):
    d = lo.shape[0]
    shape = np.empty(d, dtype=np.int64)
    strides = np.empty(d, dtype=np.int64)
    flat = values.ravel()
    total = 1
    for j in range(d - 1, -1, -1):
        shape[j] = values.shape[j]
        strides[j] = total
        total *= shape[j]
    n = x.shape[0]
    out = np.zeros(n)
    i0 = np.empty(d, dtype=np.int64)
    frac = np.empty(d)
    for i in range(n):
        inside = True
        for j in range(d):
            if x[i, j] < lo[j] or x[i, j] > hi[j]:
                inside = False
        if not inside:
            continue
        for j in range(d):
            h = (hi[j] - lo[j]) / (shape[j] - 1)
            u = (x[i, j] - lo[j]) / h
            k = int(math.floor(u))
            if k < 0:
                k = 0
            if k > shape[j] - 2:
                k = shape[j] - 2
            i0[j] = k
            frac[j] = u - k
        acc = 0.0
        for corner in range(1 << d):
            wgt = 1.0
            idx = 0
            for j in range(d):
                bit = (corner >> j) & 1
                wgt *= frac[j] if bit == 1 else 1.0 - frac[j]
                idx += (i0[j] + bit) * strides[j]
            acc += wgt * flat[idx]
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# sqrt(det Gram) of the edge vectors of many simplices, shape (N, m, d)


def _gram_volumes_numpy(points):
    edges = points[:, 1:, :] - points[:, :1, :]
    gram = edges @ np.transpose(edges, (0, 2, 1))
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None))


@njit
def _gram_volumes_numba(points):
    n, m, d = points.shape
    k = m - 1
    out = np.empty(n)
    e = np.empty((k, d))
    g = np.empty((k, k))
    for i in range(n):
        for a in range(k):
            for c in range(d):
                e[a, c] = points[i, a + 1, c] - points[i, 0, c]
        for a in range(k):
            for b in range(k):
                s = 0.0
                for c in range(d):
                    s += e[a, c] * e[b, c]
                g[a, b] = s
        # Gaussian elimination with partial pivoting
        det = 1.0
        for col in range(k):
            piv = col
            for r in range(col + 1, k):
                if abs(g[r, col]) > abs(g[piv, col]):
                    piv = r
            if g[piv, col] == 0.0:
                det = 0.0
                break
            if piv != col:
                for c in range(k):
                    tmp = g[col, c]
                    g[col, c] = g[piv, c]
                    g[piv, c] = tmp
                det = -det
            det *= g[col, col]
            for r in range(col + 1, k):
                f = g[r, col] / g[col, col]
                for c in range(col, k):
                    g[r, c] -= f * g[col, c]
        out[i] = math.sqrt(det) if det > 0.0 else 0.0
    return out


# ---------------------------------------------------------------------------
# lines through point pairs: foot of perpendicular and canonical direction


def _lines_through_numpy(p0, p1):
    u = p1 - p0
    norm = np.sqrt(np.sum(u * u, axis=1))
    u = u / norm[:, None]
    # first nonzero component positive
    lead = np.argmax(np.abs(u) > 1e-14, axis=1)
    sgn = np.sign(u[np.arange(u.shape[0]), lead])
    u = u * sgn[:, None]
    base = p0 - np.sum(p0 * u, axis=1)[:, None] * u
    return base, u


@njit
def _lines_through_numba(p0, p1):
    n, d = p0.shape
    base = np.empty((n, d))
    u = np.empty((n, d))
    for i in range(n):
        norm = 0.0
        for c in range(d):
            u[i, c] = p1[i, c] - p0[i, c]
            norm += u[i, c] * u[i, c]
        norm = math.sqrt(norm)
        sgn = 0.0
        for c in range(d):
            u[i, c] /= norm
            if sgn == 0.0 and abs(u[i, c]) > 1e-14:
                sgn = 1.0 if u[i, c] > 0 else -1.0
        dot = 0.0
        for c in range(d):
            u[i, c] *= sgn
            dot += p0[i, c] * u[i, c]
        for c in range(d):
            base[i, c] = p0[i, c] - dot * u[i, c]
    return base, u


IMPLEMENTATIONS = {
    "gauss_legendre": (_gauss_legendre_numpy, _gauss_legendre_numba),
    "extremal_values": (_extremal_values_numpy, _extremal_values_numba),
    "bump_values": (_bump_values_numpy, _bump_values_numba),
    "multilinear": (_multilinear_numpy, _multilinear_numba),
    "gram_volumes": (_gram_volumes_numpy, _gram_volumes_numba),
    "lines_through": (_lines_through_numpy, _lines_through_numba),
}

_pick = 1 if USE_NUMBA else 0
gauss_legendre = IMPLEMENTATIONS["gauss_legendre"][_pick]
extremal_values = IMPLEMENTATIONS["extremal_values"][_pick]
bump_values = IMPLEMENTATIONS["bump_values"][_pick]
multilinear = IMPLEMENTATIONS["multilinear"][_pick]
gram_volumes = IMPLEMENTATIONS["gram_volumes"][_pick]
lines_through = IMPLEMENTATIONS["lines_through"][_pick]
