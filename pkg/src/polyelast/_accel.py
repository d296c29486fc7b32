"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``POLYELAST_DISABLE_NUMBA=1`` before import to force the numpy path.
Both paths are always importable so they can be compared against each other
(see ``bench/compare_kernels.py``).
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USE_NUMBA = numba is not None and os.environ.get("POLYELAST_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def _circum_scalar(a1, a2, b1, b2, x, y):
    # Circumcenter of (a, b, (x, y)) and its derivatives w.r.t. (x, y).
    d = (a1 - x) * (b2 - y) - (b1 - x) * (a2 - y)
    t1 = ((a1 - x) * (a1 + x) + (a2 - y) * (a2 + y)) * (b2 - y)
    t2 = ((b1 - x) * (b1 + x) + (b2 - y) * (b2 + y)) * (a2 - y)
    v1 = 0.5 * (t1 - t2) / d
    t4 = ((b1 - x) * (b1 + x) + (b2 - y) * (b2 + y)) * (a1 - x)
    t5 = ((a1 - x) * (a1 + x) + (a2 - y) * (a2 + y)) * (b1 - x)
    v2 = 0.5 * (t4 - t5) / d
    dx = a2 - b2
    dy = b1 - a1
    term3 = 0.5 * ((b1 * b1 - a1 * a1) + (b2 * b2 - a2 * a2))
    v1x = (x - v1) * dx / d
    v1y = (term3 + y * dx - v1 * dy) / d
    v2x = (-term3 + x * dy - v2 * dx) / d
    v2y = (y - v2) * dy / d
    return d, v1, v2, v1x, v1y, v2x, v2y


def _facet(verts, im, i, ip, x, y, out):
    # Signed Voronoi facet length s_i between the bisectors of (x, v_im) and
    # (x, v_ip), its gradient, and h_i = |x - v_i|. Returns False if degenerate.
    a1 = verts[i, 0]
    a2 = verts[i, 1]
    d1, v1, v2, v1x, v1y, v2x, v2y = _circum_scalar(verts[im, 0], verts[im, 1], a1, a2, x, y)
    d2, s1, s2, s1x, s1y, s2x, s2y = _circum_scalar(a1, a2, verts[ip, 0], verts[ip, 1], x, y)
    if d1 == 0.0 or d2 == 0.0:
        return False
    hx = x - a1
    hy = y - a2
    h = np.sqrt(hx * hx + hy * hy)
    # unit tangent of the bisector, CCW about x
    tx = hy / h
    ty = -hx / h
    out[0] = (s1 - v1) * tx + (s2 - v2) * ty
    out[1] = (s1x - v1x) * tx + (s2x - v2x) * ty
    out[2] = (s1y - v1y) * tx + (s2y - v2y) * ty
    out[3] = hx
    out[4] = hy
    out[5] = h
    return True


def _laplace_loop(points, verts, phi, dphi):
    """Loop form of the Laplace (natural-neighbour) shape functions.

    The Voronoi cell of x among the polygon vertices is the intersection of
    bisector half-planes taken in polygon order; a vertex whose facet length
    is not positive for its current neighbours is redundant (not a natural
    neighbour) and is removed until all remaining facets are positive.

    Returns 0 on success, otherwise ``1 + k`` where ``k`` is the first point
    index at which a circumcenter determinant vanished or the weight sum was
    not positive.
    """
    m = points.shape[0]
    n = verts.shape[0]
    fac = np.empty((n, 6))
    prv = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    active = np.empty(n, dtype=np.bool_)
    for k in range(m):
        x = points[k, 0]
        y = points[k, 1]
        for i in range(n):
            prv[i] = i - 1 if i > 0 else n - 1
            nxt[i] = i + 1 if i < n - 1 else 0
            active[i] = True
        for i in range(n):
            if not _facet(verts, prv[i], i, nxt[i], x, y, fac[i]):
                return 1 + k
        count = n
        while count > 3:
            worst = -1
            wval = 0.0
            for i in range(n):
                if active[i] and fac[i, 0] <= wval:
                    wval = fac[i, 0]
                    worst = i
            if worst < 0:
                break
            active[worst] = False
            count -= 1
            a = prv[worst]
            b = nxt[worst]
            nxt[a] = b
            prv[b] = a
            if not _facet(verts, prv[a], a, b, x, y, fac[a]):
                return 1 + k
            if not _facet(verts, a, b, nxt[b], x, y, fac[b]):
                return 1 + k
        denom = 0.0
        sx = 0.0
        sy = 0.0
        for i in range(n):
            if active[i]:
                h = fac[i, 5]
                al = fac[i, 0] / h
                ax = (fac[i, 1] - al * fac[i, 3] / h) / h
                ay = (fac[i, 2] - al * fac[i, 4] / h) / h
                fac[i, 0] = al
                fac[i, 1] = ax
                fac[i, 2] = ay
                denom += al
                sx += ax
                sy += ay
        if not denom > 0.0:
            return 1 + k
        for i in range(n):
            if active[i]:
                p = fac[i, 0] / denom
                phi[k, i] = p
                dphi[k, i, 0] = (fac[i, 1] - p * sx) / denom
                dphi[k, i, 1] = (fac[i, 2] - p * sy) / denom
            else:
                phi[k, i] = 0.0
                dphi[k, i, 0] = 0.0
                dphi[k, i, 1] = 0.0
    return 0


def _circum_vec(a, b, p):
    # a, b, p broadcastable (..., 2)
    a1, a2 = a[..., 0], a[..., 1]
    b1, b2 = b[..., 0], b[..., 1]
    x, y = p[..., 0], p[..., 1]
    d = (a1 - x) * (b2 - y) - (b1 - x) * (a2 - y)
    qa = (a1 - x) * (a1 + x) + (a2 - y) * (a2 + y)
    qb = (b1 - x) * (b1 + x) + (b2 - y) * (b2 + y)
    with np.errstate(divide="ignore", invalid="ignore"):
        v1 = 0.5 * (qa * (b2 - y) - qb * (a2 - y)) / d
        v2 = 0.5 * (qb * (a1 - x) - qa * (b1 - x)) / d
        dx = a2 - b2
        dy = b1 - a1
        term3 = 0.5 * ((b1 * b1 - a1 * a1) + (b2 * b2 - a2 * a2))
        v1x = (x - v1) * dx / d
        v1y = (term3 + y * dx - v1 * dy) / d
        v2x = (-term3 + x * dy - v2 * dx) / d
        v2y = (y - v2) * dy / d
    return d, v1, v2, v1x, v1y, v2x, v2y


def _neighbour_index(active, step):
    """Nearest active index before (step=-1) or after (step=+1) each slot, cyclically."""
    m, n = active.shape
    idx = np.arange(n)
    out = np.zeros((m, n), dtype=np.int64)
    # farthest offsets first so the nearest active slot wins
    for off in range(n - 1, 0, -1):
        j = (idx + step * off) % n
        hit = active[:, j]
        out = np.where(hit, j[None, :], out)
    return out


def _facets_numpy(points, verts, prv, nxt):
    m, n = prv.shape
    p = points[:, None, :]
    v = verts[None, :, :]
    vm = verts[prv]
    vp = verts[nxt]
    d1, v1, v2, v1x, v1y, v2x, v2y = _circum_vec(vm, v, p)
    d2, s1, s2, s1x, s1y, s2x, s2y = _circum_vec(v, vp, p)
    hx = p[..., 0] - v[..., 0]
    hy = p[..., 1] - v[..., 1]
    h = np.hypot(hx, hy)
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = hy / h
        ty = -hx / h
        si = (s1 - v1) * tx + (s2 - v2) * ty
        si_x = (s1x - v1x) * tx + (s2x - v2x) * ty
        si_y = (s1y - v1y) * tx + (s2y - v2y) * ty
    bad = (d1 == 0.0) | (d2 == 0.0)
    return si, si_x, si_y, hx, hy, h, bad


def laplace_shape_numpy(points, verts):
    """Vectorised numpy evaluation; returns ``(phi, dphi, status)``."""
    m, n = points.shape[0], verts.shape[0]
    active = np.ones((m, n), dtype=bool)
    rows = np.arange(m)
    while True:
        prv = _neighbour_index(active, -1)
        nxt = _neighbour_index(active, +1)
        si, si_x, si_y, hx, hy, h, bad = _facets_numpy(points, verts, prv, nxt)
        masked = np.where(active, si, np.inf)
        worst = np.argmin(masked, axis=1)
        drop = (masked[rows, worst] <= 0.0) & (active.sum(axis=1) > 3)
        if not drop.any():
            break
        active[rows[drop], worst[drop]] = False
    bad = np.any(bad & active, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(active, si / h, 0.0)
        dax = np.where(active, (si_x - alpha * hx / h) / h, 0.0)
        day = np.where(active, (si_y - alpha * hy / h) / h, 0.0)
        denom = alpha.sum(axis=1)
        phi = alpha / denom[:, None]
        dphi = np.empty(phi.shape + (2,))
        dphi[..., 0] = (dax - phi * dax.sum(axis=1)[:, None]) / denom[:, None]
        dphi[..., 1] = (day - phi * day.sum(axis=1)[:, None]) / denom[:, None]
    bad |= ~(denom > 0.0)
    status = 0 if not bad.any() else 1 + int(np.argmax(bad))
    return phi, dphi, status


def laplace_shape_loop(points, verts):
    m, n = points.shape[0], verts.shape[0]
    phi = np.empty((m, n))
    dphi = np.empty((m, n, 2))
    status = _laplace_kernel(points, verts, phi, dphi)
    return phi, dphi, status


def _clip_halfplanes_loop(poly, normals, offsets, out):
    """Clip a convex polygon by half-planes ``normals[j] . x <= offsets[j]``.

    ``out`` must hold at least ``len(poly) + len(normals)`` rows. Returns the
    vertex count of the clipped polygon (0 if it vanished).
    """
    cap = out.shape[0]
    cur = np.empty((cap, 2))
    nxt = np.empty((cap, 2))
    n = poly.shape[0]
    for i in range(n):
        cur[i, 0] = poly[i, 0]
        cur[i, 1] = poly[i, 1]
    for j in range(normals.shape[0]):
        nx = normals[j, 0]
        ny = normals[j, 1]
        c = offsets[j]
        m = 0
        for i in range(n):
            px = cur[i, 0]
            py = cur[i, 1]
            qx = cur[(i + 1) % n, 0]
            qy = cur[(i + 1) % n, 1]
            fp = nx * px + ny * py - c
            fq = nx * qx + ny * qy - c
            if fp <= 0.0:
                nxt[m, 0] = px
                nxt[m, 1] = py
                m += 1
            if (fp < 0.0 and fq > 0.0) or (fp > 0.0 and fq < 0.0):
                t = fp / (fp - fq)
                nxt[m, 0] = px + t * (qx - px)
                nxt[m, 1] = py + t * (qy - py)
                m += 1
        n = m
        if n == 0:
            return 0
        for i in range(n):
            cur[i, 0] = nxt[i, 0]
            cur[i, 1] = nxt[i, 1]
    for i in range(n):
        out[i, 0] = cur[i, 0]
        out[i, 1] = cur[i, 1]
    return n


def clip_halfplanes_numpy(poly, normals, offsets):
    cur = np.asarray(poly, dtype=float)
    for nrm, c in zip(normals, offsets):
        f = cur @ nrm - c
        keep = f <= 0.0
        if keep.all():
            continue
        if not keep.any():
            return cur[:0]
        nxt_f = np.roll(f, -1)
        nxt_p = np.roll(cur, -1, axis=0)
        cross = ((f < 0.0) & (nxt_f > 0.0)) | ((f > 0.0) & (nxt_f < 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = f / (f - nxt_f)
        inter = cur + t[:, None] * (nxt_p - cur)
        # interleave kept vertices and crossings in traversal order
        rows = np.stack([cur, inter], axis=1).reshape(-1, 2)
        mask = np.stack([keep, cross], axis=1).reshape(-1)
        cur = rows[mask]
    return cur


def clip_halfplanes_loop(poly, normals, offsets):
    out = np.empty((poly.shape[0] + normals.shape[0] + 1, 2))
    n = _clip_kernel(np.ascontiguousarray(poly, dtype=float), np.ascontiguousarray(normals, dtype=float),
                     np.ascontiguousarray(offsets, dtype=float), out)
    return out[:n].copy()


if USE_NUMBA:
    _circum_scalar = numba.njit(cache=True, inline="always")(_circum_scalar)
    _facet = numba.njit(cache=True, inline="always")(_facet)
    _laplace_kernel = numba.njit(cache=True, nogil=True)(_laplace_loop)
    _clip_kernel = numba.njit(cache=True, nogil=True)(_clip_halfplanes_loop)
    laplace_shape_batch = laplace_shape_loop
    clip_halfplanes = clip_halfplanes_loop
else:
    _laplace_kernel = _laplace_loop
    _clip_kernel = _clip_halfplanes_loop
    laplace_shape_batch = laplace_shape_numpy
    clip_halfplanes = clip_halfplanes_numpy
