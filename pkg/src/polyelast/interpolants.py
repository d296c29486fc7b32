"""Shape functions for the three polygon formulations.

* Laplace (natural-neighbour) interpolants on convex polygons, evaluated in
  physical coordinates.
* 1D Gauss-Lobatto-Lagrange shape functions of order 1-3 for the
  scaled-boundary edges.
* The simple-averaging value table used by the smoothed formulation.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .quadrature import polygon_area


class GeometryError(ValueError):
    """Raised when a point or polygon is unsuitable for the requested evaluation."""


@dataclass(frozen=True)
class ShapeEval:
    values: np.ndarray
    grads: np.ndarray


def circumcenter_with_derivs(a, b, x):
    """Circumcenter of the triangle ``(a, b, x)`` and its Jacobian w.r.t. ``x``.

    Returns ``(center, dcenter)`` with ``dcenter[i, k] = d center_i / d x_k``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    d, v1, v2, v1x, v1y, v2x, v2y = _accel._circum_vec(a, b, x)
    scale = max(np.ptp([a[0], b[0], x[0]]), np.ptp([a[1], b[1], x[1]])) ** 2
    if abs(d) <= 1e-14 * scale:
        raise GeometryError(f"collinear points {a.tolist()}, {b.tolist()}, {x.tolist()} have no circumcenter")
    return np.array([v1, v2]), np.array([[v1x, v1y], [v2x, v2y]])


def _diameter(verts):
    d = verts[:, None, :] - verts[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def is_convex(verts, tol=1e-12) -> bool:
    v = np.asarray(verts, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    cr = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    return bool(np.all(cr >= -tol * _diameter(v) ** 2))


def boundary_distance(points, verts):
    """Signed distance of each point to the polygon boundary (positive inside,
    assuming a convex CCW polygon)."""
    p = np.atleast_2d(points)
    a = verts
    e = np.roll(verts, -1, axis=0) - a
    ln = np.hypot(e[:, 0], e[:, 1])
    # inward normal of a CCW edge is (-ey, ex)
    rel = p[:, None, :] - a[None, :, :]
    sd = (rel[..., 1] * e[None, :, 0] - rel[..., 0] * e[None, :, 1]) / ln[None, :]
    return sd.min(axis=1)


def laplace_shape_batch(points, polygon, check: bool = True):
    """Laplace shape values ``(m, n)`` and gradients ``(m, n, 2)`` at many points."""
    verts = np.ascontiguousarray(polygon, dtype=float)
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    if check:
        if polygon_area(verts) <= 0.0 or not is_convex(verts):
            raise GeometryError("Laplace interpolants need a convex counter-clockwise polygon")
        dist = boundary_distance(pts, verts)
        tol = 1e-10 * _diameter(verts)
        if np.any(dist <= tol):
            k = int(np.argmin(dist))
            raise GeometryError(f"point {pts[k].tolist()} is not strictly inside the polygon")
    phi, dphi, status = _accel.laplace_shape_batch(pts, verts)
    if status:
        k = status - 1
        raise GeometryError(f"degenerate circumcenter triple for point {pts[k].tolist()}")
    return phi, dphi


def laplace_shape(x, polygon) -> ShapeEval:
    phi, dphi = laplace_shape_batch(np.asarray(x, dtype=float)[None, :], polygon)
    return ShapeEval(phi[0], dphi[0])


_LOBATTO = {
    1: np.array([-1.0, 1.0]),
    2: np.array([-1.0, 0.0, 1.0]),
    3: np.array([-1.0, -1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0), 1.0]),
}


def lobatto_nodes(order: int) -> np.ndarray:
    try:
        return _LOBATTO[order]
    except KeyError:
        raise ValueError(f"unsupported 1D shape order {order} (supported: 1, 2, 3)") from None


def lagrange_shape_1d(order: int, eta):
    """Gauss-Lobatto-Lagrange shape functions on [-1, 1].

    Accepts a scalar or an array of local coordinates. Returns
    ``ShapeEval(values, grads)``; for array input both have shape
    ``(len(eta), order + 1)``.
    """
    lobatto_nodes(order)
    e = np.asarray(eta, dtype=float)
    scalar = e.ndim == 0
    e = np.atleast_1d(e)
    if order == 1:
        n = np.stack([0.5 * (1 - e), 0.5 * (1 + e)], axis=-1)
        dn = np.tile([-0.5, 0.5], (len(e), 1))
    elif order == 2:
        n = np.stack([0.5 * (e - 1) * e, 1 - e * e, 0.5 * (1 + e) * e], axis=-1)
        dn = np.stack([e - 0.5, -2 * e, e + 0.5], axis=-1)
    else:
        s5 = np.sqrt(5.0)
        n = np.stack([
            -0.125 * (e - 1) * (5 * e * e - 1),
            0.625 * (e * e - 1) * (s5 * e - 1),
            -0.625 * (e * e - 1) * (s5 * e + 1),
            0.125 * (e + 1) * (5 * e * e - 1),
        ], axis=-1)
        dn = np.stack([
            0.125 * (1 + (10 - 15 * e) * e),
            0.625 * (-s5 + (-2 + 3 * s5 * e) * e),
            -0.625 * (-s5 + (2 + 3 * s5 * e) * e),
            0.125 * (-1 + (10 + 15 * e) * e),
        ], axis=-1)
    if scalar:
        return ShapeEval(n[0], dn[0])
    return ShapeEval(n, dn)


@dataclass(frozen=True)
class AveragingShapeTable:
    """Shape-function rows of the simple-averaging construction for one polygon.

    ``vertex`` is the identity, ``edge_mid[i]`` belongs to the midpoint of edge
    ``(i, i+1)``, ``center`` to the vertex-average point O and ``spoke_mid[i]``
    to the midpoint between vertex ``i`` and O.
    """

    vertex: np.ndarray
    edge_mid: np.ndarray
    center: np.ndarray
    spoke_mid: np.ndarray


def averaging_shapes(n_vertices: int) -> AveragingShapeTable:
    n = int(n_vertices)
    if n < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    eye = np.eye(n)
    center = np.full(n, 1.0 / n)
    edge_mid = 0.5 * (eye + np.roll(eye, -1, axis=0))
    spoke_mid = 0.5 * (eye + center[None, :])
    return AveragingShapeTable(eye, edge_mid, center, spoke_mid)
