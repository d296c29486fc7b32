"""Quadrature rules: Gauss-Legendre on [-1, 1], Dunavant on the reference
triangle, and polygon integration by fan sub-triangulation."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference domain.

    For 1D rules ``points`` has shape ``(n,)`` on [-1, 1]. For triangle rules
    ``points`` holds area coordinates ``(l1, l2, l3)`` with shape ``(n, 3)`` and
    the weights sum to 1/2, the area of the unit reference triangle.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


@lru_cache(maxsize=None)
def gauss_legendre_1d(n_points: int) -> QuadratureRule:
    if n_points < 1:
        raise ValueError(f"need at least one Gauss point, got {n_points}")
    x, w = np.polynomial.legendre.leggauss(n_points)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w, 2 * n_points - 1)


# 12-point degree-6 rule (Dunavant 1985), weights normalised to unit area.
_D6_ORBITS_3 = (
    (0.116786275726379, 0.501426509658179, 0.249286745170910),
    (0.050844906370207, 0.873821971016996, 0.063089014491502),
)
_D6_ORBITS_6 = (
    (0.082851075618374, 0.053145049844817, 0.310352451033784, 0.636502499121399),
)


def _dunavant6():
    pts, wts = [], []
    for w, a, b in _D6_ORBITS_3:
        for perm in ((a, b, b), (b, a, b), (b, b, a)):
            pts.append(perm)
            wts.append(w)
    for w, a, b, c in _D6_ORBITS_6:
        for perm in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
            pts.append(perm)
            wts.append(w)
    pts = np.array(pts)
    # the tabulated third coordinate is rounded; restore exact barycentric sums
    pts[:, 2] = 1.0 - pts[:, 0] - pts[:, 1]
    return pts, 0.5 * np.array(wts)


@lru_cache(maxsize=None)
def dunavant_triangle(degree: int = 6) -> QuadratureRule:
    """Symmetric triangle rule; only degree 6 (12 points) is tabulated."""
    if degree != 6:
        raise ValueError(f"Dunavant rule of degree {degree} is not available (supported: 6)")
    pts, wts = _dunavant6()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, 6)


def fan_points(polygon, rule: QuadratureRule, apex=None):
    """Physical quadrature points and weights for a fan triangulation.

    The polygon is split into triangles ``(apex, v_i, v_{i+1})``; the apex
    defaults to the area centroid. Returns ``(points, weights, tri_index)``.
    """
    verts = np.asarray(polygon, dtype=float)
    if apex is None:
        apex = polygon_centroid(verts)
    apex = np.asarray(apex, dtype=float)
    nxt = np.roll(verts, -1, axis=0)
    e1 = verts - apex
    e2 = nxt - apex
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = max(np.ptp(verts[:, 0]), np.ptp(verts[:, 1])) ** 2
    if np.any(det <= 1e-14 * scale):
        bad = int(np.argmin(det))
        raise ValueError(f"degenerate fan triangle {bad} (twice-area {det[bad]:.3e})")
    lam = rule.points
    # x = l1 * apex + l2 * v_i + l3 * v_{i+1}
    pts = (apex[None, None, :] + lam[None, :, 1, None] * e1[:, None, :] + lam[None, :, 2, None] * e2[:, None, :])
    wts = det[:, None] * rule.weights[None, :]
    tri = np.repeat(np.arange(len(verts)), len(rule.weights))
    return pts.reshape(-1, 2), wts.reshape(-1), tri


def integrate_polygon(f, polygon, rule: QuadratureRule | None = None, apex=None) -> float:
    """Integrate ``f(points) -> values`` over a star-convex polygon.

    ``f`` receives an ``(m, 2)`` array of physical points and returns ``m``
    values (or ``(m, ...)`` arrays, summed along the first axis).
    """
    rule = rule or dunavant_triangle(6)
    pts, wts, _ = fan_points(polygon, rule, apex)
    vals = np.asarray(f(pts), dtype=float)
    return np.tensordot(wts, vals, axes=(0, 0))


def polygon_area(verts) -> float:
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(verts) -> np.ndarray:
    v = np.asarray(verts, dtype=float)
    # shift for round-off on far-from-origin polygons
    o = v.mean(axis=0)
    x, y = (v - o).T
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * cr.sum()
    cx = ((x + xn) * cr).sum() / (6.0 * a)
    cy = ((y + yn) * cr).sum() / (6.0 * a)
    return np.array([cx, cy]) + o
