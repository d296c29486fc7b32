"""Polygonal FEM with Laplace interpolants and fan sub-triangulation.

By default the shape functions are built on the regular reference n-gon and
mapped isoparametrically to the physical polygon. On a regular polygon every
vertex is a natural neighbour of every interior point, so the reference
shapes are smooth rational functions that the fan rule integrates well.
``mapping="physical"`` evaluates the Laplace interpolant directly on the
physical polygon instead.
"""

from dataclasses import dataclass

import numpy as np

from ..interpolants import GeometryError, laplace_shape_batch
from ..quadrature import QuadratureRule, dunavant_triangle, fan_points

MAPPINGS = ("isoparametric", "physical")


def strain_matrix(dphi):
    """Stack shape gradients ``(m, n, 2)`` into B matrices ``(m, 3, 2n)``."""
    m, n, _ = dphi.shape
    b = np.zeros((m, 3, 2 * n))
    b[:, 0, 0::2] = dphi[..., 0]
    b[:, 1, 1::2] = dphi[..., 1]
    b[:, 2, 0::2] = dphi[..., 1]
    b[:, 2, 1::2] = dphi[..., 0]
    return b


def reference_polygon(n: int) -> np.ndarray:
    """Regular n-gon inscribed in the unit circle, first vertex on +x, CCW."""
    t = 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


_REFERENCE_CACHE = {}


def _reference_data(n: int, rule: QuadratureRule):
    key = (n, id(rule))
    hit = _REFERENCE_CACHE.get(key)
    if hit is not None and hit[0] is rule:
        return hit[1]
    ref = reference_polygon(n)
    pts, wts, _ = fan_points(ref, rule, apex=np.zeros(2))
    phi, dphi = laplace_shape_batch(pts, ref)
    for a in (pts, wts, phi, dphi):
        a.setflags(write=False)
    _REFERENCE_CACHE[key] = (rule, (pts, wts, phi, dphi))
    return pts, wts, phi, dphi


@dataclass(frozen=True)
class ElementQuadrature:
    """Physical points, weights (including |J|), shape values and gradients."""

    points: np.ndarray
    weights: np.ndarray
    N: np.ndarray
    dN: np.ndarray


def polyfem_quadrature(verts, rule: QuadratureRule | None = None, mapping: str = "isoparametric"):
    rule = rule or dunavant_triangle(6)
    verts = np.asarray(verts, dtype=float)
    if mapping == "physical":
        pts, wts, _ = fan_points(verts, rule)
        phi, dphi = laplace_shape_batch(pts, verts)
        return ElementQuadrature(pts, wts, phi, dphi)
    if mapping != "isoparametric":
        raise ValueError(f"unknown mapping {mapping!r} (choose from {', '.join(MAPPINGS)})")
    _, wref, phi, dref = _reference_data(len(verts), rule)
    jac = np.einsum("gik,ij->gkj", dref, verts)  # jac[g, k, j] = d x_j / d xi_k
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0.0):
        raise GeometryError("isoparametric map of the polygon has a non-positive Jacobian")
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1] / det
    inv[:, 1, 1] = jac[:, 0, 0] / det
    inv[:, 0, 1] = -jac[:, 0, 1] / det
    inv[:, 1, 0] = -jac[:, 1, 0] / det
    dphi = np.einsum("gjk,gik->gij", inv, dref)
    return ElementQuadrature(phi @ verts, wref * det, phi, dphi)


def stiffness_polyfem(verts, material, rule: QuadratureRule | None = None, mapping: str = "isoparametric"):
    """Element stiffness ``sum_q B^T D B w_q |J_q|`` over the fan sub-triangles."""
    q = polyfem_quadrature(verts, rule, mapping)
    b = strain_matrix(q.dN)
    db = np.einsum("ij,mjk->mik", material.D, b)
    return np.einsum("m,mji,mjk->ik", q.weights, b, db)
