"""Cell-based smoothed polygonal FEM with n triangular subcells."""

from dataclasses import dataclass

import numpy as np

from ..interpolants import GeometryError, averaging_shapes


@dataclass(frozen=True)
class SmoothedSubcell:
    triangle: np.ndarray
    area: float
    B: np.ndarray


def vertex_average(verts):
    return np.asarray(verts, dtype=float).mean(axis=0)


def smoothed_subcells(verts):
    """Subcells ``(O, v_i, v_{i+1})`` with their smoothed strain matrices.

    The smoothed gradient of each shape function is the boundary integral of
    ``N_I n`` over the subcell, one Gauss point per straight edge, divided by
    the subcell area.
    """
    v = np.asarray(verts, dtype=float)
    n = len(v)
    tab = averaging_shapes(n)
    o = vertex_average(v)
    scale = float(np.ptp(v, axis=0).max()) ** 2
    cells = []
    for i in range(n):
        j = (i + 1) % n
        tri = np.array([o, v[i], v[j]])
        area = 0.5 * ((v[i, 0] - o[0]) * (v[j, 1] - o[1]) - (v[i, 1] - o[1]) * (v[j, 0] - o[0]))
        if area <= 1e-14 * scale:
            raise GeometryError(f"degenerate subcell {i} (area {area:.3e})")
        # edges O->v_i, v_i->v_j, v_j->O with midpoint shape rows
        rows = (tab.spoke_mid[i], tab.edge_mid[i], tab.spoke_mid[j])
        grad = np.zeros((n, 2))
        for (p, q), row in zip(((o, v[i]), (v[i], v[j]), (v[j], o)), rows):
            # outward normal times length for a CCW edge
            grad[:, 0] += row * (q[1] - p[1])
            grad[:, 1] += row * -(q[0] - p[0])
        grad /= area
        b = np.zeros((3, 2 * n))
        b[0, 0::2] = grad[:, 0]
        b[1, 1::2] = grad[:, 1]
        b[2, 0::2] = grad[:, 1]
        b[2, 1::2] = grad[:, 0]
        cells.append(SmoothedSubcell(tri, area, b))
    return cells


def stiffness_nsfem(verts, material):
    k = 0.0
    for c in smoothed_subcells(verts):
        k = k + c.area * c.B.T @ material.D @ c.B
    return k
