"""Polygon meshes dual to a conforming triangulation."""

import numpy as np

from .core import MeshError, PolygonMesh, find_boundary_edges


def dual_polygon_mesh(tri_nodes, tri_elements, tagger=None) -> PolygonMesh:
    """One polygon per triangulation node, built from incident triangle centroids.

    Interior nodes give the polygon of centroids of the surrounding
    triangles. Boundary nodes additionally use the midpoints of their two
    boundary edges and the node itself, so the polygons tile the
    triangulated region exactly.
    """
    pts = np.asarray(tri_nodes, dtype=float)
    tris = np.array(tri_elements, dtype=np.int64).reshape(-1, 3)
    if tris.min() < 0 or tris.max() >= len(pts):
        raise MeshError("triangle references a node out of range")
    a, b, c = (pts[tris[:, k]] for k in range(3))
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    tris = np.where((area2 < 0)[:, None], tris[:, [0, 2, 1]], tris)
    if np.any(area2 == 0):
        raise MeshError(f"triangle {int(np.argmax(area2 == 0))} is degenerate")

    owner = {}
    for t, (i, j, k) in enumerate(tris):
        for e in ((i, j), (j, k), (k, i)):
            if e in owner:
                raise MeshError(f"edge {e} is used twice in the same direction; triangulation is not conforming")
            owner[e] = t
    used = np.unique(tris)

    out_nodes = []
    index = {}

    def node(key, xy):
        if key not in index:
            index[key] = len(out_nodes)
            out_nodes.append(xy)
        return index[key]

    centroid = pts[tris].mean(axis=1)
    # outgoing directed edges per vertex
    outgoing = {}
    for (i, j) in owner:
        outgoing.setdefault(i, []).append(j)

    polys = []
    for v in used:
        v = int(v)
        starts = [w for w in outgoing[v] if (w, v) not in owner]
        if len(starts) > 1:
            raise MeshError(f"node {v} is a non-manifold boundary node")
        w = starts[0] if starts else outgoing[v][0]
        ring = []
        t = owner[(v, w)]
        seen = set()
        while True:
            if t in seen:
                raise MeshError(f"cannot walk around node {v}; triangulation is not conforming")
            seen.add(t)
            ring.append(t)
            i, j, k = tris[t]
            last = {i: k, j: i, k: j}[v]  # vertex preceding v in this triangle
            if (v, last) not in owner:
                break
            t = owner[(v, last)]
            if not starts and t == ring[0]:
                break
        poly = []
        if starts:
            poly.append(node(("n", v), pts[v]))
            poly.append(node(("m",) + tuple(sorted((v, w))), 0.5 * (pts[v] + pts[w])))
        poly += [node(("c", t), centroid[t]) for t in ring]
        if starts:
            poly.append(node(("m",) + tuple(sorted((v, last))), 0.5 * (pts[v] + pts[last])))
        polys.append(poly)
    mesh = PolygonMesh(np.array(out_nodes), polys)
    return PolygonMesh(mesh.nodes, mesh.elements, find_boundary_edges(mesh, tagger))
