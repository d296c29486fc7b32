"""Clipped Voronoi tessellations and Lloyd relaxation."""

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix
from scipy.spatial import Delaunay, QhullError, cKDTree

from .. import _accel
from ..quadrature import polygon_area, polygon_centroid
from .core import Domain, MeshError, PolygonMesh, domain_tagger, find_boundary_edges


class DuplicateSeedError(MeshError):
    """Two seeds coincide, so their Voronoi cells are undefined."""


class SeedOutsideError(MeshError):
    """A seed lies outside the domain or inside a hole."""


def random_seeds(domain: Domain, n, rng):
    """``n`` uniform seeds inside the domain by rejection sampling."""
    rng = np.random.default_rng(rng)
    lo, hi = domain.outer.min(0), domain.outer.max(0)
    out = np.empty((0, 2))
    while len(out) < n:
        cand = rng.uniform(lo, hi, size=(2 * (n - len(out)) + 8, 2))
        out = np.vstack([out, cand[domain.contains(cand)]])
    return out[:n]


def graded_seeds(domain: Domain, size, rng, spacing=0.8, candidates=None):
    """Well-spaced seeds with local spacing ``size(points) -> (m,)``.

    Dart throwing: uniform candidates are accepted when no accepted seed
    lies within ``spacing`` times the local size of either point.
    """
    rng = np.random.default_rng(rng)
    lo, hi = domain.outer.min(0), domain.outer.max(0)
    if candidates is None:
        probe = random_seeds(domain, 4000, rng)
        est = domain.area * np.mean(1.0 / np.asarray(size(probe)) ** 2)
        candidates = int(min(max(20 * est, 2000), 400000))
    cand = rng.uniform(lo, hi, size=(candidates, 2))
    cand = cand[domain.contains(cand)]
    hc = np.asarray(size(cand), dtype=float)
    cand, hc = cand[np.argsort(hc, kind="stable")], np.sort(hc, kind="stable")
    tree_pts, tree_h = [], []
    grid = {}
    cell = float(hc.max()) * spacing
    for p, h in zip(cand, hc):
        key = (int(p[0] // cell), int(p[1] // cell))
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for j in grid.get((key[0] + dx, key[1] + dy), ()):
                    if np.hypot(*(tree_pts[j] - p)) < spacing * max(h, tree_h[j]):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            grid.setdefault(key, []).append(len(tree_pts))
            tree_pts.append(p)
            tree_h.append(h)
    return np.array(tree_pts)


def _neighbours(seeds):
    n = len(seeds)
    if n < 4:
        return [[j for j in range(n) if j != i] for i in range(n)]
    try:
        tri = Delaunay(seeds)
    except QhullError:
        return [[j for j in range(n) if j != i] for i in range(n)]
    indptr, indices = tri.vertex_neighbor_vertices
    nb = [list(indices[indptr[i]:indptr[i + 1]]) for i in range(n)]
    # coplanar (collinear/duplicate-like) points are dropped by qhull
    missing = set(range(n)) - set(np.unique(tri.simplices))
    if missing:
        return [[j for j in range(n) if j != i] for i in range(n)]
    return nb


def voronoi_cells(domain: Domain, seeds):
    """Voronoi cells of ``seeds`` intersected with the outer polygon.

    Holes are not removed here; see :func:`cut_holes`.
    """
    seeds = np.asarray(seeds, dtype=float)
    nb = _neighbours(seeds)
    cells = []
    for i, s in enumerate(seeds):
        d = seeds[nb[i]] - s
        # half-plane closer to s than to s_j: d . x <= d . (s + d / 2)
        offsets = d @ s + 0.5 * (d * d).sum(1)
        cells.append(_accel.clip_halfplanes(domain.outer, d, offsets))
    return cells


def _circle_crossings(cell, c, r):
    """Points where the closed polygon crosses the circle, with traversal info.

    Returns a list of ``(edge_index, t, point, entering)`` sorted along the
    boundary; ``entering`` is True when the boundary goes into the disk.
    """
    out = []
    n = len(cell)
    for i in range(n):
        p, q = cell[i], cell[(i + 1) % n]
        d = q - p
        f = p - c
        a = d @ d
        b = 2 * f @ d
        cc = f @ f - r * r
        disc = b * b - 4 * a * cc
        if disc <= 0 or a == 0:
            continue
        sq = np.sqrt(disc)
        for t in sorted(((-b - sq) / (2 * a), (-b + sq) / (2 * a))):
            if 0.0 <= t < 1.0:
                entering = (2 * a * t + b) < 0
                out.append((i, t, p + t * d, entering))
    return out


def cut_holes(cells, domain: Domain):
    """Replace the disk part of every cell by the chord between its crossings.

    The hole is represented by the inscribed polygon whose vertices are the
    points where Voronoi edges cross the circle. Cells entirely inside a hole
    are dropped (returned as ``None``).
    """
    out = []
    for k, cell in enumerate(cells):
        for hi, (c, r) in enumerate(domain.holes):
            if cell is None:
                break
            c = np.asarray(c)
            inside = np.hypot(*(cell - c).T) < r
            xs = _circle_crossings(cell, c, r)
            if not xs:
                if inside.all():
                    cell = None
                elif inside.any():
                    raise MeshError(f"cell {k} touches hole {hi} tangentially; perturb the seeds")
                elif _point_in_convex(cell, c):
                    raise MeshError(f"cell {k} contains hole {hi}; use more seeds")
                continue
            if len(xs) != 2:
                raise MeshError(f"cell {k} crosses hole {hi} {len(xs)} times; use more seeds near the hole")
            enter = next(x for x in xs if x[3])
            leave = next(x for x in xs if not x[3])
            p1, p2 = enter[2], leave[2]
            chord = p2 - p1
            # keep the side of the chord away from the centre
            nrm = np.array([chord[1], -chord[0]])
            if nrm @ (c - p1) < 0:
                nrm = -nrm
            clipped = _accel.clip_halfplanes(cell, nrm[None, :], np.array([nrm @ p1]))
            # pin the crossing points exactly so neighbours agree bitwise
            for p in (p1, p2):
                dd = np.hypot(*(clipped - p).T)
                if len(dd) and dd.min() < 1e-9 * r:
                    clipped[np.argmin(dd)] = p
            cell = clipped if len(clipped) >= 3 and polygon_area(clipped) > 0 else None
        out.append(cell)
    return out


def _point_in_convex(poly, p):
    e = np.roll(poly, -1, axis=0) - poly
    rel = p - poly
    return bool(np.all(e[:, 0] * rel[:, 1] - e[:, 1] * rel[:, 0] > 0))


def _check_seeds(domain, seeds, tol):
    if seeds.ndim != 2 or seeds.shape[1] != 2 or len(seeds) == 0:
        raise MeshError("seeds must be a non-empty (n, 2) array")
    inside = domain.contains(seeds)
    if not inside.all():
        k = int(np.argmin(inside))
        raise SeedOutsideError(f"seed {k} at {seeds[k].tolist()} is outside the domain")
    pairs = cKDTree(seeds).query_pairs(tol)
    if pairs:
        i, j = min(pairs)
        raise DuplicateSeedError(f"seeds {i} and {j} coincide at {seeds[i].tolist()}")


def cvt_energy(cells, seeds):
    """Sum over cells of the second moment of area about the cell's seed."""
    from ..quadrature import dunavant_triangle, fan_points

    rule = dunavant_triangle(6)
    total = 0.0
    for cell, s in zip(cells, seeds):
        if cell is None:
            continue
        pts, w, _ = fan_points(cell, rule)
        total += float(w @ ((pts - s) ** 2).sum(1))
    return total


def _weighted_centroid(cell, density):
    from ..quadrature import dunavant_triangle, fan_points
    try:
        pts, w, _ = fan_points(cell, dunavant_triangle(2))
    except ValueError:
        return polygon_centroid(cell)
    w = w * np.asarray(density(pts), dtype=float)
    return (w @ pts) / w.sum()


def lloyd(domain: Domain, seeds, iterations, constrain=None, energies=None, density=None):
    """Lloyd relaxation; returns the relaxed seeds.

    ``constrain(seeds) -> seeds`` is applied after every update (used to keep
    fixed or mirrored seeds). When ``energies`` is a list, the CVT energy of
    each tessellation is appended to it. ``density(points)`` turns the
    centroids into mass centroids, which grades the cells (cell size
    scales like ``density ** -1/4``).
    """
    seeds = np.array(seeds, dtype=float)
    for _ in range(iterations):
        cells = cut_holes(voronoi_cells(domain, seeds), domain)
        if energies is not None:
            energies.append(cvt_energy(cells, seeds))
        if density is None:
            new = np.array([polygon_centroid(c) if c is not None else s for c, s in zip(cells, seeds)])
        else:
            new = np.array([_weighted_centroid(c, density) if c is not None else s for c, s in zip(cells, seeds)])
        new = _push_out_of_holes(domain, new)
        seeds = constrain(new) if constrain else new
    if energies is not None:
        cells = cut_holes(voronoi_cells(domain, seeds), domain)
        energies.append(cvt_energy(cells, seeds))
    return seeds


def _push_out_of_holes(domain, pts):
    pts = pts.copy()
    for c, r in domain.holes:
        d = pts - np.asarray(c)
        rr = np.hypot(d[:, 0], d[:, 1])
        bad = rr <= r * (1 + 1e-3)
        if bad.any():
            pts[bad] = np.asarray(c) + d[bad] / rr[bad, None] * r * 1.05
    return pts


def polygons_to_mesh(polys, tol, tagger=None, cracks=()):
    """Merge polygon vertices closer than ``tol`` into shared nodes."""
    polys = [np.asarray(p, dtype=float) for p in polys]
    allv = np.vstack(polys)
    pairs = cKDTree(allv).query_pairs(tol, output_type="ndarray")
    n = len(allv)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else coo_matrix((n, n))
    _, label = connected_components(g, directed=False)
    # number nodes by first appearance for a deterministic ordering
    order = {}
    ids = np.empty(n, dtype=np.int64)
    for k, lab in enumerate(label):
        ids[k] = order.setdefault(lab, len(order))
    nodes = np.zeros((len(order), 2))
    first = np.full(len(order), -1)
    for k in range(n):
        if first[ids[k]] < 0:
            first[ids[k]] = k
    nodes[:] = allv[first]
    elements = []
    start = 0
    for p in polys:
        idx = list(ids[start:start + len(p)])
        start += len(p)
        cleaned = [v for i, v in enumerate(idx) if v != idx[i - 1]] if len(idx) > 1 else idx
        if len(set(cleaned)) >= 3:
            elements.append(cleaned)
    mesh = PolygonMesh(nodes, elements, (), cracks)
    return PolygonMesh(nodes, elements, find_boundary_edges(mesh, tagger), cracks)


def generate_voronoi_mesh(domain: Domain, seeds, lloyd_iterations: int = 0, constrain=None, energies=None,
                          density=None):
    """Voronoi mesh of the (optionally Lloyd-relaxed) seeds clipped to the domain."""
    if lloyd_iterations < 0:
        raise MeshError("lloyd_iterations must be >= 0")
    seeds = np.asarray(seeds, dtype=float)
    tol = 1e-12 * domain.diameter
    _check_seeds(domain, seeds, tol)
    seeds = lloyd(domain, seeds, lloyd_iterations, constrain, energies, density)
    _check_seeds(domain, seeds, tol)
    cells = cut_holes(voronoi_cells(domain, seeds), domain)
    polys = [c for c in cells if c is not None]
    return polygons_to_mesh(polys, tol, domain_tagger(domain))
