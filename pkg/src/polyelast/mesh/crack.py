"""Crack-conforming meshes for scaled-boundary crack-tip polygons."""

import numpy as np

from ..quadrature import polygon_centroid
from .core import CrackDescriptor, Domain, MeshError, PolygonMesh, find_boundary_edges


class CrackSeeds:
    """Seed constraint that makes Voronoi edges follow straight cracks.

    Seeds in a band around each crack are replaced by mirror pairs so the
    crack line is a union of Voronoi edges. A seed is pinned at every tip,
    so the tip ends up strictly inside one cell, and ``ring`` seeds are
    pinned at distance ``ring_radius * h`` around it at equal angles
    starting on the prolongation (the one pointing back along the crack is
    left out). With ``interior=True`` both ends of every crack are tips.
    The tip cell is then close to a regular polygon with an edge
    perpendicular to the crack ahead of the tip. Use it as the
    ``constrain`` hook of :func:`lloyd` and on the initial seeds.
    """

    def __init__(self, domain: Domain, cracks, h, band=2.5, tip_radius=0.9, min_offset=0.3, ring=8,
                 ring_radius=1.0, interior=False):
        self.domain = domain
        self.cracks = [(np.asarray(m, dtype=float), np.asarray(t, dtype=float)) for m, t in cracks]
        self.h = float(h)
        self.band = band * self.h
        self.tip_radius = tip_radius * self.h
        self.min_offset = min_offset * self.h
        pinned = []
        tips = [(m, t) for m, t in self.cracks]
        if interior:
            tips += [(t, m) for m, t in self.cracks]
        for m, t in tips:
            pinned.append(t)
            if not ring:
                continue
            base = np.arctan2(*(t - m)[::-1])
            ang = base + 2.0 * np.pi * np.arange(ring) / ring
            ang = ang[np.abs(np.arange(ring) - ring / 2) > 1e-9]
            q = t + ring_radius * self.h * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
            pinned.extend(q[self.domain.contains(q)])
        self.pinned = np.array(pinned)

    def __call__(self, seeds):
        seeds = np.asarray(seeds, dtype=float)
        keep = np.ones(len(seeds), dtype=bool)
        for q in self.pinned:
            keep &= np.hypot(*(seeds - q).T) > self.tip_radius
        seeds = seeds[keep]
        extra = []
        for mouth, tip in self.cracks:
            d = tip - mouth
            length = np.hypot(*d)
            u = d / length
            nrm = np.array([-u[1], u[0]])
            rel = seeds - mouth
            s = rel @ u
            off = rel @ nrm
            inband = (np.abs(off) < self.band) & (s > -self.band) & (s < length + self.band)
            upper = seeds[inband & (off > 0)]
            seeds = seeds[~inband]
            ou = np.maximum((upper - mouth) @ nrm, self.min_offset)
            su = (upper - mouth) @ u
            a = mouth + su[:, None] * u + ou[:, None] * nrm
            b = mouth + su[:, None] * u - ou[:, None] * nrm
            ok = self.domain.contains(a) & self.domain.contains(b)
            extra.extend([a[ok], b[ok]])
        return np.vstack([seeds] + extra + [self.pinned])


def _undirected_edges(elems):
    seen = {}
    for ei, el in enumerate(elems):
        n = len(el)
        for i in range(n):
            a, b = el[i], el[(i + 1) % n]
            seen.setdefault((min(a, b), max(a, b)), []).append(ei)
    return seen


def _insert_between(el, a, b, new_ids):
    """Insert ``new_ids`` (ordered from a to b) into element list ``el`` on edge a-b."""
    n = len(el)
    for i in range(n):
        if el[i] == a and el[(i + 1) % n] == b:
            return el[:i + 1] + list(new_ids) + el[i + 1:]
        if el[i] == b and el[(i + 1) % n] == a:
            return el[:i + 1] + list(reversed(new_ids)) + el[i + 1:]
    return el


def _point_strictly_inside(xy, p, tol):
    """Strict interiority for a simple polygon (winding) with a boundary margin."""
    n = len(xy)
    for i in range(n):
        a, b = xy[i], xy[(i + 1) % n]
        ab = b - a
        if ab @ ab == 0.0:
            continue
        t = np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0)
        if np.hypot(*(a + t * ab - p)) <= tol:
            return False
    ang = np.arctan2(*(xy - p).T[::-1])
    dang = np.diff(np.append(ang, ang[0]))
    dang = (dang + np.pi) % (2 * np.pi) - np.pi
    return abs(dang.sum()) > np.pi


def _boundary_inheritor(mesh, tol):
    old = [(mesh.nodes[a], mesh.nodes[b], t) for a, b, t in mesh.boundary_edges]

    def tag(p, q):
        for a, b, t in old:
            ab = b - a
            L2 = ab @ ab
            ok = True
            for x in (p, q):
                r = x - a
                if abs(ab[0] * r[1] - ab[1] * r[0]) > tol * np.sqrt(L2):
                    ok = False
                    break
                s = (r @ ab) / L2
                if s < -1e-9 or s > 1 + 1e-9:
                    ok = False
                    break
            if ok:
                return t
        return "crack"

    return tag


def conform_to_crack(mesh: PolygonMesh, tip, mouth, subdivisions: int = 1) -> PolygonMesh:
    """Make ``mesh`` conform to the straight crack from ``mouth`` to ``tip``.

    Edges crossed by the crack get new nodes and crossed polygons are split,
    except the polygon containing the tip. That polygon becomes an open
    chain whose scaling centre is the tip. Nodes along the crack path are
    duplicated, with polygons on the right of the mouth-to-tip direction
    taking the copies. Edges of the tip polygon are split into
    ``subdivisions`` equal parts.
    """
    return _conform(mesh, np.asarray(mouth, dtype=float), np.asarray(tip, dtype=float), False, subdivisions)


def conform_to_interior_crack(mesh: PolygonMesh, tip_a, tip_b, subdivisions: int = 1) -> PolygonMesh:
    """Like :func:`conform_to_crack` for a crack with two tips inside the domain."""
    return _conform(mesh, np.asarray(tip_a, dtype=float), np.asarray(tip_b, dtype=float), True, subdivisions)


def _tip_polygon(mesh, elems, p, snap):
    found = [k for k in range(len(elems)) if _point_strictly_inside(mesh.nodes[elems[k]], p, snap)]
    if not found:
        raise MeshError(f"crack tip {p.tolist()} is not strictly inside any polygon (on an edge or node?)")
    if mesh.is_open(found[0]):
        raise MeshError("the crack tip falls in an existing crack-tip polygon")
    return found[0]


def _snap_mouth(mesh, elems, mouth, tip, snap, reach):
    """Move an off-node mouth to the nearest boundary crossing of the crack line.

    A curved boundary is represented by chords, so the exact mouth can lie
    slightly off the discrete boundary when no mesh node sits on it.
    """
    if np.hypot(*(mesh.nodes - mouth).T).min() <= snap:
        return mouth
    u = (tip - mouth) / np.hypot(*(tip - mouth))
    nrm = np.array([-u[1], u[0]])
    best = None
    for (a, b), owners in _undirected_edges(elems).items():
        if len(owners) != 1:
            continue
        pa, pb = mesh.nodes[a] - mouth, mesh.nodes[b] - mouth
        oa, ob = pa @ nrm, pb @ nrm
        if oa * ob > 0 or oa == ob:
            continue
        x = pa + oa / (oa - ob) * (pb - pa)
        s = x @ u
        if abs(s) <= reach and (best is None or abs(s) < abs(best @ u)):
            best = x
    return mouth if best is None else mouth + best


def _conform(mesh, start, end, start_is_tip, subdivisions):
    if subdivisions < 1:
        raise MeshError("subdivisions must be >= 1")
    nodes = [np.array(p) for p in mesh.nodes]
    elems = [list(map(int, e)) for e in mesh.elements]
    lens = [np.hypot(*(mesh.nodes[a] - mesh.nodes[b])) for e in range(mesh.n_elements) for a, b in mesh.element_edges(e)]
    hbar = float(np.mean(lens))
    tol = 1e-9 * hbar
    snap = 1e-4 * hbar

    if not start_is_tip:
        start = _snap_mouth(mesh, elems, start, end, snap, 0.25 * hbar)
    d = end - start
    length = float(np.hypot(*d))
    if length <= tol:
        raise MeshError("crack mouth and tip coincide")
    u = d / length
    nrm = np.array([-u[1], u[0]])

    end_el = _tip_polygon(mesh, elems, end, snap)
    start_el = _tip_polygon(mesh, elems, start, snap) if start_is_tip else None
    if start_el == end_el:
        raise MeshError("both crack tips fall in the same polygon; refine the mesh")
    tip_els = {end_el} | ({start_el} if start_is_tip else set())
    lo = 0.0 if start_is_tip else -snap

    def frame(p):
        r = p - start
        return r @ u, r @ nrm

    # snap nodes lying close to the crack onto it
    for k, p in enumerate(nodes):
        s, o = frame(p)
        if lo <= s <= length and 0 < abs(o) <= snap:
            nodes[k] = start + s * u
    # insert crossing nodes
    for (a, b), owners in sorted(_undirected_edges(elems).items()):
        sa, oa = frame(nodes[a])
        sb, ob = frame(nodes[b])
        if abs(oa) <= tol or abs(ob) <= tol or oa * ob > 0:
            continue
        t = oa / (oa - ob)
        x = nodes[a] + t * (nodes[b] - nodes[a])
        sx, _ = frame(x)
        if sx < (0.0 if start_is_tip else -tol) or sx > length:
            continue
        nid = len(nodes)
        nodes.append(start + sx * u)
        for ei in owners:
            elems[ei] = _insert_between(elems[ei], a, b, [nid])

    path = []
    for k, p in enumerate(nodes):
        s, o = frame(p)
        if abs(o) <= tol and (0.0 if start_is_tip else -tol) <= s <= length:
            path.append((s, k))
    path = [k for _, k in sorted(path)]
    if not path:
        raise MeshError("the crack does not cross any mesh edge")
    if not start_is_tip and abs(frame(nodes[path[0]])[0]) > snap:
        raise MeshError(f"crack mouth {start.tolist()} is not on the mesh boundary")
    a_node, b_node = path[-1], path[0]
    if a_node not in elems[end_el] or (start_is_tip and b_node not in elems[start_el]):
        raise MeshError("the crack does not reach the tip polygon boundary")

    # split polygons crossed along a chord between consecutive path nodes
    for p, q in zip(path[:-1], path[1:]):
        if (min(p, q), max(p, q)) in _undirected_edges(elems):
            continue
        mid = 0.5 * (nodes[p] + nodes[q])
        for ei, el in enumerate(elems):
            if ei in tip_els or p not in el or q not in el:
                continue
            xy = np.array([nodes[v] for v in el])
            if not _point_strictly_inside(xy, mid, tol):
                continue
            i, j = el.index(p), el.index(q)
            if i < j:
                first, second = el[i:j + 1], el[j:] + el[:i + 1]
            else:
                first, second = el[i:] + el[:j + 1], el[j:i + 1]
            elems[ei] = first
            elems.append(second)
            break
        else:
            raise MeshError(f"cannot route the crack between nodes {p} and {q}")

    # duplicate path nodes; right-hand polygons take the copies
    copy = {}
    for k in path:
        copy[k] = len(nodes)
        nodes.append(nodes[k].copy())
    pset = set(path)
    for ei, el in enumerate(elems):
        if ei in tip_els or not pset.intersection(el):
            continue
        c = polygon_centroid(np.array([nodes[v] for v in el]))
        if (c - start) @ nrm < 0:
            elems[ei] = [copy.get(v, v) for v in el]
    el = elems[end_el]
    i = el.index(a_node)
    chains = {end_el: [copy[a_node]] + el[i + 1:] + el[:i + 1]}
    if start_is_tip:
        el = elems[start_el]
        j = el.index(b_node)
        chains[start_el] = el[j:] + el[:j] + [copy[b_node]]

    # subdivide the tip polygon edges (and the matching neighbour edges)
    for te, chain in chains.items():
        if subdivisions > 1:
            new_chain = [chain[0]]
            for a, b in zip(chain[:-1], chain[1:]):
                ids = []
                for j in range(1, subdivisions):
                    ids.append(len(nodes))
                    nodes.append(nodes[a] + (nodes[b] - nodes[a]) * (j / subdivisions))
                for ei in range(len(elems)):
                    if ei not in chains:
                        elems[ei] = _insert_between(elems[ei], a, b, ids)
                new_chain.extend(ids + [b])
            chain = new_chain
        elems[te] = chain

    descs = [CrackDescriptor(tuple(end), tuple(start), end_el, float(np.arctan2(u[1], u[0])))]
    if start_is_tip:
        descs.append(CrackDescriptor(tuple(start), tuple(end), start_el, float(np.arctan2(-u[1], -u[0]))))
    out = PolygonMesh(np.array(nodes), elems, (), mesh.cracks + tuple(descs))
    tagger = _boundary_inheritor(mesh, max(tol, 1e-9 * hbar))
    return PolygonMesh(out.nodes, out.elements, find_boundary_edges(out, tagger), out.cracks)
