"""Polygonal mesh data model and validation."""

from dataclasses import dataclass, field

import numpy as np

from .. import _accel
from ..quadrature import polygon_area, polygon_centroid


class MeshError(ValueError):
    """Invalid mesh input or a generation failure."""


@dataclass(frozen=True)
class CrackDescriptor:
    """One crack tip modelled by a scaled-boundary polygon.

    ``crack_angle`` is the direction (radians from +x) of the crack
    prolongation beyond the tip, i.e. the ``theta = 0`` ray used for SIFs.
    """

    tip: tuple
    mouth: tuple
    tip_element: int
    crack_angle: float

    @property
    def direction(self):
        return np.array([np.cos(self.crack_angle), np.sin(self.crack_angle)])


@dataclass(frozen=True)
class Domain:
    """Convex outer polygon (CCW) with optional circular holes."""

    outer: np.ndarray
    holes: tuple = ()
    n_seeds: int = 0
    side_tags: tuple = ()

    def __post_init__(self):
        outer = np.asarray(self.outer, dtype=float)
        if polygon_area(outer) <= 0:
            raise MeshError("outer boundary must be counter-clockwise with positive area")
        object.__setattr__(self, "outer", outer)
        if not self.side_tags:
            object.__setattr__(self, "side_tags", tuple(f"side{i}" for i in range(len(outer))))
        holes = tuple((tuple(map(float, c)), float(r)) for c, r in self.holes)
        object.__setattr__(self, "holes", holes)
        for i, (c, r) in enumerate(holes):
            if r <= 0:
                raise MeshError(f"hole {i} has non-positive radius {r}")
            if _hole_sector_angle(outer, np.array(c), r) is None:
                raise MeshError(f"hole {i} (center {c}, radius {r}) does not fit inside the outer boundary")

    @property
    def diameter(self):
        d = self.outer[:, None, :] - self.outer[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    @property
    def area(self):
        cut = sum(0.5 * _hole_sector_angle(self.outer, np.array(c), r) * r * r for c, r in self.holes)
        return polygon_area(self.outer) - cut

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        e = np.roll(self.outer, -1, axis=0) - self.outer
        rel = pts[:, None, :] - self.outer[None, :, :]
        cr = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]
        inside = np.all(cr > 0, axis=1)
        for c, r in self.holes:
            inside &= np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) > r
        return inside


def _hole_sector_angle(outer, c, r):
    """Angle of the disk sector lying inside the outer polygon.

    A hole may be centred inside the polygon (full disk), on an edge (half
    disk) or on a vertex (sector of the interior angle), which is how
    symmetry-reduced models cut a hole. The circle must not reach any edge
    that does not pass through the centre. Returns None when invalid.
    """
    e = np.roll(outer, -1, axis=0) - outer
    ln = np.hypot(e[:, 0], e[:, 1])
    rel = c - outer
    dist = (e[:, 0] * rel[:, 1] - e[:, 1] * rel[:, 0]) / ln
    tol = 1e-12 * ln.max()
    if np.any(dist < -tol):
        return None
    on = np.abs(dist) <= tol
    if np.any(dist[~on] <= r):
        return None
    k = int(on.sum())
    if k == 0:
        return 2 * np.pi
    if k == 1:
        return np.pi
    if k == 2:
        i = int(np.argmax(np.abs(outer - c).sum(1) < tol))
        a = outer[i - 1] - outer[i]
        b = outer[(i + 1) % len(outer)] - outer[i]
        return float(np.arctan2(abs(a[0] * b[1] - a[1] * b[0]), a @ b))
    return None


@dataclass(frozen=True)
class PolygonMesh:
    """Nodes, CCW polygon elements of any valence, tagged boundary edges.

    Elements listed as crack-tip elements in ``cracks`` are open vertex chains:
    the closing edge from the last vertex back to the first is a crack face
    that collapses onto the tip and is not part of the discretisation.
    """

    nodes: np.ndarray
    elements: tuple
    boundary_edges: tuple = ()
    cracks: tuple = ()
    _open: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 2)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        elems = tuple(np.array(e, dtype=np.int64) for e in self.elements)
        for e in elems:
            e.setflags(write=False)
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "boundary_edges", tuple((int(a), int(b), str(t)) for a, b, t in self.boundary_edges))
        object.__setattr__(self, "cracks", tuple(self.cracks))
        object.__setattr__(self, "_open", frozenset(c.tip_element for c in self.cracks))

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    def is_open(self, e):
        return e in self._open

    def coords(self, e):
        return self.nodes[self.elements[e]]

    def element_edges(self, e):
        v = self.elements[e]
        n = len(v)
        stop = n - 1 if e in self._open else n
        return [(int(v[i]), int(v[(i + 1) % n])) for i in range(stop)]

    def area(self, e):
        return polygon_area(self.coords(e))

    def areas(self):
        return np.array([self.area(e) for e in range(self.n_elements)])

    def scaling_center(self, e):
        for c in self.cracks:
            if c.tip_element == e:
                return np.array(c.tip, dtype=float)
        return polygon_centroid(self.coords(e))

    def directed_edges(self):
        """Map of directed edge ``(a, b)`` to the owning element."""
        out = {}
        for e in range(self.n_elements):
            for ab in self.element_edges(e):
                if ab in out:
                    raise MeshError(f"directed edge {ab} appears in elements {out[ab]} and {e}")
                out[ab] = e
        return out

    def boundary_edge_tags(self):
        return {(a, b): t for a, b, t in self.boundary_edges}

    def edges_with_tag(self, tag):
        return [(a, b) for a, b, t in self.boundary_edges if t == tag]

    def with_boundary(self, tagger):
        """Recompute boundary edges from topology, tagging them with ``tagger(p, q)``."""
        return PolygonMesh(self.nodes, self.elements, find_boundary_edges(self, tagger), self.cracks)


def find_boundary_edges(mesh, tagger=None):
    de = mesh.directed_edges()
    out = []
    for (a, b), e in sorted(de.items(), key=lambda kv: (kv[1], kv[0])):
        if (b, a) not in de:
            tag = tagger(mesh.nodes[a], mesh.nodes[b]) if tagger else "boundary"
            out.append((a, b, tag))
    return tuple(out)


def domain_tagger(domain: Domain, tol=None):
    """Classify a boundary edge as an outer side, a hole, or a crack face."""
    tol = tol if tol is not None else 1e-9 * domain.diameter
    outer = domain.outer
    e = np.roll(outer, -1, axis=0) - outer
    ln = np.hypot(e[:, 0], e[:, 1])

    def tag(p, q):
        rel = 0.5 * (p + q) - outer
        dist = np.abs(e[:, 0] * rel[:, 1] - e[:, 1] * rel[:, 0]) / ln
        t = (rel * e).sum(1) / ln ** 2
        ok = (dist < tol) & (t > -1e-9) & (t < 1 + 1e-9)
        if ok.any():
            return domain.side_tags[int(np.argmax(ok))]
        for i, (c, r) in enumerate(domain.holes):
            rp = np.hypot(*(p - c))
            rq = np.hypot(*(q - c))
            if abs(rp - r) < 1e-6 * r and abs(rq - r) < 1e-6 * r:
                return f"hole{i}"
        return "crack"

    return tag


@dataclass
class ElementReport:
    index: int
    area: float
    ccw: bool
    simple: bool
    convex: bool
    star_convex: bool
    center: np.ndarray

    @property
    def ok(self):
        return self.area > 0 and self.ccw and self.simple and self.star_convex


@dataclass
class ValidationReport:
    elements: list
    errors: list

    @property
    def ok(self):
        return not self.errors and all(r.ok for r in self.elements)

    def failures(self):
        return [r for r in self.elements if not r.ok]


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def is_simple(verts, closed=True):
    v = np.asarray(verts, dtype=float)
    n = len(v)
    m = n if closed else n - 1
    for i in range(m):
        for j in range(i + 2, m):
            if closed and i == 0 and j == n - 1:
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


def visible_from(verts, center, closed=True, tol=0.0):
    """True when every boundary edge is seen from ``center`` with positive orientation."""
    v = np.asarray(verts, dtype=float) - np.asarray(center, dtype=float)
    a = v if closed else v[:-1]
    b = np.roll(v, -1, axis=0) if closed else v[1:]
    cr = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return bool(np.all(cr > tol))


def kernel_polygon(verts):
    """Kernel of a simple CCW polygon by half-plane intersection (may be empty)."""
    v = np.asarray(verts, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    # inside of CCW edge: cross(e, x - a) >= 0  <=>  (e_y, -e_x) . x <= (e_y, -e_x) . a
    normals = np.stack([e[:, 1], -e[:, 0]], axis=-1)
    offsets = (normals * v).sum(1)
    lo, hi = v.min(0) - 1.0, v.max(0) + 1.0
    box = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    return _accel.clip_halfplanes(box, normals, offsets)


def choose_scaling_center(verts):
    """Centroid if it sees the whole boundary, otherwise the kernel centroid."""
    c = polygon_centroid(verts)
    if visible_from(verts, c):
        return c
    k = kernel_polygon(verts)
    if len(k) < 3 or polygon_area(k) <= 0:
        raise MeshError("polygon is not star-convex; no scaling center exists")
    return polygon_centroid(k)


def validate_mesh(mesh: PolygonMesh) -> ValidationReport:
    errors = []
    n = mesh.n_nodes
    broken = set()
    for e, conn in enumerate(mesh.elements):
        if len(conn) < 3:
            errors.append(f"element {e} has fewer than 3 vertices")
            broken.add(e)
        if conn.min(initial=0) < 0 or conn.max(initial=0) >= n:
            errors.append(f"element {e} references a node outside [0, {n})")
            broken.add(e)
    try:
        de = mesh.directed_edges()
    except MeshError as exc:
        errors.append(str(exc))
        de = {}
    bset = {(a, b) for a, b, _ in mesh.boundary_edges}
    for (a, b), e in de.items():
        if (b, a) not in de and mesh.boundary_edges and (a, b) not in bset:
            errors.append(f"edge {(a, b)} of element {e} has no neighbour and is not a boundary edge")
    for a, b in bset:
        if (a, b) not in de:
            errors.append(f"boundary edge {(a, b)} does not belong to any element")
        elif (b, a) in de:
            errors.append(f"boundary edge {(a, b)} is shared by two elements")
    reports = []
    for e in range(mesh.n_elements):
        if e in broken:
            continue
        xy = mesh.coords(e)
        area = polygon_area(xy)
        closed = not mesh.is_open(e)
        center = mesh.scaling_center(e) if area > 0 else xy.mean(axis=0)
        ed = np.roll(xy, -1, axis=0) - xy
        cr = ed[:, 0] * np.roll(ed[:, 1], -1) - ed[:, 1] * np.roll(ed[:, 0], -1)
        scale = float(np.ptp(xy, axis=0).max()) ** 2
        reports.append(ElementReport(
            index=e, area=area, ccw=area > 0, simple=is_simple(xy, closed),
            convex=bool(np.all(cr >= -1e-12 * scale)),
            star_convex=visible_from(xy, center, closed, tol=1e-14 * scale), center=center))
    return ValidationReport(reports, errors)
