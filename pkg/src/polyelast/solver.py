"""Degrees of freedom, global assembly, loads, constraints and the linear solve."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .formulations import (FORMULATIONS, Material, polygon_boundary, sbfem_element, smoothed_subcells,
                           stiffness_nsfem, stiffness_polyfem, stiffness_sbfem)
from .formulations.polyfem import polyfem_quadrature
from .interpolants import lagrange_shape_1d, lobatto_nodes
from .mesh import PolygonMesh
from .quadrature import dunavant_triangle, gauss_legendre_1d


class SolverError(RuntimeError):
    """The linear system cannot be solved as posed."""


class ElementError(RuntimeError):
    """An element failed; carries the element index."""

    def __init__(self, element, cause):
        super().__init__(f"element {element}: {cause}")
        self.element = element
        self.cause = cause


class DofMap:
    """Two dofs per node, plus edge-interior nodes for SBFEM orders p > 1.

    Mesh nodes keep their indices; interior nodes of edge ``{a, b}`` are
    appended in sorted-edge order and stored from the smaller to the larger
    end node (Lobatto points are symmetric, so both neighbours agree).
    """

    def __init__(self, mesh: PolygonMesh, order: int = 1):
        lobatto_nodes(order)
        self.mesh = mesh
        self.order = order
        coords = [mesh.nodes]
        self.edge_interior = {}
        if order > 1:
            s = (lobatto_nodes(order)[1:-1] + 1.0) / 2.0
            keys = sorted({(min(a, b), max(a, b)) for e in range(mesh.n_elements) for a, b in mesh.element_edges(e)})
            nxt = mesh.n_nodes
            extra = []
            for a, b in keys:
                pa, pb = mesh.nodes[a], mesh.nodes[b]
                ids = list(range(nxt, nxt + len(s)))
                nxt += len(s)
                self.edge_interior[(a, b)] = ids
                extra.extend(pa + (pb - pa) * t for t in s)
            coords.append(np.array(extra).reshape(-1, 2))
        self.coords = np.vstack(coords)
        self.coords.setflags(write=False)

    @property
    def n_nodes(self):
        return len(self.coords)

    @property
    def n_dofs(self):
        return 2 * self.n_nodes

    def edge_nodes(self, a, b):
        """All dof nodes along edge ``a -> b`` in that direction."""
        if self.order == 1:
            return [a, b]
        mid = self.edge_interior[(min(a, b), max(a, b))]
        return [a] + (mid if a < b else mid[::-1]) + [b]

    def element_nodes(self, e):
        """Dof nodes of element ``e`` in the local order used by its stiffness."""
        if self.order == 1:
            return list(map(int, self.mesh.elements[e]))
        out = []
        edges = self.mesh.element_edges(e)
        for a, b in edges:
            out.extend(self.edge_nodes(a, b)[:-1])
        if self.mesh.is_open(e):
            out.append(edges[-1][1])
        return out

    @staticmethod
    def dofs_of(nodes):
        nodes = np.asarray(nodes, dtype=np.int64)
        return np.stack([2 * nodes, 2 * nodes + 1], axis=-1).reshape(-1)

    def element_dofs(self, e):
        return self.dofs_of(self.element_nodes(e))


@dataclass
class ElementModel:
    """Per-element result of assembly: local stiffness and SBFEM modal data."""

    index: int
    dofs: np.ndarray
    K: np.ndarray
    modal: object = None


def element_model(mesh, formulation, material, dof_map, e) -> ElementModel:
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r} (choose from {', '.join(FORMULATIONS)})")
    xy = mesh.coords(e)
    dofs = dof_map.element_dofs(e)
    try:
        if formulation == "sbfem":
            closed = not mesh.is_open(e)
            coords, conn = polygon_boundary(xy, dof_map.order, closed=closed)
            modal = sbfem_element(coords, conn, mesh.scaling_center(e), material, dof_map.order)
            return ElementModel(e, dofs, stiffness_sbfem(modal), modal)
        if mesh.is_open(e):
            raise ValueError("crack-tip elements require the sbfem formulation")
        if dof_map.order != 1:
            raise ValueError("orders p > 1 are only available for sbfem")
        if formulation == "polyfem":
            return ElementModel(e, dofs, stiffness_polyfem(xy, material))
        return ElementModel(e, dofs, stiffness_nsfem(xy, material))
    except Exception as exc:  # attach the element index to any element-level failure
        raise ElementError(e, exc) from exc


def assemble_global(mesh, formulation, material: Material, dof_map: DofMap, return_elements=False):
    """Scatter-add element stiffness matrices into a CSR matrix.

    Triplets are generated in element order and summed by the CSR
    conversion, so the result is bitwise reproducible.
    """
    rows, cols, vals, models = [], [], [], []
    for e in range(mesh.n_elements):
        m = element_model(mesh, formulation, material, dof_map, e)
        models.append(m)
        r, c = np.meshgrid(m.dofs, m.dofs, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(m.K.ravel())
    n = dof_map.n_dofs
    k = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    k.sum_duplicates()
    k.sort_indices()
    return (k, models) if return_elements else k


@dataclass
class LoadCase:
    """Essential constraints, edge tractions and an optional body force.

    ``constraints`` is a list of ``(dof, value)``; ``tractions`` a list of
    ``(edges, t)`` where ``edges`` is a boundary tag or a list of directed
    edges and ``t(points) -> (m, 2)`` gives the traction vector.
    """

    constraints: list = field(default_factory=list)
    tractions: list = field(default_factory=list)
    body_force: object = None


def _traction_edges(mesh, spec):
    if isinstance(spec, str):
        edges = mesh.edges_with_tag(spec)
        if not edges:
            raise ValueError(f"no boundary edges tagged {spec!r}")
        return edges
    return [tuple(e[:2]) for e in spec]


def apply_tractions(mesh, load: LoadCase, dof_map: DofMap, material: Material | None = None, formulation="polyfem"):
    """Consistent nodal forces of the edge tractions (4-point Gauss per edge)."""
    f = np.zeros(dof_map.n_dofs)
    bset = {(a, b) for a, b, _ in mesh.boundary_edges}
    rule = gauss_legendre_1d(4)
    sh = lagrange_shape_1d(dof_map.order, rule.points)
    for spec, t in load.tractions:
        for a, b in _traction_edges(mesh, spec):
            if (a, b) not in bset:
                raise ValueError(f"traction applied on edge {(a, b)}, which is not a boundary edge")
            pa, pb = mesh.nodes[a], mesh.nodes[b]
            pts = 0.5 * (pa + pb) + 0.5 * rule.points[:, None] * (pb - pa)
            tv = np.asarray(t(pts), dtype=float).reshape(len(pts), 2)
            jac = 0.5 * np.hypot(*(pb - pa))
            fe = np.einsum("g,gi,gk->ik", rule.weights * jac, sh.values, tv)
            dofs = dof_map.dofs_of(dof_map.edge_nodes(a, b))
            np.add.at(f, dofs, fe.ravel())
    if load.body_force is not None:
        f += _body_force(mesh, load.body_force, dof_map, formulation)
    return f


def _body_force(mesh, b, dof_map, formulation):
    if formulation == "sbfem":
        raise ValueError("body forces are not supported for the sbfem formulation")
    f = np.zeros(dof_map.n_dofs)
    rule = dunavant_triangle(6)
    for e in range(mesh.n_elements):
        xy = mesh.coords(e)
        if formulation == "polyfem":
            q = polyfem_quadrature(xy, rule)
            pts, w, phi = q.points, q.weights, q.N
        else:
            n = len(xy)
            pts_l, w_l, phi_l = [], [], []
            for i, c in enumerate(smoothed_subcells(xy)):
                o, vi, vj = c.triangle
                lam = rule.points
                pts_l.append(lam[:, :1] * o + lam[:, 1:2] * vi + lam[:, 2:] * vj)
                w_l.append(rule.weights * 2 * c.area)
                rows = np.zeros((len(lam), n))
                rows += lam[:, :1] / n
                rows[:, i] += lam[:, 1]
                rows[:, (i + 1) % n] += lam[:, 2]
                phi_l.append(rows)
            pts, w, phi = np.vstack(pts_l), np.concatenate(w_l), np.vstack(phi_l)
        bv = np.asarray(b(pts), dtype=float).reshape(len(pts), 2)
        fe = np.einsum("g,gi,gk->ik", w, phi, bv)
        np.add.at(f, dof_map.element_dofs(e), fe.ravel())
    return f


def constrain_edges(mesh, dof_map, tag, value, components=(0, 1)):
    """Constraints on every dof node of the edges tagged ``tag``.

    ``value(points) -> (m, 2)`` gives the prescribed displacement; only the
    listed components are constrained.
    """
    nodes = sorted({n for a, b in mesh.edges_with_tag(tag) for n in dof_map.edge_nodes(a, b)})
    if not nodes:
        raise ValueError(f"no boundary edges tagged {tag!r}")
    vals = np.asarray(value(dof_map.coords[nodes]), dtype=float).reshape(len(nodes), 2)
    return [(2 * n + c, float(vals[i, c])) for i, n in enumerate(nodes) for c in components]


@dataclass
class ReducedSystem:
    K: sp.csr_matrix
    f: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    values: np.ndarray
    n: int

    def expand(self, d_free):
        d = np.zeros(self.n)
        d[self.free] = d_free
        d[self.fixed] = self.values
        return d


def apply_essential_bc(K, f, constraints, rtol=1e-12):
    """Eliminate prescribed dofs, moving their contribution to the right-hand side."""
    n = K.shape[0]
    prescribed = {}
    for dof, val in constraints:
        dof = int(dof)
        if not 0 <= dof < n:
            raise ValueError(f"constraint on dof {dof} outside [0, {n})")
        if dof in prescribed and abs(prescribed[dof] - val) > rtol * max(1.0, abs(val)):
            raise ValueError(f"conflicting constraints on dof {dof}: {prescribed[dof]} and {val}")
        prescribed[dof] = float(val)
    fixed = np.array(sorted(prescribed), dtype=np.int64)
    values = np.array([prescribed[d] for d in fixed])
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    K = sp.csr_matrix(K)
    kff = K[free][:, free]
    rhs = np.asarray(f, dtype=float)[free] - K[free][:, fixed] @ values
    return ReducedSystem(kff.tocsc(), rhs, free, fixed, values, n)


def reactions(K, f, d):
    """Constraint reactions ``K d - f`` for every dof."""
    return K @ d - f


def solve_linear(K, f, rtol=1e-10):
    """Direct sparse solve with a positive-definiteness check.

    The factorisation uses diagonal pivoting on a symmetric ordering, so the
    pivots are those of an LDL^T decomposition; a non-positive pivot means
    the system is not positive definite (usually missing constraints).
    """
    f = np.asarray(f, dtype=float)
    n = K.shape[0]
    if n == 0:
        return np.zeros(0)
    K = sp.csc_matrix(K)
    try:
        lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SolverError(f"stiffness matrix is singular ({exc}); check the essential constraints") from exc
    piv = lu.U.diagonal()
    scale = np.abs(K.diagonal()).max()
    if np.any(piv <= 1e-13 * scale):
        raise SolverError("stiffness matrix is not positive definite; the structure is insufficiently constrained")
    d = lu.solve(f)
    knorm = spla.norm(K, np.inf)
    fn = np.linalg.norm(f, np.inf)

    def backward_error(d):
        # normwise backward error ||r|| / (||K|| ||d|| + ||f||)
        den = knorm * np.linalg.norm(d, np.inf) + fn
        return np.linalg.norm(f - K @ d, np.inf) / den if den > 0 else 0.0

    for _ in range(3):
        if backward_error(d) <= rtol:
            break
        d += lu.solve(f - K @ d)
    err = backward_error(d)
    if err > rtol:
        raise SolverError(f"backward error {err:.2e} exceeds {rtol:.0e}")
    return d


def rigid_body_modes(coords, center=None):
    """Two translations and one rotation about ``center`` as dof vectors (3, 2n)."""
    x = np.asarray(coords, dtype=float)
    c = x.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    r = np.zeros((3, 2 * len(x)))
    r[0, 0::2] = 1.0
    r[1, 1::2] = 1.0
    r[2, 0::2] = -(x[:, 1] - c[1])
    r[2, 1::2] = x[:, 0] - c[0]
    return r


@dataclass
class Solution:
    d: np.ndarray
    dof_map: DofMap
    elements: list
    K: sp.csr_matrix
    f: np.ndarray


def solve_problem(mesh, formulation, material, load: LoadCase, order=1) -> Solution:
    """Assemble, load, constrain and solve in one call."""
    dm = DofMap(mesh, order)
    K, models = assemble_global(mesh, formulation, material, dm, return_elements=True)
    f = apply_tractions(mesh, load, dm, material, formulation)
    red = apply_essential_bc(K, f, load.constraints)
    d = red.expand(solve_linear(red.K, red.f))
    return Solution(d, dm, models, K, f)
