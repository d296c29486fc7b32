"""Scaled boundary polygon element.

Only the polygon boundary is discretised, with 1D Lobatto-Lagrange elements
in the circumferential coordinate ``eta``; the radial coordinate ``xi`` runs
from the scaling center (0) to the boundary (1). The element stiffness comes
from the eigen-decomposition of the Hamiltonian matrix built from the
coefficient matrices E0, E1, E2.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..interpolants import GeometryError, lagrange_shape_1d, lobatto_nodes
from ..quadrature import gauss_legendre_1d


class SbfemError(RuntimeError):
    """The element cannot be solved (singular E0, bad spectrum, ill-conditioned modes)."""


def polygon_boundary(verts, order: int = 1, closed: bool = True, subdivisions: int = 1):
    """Boundary nodes and 1D element connectivity for a vertex chain.

    Each chain edge is split into ``subdivisions`` straight elements of the
    given order. Returns ``(coords, conn)``; ``conn`` has shape
    ``(n_elements, order + 1)`` and indexes ``coords``.
    """
    v = np.asarray(verts, dtype=float)
    m = len(v)
    n_edges = m if closed else m - 1
    s = (lobatto_nodes(order) + 1.0) / 2.0
    coords, conn = [], []
    for i in range(n_edges):
        a, b = v[i], v[(i + 1) % m]
        for k in range(subdivisions):
            p = a + (b - a) * (k / subdivisions)
            q = a + (b - a) * ((k + 1) / subdivisions)
            start = len(coords)
            coords.extend(p + (q - p) * t for t in s[:-1])
            conn.append(list(range(start, start + order + 1)))
    if not closed:
        coords.append(v[-1])
    coords = np.array(coords)
    conn = np.array(conn)
    if closed:
        conn[conn == len(coords)] = 0
    return coords, conn


def _element_geometry(xy, order, eta):
    """Shape data and Jacobian quantities of straight or curved 1D elements.

    ``xy`` has shape ``(ne, order + 1, 2)`` relative to the scaling center.
    """
    sh = lagrange_shape_1d(order, eta)
    n, dn = np.atleast_2d(sh.values), np.atleast_2d(sh.grads)
    x = np.einsum("gi,eik->egk", n, xy)
    xe = np.einsum("gi,eik->egk", dn, xy)
    det = x[..., 0] * xe[..., 1] - x[..., 1] * xe[..., 0]
    return n, dn, x, xe, det


def _b_matrices(n, dn, x, xe, det):
    """B1 and B2 at each (element, point): arrays ``(ne, g, 3, 2(p+1))``."""
    ne, g = det.shape
    nn = n.shape[1]
    b1 = np.zeros((ne, g, 3, 2 * nn))
    b2 = np.zeros((ne, g, 3, 2 * nn))
    inv = 1.0 / det
    ye_n = (xe[..., 1] * inv)[..., None] * n[None]
    xe_n = (xe[..., 0] * inv)[..., None] * n[None]
    y_dn = (x[..., 1] * inv)[..., None] * dn[None]
    x_dn = (x[..., 0] * inv)[..., None] * dn[None]
    b1[..., 0, 0::2] = ye_n
    b1[..., 1, 1::2] = -xe_n
    b1[..., 2, 0::2] = -xe_n
    b1[..., 2, 1::2] = ye_n
    b2[..., 0, 0::2] = -y_dn
    b2[..., 1, 1::2] = x_dn
    b2[..., 2, 0::2] = x_dn
    b2[..., 2, 1::2] = -y_dn
    return b1, b2


def _element_dofs(conn):
    return np.stack([2 * conn, 2 * conn + 1], axis=-1).reshape(len(conn), -1)


def sbfem_coefficient_matrices(coords, conn, center, material, order: int = 1, n_gauss: int | None = None):
    """Assemble E0, E1, E2 over the boundary elements of one polygon."""
    coords = np.asarray(coords, dtype=float)
    conn = np.asarray(conn)
    rel = coords - np.asarray(center, dtype=float)
    rule = gauss_legendre_1d(n_gauss or order + 1)
    n, dn, x, xe, det = _element_geometry(rel[conn], order, rule.points)
    if np.any(det <= 0.0):
        e = int(np.argwhere(det <= 0.0)[0, 0])
        raise GeometryError(f"boundary element {e} is not visible from the scaling center (|J| <= 0)")
    b1, b2 = _b_matrices(n, dn, x, xe, det)
    d = material.D
    w = rule.weights[None, :] * det
    e0e = np.einsum("eg,egji,jk,egkl->eil", w, b1, d, b1)
    e1e = np.einsum("eg,egji,jk,egkl->eil", w, b2, d, b1)
    e2e = np.einsum("eg,egji,jk,egkl->eil", w, b2, d, b2)
    nd = 2 * len(coords)
    dofs = _element_dofs(conn)
    e0 = np.zeros((nd, nd))
    e1 = np.zeros((nd, nd))
    e2 = np.zeros((nd, nd))
    for k, idx in enumerate(dofs):
        ix = np.ix_(idx, idx)
        e0[ix] += e0e[k]
        e1[ix] += e1e[k]
        e2[ix] += e2e[k]
    return e0, e1, e2


def hamiltonian(e0, e1, e2):
    nd = len(e0)
    m = np.linalg.solve(e0, np.hstack([e1.T, -np.eye(nd)]))
    return np.block([[m], [e1 @ m[:, :nd] - e2, e1 @ m[:, nd:]]])


def sbfem_solve_element(e0, e1, e2, zero_tol: float = 1e-3):
    """Eigen-decompose the Hamiltonian and keep the bounded-domain modes.

    Returns ``(lam, phi_u, phi_q)``. The ``2n`` eigenpairs with the most
    negative real parts are kept; the two that belong to rigid translations
    (``lambda = 0``) are replaced by exact unit translations with zero
    force.
    """
    nd = len(e0)
    if np.linalg.cond(e0) > 1e14:
        raise SbfemError("E0 is singular")
    # rescale so Z is dimensionless; phi_q is scaled back by the caller
    z = hamiltonian(e0, e1, e2)
    lam, v = scipy.linalg.eig(z)
    near_zero = np.argsort(np.abs(lam))[:4]
    if np.abs(lam[near_zero]).max() > zero_tol:
        raise SbfemError(f"rigid-translation eigenvalues not found (smallest |lambda| {np.abs(lam[near_zero])})")
    rest = np.setdiff1d(np.arange(2 * nd), near_zero)
    rest = rest[np.argsort(lam[rest].real, kind="stable")][: nd - 2]
    if np.any(lam[rest].real > -zero_tol):
        raise SbfemError("fewer than 2n eigenvalues with negative real part; element is invalid")
    lam = np.concatenate([lam[rest], [0.0, 0.0]])
    phi = np.zeros((2 * nd, nd), dtype=complex)
    phi[:, : nd - 2] = v[:, rest]
    phi[0:nd:2, nd - 2] = 1.0
    phi[1:nd:2, nd - 1] = 1.0
    # normalise displacement parts (K is invariant to column scaling)
    norms = np.linalg.norm(phi[:nd], axis=0)
    phi /= norms[None, :]
    return lam, phi[:nd], phi[nd:]


@dataclass
class SbfemModalData:
    """Per-polygon scaled-boundary data needed for stiffness and field recovery."""

    E0: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    lam: np.ndarray
    phi_u: np.ndarray
    phi_q: np.ndarray
    center: np.ndarray
    coords: np.ndarray
    conn: np.ndarray
    order: int
    D: np.ndarray
    scale: float

    @property
    def Z(self):
        return hamiltonian(self.E0, self.E1, self.E2)

    @property
    def n_dof(self):
        return len(self.E0)


def sbfem_element(coords, conn, center, material, order: int = 1) -> SbfemModalData:
    e0, e1, e2 = sbfem_coefficient_matrices(coords, conn, center, material, order)
    s = float(np.abs(np.diag(e0)).max())
    lam, phi_u, phi_q = sbfem_solve_element(e0 / s, e1 / s, e2 / s)
    return SbfemModalData(e0, e1, e2, lam, phi_u, phi_q * s, np.asarray(center, dtype=float),
                          np.asarray(coords, dtype=float), np.asarray(conn), order, material.D, s)


def stiffness_sbfem(modal: SbfemModalData, cond_limit: float = 1e12, asym_limit: float = 1e-6):
    """``K = Re(phi_q phi_u^-1)``, symmetrised after checking its asymmetry."""
    cond = np.linalg.cond(modal.phi_u)
    if not cond < cond_limit:
        raise SbfemError(f"modal displacement matrix is ill-conditioned (cond {cond:.2e})")
    k = np.linalg.solve(modal.phi_u.T, modal.phi_q.T).T.real
    asym = np.linalg.norm(k - k.T) / np.linalg.norm(k)
    if asym > asym_limit:
        raise SbfemError(f"SBFEM stiffness is not symmetric (relative asymmetry {asym:.2e})")
    return 0.5 * (k + k.T)


def integration_constants(modal: SbfemModalData, u_boundary, cond_limit: float = 1e12):
    cond = np.linalg.cond(modal.phi_u)
    if not cond < cond_limit:
        raise SbfemError(f"modal displacement matrix is ill-conditioned (cond {cond:.2e})")
    return np.linalg.solve(modal.phi_u, np.asarray(u_boundary, dtype=complex))


def _mode_blocks(modal, element, eta):
    """N, B1, B2 for one boundary element at local coordinates ``eta``."""
    nodes = modal.conn[element]
    rel = modal.coords[nodes] - modal.center
    n, dn, x, xe, det = _element_geometry(rel[None], modal.order, np.atleast_1d(eta))
    b1, b2 = _b_matrices(n, dn, x, xe, det)
    dofs = _element_dofs(modal.conn[element][None])[0]
    return n, b1[0], b2[0], dofs, det[0]


def sbfem_displacement_at(modal, c, xi, eta, element):
    """Displacements ``(g, 2)`` at matching arrays of ``xi``/``eta`` in one element."""
    xi = np.atleast_1d(xi).astype(float)
    n, _, _, dofs, _ = _mode_blocks(modal, element, eta)
    phi = modal.phi_u[dofs]
    amp = xi[:, None] ** (-modal.lam[None, :]) * c[None, :]
    pu = np.einsum("mk,gk->gm", phi, amp)
    u = np.stack([np.einsum("gi,gi->g", n, pu[:, 0::2]), np.einsum("gi,gi->g", n, pu[:, 1::2])], axis=-1)
    return u.real


def sbfem_strain_at(modal, c, xi, eta, element):
    """Strains ``(g, 3)`` (engineering shear) at ``xi``/``eta`` in one element."""
    xi = np.atleast_1d(xi).astype(float)
    _, b1, b2, dofs, _ = _mode_blocks(modal, element, eta)
    phi = modal.phi_u[dofs]
    # per point g and mode k: (-lam_k B1 + B2) phi_k xi^(-lam_k - 1) c_k
    t1 = np.einsum("gij,jk->gik", b1, phi)
    t2 = np.einsum("gij,jk->gik", b2, phi)
    amp = xi[:, None] ** (-modal.lam[None, :] - 1.0) * c[None, :]
    eps = np.einsum("gik,gk->gi", -t1 * modal.lam[None, None, :] + t2, amp)
    return eps


def stress_modes(modal, eta, element):
    """Stress modes ``Psi_sigma(eta)`` with shape ``(g, 3, n_modes)``."""
    _, b1, b2, dofs, _ = _mode_blocks(modal, element, eta)
    phi = modal.phi_u[dofs]
    t1 = np.einsum("gij,jk->gik", b1, phi)
    t2 = np.einsum("gij,jk->gik", b2, phi)
    return np.einsum("ij,gjk->gik", modal.D, -t1 * modal.lam[None, None, :] + t2)


def sbfem_stress_at(modal, c, xi, eta, element, rtol: float = 1e-8):
    """Stresses ``(g, 3)`` from ``Psi_sigma(eta) xi^(-lam - 1) c``."""
    xi = np.atleast_1d(xi).astype(float)
    singular = np.any((modal.lam.real > -1.0 + 1e-9) & (modal.lam.real < -1e-9) & (np.abs(c) > 0))
    if singular and np.any(xi <= 0.0):
        raise ValueError("stress is unbounded at the scaling center of a singular element")
    psi = stress_modes(modal, eta, element)
    amp = xi[:, None] ** (-modal.lam[None, :] - 1.0) * c[None, :]
    sig = np.einsum("gik,gk->gi", psi, amp)
    mag = np.abs(sig).max() if sig.size else 0.0
    if mag > 0 and np.abs(sig.imag).max() > rtol * mag:
        raise SbfemError("stress recovery produced a complex field")
    return sig.real


def boundary_forces(modal, u_boundary):
    """Boundary nodal forces ``(E0 xi u,xi + E1^T u)`` at ``xi = 1``."""
    c = integration_constants(modal, u_boundary)
    u = modal.phi_u @ c
    u_xi = modal.phi_u @ (-modal.lam * c)
    return (modal.E0 @ u_xi + modal.E1.T @ u).real
