"""Error norms, scaled-boundary field recovery, stress intensity factors and rates."""

from dataclasses import dataclass

import numpy as np

from .formulations import FORMULATIONS, SbfemError, integration_constants, smoothed_subcells, stress_modes
from .formulations import sbfem_displacement_at, sbfem_strain_at
from .formulations import sbfem_stress_at as _stress_at
from .formulations.polyfem import polyfem_quadrature, strain_matrix
from .interpolants import GeometryError, lagrange_shape_1d
from .quadrature import dunavant_triangle
from .solver import DofMap, element_model

SINGULAR_BAND = (-1.0 + 1e-6, -1e-6)


@dataclass(frozen=True)
class ErrorNorms:
    l2_rel: float
    h1_rel: float
    dofs: int
    h: float


@dataclass(frozen=True)
class SifResult:
    """Stress intensity factors in the crack frame.

    ``F_I``/``F_II`` are ``K / (sigma sqrt(pi a))`` when a normalisation was
    supplied, else ``nan``.
    """

    K_I: float
    K_II: float
    F_I: float
    F_II: float
    L0: float
    eta0: float
    boundary_element: int


def _fan_sbfem(modal, element, rule):
    """Quadrature on the triangle (center, start, end) of one boundary element."""
    a = modal.coords[modal.conn[element, 0]]
    b = modal.coords[modal.conn[element, -1]]
    o = modal.center
    lam = rule.points
    pts = lam[:, :1] * o + lam[:, 1:2] * a + lam[:, 2:] * b
    area = 0.5 * ((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))
    xi = lam[:, 1] + lam[:, 2]
    eta = -1.0 + 2.0 * lam[:, 2] / xi
    return pts, rule.weights * 2.0 * area, xi, eta


def _element_fields(formulation, mesh, e, de, model, rule):
    """Points, weights, u^h and strain^h for one polygon."""
    xy = mesh.coords(e)
    if formulation == "polyfem":
        q = polyfem_quadrature(xy, rule)
        uh = np.stack([q.N @ de[0::2], q.N @ de[1::2]], axis=-1)
        eps = strain_matrix(q.dN) @ de
        return q.points, q.weights, uh, eps
    if formulation == "nsfem":
        n = len(xy)
        lam = rule.points
        out = []
        for i, c in enumerate(smoothed_subcells(xy)):
            o, vi, vj = c.triangle
            pts = lam[:, :1] * o + lam[:, 1:2] * vi + lam[:, 2:] * vj
            rows = np.zeros((len(lam), n))
            rows += lam[:, :1] / n
            rows[:, i] += lam[:, 1]
            rows[:, (i + 1) % n] += lam[:, 2]
            uh = np.stack([rows @ de[0::2], rows @ de[1::2]], axis=-1)
            eps = np.tile(c.B @ de, (len(lam), 1))
            out.append((pts, rule.weights * 2.0 * c.area, uh, eps))
        return tuple(np.concatenate(z) for z in zip(*out))
    modal = model.modal
    c = integration_constants(modal, de)
    out = []
    for k in range(len(modal.conn)):
        pts, w, xi, eta = _fan_sbfem(modal, k, rule)
        uh = sbfem_displacement_at(modal, c, xi, eta, k)
        eps = sbfem_strain_at(modal, c, xi, eta, k).real
        out.append((pts, w, uh, eps))
    return tuple(np.concatenate(z) for z in zip(*out))


def error_norms(mesh, d, exact_u, exact_stress, material, formulation, order=1, dof_map=None, elements=None):
    """Relative L2 displacement and energy-norm errors of a solution.

    ``exact_u(points) -> (m, 2)``, ``exact_stress(points) -> (m, 3)``.
    ``elements`` may pass the element models from the solve to avoid
    rebuilding SBFEM modal data.
    """
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}")
    dof_map = dof_map or DofMap(mesh, order)
    d = np.asarray(d, dtype=float)
    if d.shape != (dof_map.n_dofs,):
        raise ValueError(f"displacement vector has shape {d.shape}, expected ({dof_map.n_dofs},)")
    rule = dunavant_triangle(6)
    dinv = np.linalg.inv(material.D)
    err_u = ref_u = err_e = ref_e = 0.0
    for e in range(mesh.n_elements):
        de = d[dof_map.element_dofs(e)]
        model = None
        if formulation == "sbfem":
            model = elements[e] if elements is not None else element_model(mesh, formulation, material, dof_map, e)
        pts, w, uh, eps_h = _element_fields(formulation, mesh, e, de, model, rule)
        u = np.asarray(exact_u(pts), dtype=float).reshape(len(pts), 2)
        sig = np.asarray(exact_stress(pts), dtype=float).reshape(len(pts), 3)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(sig))):
            raise ValueError(f"exact field is undefined at a quadrature point of element {e}")
        eps = sig @ dinv.T
        du = u - uh
        de_ = eps - eps_h
        err_u += w @ np.einsum("gi,gi->g", du, du)
        ref_u += w @ np.einsum("gi,gi->g", u, u)
        err_e += w @ np.einsum("gi,ij,gj->g", de_, material.D, de_)
        ref_e += w @ np.einsum("gi,ij,gj->g", eps, material.D, eps)
    l2 = np.sqrt(max(err_u, 0.0) / ref_u) if ref_u > 0 else np.sqrt(max(err_u, 0.0))
    h1 = np.sqrt(max(err_e, 0.0) / ref_e) if ref_e > 0 else np.sqrt(max(err_e, 0.0))
    h = float(np.mean(np.sqrt(mesh.areas())))
    return ErrorNorms(float(l2), float(h1), dof_map.n_dofs, h)


def sbfem_integration_constants(modal, u_boundary):
    """``c = phi_u^-1 u_b``; raises if ``phi_u`` is ill-conditioned."""
    return integration_constants(modal, u_boundary)


def sbfem_stress_at(modal, c, xi, eta, element):
    """Stress triples ``(g, 3)`` at ``xi`` in ``(0, 1]`` and local ``eta`` of a boundary element."""
    return _stress_at(modal, c, xi, eta, element)


def singular_modes(modal):
    lo, hi = SINGULAR_BAND
    return np.flatnonzero((modal.lam.real > lo) & (modal.lam.real < hi))


def _ray_hit(modal, angle, node_tol=1e-9):
    """Boundary element hits ``[(element, eta), ...]`` and distance of the ray from the center.

    A ray through a node shared by two boundary elements returns both.
    """
    o = modal.center
    t = np.array([np.cos(angle), np.sin(angle)])
    best = None
    for k, el in enumerate(modal.conn):
        a, b = modal.coords[el[0]] - o, modal.coords[el[-1]] - o
        ab = b - a
        den = t[0] * ab[1] - t[1] * ab[0]
        if den == 0.0:
            continue
        s = (a[0] * ab[1] - a[1] * ab[0]) / den
        u = (a[0] * t[1] - a[1] * t[0]) / den
        if s > 0.0 and -1e-12 <= u <= 1.0 + 1e-12 and (best is None or s < best[1]):
            best = (k, s)
    if best is None:
        raise GeometryError(f"ray at angle {angle:.6g} from the tip misses the element boundary")
    k = best[0]
    eta = _bisect_eta(modal, k, t)
    hits = [(k, eta)]
    n_el = len(modal.conn)
    closed = modal.conn[-1, -1] == modal.conn[0, 0]
    if eta > 1.0 - node_tol and (k + 1 < n_el or closed):
        hits.append(((k + 1) % n_el, -1.0))
    elif eta < -1.0 + node_tol and (k > 0 or closed):
        hits.append(((k - 1) % n_el, 1.0))
    p = lagrange_shape_1d(modal.order, np.array([eta])).values[0] @ (modal.coords[modal.conn[k]] - o)
    return hits, float(np.hypot(*p))


def _bisect_eta(modal, k, t):
    """Local coordinate where the ray along ``t`` crosses boundary element ``k``."""
    xy = modal.coords[modal.conn[k]] - modal.center

    def side(eta):
        p = lagrange_shape_1d(modal.order, np.array([eta])).values[0] @ xy
        return t[0] * p[1] - t[1] * p[0]

    lo, hi = -1.0, 1.0
    flo, fhi = side(lo), side(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        # the ray grazes an end node; no sign change to bracket
        return lo if abs(flo) <= abs(fhi) else hi
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        fm = side(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rotate_stress(sig, angle):
    """Components ``(sxx, syy, txy)`` in axes rotated by ``angle``."""
    sig = np.asarray(sig)
    c, s = np.cos(angle), np.sin(angle)
    sx, sy, txy = sig[..., 0], sig[..., 1], sig[..., 2]
    return np.stack([sx * c * c + sy * s * s + 2 * txy * c * s,
                     sx * s * s + sy * c * c - 2 * txy * c * s,
                     (sy - sx) * c * s + txy * (c * c - s * s)], axis=-1)


def extract_sif(modal, c, crack_angle, sigma=None, a=None, rtol=1e-8):
    """Mode I/II stress intensity factors from the singular stress modes.

    The scaling centre must be the crack tip; ``crack_angle`` is the
    direction of crack propagation (the theta = 0 ray).
    """
    sing = singular_modes(modal)
    if len(sing) == 0:
        raise SbfemError("no singular modes found; the element is not a crack-tip element")
    hits, l0 = _ray_hit(modal, crack_angle)
    # a ray through a shared node averages the two one-sided stress modes
    psi = np.mean([stress_modes(modal, np.array([eta]), k)[0][:, sing] for k, eta in hits], axis=0)
    k, eta0 = hits[0]
    sig = psi @ np.asarray(c)[sing]
    mag = np.abs(sig).max()
    if mag > 0 and np.abs(sig.imag).max() > rtol * mag:
        raise SbfemError("singular stress modes produced complex intensity factors")
    loc = rotate_stress(sig.real, crack_angle)
    f = np.sqrt(2.0 * np.pi * l0)
    k1, k2 = float(f * loc[1]), float(f * loc[2])
    if sigma is not None and a is not None:
        norm = sigma * np.sqrt(np.pi * a)
        f1, f2 = k1 / norm, k2 / norm
    else:
        f1 = f2 = float("nan")
    return SifResult(k1, k2, f1, f2, l0, float(eta0), int(k))


def convergence_rate(errors, h=None, dofs=None):
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    Pass either ``h`` or ``dofs``; with dofs, ``h = dofs ** -0.5``.
    """
    e = np.asarray(errors, dtype=float)
    if (h is None) == (dofs is None):
        raise ValueError("give exactly one of h or dofs")
    x = np.asarray(h, dtype=float) if h is not None else np.asarray(dofs, dtype=float) ** -0.5
    if len(e) < 2 or len(x) != len(e):
        raise ValueError("need at least two levels with matching errors and sizes")
    if np.any(e <= 0) or np.any(x <= 0):
        raise ValueError("errors and sizes must be positive to fit a rate")
    return float(np.polyfit(np.log(x), np.log(e), 1)[0])
