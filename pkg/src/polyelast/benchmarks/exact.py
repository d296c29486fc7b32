"""Closed-form reference fields and stress intensity factors."""

import numpy as np

from ..formulations import Material


def _xy(points):
    p = np.asarray(points, dtype=float)
    return p[..., 0], p[..., 1]


def exact_patch(x, y, E, nu):
    """Uniaxial unit stress along y: ``u = nu/E (1 - x)``, ``v = y/E``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return nu / E * (1.0 - x), y / E


def patch_fields(material: Material):
    """``(u(points), stress(points))`` callables for the patch test."""
    E, nu = material.E, material.nu
    if material.mode == "plane_strain":
        # same unit stress state; effective constants of the 2D strain law
        E, nu = E / (1 - nu ** 2), nu / (1 - nu)

    def u(points):
        return np.stack(exact_patch(*_xy(points), E, nu), axis=-1)

    def stress(points):
        return np.tile([0.0, 1.0, 0.0], (len(np.atleast_2d(points)), 1))

    return u, stress


def effective_constants(E, nu, mode):
    """``(E_bar, nu_bar)``: unchanged in plane stress, ``E/(1-nu^2), nu/(1-nu)`` in plane strain."""
    if mode == "plane_stress":
        return E, nu
    if mode == "plane_strain":
        return E / (1 - nu ** 2), nu / (1 - nu)
    raise ValueError(f"unknown mode {mode!r}")


def exact_cantilever(x, y, P, L, D, E, nu, mode="plane_stress"):
    """Timoshenko cantilever clamped at ``x = 0`` with shear load ``P`` on ``x = L``.

    The beam occupies ``0 <= x <= L``, ``-D/2 <= y <= D/2``. Returns
    ``((u, v), (sxx, syy, txy))``; the end shear integrates to ``-P``.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    Eb, nb = effective_constants(E, nu, mode)
    inertia = D ** 3 / 12.0
    u = P * y / (6 * Eb * inertia) * ((6 * L - 3 * x) * x + (2 + nb) * (y ** 2 - D ** 2 / 4))
    v = -P / (6 * Eb * inertia) * (3 * nb * y ** 2 * (L - x) + (4 + 5 * nb) * D ** 2 * x / 4 + (3 * L - x) * x ** 2)
    sxx = P * (L - x) * y / inertia
    syy = np.zeros_like(sxx)
    txy = P / (2 * inertia) * (y ** 2 - D ** 2 / 4)
    return (u, v), (sxx, syy, txy)


def cantilever_fields(P, L, D, material: Material):
    def u(points):
        return np.stack(exact_cantilever(*_xy(points), P, L, D, material.E, material.nu, material.mode)[0], axis=-1)

    def stress(points):
        return np.stack(exact_cantilever(*_xy(points), P, L, D, material.E, material.nu, material.mode)[1], axis=-1)

    return u, stress


def exact_kirsch(r, theta, a, strict=True):
    """Stresses ``(s11, s22, s12)`` around a traction-free hole under unit tension along x.

    With ``strict`` a point inside the hole raises; ``strict=False``
    evaluates the same expressions there (used on polygonal hole chords).
    """
    r, theta = np.asarray(r, dtype=float), np.asarray(theta, dtype=float)
    if strict and np.any(r < a * (1 - 1e-12)):
        raise ValueError(f"point inside the hole (r < a = {a})")
    q2 = (a / r) ** 2
    q4 = 1.5 * (a / r) ** 4
    c2, c4, s2, s4 = np.cos(2 * theta), np.cos(4 * theta), np.sin(2 * theta), np.sin(4 * theta)
    s11 = 1 - q2 * (1.5 * c2 + c4) + q4 * c4
    s22 = -q2 * (0.5 * c2 - c4) - q4 * c4
    s12 = -q2 * (0.5 * s2 + s4) + q4 * s4
    return s11, s22, s12


def kirsch_displacement(r, theta, a, E, nu, mode="plane_strain"):
    """Displacements matching :func:`exact_kirsch` (zero at the hole centre by symmetry)."""
    r, theta = np.asarray(r, dtype=float), np.asarray(theta, dtype=float)
    mu = E / (2 * (1 + nu))
    if mode == "plane_strain":
        kappa = 3 - 4 * nu
    elif mode == "plane_stress":
        kappa = (3 - nu) / (1 + nu)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    f = a / (8 * mu)
    ct, c3, st, s3 = np.cos(theta), np.cos(3 * theta), np.sin(theta), np.sin(3 * theta)
    u1 = f * (r / a * (kappa + 1) * ct + 2 * a / r * ((1 + kappa) * ct + c3) - 2 * (a / r) ** 3 * c3)
    u2 = f * (r / a * (kappa - 3) * st + 2 * a / r * ((1 - kappa) * st + s3) - 2 * (a / r) ** 3 * s3)
    return u1, u2


def kirsch_fields(a, material: Material, center=(0.0, 0.0)):
    """Non-strict ``(u(points), stress(points))`` callables about ``center``."""
    c = np.asarray(center, dtype=float)

    def polar(points):
        x, y = _xy(np.asarray(points, dtype=float) - c)
        return np.hypot(x, y), np.arctan2(y, x)

    def u(points):
        return np.stack(kirsch_displacement(*polar(points), a, material.E, material.nu, material.mode), axis=-1)

    def stress(points):
        return np.stack(exact_kirsch(*polar(points), a, strict=False), axis=-1)

    return u, stress


def edge_crack_reference(a, b, sigma=1.0):
    """Correction factor ``C(a/b)`` and ``K_ref = C sigma sqrt(pi a)``."""
    x = a / b
    c = 1.12 + x * (0.203 + x * (-1.197 + x * 1.930))
    return c, c * sigma * np.sqrt(np.pi * a)


def inclined_crack_reference(beta, sigma1, sigma2, a):
    """Infinite-plate ``(K_I, K_II)`` for a centre crack of half-length ``a`` at angle ``beta`` (radians)."""
    s, c = np.sin(beta), np.cos(beta)
    root = np.sqrt(np.pi * a)
    return (sigma2 * s * s + sigma1 * c * c) * root, (sigma2 - sigma1) * s * c * root
