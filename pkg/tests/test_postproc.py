import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyelast.benchmarks import get_case, run_benchmark
from polyelast.benchmarks.exact import patch_fields
from polyelast.formulations import Material, SbfemError
from polyelast.formulations.sbfem import polygon_boundary, sbfem_displacement_at, sbfem_element, stiffness_sbfem
from polyelast.interpolants import GeometryError, lagrange_shape_1d
from polyelast.mesh import Domain, generate_voronoi_mesh, random_seeds
from polyelast.postproc import (convergence_rate, error_norms, extract_sif, rotate_stress, sbfem_integration_constants,
                                sbfem_stress_at, singular_modes)
from polyelast.quadrature import polygon_centroid
from polyelast.solver import DofMap

from conftest import convex_polygon

MAT = Material(1.0, 0.3)


def cracked_element(n=24, order=2, radius=1.0, rot=0.0, mat=MAT):
    """Open chain around a crack along the direction rot + pi, tip at the origin."""
    t = np.linspace(-np.pi, np.pi, n + 1) + rot
    v = radius * np.column_stack([np.cos(t), np.sin(t)])
    coords, conn = polygon_boundary(v, order, closed=False)
    return sbfem_element(coords, conn, np.zeros(2), mat, order)


def williams(points, K1, K2, mat, rot=0.0, faces=False):
    """Near-tip displacement field, crack along theta = +-pi in the frame rotated by rot.

    With ``faces`` the first and last points are the lower and upper crack faces.
    """
    c, s = np.cos(rot), np.sin(rot)
    loc = points @ np.array([[c, -s], [s, c]])
    r = np.hypot(loc[:, 0], loc[:, 1])
    th = np.arctan2(loc[:, 1], loc[:, 0])
    if faces:
        th[0], th[-1] = -np.pi, np.pi
    mu = mat.E / (2 * (1 + mat.nu))
    kap = (3 - mat.nu) / (1 + mat.nu) if mat.mode == "plane_stress" else 3 - 4 * mat.nu
    f = np.sqrt(r / (2 * np.pi)) / (2 * mu)
    ch, sh = np.cos(th / 2), np.sin(th / 2)
    ux = f * (K1 * ch * (kap - 1 + 2 * sh ** 2) + K2 * sh * (kap + 1 + 2 * ch ** 2))
    uy = f * (K1 * sh * (kap + 1 - 2 * ch ** 2) - K2 * ch * (kap - 1 - 2 * sh ** 2))
    return np.column_stack([ux * c - uy * s, ux * s + uy * c])


def chain_ub(modal, K1, K2, mat=MAT, rot=0.0):
    return williams(modal.coords - modal.center, K1, K2, mat, rot, faces=True).ravel()


def square_mesh(n=20, seed=0):
    dom = Domain(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float), side_tags=("bottom", "right", "top", "left"))
    return generate_voronoi_mesh(dom, random_seeds(dom, n, seed), 5)


# error norms

@pytest.mark.parametrize("form,order", [("sbfem", 1), ("sbfem", 2), ("sbfem", 3), ("nsfem", 1)])
def test_exact_linear_field_has_zero_error(form, order):
    m = square_mesh()
    u, s = patch_fields(MAT)
    dm = DofMap(m, order)
    en = error_norms(m, u(dm.coords).ravel(), u, s, MAT, form, order)
    assert en.l2_rel <= 1e-12 and en.h1_rel <= 1e-12
    assert en.dofs == dm.n_dofs and en.h > 0


def test_zero_solution_has_unit_error():
    m = square_mesh()
    u, s = patch_fields(MAT)
    en = error_norms(m, np.zeros(2 * m.n_nodes), u, s, MAT, "polyfem")
    assert en.l2_rel == pytest.approx(1.0, abs=1e-14)
    assert en.h1_rel == pytest.approx(1.0, abs=1e-14)


def test_error_norm_input_checks():
    m = square_mesh()
    u, s = patch_fields(MAT)
    with pytest.raises(ValueError):
        error_norms(m, np.zeros(3), u, s, MAT, "polyfem")
    with pytest.raises(ValueError):
        error_norms(m, np.zeros(2 * m.n_nodes), u, s, MAT, "xfem")
    bad = lambda p: np.full((len(p), 2), np.nan)
    with pytest.raises(ValueError):
        error_norms(m, np.zeros(2 * m.n_nodes), bad, s, MAT, "polyfem")


def test_cantilever_fem_error_decreases():
    res = run_benchmark(get_case("cantilever", "polyfem", 1, levels=(80, 160, 320)))
    errs = [r.l2_rel for r in res.levels]
    assert all(b < a for a, b in zip(errs, errs[1:]))


# integration constants and field recovery

def test_constants_of_mode_columns():
    v = convex_polygon(np.random.default_rng(3), 6)
    coords, conn = polygon_boundary(v, 2)
    modal = sbfem_element(coords, conn, polygon_centroid(v), MAT, 2)
    for j in (0, 3, modal.n_dof - 1):
        c = sbfem_integration_constants(modal, modal.phi_u[:, j])
        e = np.zeros(modal.n_dof)
        e[j] = 1
        np.testing.assert_allclose(c, e, atol=1e-10)
    tx = np.zeros(modal.n_dof)
    tx[0::2] = 1.0
    c = sbfem_integration_constants(modal, tx)
    assert np.abs(np.delete(c, modal.n_dof - 2)).max() <= 1e-10
    assert abs(c[modal.n_dof - 2]) > 0


def test_patch_field_reconstruction_and_stress():
    v = convex_polygon(np.random.default_rng(8), 7)
    coords, conn = polygon_boundary(v, 2)
    ctr = polygon_centroid(v)
    modal = sbfem_element(coords, conn, ctr, MAT, 2)
    u, _ = patch_fields(MAT)
    c = sbfem_integration_constants(modal, u(coords).ravel())
    rng = np.random.default_rng(0)
    for _ in range(10):
        k = int(rng.integers(len(conn)))
        xi = rng.uniform(0.01, 1.0, 10)
        eta = rng.uniform(-1, 1, 10)
        sh = lagrange_shape_1d(2, eta).values
        p = ctr + xi[:, None] * (sh @ (coords[conn[k]] - ctr))
        np.testing.assert_allclose(sbfem_displacement_at(modal, c, xi, eta, k), u(p), atol=1e-10)
        np.testing.assert_allclose(sbfem_stress_at(modal, c, xi, eta, k), np.tile([0, 1, 0], (10, 1)), atol=1e-10)


def test_rigid_constants_give_zero_stress():
    modal = cracked_element(8, 1)
    c = np.zeros(modal.n_dof, dtype=complex)
    c[-2:] = [0.3, -0.7]
    np.testing.assert_allclose(sbfem_stress_at(modal, c, np.array([0.5]), np.array([0.2]), 3), 0, atol=1e-14)


def test_singular_stress_scaling_and_tip_error():
    modal = cracked_element()
    c = sbfem_integration_constants(modal, chain_ub(modal, 1.0, 0.0))
    k = len(modal.conn) // 2  # element straddling theta = 0
    s1 = sbfem_stress_at(modal, c, np.array([1e-2]), np.array([0.0]), k)[0, 1]
    s2 = sbfem_stress_at(modal, c, np.array([2.5e-3]), np.array([0.0]), k)[0, 1]
    assert s2 / s1 == pytest.approx(2.0, rel=0.01)
    with pytest.raises(ValueError):
        sbfem_stress_at(modal, c, np.array([0.0]), np.array([0.0]), k)


# stress intensity factors

@pytest.mark.parametrize("K1,K2", [(1.0, 0.0), (0.0, 1.0), (0.7, -0.4)])
@pytest.mark.parametrize("mode", ["plane_stress", "plane_strain"])
def test_williams_field_recovers_sifs(K1, K2, mode):
    mat = Material(2.0, 0.3, mode)
    modal = cracked_element(32, 3, mat=mat)
    c = sbfem_integration_constants(modal, chain_ub(modal, K1, K2, mat))
    sif = extract_sif(modal, c, 0.0)
    assert sif.K_I == pytest.approx(K1, abs=1e-4)
    assert sif.K_II == pytest.approx(K2, abs=1e-4)
    assert sif.L0 == pytest.approx(1.0, rel=1e-12)
    assert np.isnan(sif.F_I)


@pytest.mark.parametrize("order,rate", [(1, 2), (2, 2), (3, 4)])
def test_williams_sif_converges_with_boundary_refinement(order, rate):
    errs = []
    for n in (16, 32, 64):
        modal = cracked_element(n, order)
        c = sbfem_integration_constants(modal, chain_ub(modal, 1.0, 0.0))
        errs.append(abs(extract_sif(modal, c, 0.0).K_I - 1.0))
    ratios = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(ratios > rate - 0.3)


def test_sif_normalisation():
    modal = cracked_element()
    c = sbfem_integration_constants(modal, chain_ub(modal, 1.0, 0.0))
    sif = extract_sif(modal, c, 0.0, sigma=2.0, a=0.5)
    assert sif.F_I == pytest.approx(sif.K_I / (2.0 * np.sqrt(np.pi * 0.5)))


def test_no_singular_modes_rejected():
    v = convex_polygon(np.random.default_rng(1), 6)
    coords, conn = polygon_boundary(v)
    modal = sbfem_element(coords, conn, polygon_centroid(v), MAT)
    assert len(singular_modes(modal)) == 0
    with pytest.raises(SbfemError):
        extract_sif(modal, np.zeros(modal.n_dof), 0.0)


def test_mirror_about_crack_line_flips_KII():
    modal = cracked_element(16, 2)
    rng = np.random.default_rng(5)
    ub = rng.standard_normal((len(modal.coords), 2))
    mirrored = ub[::-1] * np.array([1.0, -1.0])  # node j <-> its reflection across the crack line
    np.testing.assert_allclose(modal.coords[::-1] * [1, -1], modal.coords, atol=1e-14)
    s1 = extract_sif(modal, sbfem_integration_constants(modal, ub.ravel()), 0.0)
    s2 = extract_sif(modal, sbfem_integration_constants(modal, mirrored.ravel()), 0.0)
    assert s2.K_I == pytest.approx(s1.K_I, rel=1e-8, abs=1e-10)
    assert s2.K_II == pytest.approx(-s1.K_II, rel=1e-8, abs=1e-10)


def test_pure_mode_I_has_no_KII():
    modal = cracked_element(16, 2)
    rng = np.random.default_rng(6)
    half = rng.standard_normal((len(modal.coords), 2))
    sym = 0.5 * (half + half[::-1] * [1.0, -1.0])
    sif = extract_sif(modal, sbfem_integration_constants(modal, sym.ravel()), 0.0)
    assert abs(sif.K_II) <= 1e-8 * abs(sif.K_I)


@settings(max_examples=20)
@given(st.floats(0, 2 * np.pi), st.floats(-1, 1), st.floats(-1, 1))
def test_sif_invariant_under_rigid_rotation(rot, K1, K2):
    modal0 = cracked_element(16, 2)
    modal1 = cracked_element(16, 2, rot=rot)
    s0 = extract_sif(modal0, sbfem_integration_constants(modal0, chain_ub(modal0, K1, K2)), 0.0)
    ub1 = chain_ub(modal1, K1, K2, rot=rot)
    s1 = extract_sif(modal1, sbfem_integration_constants(modal1, ub1), rot)
    scale = max(abs(K1), abs(K2), 1e-3)
    assert s1.K_I == pytest.approx(s0.K_I, abs=1e-6 * scale)
    assert s1.K_II == pytest.approx(s0.K_II, abs=1e-6 * scale)


def test_ray_missing_boundary():
    modal = cracked_element(16, 2)
    # tip moved outside the polygon: every ray hit is behind or absent
    modal.center = np.array([5.0, 0.0])
    with pytest.raises(GeometryError):
        extract_sif(modal, np.zeros(modal.n_dof), 0.0)


def test_rotate_stress():
    sig = np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(rotate_stress(sig, np.pi / 2), [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(rotate_stress(sig, np.pi / 4), [0.5, 0.5, -0.5], atol=1e-15)


# rates

def test_two_point_rate():
    assert convergence_rate([1e-2, 2.5e-3], h=[1, 0.5]) == pytest.approx(2.0)


def test_constant_errors_zero_rate():
    assert convergence_rate([0.1, 0.1, 0.1], h=[1, 0.5, 0.25]) == pytest.approx(0.0, abs=1e-12)


def test_rate_from_dofs():
    dofs = np.array([100, 400, 1600])
    assert convergence_rate(1.0 / dofs, dofs=dofs) == pytest.approx(2.0)


def test_rate_errors():
    with pytest.raises(ValueError):
        convergence_rate([0.1, 0.0], h=[1, 0.5])
    with pytest.raises(ValueError):
        convergence_rate([0.1], h=[1])
    with pytest.raises(ValueError):
        convergence_rate([0.1, 0.2], h=[1, 0.5], dofs=[1, 2])
    # non-monotone sequences are still fitted
    assert np.isfinite(convergence_rate([0.1, 0.2, 0.05], h=[1, 0.5, 0.25]))


def test_boundary_forces_from_field_match_stiffness():
    from polyelast.formulations.sbfem import boundary_forces
    modal = cracked_element(12, 3)
    K = stiffness_sbfem(modal)
    u = np.random.default_rng(2).standard_normal(modal.n_dof)
    np.testing.assert_allclose(boundary_forces(modal, u), K @ u, rtol=1e-8, atol=1e-8 * np.abs(K @ u).max())
