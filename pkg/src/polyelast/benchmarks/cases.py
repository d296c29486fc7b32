"""Benchmark problem definitions: geometry, loads, mesh families and exact fields."""

from dataclasses import dataclass, field, replace

import numpy as np

from ..formulations import FORMULATIONS, Material
from ..mesh import (CrackSeeds, Domain, conform_to_crack, conform_to_interior_crack, generate_voronoi_mesh,
                    graded_seeds, random_seeds)
from ..solver import DofMap, LoadCase, constrain_edges
from .exact import cantilever_fields, kirsch_fields, patch_fields

FAMILIES = ("patch", "cantilever", "plate-hole", "double-edge", "inclined-crack", "hole-cracks")


@dataclass(frozen=True)
class BenchmarkCase:
    """One benchmark problem with its mesh family and discretisation.

    ``levels`` are target polygon counts for uniform meshes and refinement
    factors for graded crack meshes; they must increase strictly.
    ``variants`` are parameter overrides solved on every level (crack
    angle, crack length, ...).
    """

    name: str
    family: str
    params: dict
    material: Material
    levels: tuple
    formulation: str = "sbfem"
    order: int = 1
    seed: int = 42
    variants: tuple = ({},)
    lloyd_iterations: int = 30
    description: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown benchmark family {self.family!r}")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r} (choose from {', '.join(FORMULATIONS)})")
        if self.order < 1 or (self.order > 1 and self.formulation != "sbfem"):
            raise ValueError(f"order p={self.order} is only available for sbfem (p >= 1)")
        if self.cracked and self.formulation != "sbfem":
            raise ValueError(f"case {self.name!r} has crack tips and needs the sbfem formulation")
        if len(self.levels) < 1:
            raise ValueError("a benchmark needs at least one mesh level")
        lv = np.asarray(self.levels, dtype=float)
        if np.any(lv <= 0) or np.any(np.diff(lv) <= 0):
            raise ValueError(f"mesh levels must be positive and strictly increasing, got {self.levels}")
        for k, v in self.params.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool) and k not in ("theta", "beta") and v <= 0:
                raise ValueError(f"geometry parameter {k}={v} must be positive")

    @property
    def cracked(self):
        return self.family in ("double-edge", "inclined-crack", "hole-cracks")

    def with_options(self, formulation=None, order=None, levels=None, seed=None):
        kw = {}
        if formulation is not None:
            kw["formulation"] = formulation
        if order is not None:
            kw["order"] = int(order)
        if levels is not None:
            kw["levels"] = tuple(levels)
        if seed is not None:
            kw["seed"] = int(seed)
        return replace(self, **kw)


def variant_label(variant):
    return ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in sorted(variant.items())) or "-"


@dataclass
class Problem:
    """A meshed, loaded instance of one benchmark level."""

    mesh: object
    load_builder: object
    exact_u: object = None
    exact_stress: object = None
    sif_scale: tuple = (None, None)  # (sigma, a) for F = K / (sigma sqrt(pi a))
    info: dict = field(default_factory=dict)

    def load(self, dof_map: DofMap) -> LoadCase:
        return self.load_builder(dof_map)


def _rect(x0, y0, x1, y1):
    return Domain(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float),
                  side_tags=("bottom", "right", "top", "left"))


def _const(v):
    v = np.asarray(v, dtype=float)
    return lambda x: np.tile(v, (len(x), 1))


def _rng(case, index):
    return np.random.default_rng((case.seed, index))


def _uniform_mesh(case, index, domain, constrain=None):
    n = int(case.levels[index])
    seeds = random_seeds(domain, n, _rng(case, index))
    if constrain is not None:
        seeds = constrain(seeds)
    return generate_voronoi_mesh(domain, seeds, case.lloyd_iterations, constrain=constrain)


def _traction_from_stress(mesh, tags, stress):
    """One traction entry per edge with ``t = sigma n`` and the edge's outward normal."""
    out = []
    for tag in tags:
        for a, b in mesh.edges_with_tag(tag):
            d = mesh.nodes[b] - mesh.nodes[a]
            n = np.array([d[1], -d[0]]) / np.hypot(*d)

            def t(x, n=n):
                s = np.asarray(stress(x), dtype=float)
                return np.stack([s[:, 0] * n[0] + s[:, 2] * n[1], s[:, 2] * n[0] + s[:, 1] * n[1]], axis=-1)

            out.append(([(a, b)], t))
    return out


def _pin_three(dm, y0, xmid):
    """Minimal supports on the line ``y = y0``: fix both dofs near ``xmid`` and v at the far right."""
    row = np.flatnonzero(np.abs(dm.coords[:, 1] - y0) <= 1e-9 * max(1.0, abs(y0)))
    i0 = row[np.argmin(np.abs(dm.coords[row, 0] - xmid))]
    i1 = row[np.argmax(dm.coords[row, 0])]
    return [(2 * i0, 0.0), (2 * i0 + 1, 0.0), (2 * i1 + 1, 0.0)]


def _seg_dist(x, p, q):
    d = q - p
    t = np.clip((x - p) @ d / (d @ d), 0.0, 1.0)
    return np.hypot(*(x - p - t[:, None] * d).T)


def build_patch(case, index, variant):
    dom = _rect(0.0, 0.0, 1.0, 1.0)
    mesh = _uniform_mesh(case, index, dom)
    u, s = patch_fields(case.material)

    def load(dm):
        cons = constrain_edges(mesh, dm, "bottom", u, (1,)) + constrain_edges(mesh, dm, "left", u, (0,))
        return LoadCase(cons, [("top", _const([0.0, case.params["sigma"]]))])

    return Problem(mesh, load, u, s)


def build_cantilever(case, index, variant):
    p = case.params
    L, D, P = p["L"], p["D"], p["P"]
    dom = _rect(0.0, -D / 2, L, D / 2)
    mesh = _uniform_mesh(case, index, dom)
    u, s = cantilever_fields(P, L, D, case.material)

    def load(dm):
        return LoadCase(constrain_edges(mesh, dm, "left", u), _traction_from_stress(mesh, ["right"], s))

    return Problem(mesh, load, u, s)


def build_plate_hole(case, index, variant):
    p = case.params
    a, side = p["a"], p["side"]
    dom = Domain(np.array([[0, 0], [side, 0], [side, side], [0, side]], dtype=float), holes=(((0.0, 0.0), a),),
                 side_tags=("bottom", "right", "top", "left"))
    mesh = _uniform_mesh(case, index, dom)
    u, s = kirsch_fields(a, case.material)

    def load(dm):
        zero = _const([0.0, 0.0])
        cons = constrain_edges(mesh, dm, "bottom", zero, (1,)) + constrain_edges(mesh, dm, "left", zero, (0,))
        return LoadCase(cons, _traction_from_stress(mesh, ["right", "top", "hole0"], s))

    return Problem(mesh, load, u, s)


def build_double_edge(case, index, variant):
    p = {**case.params, **variant}
    H, a = p["H"], p["a"]
    half = p["L_over_H"] * H / 2
    dom = _rect(0.0, -half, H, half)
    h = np.sqrt(dom.area / case.levels[index])
    cracks = [((0.0, 0.0), (a, 0.0)), ((H, 0.0), (H - a, 0.0))]
    cs = CrackSeeds(dom, cracks, h, ring_radius=p.get("ring_radius", 1.0), tip_radius=p.get("tip_radius", 0.9))
    mesh = _uniform_mesh(case, index, dom, constrain=cs)
    for mouth, tip in cracks:
        mesh = conform_to_crack(mesh, tip, mouth, p["subdivisions"])
    sig = p["sigma"]

    def load(dm):
        return LoadCase(_pin_three(dm, -half, H / 2), [("top", _const([0.0, sig])), ("bottom", _const([0.0, -sig]))])

    return Problem(mesh, load, sif_scale=(sig, a))


def _graded_mesh(case, index, dom, cracks, size, h_tip, interior=False):
    cs = CrackSeeds(dom, cracks, h_tip, interior=interior)
    seeds = cs(graded_seeds(dom, size, _rng(case, index)))
    return generate_voronoi_mesh(dom, seeds, case.lloyd_iterations, constrain=cs, density=lambda x: size(x) ** -4.0)


def build_inclined(case, index, variant):
    p = {**case.params, **variant}
    a = p["a"]
    W = p["w_over_a"] * a
    dom = _rect(-W, -W, W, W)
    beta = np.deg2rad(p["beta"])
    # crack along (sin beta, cos beta); beta = 90 deg is horizontal, normal to sigma2
    u = np.array([np.sin(beta), np.cos(beta)])
    ta, tb = -a * u, a * u
    h_tip = p["h_tip"] * a / case.levels[index]
    grade = p["grading"]
    h_max = W / 5

    def size(x):
        return np.minimum(h_max, h_tip + grade * _seg_dist(x, ta, tb))

    mesh = _graded_mesh(case, index, dom, [(ta, tb)], size, h_tip, interior=True)
    mesh = conform_to_interior_crack(mesh, ta, tb, p["subdivisions"])
    s1, s2 = p["sigma1"], p["sigma2"]

    def load(dm):
        tr = [("right", _const([s1, 0.0])), ("left", _const([-s1, 0.0])),
              ("top", _const([0.0, s2])), ("bottom", _const([0.0, -s2]))]
        return LoadCase(_pin_three(dm, -W, 0.0), tr)

    return Problem(mesh, load, sif_scale=(1.0, a), info={"W": W})


def build_hole_cracks(case, index, variant):
    p = {**case.params, **variant}
    W = p["W"]
    H = p["H_over_W"] * W
    r = p["r_over_W"] * W
    a = p["a_over_W"] * W
    theta = p["theta"]
    dom = Domain(np.array([[-W, -H], [W, -H], [W, H], [-W, H]], dtype=float), holes=(((0.0, 0.0), r),),
                 side_tags=("bottom", "right", "top", "left"))
    u = np.array([np.cos(theta), np.sin(theta)])
    cracks = [(r * u, a * u), (-r * u, -a * u)]
    h_tip = min(p["h_tip"] * W, (a - r) / 5) / case.levels[index]
    h_hole = 2 * np.pi * r / p["hole_segments"]
    grade = p["grading"]
    h_max = W / 6

    def size(x):
        d = np.minimum(_seg_dist(x, *cracks[0]), _seg_dist(x, *cracks[1]))
        dh = np.abs(np.hypot(x[:, 0], x[:, 1]) - r)
        return np.minimum.reduce([np.full(len(x), h_max), h_tip + grade * d, h_hole + grade * dh])

    mesh = _graded_mesh(case, index, dom, cracks, size, h_tip)
    for mouth, tip in cracks:
        mesh = conform_to_crack(mesh, tip, mouth, p["subdivisions"])
    sig = p["sigma"]

    def load(dm):
        return LoadCase(_pin_three(dm, -H, 0.0), [("top", _const([0.0, sig])), ("bottom", _const([0.0, -sig]))])

    return Problem(mesh, load, sif_scale=(sig, a))


BUILDERS = {
    "patch": build_patch,
    "cantilever": build_cantilever,
    "plate-hole": build_plate_hole,
    "double-edge": build_double_edge,
    "inclined-crack": build_inclined,
    "hole-cracks": build_hole_cracks,
}


def build_problem(case: BenchmarkCase, index: int, variant=None) -> Problem:
    """Mesh and load level ``index`` of ``case`` for one parameter variant."""
    if not 0 <= index < len(case.levels):
        raise IndexError(f"level {index} outside 0..{len(case.levels) - 1}")
    return BUILDERS[case.family](case, index, dict(variant or {}))


_STEEL = Material(200e3, 0.3, "plane_stress")

CASES = {
    c.name: c for c in (
        BenchmarkCase("patch", "patch", {"sigma": 1.0}, Material(1.0, 0.3), (1, 10, 20, 30), "sbfem", 1,
                      lloyd_iterations=20, description="uniaxial unit stress on the unit square"),
        BenchmarkCase("cantilever", "cantilever", {"L": 10.0, "D": 2.0, "P": 150.0},
                      Material(3e7, 0.25, "plane_stress"), (80, 160, 320, 640), "sbfem", 1,
                      description="cantilever beam under end shear"),
        BenchmarkCase("plate-hole", "plate-hole", {"a": 1.0, "side": 5.0}, Material(1e5, 0.3, "plane_strain"),
                      (100, 200, 400, 800), "sbfem", 1, description="quarter plate with a circular hole"),
        BenchmarkCase("double-edge", "double-edge",
                      {"H": 1.0, "a": 0.25, "L_over_H": 3.0, "sigma": 1.0, "subdivisions": 12},
                      _STEEL, (194, 637, 1327), "sbfem", 2, description="double-edge cracked strip, L/H = 3"),
        BenchmarkCase("double-edge-lh2", "double-edge",
                      {"H": 1.0, "a": 0.25, "L_over_H": 2.0, "sigma": 1.0, "subdivisions": 12},
                      _STEEL, (60, 75, 200, 525, 1000), "sbfem", 2, description="double-edge cracked strip, L/H = 2"),
        BenchmarkCase("inclined-crack", "inclined-crack",
                      {"a": 0.5, "w_over_a": 10.0, "sigma1": 1.0, "sigma2": 2.0, "h_tip": 0.1, "grading": 0.1,
                       "subdivisions": 12, "beta": 90.0},
                      _STEEL, (1,), "sbfem", 2, lloyd_iterations=20,
                      variants=({"beta": 90.0}, {"beta": 45.0}, {"beta": 0.0}),
                      description="centre crack under biaxial tension, plate half-width 10 a"),
        BenchmarkCase("inclined-crack-aw50", "inclined-crack",
                      {"a": 0.5, "w_over_a": 50.0, "sigma1": 1.0, "sigma2": 2.0, "h_tip": 0.1, "grading": 0.1,
                       "subdivisions": 12, "beta": 90.0},
                      _STEEL, (1,), "sbfem", 2, lloyd_iterations=20,
                      variants=({"beta": 90.0}, {"beta": 45.0}, {"beta": 0.0}),
                      description="centre crack under biaxial tension, plate half-width 50 a"),
        BenchmarkCase("hole-cracks", "hole-cracks",
                      {"W": 1.0, "H_over_W": 2.0, "r_over_W": 0.25, "a_over_W": 0.5, "theta": 0.0, "sigma": 1.0,
                       "h_tip": 0.03, "grading": 0.15, "hole_segments": 48, "subdivisions": 12},
                      _STEEL, (1,), "sbfem", 2, lloyd_iterations=20,
                      variants=tuple({"theta": th, "a_over_W": aw} for th in (0.0, np.pi / 6, np.pi / 3)
                                     for aw in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)),
                      description="two cracks emanating from a central hole"),
    )
}


def get_case(name, formulation=None, order=None, levels=None, seed=None) -> BenchmarkCase:
    if name not in CASES:
        raise KeyError(f"unknown case {name!r} (available: {', '.join(sorted(CASES))})")
    return CASES[name].with_options(formulation, order, levels, seed)
