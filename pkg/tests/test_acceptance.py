"""Acceptance criteria for the benchmark suite.

Each test runs one criterion at its stated tolerance, prints a single
PASS/FAIL line (repeated in the terminal summary) and asserts. Failing
criteria are reported as failures, not skipped.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from polyelast.benchmarks import get_case, run_benchmark

pytestmark = pytest.mark.slow

_RUNS = {}


def solve(name, formulation="sbfem", order=1, **kw):
    """Run (once per session) and return ``(result, seconds)``."""
    key = (name, formulation, order, tuple(sorted(kw.items())))
    if key not in _RUNS:
        t0 = time.perf_counter()
        res = run_benchmark(get_case(name, formulation, order, **kw), fixtures=[])
        _RUNS[key] = (res, time.perf_counter() - t0)
    return _RUNS[key]


class Criterion:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.checks = []
        self.seconds = 0.0

    def check(self, label, ok):
        self.checks.append((label, bool(ok)))

    def close(self, record):
        self.check(f"runtime {self.seconds:.0f} s < {self.limit:.0f} s", self.seconds < self.limit)
        bad = [label for label, ok in self.checks if not ok]
        status = "PASS" if not bad else "FAIL"
        line = f"criterion {self.number} {self.title}: {status} ({len(self.checks) - len(bad)}/{len(self.checks)} checks"
        line += ")" if not bad else "; failed: " + "; ".join(bad) + ")"
        record(line)
        assert not bad, line


def rows(res, variant=None):
    return res.rows(variant)


def by_variant(res, key):
    return {r.variant: getattr(r, key) for r in res.levels}


# ---- 1


def test_criterion_1_patch_sbfem(acceptance_line):
    c = Criterion(1, "patch test, SBFEM p=1..3", 10)
    for p in (1, 2, 3):
        res, sec = solve("patch", "sbfem", p)
        c.seconds += sec
        worst = max(r.l2_rel for r in res.levels)
        c.check(f"p={p} max L2 {worst:.1e} <= 1e-12", worst <= 1e-12)
        c.check(f"p={p} levels {[r.n_elements for r in res.levels]}", [r.n_elements for r in res.levels] == [1, 10, 20, 30])
    c.close(acceptance_line)


# ---- 2


def test_criterion_2_patch_contrast(acceptance_line):
    c = Criterion(2, "patch test, polygonal FEM and nSFEM contrast", 10)
    fem, sec1 = solve("patch", "polyfem")
    ns, sec2 = solve("patch", "nsfem")
    c.seconds = sec1 + sec2
    worst = max(r.l2_rel for r in fem.levels)
    c.check(f"FEM max L2 {worst:.1e} <= 1e-6", worst <= 1e-6)
    for r in ns.levels:
        c.check(f"nSFEM level {r.level} L2 {r.l2_rel:.1e} > 1e-10", r.l2_rel > 1e-10)
    c.close(acceptance_line)


# ---- 3


def test_criterion_3_cantilever_rates(acceptance_line):
    c = Criterion(3, "cantilever convergence", 120)
    runs = {}
    for form in ("polyfem", "sbfem", "nsfem"):
        runs[form], sec = solve("cantilever", form)
        c.seconds += sec
    for form in ("polyfem", "sbfem"):
        l2, h1 = runs[form].rates["-"]["l2"], runs[form].rates["-"]["h1"]
        c.check(f"{form} L2 rate {l2:.3f} >= 1.8", l2 >= 1.8)
        c.check(f"{form} H1 rate {h1:.3f} >= 0.9", h1 >= 0.9)
    ns, fem = runs["nsfem"].rates["-"]["l2"], runs["polyfem"].rates["-"]["l2"]
    c.check(f"nSFEM L2 rate {ns:.3f} < FEM {fem:.3f}", ns < fem)
    for a, b in zip(runs["sbfem"].levels, runs["polyfem"].levels):
        c.check(f"level {a.level} SBFEM L2 {a.l2_rel:.3e} <= FEM {b.l2_rel:.3e}", a.l2_rel <= b.l2_rel)
    c.close(acceptance_line)


# ---- 4


def test_criterion_4_sbfem_p2_improves(acceptance_line):
    c = Criterion(4, "cantilever, SBFEM p=2 over p=1", 120)
    p1, s1 = solve("cantilever", "sbfem", 1)
    p2, s2 = solve("cantilever", "sbfem", 2)
    c.seconds = s1 + s2
    for a, b in zip(p2.levels, p1.levels):
        c.check(f"level {a.level} p2 L2 {a.l2_rel:.2e} < p1 {b.l2_rel:.2e}", a.l2_rel < b.l2_rel)
    r1, r2 = p1.rates["-"]["l2"], p2.rates["-"]["l2"]
    c.check(f"p2 rate {r2:.3f} > p1 rate {r1:.3f}", r2 > r1)
    c.close(acceptance_line)


# ---- 5


def test_criterion_5_plate_hole(acceptance_line):
    c = Criterion(5, "plate with a hole", 180)
    runs = {}
    for form in ("polyfem", "sbfem", "nsfem"):
        runs[form], sec = solve("plate-hole", form)
        c.seconds += sec
    for a, b in zip(runs["sbfem"].levels, runs["polyfem"].levels):
        c.check(f"level {a.level} SBFEM L2 {a.l2_rel:.3e} <= FEM {b.l2_rel:.3e}", a.l2_rel <= b.l2_rel)
    rates = {f: runs[f].rates["-"]["l2"] for f in runs}
    for form in ("polyfem", "sbfem"):
        c.check(f"{form} L2 rate {rates[form]:.3f} >= 1.8", rates[form] >= 1.8)
    c.check(f"nSFEM rate {rates['nsfem']:.3f} below FEM {rates['polyfem']:.3f} and SBFEM {rates['sbfem']:.3f}",
            rates["nsfem"] < min(rates["polyfem"], rates["sbfem"]))
    c.close(acceptance_line)


# ---- 6

# mode I factor for L/H = 2 and p = 1, per level of the 60..1000 family
LH2_P1 = (1.1582, 1.1599, 1.1662, 1.1679, 1.1679)


def test_criterion_6_double_edge(acceptance_line):
    c = Criterion(6, "double-edge crack", 120)
    lh3, s1 = solve("double-edge", "sbfem", 2)
    lh2, s2 = solve("double-edge-lh2", "sbfem", 2)
    lh2p1, s3 = solve("double-edge-lh2", "sbfem", 1)
    c.seconds = s1 + s2 + s3
    mid = lh3.levels[1]
    c.check(f"L/H=3 p=2 {mid.n_elements} polygons F_I {mid.F_I:.5f} = 1.16925 +- 0.002", abs(mid.F_I - 1.16925) <= 0.002)
    for r in lh2.levels[-2:]:
        c.check(f"L/H=2 p=2 level {r.level} F_I {r.F_I:.5f} = 1.1703 +- 0.002", abs(r.F_I - 1.1703) <= 0.002)
    for r, ref in zip(lh2p1.levels, LH2_P1):
        c.check(f"L/H=2 p=1 level {r.level} F_I {r.F_I:.5f} = {ref} +- 0.005", abs(r.F_I - ref) <= 0.005)
    dist = [abs(r.F_I - 1.1703) for r in lh2p1.levels]
    c.check("p=1 distance to the converged value non-increasing "
            f"{[round(d, 4) for d in dist]}", all(b <= a + 1e-12 for a, b in zip(dist, dist[1:])))
    c.close(acceptance_line)


# ---- 7


def test_criterion_7_inclined_crack(acceptance_line):
    c = Criterion(7, "inclined crack", 180)
    w10, s1 = solve("inclined-crack", "sbfem", 2)
    w50, s2 = solve("inclined-crack-aw50", "sbfem", 2)
    c.seconds = s1 + s2
    k1, k2 = by_variant(w10, "K_I"), by_variant(w10, "K_II")
    c.check(f"K_I(90) {k1['beta=90']:.4f} = 2.5415 +- 0.003", abs(k1["beta=90"] - 2.5415) <= 0.003)
    c.check(f"K_I(45) {k1['beta=45']:.4f} = 1.9039 +- 0.003", abs(k1["beta=45"] - 1.9039) <= 0.003)
    c.check(f"K_II(45) {k2['beta=45']:.4f} = 0.6323 +- 0.002", abs(k2["beta=45"] - 0.6323) <= 0.002)
    for v in ("beta=0", "beta=90"):
        c.check(f"|K_II| at {v} {abs(k2[v]):.1e} <= 1e-3", abs(k2[v]) <= 1e-3)
    k50 = by_variant(w50, "K_I")["beta=90"]
    c.check(f"a/w=50 K_I(90) {k50:.4f} within 0.3% of 2.5066", abs(k50 - 2.5066) <= 0.003 * 2.5066)
    c.close(acceptance_line)


# ---- 8

# rows: a/W = 0.3 .. 0.9
HOLE_F = {
    0.0: {"F_I": (1.090, 1.214, 1.283, 1.394, 1.577, 1.902, 2.639)},
    math.pi / 6: {"F_I": (0.738, 0.871, 0.947, 1.037, 1.153, 1.315, 1.554),
                  "F_II": (0.153, 0.342, 0.419, 0.464, 0.504, 0.559, 0.637)},
    math.pi / 3: {"F_I": (0.069, 0.162, 0.220, 0.264, 0.306, 0.348, 0.393),
                  "F_II": (0.158, 0.345, 0.425, 0.469, 0.502, 0.534, 0.566)},
}


def test_criterion_8_hole_cracks(acceptance_line):
    c = Criterion(8, "two cracks from a hole", 180)
    res, c.seconds = solve("hole-cracks", "sbfem", 2)
    got = {(round(r.params["theta"], 9), round(r.params["a_over_W"], 9)): r for r in res.levels}
    for theta, table in HOLE_F.items():
        tol = 0.02 if theta == 0.0 else 0.025
        for q, ref in table.items():
            for aw, v in zip(np.round(np.arange(0.3, 0.95, 0.1), 9), ref):
                actual = getattr(got[(round(theta, 9), aw)], q)
                c.check(f"theta={math.degrees(theta):.0f} a/W={aw:.1f} {q} {actual:.3f} vs {v} ({tol:.1%})",
                        abs(actual - v) <= tol * v)
    c.close(acceptance_line)


# ---- 9

PROPERTY_SUITES = {
    "test_interpolants.py": "partition_of_unity or gradients_match",
    "test_quadrature.py": "dunavant_all_monomials or monomials_match",
    "test_formulations.py": "200_polygons or hamiltonian_pairs or boundary_force_consistency",
    "test_postproc.py": "mirror_about_crack_line",
}


def test_criterion_9_property_suites(acceptance_line):
    c = Criterion(9, "property suites", 60)
    here = Path(__file__).parent
    t0 = time.perf_counter()
    for name, expr in PROPERTY_SUITES.items():
        out = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(here / name),
                              "-k", expr], capture_output=True, text=True, cwd=here.parent)
        summary = out.stdout.strip().splitlines()[-1] if out.stdout.strip() else out.stderr.strip()[-200:]
        c.check(f"{name} [{summary}]", out.returncode == 0 and " passed" in summary)
    c.seconds = time.perf_counter() - t0
    c.close(acceptance_line)
