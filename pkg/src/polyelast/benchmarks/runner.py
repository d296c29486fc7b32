"""Run a benchmark case over its mesh family and check it against the fixture table."""

import json
import math
import time
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from ..postproc import convergence_rate, error_norms, extract_sif, sbfem_integration_constants
from ..solver import DofMap, apply_essential_bc, apply_tractions, assemble_global, solve_linear
from .cases import BenchmarkCase, build_problem, variant_label


class BenchmarkError(RuntimeError):
    """A benchmark stage failed; carries the level index, variant and stage name."""

    def __init__(self, level, variant, stage, cause):
        super().__init__(f"level {level} [{variant}] {stage}: {cause}")
        self.level = level
        self.variant = variant
        self.stage = stage
        self.cause = cause


NAN = float("nan")


@dataclass
class LevelResult:
    variant: str
    level: int
    n_elements: int
    dofs: int
    h: float
    l2_rel: float = NAN
    h1_rel: float = NAN
    K_I: float = NAN
    K_II: float = NAN
    F_I: float = NAN
    F_II: float = NAN
    rate: float = NAN
    params: dict = field(default_factory=dict)
    tips: list = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class FixtureCheck:
    fixture: dict
    actual: float
    passed: bool

    @property
    def expect_fail(self):
        return bool(self.fixture.get("expect_fail", False))

    @property
    def status(self):
        if self.expect_fail:
            return "xfail" if not self.passed else "xpass"
        return "pass" if self.passed else "fail"

    @property
    def ok(self):
        return self.status in ("pass", "xfail")


@dataclass
class BenchmarkResult:
    case: str
    formulation: str
    order: int
    levels: list
    rates: dict
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def rows(self, variant=None):
        return [r for r in self.levels if variant is None or r.variant == variant]

    def to_dict(self):
        return {
            "case": self.case, "formulation": self.formulation, "order": self.order, "ok": self.ok,
            "rates": self.rates,
            "levels": [asdict(r) for r in self.levels],
            "checks": [{**c.fixture, "actual": c.actual, "status": c.status} for c in self.checks],
        }


def _stage(level, variant, stage, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except Exception as exc:  # re-raised with the level context
        raise BenchmarkError(level, variant, stage, exc) from exc


def _solve(problem, case):
    dm = DofMap(problem.mesh, case.order)
    K, models = assemble_global(problem.mesh, case.formulation, case.material, dm, return_elements=True)
    load = problem.load(dm)
    f = apply_tractions(problem.mesh, load, dm, case.material, case.formulation)
    red = apply_essential_bc(K, f, load.constraints)
    return dm, models, red.expand(solve_linear(red.K, red.f))


def _sifs(problem, dm, models, d):
    sigma, a = problem.sif_scale
    tips = []
    for crack in problem.mesh.cracks:
        modal = models[crack.tip_element].modal
        c = sbfem_integration_constants(modal, d[dm.element_dofs(crack.tip_element)])
        r = extract_sif(modal, c, crack.crack_angle, sigma, a)
        tips.append({"tip": list(map(float, crack.tip)), "K_I": r.K_I, "K_II": r.K_II, "F_I": r.F_I, "F_II": r.F_II,
                     "L0": r.L0})
    return tips


def run_level(case: BenchmarkCase, index: int, variant=None) -> LevelResult:
    """Mesh, solve and post-process one level of one variant."""
    label = variant_label(variant or {})
    t0 = time.perf_counter()
    problem = _stage(index, label, "mesh", build_problem, case, index, variant)
    dm, models, d = _stage(index, label, "solve", _solve, problem, case)
    h = float(np.mean(np.sqrt(problem.mesh.areas())))
    res = LevelResult(label, index, problem.mesh.n_elements, dm.n_dofs, h, params=dict(variant or {}))
    if problem.exact_u is not None:
        en = _stage(index, label, "error norms", error_norms, problem.mesh, d, problem.exact_u, problem.exact_stress,
                    case.material, case.formulation, case.order, dm, models)
        res.l2_rel, res.h1_rel = en.l2_rel, en.h1_rel
    if problem.mesh.cracks:
        tips = _stage(index, label, "stress intensity factors", _sifs, problem, dm, models, d)
        res.tips = tips
        # tips of one case are equivalent by construction; report their mean
        for key in ("K_I", "K_II", "F_I", "F_II"):
            setattr(res, key, float(np.mean([t[key] for t in tips])))
    res.seconds = time.perf_counter() - t0
    return res


def _fit(rows, key):
    e = [getattr(r, key) for r in rows]
    if len(rows) < 2 or not all(np.isfinite(e)) or min(e) <= 0:
        return NAN
    return convergence_rate(e, dofs=[r.dofs for r in rows])


def run_benchmark(case: BenchmarkCase, fixtures=None, progress=None) -> BenchmarkResult:
    """Solve every level and variant, fit rates and evaluate fixtures.

    ``fixtures`` defaults to the packaged table; pass ``[]`` to skip checks.
    ``progress(LevelResult)`` is called after each level.
    """
    rows, rates = [], {}
    for variant in case.variants:
        vrows = []
        for i in range(len(case.levels)):
            r = run_level(case, i, variant)
            if vrows and np.isfinite(r.l2_rel) and r.l2_rel > 0 and vrows[-1].l2_rel > 0:
                r.rate = convergence_rate([vrows[-1].l2_rel, r.l2_rel], dofs=[vrows[-1].dofs, r.dofs])
            vrows.append(r)
            if progress:
                progress(r)
        label = variant_label(variant)
        rates[label] = {"l2": _fit(vrows, "l2_rel"), "h1": _fit(vrows, "h1_rel")}
        rows.extend(vrows)
    result = BenchmarkResult(case.name, case.formulation, case.order, rows, rates)
    fx = load_fixtures() if fixtures is None else fixtures
    result.checks = check_fixtures(result, fx)
    return result


def load_fixtures(path=None):
    """Fixture list from ``path`` or the packaged ``fixtures.json``."""
    if path is None:
        text = resources.files(__package__).joinpath("fixtures.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    data = json.loads(text)
    return data["fixtures"]


def _compare(op, actual, value, tol):
    if not math.isfinite(actual):
        return False
    if op == "approx":
        return abs(actual - value) <= tol
    if op == "rel":
        return abs(actual - value) <= tol * abs(value)
    if op == "le":
        return actual <= value
    if op == "ge":
        return actual >= value
    if op == "abs_le":
        return abs(actual) <= value
    raise ValueError(f"unknown fixture comparison {op!r}")


def _variant_matches(want, params):
    if want is None:
        return True
    return all(k in params and math.isclose(float(params[k]), float(v), rel_tol=1e-9, abs_tol=1e-12)
               for k, v in want.items())


def check_fixtures(result: BenchmarkResult, fixtures):
    """Evaluate the fixtures keyed to this (case, formulation, order)."""
    out = []
    for fx in fixtures:
        if (fx["case"], fx["formulation"], int(fx["order"])) != (result.case, result.formulation, result.order):
            continue
        variant = fx.get("variant")
        if fx["level"] == "rate":
            seen = set()
            for row in result.levels:
                if row.variant in seen or not _variant_matches(variant, row.params):
                    continue
                seen.add(row.variant)
                actual = result.rates[row.variant][fx["quantity"]]
                out.append(FixtureCheck({**fx, "variant": row.variant}, actual,
                                        _compare(fx["op"], actual, fx["value"], fx.get("tol", 0.0))))
            continue
        for row in result.levels:
            if not _variant_matches(variant, row.params):
                continue
            if fx["level"] != "all" and int(fx["level"]) != row.level:
                continue
            actual = float(getattr(row, fx["quantity"]))
            out.append(FixtureCheck({**fx, "level": row.level, "variant": row.variant}, actual,
                                    _compare(fx["op"], actual, fx["value"], fx.get("tol", 0.0))))
    return out
