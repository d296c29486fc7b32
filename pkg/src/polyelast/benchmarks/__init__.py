"""Reference solutions, benchmark problems and the benchmark runner."""

from .cases import CASES, FAMILIES, BenchmarkCase, Problem, build_problem, get_case, variant_label
from .exact import (cantilever_fields, edge_crack_reference, effective_constants, exact_cantilever, exact_kirsch,
                    exact_patch, inclined_crack_reference, kirsch_displacement, kirsch_fields, patch_fields)
from .runner import (BenchmarkError, BenchmarkResult, FixtureCheck, LevelResult, check_fixtures, load_fixtures,
                     run_benchmark, run_level)

__all__ = [
    "CASES", "FAMILIES", "BenchmarkCase", "BenchmarkError", "BenchmarkResult", "FixtureCheck", "LevelResult",
    "Problem", "build_problem", "cantilever_fields", "check_fixtures", "edge_crack_reference",
    "effective_constants", "exact_cantilever", "exact_kirsch", "exact_patch", "get_case",
    "inclined_crack_reference", "kirsch_displacement", "kirsch_fields", "load_fixtures", "patch_fields",
    "run_benchmark", "run_level", "variant_label",
]
