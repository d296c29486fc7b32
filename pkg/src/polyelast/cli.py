"""Command-line front end: ``polyelast {mesh,run,report}``.

Exit codes: 0 success, 1 configuration error, 2 mesh or solver failure,
3 report error, 4 a benchmark ran but a fixture check failed.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace

from .benchmarks import CASES, BenchmarkError, get_case, run_benchmark, variant_label
from .benchmarks.cases import build_problem
from .formulations import FORMULATIONS
from .mesh import MeshError, write_mesh
from .mesh.io import atomic_write_text

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_REPORT, EXIT_FIXTURE = 0, 1, 2, 3, 4
COMMANDS = ("mesh", "run", "report")
FORMATS = ("csv", "json")
CSV_COLUMNS = ("variant", "level", "n_elements", "dofs", "h", "l2_rel", "h1_rel", "K_I", "K_II", "F_I", "F_II",
               "rate")


class ConfigError(ValueError):
    pass


class ReportError(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    case: str = None
    formulation: str = "sbfem"
    p: int = 1
    levels: tuple = None
    seed: int = 42
    out: str = "results"
    format: tuple = FORMATS
    params: dict = field(default_factory=dict)
    inputs: tuple = ()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r} (choose from {', '.join(COMMANDS)})")
        if self.command != "report":
            if not self.case:
                raise ConfigError("--case is required")
            if self.case not in CASES:
                raise ConfigError(f"unknown case {self.case!r} (available: {', '.join(sorted(CASES))})")
        if self.formulation not in FORMULATIONS:
            raise ConfigError(f"unknown formulation {self.formulation!r} (choose from {', '.join(FORMULATIONS)})")
        if not isinstance(self.p, int) or self.p < 1:
            raise ConfigError(f"--p must be a positive integer, got {self.p!r}")
        if self.p > 1 and self.formulation != "sbfem":
            raise ConfigError("orders p > 1 are only available with --formulation sbfem")
        if self.levels is not None:
            if len(self.levels) < 1 or any(v <= 0 for v in self.levels):
                raise ConfigError("--levels needs at least one positive value")
            if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                raise ConfigError(f"--levels must be strictly increasing, got {list(self.levels)}")
        bad = set(self.format) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown output format(s) {sorted(bad)} (choose from {', '.join(FORMATS)})")
        return self

    def case_obj(self):
        case = get_case(self.case, self.formulation, self.p, self.levels, self.seed)
        if self.params:
            unknown = set(self.params) - set(case.params)
            if unknown:
                raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for case {case.name!r}")
            try:
                case = replace(case, params={**case.params, **self.params})
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return case


def _parse_levels(text):
    if isinstance(text, (list, tuple)):
        vals = text
    else:
        vals = [v for v in str(text).replace(",", " ").split() if v]
    try:
        return tuple(int(v) if float(v).is_integer() else float(v) for v in vals)
    except ValueError as exc:
        raise ConfigError(f"cannot parse --levels {text!r}") from exc


def _parse_formats(text):
    if isinstance(text, (list, tuple)):
        return tuple(text)
    return tuple(v for v in str(text).replace(",", " ").split() if v)


def _parse_param(item):
    if "=" not in item:
        raise ConfigError(f"--param expects key=value, got {item!r}")
    k, v = item.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError as exc:
        raise ConfigError(f"--param {k} needs a number, got {v!r}") from exc


def _read_config(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    try:
        if str(path).endswith(".json"):
            data = json.loads(raw)
        else:
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(raw.decode("utf-8"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a table of settings")
    known = {f.name for f in fields(RunConfig)} - {"command"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)} in {path}")
    return data


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2, which is reserved for solver failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser():
    ap = _Parser(prog="polyelast", description="Polygonal elasticity benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML or JSON file with default settings; flags override it")
    common.add_argument("--out", help="output directory (default: results)")
    for name, helptext in (("mesh", "write the mesh family of a case as JSON files"),
                           ("run", "solve a benchmark case and check it against the fixtures")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--case", help=f"one of: {', '.join(sorted(CASES))}")
        p.add_argument("--formulation", choices=FORMULATIONS)
        p.add_argument("--p", type=int, help="boundary element order (sbfem only for p > 1)")
        p.add_argument("--levels", help="comma-separated mesh levels (polygon counts or refinement factors)")
        p.add_argument("--seed", type=int, help="random seed of the mesh generator")
        p.add_argument("--param", action="append", default=None, metavar="KEY=VALUE",
                       help="override a geometry or discretisation parameter of the case")
        if name == "run":
            p.add_argument("--format", help="comma-separated output formats: csv, json")
    p = sub.add_parser("report", parents=[common], help="merge run results into comparison tables and plot data")
    p.add_argument("inputs", nargs="*", help="run JSON files (default: all run files in --out)")
    return ap


def make_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    data = _read_config(ns.config) if ns.config else {}
    for key in ("case", "formulation", "p", "levels", "seed", "out", "format"):
        val = getattr(ns, key, None)
        if val is not None:
            data[key] = val
    params = dict(data.get("params", {}) or {})
    for item in getattr(ns, "param", None) or ():
        k, v = _parse_param(item)
        params[k] = v
    cfg = RunConfig(ns.command)
    cfg.case = data.get("case")
    cfg.formulation = data.get("formulation", cfg.formulation)
    try:
        cfg.p = int(data.get("p", cfg.p))
        cfg.seed = int(data.get("seed", cfg.seed))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid integer setting: {exc}") from exc
    if data.get("levels") is not None:
        cfg.levels = _parse_levels(data["levels"])
    cfg.out = str(data.get("out", cfg.out))
    if "format" in data:
        cfg.format = _parse_formats(data["format"])
    cfg.params = params
    cfg.inputs = tuple(getattr(ns, "inputs", ()) or ())
    return cfg.validate()


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc.strerror}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")


def fmt(x):
    """17 significant digits, '.' decimal; integers stay integers."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def stem(case, formulation, order):
    return f"{case}_{formulation}_p{order}"


def cmd_mesh(cfg: RunConfig, log=print):
    case = cfg.case_obj()
    _ensure_dir(cfg.out)
    written = []
    multi = len(case.variants) > 1
    for j, variant in enumerate(case.variants):
        for i, lv in enumerate(case.levels):
            mesh = build_problem(case, i, variant).mesh
            name = f"mesh_{case.name}" + (f"_v{j}" if multi else "") + f"_L{i}.json"
            path = os.path.join(cfg.out, name)
            write_mesh(mesh, path)
            written.append(path)
            log(f"{path}: level {lv} [{variant_label(variant)}], {mesh.n_elements} polygons, {mesh.n_nodes} nodes")
    return written


def cmd_run(cfg: RunConfig, log=print):
    case = cfg.case_obj()
    _ensure_dir(cfg.out)

    def progress(r):
        log(f"level {r.level} [{r.variant}] polygons={r.n_elements} dofs={r.dofs} l2={fmt(r.l2_rel)} "
            f"K_I={fmt(r.K_I)} ({r.seconds:.1f} s)")

    result = run_benchmark(case, progress=progress)
    base = os.path.join(cfg.out, stem(case.name, case.formulation, case.order))
    if "csv" in cfg.format:
        rows = [[getattr(r, c) for c in CSV_COLUMNS] for r in result.levels]
        atomic_write_text(base + ".csv", _csv_text(CSV_COLUMNS, rows))
    if "json" in cfg.format:
        summary = result.to_dict()
        summary["config"] = {"seed": case.seed, "levels": list(case.levels), "params": case.params}
        atomic_write_text(base + ".json", json.dumps(_json_safe(summary), indent=1, sort_keys=True) + "\n")
    for c in result.checks:
        if not c.ok:
            log(f"fixture {c.status}: {c.fixture['quantity']} level {c.fixture['level']} "
                f"[{c.fixture.get('variant', '-')}] = {fmt(c.actual)} ({c.fixture['op']} {fmt(c.fixture['value'])})")
    log(f"{case.name} {case.formulation} p={case.order}: "
        f"{sum(c.ok for c in result.checks)}/{len(result.checks)} fixture checks ok")
    return result


def _load_runs(cfg):
    paths = list(cfg.inputs)
    missing = [p for p in paths if not os.path.isfile(p)]
    if not paths:
        if not os.path.isdir(cfg.out):
            raise ReportError(f"missing input: output directory {cfg.out} does not exist")
        paths = sorted(os.path.join(cfg.out, f) for f in os.listdir(cfg.out)
                       if f.endswith(".json") and not f.startswith(("report_", "mesh_")))
        if not paths:
            raise ReportError(f"missing input: no run results (*.json) in {cfg.out}")
    if missing:
        raise ReportError("missing input(s): " + ", ".join(missing))
    runs = []
    for p in paths:
        try:
            with open(p, encoding="utf-8") as fh:
                data = json.load(fh)
            data["case"], data["formulation"], data["order"], data["levels"]
        except (OSError, ValueError, KeyError) as exc:
            raise ReportError(f"cannot read run result {p}: {exc}") from exc
        runs.append(data)
    return runs


def _num(v):
    return float("nan") if v is None else v


def cmd_report(cfg: RunConfig, log=print):
    runs = _load_runs(cfg)
    _ensure_dir(cfg.out)
    by_case = {}
    for run in runs:
        by_case.setdefault(run["case"], []).append(run)
    written = []
    for case, group in sorted(by_case.items()):
        group.sort(key=lambda r: (r["formulation"], r["order"]))
        keys = sorted({(lv["variant"], lv["level"]) for r in group for lv in r["levels"]})
        header = ["variant", "level"]
        for r in group:
            tag = f"{r['formulation']}_p{r['order']}"
            header += [f"{tag}_{c}" for c in ("dofs", "l2_rel", "h1_rel", "K_I", "K_II", "F_I", "F_II")]
        rows = []
        for key in keys:
            row = list(key)
            for r in group:
                lv = next((x for x in r["levels"] if (x["variant"], x["level"]) == key), None)
                row += [_num(lv[c]) if lv else float("nan")
                        for c in ("dofs", "l2_rel", "h1_rel", "K_I", "K_II", "F_I", "F_II")]
            rows.append(row)
        path = os.path.join(cfg.out, f"report_{case}.csv")
        atomic_write_text(path, _csv_text(header, rows))
        written.append(path)
        for r in group:
            tag = stem(case, r["formulation"], r["order"])
            for variant in sorted({x["variant"] for x in r["levels"]}):
                suffix = "" if variant == "-" else "_" + variant.replace(",", "_").replace("=", "")
                for q in ("l2_rel", "h1_rel"):
                    data = sorted((x["dofs"], _num(x[q])) for x in r["levels"] if x["variant"] == variant)
                    if not any(math.isfinite(e) for _, e in data):
                        continue
                    p = os.path.join(cfg.out, f"plot_{tag}{suffix}_{q}.dat")
                    text = "# dofs error\n" + "".join(f"{fmt(d)} {fmt(e)}\n" for d, e in data)
                    atomic_write_text(p, text)
                    written.append(p)
        log(f"{path}: {len(group)} run(s), {len(rows)} row(s)")
    return written


def main(argv=None):
    try:
        cfg = make_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.command == "mesh":
            cmd_mesh(cfg)
            return EXIT_OK
        if cfg.command == "run":
            result = cmd_run(cfg)
            return EXIT_OK if result.ok else EXIT_FIXTURE
        cmd_report(cfg)
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REPORT
    except MeshError as exc:
        # geometry problems in the case definition are configuration errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BenchmarkError as exc:
        if isinstance(exc.cause, MeshError) and exc.stage == "mesh":
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as exc:  # any other numerical failure in a stage
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
