"""Command-line experiment runner.

::

    varcap run CONFIG [CONFIG ...]   execute the task of each config
    varcap verify CONFIG             run the default verification batteries
    varcap study CONFIG              refinement study of the task's target

Every run writes ``manifest.ini`` (config hash, version, seed, estimated
constants) and a copy of the effective config next to its outputs.
Exit status: 2 for a config error, 3 when a solve did not converge, 1
when a verification check failed, 0 otherwise.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import BoundaryLeakWarning, relative_capacity, sobolev_capacity
from .config import ConfigError, ExperimentConfig, load_config, parse_field
from .grid import EmptyMaskError
from .io import field_csv, trace_csv, write_container
from .modular import luxemburg_norm, modular
from .thinness import classify_thinness, max_scale

log = logging.getLogger("varcap")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class _Outcome:
    """Collected results of one task: rows for results.csv, constants and status."""

    def __init__(self):
        self.rows = []
        self.constants = {}
        self.converged = True
        self.checks_failed = False

    def add(self, quantity, value, note=""):
        self.rows.append((quantity, value, note))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _capacity(cfg: ExperimentConfig, grid, target):
    p, theta = cfg.fields_on(grid)
    leak = False
    if target == "sobolev_cap":
        E = cfg.mask("set", grid)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BoundaryLeakWarning)
            res = sobolev_capacity(E, p, theta, opts=cfg.solver)
        leak = bool(caught)
    else:
        K, Om = cfg.mask("inner", grid), cfg.mask("outer", grid)
        try:
            res = relative_capacity(K, Om, p, theta, cfg.solver)
        except ValueError as exc:
            raise ConfigError("task.inner", str(exc)) from None
    return res, leak


def _task_capacity(cfg, grid, out: Path, outcome: _Outcome, target):
    res, leak = _capacity(cfg, grid, target)
    outcome.add("value", res.value)
    outcome.add("eps", res.eps, "solver error bound")
    outcome.add("iterations", res.iterations)
    outcome.add("final_step_decrease", res.final_step_decrease)
    outcome.add("converged", res.converged)
    outcome.add("h", grid.h)
    if target == "sobolev_cap":
        outcome.add("boundary_leak", leak)
    outcome.converged = res.converged
    if str(cfg.task_param("save_minimizer", "false")).lower() == "true":
        field_csv(res.minimizer, out / "minimizer.csv")
        write_container(out / "minimizer.vcap", res.minimizer)
    if res.trace:
        trace_csv(res.trace, out / "trace.csv")


def _task_modular(cfg, grid, out, outcome, norm: bool):
    p, theta = cfg.fields_on(grid)
    f = parse_field(cfg.task_param("field", "constant(value=1)"), grid, cfg.seed)
    mask = cfg.mask("mask", grid) if cfg.task_param("mask") else None
    of = cfg.task_param("of", "field")
    if of not in ("field", "gradient"):
        raise ConfigError("task.of", "must be field or gradient")
    if of == "gradient":
        from .grid import gradient_norm
        f = gradient_norm(f, grid)
    outcome.add("modular", modular(f, p, theta, mask))
    if norm:
        outcome.add("norm", luxemburg_norm(f, p, theta, mask))
    outcome.add("h", grid.h)


def _task_wiener(cfg, grid, out, outcome, workers):
    from .config import _floats
    p, theta = cfg.fields_on(grid)
    A = cfg.mask("set", grid)
    x0 = _floats(cfg.task_param("x0"), "task.x0", grid.dim)
    top = max_scale(grid)
    i_max = int(cfg.task_param("i_max", top))
    if i_max > top:
        raise ConfigError("task.i_max", f"at most {top} on this grid")
    r_min = cfg.task_param("r_min")
    prof = classify_thinness(A, x0, p, theta, i_max, cfg.solver, workers=workers,
                             r_min=float(r_min) if r_min else None)
    prof.to_csv(out / "wiener_profile.csv")
    prof.integral_csv(out / "wiener_integral.csv")
    outcome.add("wiener_sum", prof.wiener_sum)
    outcome.add("wiener_integral", prof.integral_estimate)
    outcome.add("sum_integral_ratio", prof.sum_integral_ratio())
    outcome.add("verdict", prof.verdict)
    outcome.add("sum_verdict", prof.sum_verdict)
    outcome.add("integral_verdict", prof.integral_verdict)
    outcome.add("fitted_q", prof.fitted_q)
    outcome.add("tail_estimate", prof.tail_estimate)
    outcome.add("i_max", prof.i_max, prof.truncation_note)


def _task_verify(cfg, out, outcome, workers):
    from .verify.suite import SUITE, run_suite
    size = cfg.task_param("size", "full")
    if size not in ("full", "quick"):
        raise ConfigError("task.size", "must be full or quick")
    only = cfg.task_param("checks")
    only = [c.strip() for c in only.split(",")] if only else None
    if only:
        for c in only:
            if c not in SUITE:
                raise ConfigError("task.checks", f"unknown check {c!r}")
    summaries = []

    def record(name, rep):
        rep.to_csv(out / f"check_{name}.csv")
        summaries.append(rep.summary())
        outcome.add(name, "pass" if rep.passed else "fail",
                    f"{rep.instances} instances, {rep.violations} violations")
        for key, (value, prov) in rep.constants_used.items():
            outcome.constants[f"{name}.{key}"] = (value, prov)
        log.info(rep.summary().splitlines()[0])
        if not rep.passed:
            outcome.checks_failed = True

    run_suite(cfg.seed, size, cfg.solver, workers, only, record)
    with open(out / "summary.txt", "w") as fh:
        fh.write("\n\n".join(summaries) + "\n")


def _study_rows(cfg, target, levels, reference, workers):
    """Values at ``h, h/2, h/4, ...`` with observed orders; runs levels concurrently."""

    def one(scale):
        grid = cfg.build_grid(scale)
        if target == "modular":
            p, theta = cfg.fields_on(grid)
            f = parse_field(cfg.task_param("field", "constant(value=1)"), grid, cfg.seed)
            return grid.h, modular(f, p, theta), True
        res, _ = _capacity(cfg, grid, target)
        return grid.h, res.value, res.converged

    scales = [2 ** k for k in range(levels)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(one, scales))
    else:
        vals = [one(s) for s in scales]
    return study_table(vals, reference)


def study_table(vals, reference=None):
    """Rows ``(h, value, abs_error, order_vs_reference, richardson_order, converged)``.

    The Richardson order at level ``k`` uses the last three values,
    ``log2((v[k-1] - v[k-2]) / (v[k] - v[k-1]))``; the reference order
    compares successive errors.
    """
    rows = []
    for k, (h, v, conv) in enumerate(vals):
        err = abs(v - reference) if reference is not None else math.nan
        ref_order = rich = math.nan
        if reference is not None and k > 0:
            prev = abs(vals[k - 1][1] - reference)
            if prev > 0 and err > 0:
                ref_order = math.log(prev / err) / math.log(2.0)
        if k > 1:
            d1 = vals[k - 1][1] - vals[k - 2][1]
            d2 = v - vals[k - 1][1]
            if d1 != 0 and d2 != 0 and d1 / d2 > 0:
                rich = math.log(d1 / d2) / math.log(2.0)
        rows.append((h, v, err, ref_order, rich, conv))
    return rows


def convergence_study(cfg: ExperimentConfig, out: Path, workers: int = 1) -> _Outcome:
    """Run the target at ``h, h/2, h/4`` (``levels`` in the task section) and estimate the order.

    The reported order is the Richardson estimate from the last three
    values; with ``reference`` the order of successive errors against it is
    reported as well.
    """
    outcome = _Outcome()
    target = cfg.task_param("target")
    if target is None:
        target = cfg.task_name
        if target not in ("relative_cap", "sobolev_cap", "modular"):
            raise ConfigError("task.target", f"no refinement study for task {target}")
    levels = int(cfg.task_param("levels", "3"))
    if levels < 2:
        raise ConfigError("task.levels", "need at least 2")
    ref = cfg.task_param("reference")
    ref = _reference(ref) if ref is not None else None
    rows = _study_rows(cfg, target, levels, ref, workers)
    _write_rows(out / "study.csv", ["h", "value", "abs_error", "order_vs_reference",
                                    "richardson_order", "converged"], rows)
    orders = [r[4] for r in rows if not math.isnan(r[4])]
    outcome.add("target", target)
    outcome.add("finest_value", rows[-1][1])
    if ref is not None:
        outcome.add("reference", ref)
    outcome.add("estimated_order", orders[-1] if orders else math.nan, "Richardson")
    if ref is not None:
        outcome.add("order_vs_reference", rows[-1][3])
    outcome.converged = all(r[5] for r in rows)
    return outcome


def _reference(text):
    """Number or simple closed form (``2*pi/log(2)``) from the config."""
    allowed = {"pi": math.pi, "e": math.e, "log": math.log, "sqrt": math.sqrt, "exp": math.exp}
    import ast
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        raise ConfigError("task.reference", f"cannot parse {text!r}") from None
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ConfigError("task.reference", f"unknown name {node.id!r}")
        if isinstance(node, (ast.Attribute, ast.Subscript, ast.Lambda)):
            raise ConfigError("task.reference", "only arithmetic is allowed")
    return float(eval(compile(tree, "<reference>", "eval"), {"__builtins__": {}}, allowed))


def _manifest(path, cfg, mode, args, outcome, elapsed):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["run"] = {"tool": "varcap", "version": __version__, "mode": mode,
                 "task": cfg.task_name, "config_sha256": cfg.digest(), "seed": str(cfg.seed),
                 "grid_scale": str(args.grid_scale), "workers": str(args.workers),
                 "config_file": "config.ini",
                 "rerun": f"varcap {mode} config.ini --grid-scale 1"}
    cp["constants"] = {k: _fmt(v[0]) for k, v in sorted(outcome.constants.items())}
    cp["provenance"] = {k: v[1] for k, v in sorted(outcome.constants.items())}
    cp["status"] = {"converged": _fmt(outcome.converged),
                    "checks_failed": _fmt(outcome.checks_failed),
                    "elapsed_seconds": f"{elapsed:.3f}"}
    with open(path, "w") as fh:
        cp.write(fh)


def execute(cfg: ExperimentConfig, mode: str, out: Path, args) -> int:
    """Run one config; returns the exit status."""
    out.mkdir(parents=True, exist_ok=True)
    # the effective config (seed and scale applied) makes the run repeatable
    (out / "config.ini").write_text(cfg.to_text())
    t0 = time.perf_counter()
    outcome = _Outcome()
    grid = cfg.build_grid()
    name = cfg.task_name
    if mode == "verify":
        name = "verify_all"
    if mode == "study" or name == "convergence_study":
        outcome = convergence_study(cfg, out, args.workers)
    elif name in ("relative_cap", "sobolev_cap"):
        _task_capacity(cfg, grid, out, outcome, name)
    elif name in ("modular", "norm"):
        _task_modular(cfg, grid, out, outcome, norm=name == "norm")
    elif name == "wiener":
        _task_wiener(cfg, grid, out, outcome, args.workers)
    elif name == "verify_all":
        _task_verify(cfg, out, outcome, args.workers)
    _write_rows(out / "results.csv", ["task", "quantity", "value", "note"],
                [(name, q, v, n) for q, v, n in outcome.rows])
    _manifest(out / "manifest.ini", cfg, mode, args, outcome, time.perf_counter() - t0)
    if not outcome.converged:
        log.error("solver did not converge; see results.csv")
        return EXIT_SOLVER
    if outcome.checks_failed:
        return EXIT_CHECK
    return EXIT_OK


def _prepare(path, args):
    cfg = load_config(path)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.grid_scale != 1:
        g = cfg.grid
        from .config import GridSpec
        cfg = cfg.replace(grid=GridSpec(g.dim, g.origin, g.extent,
                                        tuple((n - 1) * args.grid_scale + 1 for n in g.nodes)))
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varcap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"varcap {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "execute the task of each config"),
                           ("verify", "run the verification batteries"),
                           ("study", "refinement study of the task's target")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("configs", nargs="+", metavar="CONFIG")
        sp.add_argument("--seed", type=int, default=None, help="override output.seed")
        sp.add_argument("--out", default=None, help="output directory (default: output.dir)")
        sp.add_argument("--workers", type=int, default=1, help="concurrent tasks and solves")
        sp.add_argument("--grid-scale", type=int, default=1,
                        help="multiply the cell count per axis by this factor")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.workers < 1 or args.grid_scale < 1:
        print("error: --workers and --grid-scale must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    jobs = []
    for path in args.configs:
        try:
            cfg = _prepare(path, args)
        except ConfigError as exc:
            print(f"config error in {path}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        base = Path(args.out if args.out is not None else cfg.out_dir)
        out = base / Path(path).stem if len(args.configs) > 1 else base
        jobs.append((cfg, out))

    def job(item):
        cfg, out = item
        try:
            return execute(cfg, args.command, out, args)
        except (ConfigError, EmptyMaskError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    if len(jobs) > 1 and args.workers > 1:
        with ThreadPoolExecutor(min(args.workers, len(jobs))) as ex:
            codes = list(ex.map(job, jobs))
    else:
        codes = [job(j) for j in jobs]
    # config errors outrank solver failures, which outrank check failures
    for code in (EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK):
        if code in codes:
            return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
