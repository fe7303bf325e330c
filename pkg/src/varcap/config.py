"""Experiment configuration: a flat INI file with sections grid, exponent, weight,
task, solver and output.

Example::

    [grid]
    dim = 2
    origin = -1, -1
    extent = 2, 2
    nodes = 129

    [exponent]
    type = bump
    p1 = 2
    p2 = 3
    center = 0, 0
    radius = 0.5

    [weight]
    type = constant
    c = 1

    [task]
    name = relative_cap
    inner = ball(center=(0, 0), r=0.25)
    outer = ball(center=(0, 0), r=0.5, closed=False)

    [solver]
    tolerance = 1e-9

    [output]
    dir = out
    seed = 0

Sets are written in a small expression language: the primitives
``ball``, ``annulus``, ``box``, ``halfspace``, ``segment``, ``full`` and
``empty`` take keyword arguments, and ``|``, ``&`` and ``-`` combine them.
Coordinates are given in physical units, so one expression describes the
same set on every grid of a refinement study.
"""

from __future__ import annotations

import ast
import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields

import numpy as np

from . import grid as G
from .solver import SolverOptions

__all__ = ["ConfigError", "ExperimentConfig", "GridSpec", "TASKS", "parse_mask",
           "load_config", "parse_config"]

TASKS = ("modular", "norm", "sobolev_cap", "relative_cap", "wiener", "verify_all",
         "convergence_study")
SECTIONS = ("grid", "exponent", "weight", "task", "solver", "output")


class ConfigError(ValueError):
    """Malformed or invalid configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _floats(text, key, n=None):
    try:
        vals = tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(key, f"expected numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(key, "empty value")
    if n is not None:
        if len(vals) == 1:
            vals = vals * n
        elif len(vals) != n:
            raise ConfigError(key, f"expected {n} values, got {len(vals)}")
    return vals


def _fmt_tuple(vals) -> str:
    return ", ".join(repr(v) for v in vals)


@dataclass(frozen=True)
class GridSpec:
    dim: int
    origin: tuple
    extent: tuple
    nodes: tuple

    def build(self, scale: int = 1) -> G.GridDomain:
        """Grid with ``(nodes - 1) * scale + 1`` nodes per axis."""
        nodes = tuple((n - 1) * scale + 1 for n in self.nodes)
        return G.build_grid(self.dim, self.origin, self.extent, nodes)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration.  ``exponent``, ``weight`` and ``task`` keep their keys as text."""

    grid: GridSpec
    exponent: tuple = (("type", "constant"), ("p0", "2"))
    weight: tuple = (("type", "constant"), ("c", "1"))
    task: tuple = (("name", "relative_cap"),)
    solver: SolverOptions = SolverOptions()
    seed: int = 0
    out_dir: str = "out"

    # --- accessors -------------------------------------------------------

    @property
    def task_name(self) -> str:
        return dict(self.task)["name"]

    def task_param(self, key, default=None):
        return dict(self.task).get(key, default)

    def replace(self, **kw) -> "ExperimentConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kw)
        return ExperimentConfig(**vals)

    # --- serialisation ---------------------------------------------------

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["grid"] = {"dim": str(self.grid.dim), "origin": _fmt_tuple(self.grid.origin),
                      "extent": _fmt_tuple(self.grid.extent),
                      "nodes": ", ".join(str(n) for n in self.grid.nodes)}
        cp["exponent"] = dict(self.exponent)
        cp["weight"] = dict(self.weight)
        cp["task"] = dict(self.task)
        cp["solver"] = {f.name: repr(getattr(self.solver, f.name))
                        for f in fields(SolverOptions)}
        cp["output"] = {"dir": self.out_dir, "seed": str(self.seed)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    # --- builders --------------------------------------------------------

    def build_grid(self, scale: int = 1) -> G.GridDomain:
        return self.grid.build(scale)

    def exponent_spec(self):
        return _exponent_spec(dict(self.exponent), self.grid.dim)

    def weight_spec(self):
        return _weight_spec(dict(self.weight), self.grid.dim)

    def fields_on(self, grid: G.GridDomain):
        try:
            p = G.sample_exponent(self.exponent_spec(), grid)
        except ValueError as exc:
            raise ConfigError("exponent", str(exc)) from None
        try:
            theta = G.sample_weight(self.weight_spec(), grid, p)
        except ValueError as exc:
            raise ConfigError("weight", str(exc)) from None
        return p, theta

    def mask(self, key: str, grid: G.GridDomain) -> G.RegionMask:
        text = self.task_param(key)
        if text is None:
            raise ConfigError(f"task.{key}", "missing")
        return parse_mask(text, grid, key=f"task.{key}")


def _need(d, key, section):
    if key not in d:
        raise ConfigError(f"{section}.{key}", "missing")
    return d[key]


def _exponent_spec(d, dim):
    kind = d.get("type", "constant")
    if kind == "constant":
        return G.ConstantExponent(_floats(_need(d, "p0", "exponent"), "exponent.p0", 1)[0])
    if kind == "log_profile":
        return G.LogProfileExponent(
            _floats(_need(d, "a", "exponent"), "exponent.a", 1)[0],
            _floats(_need(d, "b", "exponent"), "exponent.b", 1)[0],
            _floats(d.get("center", "0"), "exponent.center", dim))
    if kind == "bump":
        return G.BumpExponent(
            _floats(_need(d, "p1", "exponent"), "exponent.p1", 1)[0],
            _floats(_need(d, "p2", "exponent"), "exponent.p2", 1)[0],
            _floats(d.get("center", "0"), "exponent.center", dim),
            _floats(d.get("radius", "0.5"), "exponent.radius", 1)[0])
    raise ConfigError("exponent.type", f"unknown exponent type {kind!r}")


def _weight_spec(d, dim):
    kind = d.get("type", "constant")
    if kind == "constant":
        return G.ConstantWeight(_floats(d.get("c", "1"), "weight.c", 1)[0])
    if kind == "power":
        return G.PowerWeight(_floats(_need(d, "alpha", "weight"), "weight.alpha", 1)[0],
                             _floats(d.get("center", "0"), "weight.center", dim))
    if kind == "piecewise":
        breaks = _floats(_need(d, "breaks", "weight"), "weight.breaks")
        values = _floats(_need(d, "values", "weight"), "weight.values")
        try:
            axis = int(d.get("axis", "0"))
        except ValueError:
            raise ConfigError("weight.axis", "expected an integer") from None
        return G.PiecewiseConstantWeight(breaks, values, axis)
    raise ConfigError("weight.type", f"unknown weight type {kind!r}")


def _solver(d) -> SolverOptions:
    kw = {}
    types = {f.name: type(f.default) for f in fields(SolverOptions)}
    for key, text in d.items():
        if key not in types:
            raise ConfigError(f"solver.{key}", "unknown solver option")
        t = types[key]
        try:
            if t is bool:
                kw[key] = {"true": True, "false": False, "1": True, "0": False}[text.lower()]
            elif t is int:
                kw[key] = int(float(text))
            else:
                kw[key] = float(text)
        except (ValueError, KeyError):
            raise ConfigError(f"solver.{key}", f"cannot read {text!r} as {t.__name__}") from None
    opts = SolverOptions(**kw)
    if opts.tolerance <= 0:
        raise ConfigError("solver.tolerance", "must be positive")
    if opts.max_iterations < 1:
        raise ConfigError("solver.max_iterations", "must be at least 1")
    return opts


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(name, "unknown section")
    if not cp.has_section("grid"):
        raise ConfigError("grid", "missing section")
    g = cp["grid"]
    try:
        dim = int(_need(g, "dim", "grid"))
    except ValueError:
        raise ConfigError("grid.dim", "expected an integer") from None
    if dim not in (1, 2, 3):
        raise ConfigError("grid.dim", "must be 1, 2 or 3")
    try:
        nodes = tuple(int(v) for v in _need(g, "nodes", "grid").split(","))
    except ValueError:
        raise ConfigError("grid.nodes", "expected integers") from None
    if len(nodes) == 1:
        nodes = nodes * dim
    if len(nodes) != dim:
        raise ConfigError("grid.nodes", f"expected {dim} values")
    if min(nodes) < 3:
        raise ConfigError("grid.nodes", "need at least 3 nodes per axis")
    extent = _floats(_need(g, "extent", "grid"), "grid.extent", dim)
    if min(extent) <= 0:
        raise ConfigError("grid.extent", "must be positive")
    spec = GridSpec(dim, _floats(g.get("origin", "0"), "grid.origin", dim), extent, nodes)
    for key in g:
        if key not in ("dim", "nodes", "extent", "origin"):
            raise ConfigError(f"grid.{key}", "unknown key")

    exponent = dict(cp["exponent"]) if cp.has_section("exponent") else {"type": "constant",
                                                                          "p0": "2"}
    weight = dict(cp["weight"]) if cp.has_section("weight") else {"type": "constant", "c": "1"}
    task = dict(cp["task"]) if cp.has_section("task") else {}
    if "name" not in task:
        raise ConfigError("task.name", "missing")
    if task["name"] not in TASKS:
        raise ConfigError("task.name", f"unknown task {task['name']!r}; one of {', '.join(TASKS)}")
    solver = _solver(dict(cp["solver"])) if cp.has_section("solver") else SolverOptions()
    out = dict(cp["output"]) if cp.has_section("output") else {}
    try:
        seed = int(out.get("seed", "0"))
    except ValueError:
        raise ConfigError("output.seed", "expected an integer") from None
    cfg = ExperimentConfig(spec, tuple(sorted(exponent.items())), tuple(sorted(weight.items())),
                           tuple(sorted(task.items())), solver, seed, out.get("dir", "out"))
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("file", str(exc)) from None
    return parse_config(text)


def _validate(cfg: ExperimentConfig):
    """Check generator keys and set expressions on the coarsest grid of the run."""
    cfg.exponent_spec()
    cfg.weight_spec()
    try:
        grid = cfg.build_grid()
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    name = cfg.task_name
    required = {"sobolev_cap": ("set",), "relative_cap": ("inner", "outer"),
                "wiener": ("set", "x0"), "convergence_study": ("target",)}.get(name, ())
    for key in required:
        if cfg.task_param(key) is None:
            raise ConfigError(f"task.{key}", f"required by task {name}")
    for key in ("set", "inner", "outer", "mask"):
        if cfg.task_param(key) is not None:
            try:
                parse_mask(cfg.task_param(key), grid, key=f"task.{key}")
            except G.EmptyMaskError:
                pass
    if name == "convergence_study" and cfg.task_param("target") not in (
            "relative_cap", "sobolev_cap", "modular"):
        raise ConfigError("task.target", "must be relative_cap, sobolev_cap or modular")
    if name == "wiener":
        _floats(cfg.task_param("x0"), "task.x0", cfg.grid.dim)


# --------------------------------------------------------------------------
# set expressions


def _literal(node, key):
    try:
        v = ast.literal_eval(node)
    except ValueError:
        raise ConfigError(key, f"argument {ast.unparse(node)!r} is not a literal") from None
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, tuple):
        return tuple(float(x) for x in v)
    return v


def _shape(name, kw, grid, key):
    dim = grid.dim

    def point(k, default=None):
        v = kw.pop(k, default)
        if v is None:
            raise ConfigError(key, f"{name}() needs {k}=")
        v = (v,) if isinstance(v, float) else tuple(v)
        if len(v) == 1 and dim > 1:
            v = v * dim
        if len(v) != dim:
            raise ConfigError(key, f"{name}(): {k} needs {dim} coordinates")
        return v

    def num(k, default=None):
        v = kw.pop(k, default)
        if v is None:
            raise ConfigError(key, f"{name}() needs {k}=")
        return float(v)

    kind = kw.pop("kind", None)
    if name == "ball":
        closed = bool(kw.pop("closed", True))
        m = G.ball_mask(grid, point("center", 0.0), num("r"), closed=closed)
    elif name == "annulus":
        m = G.annulus_mask(grid, point("center", 0.0), num("r1"), num("r2"))
    elif name == "box":
        m = G.box_mask(grid, point("lo"), point("hi"))
    elif name == "halfspace":
        m = G.halfspace_mask(grid, point("point", 0.0), point("normal"))
    elif name == "segment":
        m = G.segment_mask(grid, point("a"), point("b"))
    elif name == "full":
        m = G.full_mask(grid)
    elif name == "empty":
        m = G.empty_mask(grid)
    else:
        raise ConfigError(key, f"unknown shape {name!r}")
    if kw:
        raise ConfigError(key, f"{name}(): unexpected argument {sorted(kw)[0]!r}")
    return m.with_kind(kind) if kind else m


def parse_mask(text: str, grid: G.GridDomain, key: str = "mask") -> G.RegionMask:
    """Evaluate a set expression such as ``ball(center=(0,0), r=0.5) - box(lo=0, hi=1)``."""
    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError:
        raise ConfigError(key, f"cannot parse set expression {text!r}") from None

    def ev(node):
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.BitOr):
                return a.union(b)
            if isinstance(node.op, ast.BitAnd):
                return a.intersection(b)
            if isinstance(node.op, ast.Sub):
                return a.difference(b)
            raise ConfigError(key, "only |, & and - combine sets")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.args:
                raise ConfigError(key, f"{node.func.id}(): use keyword arguments")
            kw = {k.arg: _literal(k.value, key) for k in node.keywords}
            try:
                return _shape(node.func.id, kw, grid, key)
            except G.EmptyMaskError:
                raise
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                raise ConfigError(key, f"{node.func.id}(): {exc}") from None
        raise ConfigError(key, f"unexpected element {ast.unparse(node)!r}")

    return ev(tree)


# --------------------------------------------------------------------------
# scalar fields for the modular and norm tasks


def parse_field(text: str, grid: G.GridDomain, seed: int = 0, key: str = "task.field"):
    """Field expression: ``constant(value=c)``, ``affine(slope=(..), offset=c)``,
    ``bumps(count=k)`` (seeded bump sum) or ``sin(freq=k)`` (product of sines)."""
    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError:
        raise ConfigError(key, f"cannot parse field expression {text!r}") from None
    if not (isinstance(tree, ast.Call) and isinstance(tree.func, ast.Name)):
        raise ConfigError(key, "expected name(key=value, ...)")
    kw = {k.arg: _literal(k.value, key) for k in tree.keywords}
    name = tree.func.id
    x = grid.mesh
    if name == "constant":
        v = np.full(grid.shape, float(kw.pop("value", 1.0)))
    elif name == "affine":
        slope = kw.pop("slope", 1.0)
        slope = (slope,) * grid.dim if isinstance(slope, float) else tuple(slope)
        v = float(kw.pop("offset", 0.0)) + sum(s * xi for s, xi in zip(slope, x))
    elif name == "sin":
        k = float(kw.pop("freq", 1.0))
        v = np.ones(grid.shape)
        for xi, lo, ext in zip(x, grid.origin, grid.extent):
            v = v * np.sin(k * np.pi * (xi - lo) / ext)
    elif name == "bumps":
        rng = np.random.default_rng(seed)
        v = np.zeros(grid.shape)
        for _ in range(int(kw.pop("count", 3))):
            c = [lo + rng.uniform(0.2, 0.8) * ext for lo, ext in zip(grid.origin, grid.extent)]
            r = rng.uniform(0.1, 0.4) * min(grid.extent)
            d2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c)) / r ** 2
            v += rng.uniform(-1, 1) * np.clip(1 - d2, 0, None) ** 2
    else:
        raise ConfigError(key, f"unknown field {name!r}")
    if kw:
        raise ConfigError(key, f"{name}(): unexpected argument {sorted(kw)[0]!r}")
    return G.ScalarField(grid, v)
