"""Default batteries: exponent/weight configurations and instance lists for every check.

``size="full"`` gives the battery sizes used by the acceptance suite;
``size="quick"`` shrinks grids and counts for smoke tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import (BumpExponent, ConstantWeight, GridDomain, PowerWeight, ball_mask, box_mask,
                    build_grid, empty_mask, sample_exponent, sample_weight, segment_mask)
from ..solver import SolverOptions
from . import checks as C
from .report import CheckReport

__all__ = ["FieldConfig", "property_configs", "outer_measure_suite", "choquet_suite",
           "ball_bounds_suite", "annulus_suite", "comparison_suite", "nested_suite",
           "wiener_suite", "thinness_suite", "run_suite", "SUITE"]


@dataclass(frozen=True)
class FieldConfig:
    """Named (grid, exponent, weight) triple; generators are sampled on demand."""

    name: str
    grid: GridDomain
    p_spec: object = 2.0
    theta_spec: object = 1.0

    def fields(self):
        p = sample_exponent(self.p_spec, self.grid)
        return p, sample_weight(self.theta_spec, self.grid, p)


def property_configs(size="full"):
    """Constant, bump-exponent and power-weight configurations, 1-D and 2-D."""
    n1, n2 = (129, 33) if size == "full" else (65, 17)
    g1 = build_grid(1, (-1.0,), (2.0,), n1)
    g2 = build_grid(2, (-1.0, -1.0), (2.0, 2.0), n2)
    return [
        FieldConfig("1d-constant", g1),
        FieldConfig("1d-bump-exponent", g1, BumpExponent(2.0, 3.5, (0.1,), 0.6)),
        FieldConfig("1d-power-weight", g1, 2.0, PowerWeight(0.5, (0.0,))),
        FieldConfig("2d-bump-exponent", g2, BumpExponent(2.0, 3.0, (0.1, 0.0), 0.6)),
    ]


def _split(n, k):
    return [n // k + (1 if j < n % k else 0) for j in range(k)]


def _tag(label, report):
    for row in report.rows:
        row.name = f"{label} {row.name}"
    report.constants_used = {f"{label} {k}": v for k, v in report.constants_used.items()}
    return report


def _merge(name, reports):
    out = CheckReport(name)
    for r in reports:
        out.rows.extend(r.rows)
        out.constants_used.update(r.constants_used)
        out.failures.extend(r.failures)
        for key, v in r.summary_extra.items():
            out.summary_extra[key] = v
    return out


def outer_measure_suite(n=200, seed=0, size="full", opts=None):
    cfgs = property_configs(size)
    reps = []
    for j, (cfg, m) in enumerate(zip(cfgs, _split(n, len(cfgs)))):
        p, th = cfg.fields()
        reps.append(C.check_outer_measure(p, th, cfg.grid, seed=seed + 1000 * j, n=m,
                                          opts=opts, label=cfg.name))
    return _merge("outer_measure", reps)


def choquet_suite(n=200, seed=0, size="full", opts=None):
    cfgs = property_configs(size)
    reps = []
    for j, (cfg, m) in enumerate(zip(cfgs, _split(n, len(cfgs)))):
        p, th = cfg.fields()
        reps.append(C.check_choquet(p, th, cfg.grid, seed=seed + 1000 * j, n=m,
                                    opts=opts, label=cfg.name))
    return _merge("choquet", reps)


def _ball_configs(size):
    n2 = 129 if size == "full" else 65
    g2 = build_grid(2, (-1.0, -1.0), (2.0, 2.0), n2)
    g1 = build_grid(1, (-2.0,), (4.0,), 513 if size == "full" else 129)
    return [
        (FieldConfig("2d-constant", g2), [(0.0, 0.0), (0.2, -0.1)],
         [0.0625, 0.1, 0.15, 0.2, 0.3, 0.4]),
        (FieldConfig("2d-bump-exponent", g2, BumpExponent(2.0, 3.0, (0.0, 0.0), 0.5)),
         [(0.0, 0.0), (-0.25, 0.2)], [0.0625, 0.125, 0.25, 0.35]),
        (FieldConfig("1d-p3-power-weight", g1, 3.0, PowerWeight(0.5, (0.0,))),
         [(0.0,), (0.5,)], [0.125, 0.25, 0.5, 0.75]),
        (FieldConfig("2d-light-weight", g2, 2.0, ConstantWeight(0.05)),
         [(0.0, 0.0)], [0.1, 0.2, 0.3]),
    ]


def ball_bounds_suite(seed=0, size="full", opts=None, n_samples=100):
    reps = []
    for j, (cfg, centers, radii) in enumerate(_ball_configs(size)):
        p, th = cfg.fields()
        r = C.check_ball_bounds(p, th, cfg.grid, radii, centers, n_samples, seed + 100 * j, opts)
        reps.append(_tag(cfg.name, r))
    return _merge("ball_bounds", reps)


def annulus_suite(seed=0, size="full", opts=None, n_samples=100):
    n2 = 129 if size == "full" else 65
    g2 = build_grid(2, (-1.0, -1.0), (2.0, 2.0), n2)
    reps = []
    for j, cfg in enumerate([FieldConfig("2d-constant", g2),
                             FieldConfig("2d-bump-exponent", g2,
                                         BumpExponent(2.0, 3.0, (0.0, 0.0), 0.5))]):
        p, th = cfg.fields()
        inst = [((0.0, 0.0), 0.25, 0.5), ((0.0, 0.0), 0.2, 0.8), ((0.1, 0.0), 0.1, 0.4),
                ((0.0, 0.0), 0.08, 0.8)]
        r = C.check_annulus_bound(p, th, cfg.grid, inst, n_samples, seed + 100 * j, opts)
        reps.append(_tag(cfg.name, r))
    out = _merge("annulus_bound", reps)
    out.summary_extra["literal_violations"] = sum(
        1 for x in out.rows if " literal" in x.name and x.status == "violation")
    out.summary_extra["inner_radius_violations"] = sum(
        1 for x in out.rows if " inner" in x.name and x.status == "violation")
    return out


def _comparison_instances(grid, rng, count):
    """Compact sets inside ``B(x0, r)``: balls, boxes, a node, empty, random unions."""
    dim = grid.dim
    x0 = (0.0,) * dim
    out = [(ball_mask(grid, x0, 0.25), x0, 0.5), (empty_mask(grid), x0, 0.5),
           (ball_mask(grid, x0, 0.5), x0, 1.0), (ball_mask(grid, x0, 0.5 * grid.h), x0, 0.5)]
    if dim == 1:
        out[0] = (box_mask(grid, (-0.25,), (0.25,)), x0, 0.5)
    else:
        out.append((segment_mask(grid, (-0.4, 0.0), (0.4, 0.0)), x0, 0.5))
    ball = ball_mask(grid, x0, 1.0)
    from .sets import random_compact
    while len(out) < count:
        K = random_compact(ball.erode(), rng, max_side=max(2, int(0.6 / grid.h)))
        out.append((K, x0, 1.0))
    return out[:count]


def comparison_suite(seed=0, size="full", opts=None, n_samples=100):
    """Twenty instances: twelve on ``[-8, 8]`` and eight on ``[-8, 8]^2``."""
    h1, n2 = (1 / 128, 257) if size == "full" else (1 / 32, 65)
    g1 = build_grid(1, (-8.0,), (16.0,), int(round(16 / h1)) + 1)
    g2 = build_grid(2, (-8.0, -8.0), (16.0, 16.0), n2)
    counts = (12, 8) if size == "full" else (5, 3)
    reps = []
    for j, (cfg, k) in enumerate(zip([FieldConfig("1d-constant", g1),
                                      FieldConfig("2d-constant", g2)], counts)):
        p, th = cfg.fields()
        inst = _comparison_instances(cfg.grid, np.random.default_rng([seed, j]), k)
        r = C.check_capacity_comparison(p, th, cfg.grid, inst, n_samples, seed + 100 * j, opts)
        reps.append(_tag(cfg.name, r))
    return _merge("capacity_comparison", reps)


def nested_suite(size="full", opts=None):
    """Ten concentric chains, including the radial 2-D chain with closed-form terms."""
    n2 = 257 if size == "full" else 65
    g2 = build_grid(2, (-1.0, -1.0), (2.0, 2.0), n2)
    g1 = build_grid(1, (-1.0,), (2.0,), 513 if size == "full" else 129)
    o2, o1 = (0.0, 0.0), (0.0,)
    chains2 = [
        (o2, [(1 / 8, 1 / 4), (3 / 8, 1 / 2)], 1.0),
        (o2, [(0.0, 1 / 4), (3 / 8, 1 / 2)], 1.0),
        (o2, [(1 / 8, 1 / 2)], 0.9),
        (o2, [(0.1, 0.2), (0.3, 0.45), (0.55, 0.7)], 0.9),
    ]
    chains1 = [
        (o1, [(1 / 8, 1 / 4), (3 / 8, 1 / 2)], 1.0),
        (o1, [(0.1, 0.2), (0.3, 0.4), (0.5, 0.6), (0.7, 0.8)], 0.95),
        (o1, [(0.25, 0.5)], 0.75),
        ((0.1,), [(0.05, 0.15), (0.3, 0.5)], 0.8),
    ]
    reps = []
    for cfg, chains in [
        (FieldConfig("2d-constant", g2), chains2),
        (FieldConfig("1d-constant", g1), chains1),
        (FieldConfig("1d-bump-exponent", g1, BumpExponent(2.0, 3.0, (0.0,), 0.4)), chains1[:1]),
        (FieldConfig("2d-power-weight", g2, 2.0, PowerWeight(0.5, (0.0, 0.0))), chains2[:1]),
    ]:
        p, th = cfg.fields()
        r = C.check_nested_domain_sum(p, th, cfg.grid, chains, opts)
        reps.append(_tag(cfg.name, r))
    return _merge("nested_domain_sum", reps)


def wiener_suite(size="full", opts=None, workers=1, profiles_out=None):
    if size == "full":
        battery = C.wiener_battery()
    else:
        battery = C.wiener_battery(nodes=(257, 33), i_max=(4, 1))
    return C.check_wiener_equivalence(battery, refine=True, opts=opts, workers=workers,
                                      profiles_out=profiles_out)


def thinness_suite(size="full", opts=None, workers=1, profiles_out=None):
    """Half-plane, full and empty sets at ``i_max = 4`` and ``6``; quick size runs the 1-D analogue."""
    if size == "full":
        battery = C.thinness_battery(513)
    else:
        g = build_grid(1, (-2.0,), (4.0,), 1025)
        battery = [C.WienerCase(c.name, g, c.make_set, (0.0,), i_max=4, expected=c.expected)
                   for c in C.thinness_battery(17)]
    return C.check_thinness_stability(battery, 2, opts, workers, profiles_out)


SUITE = ("outer_measure", "choquet", "ball_bounds", "annulus_bound", "capacity_comparison",
         "nested_domain_sum", "wiener_equivalence", "thinness_stability")


def run_suite(seed=0, size="full", opts: SolverOptions | None = None, workers=1,
              only=None, on_report=None):
    """Run the default batteries in a fixed order and return ``{name: CheckReport}``."""
    jobs = {
        "outer_measure": lambda: outer_measure_suite(200, seed, size, opts)
        if size == "full" else outer_measure_suite(24, seed, size, opts),
        "choquet": lambda: choquet_suite(200, seed, size, opts)
        if size == "full" else choquet_suite(16, seed, size, opts),
        "ball_bounds": lambda: ball_bounds_suite(seed, size, opts),
        "annulus_bound": lambda: annulus_suite(seed, size, opts),
        "capacity_comparison": lambda: comparison_suite(seed, size, opts),
        "nested_domain_sum": lambda: nested_suite(size, opts),
        "wiener_equivalence": lambda: wiener_suite(size, opts, workers),
        "thinness_stability": lambda: thinness_suite(size, opts, workers),
    }
    out = {}
    for name in SUITE:
        if only is not None and name not in only:
            continue
        out[name] = jobs[name]()
        if on_report is not None:
            on_report(name, out[name])
    return out
