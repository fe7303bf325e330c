"""Empirical estimates of the constants that the inequalities leave implicit.

Each estimate is the largest value of its defining ratio over a seeded
family of test fields, so it bounds the true constant from below and can
only grow when the family grows.  Sample ``k`` is drawn from the stream
``(seed, k)``, so the first ``n`` samples do not depend on how many more
are requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from ..grid import (ExponentField, GridDomain, RegionMask, WeightField, ball_mask,
                    doubling_constant, full_mask, gradient_norm)
from ..modular import luxemburg_norm

__all__ = ["ConstantEstimates", "estimate_constants", "mask_diameter",
           "poincare_ratio", "embedding_ratio", "holder_ratio", "l1", "gradient_l1"]


def mask_diameter(mask: RegionMask) -> float:
    """Largest distance between two nodes of the mask."""
    pts = mask.grid.points[mask.membership.ravel()]
    if len(pts) < 2:
        return 0.0
    if mask.grid.dim == 1:
        return float(pts.max() - pts.min())
    try:
        pts = pts[ConvexHull(pts).vertices]
    except Exception:
        # degenerate (collinear) sets: fall back to all points
        pass
    return float(pdist(pts).max())


def _weights(grid, theta):
    return grid.cell_volumes if theta is None else grid.cell_volumes * theta.values


def l1(values, theta: WeightField | None, grid: GridDomain, mask=None) -> float:
    w = _weights(grid, theta)
    a = np.abs(values) * w
    return float(a[mask.membership].sum() if mask is not None else a.sum())


def gradient_l1(values, theta: WeightField | None, grid: GridDomain) -> float:
    return float((gradient_norm(values, grid) * _weights(grid, theta)).sum())


def poincare_ratio(values, theta, grid, diameter) -> float:
    """``int |f| theta / (diam * int |grad f| theta)`` (0 for constant fields)."""
    den = diameter * gradient_l1(values, theta, grid)
    return l1(values, theta, grid) / den if den > 0 else 0.0


def embedding_ratio(values, p: ExponentField, theta, mask: RegionMask) -> float:
    """``||g||_{1,theta} / ||g||_{p,theta}`` over the mask."""
    norm = luxemburg_norm(values, p, theta, mask)
    return l1(values, theta, p.grid, mask) / norm if norm > 0 else 0.0


def conjugate(p: ExponentField) -> ExponentField:
    q = p.values / (p.values - 1.0)
    return ExponentField(p.grid, q, float(q.min()), float(q.max()), p.log_holder_C)


def holder_ratio(f, g, p: ExponentField, q: ExponentField, mask: RegionMask) -> float:
    """``int |f g| / (||f||_p ||g||_q)`` (unweighted) over the mask."""
    nf = luxemburg_norm(f, p, None, mask)
    ng = luxemburg_norm(g, q, None, mask)
    if nf == 0 or ng == 0:
        return 0.0
    return l1(np.abs(f) * np.abs(g), None, p.grid, mask) / (nf * ng)


@dataclass
class ConstantEstimates:
    """Lower-bound estimates: Poincare ``c``, embedding ``c1``, doubling ``c_d``, Holder ``c_h``."""

    poincare_c: float
    embed_c1: float
    doubling_cd: float
    holder_ch: float
    n_samples: int
    seed: int
    diameter: float
    domain_measure: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"poincare_c": self.poincare_c, "embed_c1": self.embed_c1,
                "doubling_cd": self.doubling_cd, "holder_ch": self.holder_ch,
                "n_samples": self.n_samples, "seed": self.seed,
                "diameter": self.diameter, "domain_measure": self.domain_measure}


def _bump_sum(grid, centers, radii, amps):
    f = np.zeros(grid.shape)
    for c, r, a in zip(centers, radii, amps):
        d2 = sum((g - x) ** 2 for g, x in zip(grid.mesh, c)) / r ** 2
        f += a * np.clip(1.0 - d2, 0.0, None) ** 2
    return f


def _random_bumps(grid, interior, rng, positive=False):
    idx = np.argwhere(interior)
    n = int(rng.integers(1, 5))
    picks = idx[rng.integers(0, len(idx), size=n)]
    centers = [tuple(grid.origin[k] + i[k] * grid.spacing[k] for k in range(grid.dim))
               for i in picks]
    span = max(grid.extent)
    radii = np.exp(rng.uniform(np.log(2 * grid.h), np.log(span / 2), size=n))
    amps = rng.uniform(0.2, 1.0, size=n) if positive else rng.uniform(-1.0, 1.0, size=n)
    return _bump_sum(grid, centers, radii, amps)


def _plateaus(domain: RegionMask, count=10):
    """Fields ramping from 0 at the edge of the domain to 1 over a width ``delta``."""
    grid = domain.grid
    padded = np.pad(domain.membership, 1)
    dist = ndimage.distance_transform_edt(padded, sampling=grid.spacing)
    dist = dist[tuple(slice(1, -1) for _ in range(grid.dim))]
    deepest = float(dist.max())
    if deepest <= 0:
        return []
    out = []
    for delta in np.geomspace(grid.h, max(deepest, grid.h), count):
        out.append(np.clip((dist - grid.h) / delta, 0.0, 1.0) * domain.membership)
    return out


def _default_balls(grid):
    lo = np.array(grid.origin)
    hi = np.array(grid.upper)
    c = tuple(0.5 * (lo + hi))
    half = 0.5 * float((hi - lo).min())
    return [(c, half * s) for s in (0.45, 0.25, 0.12) if half * s >= 2 * grid.h]


def estimate_constants(grid: GridDomain, p: ExponentField, theta: WeightField | None = None,
                       n_samples: int = 100, seed: int = 0,
                       domain: RegionMask | None = None, sample_balls=None,
                       extra_fields=()) -> ConstantEstimates:
    """Estimate ``c``, ``c1``, ``c_d`` and ``c_h`` on ``domain`` (default: the box interior).

    The Poincare family has random smooth bump sums vanishing off the
    domain together with plateau fields (1 inside, linear ramp of width
    ``delta`` to 0 at the edge), whose ratio approaches the sharp value.
    The embedding family adds constants and indicators; the Holder family
    adds the extremal pairs ``g = |f|**(p-1)``.  ``extra_fields`` join the
    Poincare and embedding families.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    domain = domain if domain is not None else full_mask(grid).erode()
    if domain.is_empty:
        raise ValueError("estimation domain is empty")
    interior = domain.erode().membership
    if not interior.any():
        interior = domain.membership
    diam = mask_diameter(domain)
    mu = l1(np.ones(grid.shape), theta, grid, domain)
    q = conjugate(p)
    dm = domain.membership

    pc = ec = hc = 0.0
    best = {}

    def note(name, value, label):
        if value > best.get(name, (-math.inf, ""))[0]:
            best[name] = (value, label)

    fixed_poincare = [(f, f"plateau{j}") for j, f in enumerate(_plateaus(domain))]
    fixed_embed = [(dm.astype(float), "constant")]
    for j, frac in enumerate((0.5, 0.25)):
        pts = np.argwhere(dm)
        mid = pts[len(pts) // 2]
        centre = tuple(grid.origin[k] + mid[k] * grid.spacing[k] for k in range(grid.dim))
        try:
            sub = ball_mask(grid, centre, frac * max(diam, grid.h) / 2).membership & dm
        except ValueError:
            continue
        fixed_embed.append((sub.astype(float), f"indicator{j}"))
    for j, f in enumerate(extra_fields):
        fixed_poincare.append((np.asarray(f, float) * dm, f"extra{j}"))
        fixed_embed.append((np.abs(np.asarray(f, float)) * dm, f"extra{j}"))

    for f, label in fixed_poincare:
        r = poincare_ratio(f, theta, grid, diam)
        note("poincare_c", r, label)
        pc = max(pc, r)
    for g, label in fixed_embed:
        if np.any(g):
            r = embedding_ratio(g, p, theta, domain)
            note("embed_c1", r, label)
            ec = max(ec, r)
            h = holder_ratio(g, g ** (p.values - 1.0), p, q, domain)
            note("holder_ch", h, label)
            hc = max(hc, h)

    for k in range(n_samples):
        rng = np.random.default_rng([seed, k])
        f = _random_bumps(grid, interior, rng) * interior
        if np.any(f):
            r = poincare_ratio(f, theta, grid, diam)
            note("poincare_c", r, f"sample{k}")
            pc = max(pc, r)
        g = np.abs(_random_bumps(grid, dm, rng, positive=True)) * dm
        g = g + rng.uniform(0.0, 0.5) * dm
        if np.any(g):
            r = embedding_ratio(g, p, theta, domain)
            note("embed_c1", r, f"sample{k}")
            ec = max(ec, r)
        f2 = np.abs(_random_bumps(grid, dm, rng, positive=True)) * dm
        g2 = np.abs(_random_bumps(grid, dm, rng, positive=True)) * dm
        if rng.random() < 0.5:
            g2 = f2 ** (p.values - 1.0)
        if np.any(f2) and np.any(g2):
            h = holder_ratio(f2, g2, p, q, domain)
            note("holder_ch", h, f"sample{k}")
            hc = max(hc, h)

    balls = list(sample_balls) if sample_balls is not None else _default_balls(grid)
    cd = doubling_constant(theta, grid, balls) if balls else math.nan
    return ConstantEstimates(pc, ec, cd, hc, n_samples, seed, diam, mu,
                             {k: v[1] for k, v in best.items()})
