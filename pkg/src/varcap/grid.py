"""Uniform lattices, sampled exponents and weights, node masks and measures.

Every field in the package lives on a :class:`GridDomain`: a rectangular
lattice of ``nodes_per_axis`` nodes in 1, 2 or 3 dimensions.  Integrals are
node sums against dual-cell volumes (each node owns the cell of side ``h``
centred on it, clipped to the box), which is the trapezoid rule on the
lattice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import ndimage

__all__ = [
    "GridDomain", "ExponentField", "WeightField", "ScalarField", "RegionMask",
    "ConstantExponent", "LogProfileExponent", "BumpExponent",
    "ConstantWeight", "PowerWeight", "PiecewiseConstantWeight",
    "EmptyMaskError", "build_grid", "sample_exponent", "sample_weight",
    "gradient", "gradient_norm", "ball_mask", "annulus_mask", "box_mask",
    "halfspace_mask", "segment_mask", "full_mask", "empty_mask",
    "weighted_measure", "doubling_constant", "estimate_log_holder",
]


class EmptyMaskError(ValueError):
    """A shape primitive selected no grid node."""


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


def _as_tuple(value, dim, cast=float):
    if np.ndim(value) == 0:
        return (cast(value),) * dim
    value = tuple(cast(v) for v in value)
    if len(value) != dim:
        raise ValueError(f"expected {dim} components, got {len(value)}")
    return value


@dataclass(frozen=True)
class GridDomain:
    """Rectangular lattice ``origin + i*h`` with ``h = extent/(nodes-1)``."""

    dim: int
    origin: tuple
    extent: tuple
    nodes_per_axis: tuple

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if any(e <= 0 for e in self.extent):
            raise ValueError(f"extent must be positive, got {self.extent}")
        if any(m < 3 for m in self.nodes_per_axis):
            raise ValueError(f"need at least 3 nodes per axis, got {self.nodes_per_axis}")

    @property
    def shape(self) -> tuple:
        return tuple(self.nodes_per_axis)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def spacing(self) -> tuple:
        return tuple(e / (m - 1) for e, m in zip(self.extent, self.nodes_per_axis))

    @property
    def h(self) -> float:
        """Largest spacing over the axes."""
        return max(self.spacing)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, axis: int) -> np.ndarray:
        i = np.arange(self.nodes_per_axis[axis])
        return self.origin[axis] + i * self.spacing[axis]

    @cached_property
    def mesh(self) -> tuple:
        grids = np.meshgrid(*[self.axis_coords(k) for k in range(self.dim)], indexing="ij")
        return tuple(_readonly(g) for g in grids)

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(size, dim)`` in row-major order."""
        return _readonly(np.stack([g.ravel() for g in self.mesh], axis=1))

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        """Dual-cell volume of every node, clipped to the box."""
        vol = np.ones(self.shape)
        for k, (m, h) in enumerate(zip(self.nodes_per_axis, self.spacing)):
            w = np.full(m, h)
            w[0] = w[-1] = 0.5 * h
            sl = [None] * self.dim
            sl[k] = slice(None)
            vol = vol * w[tuple(sl)]
        return _readonly(vol)

    @property
    def upper(self) -> tuple:
        return tuple(o + e for o, e in zip(self.origin, self.extent))

    def distance_from(self, x0) -> np.ndarray:
        x0 = _as_tuple(x0, self.dim)
        return np.sqrt(sum((g - c) ** 2 for g, c in zip(self.mesh, x0)))

    def nearest_index(self, x0) -> tuple:
        x0 = _as_tuple(x0, self.dim)
        idx = []
        for k in range(self.dim):
            i = int(round((x0[k] - self.origin[k]) / self.spacing[k]))
            idx.append(min(max(i, 0), self.nodes_per_axis[k] - 1))
        return tuple(idx)

    def contains_box(self, lo, hi, tol=1e-12) -> bool:
        return all(l >= o - tol and u <= o + e + tol
                   for l, u, o, e in zip(lo, hi, self.origin, self.extent))

    def refined(self, factor: int = 2) -> "GridDomain":
        """Same box with ``factor`` times as many cells per axis."""
        nodes = tuple((m - 1) * factor + 1 for m in self.nodes_per_axis)
        return GridDomain(self.dim, self.origin, self.extent, nodes)

    def subgrid(self, lo_idx, hi_idx) -> "GridDomain":
        """Lattice spanned by node indices ``lo_idx..hi_idx`` inclusive."""
        origin = tuple(self.origin[k] + lo_idx[k] * self.spacing[k] for k in range(self.dim))
        nodes = tuple(hi_idx[k] - lo_idx[k] + 1 for k in range(self.dim))
        extent = tuple((nodes[k] - 1) * self.spacing[k] for k in range(self.dim))
        return GridDomain(self.dim, origin, extent, nodes)


def build_grid(dim, origin, extent, nodes_per_axis) -> GridDomain:
    """Build a lattice; scalars are broadcast over the axes.

    >>> build_grid(1, 0.0, 1.0, 11).spacing
    (0.1,)
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    return GridDomain(
        int(dim),
        _as_tuple(origin, dim),
        _as_tuple(extent, dim),
        _as_tuple(nodes_per_axis, dim, cast=int),
    )


# --------------------------------------------------------------------------
# fields


def _check_values(grid, values, what):
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"{what} has shape {values.shape}, grid is {grid.shape}")
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = _check_values(self.grid, self.values, "field")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains NaN or Inf")
        object.__setattr__(self, "values", _readonly(values))


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Variable exponent sampled at the nodes, with its range and log-Holder modulus."""

    grid: GridDomain
    values: np.ndarray
    p_minus: float
    p_plus: float
    log_holder_C: float
    spec: object = None

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(_check_values(self.grid, self.values, "exponent")))

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def at(self, x0) -> float:
        return float(self.values[self.grid.nearest_index(x0)])

    def restrict(self, grid: GridDomain, index) -> "ExponentField":
        v = self.values[index]
        return ExponentField(grid, v, float(v.min()), float(v.max()), self.log_holder_C, self.spec)


@dataclass(frozen=True, eq=False)
class WeightField:
    grid: GridDomain
    values: np.ndarray
    dual_integrable_check: bool = True
    spec: object = None

    def __post_init__(self):
        values = _check_values(self.grid, self.values, "weight")
        if not np.all(values > 0) or not np.all(np.isfinite(values)):
            raise ValueError("weight must be finite and strictly positive at every node")
        object.__setattr__(self, "values", _readonly(values))

    def restrict(self, grid: GridDomain, index) -> "WeightField":
        return WeightField(grid, self.values[index], self.dual_integrable_check, self.spec)


# --------------------------------------------------------------------------
# exponent generators


@dataclass(frozen=True)
class ConstantExponent:
    p0: float

    def evaluate(self, grid):
        return np.full(grid.shape, float(self.p0))


@dataclass(frozen=True)
class LogProfileExponent:
    """``p(x) = a + b / (1 + |ln|x - center||)``; equals ``a`` at the centre."""

    a: float
    b: float
    center: tuple = (0.0,)

    def evaluate(self, grid):
        d = grid.distance_from(self.center)
        with np.errstate(divide="ignore"):
            lg = np.abs(np.log(d))
        return self.a + self.b / (1.0 + lg)


@dataclass(frozen=True)
class BumpExponent:
    """Smooth blend from ``p1`` far away to ``p2`` at ``center`` over ``radius``."""

    p1: float
    p2: float
    center: tuple = (0.0,)
    radius: float = 0.5

    def evaluate(self, grid):
        t = grid.distance_from(self.center) / self.radius
        bump = np.zeros_like(t)
        inside = t < 1
        bump[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        return self.p1 + (self.p2 - self.p1) * bump


def estimate_log_holder(grid: GridDomain, values, max_pairs: int = 4_000_000) -> float:
    """Largest ``|p(x)-p(y)| * (-ln|x-y|)`` over node pairs with ``|x-y| <= 1/2``.

    Exhaustive on small grids; on larger ones only lattice offsets along
    the axes and diagonals are scanned.
    """
    values = np.asarray(values, dtype=float)
    if np.ptp(values) == 0:
        return 0.0
    n = values.size
    if n * n <= max_pairs:
        pts = grid.points
        v = values.ravel()
        best = 0.0
        for start in range(0, n, 256):
            d = np.sqrt(((pts[start:start + 256, None, :] - pts[None, :, :]) ** 2).sum(-1))
            dp = np.abs(v[start:start + 256, None] - v[None, :])
            ok = (d > 0) & (d <= 0.5)
            if ok.any():
                best = max(best, float((dp[ok] * -np.log(d[ok])).max()))
        return best
    best = 0.0
    hs = grid.spacing
    dirs = [s for s in itertools.product((-1, 0, 1), repeat=grid.dim) if any(s)]
    for s in dirs:
        step = 1
        while True:
            off = [c * step for c in s]
            dist = math.sqrt(sum((o * h) ** 2 for o, h in zip(off, hs)))
            if dist > 0.5 or any(abs(o) >= m for o, m in zip(off, grid.shape)):
                break
            a = values[tuple(slice(max(0, o), m + min(0, o)) for o, m in zip(off, grid.shape))]
            b = values[tuple(slice(max(0, -o), m + min(0, -o)) for o, m in zip(off, grid.shape))]
            best = max(best, float(np.abs(a - b).max()) * -math.log(dist))
            step *= 2
    return best


def sample_exponent(spec, grid: GridDomain) -> ExponentField:
    """Sample an exponent generator on ``grid`` and record its range."""
    if isinstance(spec, (int, float)):
        spec = ConstantExponent(float(spec))
    values = spec.evaluate(grid)
    if not np.all(np.isfinite(values)):
        raise ValueError("exponent is not finite on the grid")
    p_minus, p_plus = float(values.min()), float(values.max())
    if p_minus <= 1.0:
        raise ValueError(f"exponent must exceed 1 everywhere, min is {p_minus}")
    holder = 0.0 if isinstance(spec, ConstantExponent) else estimate_log_holder(grid, values)
    return ExponentField(grid, values, p_minus, p_plus, holder, spec)


# --------------------------------------------------------------------------
# weight generators


@dataclass(frozen=True)
class ConstantWeight:
    c: float = 1.0

    def evaluate(self, grid):
        if self.c <= 0:
            raise ValueError("constant weight must be positive")
        return np.full(grid.shape, float(self.c))


@dataclass(frozen=True)
class PowerWeight:
    """``|x - center|**alpha``; a node sitting on the centre takes the mean of its neighbours."""

    alpha: float
    center: tuple = (0.0,)

    def evaluate(self, grid):
        d = grid.distance_from(self.center)
        with np.errstate(divide="ignore"):
            values = d ** self.alpha
        singular = d <= 1e-12 * grid.h
        if singular.any():
            for idx in zip(*np.nonzero(singular)):
                nbrs = []
                for k in range(grid.dim):
                    for s in (-1, 1):
                        j = list(idx)
                        j[k] += s
                        if 0 <= j[k] < grid.shape[k]:
                            nbrs.append(values[tuple(j)])
                values[idx] = float(np.mean(nbrs))
        return values


@dataclass(frozen=True)
class PiecewiseConstantWeight:
    """Value ``values[j]`` on the slab ``breaks[j-1] <= x[axis] < breaks[j]``."""

    breaks: tuple
    values: tuple
    axis: int = 0

    def evaluate(self, grid):
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("need len(values) == len(breaks) + 1")
        if min(self.values) <= 0:
            raise ValueError("piecewise weight values must be positive")
        j = np.searchsorted(np.asarray(self.breaks, float), grid.mesh[self.axis], side="right")
        return np.asarray(self.values, float)[j]


def _exponent_on(p: ExponentField, grid: GridDomain):
    if p.spec is not None:
        return p.spec.evaluate(grid)
    from scipy.interpolate import RegularGridInterpolator
    interp = RegularGridInterpolator(
        [p.grid.axis_coords(k) for k in range(p.grid.dim)], p.values)
    return interp(grid.points).reshape(grid.shape)


def _dual_integral(spec, grid, p_values):
    w = spec.evaluate(grid)
    return float((grid.cell_volumes * w ** (-1.0 / (p_values - 1.0))).sum())


def dual_integrability(spec, grid: GridDomain, p: ExponentField, levels: int = 2,
                       ratio_threshold: float = 0.9):
    """Quadrature of ``w**(-1/(p-1))`` under refinement.

    Returns ``(ok, integrals)``.  For a power weight the verdict is the
    exact local criterion ``alpha / (p - 1) < n`` at the singularity, with
    the smallest ``p`` within two cells of the centre: the quadrature of an
    integrable singularity that falls between nodes does not converge
    monotonically, so its increments cannot be trusted.  Other weights are
    judged divergent when the increment between successive halvings of
    ``h`` fails to contract by at least ``ratio_threshold``.
    """
    grids = [grid]
    for _ in range(levels):
        grids.append(grids[-1].refined(2))
    vals = [_dual_integral(spec, g, _exponent_on(p, g)) for g in grids]
    if isinstance(spec, PowerWeight):
        return _power_dual_ok(spec, grid, p), vals
    if not all(np.isfinite(vals)):
        return False, vals
    d = np.diff(vals)
    scale = max(abs(vals[-1]), 1e-300)
    if abs(d[-1]) <= 1e-8 * scale:
        return True, vals
    return bool(abs(d[-1]) < ratio_threshold * abs(d[-2])), vals


def _power_dual_ok(spec, grid, p) -> bool:
    if spec.alpha <= 0:
        return True
    d = grid.distance_from(spec.center)
    near = d <= 2.0 * grid.h
    if not near.any():
        # singularity off the box: the dual weight is bounded on it
        return True
    return bool(spec.alpha / (float(p.values[near].min()) - 1.0) < grid.dim)


def sample_weight(spec, grid: GridDomain, p: ExponentField | None = None) -> WeightField:
    """Sample a weight generator; reject non-positive or dual-divergent weights."""
    if isinstance(spec, (int, float)):
        spec = ConstantWeight(float(spec))
    values = spec.evaluate(grid)
    if not np.all(values > 0):
        raise ValueError("weight must be strictly positive at every node")
    ok = True
    if p is not None and not isinstance(spec, (ConstantWeight, PiecewiseConstantWeight)):
        ok, vals = dual_integrability(spec, grid, p)
        if not ok:
            raise ValueError(
                "dual weight w^(-1/(p-1)) is not integrable: quadrature under "
                f"refinement gives {vals}")
    return WeightField(grid, values, ok, spec)


# --------------------------------------------------------------------------
# differences


def _values(f):
    return f.values if hasattr(f, "values") else np.asarray(f, dtype=float)


def gradient(f, grid: GridDomain) -> np.ndarray:
    """Forward differences per axis, backward at the far end; shape ``(dim, *grid.shape)``."""
    v = _values(f)
    out = np.empty((grid.dim,) + v.shape)
    for k, h in enumerate(grid.spacing):
        d = np.diff(v, axis=k) / h
        out[k] = np.concatenate([d, np.take(d, [-1], axis=k)], axis=k)
    return out


def gradient_norm(f, grid: GridDomain) -> np.ndarray:
    return np.sqrt((gradient(f, grid) ** 2).sum(axis=0))


# --------------------------------------------------------------------------
# masks


_STRUCTURE = {n: ndimage.generate_binary_structure(n, n) for n in (1, 2, 3)}


@dataclass(frozen=True, eq=False)
class RegionMask:
    """A set of grid nodes.  ``kind`` is ``compact``, ``open`` or ``arbitrary``."""

    grid: GridDomain
    membership: np.ndarray
    kind: str = "arbitrary"

    def __post_init__(self):
        m = np.asarray(self.membership, dtype=bool)
        if m.shape != self.grid.shape:
            raise ValueError(f"mask shape {m.shape} does not match grid {self.grid.shape}")
        if self.kind not in ("compact", "open", "arbitrary"):
            raise ValueError(f"unknown mask kind {self.kind!r}")
        object.__setattr__(self, "membership", _readonly(m, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.membership.sum())

    @property
    def is_empty(self) -> bool:
        return not self.membership.any()

    def key(self) -> bytes:
        return np.packbits(self.membership).tobytes() + str(self.grid.shape).encode()

    def _new(self, m, kind=None):
        return RegionMask(self.grid, m, kind or self.kind)

    def dilate(self, kind="open") -> "RegionMask":
        """Add every node within one cell (sup-norm) of the set."""
        return self._new(ndimage.binary_dilation(self.membership, _STRUCTURE[self.grid.dim]), kind)

    def erode(self, kind=None) -> "RegionMask":
        """Drop every node with a neighbour outside the set; the box exterior counts as outside."""
        return self._new(ndimage.binary_erosion(
            self.membership, _STRUCTURE[self.grid.dim], border_value=0), kind)

    def boundary_layer(self) -> "RegionMask":
        return self._new(self.membership & ~self.erode().membership, "arbitrary")

    def union(self, other: "RegionMask", kind=None) -> "RegionMask":
        kind = kind or (self.kind if self.kind == other.kind else "arbitrary")
        return self._new(self.membership | other.membership, kind)

    def intersection(self, other: "RegionMask", kind=None) -> "RegionMask":
        kind = kind or (self.kind if self.kind == other.kind else "arbitrary")
        return self._new(self.membership & other.membership, kind)

    def difference(self, other: "RegionMask", kind=None) -> "RegionMask":
        return self._new(self.membership & ~other.membership, kind)

    def with_kind(self, kind) -> "RegionMask":
        return self._new(self.membership, kind)

    def issubset(self, other: "RegionMask") -> bool:
        return not (self.membership & ~other.membership).any()

    def touches_box_boundary(self) -> bool:
        m = self.membership
        for k in range(m.ndim):
            if np.take(m, 0, axis=k).any() or np.take(m, -1, axis=k).any():
                return True
        return False

    def __or__(self, other):
        return self.union(other)

    def __and__(self, other):
        return self.intersection(other)


def full_mask(grid, kind="arbitrary") -> RegionMask:
    return RegionMask(grid, np.ones(grid.shape, bool), kind)


def empty_mask(grid, kind="compact") -> RegionMask:
    return RegionMask(grid, np.zeros(grid.shape, bool), kind)


def _nonempty(mask, what):
    if mask.is_empty:
        raise EmptyMaskError(f"{what} contains no grid node")
    return mask


def ball_mask(grid, x0, r, closed=True, kind=None) -> RegionMask:
    """Nodes with ``|x-x0| <= r`` (closed) or ``< r`` (open)."""
    if r <= 0:
        raise ValueError("radius must be positive")
    d = grid.distance_from(x0)
    tol = 1e-9 * grid.h
    m = d <= r + tol if closed else d < r - tol
    kind = kind or ("compact" if closed else "open")
    return _nonempty(RegionMask(grid, m, kind),
                     f"ball B({tuple(np.atleast_1d(x0))}, {r}) (h = {grid.h:g})")


def annulus_mask(grid, x0, r1, r2, kind="open") -> RegionMask:
    """Nodes with ``r1 < |x-x0| < r2``."""
    if not r1 < r2:
        raise EmptyMaskError(f"annulus needs r1 < r2, got {r1}, {r2}")
    d = grid.distance_from(x0)
    tol = 1e-9 * grid.h
    return _nonempty(RegionMask(grid, (d > r1 + tol) & (d < r2 - tol), kind),
                     f"annulus A({r1}, {r2})")


def box_mask(grid, lo, hi, kind="compact") -> RegionMask:
    lo = _as_tuple(lo, grid.dim)
    hi = _as_tuple(hi, grid.dim)
    tol = 1e-9 * grid.h
    m = np.ones(grid.shape, bool)
    for g, a, b in zip(grid.mesh, lo, hi):
        m &= (g >= a - tol) & (g <= b + tol)
    return _nonempty(RegionMask(grid, m, kind), f"box {lo}..{hi}")


def halfspace_mask(grid, point, normal, kind="arbitrary") -> RegionMask:
    """Nodes with ``(x - point) . normal >= 0``."""
    point = _as_tuple(point, grid.dim)
    normal = _as_tuple(normal, grid.dim)
    s = sum((g - p) * n for g, p, n in zip(grid.mesh, point, normal))
    return _nonempty(RegionMask(grid, s >= -1e-9 * grid.h, kind), "half-space")


def segment_mask(grid, a, b, kind="compact") -> RegionMask:
    """Nodes within half a cell of the segment ``[a, b]``."""
    a = np.array(_as_tuple(a, grid.dim))
    b = np.array(_as_tuple(b, grid.dim))
    pts = grid.points
    ab = b - a
    t = np.clip(((pts - a) @ ab) / max(ab @ ab, 1e-300), 0.0, 1.0)
    d = np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)
    m = (d <= 0.5 * min(grid.spacing) + 1e-9 * grid.h).reshape(grid.shape)
    return _nonempty(RegionMask(grid, m, kind), "segment")


# --------------------------------------------------------------------------
# measures


def weighted_measure(mask: RegionMask, theta: WeightField | None = None,
                     grid: GridDomain | None = None) -> float:
    """``mu_theta`` of the node set: sum of weight times dual-cell volume."""
    grid = grid or mask.grid
    w = grid.cell_volumes if theta is None else grid.cell_volumes * theta.values
    return float(w[mask.membership].sum())


def doubling_constant(theta: WeightField, grid: GridDomain,
                      sample_balls: Sequence) -> float:
    """Largest ``mu(B(x0, 2r)) / mu(B(x0, r))`` over the sampled ``(x0, r)`` pairs.

    Every ``B(x0, 2r)`` must lie inside the grid box.  The result is an
    estimate from below of the true doubling constant.
    """
    best = 0.0
    for x0, r in sample_balls:
        x0 = _as_tuple(x0, grid.dim)
        lo = [c - 2 * r for c in x0]
        hi = [c + 2 * r for c in x0]
        if not grid.contains_box(lo, hi):
            raise ValueError(f"B({x0}, {2 * r}) does not fit inside the grid")
        big = weighted_measure(ball_mask(grid, x0, 2 * r), theta, grid)
        small = weighted_measure(ball_mask(grid, x0, r), theta, grid)
        best = max(best, big / small)
    return best
