"""Sobolev and relative (condenser) capacities by constrained energy minimisation.

Relative capacity pins the field to 1 on the plate ``K`` and to 0 outside
``Omega`` and minimises the gradient modular of the zero extension; the
solve runs on the bounding box of ``Omega`` padded by two nodes.  Sobolev
capacity pins the field to 1 on the one-cell dilation of ``E`` and
minimises the full Sobolev modular over the whole box with a free outer
boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import ExponentField, GridDomain, RegionMask, ScalarField, WeightField, full_mask
from .modular import gradient_modular, modular, zero_extended_gradient_modular
from .solver import Energy, SolverOptions, fista

__all__ = [
    "CapacityResult", "CondenserSpec", "GeneralCapacity", "SolverOptions",
    "minimize_energy", "sobolev_capacity", "relative_capacity",
    "relative_capacity_general", "BoundaryLeakWarning", "SLACK_FACTOR",
]

#: solver error bound, relative to the value, per unit of stopping tolerance
SLACK_FACTOR = 1e3


class BoundaryLeakWarning(UserWarning):
    """The Sobolev minimiser has not decayed at the edge of the box."""


@dataclass(frozen=True, eq=False)
class CondenserSpec:
    inner: RegionMask
    outer: RegionMask
    obstacle_mode: str = "on_set"

    def __post_init__(self):
        if self.obstacle_mode not in ("on_set", "on_dilated_set"):
            raise ValueError(f"unknown obstacle mode {self.obstacle_mode!r}")
        if self.inner.grid != self.outer.grid:
            raise ValueError("inner and outer masks live on different grids")

    @property
    def obstacle(self) -> RegionMask:
        if self.obstacle_mode == "on_dilated_set" and not self.inner.is_empty:
            return self.inner.dilate()
        return self.inner


@dataclass(frozen=True, eq=False)
class CapacityResult:
    value: float
    minimizer: ScalarField
    iterations: int
    final_step_decrease: float
    converged: bool
    admissible_class: str
    tolerance: float = 1e-9
    trace: list = field(default_factory=list)

    @property
    def eps(self) -> float:
        """Bound on the solver error in ``value`` (the slack unit of all checks)."""
        return SLACK_FACTOR * self.tolerance * max(abs(self.value), 1e-12)

    def __float__(self):
        return float(self.value)


def _crop_box(spec: CondenserSpec, pad: int = 2):
    m = spec.outer.membership | spec.inner.membership
    idx = np.nonzero(m)
    lo = [int(i.min()) - pad for i in idx]
    hi = [int(i.max()) + pad for i in idx]
    return lo, hi


def _take_box(a, lo, hi, fill=None):
    """``a[lo:hi+1]`` per axis; indices off the grid repeat the edge (or take ``fill``)."""
    out = a
    for k, (l, h) in enumerate(zip(lo, hi)):
        idx = np.arange(l, h + 1)
        out = np.take(out, np.clip(idx, 0, a.shape[k] - 1), axis=k)
        if fill is not None:
            off = (idx < 0) | (idx >= a.shape[k])
            if off.any():
                sl = [slice(None)] * a.ndim
                sl[k] = off
                out[tuple(sl)] = fill
    return out


def minimize_energy(spec: CondenserSpec, p: ExponentField, theta: WeightField | None,
                    energy: str = "dirichlet_only", opts: SolverOptions | None = None) -> CapacityResult:
    """Minimise the condenser energy over fields in ``[0, 1]`` pinned by ``spec``.

    ``dirichlet_only`` minimises the gradient modular of the field extended
    by zero outside ``spec.outer`` (and beyond the grid box); the solve runs
    on the bounding box of ``spec.outer`` padded by two nodes.
    ``full_sobolev`` minimises gradient plus zeroth-order modular over the
    whole grid with a free boundary.
    """
    opts = opts or SolverOptions()
    grid = p.grid
    if spec.inner.grid != grid:
        raise ValueError("masks and exponent live on different grids")
    if theta is not None and not theta.dual_integrable_check:
        raise ValueError("weight failed the dual integrability check")
    if energy not in ("dirichlet_only", "full_sobolev"):
        raise ValueError(f"unknown energy {energy!r}")
    klass = "relative" if energy == "dirichlet_only" else "sobolev"
    ones = spec.obstacle.membership
    zeros = ~spec.outer.membership
    if not ones.any():
        f = ScalarField(grid, np.zeros(grid.shape))
        return CapacityResult(0.0, f, 0, 0.0, True, klass, opts.tolerance)

    if energy == "dirichlet_only":
        lo, hi = _crop_box(spec)
        th = np.ones(grid.shape) if theta is None else theta.values
        w = grid.cell_volume * _take_box(th, lo, hi)
        e = Energy(grid.spacing, _take_box(p.values, lo, hi), w)
        f_box, _, info = fista(e, _take_box(ones, lo, hi, fill=False),
                               _take_box(zeros, lo, hi, fill=True), opts)
        f = np.zeros(grid.shape)
        inside = tuple(slice(max(l, 0) - l, min(h, n - 1) - l + 1)
                       for l, h, n in zip(lo, hi, grid.shape))
        target = tuple(slice(max(l, 0), min(h, n - 1) + 1)
                       for l, h, n in zip(lo, hi, grid.shape))
        f[target] = f_box[inside]
        field_ = ScalarField(grid, f)
        value = zero_extended_gradient_modular(field_, p, theta)
    else:
        w = grid.cell_volumes if theta is None else grid.cell_volumes * theta.values
        e = Energy(grid.spacing, p.values, w, zeroth_order=True)
        f, _, info = fista(e, ones, zeros, opts)
        field_ = ScalarField(grid, f)
        value = gradient_modular(field_, p, theta) + modular(field_, p, theta)
    return CapacityResult(value, field_, info.iterations, info.final_step_decrease,
                          info.converged, klass, opts.tolerance, info.trace)


def sobolev_capacity(E: RegionMask, p: ExponentField, theta: WeightField | None = None,
                     box: GridDomain | None = None, opts: SolverOptions | None = None,
                     leak_tol: float = 1e-3) -> CapacityResult:
    """Sobolev capacity of ``E``: full modular, ``f = 1`` on the one-cell dilation of ``E``.

    The unbounded space is truncated to the grid box with a free boundary;
    a :class:`BoundaryLeakWarning` is issued when the minimiser exceeds
    ``leak_tol`` on the outermost node layer.
    """
    if box is not None and box != E.grid:
        raise ValueError("E must be sampled on the capacity box")
    spec = CondenserSpec(E, full_mask(E.grid, "open"), "on_dilated_set")
    res = minimize_energy(spec, p, theta, "full_sobolev", opts)
    f = res.minimizer.values
    edge = max(float(np.abs(np.take(f, i, axis=k)).max())
               for k in range(f.ndim) for i in (0, -1))
    if edge > leak_tol:
        warnings.warn(f"Sobolev minimiser reaches {edge:.2e} on the box boundary; "
                      "enlarge the box", BoundaryLeakWarning, stacklevel=2)
    return res


def relative_capacity(K: RegionMask, Omega: RegionMask, p: ExponentField,
                      theta: WeightField | None = None,
                      opts: SolverOptions | None = None) -> CapacityResult:
    """Condenser capacity ``cap(K, Omega)``: gradient modular, ``f = 1`` on ``K``, ``0`` off ``Omega``."""
    if K.grid != Omega.grid:
        raise ValueError("K and Omega live on different grids")
    if not K.issubset(Omega):
        raise ValueError("K must be contained in Omega")
    if not K.is_empty and _touches_edge(K, Omega):
        raise ValueError("K touches the boundary of Omega")
    return minimize_energy(CondenserSpec(K, Omega, "on_set"), p, theta,
                           "dirichlet_only", opts)


def _touches_edge(K: RegionMask, Omega: RegionMask) -> bool:
    """True when some node of ``K`` has a lattice neighbour outside ``Omega`` (or off the box)."""
    inner = Omega.erode().membership
    return bool((K.membership & ~inner).any())


@dataclass(frozen=True, eq=False)
class GeneralCapacity:
    """Inner (compact-exhaustion) and outer (open-superset) values for a set."""

    value: float
    inner: float
    outer: float
    inner_result: CapacityResult
    outer_result: CapacityResult

    @property
    def gap(self) -> float:
        return self.outer - self.inner

    def __float__(self):
        return float(self.value)


def relative_capacity_general(A: RegionMask, Omega: RegionMask, p: ExponentField,
                              theta: WeightField | None = None,
                              opts: SolverOptions | None = None,
                              exhaustion_steps: int = 2) -> GeneralCapacity:
    """Relative capacity of an open or arbitrary node set.

    Open sets take the largest value along the compact exhaustion
    ``erode^j(A), ..., erode(A), A``; on a lattice every node set is
    compact, so the exhaustion stabilises at ``A`` itself.  Arbitrary sets
    report the compact value of ``A`` as ``inner`` and the value of the
    minimal open superset ``dilate(A) & Omega`` as ``outer``.
    """
    if A.kind == "compact":
        res = relative_capacity(A, Omega, p, theta, opts)
        return GeneralCapacity(res.value, res.value, res.value, res, res)
    if A.kind == "open":
        chain = [A]
        for _ in range(exhaustion_steps):
            nxt = chain[-1].erode()
            if nxt.is_empty:
                break
            chain.append(nxt)
        results = [relative_capacity(K.with_kind("compact"), Omega, p, theta, opts)
                   for K in reversed(chain)]
        best = max(results, key=lambda r: r.value)
        return GeneralCapacity(best.value, best.value, best.value, best, best)
    inner = relative_capacity(A.with_kind("compact"), Omega, p, theta, opts)
    if A.is_empty:
        return GeneralCapacity(0.0, 0.0, 0.0, inner, inner)
    U = A.dilate().intersection(Omega).with_kind("compact")
    outer = relative_capacity(U, Omega, p, theta, opts)
    return GeneralCapacity(outer.value, inner.value, outer.value, inner, outer)
