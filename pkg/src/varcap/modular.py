"""Weighted variable-exponent modulars and the norms they induce."""

from __future__ import annotations

import numpy as np

from .grid import ExponentField, RegionMask, WeightField, gradient_norm

__all__ = ["modular", "luxemburg_norm", "sobolev_modular", "sobolev_norm",
           "gradient_modular", "zero_extended_gradient_modular", "power"]

LUX_RTOL = 1e-10


def power(t, p):
    """``t**p`` for ``t >= 0`` with a fast path for constant exponents."""
    if np.ndim(p) == 0 or np.ptp(p) == 0:
        p0 = float(np.ravel(p)[0]) if np.ndim(p) else float(p)
        if p0 == 2.0:
            return t * t
        return t ** p0
    return t ** p


def _array(f):
    return f.values if hasattr(f, "values") else np.asarray(f, dtype=float)


def _integration_weights(p, theta, mask):
    grid = p.grid
    if theta is not None and theta.grid != grid:
        raise ValueError("weight and exponent live on different grids")
    if mask is not None and mask.grid != grid:
        raise ValueError("mask and exponent live on different grids")
    w = grid.cell_volumes if theta is None else grid.cell_volumes * theta.values
    if mask is None:
        return w, None
    return w[mask.membership], mask.membership


def modular(f, p: ExponentField, theta: WeightField | None = None,
            mask: RegionMask | None = None) -> float:
    """``sum |f|^p(x) theta h^n`` over the mask (whole grid when ``mask`` is None)."""
    if hasattr(f, "grid") and f.grid != p.grid:
        raise ValueError("field and exponent live on different grids")
    v = np.abs(_array(f))
    if v.shape != p.grid.shape:
        raise ValueError(f"field shape {v.shape} does not match grid {p.grid.shape}")
    w, sel = _integration_weights(p, theta, mask)
    pv = p.values
    if sel is not None:
        v, pv = v[sel], pv[sel]
    return float((w * power(v, pv)).sum())


def luxemburg_norm(f, p: ExponentField, theta: WeightField | None = None,
                   mask: RegionMask | None = None, rtol: float = LUX_RTOL) -> float:
    """``inf{lam > 0 : modular(f/lam) <= 1}`` by bracketed bisection.

    The returned ``lam`` always satisfies ``modular(f/lam) <= 1``.
    """
    v = np.abs(_array(f))
    w, sel = _integration_weights(p, theta, mask)
    pv = p.values
    if sel is not None:
        v, pv = v[sel], pv[sel]
    nz = v > 0
    if not nz.any():
        return 0.0
    v, pv, w = v[nz], pv[nz], w[nz]

    def rho(lam):
        return float((w * power(v / lam, pv)).sum())

    # modular of a constant-exponent field is homogeneous: start from that guess
    lam = rho(1.0) ** (1.0 / float(pv.mean()))
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError("modular is not finite at the initial bracket")
    lo = hi = lam
    while rho(hi) > 1.0:
        lo, hi = hi, hi * 2.0
    while rho(lo) <= 1.0:
        lo, hi = lo / 2.0, lo
    if lo == hi:
        lo = hi / 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def gradient_modular(f, p: ExponentField, theta: WeightField | None = None,
                     mask: RegionMask | None = None) -> float:
    """Modular of ``|grad f|``."""
    return modular(gradient_norm(f, p.grid), p, theta, mask)


def zero_extended_gradient_modular(f, p: ExponentField,
                                   theta: WeightField | None = None) -> float:
    """Gradient modular of ``f`` extended by zero beyond the grid box.

    Every node carries the full cell volume ``h^n``; exponent and weight
    are continued by their edge values, which only matters where ``f`` is
    nonzero on the outermost layer.
    """
    grid = p.grid
    v = _array(f)
    pad = [(1, 2)] * grid.dim
    fv = np.pad(v, pad)
    pv = np.pad(p.values, pad, mode="edge")
    tv = np.ones_like(pv) if theta is None else np.pad(theta.values, pad, mode="edge")
    g2 = np.zeros_like(fv)
    for k, h in enumerate(grid.spacing):
        d = np.diff(fv, axis=k) / h
        d = np.concatenate([d, np.take(d, [-1], axis=k)], axis=k)
        g2 += d * d
    dens = power(np.sqrt(g2), pv)
    return float((grid.cell_volume * tv * dens).sum())


def sobolev_modular(f, p: ExponentField, theta: WeightField | None = None) -> float:
    return modular(f, p, theta) + gradient_modular(f, p, theta)


def sobolev_norm(f, p: ExponentField, theta: WeightField | None = None) -> float:
    return (luxemburg_norm(f, p, theta)
            + luxemburg_norm(gradient_norm(f, p.grid), p, theta))
