"""Seeded random node sets for the property batteries."""

from __future__ import annotations

import numpy as np

from ..grid import RegionMask

__all__ = ["random_compact", "random_bite", "random_subset"]


def _random_box(anchor, rng, max_side):
    """Box of random sides up to ``max_side`` centred on the ``anchor`` node."""
    out = []
    for a in anchor:
        s = int(rng.integers(1, max(2, max_side) + 1))
        start = int(a) - s // 2
        out.append(slice(max(0, start), start + s))
    return tuple(out)


def _random_disc(grid, rng, allowed_idx, max_radius):
    centre = allowed_idx[rng.integers(0, len(allowed_idx))]
    c = [grid.origin[k] + centre[k] * grid.spacing[k] for k in range(grid.dim)]
    r = rng.uniform(0.5, max(0.5, max_radius)) * grid.h
    return grid.distance_from(c) <= r


def random_compact(allowed: RegionMask, rng, pieces=None, max_side=None) -> RegionMask:
    """Union of 1-3 random boxes and discs, clipped to ``allowed``; never empty."""
    grid = allowed.grid
    idx = np.argwhere(allowed.membership)
    if len(idx) == 0:
        raise ValueError("no room for a random set")
    span = idx.max(axis=0) - idx.min(axis=0) + 1
    max_side = max_side or max(2, int(span.max()) // 3)
    pieces = pieces or int(rng.integers(1, 4))
    for _ in range(20):
        m = np.zeros(grid.shape, bool)
        for _ in range(pieces):
            if grid.dim > 1 and rng.random() < 0.4:
                m |= _random_disc(grid, rng, idx, max_side / 2)
            else:
                m[_random_box(idx[rng.integers(0, len(idx))], rng, max_side)] = True
        m &= allowed.membership
        if m.any():
            return RegionMask(grid, m, "compact")
    m = np.zeros(grid.shape, bool)
    m[tuple(idx[rng.integers(0, len(idx))])] = True
    return RegionMask(grid, m, "compact")


def random_subset(mask: RegionMask, rng, keep=0.6) -> RegionMask:
    """Random sub-box of ``mask`` (may be empty)."""
    idx = np.argwhere(mask.membership)
    if len(idx) == 0:
        return mask
    lo, hi = idx.min(axis=0), idx.max(axis=0)
    cut = np.ones(mask.grid.shape, bool)
    for k in range(mask.grid.dim):
        width = hi[k] - lo[k] + 1
        w = max(1, int(round(width * rng.uniform(keep * 0.5, 1.0))))
        start = lo[k] + int(rng.integers(0, width - w + 1))
        keep_axis = np.zeros(mask.grid.shape[k], bool)
        keep_axis[start:start + w] = True
        shape = [1] * mask.grid.dim
        shape[k] = -1
        cut &= keep_axis.reshape(shape)
    return RegionMask(mask.grid, mask.membership & cut, mask.kind)


def random_bite(domain: RegionMask, rng, keep: RegionMask | None = None) -> RegionMask:
    """``domain`` minus a random box; nodes of ``keep`` and their neighbours survive."""
    grid = domain.grid
    idx = np.argwhere(domain.membership)
    span = idx.max(axis=0) - idx.min(axis=0) + 1
    bite = np.zeros(grid.shape, bool)
    bite[_random_box(idx[rng.integers(0, len(idx))], rng, max(2, int(span.max()) // 2))] = True
    if keep is not None:
        bite &= ~keep.dilate().dilate().membership
    return RegionMask(grid, domain.membership & ~bite, domain.kind)
