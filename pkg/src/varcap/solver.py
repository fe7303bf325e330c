"""Projected accelerated gradient descent for obstacle-constrained p(x)-energies.

The discrete energy is

    F(f) = sum_x  vol(x) w(x) [ |grad f(x)|^p(x)  (+ |f(x)|^p(x)) ]

with forward differences (backward at the far end of each axis).  The
feasible set is ``0 <= f <= 1`` with ``f = 1`` on the obstacle and
``f = 0`` on the zero set, so projection is a clip followed by two pins.
F is convex and C^1 for ``p > 1``; FISTA with backtracking and gradient
restart reaches the discrete minimum.  Grids with an odd node count on
every axis are warm-started from the solution on the every-other-node
lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SolverOptions", "SolveInfo", "Energy", "fista"]


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 50_000
    tolerance: float = 1e-9
    window: int = 10
    multilevel: bool = True
    coarsest_nodes: int = 9
    keep_trace: bool = False


@dataclass
class SolveInfo:
    iterations: int
    final_step_decrease: float
    converged: bool
    trace: list = field(default_factory=list)
    levels: int = 1


def _scalar_exponent(p):
    if np.ptp(p) == 0:
        return float(p.flat[0])
    return None


class Energy:
    """Discrete energy and its gradient on one lattice.

    Parameters
    ----------
    spacing : tuple of float
    p : ndarray
        Exponent at every node.
    weight : ndarray
        ``cell volume * theta`` at every node.
    zeroth_order : bool
        Include the ``|f|^p`` term (full Sobolev energy).
    """

    def __init__(self, spacing, p, weight, zeroth_order=False):
        self.spacing = tuple(float(h) for h in spacing)
        self.p = np.asarray(p, dtype=float)
        self.weight = np.asarray(weight, dtype=float)
        self.zeroth_order = zeroth_order
        self.p_const = _scalar_exponent(self.p)
        self.dim = self.p.ndim

    def _pow(self, t, half=False):
        # t**p, or (t**2)**(p/2) when half
        p = self.p_const if self.p_const is not None else self.p
        if half:
            if self.p_const == 2.0:
                return t
            return t ** (0.5 * p)
        if self.p_const == 2.0:
            return t * t
        return t ** p

    def differences(self, f):
        out = []
        for k, h in enumerate(self.spacing):
            d = np.diff(f, axis=k)
            d /= h
            out.append(np.concatenate([d, np.take(d, [-1], axis=k)], axis=k))
        return out

    def value(self, f):
        ds = self.differences(f)
        g2 = ds[0] * ds[0]
        for d in ds[1:]:
            g2 += d * d
        dens = self._pow(g2, half=True)
        if self.zeroth_order:
            dens = dens + self._pow(np.abs(f))
        return float((self.weight * dens).sum())

    def value_and_grad(self, f):
        ds = self.differences(f)
        g2 = ds[0] * ds[0]
        for d in ds[1:]:
            g2 += d * d
        p = self.p_const if self.p_const is not None else self.p
        if self.p_const == 2.0:
            dens = g2
            coef = 2.0 * self.weight
        else:
            dens = g2 ** (0.5 * p)
            with np.errstate(divide="ignore", invalid="ignore"):
                coef = self.weight * p * g2 ** (0.5 * p - 1.0)
            coef[g2 == 0] = 0.0
        energy = float((self.weight * dens).sum())
        grad = np.zeros_like(f)
        for k, (d, h) in enumerate(zip(ds, self.spacing)):
            v = coef * d
            n = v.shape[k]
            head = [slice(None)] * self.dim
            # the far node repeats the last forward difference
            last = list(head); last[k] = slice(n - 1, n)
            prev = list(head); prev[k] = slice(n - 2, n - 1)
            v[tuple(prev)] += v[tuple(last)]
            edges = list(head); edges[k] = slice(0, n - 1)
            up = list(head); up[k] = slice(1, n)
            ve = v[tuple(edges)] / h
            grad[tuple(up)] += ve
            grad[tuple(edges)] -= ve
        if self.zeroth_order:
            a = np.abs(f)
            if self.p_const == 2.0:
                energy += float((self.weight * a * a).sum())
                grad += 2.0 * self.weight * f
            else:
                energy += float((self.weight * a ** p).sum())
                grad += self.weight * p * a ** (p - 1.0) * np.sign(f)
        return energy, grad

    def lipschitz_guess(self):
        pmax = float(self.p.max())
        curv = 2.0 * sum(4.0 / h ** 2 for h in self.spacing)
        return max(float(self.weight.max()) * curv * max(1.0, pmax - 1.0), 1e-300)


class _Projector:
    def __init__(self, ones, zeros):
        self.ones = ones
        self.zeros = zeros & ~ones

    def __call__(self, f):
        np.clip(f, 0.0, 1.0, out=f)
        f[self.ones] = 1.0
        f[self.zeros] = 0.0
        return f


def _coarsen_ok(shape, coarsest):
    return all(m % 2 == 1 and (m + 1) // 2 >= coarsest for m in shape)


def _prolong(fc, shape):
    """Multilinear interpolation from the every-other-node lattice."""
    f = fc
    for k in range(fc.ndim):
        n = shape[k]
        new_shape = list(f.shape)
        new_shape[k] = n
        out = np.empty(new_shape)
        even = [slice(None)] * fc.ndim
        even[k] = slice(0, n, 2)
        odd = [slice(None)] * fc.ndim
        odd[k] = slice(1, n, 2)
        a = [slice(None)] * fc.ndim
        a[k] = slice(0, -1)
        b = [slice(None)] * fc.ndim
        b[k] = slice(1, None)
        out[tuple(even)] = f
        out[tuple(odd)] = 0.5 * (f[tuple(a)] + f[tuple(b)])
        f = out
    return f


def fista(energy: Energy, ones, zeros, opts: SolverOptions = SolverOptions(), x0=None):
    """Minimise ``energy`` over ``{0 <= f <= 1, f[ones] = 1, f[zeros] = 0}``.

    Returns ``(f, value, info)`` where ``f`` is the best feasible iterate.
    """
    shape = energy.p.shape
    levels = 1
    if x0 is None and opts.multilevel and _coarsen_ok(shape, opts.coarsest_nodes):
        sub = tuple(slice(0, None, 2) for _ in shape)
        coarse = Energy(tuple(2 * h for h in energy.spacing), energy.p[sub],
                        energy.weight[sub] * 2 ** energy.dim, energy.zeroth_order)
        c_opts = SolverOptions(opts.max_iterations, opts.tolerance * 10, opts.window,
                               True, opts.coarsest_nodes, False)
        fc, _, cinfo = fista(coarse, ones[sub], zeros[sub], c_opts)
        x0 = _prolong(fc, shape)
        levels = cinfo.levels + 1

    project = _Projector(np.asarray(ones, bool), np.asarray(zeros, bool))
    x = project(np.zeros(shape) if x0 is None else np.array(x0, dtype=float))
    fx = energy.value(x)
    free = ~(project.ones | project.zeros)
    if not free.any():
        return x, fx, SolveInfo(0, 0.0, True, [fx] if opts.keep_trace else [], levels)

    L = energy.lipschitz_guess()
    y = x.copy()
    t = 1.0
    best_x, best_f = x.copy(), fx
    history = [fx]
    trace = [fx] if opts.keep_trace else []
    converged = False
    decrease = math.inf
    k = 0
    for k in range(1, opts.max_iterations + 1):
        fy, g = energy.value_and_grad(y)
        L *= 0.9
        while True:
            x_new = project(y - g / L)
            d = x_new - y
            f_new = energy.value(x_new)
            quad = fy + float((g * d).sum()) + 0.5 * L * float((d * d).sum())
            if f_new <= quad + 1e-13 * abs(fy):
                break
            L *= 2.0
        if f_new < best_f:
            best_f = f_new
            best_x = x_new
        history.append(best_f)
        if opts.keep_trace:
            trace.append(f_new)

        step = x_new - x
        if float(((y - x_new) * step).sum()) > 0.0:
            # momentum points uphill: restart
            t = 1.0
            y = x_new.copy()
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_new) * step
            t = t_new
        x = x_new

        if not np.any(d):
            converged = True
            decrease = 0.0
            break
        if k >= opts.window:
            decrease = history[-1 - opts.window] - history[-1]
            if decrease <= opts.tolerance * max(abs(history[-1]), 1e-300):
                converged = True
                break
    return best_x, best_f, SolveInfo(k, float(decrease), converged, trace, levels)
