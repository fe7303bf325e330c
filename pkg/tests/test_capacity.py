import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import spsolve

from varcap.capacity import (BoundaryLeakWarning, CondenserSpec, minimize_energy,
                             relative_capacity, relative_capacity_general, sobolev_capacity)
from varcap.grid import (BumpExponent, PowerWeight, RegionMask, annulus_mask, ball_mask, box_mask,
                         build_grid, empty_mask, full_mask, sample_exponent, sample_weight)
from varcap.modular import gradient_modular, sobolev_modular, zero_extended_gradient_modular
from varcap.solver import Energy, SolverOptions


def _diff(n, h):
    """Forward differences; the last row repeats the one before it."""
    d = sp.lil_matrix((n, n))
    for i in range(n - 1):
        d[i, i], d[i, i + 1] = -1 / h, 1 / h
    d[n - 1] = d[n - 2]
    return d.tocsr()


def dirichlet_oracle(K, Omega):
    """Exact discrete p = 2 condenser energy by a sparse linear solve."""
    grid = K.grid
    pad = [(1, 2)] * grid.dim
    k = np.pad(K.membership, pad)
    om = np.pad(Omega.membership, pad)
    shape = k.shape
    A = None
    for ax in range(grid.dim):
        mats = [sp.identity(s, format="csr") for s in shape]
        mats[ax] = _diff(shape[ax], grid.spacing[ax])
        D = mats[0]
        for m in mats[1:]:
            D = sp.kron(D, m, format="csr")
        A = D.T @ D if A is None else A + D.T @ D
    A = A.tocsr()
    kf, free = k.ravel(), (om & ~k).ravel()
    f = kf.astype(float)
    f[free] = spsolve(A[free][:, free].tocsc(), -A[free][:, kf] @ np.ones(kf.sum()))
    return grid.cell_volume * f @ (A @ f)


TIGHT = SolverOptions(tolerance=1e-11)


def _interval(n, p0):
    g = build_grid(1, (-1.0,), (2.0,), n)
    p = sample_exponent(p0, g)
    K = box_mask(g, (-0.25,), (0.25,))
    Om = ball_mask(g, (0.0,), 1.0, closed=False)
    return g, p, K, Om


@pytest.mark.parametrize("p0, exact", [(2.0, 8 / 3), (3.0, 32 / 9)])
def test_interval_condenser(p0, exact):
    g, p, K, Om = _interval(1025, p0)
    res = relative_capacity(K, Om, p)
    assert res.converged
    assert res.value == pytest.approx(exact, rel=0.02)


def test_interval_matches_linear_solve():
    g, p, K, Om = _interval(257, 2.0)
    res = relative_capacity(K, Om, p, opts=TIGHT)
    assert res.value == pytest.approx(dirichlet_oracle(K, Om), rel=1e-6)
    # the minimiser is a pair of ramps
    x = g.axis_coords(0)
    ramp = np.clip((1 - np.abs(x)) / 0.75, 0, 1)
    assert np.abs(res.minimizer.values - ramp).max() < 0.02


def test_two_dimensional_matches_linear_solve():
    g = build_grid(2, (-1.0, -1.0), (2.0, 2.0), 33)
    p = sample_exponent(2.0, g)
    K = box_mask(g, (-0.3, -0.2), (0.1, 0.3)) | ball_mask(g, (0.4, -0.4), 0.15)
    Om = ball_mask(g, (0.0, 0.0), 0.9, closed=False)
    res = relative_capacity(K, Om, p, opts=TIGHT)
    assert res.value == pytest.approx(dirichlet_oracle(K, Om), rel=1e-6)


def test_empty_plate_is_zero(square):
    p = sample_exponent(2.0, square)
    res = relative_capacity(empty_mask(square), full_mask(square, "open"), p)
    assert res.value == 0.0 and not res.minimizer.values.any()
    assert sobolev_capacity(empty_mask(square), p).value == 0.0


def test_pinned_everywhere_gives_indicator():
    g = build_grid(1, (0.0,), (1.0,), 33)
    p = sample_exponent(2.0, g)
    Om = box_mask(g, (0.25,), (0.75,)).with_kind("open")
    res = minimize_energy(CondenserSpec(Om.with_kind("compact"), Om), p, None)
    f = res.minimizer.values
    assert np.array_equal(f, Om.membership.astype(float))
    # two unit jumps of height 1 across one cell each
    assert res.value == pytest.approx(2 / g.h)


def test_plate_must_sit_inside(line):
    p = sample_exponent(2.0, line)
    Om = ball_mask(line, (0.0,), 0.5, closed=False)
    with pytest.raises(ValueError):
        relative_capacity(ball_mask(line, (0.0,), 0.8), Om, p)
    with pytest.raises(ValueError, match="boundary"):
        relative_capacity(Om.with_kind("compact"), Om, p)


def test_sobolev_interval():
    g = build_grid(1, (-8.0,), (16.0,), 16 * 128 + 1)
    p = sample_exponent(2.0, g)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryLeakWarning)
        res = sobolev_capacity(box_mask(g, (-1.0,), (1.0,)), p)
    assert res.value == pytest.approx(4.0, rel=0.03)
    x = g.axis_coords(0)
    tail = x > 1.5
    assert np.allclose(res.minimizer.values[tail], np.exp(-(x[tail] - 1)), atol=0.02)


def test_sobolev_leak_warning():
    g = build_grid(1, (-2.0,), (4.0,), 129)
    p = sample_exponent(2.0, g)
    with pytest.warns(BoundaryLeakWarning):
        sobolev_capacity(box_mask(g, (-1.0,), (1.0,)), p)


def test_sobolev_monotone(square):
    p = sample_exponent(BumpExponent(2.0, 3.0, (0.0, 0.0), 0.5), square)
    small = ball_mask(square, (0.0, 0.0), 0.2)
    big = ball_mask(square, (0.0, 0.0), 0.35) | box_mask(square, (0.2, 0.0), (0.4, 0.1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryLeakWarning)
        a, b = sobolev_capacity(small, p), sobolev_capacity(big, p)
    assert a.value <= b.value + a.eps + b.eps


def _variable_case():
    g = build_grid(2, (-1.0, -1.0), (2.0, 2.0), 33)
    p = sample_exponent(BumpExponent(1.6, 3.0, (0.2, 0.0), 0.6), g)
    th = sample_weight(PowerWeight(0.5, (0.1, 0.1)), g, p)
    K = ball_mask(g, (0.0, 0.0), 0.25)
    Om = ball_mask(g, (0.0, 0.0), 0.75, closed=False)
    return g, p, th, K, Om


def test_energy_identity():
    g, p, th, K, Om = _variable_case()
    res = relative_capacity(K, Om, p, th)
    f = res.minimizer
    # Omega stays two nodes clear of the box, so the zero extension adds nothing
    assert gradient_modular(f, p, th) == pytest.approx(res.value, rel=1e-10)
    assert zero_extended_gradient_modular(f, p, th) == pytest.approx(res.value, rel=1e-10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryLeakWarning)
        s = sobolev_capacity(K, p, th)
    assert sobolev_modular(s.minimizer, p, th) == pytest.approx(s.value, rel=1e-10)


def test_minimiser_constraints():
    g, p, th, K, Om = _variable_case()
    f = relative_capacity(K, Om, p, th).minimizer.values
    assert f.min() >= 0 and f.max() <= 1
    assert np.all(f[K.membership] == 1) and np.all(f[~Om.membership] == 0)


def test_convexity_certificate():
    g, p, th, K, Om = _variable_case()
    e = Energy(g.spacing, p.values, g.cell_volume * th.values)
    ones, zeros = K.membership, ~Om.membership
    r = np.random.default_rng(3)
    for _ in range(4):
        a, b = r.random(g.shape), r.random(g.shape)
        for f in (a, b):
            f[ones], f[zeros] = 1.0, 0.0
        ea, eb = e.value(a), e.value(b)
        for t in np.linspace(0, 1, 7)[1:-1]:
            assert e.value((1 - t) * a + t * b) <= (1 - t) * ea + t * eb + 1e-12 * (ea + eb)


def test_minimiser_beats_feasible_perturbations():
    g, p, th, K, Om = _variable_case()
    res = relative_capacity(K, Om, p, th)
    free = Om.membership & ~K.membership
    r = np.random.default_rng(5)
    for _ in range(5):
        f = res.minimizer.values.copy()
        f[free] = np.clip(f[free] + 0.05 * r.standard_normal(free.sum()), 0, 1)
        assert zero_extended_gradient_modular(f, p, th) >= res.value - res.eps


def test_general_single_node(square):
    p = sample_exponent(2.0, square)
    Om = full_mask(square, "open").erode().erode()
    m = np.zeros(square.shape, bool)
    m[16, 16] = True
    node = RegionMask(square, m, "arbitrary")
    gen = relative_capacity_general(node, Om, p)
    assert gen.inner == pytest.approx(relative_capacity(node.with_kind("compact"), Om, p).value)
    assert gen.outer == pytest.approx(
        relative_capacity(node.dilate().with_kind("compact"), Om, p).value)
    assert gen.inner <= gen.outer and gen.value == gen.outer


def test_general_open_set_stabilises(square):
    p = sample_exponent(2.0, square)
    Om = ball_mask(square, (0.0, 0.0), 0.9, closed=False)
    U = ball_mask(square, (0.0, 0.0), 0.4, closed=False)
    gen = relative_capacity_general(U, Om, p)
    direct = relative_capacity(U.with_kind("compact"), Om, p)
    assert gen.inner == gen.outer
    assert gen.value == pytest.approx(direct.value, rel=1e-12)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_nested_monotonicity(seed):
    g = build_grid(2, (-1.0, -1.0), (2.0, 2.0), 25)
    p = sample_exponent(BumpExponent(2.0, 2.8, (0.0, 0.0), 0.6), g)
    r = np.random.default_rng(seed)
    c = r.uniform(-0.15, 0.15, 2)
    a1 = ball_mask(g, c, r.uniform(0.1, 0.2))
    a2 = a1 | box_mask(g, c, c + r.uniform(0.1, 0.3, 2))
    om1 = ball_mask(g, (0.0, 0.0), 0.95, closed=False)
    om2 = ball_mask(g, (0.0, 0.0), r.uniform(0.7, 0.9), closed=False)
    x = relative_capacity(a1, om1, p)
    y = relative_capacity(a2, om2, p)
    assert x.value <= y.value + 2 * max(x.eps, y.eps)


def test_ring_limit_and_order():
    exact = 2 * math.pi / math.log(2)
    vals = []
    for n in (65, 129, 257):
        g = build_grid(2, (-0.5, -0.5), (1.0, 1.0), n)
        p = sample_exponent(2.0, g)
        K = ball_mask(g, (0.0, 0.0), 0.25)
        Om = ball_mask(g, (0.0, 0.0), 0.5, closed=False)
        vals.append(relative_capacity(K, Om, p).value)
    errs = [abs(v - exact) for v in vals]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] / exact < 0.03
    # successive differences shrink at least linearly
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    assert math.log2(d1 / d2) >= 1.0


@pytest.mark.parametrize("p0", [2.0, 3.0])
def test_interval_order(p0):
    vals = [relative_capacity(*_interval(n, p0)[2:], _interval(n, p0)[1]).value
            for n in (65, 129, 257)]
    exact = 2 * 0.75 ** (1 - p0)
    errs = [abs(v - exact) for v in vals]
    # the plate edges land on nodes, so the error can vanish to solver precision
    if errs[1] > 1e-6:
        assert math.log2(errs[0] / errs[1]) >= 1.0


def test_sobolev_refinement():
    vals = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        g = build_grid(1, (-8.0,), (16.0,), int(round(16 / h)) + 1)
        p = sample_exponent(2.0, g)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryLeakWarning)
            vals.append(sobolev_capacity(box_mask(g, (-1.0,), (1.0,)), p).value)
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    assert abs(d2) < abs(d1)
    assert math.log2(abs(d1 / d2)) >= 1.0


def test_annulus_plate_between(square):
    # capacity of a ring-shaped plate exceeds the inner disc it surrounds
    p = sample_exponent(2.0, square)
    Om = ball_mask(square, (0.0, 0.0), 0.95, closed=False)
    ring = annulus_mask(square, (0.0, 0.0), 0.3, 0.5).with_kind("compact")
    disc = ball_mask(square, (0.0, 0.0), 0.2)
    assert relative_capacity(disc, Om, p).value < relative_capacity(ring, Om, p).value
