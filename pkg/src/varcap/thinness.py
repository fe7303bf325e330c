"""Wiener sums and integrals of dyadic capacity densities, and thin/thick verdicts.

At a point ``x0`` the density of a set ``A`` at scale ``r`` is

    ratio(r) = cap(A & B(x0, r), B(x0, 2r)) / cap(B(x0, r), B(x0, 2r))

and its increment is ``ratio ** (1 / (p(x0) - 1))``.  The Wiener sum adds
the increments at ``r = 2**-i``; the Wiener integral integrates them
against ``dr / r``.  A finite computation can only see finitely many
scales, so verdicts come from the shape of the tail: geometric decay with
a negligible extrapolated remainder is ``thin``, increments bounded away
from zero are ``thick``, anything else is ``inconclusive``.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import CapacityResult, SolverOptions, relative_capacity
from .grid import ExponentField, RegionMask, WeightField, ball_mask

__all__ = [
    "CondenserCache", "WienerProfile", "wiener_ratio", "wiener_sum",
    "wiener_integral", "classify_thinness", "max_scale",
    "THICK_THRESHOLD", "THIN_TAIL", "TAIL_SCALES", "POINTS_PER_OCTAVE",
]

#: every increment of the last scales at least this: thick
THICK_THRESHOLD = 1e-2
#: extrapolated geometric remainder below this: thin
THIN_TAIL = 1e-3
TAIL_SCALES = 5
POINTS_PER_OCTAVE = 8


class CondenserCache:
    """Memoised relative capacities for one exponent, weight and solver setting.

    Solves are keyed by the node sets of plate and domain, so the many
    condensers shared between scales, radii and sets are solved once.
    """

    def __init__(self, p: ExponentField, theta: WeightField | None = None,
                 opts: SolverOptions | None = None):
        self.p = p
        self.theta = theta
        self.opts = opts or SolverOptions()
        self._store: dict = {}

    def __len__(self):
        return len(self._store)

    def _solve(self, K, Omega):
        return relative_capacity(K, Omega, self.p, self.theta, self.opts)

    def cap(self, K: RegionMask, Omega: RegionMask) -> CapacityResult:
        key = (K.key(), Omega.key())
        if key not in self._store:
            self._store[key] = self._solve(K, Omega)
        return self._store[key]

    def solve_many(self, pairs, workers: int = 1) -> list:
        """Capacities of ``(K, Omega)`` pairs; distinct solves may run concurrently."""
        keys = [(K.key(), O.key()) for K, O in pairs]
        todo = {}
        for k, pair in zip(keys, pairs):
            if k not in self._store and k not in todo:
                todo[k] = pair
        if workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                results = list(ex.map(lambda kp: self._solve(*kp), todo.values()))
        else:
            results = [self._solve(*kp) for kp in todo.values()]
        # insertion in request order keeps the store independent of scheduling
        for k, res in zip(todo, results):
            self._store[k] = res
        return [self._store[k] for k in keys]


def _check_scale(grid, x0, r):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if r < 2 * grid.h * (1 - 1e-12):
        raise ValueError(f"radius {r:g} is below two cells (h = {grid.h:g})")
    if not grid.contains_box(x0 - 2 * r, x0 + 2 * r):
        raise ValueError(f"B(x0, {2 * r:g}) does not fit inside the grid")


def _condensers(A: RegionMask, x0, r):
    """Numerator plate (``None`` when empty), denominator plate and shared domain."""
    grid = A.grid
    ball = ball_mask(grid, x0, r)
    outer = ball_mask(grid, x0, 2 * r, closed=False)
    plate = A.intersection(ball, kind="compact")
    return (None if plate.is_empty else plate), ball, outer


def _ratios(A, x0, radii, cache: CondenserCache, workers=1):
    """``(cap_num, cap_den, ratio, eps)`` arrays over ``radii``."""
    grid = A.grid
    plans = []
    for r in radii:
        _check_scale(grid, x0, r)
        plans.append(_condensers(A, x0, r))
    pairs = []
    for plate, ball, outer in plans:
        pairs.append((ball, outer))
        if plate is not None:
            pairs.append((plate, outer))
    cache.solve_many(pairs, workers)
    num, den, eps = [], [], []
    for plate, ball, outer in plans:
        d = cache.cap(ball, outer)
        if d.value <= 0:
            raise ValueError("denominator capacity vanished: grid too coarse for this ball")
        if plate is None:
            n_val, n_eps = 0.0, 0.0
        else:
            n = cache.cap(plate, outer)
            n_val, n_eps = n.value, n.eps
            if abs(n_val) < n_eps:
                n_val = max(n_val, 0.0)
        num.append(n_val)
        den.append(d.value)
        eps.append(n_eps / d.value + d.eps * max(n_val, 0.0) / d.value ** 2)
    num, den = np.array(num), np.array(den)
    return num, den, num / den, np.array(eps)


def wiener_ratio(A: RegionMask, x0, r: float, p: ExponentField,
                 theta: WeightField | None = None, opts: SolverOptions | None = None,
                 cache: CondenserCache | None = None) -> float:
    """Capacity density of ``A`` in ``B(x0, r)`` relative to ``B(x0, 2r)``."""
    if cache is None:
        cache = CondenserCache(p, theta, opts)
    return float(_ratios(A, x0, [r], cache)[2][0])


def max_scale(grid, x0=None) -> int:
    """Largest dyadic level ``i`` with at least four cells across ``B(x0, 2**-i)``."""
    return int(math.floor(1.0 + math.log2(1.0 / (4.0 * grid.h)) + 1e-9))


def _tail_verdict(increments, n_tail=TAIL_SCALES):
    """Verdict, fitted contraction ``q`` and extrapolated remainder of a tail."""
    a = np.asarray(increments, dtype=float)
    if a.size == 0:
        return "inconclusive", math.nan, math.nan
    tail = a[-n_tail:]
    if np.all(tail <= 0):
        return "thin", 0.0, 0.0
    if tail.size >= n_tail and np.all(tail >= THICK_THRESHOLD):
        return "thick", math.nan, math.inf
    if tail[-1] <= 0:
        # the set misses the smallest ball, hence every smaller one
        return "thin", 0.0, 0.0
    if np.any(tail <= 0):
        return "inconclusive", math.nan, math.nan
    if tail.size < 2:
        return "inconclusive", math.nan, math.nan
    slope = np.polyfit(np.arange(tail.size), np.log(tail), 1)[0]
    q = float(np.exp(slope))
    if q < 1.0:
        rest = float(tail[-1] * q / (1.0 - q))
        if rest < THIN_TAIL:
            return "thin", q, rest
        return "inconclusive", q, rest
    return "inconclusive", q, math.inf


@dataclass
class WienerProfile:
    """Per-scale densities, Wiener sum and integral at one point, and the verdict."""

    x0: tuple
    scales: list
    radii: np.ndarray
    cap_num: np.ndarray
    cap_den: np.ndarray
    ratios: np.ndarray
    exponent_at_center: float
    increments: np.ndarray
    partial_sums: np.ndarray
    ratio_eps: np.ndarray = None
    integral_estimate: float = math.nan
    integral_rmin: float = math.nan
    integral_radii: np.ndarray = None
    integral_ratios: np.ndarray = None
    sum_verdict: str = "inconclusive"
    integral_verdict: str = "inconclusive"
    verdict: str = "inconclusive"
    fitted_q: float = math.nan
    tail_estimate: float = math.nan
    truncation_note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def wiener_sum(self) -> float:
        return float(self.partial_sums[-1]) if len(self.partial_sums) else 0.0

    @property
    def i_max(self) -> int:
        return int(self.scales[-1])

    def sum_integral_ratio(self) -> float:
        """``W_sum / W``; ``nan`` for the trivially consistent ``0 / 0`` case."""
        w = self.integral_estimate
        if w == 0 and self.wiener_sum == 0:
            return math.nan
        return self.wiener_sum / w if w > 0 else math.inf

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("i,r_i,cap_num,cap_den,ratio,increment,partial_sum\n")
        for row in zip(self.scales, self.radii, self.cap_num, self.cap_den,
                       self.ratios, self.increments, self.partial_sums):
            buf.write(f"{row[0]}," + ",".join(repr(float(v)) for v in row[1:]) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def integral_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("r,ratio,integrand\n")
        if self.integral_radii is not None:
            for r, q in zip(self.integral_radii, self.integral_ratios):
                inc = max(q, 0.0) ** self.exponent_at_center
                buf.write(f"{float(r)!r},{float(q)!r},{float(inc)!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def verdict_record(self) -> str:
        return (f"verdict={self.verdict} sum_verdict={self.sum_verdict} "
                f"integral_verdict={self.integral_verdict} "
                f"wiener_sum={self.wiener_sum!r} wiener_integral={self.integral_estimate!r} "
                f"i_max={self.i_max} r_min={self.integral_rmin!r} q={self.fitted_q!r} "
                f"tail={self.tail_estimate!r} note={self.truncation_note}")


def wiener_sum(A: RegionMask, x0, p: ExponentField, theta: WeightField | None = None,
               i_max: int | None = None, opts: SolverOptions | None = None,
               cache: CondenserCache | None = None, workers: int = 1) -> WienerProfile:
    """Dyadic Wiener sum over ``r_i = 2**-i``, ``i = 0..i_max``, with a tail verdict."""
    grid = A.grid
    top = max_scale(grid, x0)
    if i_max is None:
        i_max = top
    if i_max > top:
        raise ValueError(f"i_max = {i_max} resolves fewer than four cells; at most {top} on this grid")
    if cache is None:
        cache = CondenserCache(p, theta, opts)
    scales = list(range(i_max + 1))
    radii = np.array([2.0 ** -i for i in scales])
    num, den, ratios, eps = _ratios(A, x0, radii, cache, workers)
    expo = 1.0 / (p.at(x0) - 1.0)
    inc = np.maximum(ratios, 0.0) ** expo
    verdict, q, rest = _tail_verdict(inc)
    return WienerProfile(
        x0=tuple(np.atleast_1d(x0).astype(float)), scales=scales, radii=radii,
        cap_num=num, cap_den=den, ratios=ratios, exponent_at_center=expo,
        increments=inc, partial_sums=np.cumsum(inc), ratio_eps=eps,
        sum_verdict=verdict, verdict=verdict, fitted_q=q, tail_estimate=rest,
        truncation_note=f"scales 0..{i_max}; tail extrapolated from the last {TAIL_SCALES}")


def _integral_radii(r_min, per_octave=POINTS_PER_OCTAVE):
    length = math.log(1.0 / r_min)
    n = max(1, math.ceil(per_octave * length / math.log(2.0) - 1e-9))
    dt = length / n
    t = -dt * (np.arange(n) + 0.5)
    return np.exp(t), dt


def wiener_integral(A: RegionMask, x0, p: ExponentField, theta: WeightField | None = None,
                    r_min: float | None = None, opts: SolverOptions | None = None,
                    cache: CondenserCache | None = None, workers: int = 1,
                    _detail: bool = False):
    """Midpoint rule in ``log r`` for the Wiener integral over ``[r_min, 1]``.

    ``POINTS_PER_OCTAVE`` nodes per halving of ``r``.  ``r_min`` defaults
    to two cells.
    """
    grid = A.grid
    r_min = 2.0 * grid.h if r_min is None else float(r_min)
    if r_min < 2.0 * grid.h * (1 - 1e-12):
        raise ValueError(f"r_min = {r_min:g} is below two cells (h = {grid.h:g})")
    if r_min >= 1.0:
        raise ValueError("r_min must be below 1")
    if cache is None:
        cache = CondenserCache(p, theta, opts)
    radii, dt = _integral_radii(r_min)
    ratios = _ratios(A, x0, radii, cache, workers)[2]
    expo = 1.0 / (p.at(x0) - 1.0)
    vals = np.maximum(ratios, 0.0) ** expo
    total = float(vals.sum() * dt)
    if _detail:
        return total, radii, ratios, vals, dt
    return total


def classify_thinness(A: RegionMask, x0, p: ExponentField, theta: WeightField | None = None,
                      i_max: int | None = None, opts: SolverOptions | None = None,
                      cache: CondenserCache | None = None, workers: int = 1,
                      r_min: float | None = None) -> WienerProfile:
    """Thin/thick verdict from the Wiener sum, cross-checked against the integral.

    The integral runs over ``[r_min, 1]`` with ``r_min = 2**-(i_max+1)``
    (the range the dyadic sum represents) unless that is below two cells,
    in which case it stops at two cells and the note says so.  The integral
    route gives its own verdict from the per-octave averages of the
    integrand; disagreement makes the overall verdict inconclusive.
    """
    if cache is None:
        cache = CondenserCache(p, theta, opts)
    prof = wiener_sum(A, x0, p, theta, i_max, opts, cache, workers)
    grid = A.grid
    natural = 2.0 ** -(prof.i_max + 1)
    if r_min is None:
        r_min = max(natural, 2.0 * grid.h)
    total, radii, ratios, vals, dt = wiener_integral(
        A, x0, p, theta, r_min, opts, cache, workers, _detail=True)
    octave = POINTS_PER_OCTAVE
    n_oct = len(vals) // octave
    averages = [vals[k * octave:(k + 1) * octave].mean() for k in range(n_oct)]
    if len(vals) % octave:
        averages.append(vals[n_oct * octave:].mean())
    iverdict = _tail_verdict(averages)[0]
    prof.integral_estimate = total
    prof.integral_rmin = r_min
    prof.integral_radii = radii
    prof.integral_ratios = ratios
    prof.integral_verdict = iverdict
    prof.verdict = prof.sum_verdict if prof.sum_verdict == iverdict else "inconclusive"
    note = prof.truncation_note + f"; integral over [{r_min:g}, 1]"
    if r_min > natural * (1 + 1e-12):
        note += f" (truncated at two cells instead of {natural:g})"
    prof.truncation_note = note
    return prof
