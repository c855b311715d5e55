"""Poisson point process of particle start heights.

The invariant start intensity is rate(x) * exp(-x) dx on the real line. Its
upper tail integral is finite (the rate is bounded), so points can be listed
in decreasing order by mapping a unit-rate Poisson process on (0, inf),
i.e. cumulative sums of standard exponentials, through the tail-integral
inverse.

Numerics: the tail integral is tabulated once on a uniform knot grid with
fixed-order Gauss-Legendre panels, accumulated from the far right so the
small values carry full relative precision. Queries off the table use the
known exp(-z) tail beyond the right edge (the rate is 1 + O(exp(-z)) there)
and per-query panels below the left edge. Quantiles work in the
negative-log domain throughout: the CDF exp(-tail(z)) underflows to 0 for
z below about -6.6 while tail(z) itself stays comfortably representable,
so composing quantile with -log(q) loses deep-tail points that
quantile_from_neglog keeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clock import MassFunction
from .errors import BudgetExceeded
from .rng import draw_exponentials

__all__ = [
    "IntensityMeasure",
    "PointSet",
    "generate_points",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def _panel_integrals(f, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Five-point Gauss-Legendre on each [lo[i], hi[i]] (vectorized)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (f(pts) @ _GL_WEIGHTS)


@dataclass
class IntensityMeasure:
    """Start-height intensity rate(x) exp(-x) dx with cached tail table.

    ``x_min`` is the left edge of the table (queries below it fall back to
    per-query quadrature). The right edge is chosen so the bump part of the
    rate contributes less than ``tail_tol`` beyond it, making tail(z) equal
    to exp(-z) there to within the tolerance.
    """

    mass: MassFunction
    x_min: float = -50.0
    knot_step: float = 0.01
    tail_tol: float = 1e-12
    x_max: float = field(init=False)
    _knots: np.ndarray = field(init=False, repr=False)
    _tail_knots: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bump = max(self.mass.alpha_hi - 1.0, 1.0 - self.mass.alpha_lo)
        if bump > 0:
            self.x_max = max(10.0, math.log(bump / self.tail_tol))
        else:
            self.x_max = 30.0
        n_panels = int(math.ceil((self.x_max - self.x_min) / self.knot_step))
        self._knots = np.linspace(self.x_min, self.x_max, n_panels + 1)
        panels = _panel_integrals(self._density, self._knots[:-1], self._knots[1:])
        # accumulate from the right edge so small tails keep relative accuracy
        suffix = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]])
        self._tail_knots = suffix + math.exp(-self.x_max)

    def _density(self, x):
        return self.mass(x) * np.exp(-np.asarray(x, dtype=float))

    @property
    def alpha_lo(self) -> float:
        return self.mass.alpha_lo

    @property
    def alpha_hi(self) -> float:
        return self.mass.alpha_hi

    def tail_integral(self, z):
        """Integral of the intensity over (z, inf). Decreasing, positive."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty_like(z_arr)

        hi = z_arr >= self.x_max
        out[hi] = np.exp(-z_arr[hi])

        lo = z_arr < self.x_min
        if lo.any():
            out[lo] = [self._tail_below(float(v)) for v in z_arr[lo]]

        mid = ~(hi | lo)
        if mid.any():
            zm = z_arr[mid]
            idx = np.searchsorted(self._knots, zm, side="right") - 1
            idx = np.clip(idx, 0, len(self._knots) - 2)
            part = _panel_integrals(self._density, zm, self._knots[idx + 1])
            out[mid] = self._tail_knots[idx + 1] + part

        return out if np.ndim(z) else float(out[0])

    def _tail_below(self, z: float) -> float:
        n = int(math.ceil((self.x_min - z) / self.knot_step))
        edges = np.linspace(z, self.x_min, n + 1)
        panels = _panel_integrals(self._density, edges[:-1], edges[1:])
        return float(self._tail_knots[0] + panels[::-1].sum())

    def marginal_cdf(self, z):
        """P[Z_t <= z] = exp(-tail_integral(z)): the stationary marginal."""
        t = self.tail_integral(z)
        return np.exp(-t) if np.ndim(z) else math.exp(-t)

    def quantile_from_neglog(self, y):
        """Solve tail_integral(x) = y for x, given y = -log(q) > 0.

        Works for y far beyond float CDF resolution (deep left tail).
        """
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(~(y_arr > 0)):
            raise ValueError("neglog quantile needs y > 0")
        if np.any(y_arr > self._tail_knots[0]):
            raise ValueError(
                f"y={np.max(y_arr):g} beyond tabulated tail at x_min={self.x_min:g}"
            )
        out = np.empty_like(y_arr)

        deep = y_arr <= self._tail_knots[-1]
        out[deep] = -np.log(y_arr[deep])

        body = ~deep
        if body.any():
            yb = y_arr[body]
            # tail_knots decrease with x; search the reversed (ascending) view
            rev = self._tail_knots[::-1]
            pos = np.searchsorted(rev, yb, side="left")
            idx = len(self._tail_knots) - 1 - pos
            idx = np.clip(idx, 0, len(self._knots) - 2)
            x0, x1 = self._knots[idx], self._knots[idx + 1]
            t0, t1 = self._tail_knots[idx], self._tail_knots[idx + 1]
            x = x0 + (t0 - yb) / (t0 - t1) * (x1 - x0)
            for _ in range(3):
                f = self._tail_knots[idx + 1] + _panel_integrals(
                    self._density, x, self._knots[idx + 1]
                ) - yb
                x = np.clip(x + f / self._density(x), x0, x1)
            out[body] = x

        return out if np.ndim(y) else float(out[0])

    def quantile(self, q):
        """Inverse of the marginal CDF on (0, 1)."""
        q_arr = np.asarray(q, dtype=float)
        if np.any(q_arr <= 0) or np.any(q_arr >= 1):
            raise ValueError("quantile needs 0 < q < 1")
        return self.quantile_from_neglog(-np.log(q_arr))

    def rescaled(self, n: int) -> "IntensityMeasure":
        """Intensity of the n-fold rescaled system.

        n * rate(x + log n) * exp(-(x + log n)) == rate(x + log n) * exp(-x),
        so the rescaling is exactly a shift of the rate argument.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        return IntensityMeasure(
            self.mass.with_shift(math.log(n)),
            x_min=self.x_min,
            knot_step=self.knot_step,
            tail_tol=self.tail_tol,
        )


@dataclass
class PointSet:
    """Start heights above a floor, in decreasing order.

    ``gammas`` are the unit-exponential cumulative sums the points were
    mapped from (increasing); ``truncation_gamma`` is the tail integral at
    the floor, i.e. the expected point count.
    """

    points: np.ndarray
    gammas: np.ndarray
    floor: float
    truncation_gamma: float

    def __len__(self) -> int:
        return len(self.points)


def generate_points(
    measure: IntensityMeasure,
    floor: float,
    rng: np.random.Generator,
    max_points: int = 1_000_000,
) -> PointSet:
    """All points of one Poisson realization above the floor, largest first.

    Exponential spacings are mapped through the tail-integral inverse in the
    negative-log domain; generation stops at the first point below the floor.
    An empty realization is legitimate output, not an error.
    """
    lam = measure.tail_integral(floor)
    if lam > max_points:
        raise BudgetExceeded(
            f"expected point count {lam:.3g} above floor {floor:g} "
            f"exceeds cap {max_points}"
        )
    # fixed chunk size keeps stream consumption independent of the floor:
    # lowering the floor replays the identical gamma prefix and merely
    # consumes more chunks, so the retained points extend bit-exactly
    gammas = np.empty(0)
    total = 0.0
    while total <= lam:
        fresh = total + np.cumsum(draw_exponentials(rng, 1024))
        gammas = np.concatenate([gammas, fresh])
        total = float(gammas[-1])
    count = int(np.searchsorted(gammas, lam, side="right"))
    if count > max_points:
        raise BudgetExceeded(
            f"realized point count {count} above floor {floor:g} "
            f"exceeds cap {max_points}"
        )
    gammas = gammas[:count]
    points = measure.quantile_from_neglog(gammas) if count else np.empty(0)
    return PointSet(
        points=points, gammas=gammas, floor=float(floor),
        truncation_gamma=float(lam),
    )
