"""Random clock driven by a bounded rate function, and its inverse.

A particle at height x ages at rate ``rate(L_r + x)`` where L is the driving
path. The cumulative clock A_x(t) = integral of that rate is strictly
increasing with slope in [alpha_lo, alpha_hi], so it has a proper inverse
T_x: the time change. The time-changed value at clock time t is
X_t(x) = L_{T_x(t)} + x.

Quadrature: trapezoid on every continuous stretch. On an interval whose right
endpoint is a jump epoch the right-endpoint value is the pre-jump left limit
(stored on the path), which is the trapezoid rule on the closed-open segment
and keeps the scheme second-order away from the (finitely many) jumps.

The inverse is evaluated by piecewise-linear interpolation of the table. The
two-sided bound alpha_lo * t <= A_x(t) <= alpha_hi * t holds exactly for the
interpolant (the bounding cone is convex), so inversion never extrapolates
for targets within the tabulated range and T satisfies
t / alpha_hi <= T_x(t) <= t / alpha_lo exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import HorizonExceeded
from .levy import LevyPath

__all__ = [
    "MassFunction",
    "ClockTable",
    "compute_clock",
    "invert_clock",
    "time_change",
    "clock_by_integral_rep",
]


@dataclass(frozen=True)
class MassFunction:
    """Clock-rate function menu: ``constant`` c, or ``logistic_bump``
    rate(z) = 1 + a / (1 + exp(z)) with a > -1.

    ``shift`` translates the argument (rate(z + shift)); the rescaling
    machinery uses it, configs never set it directly. Bounds are global over
    the shifted family: alpha_lo = min(1, 1+a), alpha_hi = max(1, 1+a).
    ``mda_admissible`` records whether rate(z) -> 1 as z -> +inf, the
    condition the rescaling limit needs; constant c != 1 fails it.
    """

    kind: str
    c: float = 1.0
    a: float = 0.0
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "logistic_bump"):
            raise ValueError(f"unknown mass function kind {self.kind!r}")
        if self.kind == "constant" and self.c <= 0:
            raise ValueError("constant rate must be positive")
        if self.kind == "logistic_bump" and self.a <= -1:
            raise ValueError("logistic bump needs a > -1")

    @property
    def alpha_lo(self) -> float:
        if self.kind == "constant":
            return self.c
        return min(1.0, 1.0 + self.a)

    @property
    def alpha_hi(self) -> float:
        if self.kind == "constant":
            return self.c
        return max(1.0, 1.0 + self.a)

    @property
    def mda_admissible(self) -> bool:
        if self.kind == "constant":
            return self.c == 1.0
        return True

    @property
    def is_unit(self) -> bool:
        """True when the rate is identically 1 (clock is the identity)."""
        return (self.kind == "constant" and self.c == 1.0) or (
            self.kind == "logistic_bump" and self.a == 0.0
        )

    def with_shift(self, extra: float) -> "MassFunction":
        return MassFunction(self.kind, self.c, self.a, self.shift + extra)

    def __call__(self, z):
        if self.kind == "constant":
            return np.full_like(np.asarray(z, dtype=float), self.c) if np.ndim(z) else self.c
        # 1 / (1 + exp(z)) == expit(-z); expit is overflow-safe at both ends
        return 1.0 + self.a * expit(-(np.asarray(z, dtype=float) + self.shift))


@dataclass
class ClockTable:
    """Tabulated cumulative clock of one particle.

    ``a_values[k]`` approximates the integral of the rate along the path up to
    ``times[k]``; strictly increasing from 0.
    """

    times: np.ndarray
    a_values: np.ndarray
    x: float
    alpha_lo: float
    alpha_hi: float
    path: LevyPath = field(repr=False)
    mass: MassFunction = field(repr=False)

    @property
    def horizon(self) -> float:
        """Largest clock time the table can invert."""
        return float(self.a_values[-1])


def compute_clock(path: LevyPath, mass: MassFunction, x: float) -> ClockTable:
    """Tabulate A_x on the path's grid.

    Trapezoid per interval, with the pre-jump left limit as the right-endpoint
    integrand value whenever the interval ends at a jump epoch.
    """
    rate_at_nodes = mass(path.values + x)
    rate_left = rate_at_nodes
    if path.jump_marks.any():
        rate_left = np.where(
            path.jump_marks, mass(path.left_limits() + x), rate_at_nodes
        )
    dt = np.diff(path.times)
    contrib = 0.5 * dt * (rate_at_nodes[:-1] + rate_left[1:])
    a_values = np.concatenate([[0.0], np.cumsum(contrib)])
    return ClockTable(
        times=path.times,
        a_values=a_values,
        x=float(x),
        alpha_lo=mass.alpha_lo,
        alpha_hi=mass.alpha_hi,
        path=path,
        mass=mass,
    )


def invert_clock(table: ClockTable, t):
    """T_x(t): first path time s with A_x(s) >= t, by linear interpolation.

    Raises HorizonExceeded for any t beyond the tabulated range; the table
    never extrapolates.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("clock time must be >= 0")
    if np.any(t_arr > table.a_values[-1]):
        raise HorizonExceeded(
            f"clock time {np.max(t_arr):g} beyond tabulated horizon "
            f"{table.a_values[-1]:g}"
        )
    out = np.interp(t_arr, table.a_values, table.times)
    return float(out) if np.ndim(t) == 0 else out


def _read_path(path: LevyPath, s):
    """Path value at times s, cadlag.

    Exactly at a node the stored (post-jump) value is returned. Between nodes,
    diffusive paths are read by linear interpolation toward the pre-jump left
    limit of the right node; pure-jump paths by the previous node's value.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    idx = np.searchsorted(path.times, s_arr, side="right") - 1
    idx = np.clip(idx, 0, len(path.times) - 2)
    at_node = s_arr == path.times[idx]
    if path.diffusive:
        t0 = path.times[idx]
        t1 = path.times[idx + 1]
        v0 = path.values[idx]
        v1 = path.values[idx + 1] - path.jump_sizes[idx + 1]
        frac = (s_arr - t0) / (t1 - t0)
        vals = v0 + frac * (v1 - v0)
        vals = np.where(at_node, path.values[idx], vals)
    else:
        vals = path.values[idx]
    return vals if np.ndim(s) else float(vals[0])


def time_change(
    path: LevyPath, mass: MassFunction, x: float, eval_times
) -> np.ndarray:
    """Values of the time-changed particle X_t(x) at the given clock times."""
    table = compute_clock(path, mass, x)
    s = invert_clock(table, np.asarray(eval_times, dtype=float))
    return _read_path(path, s) + x


def clock_by_integral_rep(
    path: LevyPath, mass: MassFunction, x: float, t: float
) -> float:
    """Second, independent computation of T_x(t).

    Evaluates the identity T_x(t) = integral over [0, t] of 1 / rate(X_r(x))
    by trapezoid quadrature on a clock-time grid. Grid nodes include the exact
    clock times at which the path jumps (known from the table) so the
    integrand's discontinuities sit on nodes; at such a node the left-limit
    integrand value uses the pre-jump path value.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    table = compute_clock(path, mass, x)
    if t > table.horizon:
        raise HorizonExceeded(f"t={t:g} beyond clock horizon {table.horizon:g}")
    step = path.base_step if path.base_step > 0 else float(np.diff(path.times).min())
    n = max(2, int(math.ceil(t / step)) + 1)
    r = np.linspace(0.0, t, n)

    jump_idx = np.flatnonzero(path.jump_marks)
    jump_clock = table.a_values[jump_idx]
    in_range = (jump_clock > 0.0) & (jump_clock < t)
    jump_clock = jump_clock[in_range]
    jump_idx = jump_idx[in_range]

    r_all = np.concatenate([r, jump_clock])
    src = np.concatenate([np.full(len(r), -1, dtype=int), jump_idx])
    order = np.argsort(r_all, kind="stable")
    r_all, src = r_all[order], src[order]
    keep = np.concatenate([[True], np.diff(r_all) > 0])
    # when a jump clock-time collides with a uniform node, keep the jump tag
    for i in np.flatnonzero(~keep):
        if src[i] >= 0 and src[i - 1] < 0:
            src[i - 1] = src[i]
    r_all, src = r_all[keep], src[keep]

    s = invert_clock(table, r_all)
    x_right = _read_path(path, s) + x
    x_left = x_right.copy()
    is_jump_node = src >= 0
    if is_jump_node.any():
        j = src[is_jump_node]
        x_left[is_jump_node] = path.values[j] - path.jump_sizes[j] + x

    g_right = 1.0 / mass(x_right)
    g_left = 1.0 / mass(x_left)
    dr = np.diff(r_all)
    return float(np.sum(0.5 * dr * (g_right[:-1] + g_left[1:])))
