"""Levy process menu with martingale normalization.

A process spec combines a Brownian component (volatility sigma), compound
Poisson jumps (rate, jump-size distribution), and a drift chosen so that
exp(L_t) is a mean-one martingale: drift = -sigma^2/2 - rate*(E[exp(J)] - 1).
That normalization is what makes the particle construction downstream
stationary, so the drift is always computed, never user-supplied; tests that
need a deliberately broken process use the explicit ``with_drift`` constructor.

Paths are sampled exactly on a grid: Gaussian increments have no
discretization error, and jump epochs are inserted into the grid so every
discontinuity sits exactly on a node (post-jump value stored, left limit
recoverable as value minus jump size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateModel, NonIntegrableJumps

__all__ = [
    "JumpDist",
    "LevySpec",
    "LevyPath",
    "make_levy_spec",
    "sample_path",
    "exp_moment",
    "log_mgf",
    "coarsen_path",
]


@dataclass(frozen=True)
class JumpDist:
    """Jump-size distribution: one of ``constant``, ``normal``, ``two_point``.

    Parameters are interpreted per kind:
      constant: value
      normal: mean, var
      two_point: hi, lo, p_hi  (P[J = hi] = p_hi, P[J = lo] = 1 - p_hi)
    """

    kind: str
    value: float = 0.0
    mean: float = 0.0
    var: float = 1.0
    hi: float = 0.0
    lo: float = 0.0
    p_hi: float = 0.5

    def __post_init__(self):
        if self.kind not in ("constant", "normal", "two_point"):
            raise ValueError(f"unknown jump kind {self.kind!r}")
        params = (self.value, self.mean, self.var, self.hi, self.lo, self.p_hi)
        if not all(math.isfinite(p) for p in params):
            raise NonIntegrableJumps(f"non-finite jump parameter in {self!r}")
        if self.kind == "normal" and self.var < 0:
            raise ValueError("normal jump variance must be >= 0")
        if self.kind == "two_point" and not 0.0 <= self.p_hi <= 1.0:
            raise ValueError("two_point probability must lie in [0, 1]")

    def exp_moment(self, theta: float = 1.0) -> float:
        """E[exp(theta * J)], closed form for every kind in the menu."""
        if self.kind == "constant":
            return math.exp(theta * self.value)
        if self.kind == "normal":
            return math.exp(theta * self.mean + 0.5 * theta * theta * self.var)
        return self.p_hi * math.exp(theta * self.hi) + (1.0 - self.p_hi) * math.exp(
            theta * self.lo
        )

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, self.value)
        if self.kind == "normal":
            return self.mean + math.sqrt(self.var) * rng.standard_normal(n)
        return np.where(rng.random(n) < self.p_hi, self.hi, self.lo)

    def sum_of(self, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Vector of sums of ``counts[i]`` i.i.d. jumps, one fixed-size draw
        per entry (exact: stable sums have closed forms per kind)."""
        counts = np.asarray(counts)
        if self.kind == "constant":
            return self.value * counts
        if self.kind == "normal":
            # sum of k normals is N(k*mean, k*var); one gaussian per entry
            z = rng.standard_normal(counts.shape)
            return self.mean * counts + np.sqrt(self.var * counts) * z
        # two_point: number of hi-jumps among counts[i] is binomial
        n_hi = rng.binomial(counts.astype(np.int64), self.p_hi)
        return self.hi * n_hi + self.lo * (counts - n_hi)


@dataclass(frozen=True)
class LevySpec:
    """Immutable description of the driving process.

    ``drift`` always holds the actual drift of the process; ``normalized``
    records whether it equals the martingale-normalizing value.
    """

    sigma: float
    jump_rate: float
    jump_dist: JumpDist | None
    drift: float
    normalized: bool = True
    allow_degenerate: bool = False

    @staticmethod
    def constant_zero() -> "LevySpec":
        """Deterministic zero process; test-only escape hatch."""
        return LevySpec(0.0, 0.0, None, 0.0, normalized=True, allow_degenerate=True)

    @staticmethod
    def with_drift(
        sigma: float, jump_rate: float, jump_dist: JumpDist | None, drift: float
    ) -> "LevySpec":
        """Explicit-drift constructor for invariance-breaking controls."""
        mart = _martingale_drift(sigma, jump_rate, jump_dist)
        return LevySpec(
            float(sigma),
            float(jump_rate),
            jump_dist,
            float(drift),
            normalized=(drift == mart),
            allow_degenerate=True,
        )


def _martingale_drift(sigma: float, jump_rate: float, jump_dist: JumpDist | None) -> float:
    jump_part = jump_rate * (jump_dist.exp_moment(1.0) - 1.0) if jump_rate > 0 else 0.0
    return -0.5 * sigma * sigma - jump_part


def make_levy_spec(
    sigma: float = 0.0,
    jump_rate: float = 0.0,
    jump_dist: JumpDist | None = None,
) -> LevySpec:
    """Build a martingale-normalized spec from the model menu.

    Raises
    ------
    DegenerateModel
        If both the diffusion and the jump component vanish.
    """
    sigma = float(sigma)
    jump_rate = float(jump_rate)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if jump_rate < 0:
        raise ValueError("jump_rate must be >= 0")
    if jump_rate > 0 and jump_dist is None:
        raise ValueError("jump_rate > 0 requires a jump distribution")
    if sigma == 0 and jump_rate == 0:
        raise DegenerateModel(
            "zero process: use LevySpec.constant_zero() if this is intentional"
        )
    if jump_rate == 0:
        jump_dist = None
    drift = _martingale_drift(sigma, jump_rate, jump_dist)
    if not math.isfinite(drift):
        raise NonIntegrableJumps("exponential jump moment is not finite")
    return LevySpec(sigma, jump_rate, jump_dist, drift, normalized=True)


def log_mgf(spec: LevySpec, theta: float) -> float:
    """log E[exp(theta * L_1)] in closed form; 0 at theta = 1 when normalized."""
    jump_part = (
        spec.jump_rate * (spec.jump_dist.exp_moment(theta) - 1.0)
        if spec.jump_rate > 0
        else 0.0
    )
    return 0.5 * spec.sigma**2 * theta**2 + spec.drift * theta + jump_part


def exp_moment(spec: LevySpec, t: float) -> float:
    """E[exp(L_t)]. Exactly 1.0 for normalized specs (analytic identity)."""
    if spec.normalized:
        return 1.0
    return math.exp(t * log_mgf(spec, 1.0))


@dataclass
class LevyPath:
    """One sampled path on [0, horizon].

    ``times`` is strictly increasing with times[0] = 0 and values[0] = 0.
    ``jump_marks[k]`` flags nodes where the path is discontinuous;
    ``values[k]`` is the post-jump (right-continuous) value there and
    ``values[k] - jump_sizes[k]`` the left limit.
    """

    times: np.ndarray
    values: np.ndarray
    jump_marks: np.ndarray
    jump_sizes: np.ndarray
    base_step: float = field(default=0.0)
    diffusive: bool = field(default=True)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.values) == len(self.jump_marks) == len(self.jump_sizes) == n):
            raise ValueError("path arrays must share one length")
        if n < 2:
            raise ValueError("path needs at least two nodes")
        if self.times[0] != 0.0 or self.values[0] != 0.0:
            raise ValueError("path must start at (0, 0)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def left_limits(self) -> np.ndarray:
        """Pre-jump value at every node (equals the value off jump nodes)."""
        return self.values - self.jump_sizes


def sample_path(
    spec: LevySpec,
    horizon: float,
    base_step: float,
    rng: np.random.Generator,
) -> LevyPath:
    """Sample one path exactly on the union of the uniform grid and the jump
    epochs.

    Gaussian increments are exact over each grid interval; compound-Poisson
    epochs are drawn on [0, horizon] (count Poisson, epochs order-statistics
    uniform) and inserted as grid nodes, so no jump falls between nodes.
    Draw order is fixed: jump count, epochs, sizes, then Gaussian increments.
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if base_step <= 0:
        raise ValueError("base_step must be > 0")
    grid = np.arange(0.0, horizon, base_step)
    grid = np.append(grid, horizon)

    if spec.jump_rate > 0:
        n_jumps = int(rng.poisson(spec.jump_rate * horizon))
        epochs = np.sort(rng.random(n_jumps)) * horizon
        sizes = spec.jump_dist.sample(rng, n_jumps)
    else:
        epochs = np.empty(0)
        sizes = np.empty(0)

    times = np.concatenate([grid, epochs])
    marks = np.concatenate(
        [np.zeros(len(grid), dtype=bool), np.ones(len(epochs), dtype=bool)]
    )
    jump_sizes = np.concatenate([np.zeros(len(grid)), sizes])
    order = np.argsort(times, kind="stable")
    times, marks, jump_sizes = times[order], marks[order], jump_sizes[order]

    # Merge exact collisions (jump epoch landing on a grid node); measure-zero
    # event but keeps the strict-monotonicity contract robust.
    dup = np.flatnonzero(np.diff(times) == 0.0)
    if dup.size:
        keep = np.ones(len(times), dtype=bool)
        for i in dup:
            keep[i] = False
            marks[i + 1] = marks[i] | marks[i + 1]
            jump_sizes[i + 1] += jump_sizes[i]
        times, marks, jump_sizes = times[keep], marks[keep], jump_sizes[keep]

    dt = np.diff(times)
    incr = spec.drift * dt
    if spec.sigma > 0:
        incr = incr + spec.sigma * np.sqrt(dt) * rng.standard_normal(len(dt))
    incr = incr + jump_sizes[1:]
    values = np.concatenate([[0.0], np.cumsum(incr)])
    return LevyPath(
        times, values, marks, jump_sizes,
        base_step=base_step, diffusive=spec.sigma > 0,
    )


def coarsen_path(path: LevyPath) -> LevyPath:
    """Drop every other non-jump node, keeping endpoints and all jump epochs.

    Subsampling one sampled path doubles the effective base step without
    resampling, which is how grid-refinement consistency is measured: both
    resolutions see the same underlying trajectory.
    """
    n = len(path.times)
    keep = np.zeros(n, dtype=bool)
    nonjump = np.flatnonzero(~path.jump_marks)
    keep[nonjump[::2]] = True
    keep[path.jump_marks] = True
    keep[0] = keep[-1] = True
    return LevyPath(
        path.times[keep],
        path.values[keep],
        path.jump_marks[keep],
        path.jump_sizes[keep],
        base_step=2 * path.base_step,
        diffusive=path.diffusive,
    )
