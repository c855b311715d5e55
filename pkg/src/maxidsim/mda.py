"""Rescaled processes zeta_n and their limiting regime.

zeta_n(t) = max_{i <= n} Z_i(t) - log n over iid copies of Z. Superposing
the n point processes and absorbing the shift into the start coordinate
cancels n exactly: the rescaled system is the ordinary construction driven
by the shifted mass function alpha(. + log n) under intensity
alpha(x + log n) e^{-x} dx. That identity gives two independent sampling
routes (literal max over copies vs single shifted system) and makes the
n -> infinity limit the unit-mass process, which is also the exact fixed
point when alpha is already constant 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clock import MassFunction, time_change
from .engine import EngineParams
from .errors import GridMismatch
from .levy import LevySpec, sample_path
from .maxid import ExceedanceBound, MaxIdSample, build_particle_system, truncated_max
from .ppp import IntensityMeasure

__all__ = [
    "RescaledSample",
    "ReferenceSample",
    "zeta_n",
    "rescaled_intensity",
    "make_rescaled_model",
    "sample_zeta_n",
    "rescaled_process_sample",
    "reference_sample",
]


@dataclass
class RescaledSample:
    """zeta_n on a time grid for one replicate."""

    n: int
    eval_times: np.ndarray
    z_values: np.ndarray
    error_cert: float


@dataclass
class ReferenceSample:
    """The limiting process zeta_L on a time grid for one replicate."""

    eval_times: np.ndarray
    z_values: np.ndarray
    error_cert: float


def zeta_n(copies: list[MaxIdSample]) -> RescaledSample:
    """Literal rescaling: pointwise max over the copies minus log(len(copies)).

    All copies must share the eval grid (GridMismatch otherwise). The
    truncation certificate composes as 1 - (1 - max_i cert_i)^n: the rescaled
    values are exact unless at least one copy is affected.
    """
    if not copies:
        raise ValueError("zeta_n needs at least one copy")
    n = len(copies)
    grid = copies[0].eval_times
    for c in copies[1:]:
        if c.eval_times.shape != grid.shape or not np.array_equal(c.eval_times, grid):
            raise GridMismatch("copies evaluated on different time grids")
    stacked = np.stack([c.z_values for c in copies])
    worst = max(c.error_cert for c in copies)
    cert = -math.expm1(n * math.log1p(-min(worst, 1.0))) if worst < 1.0 else 1.0
    return RescaledSample(
        n=n, eval_times=grid.copy(),
        z_values=stacked.max(axis=0) - math.log(n),
        error_cert=cert,
    )


def rescaled_intensity(alpha: MassFunction, n: int, x) -> np.ndarray:
    """Density of the rescaled start measure at x: alpha(x + log n) e^{-x}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.asarray(x, dtype=float)
    return alpha(xs + math.log(n)) * np.exp(-xs)


def make_rescaled_model(
    mass: MassFunction, measure: IntensityMeasure, n: int
) -> tuple[MassFunction, IntensityMeasure]:
    """Shifted mass function and start measure driving zeta_n as one system."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return mass, measure
    return mass.with_shift(math.log(n)), measure.rescaled(n)


def sample_zeta_n(
    spec: LevySpec,
    mass_n: MassFunction,
    measure_n: IntensityMeasure,
    bound_n: ExceedanceBound,
    eval_times,
    floor: float,
    seed: int,
    replicate: int,
    n: int,
    *,
    params: EngineParams | None = None,
    engine: str = "fast",
    max_points: int = 1_000_000,
) -> RescaledSample:
    """One replicate of zeta_n through the shifted-system route.

    Substream keys involve only (seed, replicate, block), never n, so
    replicates are common-random-number coupled across the whole n ladder:
    the gamma stream and the driving noise are shared, and only the mass
    function and quantile map differ.
    """
    system = build_particle_system(
        spec, mass_n, measure_n, eval_times, floor, seed, replicate,
        params=params, engine=engine, max_points=max_points,
    )
    samp = truncated_max(system, bound_n)
    return RescaledSample(
        n=n, eval_times=samp.eval_times, z_values=samp.z_values,
        error_cert=samp.error_cert,
    )


def reference_sample(
    spec: LevySpec,
    bound: ExceedanceBound,
    eval_times,
    floor: float,
    seed: int,
    replicate: int,
    *,
    params: EngineParams | None = None,
    engine: str = "fast",
    max_points: int = 1_000_000,
) -> ReferenceSample:
    """One replicate of the limit zeta_L: the unit-mass system, whose clock
    is the identity (the engine takes its exact constant-rate route)."""
    unit = MassFunction(kind="constant", c=1.0)
    system = build_particle_system(
        spec, unit, IntensityMeasure(unit), eval_times, floor, seed,
        replicate, params=params, engine=engine, max_points=max_points,
    )
    samp = truncated_max(system, bound)
    return ReferenceSample(
        eval_times=samp.eval_times, z_values=samp.z_values,
        error_cert=samp.error_cert,
    )


def rescaled_process_sample(
    spec: LevySpec,
    alpha: MassFunction,
    n: int,
    x: float,
    eval_times,
    rng: np.random.Generator,
    *,
    base_step: float = 0.005,
) -> np.ndarray:
    """One path of the rescaled particle X^n_t(x) = X_t(x + log n) - log n.

    Convergence diagnostic only: as n grows the shifted start sees mass
    values near the constant limit, so X^n approaches the driving path in
    law. Exact identity (all n) when alpha is constant 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    et = np.asarray(eval_times, dtype=float)
    if et.size == 0 or np.any(et < 0):
        raise ValueError("eval_times must be nonnegative")
    shift = math.log(n)
    # A_y(s) >= alpha_lo * s, so this path horizon always covers the grid
    horizon = float(et.max()) / alpha.alpha_lo * (1 + 1e-9) + base_step
    path = sample_path(spec, horizon, base_step, rng)
    return time_change(path, alpha, x + shift, et) - shift
