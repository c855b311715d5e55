"""Particle systems, truncated maxima, and truncation-error certificates.

The process Z_t is the pointwise max over infinitely many particles; only
those starting above a spatial floor are simulated. The certificate that the
omitted particles do not matter comes from the exceedance bound

    P[sup_{s <= t} X_s(x) >= u] <= C_vt * P[L_{t*alpha_hi} >= u - x - v],

integrated over the omitted intensity. The integral is evaluated in closed
form through E[e^{L_T} 1{L_T >= w}] (Gaussian tilting, exact for Brownian
specs; Chernoff over a theta grid otherwise), which equals the proof chain's
explicit integral: int_w^inf P[L >= s] e^s ds <= E[e^L; L >= w].

The C_vt constant is the reciprocal infimum probability. For Brownian specs
it is the exact reflection formula; otherwise Monte Carlo with a one-sided
99% confidence margin plus, when a diffusion part is present, a bridge-dip
allowance delta: the grid infimum overstates the true infimum, so the
frequency of {grid inf >= -v + delta} minus the probability any within-cell
bridge dips below delta is a valid lower bound on P[true inf >= -v].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .clock import MassFunction
from .engine import EngineParams, eval_columns, run_block
from .errors import EmptySystem, TruncationBias, VanishingInfimumProb
from .levy import LevySpec, log_mgf, sample_path
from .clock import time_change
from .ppp import IntensityMeasure, PointSet, generate_points
from .rng import DOMAIN_DYNAMICS, DOMAIN_PILOT, DOMAIN_POINTS, substream

__all__ = [
    "ParticleSystem",
    "MaxIdSample",
    "ExceedanceBound",
    "exceedance_bound",
    "pick_v",
    "omitted_mass_bound",
    "level_rate_bound",
    "truncated_max",
    "sup_exceedance_count",
    "build_particle_system",
    "suggest_floor",
    "pilot_u_ref",
]

_CHERNOFF_THETAS = np.concatenate([[1.0], np.arange(1.25, 6.01, 0.25)])


@dataclass
class ParticleSystem:
    """All simulated particles of one replicate on a shared eval grid."""

    starts: PointSet
    eval_times: np.ndarray
    paths: np.ndarray  # (n_particles, n_eval)
    sups: np.ndarray | None
    floor: float
    spec: LevySpec = field(repr=False)
    mass: MassFunction = field(repr=False)

    def __len__(self) -> int:
        return len(self.starts)


@dataclass
class MaxIdSample:
    """Z on the eval grid for one replicate, with truncation certificate."""

    eval_times: np.ndarray
    z_values: np.ndarray
    floor: float
    error_cert: float
    n_particles: int


@dataclass
class ExceedanceBound:
    """Constants of the pathwise exceedance bound for one (spec, mass, horizon)."""

    v: float
    c_vt: float
    horizon: float
    alpha_hi: float
    inf_prob: float
    exact: bool
    spec: LevySpec = field(repr=False)

    @property
    def levy_horizon(self) -> float:
        return self.horizon * self.alpha_hi


def _bm_infimum_prob(sigma: float, mu: float, big_t: float, v: float) -> float:
    """P[inf_{[0,T]} (mu*s + sigma*B_s) >= -v], exact reflection formula."""
    s = sigma * math.sqrt(big_t)
    a = norm.cdf((v + mu * big_t) / s)
    # exp term can be huge while the sf factor vanishes; combine in log space
    log_b = -2.0 * mu * v / sigma**2 + norm.logsf((v - mu * big_t) / s)
    return float(a - math.exp(min(log_b, 700.0)))


def _exact_path_infimum(path) -> float:
    """True infimum of a pure-jump path: piecewise linear between nodes, so
    the min is attained at a node value or a pre-jump left limit."""
    return float(min(path.values.min(), path.left_limits().min()))


def exceedance_bound(
    spec: LevySpec,
    alpha: MassFunction,
    horizon: float,
    v: float,
    rng: np.random.Generator | None = None,
    n_mc: int = 100_000,
    base_step: float = 0.002,
) -> ExceedanceBound:
    """Estimate C_vt = 1 / P[inf_{[0, horizon*alpha_hi]} L >= -v].

    Exact for degenerate and pure-Brownian specs; Monte Carlo (one-sided 99%
    lower confidence bound, plus a bridge-dip allowance when sigma > 0)
    otherwise. Raises VanishingInfimumProb when the lower bound is <= 0.
    """
    if v <= 0:
        raise ValueError("v must be > 0")
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    big_t = horizon * alpha.alpha_hi

    if spec.sigma == 0 and spec.jump_rate == 0:
        # deterministic path: infimum is min(0, drift * T), so the
        # probability is exactly one or exactly zero
        if min(0.0, spec.drift * big_t) < -v:
            raise VanishingInfimumProb(
                f"deterministic path dips below -v={-v:g}; increase v"
            )
        p_low, exact = 1.0, True
    elif spec.jump_rate == 0:
        p_low, exact = _bm_infimum_prob(spec.sigma, spec.drift, big_t, v), True
    else:
        if rng is None:
            raise ValueError("Monte Carlo C_vt needs an rng")
        exact = False
        delta = 0.0
        slack = 0.0
        if spec.sigma > 0:
            n_cells = math.ceil(big_t / base_step)
            slack = 1e-4
            # P[a zero-pinned bridge over one cell dips below -delta]
            # is exp(-2 delta^2 / (sigma^2 h)); union over cells <= slack
            delta = spec.sigma * math.sqrt(0.5 * base_step * math.log(n_cells / slack))
        hits = 0
        for _ in range(n_mc):
            path = sample_path(spec, big_t, base_step, rng)
            inf_val = (
                path.values.min() if spec.sigma > 0 else _exact_path_infimum(path)
            )
            hits += inf_val >= -v + delta
        p_hat = hits / n_mc
        p_low = p_hat - 2.326 * math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / n_mc) - slack

    if p_low <= 0:
        raise VanishingInfimumProb(
            f"infimum probability lower bound {p_low:.3g} at v={v:g}; increase v"
        )
    return ExceedanceBound(
        v=float(v), c_vt=1.0 / p_low, horizon=float(horizon),
        alpha_hi=alpha.alpha_hi, inf_prob=p_low, exact=exact, spec=spec,
    )


def pick_v(
    spec: LevySpec,
    alpha: MassFunction,
    horizon: float,
    rng: np.random.Generator | None = None,
    n_mc: int = 20_000,
) -> ExceedanceBound:
    """Smallest v in {1, 2, 4, 8} with infimum probability >= 0.2."""
    last_err = None
    for v in (1.0, 2.0, 4.0, 8.0):
        try:
            cand = exceedance_bound(spec, alpha, horizon, v, rng=rng, n_mc=n_mc)
        except VanishingInfimumProb as err:
            last_err = err
            continue
        if cand.inf_prob >= 0.2:
            return cand
        last_err = VanishingInfimumProb(
            f"infimum probability {cand.inf_prob:.3g} < 0.2 at v={v:g}"
        )
    raise last_err if last_err is not None else VanishingInfimumProb("no admissible v")


def _exp_tail_bound(spec: LevySpec, big_t: float, w: float) -> float:
    """Upper bound on E[e^{L_T} 1{L_T >= w}].

    Exact Gaussian tilt for Brownian and degenerate specs; otherwise the
    Chernoff family e^{-(theta-1) w + T psi(theta)} over theta >= 1, whose
    theta = 1 member E[e^{L_T}] recovers the floor-free limit.
    """
    if spec.sigma == 0 and spec.jump_rate == 0:
        growth = math.exp(big_t * log_mgf(spec, 1.0))
        return growth if w <= 0 else (growth if spec.drift * big_t >= w else 0.0)
    if spec.jump_rate == 0:
        s = spec.sigma * math.sqrt(big_t)
        log_tilt = big_t * log_mgf(spec, 1.0) + norm.logsf(
            (w - (spec.drift + spec.sigma**2) * big_t) / s
        )
        return math.exp(min(log_tilt, 700.0))
    exponents = [
        -(theta - 1.0) * w + big_t * log_mgf(spec, float(theta))
        for theta in _CHERNOFF_THETAS
    ]
    return math.exp(min(min(exponents), 700.0))


def omitted_mass_bound(bound: ExceedanceBound, floor: float, u: float) -> float:
    """Probability bound that any omitted particle (start < floor) reaches u.

    1 - exp(-lam) with lam = alpha_hi * C_vt * e^{v-u} * E[e^{L_T}; L_T >= w],
    w = u - v - floor; vacuous (1.0) unless u - floor > v. Decreasing in u
    and in -floor; clamped to [0, 1] by construction.
    """
    if u - floor <= bound.v:
        return 1.0
    w = u - bound.v - floor
    lam = (
        bound.alpha_hi
        * bound.c_vt
        * math.exp(bound.v - u)
        * _exp_tail_bound(bound.spec, bound.levy_horizon, w)
    )
    return -math.expm1(-lam)


def level_rate_bound(bound: ExceedanceBound, u: float, floor: float | None = None) -> float:
    """Analytic bound on the rate of particles whose running sup reaches u.

    alpha_hi * (C_vt e^{v-u} (1 - e^{-(u-v-floor)}) + e^{-(u-v)}); the floor
    factor is 1 when floor is None (all starts). Requires u - v > floor.
    """
    if u <= bound.v + (floor if floor is not None else -math.inf):
        raise ValueError("need u - v > floor for the rate bound")
    trunc = 1.0 if floor is None else -math.expm1(-(u - bound.v - floor))
    return bound.alpha_hi * (
        bound.c_vt * math.exp(bound.v - u) * trunc + math.exp(-(u - bound.v))
    )


def truncated_max(system: ParticleSystem, bound: ExceedanceBound) -> MaxIdSample:
    """Pointwise max over the included particles, with its certificate."""
    if len(system) == 0:
        raise EmptySystem(
            f"no particles above floor {system.floor:g}; lower the floor"
        )
    z = system.paths.max(axis=0)
    u_ref = float(z.min())
    cert = omitted_mass_bound(bound, system.floor, u_ref)
    return MaxIdSample(
        eval_times=system.eval_times,
        z_values=z,
        floor=system.floor,
        error_cert=cert,
        n_particles=len(system),
    )


def sup_exceedance_count(
    system: ParticleSystem, u: float, bound: ExceedanceBound | None = None
) -> int:
    """Number of particles whose running supremum reaches u.

    Uses tracked cell-boundary suprema when available (falling back to the
    eval grid otherwise). When a bound is supplied, the truncation margin
    omitted_mass_bound(floor, u) must be below 1e-3, else TruncationBias.
    """
    if bound is not None:
        margin = omitted_mass_bound(bound, system.floor, u)
        if margin >= 1e-3:
            raise TruncationBias(
                f"omitted-mass bound {margin:.3g} at u={u:g} exceeds 1e-3; "
                "lower the floor"
            )
    if len(system) == 0:
        return 0
    sups = system.sups if system.sups is not None else system.paths.max(axis=1)
    return int(np.count_nonzero(sups >= u))


def build_particle_system(
    spec: LevySpec,
    mass: MassFunction,
    measure: IntensityMeasure,
    eval_times,
    floor: float,
    seed: int,
    replicate: int,
    *,
    params: EngineParams | None = None,
    engine: str = "fast",
    track_sup: bool = False,
    max_points: int = 1_000_000,
    base_step: float = 0.005,
) -> ParticleSystem:
    """One replicate: PPP starts above the floor, then every particle's path.

    engine="fast" advances particles in fixed-size blocks on the clock grid;
    engine="reference" runs the exact-jump per-particle pipeline (sampled
    Levy path, tabulated clock, inverted time change) and exists to validate
    the fast one. Substreams: points keyed (replicate,), dynamics keyed
    (replicate, block) or (replicate, particle).
    """
    params = params or EngineParams()
    eval_arr = np.asarray(eval_times, dtype=float)
    pts = generate_points(
        measure, floor, substream(seed, DOMAIN_POINTS, replicate), max_points
    )
    n = len(pts)
    if engine == "fast":
        eval_cols, n_cols = eval_columns(eval_arr, params.dt)
        paths = np.empty((n, len(eval_arr)))
        sups = np.empty(n) if track_sup else None
        bs = params.block_size
        for blk in range(max(1, math.ceil(n / bs)) if n else 0):
            lo, hi = blk * bs, min((blk + 1) * bs, n)
            starts = np.zeros(bs)
            starts[: hi - lo] = pts.points[lo:hi]
            ev, sp = run_block(
                spec, mass, starts, eval_cols, n_cols,
                substream(seed, DOMAIN_DYNAMICS, replicate, blk),
                dt=params.dt, track_sup=track_sup,
            )
            paths[lo:hi] = ev[: hi - lo]
            if track_sup:
                sups[lo:hi] = sp[: hi - lo]
    elif engine == "reference":
        horizon_levy = eval_arr[-1] / mass.alpha_lo * (1 + 1e-9) + base_step
        paths = np.empty((n, len(eval_arr)))
        for i in range(n):
            rng = substream(seed, DOMAIN_DYNAMICS, replicate, i)
            path = sample_path(spec, horizon_levy, base_step, rng)
            paths[i] = time_change(path, mass, float(pts.points[i]), eval_arr)
        sups = paths.max(axis=1) if track_sup else None
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return ParticleSystem(
        starts=pts, eval_times=eval_arr, paths=paths, sups=sups,
        floor=float(floor), spec=spec, mass=mass,
    )


def suggest_floor(
    bound: ExceedanceBound,
    u_ref: float,
    target: float = 1e-3,
    grid: float = 0.25,
    floor_min: float = -40.0,
) -> float:
    """Largest floor on the grid with omitted_mass_bound below the target."""
    floor = grid * math.floor((u_ref - bound.v) / grid) - grid
    while floor >= floor_min:
        if omitted_mass_bound(bound, floor, u_ref) < target:
            return floor
        floor -= grid
    raise TruncationBias(
        f"no floor above {floor_min:g} certifies omitted mass < {target:g}"
    )


def pilot_u_ref(
    spec: LevySpec,
    mass: MassFunction,
    measure: IntensityMeasure,
    eval_times,
    seed: int,
    *,
    n_pilot: int = 256,
    pilot_floor: float = -6.0,
    params: EngineParams | None = None,
) -> float:
    """0.1% quantile of pooled pilot Z values: the reference level for the
    floor search. Pilot replicates use their own stream domain so they never
    touch the main run's draws."""
    params = params or EngineParams()
    eval_arr = np.asarray(eval_times, dtype=float)
    eval_cols, n_cols = eval_columns(eval_arr, params.dt)
    pooled = []
    for rep in range(n_pilot):
        pts = generate_points(
            measure, pilot_floor, substream(seed, DOMAIN_PILOT, rep, 0)
        )
        if len(pts) == 0:
            continue
        bs = params.block_size
        z = np.full(len(eval_arr), -np.inf)
        for blk in range(math.ceil(len(pts) / bs)):
            lo, hi = blk * bs, min((blk + 1) * bs, len(pts))
            starts = np.zeros(bs)
            starts[: hi - lo] = pts.points[lo:hi]
            ev, _ = run_block(
                spec, mass, starts, eval_cols, n_cols,
                substream(seed, DOMAIN_PILOT, rep, 1 + blk), dt=params.dt,
            )
            z = np.maximum(z, ev[: hi - lo].max(axis=0))
        pooled.append(z)
    if not pooled:
        raise EmptySystem("pilot produced no particles; lower pilot_floor")
    return float(np.quantile(np.concatenate(pooled), 0.001))
