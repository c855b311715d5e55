"""Named verification suites: each one reproduces a distributional law of
the model at desk scale and reports pass/fail rows.

Conventions
-----------
Every row carries an expectation:
  pass     the test must NOT reject; gated through Holm within the suite
  reject   a power/control row that MUST reject at the raw level
  bound    a deterministic or Monte Carlo inequality that must hold
  monotone an ordering that must hold
  info     reported, never gated

Replicate-key layout: banks never share (domain, replicate) keys within a
suite unless the sharing is deliberate (the rescaled-process ladder reuses
replicate keys across n on purpose: common random numbers make the energy
statistic's decrease in n essentially noise-free). Pilot and internal Monte
Carlo draws live in their own stream domains.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .clock import MassFunction, compute_clock, clock_by_integral_rep, invert_clock
from .engine import EngineParams, eval_columns, run_block
from .errors import EmptySystem
from .levy import JumpDist, LevySpec, coarsen_path, make_levy_spec, sample_path
from .maxid import (
    build_particle_system,
    exceedance_bound,
    level_rate_bound,
    omitted_mass_bound,
)
from .ppp import IntensityMeasure
from .rng import DOMAIN_STATS, DOMAIN_TEST, substream
from .stats import (
    energy_permutation_test,
    ks_one_sample,
    holm,
    poisson_dispersion_test,
)

__all__ = ["SuiteRow", "run_suite", "SUITE_DEFAULT_N", "suite_passed"]

_DT = 0.025
_BLOCK = 4096
_CHUNK = 256
_PERMS = 1000
_FDD_TIMES = (0.2, 0.5, 1.0, 2.0)
_LADDER = (1, 10, 100, 1000)
_COPY_BASE = 2**20  # replicate keys for literal max-of-copies banks

SUITE_DEFAULT_N = {
    "marginal": 10_000,
    "stationarity": 5_000,
    "poisson-counts": 10_000,
    "clock-identity": 1_000,
    "exceedance-bound": 100_000,
    "mda": 5_000,
}


@dataclass
class SuiteRow:
    suite: str
    name: str
    method: str
    statistic: float
    p_value: float
    expectation: str
    passed: bool
    p_adjusted: float = math.nan
    n_a: int = 0
    n_b: int = 0
    details: str = ""


def suite_passed(rows: list[SuiteRow]) -> bool:
    return all(r.passed for r in rows)


def _finalize(rows: list[SuiteRow], significance: float) -> list[SuiteRow]:
    """Holm-adjust the expect-pass family; decide power rows at raw level."""
    family = [i for i, r in enumerate(rows)
              if r.expectation == "pass" and math.isfinite(r.p_value)]
    if family:
        adjusted, rejected = holm([rows[i].p_value for i in family], significance)
        for j, i in enumerate(family):
            rows[i].p_adjusted = float(adjusted[j])
            rows[i].passed = not bool(rejected[j])
    for r in rows:
        if r.expectation == "reject" and math.isfinite(r.p_value):
            r.passed = r.p_value <= significance
    return rows


# ---------------------------------------------------------------------------
# bank workers (top-level so process pools can pickle them)

def _bank_chunk(payload: dict, span: tuple[int, int]) -> np.ndarray:
    """One chunk of replicate rows for a bank.

    modes: "z" rows of Z at the eval times; "count" sup-exceedance counts;
    "runmax" per-replicate running max; "zeta_literal" max of n independent
    copies minus log n. Literal copies are floored at floor + log n: copy
    particles below that cannot touch the rescaled ensemble above `floor`,
    so the max is exactly the superposed system truncated at `floor`.
    """
    lo, hi = span
    mode = payload["mode"]
    params = EngineParams(dt=payload["dt"], block_size=payload["block_size"])
    eval_times = np.asarray(payload["eval_times"], dtype=float)
    kw = dict(
        params=params,
        track_sup=payload.get("track_sup", False),
        max_points=payload.get("max_points", 1_000_000),
    )
    common = (payload["spec"], payload["mass"], payload["measure"],
              eval_times, payload["floor"], payload["seed"])
    rep_base = payload["rep_base"]

    if mode == "zeta_literal":
        n_copies = payload["n_copies"]
        log_n = math.log(n_copies)
        copy_args = common[:4] + (payload["floor"] + log_n, payload["seed"])
        out = np.empty((hi - lo, eval_times.size))
        for r in range(lo, hi):
            acc = np.full(eval_times.size, -np.inf)
            for i in range(n_copies):
                system = build_particle_system(
                    *copy_args, _COPY_BASE + r * 1024 + i, **kw
                )
                if len(system):
                    np.maximum(acc, system.paths.max(axis=0), out=acc)
            out[r - lo] = acc - log_n
        return out

    if mode == "count":
        u = payload["u"]
        out = np.empty(hi - lo, dtype=np.int64)
        for r in range(lo, hi):
            system = build_particle_system(*common, rep_base + r, **kw)
            sups = system.sups if len(system) else np.empty(0)
            out[r - lo] = np.count_nonzero(sups >= u)
        return out

    if mode == "runmax":
        out = np.empty(hi - lo)
        for r in range(lo, hi):
            system = build_particle_system(*common, rep_base + r, **kw)
            if len(system) == 0:
                raise EmptySystem("pilot replicate produced no particles")
            out[r - lo] = float(system.sups.max())
        return out

    out = np.empty((hi - lo, eval_times.size))
    for r in range(lo, hi):
        system = build_particle_system(*common, rep_base + r, **kw)
        if len(system) == 0:
            raise EmptySystem(
                f"replicate {rep_base + r} has no particles above "
                f"floor {payload['floor']:g}"
            )
        out[r - lo] = system.paths.max(axis=0)
    return out


def _run_bank(payload: dict, n_reps: int, parallelism: int) -> np.ndarray:
    """Assemble a bank from fixed chunks; the chunk split never depends on
    the worker count, so results are bit-identical at any parallelism."""
    spans = [(lo, min(lo + _CHUNK, n_reps)) for lo in range(0, n_reps, _CHUNK)]
    if parallelism <= 1 or len(spans) == 1:
        parts = [_bank_chunk(payload, s) for s in spans]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            parts = list(pool.map(partial(_bank_chunk, payload), spans))
    return np.concatenate(parts)


def _payload(spec, mass, measure, eval_times, floor, seed, rep_base, **extra):
    out = {
        "mode": "z", "spec": spec, "mass": mass, "measure": measure,
        "eval_times": tuple(eval_times), "floor": floor, "seed": seed,
        "rep_base": rep_base, "dt": _DT, "block_size": _BLOCK,
    }
    out.update(extra)
    return out


def _bm_spec() -> LevySpec:
    return make_levy_spec(sigma=1.0)


def _cp_spec() -> LevySpec:
    # bounded jumps: overshoot past the truncation floor decays
    # geometrically, so the suite floors certify; Gaussian jumps would need
    # floors near -25 to hold the marginal law at the longest eval time
    return make_levy_spec(
        sigma=0.0, jump_rate=1.0,
        jump_dist=JumpDist(kind="two_point", lo=-1.0, hi=0.6, p_hi=0.6),
    )


# ---------------------------------------------------------------------------
# suites

def run_marginal(seed: int, *, n: int | None = None,
                 significance: float = 0.01, parallelism: int = 1):
    """One-sample KS of Z_t against the analytic marginal CDF.

    The unit-mass Brownian configuration is compared to the literal Gumbel
    CDF exp(-e^{-z}); each perturbed configuration to exp(-tail_integral(z))
    of its own start measure. Floors are set so the truncation bias is at
    least an order of magnitude below KS resolution at this n (ledgered per
    configuration: the slowest-certifying case is the negative bump with
    Brownian driving, hence its deeper floor).
    """
    n = n or SUITE_DEFAULT_N["marginal"]
    bm, cp = _bm_spec(), _cp_spec()
    unit = MassFunction(kind="constant", c=1.0)
    bumps = {
        "a1": MassFunction(kind="logistic_bump", a=1.0),
        "a-0.5": MassFunction(kind="logistic_bump", a=-0.5),
    }
    configs = [
        ("gumbel-alpha1-bm", bm, unit, -9.0, 0, (0.0, 0.5, 1.0, 2.0), "gumbel"),
        ("logistic-a1-bm", bm, bumps["a1"], -8.0, 10_000, (0.5, 1.0, 2.0), "tail"),
        ("logistic-a-0.5-bm", bm, bumps["a-0.5"], -9.0, 20_000, (0.5, 1.0, 2.0), "tail"),
        ("logistic-a1-cp", cp, bumps["a1"], -7.0, 30_000, (0.5, 1.0, 2.0), "tail"),
        ("logistic-a-0.5-cp", cp, bumps["a-0.5"], -7.0, 40_000, (0.5, 1.0, 2.0), "tail"),
    ]
    rows = []
    for tag, spec, mass, floor, rep_base, times, law in configs:
        measure = IntensityMeasure(mass)
        bank = _run_bank(
            _payload(spec, mass, measure, times, floor, seed, rep_base,
                     block_size=8192),
            n, parallelism,
        )
        if law == "gumbel":
            cdf = lambda z: np.exp(-np.exp(-z))  # noqa: E731
        else:
            cdf = measure.marginal_cdf
        for j, t in enumerate(times):
            rep = ks_one_sample(bank[:, j], cdf, name=f"{tag}-t{t:g}")
            rows.append(SuiteRow(
                suite="marginal", name=rep.name, method=rep.method,
                statistic=rep.statistic, p_value=rep.p_value,
                expectation="pass", passed=True, n_a=rep.n_a,
            ))
    return _finalize(rows, significance)


def run_stationarity(seed: int, *, n: int | None = None,
                     significance: float = 0.01, parallelism: int = 1):
    """Energy permutation test between f.d.d. vectors and their lagged
    versions; the invariant model must look identical, the drift-0 control
    must not. Lagged banks use disjoint replicate keys, so the two groups
    entering each test are independent."""
    n = n or SUITE_DEFAULT_N["stationarity"]
    spec = _bm_spec()
    control = LevySpec.with_drift(1.0, 0.0, None, 0.0)
    mass = MassFunction(kind="logistic_bump", a=1.0)
    measure = IntensityMeasure(mass)
    floor = -7.0
    base = np.array([0.25, 0.75, 1.25, 1.75])

    def bank(which_spec, rep_base, lag):
        return _run_bank(
            _payload(which_spec, mass, measure, base + lag, floor, seed, rep_base),
            n, parallelism,
        )

    banks = {
        "base": bank(spec, 0, 0.0),
        "lag25": bank(spec, 5_000, 0.25),
        "lag50": bank(spec, 10_000, 0.5),
        "ctrl_base": bank(control, 15_000, 0.0),
        "ctrl_lag50": bank(control, 20_000, 0.5),
    }
    cases = [
        ("invariant-lag-0.25", banks["base"], banks["lag25"], "pass"),
        ("invariant-lag-0.5", banks["base"], banks["lag50"], "pass"),
        ("drift-0-control-rejects", banks["ctrl_base"], banks["ctrl_lag50"],
         "reject"),
    ]
    rows = []
    for k, (name, a, b, expect) in enumerate(cases):
        rep = energy_permutation_test(
            a, b, _PERMS, substream(seed, DOMAIN_STATS, 31, k), name=name
        )
        rows.append(SuiteRow(
            suite="stationarity", name=name, method=rep.method,
            statistic=rep.statistic, p_value=rep.p_value, expectation=expect,
            passed=True, n_a=rep.n_a, n_b=rep.n_b,
        ))
    return _finalize(rows, significance)


def run_poisson_counts(seed: int, *, n: int | None = None,
                       significance: float = 0.01, parallelism: int = 1):
    """Sup-exceedance counts are exactly Poisson (independent marks of a
    Poisson point process), so the dispersion index must be consistent with
    1, and the mean must respect the analytic level-rate bound. The level u
    sits 2 units above the median running max of a pilot bank."""
    n = n or SUITE_DEFAULT_N["poisson-counts"]
    spec = _bm_spec()
    mass = MassFunction(kind="constant", c=1.0)
    measure = IntensityMeasure(mass)
    floor, horizon = -6.0, 1.0

    pilot = _run_bank(
        _payload(spec, mass, measure, (horizon,), floor, seed, 60_000,
                 track_sup=True, mode="runmax"),
        512, parallelism,
    )
    u = float(np.median(pilot)) + 2.0
    bound = exceedance_bound(spec, mass, horizon, v=2.0)
    cert = omitted_mass_bound(bound, floor, u)
    lam_hat = level_rate_bound(bound, u)

    counts = _run_bank(
        _payload(spec, mass, measure, (horizon,), floor, seed, 0,
                 track_sup=True, mode="count", u=u),
        n, parallelism,
    )
    mean = float(counts.mean())
    rep = poisson_dispersion_test(counts, name="dispersion")
    rows = [
        SuiteRow(suite="poisson-counts", name="truncation-cert-at-u",
                 method="omitted_mass_bound", statistic=cert, p_value=math.nan,
                 expectation="bound", passed=cert < 1e-3,
                 details=f"u={u:.6g} floor={floor:g}"),
        SuiteRow(suite="poisson-counts", name=rep.name, method=rep.method,
                 statistic=rep.statistic, p_value=rep.p_value,
                 expectation="pass", passed=True, n_a=rep.n_a,
                 details=f"mean={mean:.6g}"),
        SuiteRow(suite="poisson-counts", name="mean-below-rate-bound",
                 method="level_rate_bound", statistic=mean, p_value=math.nan,
                 expectation="bound", passed=mean <= lam_hat, n_a=n,
                 details=f"bound={lam_hat:.6g} u={u:.6g}"),
    ]
    return _finalize(rows, significance)


def run_clock_identity(seed: int, *, n: int | None = None,
                       significance: float = 0.01, parallelism: int = 1):
    """Two independent computations of the inverse clock must agree to
    O(base_step): the tabulated-inverse route versus the integral
    representation on a clock-time grid. Also checks first-order (or better)
    convergence by halving the step on the same underlying paths."""
    n = n or SUITE_DEFAULT_N["clock-identity"]
    mass = MassFunction(kind="logistic_bump", a=1.0)
    a_hi, a_lo = mass.alpha_hi, mass.alpha_lo
    base_step = 1e-3
    tol = 5.0 * base_step * a_hi / a_lo**2
    specs = [("bm", _bm_spec()), ("cp", _cp_spec())]
    d_coarse = np.empty(n)
    d_fine = np.empty(n)
    half = (n + 1) // 2
    for i in range(n):
        tag, spec = specs[0] if i < half else specs[1]
        rng = substream(seed, DOMAIN_TEST, 11, i)
        x = float(rng.uniform(-3.0, 3.0))
        t = float(rng.uniform(0.05, 1.9))
        fine = sample_path(spec, 2.0, base_step / 2.0, rng)
        coarse = coarsen_path(fine)
        for path, sink in ((coarse, d_coarse), (fine, d_fine)):
            table = compute_clock(path, mass, x)
            r1 = float(invert_clock(table, t))
            r2 = clock_by_integral_rep(path, mass, x, t)
            sink[i] = abs(r1 - r2)
    worst_c, worst_f = float(d_coarse.max()), float(d_fine.max())
    rows = [
        SuiteRow(suite="clock-identity", name="max-discrepancy",
                 method="dual-route", statistic=worst_c, p_value=math.nan,
                 expectation="bound", passed=worst_c < tol, n_a=n,
                 details=f"tol={tol:.6g} base_step={base_step:g}"),
        # the max-over-triples ratio fluctuates ~0.5 +/- 0.005 across seeds
        # (sub-leading error terms); 0.55 still rejects any order below 1,
        # whose ratio would be >= 1/sqrt(2)
        SuiteRow(suite="clock-identity", name="halving-at-least-halves",
                 method="dual-route", statistic=worst_f, p_value=math.nan,
                 expectation="monotone", passed=worst_f <= 0.55 * worst_c,
                 n_a=n, details=f"coarse={worst_c:.6g} fine={worst_f:.6g}"),
    ]
    return _finalize(rows, significance)


def run_exceedance_bound(seed: int, *, n: int | None = None,
                         significance: float = 0.01, parallelism: int = 1):
    """Monte Carlo sup-exceedance frequency from fixed starts must sit below
    the pathwise bound C_vt * P[L_{t*alpha_hi} >= u - x - v] at every tested
    point; the driving law here is Brownian so both factors are exact."""
    n = n or SUITE_DEFAULT_N["exceedance-bound"]
    from scipy.stats import norm

    spec = _bm_spec()
    mass = MassFunction(kind="logistic_bump", a=1.0)
    horizon, v = 1.0, 2.0
    bound = exceedance_bound(spec, mass, horizon, v)
    big_t = bound.levy_horizon
    eval_cols, n_cols = eval_columns((horizon,), _DT)
    points = [(x + du, x) for x in (-1.0, 0.0, 1.0) for du in (2.5, 3.5)]
    rows = []
    width = 4000
    n_blocks = math.ceil(n / width)
    for k, (u, x) in enumerate(points):
        hits = 0
        total = 0
        for blk in range(n_blocks):
            b = min(width, n - blk * width)
            starts = np.full(width, x)
            _, sups = run_block(
                spec, mass, starts, eval_cols, n_cols,
                substream(seed, DOMAIN_TEST, 21, k, blk),
                dt=_DT, track_sup=True,
            )
            hits += int(np.count_nonzero(sups[:b] >= u))
            total += b
        freq = hits / total
        # L_T is N(-T/2, T) for the normalized Brownian spec
        analytic = bound.c_vt * float(
            norm.sf((u - x - v + 0.5 * big_t) / math.sqrt(big_t))
        )
        rows.append(SuiteRow(
            suite="exceedance-bound", name=f"u={u:g}-x={x:g}",
            method="mc-vs-bound", statistic=freq, p_value=math.nan,
            expectation="bound", passed=freq <= analytic, n_a=total,
            details=f"bound={analytic:.6g} c_vt={bound.c_vt:.6g}",
        ))
    return _finalize(rows, significance)


def run_mda(seed: int, *, n: int | None = None,
            significance: float = 0.01, parallelism: int = 1,
            ladder: tuple[int, ...] | None = None):
    """The rescaled-process ladder.

    zeta_n for the logistic bump is sampled as a single system under the
    shifted mass function (the superposition identity), with replicate keys
    shared across n (common random numbers). Its energy distance to an
    independent unit-mass bank must decrease strictly along the ladder,
    reject at n=1, and not reject at n=1000. The unit-mass fixed point is
    exercised through the literal max-of-copies construction, and the
    rescaled start measure's tail must converge to e^{-z} monotonically.

    A custom ladder turns the run into a diagnostic: only the per-n
    comparison rows (plus strict decrease when the ladder has length > 1)
    are emitted, ungated.
    """
    n = n or SUITE_DEFAULT_N["mda"]
    custom = ladder is not None
    lad = tuple(ladder) if custom else _LADDER
    from .mda import make_rescaled_model

    spec = _bm_spec()
    mass = MassFunction(kind="logistic_bump", a=1.0)
    measure = IntensityMeasure(mass)
    unit = MassFunction(kind="constant", c=1.0)
    unit_measure = IntensityMeasure(unit)
    floor = -7.0

    limit_bank = _run_bank(
        _payload(spec, unit, unit_measure, _FDD_TIMES, floor, seed, 25_000),
        n, parallelism,
    )

    rows = []
    energies = []
    for k, n_lad in enumerate(lad):
        mass_n, measure_n = make_rescaled_model(mass, measure, n_lad)
        bank = _run_bank(
            _payload(spec, mass_n, measure_n, _FDD_TIMES, floor, seed, 0),
            n, parallelism,
        )
        rep = energy_permutation_test(
            bank, limit_bank, _PERMS, substream(seed, DOMAIN_STATS, 41, k),
            name=f"zeta-{n_lad}-vs-limit",
        )
        energies.append(rep.statistic)
        if custom:
            expect = "info"
        else:
            expect = {1: "reject", lad[-1]: "pass"}.get(n_lad, "info")
        rows.append(SuiteRow(
            suite="mda", name=rep.name, method=rep.method,
            statistic=rep.statistic, p_value=rep.p_value, expectation=expect,
            passed=True, n_a=rep.n_a, n_b=rep.n_b, details=f"n={n_lad}",
        ))
    if len(lad) > 1:
        strict = all(a > b for a, b in zip(energies, energies[1:]))
        rows.append(SuiteRow(
            suite="mda", name="statistic-strictly-decreasing", method="energy",
            statistic=energies[-1], p_value=math.nan, expectation="monotone",
            passed=strict,
            details="E=" + ",".join(f"{e:.6g}" for e in energies),
        ))
    if custom:
        return _finalize(rows, significance)

    literal_reps = {1: n, 10: n, 100: max(200, n // 5), 1000: max(200, n // 20)}
    for n_lad in _LADDER:
        reps = literal_reps[n_lad]
        bank = _run_bank(
            _payload(spec, unit, unit_measure, _FDD_TIMES, floor, seed, 0,
                     mode="zeta_literal", n_copies=n_lad),
            reps, parallelism,
        )
        rep = energy_permutation_test(
            bank, limit_bank, _PERMS,
            substream(seed, DOMAIN_STATS, 43, n_lad),
            name=f"fixed-point-n-{n_lad}",
        )
        rows.append(SuiteRow(
            suite="mda", name=rep.name, method=rep.method,
            statistic=rep.statistic, p_value=rep.p_value, expectation="pass",
            passed=True, n_a=rep.n_a, n_b=rep.n_b, details=f"n={n_lad}",
        ))

    for z in (-2.0, 0.0, 2.0):
        gaps = []
        for n_lad in _LADDER:
            _, measure_n = make_rescaled_model(mass, measure, n_lad)
            gaps.append(abs(float(measure_n.tail_integral(z)) - math.exp(-z)))
        mono = all(a > b for a, b in zip(gaps, gaps[1:]))
        rows.append(SuiteRow(
            suite="mda", name=f"intensity-convergence-z={z:g}",
            method="quadrature", statistic=gaps[-1], p_value=math.nan,
            expectation="monotone", passed=mono,
            details="gap=" + ",".join(f"{g:.6g}" for g in gaps),
        ))
    return _finalize(rows, significance)


_RUNNERS = {
    "marginal": run_marginal,
    "stationarity": run_stationarity,
    "poisson-counts": run_poisson_counts,
    "clock-identity": run_clock_identity,
    "exceedance-bound": run_exceedance_bound,
    "mda": run_mda,
}


def run_suite(name: str, seed: int, *, n: int | None = None,
              significance: float = 0.01, parallelism: int = 1,
              ladder: tuple[int, ...] | None = None):
    """Run one named suite and return its rows."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(_RUNNERS)}")
    kwargs = dict(n=n, significance=significance, parallelism=parallelism)
    if name == "mda":
        kwargs["ladder"] = ladder
    elif ladder is not None:
        raise ValueError("ladder applies to the mda suite only")
    return _RUNNERS[name](seed, **kwargs)
