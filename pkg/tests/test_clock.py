"""Mass functions, the additive clock, its inverse, and the time change."""

import math

import numpy as np
import pytest
from scipy import integrate, optimize
from scipy.special import expit

from maxidsim import (
    JumpDist,
    LevyPath,
    MassFunction,
    clock_by_integral_rep,
    coarsen_path,
    compute_clock,
    invert_clock,
    make_levy_spec,
    sample_path,
    time_change,
)
from maxidsim.errors import HorizonExceeded

# int_0^1 1/(1+e^r) dr = log(2e/(1+e)), for the deterministic line path below
LINE_BUMP_INTEGRAL = 0.3798854930417225


def line_path(horizon=2.0, step=0.001):
    """Deterministic path L_r = r (unit drift, no noise, no jumps)."""
    times = np.linspace(0.0, horizon, int(round(horizon / step)) + 1)
    zeros = np.zeros_like(times)
    return LevyPath(times=times, values=times.copy(),
                    jump_marks=zeros.astype(bool), jump_sizes=zeros,
                    base_step=step, diffusive=True)


def test_mass_function_bounds_and_limit():
    const = MassFunction(kind="constant", c=2.5)
    assert const.alpha_lo == const.alpha_hi == 2.5
    assert const(123.0) == 2.5
    assert not const.mda_admissible
    assert MassFunction(kind="constant", c=1.0).mda_admissible

    bump = MassFunction(kind="logistic_bump", a=1.0)
    assert bump.alpha_lo == 1.0 and bump.alpha_hi == 2.0
    dip = MassFunction(kind="logistic_bump", a=-0.5)
    assert dip.alpha_lo == 0.5 and dip.alpha_hi == 1.0
    z = np.linspace(-30, 30, 301)
    for m in (bump, dip):
        vals = m(z)
        assert np.all(vals >= m.alpha_lo - 1e-12)
        assert np.all(vals <= m.alpha_hi + 1e-12)
        assert abs(m(35.0) - 1.0) < 1e-12  # limit 1 far to the right
    with pytest.raises(ValueError):
        MassFunction(kind="logistic_bump", a=-1.0)
    with pytest.raises(ValueError):
        MassFunction(kind="constant", c=0.0)


def test_with_shift_moves_the_bump():
    bump = MassFunction(kind="logistic_bump", a=1.0)
    shifted = bump.with_shift(math.log(10.0))
    z = np.linspace(-5, 5, 41)
    assert np.allclose(shifted(z), bump(z + math.log(10.0)))
    assert shifted.alpha_lo == bump.alpha_lo
    assert shifted.alpha_hi == bump.alpha_hi


def test_clock_constant_rate_is_linear():
    mass = MassFunction(kind="constant", c=2.5)
    path = sample_path(make_levy_spec(sigma=1.0), 1.0, 0.01,
                       np.random.default_rng(3))
    table = compute_clock(path, mass, 0.7)
    assert np.allclose(table.a_values, 2.5 * path.times, rtol=0, atol=1e-12)
    assert abs(invert_clock(table, 1.0) - 1.0 / 2.5) < 1e-12
    assert abs(clock_by_integral_rep(path, mass, 0.7, 1.0) - 0.4) < 1e-9


def test_clock_zero_path_logistic():
    # integrand is the constant alpha(x) along the zero path
    from maxidsim import LevySpec

    mass = MassFunction(kind="logistic_bump", a=1.0)
    path = sample_path(LevySpec.constant_zero(), 2.0, 0.01,
                       np.random.default_rng(0))
    table = compute_clock(path, mass, 0.0)
    assert np.allclose(table.a_values, 1.5 * path.times, atol=1e-12)


def test_clock_line_path_quadrature_oracle():
    path = line_path()
    for a in (1.0, -0.5):
        mass = MassFunction(kind="logistic_bump", a=a)
        table = compute_clock(path, mass, 0.0)
        k = np.searchsorted(path.times, 1.0)
        assert path.times[k] == 1.0
        expected = 1.0 + a * LINE_BUMP_INTEGRAL
        assert abs(table.a_values[k] - expected) < 5e-8, (a, table.a_values[k])


def test_invert_clock_round_trip_and_errors():
    mass = MassFunction(kind="logistic_bump", a=1.0)
    path = sample_path(make_levy_spec(sigma=1.0), 1.0, 0.005,
                       np.random.default_rng(11))
    table = compute_clock(path, mass, -0.5)
    idx = np.arange(0, len(path.times), 17)
    assert np.allclose(invert_clock(table, table.a_values[idx]),
                       path.times[idx], atol=1e-12)
    with pytest.raises(HorizonExceeded):
        invert_clock(table, table.a_values[-1] * 1.0001)
    with pytest.raises(ValueError):
        invert_clock(table, -0.1)


def test_sandwich_bounds_random_paths():
    spec = make_levy_spec(sigma=1.0, jump_rate=1.0,
                          jump_dist=JumpDist(kind="normal", mean=0.0, var=1.0))
    mass = MassFunction(kind="logistic_bump", a=1.0)
    rng = np.random.default_rng(21)
    for _ in range(200):
        path = sample_path(spec, 1.0, 0.02, rng)
        x = float(rng.uniform(-3, 3))
        table = compute_clock(path, mass, x)
        assert np.all(table.a_values >= mass.alpha_lo * path.times - 1e-12)
        assert np.all(table.a_values <= mass.alpha_hi * path.times + 1e-12)
        assert np.all(np.diff(table.a_values)
                      >= mass.alpha_lo * np.diff(path.times) - 1e-12)
        t = float(rng.uniform(0, table.a_values[-1]))
        s = invert_clock(table, t)
        assert t / mass.alpha_hi - 1e-12 <= s <= t / mass.alpha_lo + 1e-12


def test_time_change_identity_for_unit_mass():
    mass = MassFunction(kind="constant", c=1.0)
    spec = make_levy_spec(sigma=1.0, jump_rate=2.0,
                          jump_dist=JumpDist(kind="constant", value=0.5))
    path = sample_path(spec, 1.0, 0.01, np.random.default_rng(4))
    eval_times = np.array([0.0, 0.25, 0.5, 1.0])
    vals = time_change(path, mass, 1.2, eval_times)
    expect = np.array([np.interp(t, path.times, path.values)
                       for t in eval_times]) + 1.2
    # eval times sit on grid nodes here, so the identity is exact
    assert np.allclose(vals, expect, atol=1e-12)
    assert vals[0] == 1.2


def test_time_change_zero_path_is_flat():
    from maxidsim import LevySpec

    mass = MassFunction(kind="logistic_bump", a=1.0)
    path = sample_path(LevySpec.constant_zero(), 2.0, 0.05,
                       np.random.default_rng(0))
    vals = time_change(path, mass, -0.3, [0.0, 0.5, 1.5])
    assert np.allclose(vals, -0.3, atol=1e-12)


def test_integral_rep_line_path_oracle():
    """Second route on the line path against direct quadrature of the
    closed-form composition 1/alpha(T(r)), T from root-finding."""
    a = -0.5
    mass = MassFunction(kind="logistic_bump", a=a)
    path = line_path(horizon=3.0, step=0.001)

    def a_of(s):
        return s + a * (math.log(2.0) - math.log1p(math.exp(-s)))

    def t_of(r):
        return optimize.brentq(lambda s: a_of(s) - r, 0.0, 3.0, xtol=1e-13)

    t = 1.3
    oracle, err = integrate.quad(lambda r: 1.0 / (1.0 + a * expit(-t_of(r))),
                                 0.0, t, limit=200)
    assert err < 1e-9
    got = clock_by_integral_rep(path, mass, 0.0, t)
    assert abs(got - oracle) < 5e-7, (got, oracle)
    # and the two in-package routes agree with each other
    inv = invert_clock(compute_clock(path, mass, 0.0), t)
    assert abs(inv - oracle) < 5e-7


def test_two_routes_agree_on_random_inputs():
    """invert_clock vs the integral representation across paths with jumps."""
    bm = make_levy_spec(sigma=1.0)
    cp = make_levy_spec(sigma=0.0, jump_rate=1.0,
                        jump_dist=JumpDist(kind="normal", mean=0.0, var=1.0))
    mass = MassFunction(kind="logistic_bump", a=1.0)
    base_step = 2e-3
    tol = 5 * base_step * mass.alpha_hi / mass.alpha_lo**2
    rng = np.random.default_rng(42)
    worst = 0.0
    for k in range(60):
        spec = bm if k % 2 == 0 else cp
        path = sample_path(spec, 2.0, base_step, rng)
        x = float(rng.uniform(-3, 3))
        t = float(rng.uniform(0.05, 1.9))
        via_table = invert_clock(compute_clock(path, mass, x), t)
        via_integral = clock_by_integral_rep(path, mass, x, t)
        worst = max(worst, abs(via_table - via_integral))
    assert worst < tol, (worst, tol)


def test_halving_step_at_least_halves_discrepancy():
    spec = make_levy_spec(sigma=1.0, jump_rate=1.0,
                          jump_dist=JumpDist(kind="normal", mean=0.0, var=1.0))
    mass = MassFunction(kind="logistic_bump", a=1.0)
    rng = np.random.default_rng(7)
    worst_c, worst_f = 0.0, 0.0
    for _ in range(40):
        fine = sample_path(spec, 2.0, 1e-3, rng)
        coarse = coarsen_path(fine)
        x = float(rng.uniform(-2, 2))
        t = float(rng.uniform(0.1, 1.8))
        for path, sink in ((coarse, "c"), (fine, "f")):
            d = abs(invert_clock(compute_clock(path, mass, x), t)
                    - clock_by_integral_rep(path, mass, x, t))
            if sink == "c":
                worst_c = max(worst_c, d)
            else:
                worst_f = max(worst_f, d)
    assert worst_f <= 0.5 * worst_c, (worst_f, worst_c)
