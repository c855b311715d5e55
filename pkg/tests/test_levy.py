"""Path-law layer: normalized drift, jump menu, sampled path structure."""

import math

import numpy as np
import pytest

from maxidsim import (
    DegenerateModel,
    JumpDist,
    LevySpec,
    coarsen_path,
    make_levy_spec,
    sample_path,
)
from maxidsim.errors import NonIntegrableJumps
from maxidsim.levy import exp_moment, log_mgf

# closed forms: E[e^J] = e^{1/2} for standard normal jumps,
# 0.3 e + 0.7/e for the two-point example below
CP_NORMAL_DRIFT = -0.6487212707001282
TWO_POINT_EXP_MOMENT = 1.073000157357723


def test_bm_drift_is_minus_half():
    spec = make_levy_spec(sigma=1.0)
    assert spec.drift == -0.5
    assert spec.normalized


def test_constant_zero_jumps_need_no_correction():
    spec = make_levy_spec(sigma=0.0, jump_rate=1.0,
                          jump_dist=JumpDist(kind="constant", value=0.0))
    assert spec.drift == 0.0


def test_cp_normal_drift_closed_form():
    spec = make_levy_spec(sigma=0.0, jump_rate=1.0,
                          jump_dist=JumpDist(kind="normal", mean=0.0, var=1.0))
    assert abs(spec.drift - CP_NORMAL_DRIFT) < 1e-15


def test_two_point_exp_moment():
    jd = JumpDist(kind="two_point", hi=1.0, lo=-1.0, p_hi=0.3)
    assert abs(jd.exp_moment(1.0) - TWO_POINT_EXP_MOMENT) < 1e-15


def test_degenerate_spec_rejected():
    with pytest.raises(DegenerateModel):
        make_levy_spec(sigma=0.0, jump_rate=0.0)


def test_bad_jump_params_rejected():
    with pytest.raises((NonIntegrableJumps, ValueError)):
        make_levy_spec(sigma=0.0, jump_rate=1.0,
                       jump_dist=JumpDist(kind="normal", mean=0.0, var=-1.0))
    with pytest.raises((NonIntegrableJumps, ValueError)):
        make_levy_spec(sigma=1.0, jump_rate=-2.0)


def test_psi_at_one_vanishes_for_every_menu_entry():
    specs = [
        make_levy_spec(sigma=1.0),
        make_levy_spec(sigma=0.5, jump_rate=2.0,
                       jump_dist=JumpDist(kind="constant", value=0.3)),
        make_levy_spec(sigma=0.0, jump_rate=1.0,
                       jump_dist=JumpDist(kind="normal", mean=-0.2, var=0.5)),
        make_levy_spec(sigma=2.0, jump_rate=0.7,
                       jump_dist=JumpDist(kind="two_point", hi=1.0, lo=-1.0,
                                          p_hi=0.3)),
    ]
    for spec in specs:
        assert abs(log_mgf(spec, 1.0)) < 1e-14
        assert exp_moment(spec, 0.0) == 1.0
        assert exp_moment(spec, 3.7) == 1.0
        assert exp_moment(spec, 2.0) == 1.0


def test_constant_zero_path():
    spec = LevySpec.constant_zero()
    path = sample_path(spec, 1.0, 0.1, np.random.default_rng(0))
    assert path.times[0] == 0.0
    assert np.all(path.values == 0.0)


def test_path_starts_at_origin_and_marks_align():
    spec = make_levy_spec(sigma=1.0, jump_rate=3.0,
                          jump_dist=JumpDist(kind="constant", value=1.0))
    for trial in range(20):
        path = sample_path(spec, 2.0, 0.05, np.random.default_rng(trial))
        assert path.times[0] == 0.0 and path.values[0] == 0.0
        assert np.all(np.diff(path.times) > 0)
        # marks carry the stored jump sizes; here every jump is +1
        assert np.allclose(path.jump_sizes[path.jump_marks], 1.0)
        assert np.all(path.jump_sizes[~path.jump_marks] == 0.0)
        # uniform grid nodes all survive the jump-epoch union
        k = round(2.0 / 0.05)
        expect = np.arange(k + 1) * 0.05
        assert np.all(np.isin(np.round(expect, 12), np.round(path.times, 12)))


def test_jump_count_is_poisson_mean():
    spec = make_levy_spec(sigma=0.0, jump_rate=1.0,
                          jump_dist=JumpDist(kind="constant", value=1.0))
    counts = []
    for rep in range(4000):
        path = sample_path(spec, 1.0, 0.25, np.random.default_rng(rep))
        counts.append(int(path.jump_marks.sum()))
    counts = np.asarray(counts, dtype=float)
    # Poisson(1): mean 1, variance 1
    assert abs(counts.mean() - 1.0) < 4.0 / math.sqrt(len(counts))
    assert abs(counts.var() / counts.mean() - 1.0) < 0.08


def test_same_stream_is_bit_identical():
    spec = make_levy_spec(sigma=1.0, jump_rate=2.0,
                          jump_dist=JumpDist(kind="normal", mean=0.0, var=1.0))
    a = sample_path(spec, 1.5, 0.01, np.random.default_rng(99))
    b = sample_path(spec, 1.5, 0.01, np.random.default_rng(99))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.values, b.values)


def test_coarsen_path_keeps_nodes_and_jumps():
    spec = make_levy_spec(sigma=1.0, jump_rate=2.0,
                          jump_dist=JumpDist(kind="normal", mean=0.0, var=1.0))
    fine = sample_path(spec, 1.0, 0.005, np.random.default_rng(5))
    coarse = coarsen_path(fine)
    assert coarse.base_step == 2 * fine.base_step
    assert coarse.jump_marks.sum() == fine.jump_marks.sum()
    # every surviving node keeps its exact value
    idx = np.searchsorted(fine.times, coarse.times)
    assert np.array_equal(fine.times[idx], coarse.times)
    assert np.array_equal(fine.values[idx], coarse.values)


@pytest.mark.slow
def test_martingale_mean_over_grid():
    """Monte Carlo mean of exp(L_t) within 4 stderr of 1 at t in {0.5, 1, 2}."""
    specs = [
        make_levy_spec(sigma=1.0),
        make_levy_spec(sigma=0.0, jump_rate=1.0,
                       jump_dist=JumpDist(kind="normal", mean=0.0, var=1.0)),
        make_levy_spec(sigma=0.7, jump_rate=1.5,
                       jump_dist=JumpDist(kind="two_point", hi=0.8, lo=-0.8,
                                          p_hi=0.4)),
    ]
    n = 100_000
    cols = (2, 4, 8)  # t = 0.5, 1, 2 on the h = 0.25 grid
    for s_idx, spec in enumerate(specs):
        vals = np.empty((n, 3))
        for rep in range(n):
            path = sample_path(spec, 2.0, 0.25,
                               np.random.default_rng((s_idx + 1) * 10_000_000 + rep))
            at = np.interp([0.5, 1.0, 2.0], path.times, path.values)
            vals[rep] = np.exp(at)
        for j in range(3):
            mean = vals[:, j].mean()
            se = vals[:, j].std(ddof=1) / math.sqrt(n)
            assert abs(mean - 1.0) < 4 * se, (s_idx, j, mean, se)


@pytest.mark.slow
def test_disjoint_increments_uncorrelated():
    spec = make_levy_spec(sigma=1.0, jump_rate=1.0,
                          jump_dist=JumpDist(kind="normal", mean=0.0, var=0.5))
    n = 10_000
    inc = np.empty((n, 2))
    for rep in range(n):
        path = sample_path(spec, 1.0, 0.25, np.random.default_rng(31_000_000 + rep))
        l_half = np.interp(0.5, path.times, path.values)
        inc[rep] = (l_half, path.values[-1] - l_half)
    rho = np.corrcoef(inc[:, 0], inc[:, 1])[0, 1]
    assert abs(rho) < 4.0 / math.sqrt(n)


@pytest.mark.slow
def test_grid_refinement_leaves_law_alone():
    """Halving base_step: two-sample KS on L_1 below 2x the critical value.

    Brownian increments are exact at any step, so this exercises only the
    jump-epoch bookkeeping.
    """
    from maxidsim import ks_two_sample

    spec = make_levy_spec(sigma=1.0, jump_rate=2.0,
                          jump_dist=JumpDist(kind="normal", mean=0.1, var=1.0))
    n = 10_000
    banks = []
    for k, step in enumerate((0.02, 0.01)):
        vals = np.empty(n)
        for rep in range(n):
            path = sample_path(spec, 1.0, step,
                               np.random.default_rng(77_000_000 + k * n + rep))
            vals[rep] = path.values[-1]
        banks.append(vals)
    rep = ks_two_sample(banks[0], banks[1])
    crit = 1.628 * math.sqrt(2.0 / n)  # alpha = 0.01 asymptotic two-sample
    assert rep.statistic < 2 * crit, (rep.statistic, crit)
