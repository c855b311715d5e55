"""Simulation and statistical verification of max-infinitely divisible
processes built from a Poisson cloud of time-changed exponential-martingale
paths.

Layers, bottom to top: `levy` (path laws), `clock` (state-dependent time
changes), `ppp` (the particle cloud), `engine` (vectorized cell stepper),
`maxid` (truncated pointwise maxima with error certificates), `mda`
(rescaled maxima and their limit), `stats` (test machinery), `suites`
(named verification batteries), `cli` (config-driven runner).
"""

__version__ = "0.1.0"

from .clock import ClockTable, clock_by_integral_rep, compute_clock, invert_clock, time_change
from .config import ExperimentConfig
from .errors import (
    ConfigError,
    DegenerateModel,
    DimensionMismatch,
    EmptySystem,
    GridMismatch,
    MaxidError,
    NonMonotoneCdf,
    TruncationBias,
    VanishingInfimumProb,
)
from .clock import MassFunction
from .levy import JumpDist, LevyPath, LevySpec, coarsen_path, make_levy_spec, sample_path
from .maxid import (
    ExceedanceBound,
    MaxIdSample,
    ParticleSystem,
    build_particle_system,
    exceedance_bound,
    level_rate_bound,
    omitted_mass_bound,
    pick_v,
    pilot_u_ref,
    suggest_floor,
    sup_exceedance_count,
    truncated_max,
)
from .mda import (
    ReferenceSample,
    RescaledSample,
    make_rescaled_model,
    reference_sample,
    rescaled_intensity,
    rescaled_process_sample,
    sample_zeta_n,
    zeta_n,
)
from .ppp import IntensityMeasure, PointSet, generate_points
from .stats import (
    EmpiricalSample,
    TestReport,
    energy_permutation_test,
    energy_statistic,
    holm,
    ks_one_sample,
    ks_two_sample,
    modulus_of_continuity,
    poisson_dispersion_test,
)
from .suites import SUITE_DEFAULT_N, SuiteRow, run_suite, suite_passed

__all__ = [
    "ClockTable",
    "ConfigError",
    "DegenerateModel",
    "DimensionMismatch",
    "EmptySystem",
    "EmpiricalSample",
    "ExceedanceBound",
    "ExperimentConfig",
    "GridMismatch",
    "IntensityMeasure",
    "JumpDist",
    "LevyPath",
    "LevySpec",
    "MassFunction",
    "MaxIdSample",
    "MaxidError",
    "NonMonotoneCdf",
    "ParticleSystem",
    "PointSet",
    "ReferenceSample",
    "RescaledSample",
    "SUITE_DEFAULT_N",
    "SuiteRow",
    "TestReport",
    "TruncationBias",
    "VanishingInfimumProb",
    "build_particle_system",
    "clock_by_integral_rep",
    "coarsen_path",
    "compute_clock",
    "energy_permutation_test",
    "energy_statistic",
    "exceedance_bound",
    "generate_points",
    "holm",
    "invert_clock",
    "ks_one_sample",
    "ks_two_sample",
    "level_rate_bound",
    "make_levy_spec",
    "make_rescaled_model",
    "modulus_of_continuity",
    "omitted_mass_bound",
    "pick_v",
    "pilot_u_ref",
    "poisson_dispersion_test",
    "reference_sample",
    "rescaled_intensity",
    "rescaled_process_sample",
    "run_suite",
    "sample_path",
    "sample_zeta_n",
    "suggest_floor",
    "suite_passed",
    "sup_exceedance_count",
    "time_change",
    "truncated_max",
    "zeta_n",
]
