"""Statistical tests used by the verification suites.

All tests return a TestReport; decisions (pass/fail at a level, possibly
Holm-adjusted across a family) belong to the caller. Permutation p-values
use the add-one convention (1 + #{perm >= obs}) / (perms + 1), and the
observed statistic entering that comparison is computed by the exact same
float32 reduction as the permuted ones so the exchangeability argument
applies; the reported statistic is the float64 value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2
from scipy.special import kolmogorov

from .errors import AllZero, DimensionMismatch, NonMonotoneCdf

__all__ = [
    "EmpiricalSample",
    "TestReport",
    "ks_one_sample",
    "ks_two_sample",
    "energy_statistic",
    "energy_permutation_test",
    "poisson_dispersion_test",
    "modulus_of_continuity",
    "holm",
]


@dataclass
class EmpiricalSample:
    """Plain container for observed values with an ascending-sorted flag."""

    values: np.ndarray
    is_sorted: bool = False

    @classmethod
    def from_values(cls, values) -> "EmpiricalSample":
        return cls(values=np.sort(np.asarray(values, dtype=float)), is_sorted=True)


def _values(sample) -> np.ndarray:
    if isinstance(sample, EmpiricalSample):
        return np.asarray(sample.values, dtype=float)
    return np.asarray(sample, dtype=float)


@dataclass
class TestReport:
    method: str
    statistic: float
    p_value: float
    n_a: int
    n_b: int = 0
    threshold: float = 0.01
    name: str = ""
    details: dict = field(default_factory=dict)


def ks_one_sample(values, cdf, name: str = "ks") -> TestReport:
    """One-sample Kolmogorov-Smirnov against a callable CDF.

    Asymptotic Kolmogorov p-value (all suites run at n >= 1e3 where it is
    adequate). The CDF is probed for monotonicity on the sorted sample; a
    decrease beyond rounding noise raises NonMonotoneCdf.
    """
    x = np.sort(_values(values))
    n = x.size
    if n < 100:
        raise ValueError(f"KS needs n >= 100, got {n}")
    f = np.asarray(cdf(x), dtype=float)
    if np.any(np.diff(f) < -1e-12) or f[0] < -1e-12 or f[-1] > 1 + 1e-12:
        raise NonMonotoneCdf("cdf is not nondecreasing into [0, 1] on the sample")
    grid = np.arange(1, n + 1) / n
    d_plus = float(np.max(grid - f))
    d_minus = float(np.max(f - (grid - 1 / n)))
    d = max(d_plus, d_minus)
    return TestReport(
        method="ks1", statistic=d,
        p_value=float(kolmogorov(np.sqrt(n) * d)), n_a=n, name=name,
        details={"d_plus": d_plus, "d_minus": d_minus},
    )


def ks_two_sample(first, second, name: str = "ks2") -> TestReport:
    """Two-sample KS with the asymptotic Kolmogorov p-value at the
    effective sample size n*m/(n+m)."""
    x = np.sort(_values(first))
    y = np.sort(_values(second))
    n, m = x.size, y.size
    if min(n, m) < 100:
        raise ValueError(f"two-sample KS needs n, m >= 100, got {n}, {m}")
    pooled = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, pooled, side="right") / n
    cdf_y = np.searchsorted(y, pooled, side="right") / m
    d = float(np.max(np.abs(cdf_x - cdf_y)))
    n_eff = n * m / (n + m)
    return TestReport(
        method="ks2", statistic=d,
        p_value=float(kolmogorov(np.sqrt(n_eff) * d)), n_a=n, n_b=m, name=name,
    )


def _mean_cross_distance(a: np.ndarray, b: np.ndarray, chunk: int) -> float:
    """Mean Euclidean distance over all pairs (V-statistic), float64, chunked
    so no n*m matrix is ever held for large banks."""
    b_sq = np.einsum("ij,ij->i", b, b)
    total = 0.0
    for lo in range(0, a.shape[0], chunk):
        part = a[lo : lo + chunk]
        sq = (
            np.einsum("ij,ij->i", part, part)[:, None]
            + b_sq[None, :]
            - 2.0 * part @ b.T
        )
        np.maximum(sq, 0.0, out=sq)
        total += float(np.sqrt(sq, out=sq).sum())
    return total / (a.shape[0] * b.shape[0])


def energy_statistic(first, second, chunk: int = 2048) -> float:
    """Energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'| between two banks of
    d-dimensional rows. Nonnegative, zero iff the distributions agree."""
    x = np.atleast_2d(np.asarray(first, dtype=float))
    y = np.atleast_2d(np.asarray(second, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(
            f"row dimensions differ: {x.shape[1]} vs {y.shape[1]}"
        )
    return (
        2.0 * _mean_cross_distance(x, y, chunk)
        - _mean_cross_distance(x, x, chunk)
        - _mean_cross_distance(y, y, chunk)
    )


def energy_permutation_test(
    first,
    second,
    perms: int,
    rng: np.random.Generator,
    name: str = "energy",
) -> TestReport:
    """Permutation test on the energy distance.

    The pooled pairwise distance matrix is built once in float32 and every
    permuted statistic is a pair of masked reductions of it, driven through
    one GEMM over the stacked group-indicator matrix. Requires each bank
    >= 200 rows and perms >= 500.
    """
    x = np.atleast_2d(np.asarray(first, dtype=float))
    y = np.atleast_2d(np.asarray(second, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(
            f"row dimensions differ: {x.shape[1]} vs {y.shape[1]}"
        )
    n, m = x.shape[0], y.shape[0]
    if min(n, m) < 200:
        raise ValueError(f"energy test needs both banks >= 200, got {n}, {m}")
    if perms < 500:
        raise ValueError(f"energy test needs perms >= 500, got {perms}")

    pooled = np.concatenate([x, y]).astype(np.float32)
    big_n = n + m
    sq_norm = np.einsum("ij,ij->i", pooled, pooled)
    dist = np.empty((big_n, big_n), dtype=np.float32)
    chunk = max(1, int(2**24 // max(big_n, 1)))
    for lo in range(0, big_n, chunk):
        part = pooled[lo : lo + chunk]
        block = sq_norm[lo : lo + chunk, None] + sq_norm[None, :]
        block -= 2.0 * part @ pooled.T
        np.maximum(block, 0.0, out=block)
        dist[lo : lo + chunk] = np.sqrt(block, out=block)

    # column 0 is the identity assignment: its statistic is the observed one
    # inside the comparison, so obs and perms share every rounding step
    marks = np.zeros((big_n, perms + 1), dtype=np.float32)
    marks[:n, 0] = 1.0
    for j in range(1, perms + 1):
        marks[rng.permutation(big_n)[:n], j] = 1.0

    col_tot = dist.sum(axis=0, dtype=np.float64)
    grand = float(col_tot.sum())
    prod = dist @ marks
    s_all_a = (marks * prod).sum(axis=0, dtype=np.float64)  # sum over A x A
    s_any_a = (prod.sum(axis=0, dtype=np.float64))          # sum over all x A
    s_ab = s_any_a - s_all_a
    s_bb = grand - 2.0 * s_any_a + s_all_a
    stats = 2.0 * s_ab / (n * m) - s_all_a / (n * n) - s_bb / (m * m)
    obs_f32, perm_stats = stats[0], stats[1:]
    p = (1.0 + np.count_nonzero(perm_stats >= obs_f32)) / (perms + 1.0)
    return TestReport(
        method="energy_perm", statistic=energy_statistic(x, y),
        p_value=float(p), n_a=n, n_b=m, name=name, details={"perms": perms},
    )


def poisson_dispersion_test(counts, name: str = "dispersion") -> TestReport:
    """Two-sided chi-square dispersion test: (n-1) s^2 / mean is chi2(n-1)
    under a Poisson null. Statistic is the dispersion index s^2 / mean."""
    k = np.asarray(counts, dtype=float)
    n = k.size
    if n < 1000:
        raise ValueError(f"dispersion test needs >= 1000 counts, got {n}")
    mean = float(k.mean())
    if mean == 0:
        raise AllZero("all counts are zero; dispersion is undefined")
    stat = float(k.var(ddof=1) / mean)
    q = (n - 1) * stat
    p = 2.0 * min(chi2.cdf(q, n - 1), chi2.sf(q, n - 1))
    return TestReport(
        method="poisson_dispersion", statistic=stat,
        p_value=float(min(p, 1.0)), n_a=n, name=name, details={"mean": mean},
    )


def modulus_of_continuity(times, values, delta: float) -> float:
    """sup |v_s - v_t| over pairs of grid times with |s - t| <= delta."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size != v.size:
        raise DimensionMismatch("times and values differ in length")
    if np.any(np.diff(t) < 0):
        order = np.argsort(t, kind="stable")
        t, v = t[order], v[order]
    best = 0.0
    hi = 0
    for i in range(t.size):
        hi = max(hi, i + 1)
        while hi < t.size and t[hi] - t[i] <= delta:
            hi += 1
        window = v[i:hi]
        if window.size > 1:
            best = max(best, float(window.max() - window.min()))
    return best


def holm(p_values, alpha: float = 0.05):
    """Holm step-down adjustment. Returns (adjusted p, reject) in the
    original order; reject[i] iff adjusted[i] <= alpha."""
    p = np.asarray(p_values, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    adj_sorted = np.maximum.accumulate(np.minimum((m - np.arange(m)) * p[order], 1.0))
    adjusted = np.empty(m)
    adjusted[order] = adj_sorted
    return adjusted, adjusted <= alpha
