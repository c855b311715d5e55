"""Deterministic substream derivation.

All randomness in the package flows through named substreams derived from a
single master seed with ``numpy.random.SeedSequence`` spawn keys. A substream
is identified by a tuple of small integers, so any piece of work (a replicate,
a particle block, a pilot run) can be re-derived independently of execution
order or parallelism. Exponential draws used for ordered point generation go
through the inverse CDF so the stream layout is one uniform per variate.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep unrelated consumers of the same (seed, replicate) pair on
# disjoint streams.
DOMAIN_POINTS = 1
DOMAIN_DYNAMICS = 2
DOMAIN_PILOT = 3
DOMAIN_TEST = 4
DOMAIN_STATS = 5


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Return a Generator for the substream identified by ``key``.

    Parameters
    ----------
    master_seed : int
        Master seed of the run.
    *key : int
        Hierarchical stream coordinates, e.g. (domain, replicate, block).
    """
    if not all(isinstance(k, (int, np.integer)) and k >= 0 for k in key):
        raise ValueError(f"stream key must be nonnegative ints, got {key!r}")
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def exponential_inverse_cdf(u: np.ndarray) -> np.ndarray:
    """Unit-exponential variates from uniforms in [0, 1) via inverse CDF."""
    return -np.log1p(-u)


def draw_exponentials(rng: np.random.Generator, n: int) -> np.ndarray:
    """n unit-exponential draws, inverse-CDF on the raw uniform stream."""
    return exponential_inverse_cdf(rng.random(n))
