"""Exception types shared across the package.

Every error raised on a contract violation derives from MaxidError so callers
can distinguish library contract failures from programming errors.
"""


class MaxidError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MaxidError):
    """Invalid or inconsistent experiment configuration."""


class DegenerateModel(MaxidError):
    """Process spec has neither diffusion nor jumps (and was not built
    through the explicit constant-path test constructor)."""


class NonIntegrableJumps(MaxidError):
    """Jump distribution has no finite exponential moment."""


class HorizonExceeded(MaxidError):
    """Clock inversion asked for a time beyond the tabulated horizon."""


class BudgetExceeded(MaxidError):
    """Point generation exceeded the configured particle budget."""


class EmptySystem(MaxidError):
    """A particle system contains no particles above the floor."""


class VanishingInfimumProb(MaxidError):
    """Estimated infimum probability is zero; the exceedance constant is
    undefined at this depth. Callers should retry with a larger v."""


class TruncationBias(MaxidError):
    """Requested level is too close to the truncation floor for counts to be
    trusted."""


class GridMismatch(MaxidError):
    """Samples that must share an evaluation grid do not."""


class DimensionMismatch(MaxidError):
    """Two-sample operation received samples of different dimension."""


class NonMonotoneCdf(MaxidError):
    """A callable presented as a CDF decreased somewhere it was probed."""


class AllZero(MaxidError):
    """Count sample is identically zero; dispersion is undefined."""
