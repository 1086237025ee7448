"""Exception types shared across the package."""


class IsingNqsError(Exception):
    """Base class for all package-specific failures."""


class StuckChainError(IsingNqsError):
    """A Markov chain produced a constant (or near-constant) observable series."""

    def __init__(self, reason: str):
        super().__init__(f"chain flagged as stuck: {reason}")
        self.reason = reason


class ChainTooShortError(IsingNqsError):
    """No self-consistent autocorrelation window exists within half the series."""


class EnumerationSizeError(IsingNqsError):
    """An exhaustive oracle was asked to enumerate beyond its hard size guard."""


class ExclusionThresholdError(IsingNqsError):
    """Too many chains were excluded for the aggregate to be trustworthy."""


class NumericalError(IsingNqsError):
    """A solve or estimate produced non-finite values."""


class IntervalSelectionError(IsingNqsError):
    """The sampling-interval search exhausted its budget without converging."""
