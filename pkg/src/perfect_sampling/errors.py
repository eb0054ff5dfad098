"""Exception hierarchy shared by every module of the package."""


class PerfectSamplingError(Exception):
    pass


class NonStochasticRow(PerfectSamplingError, ValueError):
    pass


class NotStationary(PerfectSamplingError, ValueError):
    pass


class NoUniqueStationary(PerfectSamplingError, ValueError):
    pass


class ZeroMassState(PerfectSamplingError, ValueError):
    pass


class BadWeights(PerfectSamplingError, ValueError):
    pass


class KernelMismatch(PerfectSamplingError, ValueError):
    pass


class DriverMismatch(PerfectSamplingError, TypeError):
    pass


class ImpossibleTransition(PerfectSamplingError, ValueError):
    pass


class EnumerationTooLarge(PerfectSamplingError):
    pass


class IrrationalEntries(PerfectSamplingError, ValueError):
    pass


class NoOrder(PerfectSamplingError, ValueError):
    pass


class NotMonotone(PerfectSamplingError, ValueError):
    pass


class NoBounds(PerfectSamplingError, ValueError):
    pass


class TooFewSamples(PerfectSamplingError, ValueError):
    pass


class WindowLimitExceeded(PerfectSamplingError):
    pass


class MaxAttemptsExceeded(PerfectSamplingError):
    """Raised by the retry loop; ``attempts`` holds the full log of failed tries."""

    def __init__(self, attempts):
        self.attempts = list(attempts)
        super().__init__(f"no acceptance after {len(self.attempts)} attempts")
