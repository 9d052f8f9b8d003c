"""Exception hierarchy and the CLI exit codes they map to."""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4


class PrefAggError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = EXIT_VALIDATION


class InvalidArgumentError(PrefAggError, ValueError):
    pass


class UnknownAlternativeError(PrefAggError, LookupError):
    pass


class UnsupportedCombinationError(InvalidArgumentError):
    pass


class IncompleteCoverageError(InvalidArgumentError):
    """Some unordered pair of alternatives was never compared."""

    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(f"{{{a}, {b}}}" for a, b in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"pairs without observations: {shown}{more}")


class NonConvergenceError(PrefAggError, RuntimeError):
    """Solver hit ``max_iters``; carries the best iterate and its report."""

    exit_code = EXIT_NONCONVERGENCE

    def __init__(self, message, rewards=None, report=None):
        super().__init__(message)
        self.rewards = rewards
        self.report = report
