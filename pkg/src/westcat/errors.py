"""Exception hierarchy shared by all westcat modules."""


class WestcatError(Exception):
    """Base class for every error raised by the package."""


class GridError(WestcatError, ValueError):
    """Malformed grid definition (bad dimension, extent or node count)."""


class NegativeWeightError(WestcatError, ValueError):
    """A weight expected to be nonnegative was negative somewhere."""


class NonpositiveMassWeightError(WestcatError, ValueError):
    pass


class NotTridiagonalError(WestcatError, ValueError):
    pass


class NumericBreakdownError(WestcatError, ArithmeticError):
    """NaN or Inf appeared inside an iterative solver."""


class ConvergenceError(WestcatError, RuntimeError):
    pass


class SolverFailure(ConvergenceError):
    """A linear solve inside a time step did not reach its tolerance."""


class PicardNoConvergence(ConvergenceError):
    pass


class HBelowFloorError(WestcatError, ValueError):
    """The squared sound speed dropped below the validated floor h1."""


class TemperatureRangeError(HBelowFloorError):
    """A run's temperature left the range the medium was validated on."""


class DegeneracyError(WestcatError):
    """The coefficient 1 - 2 k(theta) p left the admissible window."""

    def __init__(self, message, min_coeff=None, max_coeff=None, step=None):
        super().__init__(message)
        self.min_coeff = min_coeff
        self.max_coeff = max_coeff
        self.step = step


class DegenerateInitialData(DegeneracyError):
    pass


class TauZeroError(WestcatError, ValueError):
    pass


class InsufficientHistoryError(WestcatError, ValueError):
    pass


class NonpositiveSampleError(WestcatError, ValueError):
    pass


class TooFewSamplesError(WestcatError, ValueError):
    pass


class ConfigError(WestcatError, ValueError):
    """Base class for configuration problems (CLI exit code 1)."""


class ConfigParseError(ConfigError):
    def __init__(self, message, lines=()):
        super().__init__(message)
        self.lines = tuple(lines)


class UnknownKeyError(ConfigError):
    def __init__(self, key, line):
        super().__init__(f"unknown key {key!r} on line {line}")
        self.key = key
        self.line = line


class InvalidValueError(ConfigError):
    def __init__(self, key, reason):
        super().__init__(f"invalid value for {key!r}: {reason}")
        self.key = key


class AssumptionViolation(ConfigError):
    """The medium failed coefficient validation on the configured range."""

    def __init__(self, report):
        super().__init__("medium assumptions violated: " + "; ".join(report.failures))
        self.report = report


class StudyRunFailed(WestcatError, RuntimeError):
    """One run of a multi-run study did not complete."""

    def __init__(self, termination, message):
        super().__init__(f"{termination}: {message}")
        self.termination = termination
