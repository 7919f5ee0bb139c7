"""Exception hierarchy with stable machine-readable error codes.

Every error carries a ``code`` (stable identifier for structured output) and
an ``exit_status`` used by the command-line front end: 2 for input problems,
3 for statistical degeneracy, 4 for internal failures.
"""


class WmdError(Exception):
    code = "internal-error"
    exit_status = 4


class InputError(WmdError):
    """Malformed user input (files, flags, scenario schemas)."""

    code = "input-error"
    exit_status = 2


class StatError(WmdError):
    """The requested statistic is undefined or inestimable on this data."""

    code = "statistical-degeneracy"
    exit_status = 3


class ParseError(InputError):
    code = "parse-error"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyFile(InputError):
    code = "empty-file"


class SchemaError(InputError):
    code = "schema-error"


class InvalidParams(InputError):
    code = "invalid-params"


class EmptySample(StatError):
    code = "empty-sample"


class DegenerateSample(StatError):
    code = "degenerate-sample"


class ZeroVariance(StatError):
    code = "zero-variance"


class WeightBlockMismatch(StatError):
    code = "weight-block-mismatch"


class SingularVariance(StatError):
    code = "singular-variance"


class SingularSystem(StatError):
    code = "singular-system"


class BootstrapFailure(StatError):
    code = "bootstrap-failure"


class DegenerateBhoj(StatError):
    code = "degenerate-bhoj"


class TooFewPairs(StatError):
    code = "too-few-pairs"


class AllZeroDifferences(StatError):
    code = "all-zero-differences"


class EmptyGroup(StatError):
    code = "empty-group"
