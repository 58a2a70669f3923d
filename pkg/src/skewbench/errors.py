"""Exception hierarchy for SkewBench.

Every error raised by the package derives from :class:`SkewBenchError`, and
from the builtin it refines (``ValueError`` for bad input, ``ArithmeticError``
for numeric breakdowns), so callers can catch either.
"""


class SkewBenchError(Exception):
    """Base class for all SkewBench errors"""


class InvalidArgumentError(SkewBenchError, ValueError):
    """An argument has the wrong shape, range or content"""


class InfeasibleImbalanceError(SkewBenchError, ValueError):
    """An imbalance protocol would leave a class with no samples"""


class ConfigError(SkewBenchError, ValueError):
    """Experiment configuration failed validation"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class ParseError(SkewBenchError, ValueError):
    """A data file or checkpoint could not be parsed"""


class MagicMismatchError(ParseError):
    """IDX header carries an unexpected magic number"""


class TruncatedPayloadError(ParseError):
    """File ends before the declared payload"""


class NonNumericCellError(ParseError):
    """CSV cell that should be numeric is not"""


class MissingLabelColumnError(ParseError):
    """CSV header has no ``label`` column"""


class CountMismatchError(ParseError):
    """Image and label files disagree on the number of items"""


class NumericDegeneracyError(SkewBenchError, ArithmeticError):
    """A numeric operation hit a degenerate value (e.g. a zero weight vector)"""


class DegenerateGeometryError(NumericDegeneracyError):
    """Boundary geometry is undefined for the given weight vectors"""
