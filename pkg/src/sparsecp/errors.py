"""Exception hierarchy for sparsecp.

NumericalError subclasses signal failures of the solvers themselves
(ill-conditioned or degenerate inputs); DataError subclasses signal
problems with user-supplied data before any numerics run.
"""


class SparseCPError(Exception):
    """Base class for all sparsecp errors."""


class DataError(SparseCPError):
    """Invalid or unparseable input data."""


class ParseError(DataError):
    """CSV could not be parsed; message carries row/column location."""


class MissingResponse(DataError):
    """The response column is absent or empty where a label is required."""


class NonNumericCell(DataError):
    """A data cell could not be interpreted as a number."""


class DimensionMismatch(DataError):
    """Array shapes are inconsistent with each other."""


class NumericalError(SparseCPError):
    """Failure inside a numerical routine."""


class SingularGram(NumericalError):
    """Active-set Gram matrix is numerically singular (collinear columns)."""


class DegenerateDesign(NumericalError):
    """The response is orthogonal to every column: no variable can activate."""


class InvalidPenalty(NumericalError):
    """Penalty weight is outside its valid range."""


class EmptyPath(NumericalError):
    """The regularization path has no transition points."""


class AllUnbounded(NumericalError):
    """Every candidate conformal set has infinite Lebesgue measure."""
