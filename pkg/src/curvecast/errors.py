"""Exception hierarchy for curvecast.

Every domain-specific failure mode gets its own class so callers can react
to individual conditions; all inherit from CurvecastError.
"""


class CurvecastError(Exception):
    """Base class for all curvecast errors."""


class MissingCellError(CurvecastError):
    """A panel cell is empty and the missing-data policy is 'reject'."""


class NonPositivePriceError(CurvecastError):
    """A price-scale panel contains a value <= 0."""


class DuplicateDateError(CurvecastError):
    """The same date appears more than once in an input file."""


class UnparseableRowError(CurvecastError):
    """A CSV row cannot be parsed (bad date, bad number, wrong width)."""


class WrongScaleError(CurvecastError):
    """A transform was applied to a panel on the wrong scale."""


class EmptyIntersectionError(CurvecastError):
    """Two panels share no dates."""


class NonOrthonormalSpecError(CurvecastError):
    """Synthetic-panel eigenfunctions are not orthonormal under the grid."""


class AllZeroEigenvaluesError(CurvecastError):
    """Covariance decomposition produced no positive eigenvalues."""


class GridMismatchError(CurvecastError):
    """Panel and fitted model disagree on tenor nodes."""


class NumericalFailureError(CurvecastError):
    """A numerical routine (eigensolver) failed to converge."""


class InadmissibleParamsError(CurvecastError):
    """Smoothing parameters lie outside the admissible region."""


class SingularDesignError(CurvecastError):
    """A regression design matrix is rank deficient."""


class ZeroDenominatorError(CurvecastError):
    """A scaled-error denominator is zero (constant in-sample series)."""


class CoverageMismatchError(CurvecastError):
    """Forecast records do not cover identical (date, tenor) cells."""


class IoFailureError(CurvecastError):
    """Report emission failed to write a file."""
