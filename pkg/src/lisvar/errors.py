"""Exception and warning types raised across the package."""

from __future__ import annotations


class LisvarError(Exception):
    """Base class for all package errors."""


class NotPositiveSemiDefinite(LisvarError):
    pass


class SingularA0(LisvarError):
    pass


class SingularSigma(LisvarError):
    pass


class Unstable(LisvarError):
    """Raised when an infinite-horizon quantity is requested for a non-stationary VAR."""


class RankDeficientRegressors(LisvarError):
    pass


class ShortRegime(LisvarError):
    pass


class DimensionMismatch(LisvarError):
    pass


class SpecParseError(LisvarError):
    """Restriction file problem; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class InvalidRestriction(LisvarError):
    pass


class NotRecursive(LisvarError):
    pass


class NotTriangular(LisvarError):
    pass


class NotAdmissible(LisvarError):
    """Q does not satisfy the equality restrictions, so rank verdicts are meaningless."""


class NotPartitioned(LisvarError):
    pass


class NoRealSolution(LisvarError):
    pass


class RankDeficient(LisvarError):
    """Sequential rank condition fails at a given level of the triangular construction."""

    def __init__(self, index: int, rank: int, required: int):
        self.index = index
        self.rank = rank
        self.required = required
        super().__init__(
            f"rank of the stacked restriction matrix at level {index} is {rank}, "
            f"expected {required}; the model is not locally identified there"
        )


class OrderConditionViolated(LisvarError):
    pass


class DimensionTooLarge(LisvarError):
    pass


class EmptyIdentifiedSet(LisvarError):
    pass


class ImproperPosterior(LisvarError):
    pass


class AllDrawsEmpty(LisvarError):
    pass


class TooFewSamples(LisvarError):
    pass


class LisvarWarning(UserWarning):
    pass


class UnstableWarning(LisvarWarning):
    pass


class AmbiguousNormalization(LisvarWarning):
    pass


class NearDegenerateEigenvalues(LisvarWarning):
    pass


class DegenerateVariance(LisvarWarning):
    pass
