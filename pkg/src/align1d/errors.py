"""Exception hierarchy shared by every module."""


class Align1DError(Exception):
    """Base class for all errors raised by align1d."""


class SingularityEvaluation(Align1DError):
    pass


class QuadratureFailure(Align1DError):
    pass


class InvalidKernel(Align1DError):
    pass


class InvalidGeometry(Align1DError):
    pass


class NonpositiveDensity(Align1DError):
    pass


class NonintegrableMass(Align1DError):
    pass


class OutOfDomain(Align1DError):
    pass


class BracketFailure(Align1DError):
    pass


class NotAViolation(Align1DError):
    pass


class NotMonotone(Align1DError):
    pass


class SingularContact(Align1DError):
    pass


class DeformationCollapse(Align1DError):
    pass


class HypothesisViolated(Align1DError):
    """A bound was evaluated outside the hypotheses under which it holds."""

    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class NotAdmissible(Align1DError):
    pass


class ConfigError(Align1DError):
    pass
