"""Exception hierarchy.

Every error carries a machine-readable ``code`` (the class name) and the
process exit status the CLI maps it to:

* 1 -- certification failure (a hypothesis or frame inequality does not hold)
* 2 -- input error (malformed document, bad constants, shape problems)
* 3 -- numerical breakdown (singular or ill-conditioned operators)
"""


class BiFrameError(Exception):
    exit_code = 3

    @property
    def code(self):
        return type(self).__name__


class InputError(BiFrameError):
    exit_code = 2


class CertificationError(BiFrameError):
    exit_code = 1


class NumericalError(BiFrameError):
    exit_code = 3


# input problems
class SchemaError(InputError):
    pass


class DimMismatch(InputError):
    pass


class NonPositiveWeight(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


class BadConstants(InputError):
    pass


class BadInputs(InputError):
    pass


class CapViolated(InputError):
    pass


class EmptyList(InputError):
    pass


class ZeroCoefficient(InputError):
    pass


# certification failures
class NotRealForm(CertificationError):
    pass


class NormTooSmall(CertificationError):
    pass


class RangeFail(CertificationError):
    pass


class CommutationFail(CertificationError):
    pass


class NotTight(CertificationError):
    pass


class RankDeficientK(CertificationError):
    pass


class HypothesisFail(CertificationError):
    pass


class NotPositive(CertificationError):
    pass


class NotPSD(CertificationError):
    pass


class NotAFrame(CertificationError):
    pass


class CertificateViolation(CertificationError):
    """An emitted bound exceeds the computed optimum."""


# numerical breakdown
class Singular(NumericalError):
    pass


class NotInvertible(NumericalError):
    pass


class SingularPhi(NumericalError):
    pass


class NumericalBreakdown(NumericalError):
    pass
