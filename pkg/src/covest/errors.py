"""Exception hierarchy shared by all covest modules."""


class CovestError(Exception):
    """Base class for every error raised by covest."""


class NotHermitian(CovestError, ValueError):
    pass


class NoConvergence(CovestError, ArithmeticError):
    pass


class NegativeEigenvalue(CovestError, ValueError):
    pass


class SingularForNegativePower(CovestError, ValueError):
    pass


class DimensionMismatch(CovestError, ValueError):
    pass


class SizeCapExceeded(CovestError, ValueError):
    pass


class CapExceeded(SizeCapExceeded):
    pass


class SingularA(CovestError, ValueError):
    pass


class DegenerateEigenspace(CovestError, ValueError):
    pass


class NormalizationInfeasible(CovestError, ValueError):
    pass


class ZeroSuccessProbability(CovestError, ZeroDivisionError):
    pass


class CertificateFailed(CovestError):
    """Raised when a deterministic optimality certificate does not hold.

    ``component`` names the violated gate (``extremal``, ``dual``,
    ``trace_k``, ``trace_k_formula`` or ``dual_bound``).
    """

    def __init__(self, component, message):
        super().__init__(f"{component}: {message}")
        self.component = component


class OverlapOutOfRange(CovestError, ValueError):
    pass


class OrthogonalFiducial(CovestError, ValueError):
    pass


class EnvelopeViolation(CovestError, RuntimeError):
    pass


class ZeroConclusive(CovestError, RuntimeError):
    pass
