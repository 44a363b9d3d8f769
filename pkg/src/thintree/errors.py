"""Exception types raised by the library.

Every error carries its class name as the contract error name, which is what
the command line reports on exit code 1.
"""


class ThinTreeError(Exception):
    """Base class for all contract errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class EmptySide(ThinTreeError, ValueError):
    pass


class DegenerateDegree(ThinTreeError, ValueError):
    pass


class TooLarge(ThinTreeError, ValueError):
    pass


class TooSmall(ThinTreeError, ValueError):
    pass


class InvalidParameter(ThinTreeError, ValueError):
    pass


class GraphFormatError(ThinTreeError, ValueError):
    pass


class Disconnected(ThinTreeError, ValueError):
    pass


class OutOfRange(ThinTreeError, ValueError):
    pass


class NotPsd(ThinTreeError, ValueError):
    pass


class Indivisible(ThinTreeError, ValueError):
    pass


class InfeasibleDegree(ThinTreeError, ValueError):
    pass


class UnknownNode(ThinTreeError, KeyError):
    pass


class InvalidHierarchy(ThinTreeError, ValueError):
    pass


class InconsistentLeafMap(ThinTreeError, ValueError):
    pass


class NoLowDegreeVertex(ThinTreeError, RuntimeError):
    pass


class PreconditionFailed(ThinTreeError, ValueError):
    pass


class ExtractionFailed(ThinTreeError, RuntimeError):
    pass


class SolverStalled(ThinTreeError, RuntimeError):
    pass


class InvalidInstance(ThinTreeError, ValueError):
    pass


class ZeroDenominator(ThinTreeError, ZeroDivisionError):
    pass


class BadDistribution(ThinTreeError, ValueError):
    pass


class BadWitness(ThinTreeError, ValueError):
    pass


class CertificateMismatch(ThinTreeError, RuntimeError):
    pass


class DegenerateEmbedding(ThinTreeError, ValueError):
    pass


class NotBad(ThinTreeError, ValueError):
    pass


class FileNotFound(ThinTreeError, FileNotFoundError):
    pass
