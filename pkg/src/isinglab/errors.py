"""Exception types shared across the package."""


class IsingLabError(Exception):
    pass


class MeshTooCoarse(IsingLabError):
    """No full lattice face fits inside the continuous shape."""


class MarkedPointOutside(IsingLabError):
    """The marked point is not strictly inside the shape."""


class NotBoundary(IsingLabError):
    pass


class DiagramTouchesBoundary(IsingLabError):
    pass


class TooManyFaces(IsingLabError):
    pass


class TooManyEdges(IsingLabError):
    pass


class ZeroDenominator(IsingLabError):
    pass


class MissingValues(IsingLabError):
    pass


class NotHarmonic(IsingLabError):
    pass


class SingularSystem(IsingLabError):
    """The BVP linear system is singular; indicates a bug, not bad input."""


class ResidualTooLarge(IsingLabError):
    pass


class EmptyTarget(IsingLabError):
    pass


class QuadratureNotConverged(IsingLabError):
    pass


class TruncationTooSmall(IsingLabError):
    pass


class SeriesNotConverged(IsingLabError):
    pass


class UnsupportedPosition(IsingLabError):
    pass


class NotConverged(IsingLabError):
    pass


class NotConverging(IsingLabError):
    pass


class MissingKernelEntry(IsingLabError):
    pass


class NotAntisymmetric(IsingLabError):
    pass


class Disconnected(IsingLabError):
    pass


class TooLarge(IsingLabError):
    pass


class DegenerateMagnetization(IsingLabError):
    pass


class BoundaryTooClose(IsingLabError):
    pass


class InsufficientPoints(IsingLabError):
    pass


class PointOutside(IsingLabError):
    pass


class FitUnstable(IsingLabError):
    pass
