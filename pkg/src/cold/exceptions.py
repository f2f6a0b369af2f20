"""Exception hierarchy shared across the package."""


class ColdError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(ColdError, ValueError):
    pass


class ParallelLinesError(GeometryError):
    """Two lines do not intersect (straight configuration)."""


class DegenerateSegmentError(GeometryError):
    pass


class TooFewPointsError(ColdError, ValueError):
    pass


class SelfIntersectingError(ColdError, ValueError):
    """A boundary offset exceeds the radius of an arc it follows."""


class OffRoadError(ColdError, ValueError):
    pass


class EndOfRoadError(ColdError):
    """A vehicle moved past the end of the road."""


class FusionError(ColdError, ValueError):
    pass


class EmptyOverlapError(FusionError):
    pass


class CoincidentPointsError(FusionError):
    pass


class IllConditionedError(FusionError):
    pass


class FrameMismatchError(ColdError, ValueError):
    pass


class EmptyInputError(ColdError, ValueError):
    pass
