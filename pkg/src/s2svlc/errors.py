"""Exception hierarchy shared by every module."""


class S2SVLCError(Exception):
    """Base class for all errors raised by this package."""


# raster
class ImageNotFound(S2SVLCError, FileNotFoundError):
    pass


class UnsupportedFormat(S2SVLCError, ValueError):
    pass


class ImageIOError(S2SVLCError, OSError):
    pass


# frame codec
class EmptyPayload(S2SVLCError, ValueError):
    pass


class LayoutInvalid(S2SVLCError, ValueError):
    pass


class DimensionMismatch(S2SVLCError, ValueError):
    pass


class MissingFrame(S2SVLCError, ValueError):
    pass


class OddBitCount(S2SVLCError, ValueError):
    pass


# channel
class DegenerateGeometry(S2SVLCError, ValueError):
    pass


class CalibrationFailed(S2SVLCError, RuntimeError):
    pass


# pipeline
class NotRGB(S2SVLCError, ValueError):
    pass


class EmptyImage(S2SVLCError, ValueError):
    pass


class DegenerateSize(S2SVLCError, ValueError):
    pass


# roi
class MarkersNotFound(S2SVLCError, RuntimeError):
    pass


class AmbiguousOrientation(S2SVLCError, RuntimeError):
    pass


class SingularHomography(S2SVLCError, ValueError):
    pass


# harness
class LengthMismatch(S2SVLCError, ValueError):
    pass
