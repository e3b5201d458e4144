"""Exception types shared across the beamsim package."""


class BeamSimError(Exception):
    """Base class for all beamsim errors."""


# geometry
class FrameMismatch(BeamSimError):
    """Transform composition attempted across non-chaining frames."""


class PointAtInfinity(BeamSimError):
    """Projective map sent a point to (or numerically near) infinity."""


class DegenerateConfiguration(BeamSimError):
    """Point configuration does not determine the requested estimate."""


class BehindCamera(BeamSimError):
    """No sign choice places the decoded plane in front of the camera."""


# numeric guards
class NonPositiveInput(BeamSimError):
    """An argument that must be strictly positive was not."""


class NonPositiveDistance(NonPositiveInput):
    """A distance that must be strictly positive was not."""


class TangentSingularity(BeamSimError):
    """Angle too close to +-90 deg for the tangent model."""


class OutOfRange(BeamSimError):
    """Value outside the mechanically allowed range."""


# simulation
class NoMarkersVisible(BeamSimError):
    """Tracking lost: no marker observation to work with."""


class InsufficientCorrespondences(BeamSimError):
    """Fewer than four usable correspondences survived decoding."""


class ConfigInvalid(BeamSimError):
    """Scenario or pipeline configuration failed validation."""


class EmptyTrace(BeamSimError):
    """Trace holds too few samples for statistics."""


# imaging
class DegenerateHomography(BeamSimError):
    """Homography is not invertible; cannot warp."""


class AngleOutOfRange(BeamSimError):
    """Edge slant outside the usable 2..10 degree window."""


class NoEdgeFound(BeamSimError):
    """Region of interest holds no usable slanted edge."""


class ProfileTooShort(BeamSimError):
    """Edge profile too short for spectrum analysis."""


class NoHalfContrastCrossing(BeamSimError):
    """MTF never falls through half contrast below Nyquist."""
