"""Exception types shared across the package."""


class CsdflowError(Exception):
    """Base class for all csdflow errors."""


class GeometryError(CsdflowError):
    """Base class for invalid-surface conditions."""


class TooFewNodes(GeometryError):
    """Profile has fewer sample points than the discretization needs."""


class AxisViolation(GeometryError):
    """Profile touches or crosses the rotation axis where it must not."""


class SelfIntersection(GeometryError):
    """Profile polyline intersects itself."""


class PoleSlopeError(GeometryError):
    """Profile does not meet the axis perpendicularly at a pole."""


class BadParameter(CsdflowError):
    """Constructor or operation parameter outside its admissible range."""


class DegenerateGeometry(GeometryError):
    """Geometry evaluation produced non-finite or degenerate values."""


class OutOfRange(CsdflowError):
    """Evaluation requested outside the supported domain."""


class TooFewSnapshots(CsdflowError):
    """Trajectory does not carry enough snapshots for the requested analysis."""


class TooFewExperiments(CsdflowError):
    """Fit requested on too few (rho, T) experiments."""


class CorruptInput(CsdflowError):
    """A data file (snapshot, table, ...) is unreadable or malformed."""


class WindowInvalid(CsdflowError):
    """Snapshot window is not usable for fixed-gauge time differencing."""


class InvalidConfig(CsdflowError):
    """Run configuration violates an invariant."""


class ConfigParse(CsdflowError):
    """Configuration text could not be parsed."""
