"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for all structured errors raised by this package."""


class ShapeError(GeometryError):
    """Array arguments have incompatible or invalid shapes."""


class ParameterError(GeometryError):
    """A scalar parameter is outside its admissible range."""


class StructureError(GeometryError):
    """Input data violates a structural precondition (closure, reductivity, ...)."""


class TorsionClassError(StructureError):
    """The Nijenhuis tensor is not totally skew, so no metric connection
    with totally skew-symmetric torsion preserves the given structure."""
