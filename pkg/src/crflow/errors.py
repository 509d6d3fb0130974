"""Exception hierarchy shared by every module."""


class CRFlowError(Exception):
    """Base class for all library errors."""


class DomainError(CRFlowError, ValueError):
    """An input lies outside the domain of the requested operation."""


class SingularityError(DomainError):
    """Evaluation at a point where the function has a pole."""


class NumericError(CRFlowError, ArithmeticError):
    """A computation produced a non-finite value."""


class UnsupportedConfigurationError(CRFlowError):
    """The requested shape/region combination has no evaluation route."""


class ValidationError(CRFlowError, ValueError):
    """A gluing description does not define a valid closed pseudo-manifold.

    ``tet`` and ``item`` name the offending simplex when known.
    """

    def __init__(self, message, tet=None, item=None):
        super().__init__(message)
        self.tet = tet
        self.item = item

    def to_dict(self):
        return {"message": str(self), "tet": self.tet, "item": self.item}


class NotRealizableError(DomainError):
    """A tetrahedron metric is not in the realizable region."""

    def __init__(self, message, tet=None, degeneration=None):
        super().__init__(message)
        self.tet = tet
        self.degeneration = degeneration
