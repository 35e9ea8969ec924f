class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where the operation is defined."""


class EmptySetError(ValueError):
    """Raised when a dimension estimate is requested for an empty set."""


class ScaleRangeError(ValueError):
    """The scale policy leaves fewer than three usable box sizes."""
