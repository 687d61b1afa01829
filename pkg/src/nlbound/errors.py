class ValidationError(ValueError):
    """Input violates a documented invariant (bad state, shape, parameter range)."""


class DomainError(RuntimeError):
    """A computation cannot proceed on the given domain, e.g. no sign change in a bracket."""
