"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(DomainError):
    """A data object (pmf, channel, model) violates its invariants."""


class CapabilityError(RuntimeError):
    """The request is well-posed but exceeds an explicit size or accuracy guard."""
