"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A raw model input is non-finite or violates its sign constraint."""


class DomainError(ValueError):
    """An operation was called outside its domain of validity."""


class CertificateError(RuntimeError):
    """Certificate construction failed an admissibility or consistency check."""


class IntegrationError(RuntimeError):
    """Numerical integration produced a non-finite state."""
