"""Error taxonomy shared by the library and the CLI exit-code mapping."""


class RiscatError(Exception):
    """Base class for all library errors."""


class ValidationError(RiscatError, ValueError):
    """Invalid input: bad geometry, non-unitary configuration, malformed files."""


class NumericalError(RiscatError, RuntimeError):
    """A numerical operation failed (singular or hopelessly ill-conditioned system)."""
