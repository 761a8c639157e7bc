"""Exception types shared across the package."""


class PilotwaveError(Exception):
    """Base class for all package errors."""


class PreconditionError(PilotwaveError, ValueError):
    """An operation was called with inputs violating its contract."""


class ResolutionError(PreconditionError):
    """Requested feature is too fine for the grid to resolve."""


class DomainError(PilotwaveError, ValueError):
    """State leaks outside the computational domain."""


class BlowupError(PilotwaveError, RuntimeError):
    """Non-finite amplitudes appeared during evolution."""


class ConfigError(PilotwaveError, ValueError):
    """Invalid scenario configuration. Collects every violation found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
