"""Pilot-wave dynamics laboratory.

Deterministic beable trajectories guided by evolving wavefunctions, with
equilibrium/equivariance statistics, an explicit measurement model, and
relativistic / field-theory / lattice-jump generalizations.

Unit convention: hbar = m = 1 by default, overridable per state object.
All stochastic outputs are pure functions of (inputs, seed).
"""

__version__ = "0.1.0"

from .errors import (
    BlowupError,
    ConfigError,
    DomainError,
    PilotwaveError,
    PreconditionError,
    ResolutionError,
)

__all__ = [
    "__version__",
    "PilotwaveError",
    "PreconditionError",
    "ResolutionError",
    "DomainError",
    "BlowupError",
    "ConfigError",
]
