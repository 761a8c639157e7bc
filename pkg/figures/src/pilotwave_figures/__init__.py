"""Publication-style figures from pilotwave run directories.

Figures consume only the emitted CSV/JSON files; the run manifest's
checksums guard against stale inputs.  Rendering never modifies inputs and
is idempotent.
"""

__version__ = "0.1.0"

from .spec import EmptyInputError, FigureSpec, SpecError, StaleInputError
from .render import FIGURE_KINDS, SCENARIO_KINDS, render

__all__ = [
    "__version__",
    "FigureSpec",
    "SpecError",
    "StaleInputError",
    "EmptyInputError",
    "FIGURE_KINDS",
    "SCENARIO_KINDS",
    "render",
]
