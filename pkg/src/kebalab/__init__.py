"""kebalab: a deterministic virtual laboratory for koncept-learning animats."""

from kebalab.core import (
    ACTIONS,
    Hierarchy,
    KebaParams,
    Koncept,
    StimulusSignal,
    membership,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIONS",
    "Hierarchy",
    "KebaParams",
    "Koncept",
    "StimulusSignal",
    "membership",
    "__version__",
]
