"""Field solvers and trap-characterisation tools for planar linear RF ion traps."""

__version__ = "0.1.0"

from .core import (CONSTANTS, DriveConfig, IonSpecies, MaterialProps, TrapGeometry,  # noqa: E402
                   derive_ratios)

__all__ = ["CONSTANTS", "DriveConfig", "IonSpecies", "MaterialProps", "TrapGeometry",
           "derive_ratios", "__version__"]
