"""Antisymmetric Rabi spectroscopy of interacting collective spins."""
__version__ = "0.1.0"

from .dynamics import RabiParams, evolve, propagator, rotate  # noqa: E402
from .errors import (ConfigError, DimensionMismatchError, InvalidParameterError,  # noqa: E402
                     NoOptimumError, NoRootError, PropagationError, RabiSpecError)
from .protocols import (NoiseModel, PulseSpec, RamseyOatSpec, locate_antisymmetric_point,  # noqa: E402
                        measure, precision_numeric, ramsey_oat_reference, run_rabi)
from .spin import DickeState, build_operator, coherent_state, dicke_state, moments  # noqa: E402

__all__ = [
    "ConfigError", "DickeState", "DimensionMismatchError", "InvalidParameterError", "NoOptimumError",
    "NoRootError", "NoiseModel", "PropagationError", "PulseSpec", "RabiParams", "RabiSpecError",
    "RamseyOatSpec", "build_operator", "coherent_state", "dicke_state", "evolve",
    "locate_antisymmetric_point", "measure", "moments", "precision_numeric", "propagator",
    "ramsey_oat_reference", "rotate", "run_rabi",
]
