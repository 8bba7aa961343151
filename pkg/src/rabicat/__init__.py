"""Truncated-Fock laboratory for the generalized quantum Rabi model with and without the A^2 term."""

from .exceptions import RabicatError
from .fock import LinearOperator, StateVector, Truncation
from .models import CouplingPolicy, ModelParams

__all__ = ["CouplingPolicy", "LinearOperator", "ModelParams", "RabicatError", "StateVector", "Truncation"]
__version__ = "0.1.0"
