"""Quantum-dot biexciton cascade dynamics and time-bin entanglement analysis."""

from ._qdent import *  # noqa: F401,F403
from ._qdent import ConfigError, InvalidArgument, NumericalError  # noqa: F401

__version__ = "0.1.0"
