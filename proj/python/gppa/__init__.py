"""Generalized proximal point iterations, ALM and ADMM."""

from ._gppa import *  # noqa: F401,F403
from ._gppa import (
    CSchedule,
    Error,
    InsufficientData,
    InvalidArgument,
    LinearlyConstrainedQP,
    MonotoneOperator,
    NumericalError,
    SeparableQP,
)

__version__ = "0.1.0"
