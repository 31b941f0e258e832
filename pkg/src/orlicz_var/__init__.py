"""Orlicz-space calculus, fractional energy discretization, and the singular
minimization toolkit behind the `orlicz-var` experiment runner."""

__version__ = "0.1.0"

from .nfunc import (  # noqa: F401
    NonFinite,
    BracketFailure,
    NFunction,
    Power,
    PowerLog,
    MaxPower,
    SumPower,
    ExpSquare,
    Tabulated,
    Scaled,
    SampledFunction,
    nfunction_from_dict,
    nfunction_to_dict,
)
