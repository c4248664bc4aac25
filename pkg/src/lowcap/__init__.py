"""Finite-blocklength bounds and polar coding for low-capacity channels."""
from .bounds_awgn import AwgnQuery, shannon_limit_ebn0
from .bounds_bec import BecQuery
from .bounds_bsc import BscQuery
from .channels import BEC, BIAWGN, BSC, RngStream, capacity, transmit
from .numerics import NoSignChange, NumericalFailure
from .polar import (
    PolarSpec,
    construct,
    encode,
    fast_decode,
    fast_encode,
    implicit_repetition_factor,
    min_distance,
    sc_decode,
    scl_decode,
)
from .results import BlocklengthInterval, BoundResult

__version__ = "0.1.0"

__all__ = [
    "AwgnQuery", "BEC", "BIAWGN", "BSC", "BecQuery", "BlocklengthInterval", "BoundResult",
    "BscQuery", "NoSignChange", "NumericalFailure", "PolarSpec", "RngStream", "capacity",
    "construct", "encode", "fast_decode", "fast_encode", "implicit_repetition_factor",
    "min_distance", "sc_decode", "scl_decode", "shannon_limit_ebn0", "transmit", "__version__",
]
