"""Monitored random circuits, truncated MPS approximations, unitary mirrors and entanglement bounds."""

from .circuit import CircuitInstance, GateSpec, deserialize, sample_instance, serialize
from .errors import (
    CapacityError,
    CircuitFormatError,
    CorruptedStateError,
    ImpossibleOutcomeError,
    InvalidSizeError,
    UnimirrorError,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CircuitFormatError",
    "CircuitInstance",
    "CorruptedStateError",
    "GateSpec",
    "ImpossibleOutcomeError",
    "InvalidSizeError",
    "UnimirrorError",
    "deserialize",
    "sample_instance",
    "serialize",
]
