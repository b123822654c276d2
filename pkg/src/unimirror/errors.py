"""Exception types shared across the simulation backends."""


class UnimirrorError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(UnimirrorError, ValueError):
    pass


class CapacityError(UnimirrorError):
    """Requested system is larger than the backend is configured to hold."""


class ImpossibleOutcomeError(UnimirrorError):
    """A projection has (numerically) zero probability for the current state.

    ``layer`` and ``qubit`` are filled in when the failure happens inside a
    circuit run, so the offending record entry can be located.
    """

    def __init__(self, message, layer=None, qubit=None):
        self.layer = layer
        self.qubit = qubit
        if layer is not None:
            message = f"{message} (layer {layer}, qubit {qubit})"
        super().__init__(message)


class CorruptedStateError(UnimirrorError):
    pass


class CircuitFormatError(UnimirrorError, ValueError):
    """Malformed circuit JSON. ``field`` / ``line`` locate the problem."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)
