"""Exception types raised by cellgame."""


class CellGameError(Exception):
    """Base class for all cellgame errors."""


class DomainError(CellGameError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(CellGameError, ValueError):
    """An instance does not belong to the special case an operation needs."""


class SizeError(CellGameError):
    """Exhaustive enumeration would exceed the configured profile cap."""


class ValidationError(CellGameError, ValueError):
    """An instance or scenario violates a named invariant."""

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"[{invariant}] {message}")


class ScenarioParseError(CellGameError):
    """A scenario file could not be parsed."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ConvergenceError(CellGameError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)
