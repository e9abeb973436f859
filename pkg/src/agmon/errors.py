"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class AgmonError(Exception):
    """Base class for all toolkit errors."""


class FormatError(AgmonError, ValueError):
    """A JSON document does not match the expected schema.

    ``path`` is a JSONPath-like locator (``$.transitions[2].guard[0]``) so the
    command line can point at the exact fault.
    """

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.message = message
        self.path = path

    def under(self, prefix: str) -> "FormatError":
        """Re-root the error path under ``prefix`` (used by nested loaders)."""
        tail = self.path[1:] if self.path.startswith("$") else self.path
        return FormatError(self.message, prefix + tail)


class ExprError(FormatError):
    """Malformed guard or update text."""


class EfsmError(AgmonError, ValueError):
    """An EFSM violates a structural invariant."""


class EvaluationError(AgmonError, TypeError):
    """A guard or update was evaluated over mismatched operand types."""


class UndeclaredChannelError(AgmonError, KeyError):
    """An event names a channel the machine does not declare."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "undeclared channel"


class EventTypeError(AgmonError, TypeError):
    """An event carries a value of the wrong type for its channel."""


class UnsupportedFormatError(AgmonError, ValueError):
    """A scanf-style format string uses something other than ``%d``/``%f``."""


class UnknownApiError(AgmonError, KeyError):
    """A CFG node refers to an I/O API that is not in the API table."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown api"


class CfgError(AgmonError, ValueError):
    """Structurally invalid control flow graph."""


class CoverageError(AgmonError, ValueError):
    """An annotation spec does not bind every directive transition."""


class ChannelTypeError(AgmonError, TypeError):
    """A directive of one value type was bound to a channel of another."""


class IncompatibleAlphabetError(AgmonError, ValueError):
    """Two machines cannot be compared because their channels disagree."""


class SessionHalted(AgmonError, RuntimeError):
    """``observe`` was called on a monitor session that already halted."""
