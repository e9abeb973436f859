"""Replay kernels for deterministic EFSMs.

The compiled extension is used when it imports; otherwise the pure-Python
kernel with the identical contract takes over.
"""

from __future__ import annotations

from types import ModuleType

from . import _pykernel
from .program import (
    GUARD_ALARM,
    STRUCTURAL_ALARM,
    Ineligible,
    Program,
    compile_machine,
    encode_trace,
)

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernel}
if _ckernel is not None:
    BACKENDS["native"] = _ckernel

DEFAULT: ModuleType = BACKENDS.get("native", _pykernel)
HAVE_NATIVE = _ckernel is not None


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


__all__ = [
    "BACKENDS", "DEFAULT", "GUARD_ALARM", "HAVE_NATIVE", "STRUCTURAL_ALARM",
    "Ineligible", "Program", "compile_machine", "encode_trace", "get_backend",
]
