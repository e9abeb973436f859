"""Format strings and the skeleton fragments they induce."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .automata import Symbol
from .efsm import Origin
from .errors import UnsupportedFormatError

_DIRECTIVES = {"d": Symbol.INT, "f": Symbol.FLOAT}


@dataclass(frozen=True)
class Directive:
    value_type: Symbol

    def __post_init__(self) -> None:
        if self.value_type not in (Symbol.INT, Symbol.FLOAT):
            raise UnsupportedFormatError(f"directives produce int or float, not {self.value_type}")


INT = Directive(Symbol.INT)
FLOAT = Directive(Symbol.FLOAT)


def parse_format(fmt: str) -> list[Directive]:
    """``%d`` and ``%f`` in order of appearance; whitespace is ignored."""
    out = []
    i = 0
    while i < len(fmt):
        ch = fmt[i]
        if ch.isspace():
            i += 1
            continue
        if ch != "%":
            raise UnsupportedFormatError(f"unsupported literal {ch!r} at offset {i} in {fmt!r}")
        if i + 1 >= len(fmt):
            raise UnsupportedFormatError(f"dangling '%' at end of {fmt!r}")
        conv = fmt[i + 1]
        if conv not in _DIRECTIVES:
            raise UnsupportedFormatError(f"unsupported directive '%{conv}' at offset {i} in {fmt!r}")
        out.append(Directive(_DIRECTIVES[conv]))
        i += 2
    return out


@dataclass(frozen=True)
class FragmentEdge:
    source: int
    symbol: Symbol
    target: int
    origin: Origin = Origin.DIRECTIVE
    directive: Optional[int] = None


@dataclass(frozen=True)
class SkeletonFragment:
    """An NFA piece with local integer states, one entry and one exit."""

    states: tuple[int, ...]
    entry: int
    exit: int
    edges: tuple[FragmentEdge, ...]

    def directive_edges(self) -> tuple[FragmentEdge, ...]:
        return tuple(e for e in self.edges if e.origin is Origin.DIRECTIVE)

    def erase_effects(self) -> "SkeletonFragment":
        """Drop API-effect edges and any states only they reach."""
        edges = self.directive_edges()
        keep = {self.entry} | {e.target for e in edges}
        exit_ = max(keep) if edges else self.entry
        return SkeletonFragment(tuple(sorted(keep)), self.entry, exit_, edges)


def fragment_for(directives: Sequence[Directive]) -> SkeletonFragment:
    edges = tuple(
        FragmentEdge(i, d.value_type, i + 1, Origin.DIRECTIVE, i) for i, d in enumerate(directives)
    )
    n = len(directives)
    return SkeletonFragment(tuple(range(n + 1)), 0, n, edges)
