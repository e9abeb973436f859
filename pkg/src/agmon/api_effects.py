"""How I/O APIs reshape the input the application sees.

Two API families are modelled.  ``scanf``-style calls skip line breaks in
front of every item they read.  The ``getline`` + ``sscanf`` pattern, treated
as one call, reads a whole line: items past the format string are dropped
and the line break is always consumed at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .automata import Symbol
from .efsm import Efsm, Event, Origin
from .errors import FormatError, UnknownApiError, UnsupportedFormatError
from .fragments import Directive, FragmentEdge, SkeletonFragment, fragment_for

NEWLINE = "newline"


class ApiKind(str, Enum):
    SCANF_LIKE = "scanf_like"
    LINE_PATTERN = "line_pattern"


@dataclass(frozen=True)
class ApiModel:
    kind: ApiKind


SCANF_LIKE = ApiModel(ApiKind.SCANF_LIKE)
LINE_PATTERN = ApiModel(ApiKind.LINE_PATTERN)


class ApiTable(Mapping[str, ApiModel]):
    """Binds API identifiers used on CFG nodes to effect models."""

    def __init__(self, models: Mapping[str, ApiModel]):
        self._models = dict(models)

    def __getitem__(self, api: str) -> ApiModel:
        try:
            return self._models[api]
        except KeyError:
            raise UnknownApiError(f"unknown api {api!r}; table has {sorted(self._models)}") from None

    def __iter__(self):
        return iter(self._models)

    def __len__(self) -> int:
        return len(self._models)

    def __repr__(self) -> str:
        return f"ApiTable({self._models!r})"

    @classmethod
    def from_json(cls, doc: object) -> "ApiTable":
        if not isinstance(doc, dict):
            raise FormatError("api table must be an object mapping api name to kind")
        models = {}
        for name, kind in doc.items():
            try:
                models[name] = ApiModel(ApiKind(kind))
            except ValueError:
                raise FormatError(
                    f"unknown api kind {kind!r} (expected one of {[k.value for k in ApiKind]})",
                    f"$.{name}",
                ) from None
        return cls(models)

    def to_json(self) -> dict[str, str]:
        return {k: m.kind.value for k, m in self._models.items()}


DEFAULT_APIS = ApiTable({"scanf": SCANF_LIKE, "getline_sscanf": LINE_PATTERN})


def extended_fragment(model: ApiModel, directives: Sequence[Directive]) -> SkeletonFragment:
    plain = fragment_for(directives)
    edges = list(plain.edges)
    if model.kind is ApiKind.SCANF_LIKE:
        # newline skipping happens in front of each item, so every state a
        # directive leaves from gets the loop; the exit does not
        for e in plain.edges:
            edges.append(FragmentEdge(e.source, Symbol.NEWLINE, e.source, Origin.API_SELF_LOOP))
        return SkeletonFragment(plain.states, plain.entry, plain.exit, tuple(edges))
    if model.kind is ApiKind.LINE_PATTERN:
        last = plain.exit
        for sym in (Symbol.INT, Symbol.FLOAT):
            edges.append(FragmentEdge(last, sym, last, Origin.API_SELF_LOOP))
        end = last + 1
        edges.append(FragmentEdge(last, Symbol.NEWLINE, end, Origin.API_TERMINATOR))
        return SkeletonFragment(plain.states + (end,), plain.entry, end, tuple(edges))
    raise UnsupportedFormatError(f"no effect model for {model.kind}")


def build_external_efsm(cfg, apis: ApiTable, spec) -> Efsm:
    """Internal assumption with API effects spliced in: what the program really accepts."""
    from .skeleton import Mode, annotate, extract_skeleton

    return annotate(extract_skeleton(cfg, apis, Mode.API_EFFECTS), spec)


class AdaptedTrace(tuple):
    """Events delivered to the application, in order.

    Equal to a plain tuple of events.  ``line_counts`` holds, for the line
    pattern, how many values each line delivered (the in-band equivalent of
    sscanf's return value); ``short_read`` is set when some line delivered
    fewer than the format asked for.
    """

    line_counts: tuple[int, ...]
    short_read: bool

    def __new__(cls, events: Iterable[Event], line_counts: Sequence[int] = (), short_read: bool = False):
        self = super().__new__(cls, events)
        self.line_counts = tuple(line_counts)
        self.short_read = short_read
        return self


def split_lines(external: Sequence[Event], newline: str = NEWLINE) -> list[list[Event]]:
    """Value events grouped by line; a trailing unterminated line counts."""
    lines: list[list[Event]] = []
    cur: list[Event] = []
    for e in external:
        if e.channel == newline:
            lines.append(cur)
            cur = []
        else:
            cur.append(e)
    if cur:
        lines.append(cur)
    return lines


def api_adapter(
    model: ApiModel,
    external: Sequence[Event],
    k: Optional[int] = None,
    newline: str = NEWLINE,
) -> AdaptedTrace:
    """Map an environment trace to what the application receives.

    ``k`` is the number of directives of the line-pattern call and is
    required for that model.
    """
    if model.kind is ApiKind.SCANF_LIKE:
        return AdaptedTrace(e for e in external if e.channel != newline)
    if k is None or k < 0:
        raise ValueError("line pattern adapter needs the directive count k >= 0")
    out: list[Event] = []
    counts = []
    for line in split_lines(external, newline):
        got = line[:k]
        out.extend(got)
        counts.append(len(got))
    return AdaptedTrace(out, counts, any(c < k for c in counts))
