"""Skeleton extraction from a control flow graph, and annotation into an EFSM.

Each API call node is replaced by the fragment its format string induces;
every other CFG edge is an ε-move.  ε-moves are then eliminated by forward
closure, unreachable states pruned and bisimilar states merged.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from .api_effects import NEWLINE, ApiTable, extended_fragment
from .automata import Nfa, Symbol
from .efsm import ChannelDecl, Efsm, Origin, Transition, ValueType, VariableDecl
from .errors import CfgError, ChannelTypeError, CoverageError
from .expr import Guard, Update
from .fragments import fragment_for, parse_format


class NodeKind(str, Enum):
    API = "api"
    OPAQUE = "opaque"
    EXIT = "exit"


@dataclass(frozen=True)
class CfgNode:
    id: str
    kind: NodeKind
    api: Optional[str] = None
    format: Optional[str] = None


@dataclass(frozen=True)
class Cfg:
    entry: str
    nodes: tuple[CfgNode, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise CfgError("duplicate node ids")
        if self.entry not in ids:
            raise CfgError(f"entry {self.entry!r} is not a node")
        for n in self.nodes:
            if n.kind is NodeKind.API and (n.api is None or n.format is None):
                raise CfgError(f"api node {n.id!r} needs both 'api' and 'format'")
        known = set(ids)
        for src, dst in self.edges:
            if src not in known or dst not in known:
                raise CfgError(f"edge {src!r} -> {dst!r} references an unknown node")
        kinds = {n.id: n.kind for n in self.nodes}
        for src, _ in self.edges:
            if kinds[src] is NodeKind.EXIT:
                raise CfgError(f"exit node {src!r} has an outgoing edge")
        unreachable = known - self.reachable()
        if unreachable:
            warnings.warn(f"CFG nodes unreachable from entry: {sorted(unreachable)}", stacklevel=3)

    def node(self, node_id: str) -> CfgNode:
        return self._by_id[node_id]

    @property
    def _by_id(self) -> dict[str, CfgNode]:
        return {n.id: n for n in self.nodes}

    def successors(self, node_id: str) -> list[str]:
        return [d for s, d in self.edges if s == node_id]

    def reachable(self) -> set[str]:
        succ = defaultdict(list)
        for s, d in self.edges:
            succ[s].append(d)
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            for d in succ[stack.pop()]:
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen


class Mode(str, Enum):
    PLAIN = "plain"
    API_EFFECTS = "api_effects"


@dataclass(frozen=True)
class SkeletonTransition:
    source: str
    symbol: Symbol
    target: str
    origin: Origin
    node: str
    directive: Optional[int] = None

    @property
    def key(self) -> str:
        """Annotation key ``node/directive`` (directive transitions only)."""
        return f"{self.node}/{self.directive}"


@dataclass(frozen=True)
class Skeleton:
    states: tuple[str, ...]
    start: str
    transitions: tuple[SkeletonTransition, ...]

    def to_nfa(self) -> Nfa:
        return Nfa(frozenset(self.states), self.start,
                   frozenset((t.source, t.symbol, t.target) for t in self.transitions))

    def directive_transitions(self) -> tuple[SkeletonTransition, ...]:
        return tuple(t for t in self.transitions if t.origin is Origin.DIRECTIVE)


def _state_name(node: str, local: int) -> str:
    return node if local == 0 else f"{node}.{local}"


def _epsilon_nfa(cfg: Cfg, apis: ApiTable, mode: Mode):
    """Build the ε-NFA: one state per CFG node plus fragment-internal states."""
    eps: dict[str, set[str]] = defaultdict(set)
    moves: list[SkeletonTransition] = []
    states = set()
    for n in cfg.nodes:
        states.add(n.id)
        exit_state = n.id
        if n.kind is NodeKind.API:
            model = apis[n.api]
            directives = parse_format(n.format)
            frag = extended_fragment(model, directives) if mode is Mode.API_EFFECTS else fragment_for(directives)
            for e in frag.edges:
                src, dst = _state_name(n.id, e.source), _state_name(n.id, e.target)
                states.update((src, dst))
                moves.append(SkeletonTransition(src, e.symbol, dst, e.origin, n.id, e.directive))
            exit_state = _state_name(n.id, frag.exit)
        for succ in cfg.successors(n.id):
            eps[exit_state].add(succ)
    return states, eps, moves


def _closure(state: str, eps: Mapping[str, set[str]]) -> set[str]:
    seen = {state}
    stack = [state]
    while stack:
        for nxt in eps.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _merge_bisimilar(start: str, states: set[str], trans: set[SkeletonTransition]):
    """Quotient by forward bisimulation (all states accept, so it preserves the language)."""
    block = {s: 0 for s in states}
    out = defaultdict(list)
    for t in trans:
        out[t.source].append(t)
    while True:
        sigs = {}
        for s in states:
            sig = frozenset((t.symbol, t.origin, t.node, t.directive, block[t.target]) for t in out[s])
            sigs[s] = (block[s], sig)
        ids: dict = {}
        new_block = {s: ids.setdefault(sigs[s], len(ids)) for s in sorted(states)}
        if len(ids) == len(set(block.values())):
            break
        block = new_block
    members = defaultdict(list)
    for s in states:
        members[block[s]].append(s)
    rep = {}
    for b, ms in members.items():
        name = start if start in ms else min(ms)
        for s in ms:
            rep[s] = name
    merged = {
        SkeletonTransition(rep[t.source], t.symbol, rep[t.target], t.origin, t.node, t.directive)
        for t in trans
    }
    return set(rep.values()), merged


def _sort_key(t: SkeletonTransition):
    return (t.source, t.target, t.symbol.value, t.origin.value, t.node, -1 if t.directive is None else t.directive)


def extract_skeleton(cfg: Cfg, apis: ApiTable, mode: Mode = Mode.PLAIN) -> Skeleton:
    mode = Mode(mode)
    _, eps, moves = _epsilon_nfa(cfg, apis, mode)
    by_source = defaultdict(list)
    for m in moves:
        by_source[m.source].append(m)

    kept = {cfg.entry}
    frontier = [cfg.entry]
    trans: set[SkeletonTransition] = set()
    while frontier:
        p = frontier.pop()
        for q in _closure(p, eps):
            for m in by_source.get(q, ()):
                trans.add(SkeletonTransition(p, m.symbol, m.target, m.origin, m.node, m.directive))
                if m.target not in kept:
                    kept.add(m.target)
                    frontier.append(m.target)

    states, trans = _merge_bisimilar(cfg.entry, kept, trans)
    return Skeleton(tuple(sorted(states)), cfg.entry, tuple(sorted(trans, key=_sort_key)))


# -- annotation ------------------------------------------------------------------


@dataclass(frozen=True)
class Binding:
    channel: str
    guard: Guard = field(default_factory=Guard)
    update: Update = field(default_factory=Update)


@dataclass(frozen=True)
class AnnotationSpec:
    """Manual semantic constraints keyed by ``"nodeId/directiveIndex"``."""

    bindings: Mapping[str, Binding]
    variables: tuple[VariableDecl, ...] = ()
    # optional explicit channel declarations; inferred from directives if absent
    channels: Optional[tuple[ChannelDecl, ...]] = None


_TYPE_OF_SYMBOL = {Symbol.INT: ValueType.INT, Symbol.FLOAT: ValueType.FLOAT}


def annotate(sk: Skeleton, spec: AnnotationSpec) -> Efsm:
    directive_moves = sk.directive_transitions()
    missing = sorted({t.key for t in directive_moves if t.key not in spec.bindings})
    if missing:
        raise CoverageError(f"annotation spec does not bind directive transition(s): {', '.join(missing)}")

    declared = {c.name: c for c in spec.channels} if spec.channels is not None else None
    chans: dict[str, ChannelDecl] = {}
    for t in directive_moves:
        b = spec.bindings[t.key]
        want = _TYPE_OF_SYMBOL[t.symbol]
        if declared is not None:
            if b.channel not in declared:
                raise ChannelTypeError(f"{t.key}: channel {b.channel!r} is not declared in the spec")
            decl = declared[b.channel]
        else:
            decl = chans.get(b.channel, ChannelDecl(b.channel, want))
        if decl.value_type is not want:
            raise ChannelTypeError(
                f"{t.key}: {t.symbol} directive bound to {decl.value_type.value} channel {b.channel!r}"
            )
        chans[b.channel] = decl
    if declared is not None:
        for c in spec.channels:
            if c.value_type is not ValueType.UNIT:
                chans.setdefault(c.name, c)

    transitions = []
    needs_newline = False
    for t in sk.transitions:
        if t.origin is Origin.DIRECTIVE:
            b = spec.bindings[t.key]
            transitions.append(Transition(t.source, t.target, b.channel, b.guard, b.update, t.origin, t.key))
        elif t.symbol is Symbol.NEWLINE:
            needs_newline = True
            transitions.append(Transition(t.source, t.target, NEWLINE, origin=t.origin, site=t.node))
        else:
            vt = _TYPE_OF_SYMBOL[t.symbol]
            for c in sorted(chans.values(), key=lambda c: c.name):
                if c.value_type is vt:
                    transitions.append(Transition(t.source, t.target, c.name, origin=t.origin, site=t.node))

    channels = sorted(chans.values(), key=lambda c: c.name)
    if needs_newline:
        if NEWLINE in chans:
            raise ChannelTypeError(f"channel name {NEWLINE!r} is reserved for line breaks")
        channels.append(ChannelDecl(NEWLINE, ValueType.UNIT))
    return Efsm(sk.states, sk.start, tuple(channels), tuple(spec.variables), tuple(transitions))
