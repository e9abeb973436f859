"""Prefix-closed NFAs over the value-type alphabet and language inclusion."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

from .efsm import Efsm, ValueType


class Symbol(str, Enum):
    INT = "int"
    FLOAT = "float"
    NEWLINE = "newline"

    def __str__(self) -> str:
        return {"int": "Int", "float": "Float", "newline": "Newline"}[self.value]


# Fixed symbol order; witnesses are shortest-first then lexicographic in it.
ALPHABET: tuple[Symbol, ...] = (Symbol.INT, Symbol.FLOAT, Symbol.NEWLINE)
_RANK = {s: i for i, s in enumerate(ALPHABET)}

SYMBOL_OF_TYPE = {
    ValueType.INT: Symbol.INT,
    ValueType.FLOAT: Symbol.FLOAT,
    ValueType.UNIT: Symbol.NEWLINE,
}

Word = tuple  # tuple[Symbol, ...]


def word_str(w: Sequence[Symbol]) -> str:
    return " ".join(str(s) for s in w) or "ε"


@dataclass(frozen=True)
class Nfa:
    """Every state is accepting; rejection means getting stuck."""

    states: frozenset[str]
    start: str
    transitions: frozenset[tuple[str, Symbol, str]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        if self.start not in self.states:
            raise ValueError(f"start state {self.start!r} not in states")
        for s, _, t in self.transitions:
            if s not in self.states or t not in self.states:
                raise ValueError(f"transition {s!r} -> {t!r} leaves the state set")

    @cached_property
    def delta(self) -> dict[tuple[str, Symbol], frozenset[str]]:
        d: dict[tuple[str, Symbol], set[str]] = {}
        for s, sym, t in self.transitions:
            d.setdefault((s, sym), set()).add(t)
        return {k: frozenset(v) for k, v in d.items()}

    def post(self, states: Iterable[str], sym: Symbol) -> frozenset[str]:
        out: set[str] = set()
        for s in states:
            out |= self.delta.get((s, sym), frozenset())
        return frozenset(out)

    def accepts(self, word: Sequence[Symbol]) -> bool:
        cur = frozenset({self.start})
        for sym in word:
            cur = self.post(cur, sym)
            if not cur:
                return False
        return True

    def with_transitions(self, extra: Iterable[tuple[str, Symbol, str]]) -> "Nfa":
        extra = list(extra)
        states = self.states | {s for s, _, _ in extra} | {t for _, _, t in extra}
        return Nfa(states, self.start, self.transitions | set(extra))


def erase(m: Efsm, symbol_of: Optional[Mapping[str, Symbol]] = None) -> Nfa:
    """Forget guards/updates and relabel each channel by its value type."""
    sym = {c.name: SYMBOL_OF_TYPE[c.value_type] for c in m.channels}
    if symbol_of:
        sym.update(symbol_of)
    trans = {(t.source, sym[t.channel], t.target) for t in m.transitions}
    return Nfa(frozenset(m.locations), m.start, frozenset(trans))


@dataclass(frozen=True)
class SymbolInclusion:
    holds: bool
    counterexample: Optional[tuple[Symbol, ...]] = None

    def __bool__(self) -> bool:
        return self.holds


def symbol_inclusion(a: Nfa, b: Nfa) -> SymbolInclusion:
    """Decide L(a) ⊆ L(b) for prefix-closed NFAs.

    Breadth-first search over pairs (a-state, b-subset), layer by layer
    in shortlex order of the words reaching them.  A pair whose
    subset contains an already-visited subset for the same a-state is
    pruned (antichain): anything it can refute, the smaller subset refutes
    too, with a prefix that is no longer and no later in the order.  The
    first failure found is therefore the shortest, lexicographically least
    counterexample.
    """
    start = (a.start, frozenset({b.start}))
    visited: dict[str, list[frozenset[str]]] = {a.start: [start[1]]}
    # one layer per length; pairs reached by the same word are expanded
    # together, symbol by symbol, so words come out in shortlex order
    layer: dict[tuple[Symbol, ...], list] = {(): [start]}
    while layer:
        nxt: dict[tuple[Symbol, ...], list] = {}
        for path, pairs in layer.items():
            for sym in ALPHABET:
                word = path + (sym,)
                for qa, qb in pairs:
                    targets = a.delta.get((qa, sym))
                    if not targets:
                        continue
                    nb = b.post(qb, sym)
                    if not nb:
                        return SymbolInclusion(False, word)
                    for ta in sorted(targets):
                        seen = visited.setdefault(ta, [])
                        if any(old <= nb for old in seen):
                            continue
                        seen[:] = [old for old in seen if not nb <= old]
                        seen.append(nb)
                        nxt.setdefault(word, []).append((ta, nb))
        layer = nxt
    return SymbolInclusion(True)


def words_upto(nfa: Nfa, bound: int) -> list[tuple[Symbol, ...]]:
    """All words of L(nfa) of length <= bound, shortest-first, lexicographic."""
    out = [()]
    layer = [((), frozenset({nfa.start}))]
    for _ in range(bound):
        nxt = []
        for w, cur in layer:
            for sym in ALPHABET:
                ns = nfa.post(cur, sym)
                if ns:
                    nxt.append((w + (sym,), ns))
        out.extend(w for w, _ in nxt)
        layer = nxt
    return out


def difference_upto(b: Nfa, a: Nfa, bound: int) -> list[tuple[Symbol, ...]]:
    """Words of L(b) \\ L(a) up to ``bound``, shortest-first, lexicographic."""
    out = []
    layer = [((), frozenset({b.start}), frozenset({a.start}))]
    for _ in range(bound):
        nxt = []
        for w, qb, qa in layer:
            for sym in ALPHABET:
                nb = b.post(qb, sym)
                if not nb:
                    continue
                na = a.post(qa, sym) if qa else frozenset()
                nw = w + (sym,)
                if not na:
                    out.append(nw)
                nxt.append((nw, nb, na))
        layer = nxt
    out.sort(key=lambda w: (len(w), [_RANK[s] for s in w]))
    return out


def parse_word(text: str) -> tuple[Symbol, ...]:
    names = {"int": Symbol.INT, "i": Symbol.INT, "float": Symbol.FLOAT, "f": Symbol.FLOAT,
             "newline": Symbol.NEWLINE, "n": Symbol.NEWLINE}
    return tuple(names[tok.lower()] for tok in text.split())
