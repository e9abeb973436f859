"""Extended finite state machines: syntax, execution semantics, traces.

All locations are accepting: a machine accepts a trace iff some run consumes
every event of it, so the accepted language is prefix closed.  Stepping works
on sets of configurations, which keeps nondeterministic machines usable as
monitors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

from . import expr
from .errors import EfsmError, EvaluationError, EventTypeError, UndeclaredChannelError
from .expr import Chan, Clause, Const, Guard, Scalar, Update, Var

INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1


class ValueType(str, Enum):
    INT = "int"
    FLOAT = "float"
    UNIT = "unit"
    BOOL = "bool"  # variables only


class Origin(str, Enum):
    DIRECTIVE = "directive"
    API_SELF_LOOP = "api_effect_self_loop"
    API_TERMINATOR = "api_effect_terminator"


@dataclass(frozen=True)
class ChannelDecl:
    name: str
    value_type: ValueType

    def __post_init__(self) -> None:
        if self.value_type is ValueType.BOOL:
            raise EfsmError(f"channel {self.name!r}: channels carry int, float or unit")


class Event(NamedTuple):
    channel: str
    value: Optional[Scalar] = None

    def __str__(self) -> str:
        if self.value is None:
            return self.channel
        return f"{self.channel}({expr.format_scalar(self.value)})"


Trace = tuple  # tuple[Event, ...]


def check_value(vtype: ValueType, value: object, what: str) -> Scalar | None:
    """Validate ``value`` against ``vtype``; returns the normalized value."""
    if vtype is ValueType.UNIT:
        if value is not None:
            raise EventTypeError(f"{what}: unit channel carries no payload, got {value!r}")
        return None
    if vtype is ValueType.BOOL:
        if not isinstance(value, bool):
            raise EventTypeError(f"{what}: expected bool, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EventTypeError(f"{what}: expected {vtype.value}, got {value!r}")
    if vtype is ValueType.INT:
        if not isinstance(value, int):
            raise EventTypeError(f"{what}: expected int, got {value!r}")
        if not INT64_MIN <= value <= INT64_MAX:
            raise EventTypeError(f"{what}: {value} does not fit in 64 bits")
        return value
    return float(value)


@dataclass(frozen=True)
class VariableDecl:
    name: str
    value_type: ValueType
    init: Scalar

    def __post_init__(self) -> None:
        if self.value_type is ValueType.UNIT:
            raise EfsmError(f"variable {self.name!r} cannot have unit type")
        try:
            object.__setattr__(self, "init", check_value(self.value_type, self.init, f"variable {self.name!r}"))
        except EventTypeError as exc:
            raise EfsmError(str(exc)) from None


class Valuation(Mapping[str, Scalar]):
    """Immutable, hashable variable binding."""

    __slots__ = ("_d", "_h")

    def __init__(self, bindings: Mapping[str, Scalar] | Iterable[tuple[str, Scalar]] = ()):
        self._d = dict(bindings)
        self._h: int | None = None

    def __getitem__(self, key: str) -> Scalar:
        return self._d[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __hash__(self) -> int:
        if self._h is None:
            # type is part of the key: True, 1 and 1.0 are distinct bindings
            self._h = hash(frozenset((k, type(v), v) for k, v in self._d.items()))
        return self._h

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Valuation):
            other = other._d
        if not isinstance(other, Mapping) or self._d.keys() != other.keys():
            return False
        return all(type(v) is type(other[k]) and v == other[k] for k, v in self._d.items())

    def __repr__(self) -> str:
        return f"Valuation({self._d!r})"

    def replace(self, changes: Mapping[str, Scalar]) -> "Valuation":
        d = dict(self._d)
        d.update(changes)
        return Valuation(d)


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    channel: str
    guard: Guard = field(default_factory=Guard)
    update: Update = field(default_factory=Update)
    origin: Origin = Origin.DIRECTIVE
    site: Optional[str] = None

    def __str__(self) -> str:
        label = self.channel
        if self.update:
            label += "{" + str(self.update) + "}"
        if self.guard:
            label += " [" + str(self.guard) + "]"
        return f"{self.source} --{label}--> {self.target}"


def _term_type(term: expr.Term, chan: ValueType, variables: Mapping[str, ValueType], where: str) -> ValueType:
    if isinstance(term, Chan):
        if chan is ValueType.UNIT:
            raise EfsmError(f"{where}: 'c' used on a unit channel")
        return chan
    if isinstance(term, Var):
        if term.name not in variables:
            raise EfsmError(f"{where}: undeclared variable {term.name!r}")
        return variables[term.name]
    if isinstance(term.value, bool):
        return ValueType.BOOL
    return ValueType.INT if isinstance(term.value, int) else ValueType.FLOAT


@dataclass(frozen=True)
class Efsm:
    locations: tuple[str, ...]
    start: str
    channels: tuple[ChannelDecl, ...]
    variables: tuple[VariableDecl, ...] = ()
    transitions: tuple[Transition, ...] = ()

    def __post_init__(self) -> None:
        for name in ("locations", "channels", "variables", "transitions"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self._validate()

    def _validate(self) -> None:
        locs = set(self.locations)
        if len(locs) != len(self.locations):
            raise EfsmError("duplicate location names")
        if self.start not in locs:
            raise EfsmError(f"start location {self.start!r} is not declared")
        chans = {}
        for ch in self.channels:
            if ch.name in chans:
                raise EfsmError(f"duplicate channel {ch.name!r}")
            chans[ch.name] = ch.value_type
        vtypes = {}
        for v in self.variables:
            if v.name in vtypes or v.name == "c":
                raise EfsmError(f"bad or duplicate variable name {v.name!r}")
            vtypes[v.name] = v.value_type
        for i, t in enumerate(self.transitions):
            where = f"transition {i} ({t.source} -> {t.target})"
            if t.source not in locs or t.target not in locs:
                raise EfsmError(f"{where}: endpoint not declared")
            if t.channel not in chans:
                raise EfsmError(f"{where}: undeclared channel {t.channel!r}")
            ctype = chans[t.channel]
            for atom in t.guard.atoms():
                lt = _term_type(atom.lhs, ctype, vtypes, where)
                rt = _term_type(atom.rhs, ctype, vtypes, where)
                if (lt is ValueType.BOOL) != (rt is ValueType.BOOL):
                    raise EfsmError(f"{where}: atom {atom} compares bool with a number")
                if lt is ValueType.BOOL and atom.op not in ("=", "!="):
                    raise EfsmError(f"{where}: atom {atom} orders booleans")
            for a in t.update.assignments:
                if a.var not in vtypes:
                    raise EfsmError(f"{where}: assignment to undeclared variable {a.var!r}")
                src = _term_type(a.term, ctype, vtypes, where)
                dst = vtypes[a.var]
                ok = src is dst or (dst is ValueType.FLOAT and src is ValueType.INT)
                if not ok:
                    raise EfsmError(f"{where}: cannot assign {src.value} to {dst.value} variable {a.var!r}")

    # -- indices ------------------------------------------------------------

    @cached_property
    def channel_types(self) -> dict[str, ValueType]:
        return {c.name: c.value_type for c in self.channels}

    @cached_property
    def variable_types(self) -> dict[str, ValueType]:
        return {v.name: v.value_type for v in self.variables}

    @cached_property
    def initial_valuation(self) -> Valuation:
        return Valuation((v.name, v.init) for v in self.variables)

    @cached_property
    def _outgoing(self) -> dict[tuple[str, str], tuple[Transition, ...]]:
        out: dict[tuple[str, str], list[Transition]] = {}
        for t in self.transitions:
            out.setdefault((t.source, t.channel), []).append(t)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def _from(self) -> dict[str, tuple[Transition, ...]]:
        out: dict[str, list[Transition]] = {}
        for t in self.transitions:
            out.setdefault(t.source, []).append(t)
        return {k: tuple(v) for k, v in out.items()}

    def outgoing(self, location: str, channel: str | None = None) -> tuple[Transition, ...]:
        if channel is not None:
            return self._outgoing.get((location, channel), ())
        return self._from.get(location, ())

    @cached_property
    def is_deterministic(self) -> bool:
        """At most one transition per (location, channel)."""
        return all(len(ts) == 1 for ts in self._outgoing.values())

    def check_event(self, e: Event) -> Event:
        if e.channel not in self.channel_types:
            raise UndeclaredChannelError(f"undeclared channel {e.channel!r}")
        value = check_value(self.channel_types[e.channel], e.value, f"event {e.channel}")
        if value is e.value or (value == e.value and type(value) is type(e.value)):
            return e
        return Event(e.channel, value)


class Config(NamedTuple):
    """A machine state ``<location, valuation>``."""

    location: str
    valuation: Valuation


MachineState = frozenset  # frozenset[Config]


def initial_state(m: Efsm) -> frozenset[Config]:
    return frozenset({Config(m.start, m.initial_valuation)})


class StepKind(str, Enum):
    ACCEPTED = "accepted"
    NO_CHANNEL_MATCH = "no_channel_match"
    GUARD_REJECTED = "guard_rejected"


@dataclass(frozen=True)
class StepOutcome:
    kind: StepKind
    successors: frozenset[Config]
    # (transition, clauses it failed) for every channel-matching transition
    # whose guard was false; empty unless kind is GUARD_REJECTED
    failures: tuple[tuple[Transition, tuple[Clause, ...]], ...] = ()

    @property
    def rejected(self) -> bool:
        return not self.successors


# -- operations ----------------------------------------------------------------


def eval_guard(g: Guard, d: Mapping[str, Scalar], v: Scalar | None) -> bool:
    return all(expr.eval_clause(cl, d, v) for cl in g.conjuncts)


def apply_update(a: Update, d: Mapping[str, Scalar], v: Scalar | None) -> Valuation:
    """Simultaneous assignment: every term reads the pre-update valuation."""
    changes = {}
    for asg in a.assignments:
        if asg.var not in d:
            raise EvaluationError(f"assignment to undeclared variable {asg.var!r}")
        changes[asg.var] = expr.coerce(expr.eval_term(asg.term, d, v), d[asg.var])
    if isinstance(d, Valuation):
        return d.replace(changes) if changes else d
    return Valuation({**d, **changes})


def step(m: Efsm, st: Iterable[Config], e: Event) -> StepOutcome:
    e = m.check_event(e)
    successors = set()
    failures = []
    matched = False
    for cfg in st:
        for t in m.outgoing(cfg.location, e.channel):
            matched = True
            failed = expr.failed_clauses(t.guard, cfg.valuation, e.value)
            if failed:
                failures.append((t, failed))
                continue
            successors.add(Config(t.target, apply_update(t.update, cfg.valuation, e.value)))
    if successors:
        return StepOutcome(StepKind.ACCEPTED, frozenset(successors))
    if not matched:
        return StepOutcome(StepKind.NO_CHANNEL_MATCH, frozenset())
    return StepOutcome(StepKind.GUARD_REJECTED, frozenset(), tuple(failures))


def run(m: Efsm, t: Sequence[Event]) -> tuple[int, frozenset[Config]]:
    """Fold ``step`` over ``t``.

    Returns ``(consumed, state)`` where ``consumed`` is the number of events
    accepted before the first rejection and ``state`` the set reached.
    """
    st = initial_state(m)
    for i, e in enumerate(t):
        out = step(m, st, e)
        if out.rejected:
            return i, st
        st = out.successors
    return len(t), st


def accepts(m: Efsm, t: Sequence[Event]) -> bool:
    return run(m, t)[0] == len(t)


def project(t: Sequence[Event], cs: Iterable[str]) -> tuple[Event, ...]:
    keep = set(cs)
    return tuple(e for e in t if e.channel in keep)
