"""Guard and update expressions.

Terms are the incoming channel value ``c``, a variable name, or a literal
(integer, float, ``true``/``false``).  An atom is ``term op term``.  A guard
is a conjunction of clauses and a clause is a disjunction of atoms written
with ``||``; almost every clause in practice is a single atom.  Updates are
lists of ``var := term`` assignments applied simultaneously.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

from .errors import EvaluationError, ExprError

Scalar = Union[int, float, bool]


@dataclass(frozen=True)
class Chan:
    def __str__(self) -> str:
        return "c"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: Scalar

    def __str__(self) -> str:
        return format_scalar(self.value)


Term = Union[Chan, Var, Const]
CHAN = Chan()

OPS: dict[str, Callable[[Scalar, Scalar], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "=": operator.eq,
    "!=": operator.ne,
}
# Swapping operands of `x op y` gives `y FLIP[op] x`.
FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}
_OP_ALIASES = {"==": "=", "≤": "<=", "≥": ">=", "≠": "!=", "<>": "!="}

_NUM = r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_TERM = rf"(?:{_NUM}|{_IDENT})"
_OP = r"<=|>=|!=|==|<>|=|<|>|≤|≥|≠"
_ATOM_RE = re.compile(rf"^\s*({_TERM})\s*({_OP})\s*({_TERM})\s*$")
_ASSIGN_RE = re.compile(rf"^\s*({_IDENT})\s*(?::=|←|<-)\s*({_TERM})\s*$")
_CLAUSE_SPLIT = re.compile(r"\|\||∨")


def format_scalar(value: Scalar) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value)


def parse_term(text: str) -> Term:
    text = text.strip()
    if text == "c":
        return CHAN
    if text in ("true", "false"):
        return Const(text == "true")
    if re.fullmatch(_IDENT, text):
        return Var(text)
    if re.fullmatch(_NUM, text):
        if re.fullmatch(r"[+-]?\d+", text):
            return Const(int(text))
        return Const(float(text))
    raise ExprError(f"not a term: {text!r}")


@dataclass(frozen=True)
class Atom:
    lhs: Term
    op: str
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"

    def terms(self) -> tuple[Term, Term]:
        return (self.lhs, self.rhs)

    def flipped(self) -> "Atom":
        return Atom(self.rhs, FLIP[self.op], self.lhs)

    def negated(self) -> "Atom":
        return Atom(self.lhs, NEGATE[self.op], self.rhs)


@dataclass(frozen=True)
class Clause:
    atoms: tuple[Atom, ...]

    def __str__(self) -> str:
        return " || ".join(str(a) for a in self.atoms)


@dataclass(frozen=True)
class Guard:
    conjuncts: tuple[Clause, ...] = ()

    def __str__(self) -> str:
        return " && ".join(str(c) for c in self.conjuncts) or "true"

    def __bool__(self) -> bool:
        return bool(self.conjuncts)

    def atoms(self) -> Iterable[Atom]:
        for clause in self.conjuncts:
            yield from clause.atoms

    def to_json(self) -> list[str]:
        return [str(c) for c in self.conjuncts]


@dataclass(frozen=True)
class Assignment:
    var: str
    term: Term

    def __str__(self) -> str:
        return f"{self.var} := {self.term}"


@dataclass(frozen=True)
class Update:
    assignments: tuple[Assignment, ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for a in self.assignments:
            if a.var in seen:
                raise ExprError(f"variable {a.var!r} assigned twice in one update")
            seen.add(a.var)

    def __str__(self) -> str:
        return "; ".join(str(a) for a in self.assignments)

    def __bool__(self) -> bool:
        return bool(self.assignments)

    def term_for(self, var: str) -> Term:
        """Term assigned to ``var``, or ``Var(var)`` if it persists."""
        for a in self.assignments:
            if a.var == var:
                return a.term
        return Var(var)

    def to_json(self) -> list[str]:
        return [str(a) for a in self.assignments]


def parse_atom(text: str) -> Atom:
    m = _ATOM_RE.match(text)
    if not m:
        raise ExprError(f"not an atom of the form 'term op term': {text!r}")
    lhs, op, rhs = m.groups()
    return Atom(parse_term(lhs), _OP_ALIASES.get(op, op), parse_term(rhs))


def parse_clause(text: str) -> Clause:
    parts = _CLAUSE_SPLIT.split(text)
    return Clause(tuple(parse_atom(p) for p in parts))


def parse_guard(items: Sequence[str]) -> Guard:
    return Guard(tuple(parse_clause(s) for s in items))


def parse_assignment(text: str) -> Assignment:
    m = _ASSIGN_RE.match(text)
    if not m:
        raise ExprError(f"not an assignment of the form 'var := term': {text!r}")
    name, term = m.groups()
    if name == "c":
        raise ExprError("the channel value 'c' cannot be assigned")
    return Assignment(name, parse_term(term))


def parse_update(items: Sequence[str]) -> Update:
    return Update(tuple(parse_assignment(s) for s in items))


# -- evaluation -------------------------------------------------------------


def eval_term(term: Term, env: Mapping[str, Scalar], value: Scalar | None) -> Scalar:
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Chan):
        if value is None:
            raise EvaluationError("'c' referenced on a channel without payload")
        return value
    try:
        return env[term.name]
    except KeyError:
        raise EvaluationError(f"undeclared variable {term.name!r}") from None


def compare(op: str, x: Scalar, y: Scalar) -> bool:
    xb, yb = isinstance(x, bool), isinstance(y, bool)
    if xb != yb:
        raise EvaluationError(f"cannot compare {format_scalar(x)} with {format_scalar(y)}")
    if xb and op not in ("=", "!="):
        raise EvaluationError(f"ordering operator {op!r} applied to booleans")
    return OPS[op](x, y)


def eval_atom(atom: Atom, env: Mapping[str, Scalar], value: Scalar | None) -> bool:
    return compare(atom.op, eval_term(atom.lhs, env, value), eval_term(atom.rhs, env, value))


def eval_clause(clause: Clause, env: Mapping[str, Scalar], value: Scalar | None) -> bool:
    return any(eval_atom(a, env, value) for a in clause.atoms)


def failed_clauses(guard: Guard, env: Mapping[str, Scalar], value: Scalar | None) -> tuple[Clause, ...]:
    return tuple(cl for cl in guard.conjuncts if not eval_clause(cl, env, value))


def coerce(value: Scalar, target: Scalar) -> Scalar:
    """Convert ``value`` to the type of the current binding ``target``."""
    if isinstance(target, bool):
        if not isinstance(value, bool):
            raise EvaluationError(f"boolean variable assigned {format_scalar(value)}")
        return value
    if isinstance(value, bool):
        raise EvaluationError(f"numeric variable assigned {format_scalar(value)}")
    if isinstance(target, float):
        return float(value)
    if isinstance(value, float):
        raise EvaluationError(f"int variable assigned float {value!r}")
    return value
