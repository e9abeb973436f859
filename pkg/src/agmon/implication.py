"""Sound, incomplete implication between guards.

Only the fixed atom grammar is handled: facts are single-atom clauses of the
premise, bounds on ``c`` and on variables come from facts against literals,
and two-term atoms are decided by syntactic match or by comparing bounds.
A ``False`` answer means "not proved", never "refuted".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .expr import OPS, Atom, Chan, Clause, Const, Guard, Term, Var


def _num(v) -> float:
    return float(v)  # bools compare as 0/1 here


def _key(t: Term):
    if isinstance(t, Chan):
        return (0, "")
    if isinstance(t, Var):
        return (1, t.name)
    return (2, repr(_num(t.value)))


def normalize(a: Atom) -> Atom:
    """Orient so the lexically smaller term is on the left; literals become floats."""
    lhs, rhs = a.lhs, a.rhs
    if isinstance(lhs, Const):
        lhs = Const(_num(lhs.value))
    if isinstance(rhs, Const):
        rhs = Const(_num(rhs.value))
    atom = Atom(lhs, a.op, rhs)
    return atom.flipped() if _key(lhs) > _key(rhs) else atom


def map_vars(a: Atom, phi: Mapping[str, str]) -> Optional[Atom]:
    """Rename variables through ``phi``; None if some variable is unmapped."""
    out = []
    for t in a.terms():
        if isinstance(t, Var):
            if t.name not in phi:
                return None
            t = Var(phi[t.name])
        out.append(t)
    return Atom(out[0], a.op, out[1])


@dataclass
class _Bound:
    lo: float = -math.inf
    hi: float = math.inf
    lo_strict: bool = False
    hi_strict: bool = False

    def tighten(self, op: str, k: float) -> None:
        if op in (">", ">=", "="):
            s = op == ">"
            if k > self.lo or (k == self.lo and s):
                self.lo, self.lo_strict = k, s
        if op in ("<", "<=", "="):
            s = op == "<"
            if k < self.hi or (k == self.hi and s):
                self.hi, self.hi_strict = k, s


def _implied_ops(op: str) -> set[str]:
    return {
        ">": {">", ">=", "!="},
        "<": {"<", "<=", "!="},
        "=": {"=", ">=", "<="},
        ">=": {">="},
        "<=": {"<="},
        "!=": {"!="},
    }[op]


class Facts:
    def __init__(self, atoms: Iterable[Atom]):
        self.atoms = [normalize(a) for a in atoms]
        self.bounds: dict[Term, _Bound] = {}
        for a in self.atoms:
            if isinstance(a.rhs, Const) and not isinstance(a.lhs, Const):
                self.bounds.setdefault(a.lhs, _Bound()).tighten(a.op, a.rhs.value)

    def bound(self, t: Term) -> _Bound:
        if isinstance(t, Const):
            v = _num(t.value)
            return _Bound(v, v)
        return self.bounds.get(t, _Bound())

    def entails(self, goal: Atom) -> bool:
        g = normalize(goal)
        if isinstance(g.lhs, Const) and isinstance(g.rhs, Const):
            return OPS[g.op](g.lhs.value, g.rhs.value)
        if g.lhs == g.rhs and g.op in ("<=", ">=", "="):
            return True
        for f in self.atoms:
            if f.lhs == g.lhs and f.rhs == g.rhs and g.op in _implied_ops(f.op):
                return True
        return _decide(g.op, self.bound(g.lhs), self.bound(g.rhs))


def _decide(op: str, x: _Bound, y: _Bound) -> bool:
    """Whether ``x op y`` holds for every value in the two ranges."""
    if op == ">=":
        return x.lo >= y.hi
    if op == ">":
        return x.lo > y.hi or (x.lo == y.hi and (x.lo_strict or y.hi_strict) and math.isfinite(x.lo))
    if op == "<=":
        return x.hi <= y.lo
    if op == "<":
        return x.hi < y.lo or (x.hi == y.lo and (x.hi_strict or y.lo_strict) and math.isfinite(x.hi))
    if op == "=":
        return x.lo == x.hi == y.lo == y.hi and math.isfinite(x.lo)
    # !=: ranges disjoint
    return _decide(">", x, y) or _decide("<", x, y)


def clause_implied(premise: Guard, goal: Clause) -> bool:
    units = [cl.atoms[0] for cl in premise.conjuncts if len(cl.atoms) == 1]
    facts = Facts(units)
    if any(facts.entails(b) for b in goal.atoms):
        return True
    for cl in premise.conjuncts:
        if len(cl.atoms) < 2:
            continue
        if all(any(Facts(units + [a]).entails(b) for b in goal.atoms) for a in cl.atoms):
            return True
    return False


def guard_implies(premise: Guard, goal: Guard, phi: Optional[Mapping[str, str]] = None) -> tuple[bool, list[str]]:
    """Check ``premise => goal``; ``phi`` renames goal variables into premise ones.

    Returns ``(proved, unproved_clauses)``.
    """
    unproved = []
    for cl in goal.conjuncts:
        atoms = []
        for a in cl.atoms:
            m = a if phi is None else map_vars(a, phi)
            if m is not None:
                atoms.append(m)
        if not atoms or not clause_implied(premise, Clause(tuple(atoms))):
            unproved.append(str(cl))
    return not unproved, unproved
