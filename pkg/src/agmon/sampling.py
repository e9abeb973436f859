"""Random runs of an EFSM with guard-satisfying, boundary-biased values."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from . import expr
from .efsm import Config, Efsm, Event, Transition, ValueType, apply_update, eval_guard
from .expr import Atom, Chan, Const, Scalar, Var

BOUNDARY_P = 0.25
# width of the window sampled on a half-open or unbounded side
SPAN = 1000.0


@dataclass
class Interval:
    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = False
    hi_open: bool = False

    def add(self, op: str, k: float) -> None:
        """Intersect with ``c op k``."""
        if op in (">", ">="):
            strict = op == ">"
            if k > self.lo or (k == self.lo and strict):
                self.lo, self.lo_open = k, strict
        elif op in ("<", "<="):
            strict = op == "<"
            if k < self.hi or (k == self.hi and strict):
                self.hi, self.hi_open = k, strict
        elif op == "=":
            self.add(">=", k)
            self.add("<=", k)

    def empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_open or self.hi_open)


def _resolve(term: expr.Term, env: Mapping[str, Scalar]) -> expr.Term:
    return Const(env[term.name]) if isinstance(term, Var) else term


def _c_constraint(atom: Atom, env: Mapping[str, Scalar]):
    """Return True/False for c-free atoms, else ``(op, k)`` meaning ``c op k``."""
    lhs, rhs = _resolve(atom.lhs, env), _resolve(atom.rhs, env)
    if isinstance(lhs, Const) and isinstance(rhs, Const):
        return expr.compare(atom.op, lhs.value, rhs.value)
    if isinstance(lhs, Chan) and isinstance(rhs, Chan):
        return None  # c op c: decided by the final check
    if isinstance(lhs, Const):
        lhs, rhs, op = rhs, lhs, expr.FLIP[atom.op]
    else:
        op = atom.op
    return op, rhs.value


def _draw(iv: Interval, vtype: ValueType, rng: random.Random, boundary_p: float) -> Optional[Scalar]:
    if vtype is ValueType.INT:
        lo = iv.lo if math.isinf(iv.lo) else math.floor(iv.lo) + 1 if iv.lo_open else math.ceil(iv.lo)
        hi = iv.hi if math.isinf(iv.hi) else math.ceil(iv.hi) - 1 if iv.hi_open else math.floor(iv.hi)
        if lo > hi:
            return None
        ends = [e for e in (lo, hi) if math.isfinite(e)]
        if ends and rng.random() < boundary_p:
            return int(rng.choice(ends))
        if math.isfinite(lo) and math.isfinite(hi):
            return rng.randint(int(lo), int(hi))
        if math.isfinite(lo):
            return int(lo) + rng.randint(0, int(SPAN))
        if math.isfinite(hi):
            return int(hi) - rng.randint(0, int(SPAN))
        return rng.randint(-int(SPAN), int(SPAN))
    lo = math.nextafter(iv.lo, math.inf) if iv.lo_open else iv.lo
    hi = math.nextafter(iv.hi, -math.inf) if iv.hi_open else iv.hi
    if lo > hi:
        return None
    ends = [e for e in (lo, hi) if math.isfinite(e)]
    if ends and rng.random() < boundary_p:
        return float(rng.choice(ends))
    if math.isfinite(lo) and math.isfinite(hi):
        return rng.uniform(lo, hi)
    if math.isfinite(lo):
        return lo + rng.uniform(0.0, SPAN)
    if math.isfinite(hi):
        return hi - rng.uniform(0.0, SPAN)
    return rng.uniform(-SPAN, SPAN)


def sample_value(
    t: Transition,
    vtype: ValueType,
    env: Mapping[str, Scalar],
    rng: random.Random,
    boundary_p: float = BOUNDARY_P,
    attempts: int = 8,
) -> tuple[bool, Scalar | None]:
    """Pick a value satisfying ``t``'s guard under ``env``.

    Returns ``(ok, value)``.  Disjunctive clauses commit to one satisfiable
    alternative at random.  Values are chosen from the interval the chosen
    atoms imply; endpoints are taken with probability ``boundary_p``.
    """
    if vtype is ValueType.UNIT:
        return eval_guard(t.guard, env, None), None
    for _ in range(attempts):
        iv = Interval()
        excluded = []
        feasible = True
        for clause in t.guard.conjuncts:
            options = []
            satisfied = False
            for atom in clause.atoms:
                r = _c_constraint(atom, env)
                if r is True:
                    satisfied = True
                    break
                if r is False or r is None:
                    continue
                options.append(r)
            if satisfied:
                continue
            if not options:
                feasible = False
                break
            op, k = rng.choice(options)
            if isinstance(k, bool):
                feasible = False
                break
            if op == "!=":
                excluded.append(k)
            else:
                iv.add(op, k)
        if not feasible:
            return False, None
        if iv.empty():
            continue
        value = _draw(iv, vtype, rng, boundary_p)
        if value is None or value in excluded:
            continue
        if vtype is ValueType.FLOAT:
            value = float(value)
        if eval_guard(t.guard, env, value):
            return True, value
    return False, None


def random_run(
    m: Efsm,
    rng: random.Random,
    length: int,
    boundary_p: float = BOUNDARY_P,
    allowed: Optional[Callable[[int, Transition], bool]] = None,
) -> tuple[Event, ...]:
    """Uniform random walk over enabled transitions, up to ``length`` events.

    ``allowed(i, t)`` can restrict which transitions may fire at step ``i``.
    The walk stops early when nothing can fire.
    """
    cfg = Config(m.start, m.initial_valuation)
    out: list[Event] = []
    ctypes = m.channel_types
    for i in range(length):
        candidates = [t for t in m.outgoing(cfg.location) if allowed is None or allowed(i, t)]
        rng.shuffle(candidates)
        for t in candidates:
            ok, v = sample_value(t, ctypes[t.channel], cfg.valuation, rng, boundary_p)
            if ok:
                out.append(Event(t.channel, v))
                cfg = Config(t.target, apply_update(t.update, cfg.valuation, v))
                break
        else:
            break
    return tuple(out)


def run_along(
    m: Efsm,
    symbols: Sequence,
    symbol_of: Mapping[str, object],
    rng: random.Random,
    tries: int = 64,
) -> Optional[tuple[Event, ...]]:
    """Random run whose channel sequence erases to ``symbols``, if one is found."""
    n = len(symbols)
    for _ in range(tries):
        t = random_run(m, rng, n, allowed=lambda i, tr: symbol_of[tr.channel] == symbols[i])
        if len(t) == n:
            return t
    return None
