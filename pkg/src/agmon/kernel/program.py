"""Flattening of deterministic EFSMs into arrays the replay kernels walk.

A machine compiles only if it has at most one transition per
(location, channel), at most 63 clauses per guard (failure bitmask) and
only literals exactly representable as doubles.  Traces encode only if
their integer payloads are exact in a double too.  Anything else runs
through the reference interpreter in ``agmon.efsm``.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from typing import Optional, Sequence

from ..efsm import Efsm, Event, ValueType, check_value
from ..errors import UndeclaredChannelError
from ..expr import Chan, Const, Term, Var

EXACT = 2**53
MAX_CLAUSES = 63

K_CHAN, K_SLOT, K_CONST = 0, 1, 2
OP_CODES = {"<": 0, "<=": 1, ">": 2, ">=": 3, "=": 4, "!=": 5}
GUARD_ALARM, STRUCTURAL_ALARM = 1, 2


class Ineligible(Exception):
    """The machine or trace needs the reference interpreter."""


@dataclass
class Program:
    n_chan: int
    start: int
    dispatch: array  # 'i', loc * n_chan + chan -> transition or -1
    target: array  # 'i'
    g_start: array  # 'i', clause range per transition
    g_end: array
    u_start: array  # 'i', assignment range per transition
    u_end: array
    c_start: array  # 'i', atom range per clause
    c_end: array
    a_lk: array  # 'i' term kinds / refs, 'd' constants
    a_lr: array
    a_lv: array
    a_op: array
    a_rk: array
    a_rr: array
    a_rv: array
    u_dst: array
    u_k: array
    u_r: array
    u_v: array
    init: array  # 'd'
    # python-side metadata
    machine: Efsm
    channel_ids: dict
    locations: tuple
    transitions: tuple

    def clause_texts(self, t: int, mask: int) -> tuple[str, ...]:
        tr = self.transitions[t]
        texts = (str(cl) for i, cl in enumerate(tr.guard.conjuncts) if mask >> i & 1)
        return tuple(dict.fromkeys(texts))


def _num(v) -> float:
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, int) and abs(v) > EXACT:
        raise Ineligible(f"literal {v} is not exact as a double")
    return float(v)


def _term(term: Term, slots: dict) -> tuple[int, int, float]:
    if isinstance(term, Chan):
        return K_CHAN, 0, 0.0
    if isinstance(term, Var):
        return K_SLOT, slots[term.name], 0.0
    return K_CONST, 0, _num(term.value)


def compile_machine(m: Efsm) -> Optional[Program]:
    """Flatten ``m`` or return None when it needs the reference path."""
    try:
        return _compile(m)
    except Ineligible:
        return None


def _compile(m: Efsm) -> Program:
    if not m.is_deterministic:
        raise Ineligible("nondeterministic")
    chan_ids = {c.name: i for i, c in enumerate(m.channels)}
    loc_ids = {loc: i for i, loc in enumerate(m.locations)}
    slots = {v.name: i for i, v in enumerate(m.variables)}
    n_chan = len(chan_ids)
    dispatch = array("i", [-1] * (len(loc_ids) * n_chan))
    cols = {name: array("i") for name in
            ("target", "g_start", "g_end", "u_start", "u_end", "c_start", "c_end",
             "a_lk", "a_lr", "a_op", "a_rk", "a_rr", "u_dst", "u_k", "u_r")}
    a_lv, a_rv, u_v = array("d"), array("d"), array("d")
    for ti, t in enumerate(m.transitions):
        dispatch[loc_ids[t.source] * n_chan + chan_ids[t.channel]] = ti
        cols["target"].append(loc_ids[t.target])
        clauses = t.guard.conjuncts
        if len(clauses) > MAX_CLAUSES:
            raise Ineligible("too many clauses")
        cols["g_start"].append(len(cols["c_start"]))
        for cl in clauses:
            cols["c_start"].append(len(cols["a_op"]))
            for atom in cl.atoms:
                lk, lr, lv = _term(atom.lhs, slots)
                rk, rr, rv = _term(atom.rhs, slots)
                cols["a_lk"].append(lk)
                cols["a_lr"].append(lr)
                a_lv.append(lv)
                cols["a_op"].append(OP_CODES[atom.op])
                cols["a_rk"].append(rk)
                cols["a_rr"].append(rr)
                a_rv.append(rv)
            cols["c_end"].append(len(cols["a_op"]))
        cols["g_end"].append(len(cols["c_start"]))
        cols["u_start"].append(len(cols["u_dst"]))
        for asg in t.update.assignments:
            k, r, v = _term(asg.term, slots)
            cols["u_dst"].append(slots[asg.var])
            cols["u_k"].append(k)
            cols["u_r"].append(r)
            u_v.append(v)
        cols["u_end"].append(len(cols["u_dst"]))
    init = array("d", [_num(v.init) for v in m.variables])
    # sentinel element: zero-length buffers are awkward for typed memoryviews
    for arr in list(cols.values()) + [a_lv, a_rv, u_v, init, dispatch]:
        arr.append(0)
    return Program(
        n_chan=n_chan, start=loc_ids[m.start], dispatch=dispatch,
        a_lv=a_lv, a_rv=a_rv, u_v=u_v, init=init,
        machine=m, channel_ids=chan_ids, locations=tuple(m.locations),
        transitions=tuple(m.transitions), **cols,
    )


def encode_trace(prog: Program, trace: Sequence[Event]) -> tuple[array, array]:
    """Channel ids and payloads; raises Ineligible for inexact integers."""
    ids = prog.channel_ids
    ctypes = prog.machine.channel_types
    chans = array("i")
    vals = array("d")
    for e in trace:
        try:
            cid = ids[e.channel]
        except KeyError:
            raise UndeclaredChannelError(f"undeclared channel {e.channel!r}") from None
        v = e.value
        vt = ctypes[e.channel]
        if type(v) is float and vt is ValueType.FLOAT:
            pass
        elif type(v) is int and vt is ValueType.INT and -EXACT <= v <= EXACT:
            pass
        else:
            v = check_value(vt, v, f"event {e.channel}")
            if v is None:
                v = 0.0
            elif isinstance(e.value, int) and abs(e.value) > EXACT:
                raise Ineligible("payload not exact as a double")
        chans.append(cid)
        vals.append(v)
    return chans, vals
