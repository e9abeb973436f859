"""Pure-Python replay kernel; same contract as the compiled ``_ckernel``."""

from __future__ import annotations

from .program import GUARD_ALARM, STRUCTURAL_ALARM, Program

NAME = "python"


def _value(kind, ref, const, slots, v):
    if kind == 0:
        return v
    if kind == 1:
        return slots[ref]
    return const


def _cmp(op, x, y):
    if op == 0:
        return x < y
    if op == 1:
        return x <= y
    if op == 2:
        return x > y
    if op == 3:
        return x >= y
    if op == 4:
        return x == y
    return x != y


def _failed_mask(p: Program, t, slots, v):
    mask = 0
    bit = 1
    c_start, c_end = p.c_start, p.c_end
    for cl in range(p.g_start[t], p.g_end[t]):
        ok = False
        for a in range(c_start[cl], c_end[cl]):
            x = _value(p.a_lk[a], p.a_lr[a], p.a_lv[a], slots, v)
            y = _value(p.a_rk[a], p.a_rr[a], p.a_rv[a], slots, v)
            if _cmp(p.a_op[a], x, y):
                ok = True
                break
        if not ok:
            mask |= bit
        bit <<= 1
    return mask


def _apply(p: Program, t, slots, v):
    lo, hi = p.u_start[t], p.u_end[t]
    if lo == hi:
        return
    new = [_value(p.u_k[u], p.u_r[u], p.u_v[u], slots, v) for u in range(lo, hi)]
    for u, val in zip(range(lo, hi), new):
        slots[p.u_dst[u]] = val


def first_reject(p: Program, chans, vals) -> int:
    """Index of the first rejected event, or -1 if the trace is accepted."""
    loc = p.start
    slots = list(p.init)
    dispatch, n_chan, target = p.dispatch, p.n_chan, p.target
    for pos in range(len(chans)):
        t = dispatch[loc * n_chan + chans[pos]]
        if t < 0:
            return pos
        v = vals[pos]
        if p.g_start[t] != p.g_end[t] and _failed_mask(p, t, slots, v):
            return pos
        _apply(p, t, slots, v)
        loc = target[t]
    return -1


def monitor(p: Program, chans, vals, halt: bool):
    """Replay with forced transitions on guard failure.

    Returns ``(alarms, final_location, consumed, halted)``; each alarm is
    ``(position, kind, failed_clause_mask, location)``.
    """
    loc = p.start
    slots = list(p.init)
    alarms = []
    dispatch, n_chan, target = p.dispatch, p.n_chan, p.target
    n = len(chans)
    for pos in range(n):
        t = dispatch[loc * n_chan + chans[pos]]
        if t < 0:
            alarms.append((pos, STRUCTURAL_ALARM, 0, loc))
            if halt:
                return alarms, loc, pos + 1, True
            continue
        v = vals[pos]
        if p.g_start[t] != p.g_end[t]:
            mask = _failed_mask(p, t, slots, v)
            if mask:
                alarms.append((pos, GUARD_ALARM, mask, loc))
        _apply(p, t, slots, v)
        loc = target[t]
    return alarms, loc, n, False
