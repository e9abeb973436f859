"""Online monitoring of an internal-assumption EFSM.

A guard failure raises an alarm and the monitor still takes the transition
(with the offending value), so it stays in step with an application that
keeps reading; a misaligned input then shows up as a stream of alarms.
An event with no transition on its channel is a structural violation,
handled per the session's policy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from . import kernel
from .efsm import Config, Efsm, Event, StepKind, apply_update, initial_state, step
from .errors import SessionHalted
from .expr import format_scalar


class StructuralPolicy(str, Enum):
    HALT = "halt"
    DROP = "drop"


@dataclass(frozen=True)
class AlarmPolicy:
    on_structural_violation: StructuralPolicy = StructuralPolicy.HALT
    # the only guard-violation behaviour in this version
    on_guard_violation: str = "force_transition"


class AlarmKind(str, Enum):
    GUARD = "guard_violation"
    STRUCTURAL = "structural_violation"


@dataclass(frozen=True)
class Alarm:
    position: int
    event: Event
    kind: AlarmKind
    failed_atoms: tuple[str, ...] = ()
    locations: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "position": self.position,
            "channel": self.event.channel,
            "value": self.event.value,
            "kind": self.kind.value,
            "failed_atoms": list(self.failed_atoms),
            "locations": list(self.locations),
        }

    def log_line(self) -> str:
        value = "" if self.event.value is None else f"({format_scalar(self.event.value)})"
        atoms = "; ".join(self.failed_atoms) if self.failed_atoms else "no transition on channel"
        return f"{self.position}\t{self.event.channel}{value}\t{self.kind.value}\t{atoms}"


@dataclass(frozen=True)
class MonitorReport:
    alarms: tuple[Alarm, ...]
    position: int
    locations: tuple[str, ...]
    halted: bool = False

    def to_json(self) -> dict:
        return {
            "alarms": [a.to_json() for a in self.alarms],
            "alarm_count": len(self.alarms),
            "position": self.position,
            "locations": list(self.locations),
            "halted": self.halted,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = [a.log_line() for a in self.alarms]
        status = "halted" if self.halted else "ok"
        lines.append(f"# events={self.position} alarms={len(self.alarms)} "
                     f"locations={','.join(self.locations)} status={status}")
        return "\n".join(lines)


class MonitorSession:
    def __init__(self, machine: Efsm, policy: AlarmPolicy = AlarmPolicy()):
        self.machine = machine
        self.policy = policy
        self.state: frozenset[Config] = initial_state(machine)
        self.position = 0
        self.alarms: list[Alarm] = []
        self.halted = False

    @property
    def locations(self) -> tuple[str, ...]:
        return tuple(sorted({c.location for c in self.state}))

    def observe(self, e: Event) -> Optional[Alarm]:
        if self.halted:
            raise SessionHalted(f"session halted at event {self.position - 1}")
        e = self.machine.check_event(e)
        out = step(self.machine, self.state, e)
        pos = self.position
        self.position += 1
        if out.kind is StepKind.ACCEPTED:
            self.state = out.successors
            return None
        where = self.locations
        if out.kind is StepKind.NO_CHANNEL_MATCH:
            alarm = Alarm(pos, e, AlarmKind.STRUCTURAL, (), where)
            if self.policy.on_structural_violation is StructuralPolicy.HALT:
                self.halted = True
        else:
            failed: list[str] = []
            forced = set()
            for cfg in self.state:
                for t in self.machine.outgoing(cfg.location, e.channel):
                    forced.add(Config(t.target, apply_update(t.update, cfg.valuation, e.value)))
            for _, clauses in out.failures:
                for cl in clauses:
                    if str(cl) not in failed:
                        failed.append(str(cl))
            self.state = frozenset(forced)
            alarm = Alarm(pos, e, AlarmKind.GUARD, tuple(failed), where)
        self.alarms.append(alarm)
        return alarm

    def report(self) -> MonitorReport:
        return MonitorReport(tuple(self.alarms), self.position, self.locations, self.halted)


def new_session(m: Efsm, policy: AlarmPolicy = AlarmPolicy()) -> MonitorSession:
    return MonitorSession(m, policy)


def observe(s: MonitorSession, e: Event) -> Optional[Alarm]:
    return s.observe(e)


_PROGRAMS: dict[int, tuple[Efsm, Optional[kernel.Program]]] = {}


def program_for(m: Efsm) -> Optional[kernel.Program]:
    """Compiled form of ``m`` (cached per machine object), or None."""
    hit = _PROGRAMS.get(id(m))
    if hit is not None and hit[0] is m:
        return hit[1]
    prog = kernel.compile_machine(m)
    if len(_PROGRAMS) > 256:
        _PROGRAMS.clear()
    _PROGRAMS[id(m)] = (m, prog)
    return prog


def run_trace(
    m: Efsm,
    t: Sequence[Event],
    policy: AlarmPolicy = AlarmPolicy(),
    backend: Optional[str] = None,
) -> MonitorReport:
    """Fold ``observe`` over ``t``.

    Deterministic machines run on a replay kernel (``backend`` picks
    ``"native"`` or ``"python"``); ``backend="reference"`` forces the
    set-based interpreter, which is also the fallback.
    """
    prog = None if backend == "reference" else program_for(m)
    if prog is not None:
        try:
            chans, vals = kernel.encode_trace(prog, t)
        except kernel.Ineligible:
            pass
        else:
            impl = kernel.get_backend(backend)
            halt = policy.on_structural_violation is StructuralPolicy.HALT
            raw, loc, consumed, halted = impl.monitor(prog, chans, vals, halt)
            alarms = []
            for pos, kind, mask, at in raw:
                e = m.check_event(t[pos])
                where = (prog.locations[at],)
                if kind == kernel.GUARD_ALARM:
                    tidx = prog.dispatch[at * prog.n_chan + chans[pos]]
                    alarms.append(Alarm(pos, e, AlarmKind.GUARD, prog.clause_texts(tidx, mask), where))
                else:
                    alarms.append(Alarm(pos, e, AlarmKind.STRUCTURAL, (), where))
            return MonitorReport(tuple(alarms), consumed, (prog.locations[loc],), halted)
    s = MonitorSession(m, policy)
    for e in t:
        s.observe(e)
        if s.halted:
            break
    return s.report()
