"""Trace inclusion between a contract assumption and an internal assumption.

``check_inclusion(a, b)`` asks whether every trace of ``a`` is a trace of
``b``.  It runs three stages, stopping at the first conclusive one:

1. exact inclusion of the symbol-erased automata (a failure is turned into
   a concrete witness by sampling ``a`` along the counterexample word);
2. a simulation relation over location pairs in which each ``a`` guard
   implies the matched ``b`` guard and updates agree under a variable
   correspondence; if ``(a.start, b.start)`` is in it the answer is Verified;
3. bounded random testing from ``a``; the first trace ``b`` rejects is a
   Falsified witness, otherwise the verdict is Unknown.

``undetectable_deviations`` goes the other way and lists short traces
``b`` accepts yet ``a`` rejects.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from . import kernel
from .automata import SYMBOL_OF_TYPE, Symbol, difference_upto, erase, symbol_inclusion, word_str, words_upto
from .efsm import Efsm, Event, StepKind, Transition, ValueType, initial_state, run, step
from .errors import IncompatibleAlphabetError, UndeclaredChannelError
from .expr import Chan, Const, Term, Var
from .implication import guard_implies
from .monitor import program_for
from .sampling import BOUNDARY_P, random_run, run_along

SAMPLES = 2000
MAX_LENGTH = 40
BATCH = 250


class Verdict(str, Enum):
    VERIFIED = "verified"
    FALSIFIED = "falsified"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class InclusionVerdict:
    status: Verdict
    witness: Optional[tuple[Event, ...]] = None
    explanation: str = ""
    obligations: tuple[str, ...] = ()
    stage: str = ""
    symbol_witness: Optional[tuple[Symbol, ...]] = None

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "stage": self.stage,
            "explanation": self.explanation,
            "obligations": list(self.obligations),
            "witness": None if self.witness is None else [_event_json(e) for e in self.witness],
        }
        if self.symbol_witness is not None:
            out["symbol_witness"] = word_str(self.symbol_witness)
        return out

    def to_text(self) -> str:
        lines = [f"verdict: {self.status.value} ({self.stage})"]
        if self.witness is not None:
            lines.append("witness: " + " ".join(str(e) for e in self.witness))
        if self.explanation:
            lines.append(self.explanation)
        lines.extend(f"obligation: {o}" for o in self.obligations)
        return "\n".join(lines)


def _event_json(e: Event) -> dict:
    return {"channel": e.channel} if e.value is None else {"channel": e.channel, "value": e.value}


# -- helpers -------------------------------------------------------------------


def _check_alphabets(a: Efsm, b: Efsm, cmap: Mapping[str, str]) -> None:
    for src, dst in cmap.items():
        if src not in a.channel_types:
            raise IncompatibleAlphabetError(f"channel map names {src!r}, which the assumption does not declare")
        if dst not in b.channel_types:
            raise IncompatibleAlphabetError(f"channel map names {dst!r}, which the candidate does not declare")
    for c in a.channels:
        dst = cmap.get(c.name, c.name)
        if dst in b.channel_types:
            sa, sb = SYMBOL_OF_TYPE[c.value_type], SYMBOL_OF_TYPE[b.channel_types[dst]]
            if sa is not sb:
                raise IncompatibleAlphabetError(
                    f"channel {c.name!r} erases to {sa} but its counterpart {dst!r} erases to {sb}")


def _rename(t: Sequence[Event], cmap: Mapping[str, str]) -> tuple[Event, ...]:
    if not cmap:
        return tuple(t)
    return tuple(Event(cmap.get(e.channel, e.channel), e.value) for e in t)


def first_reject(m: Efsm, t: Sequence[Event]) -> int:
    """Index of the first event ``m`` rejects, -1 if it accepts all of ``t``.

    An event on a channel ``m`` does not declare counts as rejected.
    """
    prog = program_for(m)
    if prog is not None:
        try:
            chans, vals = kernel.encode_trace(prog, t)
        except UndeclaredChannelError:
            pass
        except kernel.Ineligible:
            prog = None
        else:
            return kernel.get_backend().first_reject(prog, chans, vals)
    st = initial_state(m)
    for i, e in enumerate(t):
        if e.channel not in m.channel_types:
            return i
        out = step(m, st, e)
        if out.rejected:
            return i
        st = out.successors
    return -1


def _accepts(m: Efsm, t: Sequence[Event]) -> bool:
    return first_reject(m, t) < 0


def explain(a: Efsm, b: Efsm, t: Sequence[Event], cmap: Mapping[str, str] = {}) -> str:
    """Step-by-step replay of ``t`` on both machines."""
    lines = []
    sa, sb = initial_state(a), initial_state(b)

    def locs(st):
        return "{" + ",".join(sorted({c.location for c in st})) + "}"

    lines.append(f"start: a@{locs(sa)} b@{locs(sb)}")
    for i, e in enumerate(t):
        parts = [f"{i}: {e}"]
        for name, m, st, ev in (("a", a, sa, e), ("b", b, sb, _rename([e], cmap)[0])):
            if not st:
                parts.append(f"{name}: -")
                continue
            if ev.channel not in m.channel_types:
                parts.append(f"{name}: rejects (undeclared channel {ev.channel})")
                st = frozenset()
            else:
                out = step(m, st, ev)
                if out.kind is StepKind.NO_CHANNEL_MATCH:
                    parts.append(f"{name}: rejects (no transition on {ev.channel} from {locs(st)})")
                elif out.kind is StepKind.GUARD_REJECTED:
                    failed = sorted({str(cl) for _, cls in out.failures for cl in cls})
                    parts.append(f"{name}: rejects (guard fails: {'; '.join(failed)})")
                else:
                    parts.append(f"{name}@{locs(out.successors)}")
                st = out.successors
            if name == "a":
                sa = st
            else:
                sb = st
        lines.append("  ".join(parts))
    return "\n".join(lines)


# -- stage 2: simulation -------------------------------------------------------


def discover_var_map(a: Efsm, b: Efsm, cmap: Mapping[str, str] = {}) -> dict[str, str]:
    """Map ``b`` variables to ``a`` variables.

    Same name, type and initial value first; then ``v := c`` in ``b`` paired
    with ``u := c`` on a transition of ``a`` over the corresponding channel.
    """
    at, bt = a.variable_types, b.variable_types
    a_init, b_init = a.initial_valuation, b.initial_valuation
    phi = {}
    for v in b.variables:
        if v.name in at and at[v.name] is v.value_type and a_init[v.name] == b_init[v.name]:
            phi[v.name] = v.name
    for tb in b.transitions:
        for asg in tb.update.assignments:
            if asg.var in phi or not isinstance(asg.term, Chan):
                continue
            for ta in a.transitions:
                if cmap.get(ta.channel, ta.channel) != tb.channel:
                    continue
                for u in ta.update.assignments:
                    if (isinstance(u.term, Chan) and u.var not in phi.values()
                            and at[u.var] is bt[asg.var] and a_init[u.var] == b_init[asg.var]):
                        phi[asg.var] = u.var
                        break
                if asg.var in phi:
                    break
    return phi


def _map_term(t: Term, phi: Mapping[str, str]) -> Optional[Term]:
    if isinstance(t, Var):
        return Var(phi[t.name]) if t.name in phi else None
    if isinstance(t, Const):
        return Const(float(t.value))
    return t


def _updates_agree(ta: Transition, tb: Transition, phi: Mapping[str, str]) -> Optional[str]:
    for v, u in phi.items():
        mapped = _map_term(tb.update.term_for(v), phi)
        mine = ta.update.term_for(u)
        if isinstance(mine, Const):
            mine = Const(float(mine.value))
        if mapped is None or mapped != mine:
            return f"update of {v} in b does not track {u} in a"
    return None


def _match(ta: Transition, tb: Transition, phi: Mapping[str, str]) -> Optional[str]:
    """None if ``tb`` simulates ``ta`` locally, else the reason it does not."""
    ok, unproved = guard_implies(ta.guard, tb.guard, phi)
    if not ok:
        return f"guard [{ta.guard}] does not imply [{'; '.join(unproved)}]"
    return _updates_agree(ta, tb, phi)


@dataclass
class Simulation:
    holds: bool
    obligations: list[str] = field(default_factory=list)


def simulate(a: Efsm, b: Efsm, cmap: Mapping[str, str], phi: Mapping[str, str]) -> Simulation:
    """Greatest simulation of ``a`` by ``b`` under ``phi``."""
    a_init, b_init = a.initial_valuation, b.initial_valuation
    bad_init = [f"initial value of {v} in b differs from {u} in a"
                for v, u in phi.items() if a_init[u] != b_init[v]]
    if bad_init:
        return Simulation(False, bad_init)
    local: dict[tuple[str, str], list[list[tuple[Transition, str]]]] = {}
    reasons: dict[tuple[str, str], list[str]] = {}
    for la in a.locations:
        for lb in b.locations:
            per_ta = []
            why = []
            for ta in a.outgoing(la):
                chan = cmap.get(ta.channel, ta.channel)
                options = []
                tbs = b.outgoing(lb, chan) if chan in b.channel_types else ()
                if not tbs:
                    why.append(f"{la}/{lb}: no transition on {chan} in b")
                for tb in tbs:
                    r = _match(ta, tb, phi)
                    if r is None:
                        options.append((ta, tb.target))
                    else:
                        why.append(f"{la}/{lb}: {ta.channel} -> {r}")
                per_ta.append(options)
            local[(la, lb)] = per_ta
            reasons[(la, lb)] = why
    rel = set(local)
    changed = True
    while changed:
        changed = False
        for pair in list(rel):
            for options in local[pair]:
                if not any((ta.target, tgt) in rel for ta, tgt in options):
                    rel.discard(pair)
                    changed = True
                    break
    start = (a.start, b.start)
    if start in rel:
        return Simulation(True)
    # report obligations on the part of the product reachable from the start
    seen, stack, obligations = {start}, [start], []
    while stack:
        pair = stack.pop()
        for msg in reasons[pair]:
            if msg not in obligations:
                obligations.append(msg)
        la, lb = pair
        for ta in a.outgoing(la):
            chan = cmap.get(ta.channel, ta.channel)
            if chan not in b.channel_types:
                continue
            for tb in b.outgoing(lb, chan):
                nxt = (ta.target, tb.target)
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return Simulation(False, obligations or ["no simulation relation contains the start pair"])


# -- stage 3: differential testing ---------------------------------------------


def _batch_seed(seed: int, batch: int) -> int:
    return seed * 1_000_003 + batch


def differential(
    a: Efsm,
    b: Efsm,
    cmap: Mapping[str, str],
    samples: int,
    max_length: int,
    seed: int,
    boundary_p: float = BOUNDARY_P,
) -> Optional[tuple[Event, ...]]:
    """First (by batch seed, then draw order) ``a`` trace that ``b`` rejects.

    The returned trace is cut right after the rejected event.
    """
    for batch in range(math.ceil(samples / BATCH)):
        rng = random.Random(_batch_seed(seed, batch))
        for _ in range(min(BATCH, samples - batch * BATCH)):
            t = random_run(a, rng, rng.randint(1, max_length), boundary_p)
            idx = first_reject(b, _rename(t, cmap))
            if idx >= 0:
                return t[: idx + 1]
    return None


# -- entry point ---------------------------------------------------------------


def check_inclusion(
    a: Efsm,
    b: Efsm,
    channel_map: Optional[Mapping[str, str]] = None,
    var_map: Optional[Mapping[str, str]] = None,
    samples: int = SAMPLES,
    max_length: int = MAX_LENGTH,
    seed: int = 0,
) -> InclusionVerdict:
    """Decide (or bound) whether every trace of ``a`` is a trace of ``b``.

    ``channel_map`` sends ``a`` channels to ``b`` channels (identity where
    absent); ``var_map`` sends ``b`` variables to ``a`` variables and is
    discovered when omitted.
    """
    cmap = dict(channel_map or {})
    _check_alphabets(a, b, cmap)
    obligations: list[str] = []

    sym = symbol_inclusion(erase(a), erase(b))
    if not sym.holds:
        rng = random.Random(seed)
        w = run_along(a, sym.counterexample, {c.name: SYMBOL_OF_TYPE[c.value_type] for c in a.channels}, rng)
        if w is not None and not _accepts(b, _rename(w, cmap)):
            return InclusionVerdict(
                Verdict.FALSIFIED, w, explain(a, b, w, cmap),
                stage="symbol", symbol_witness=sym.counterexample)
        obligations.append(f"symbol word {word_str(sym.counterexample)} is not accepted by b "
                           "but could not be instantiated in a")

    phi = dict(var_map) if var_map is not None else discover_var_map(a, b, cmap)
    for v, u in phi.items():
        if v not in b.variable_types or u not in a.variable_types:
            raise IncompatibleAlphabetError(f"variable map entry {v!r} -> {u!r} names an undeclared variable")
    if sym.holds:
        sim = simulate(a, b, cmap, phi)
        if sim.holds:
            return InclusionVerdict(Verdict.VERIFIED, stage="simulation",
                                    explanation="every guard of a implies its simulating guard in b")
        obligations.extend(sim.obligations)

    w = differential(a, b, cmap, samples, max_length, seed)
    if w is not None:
        return InclusionVerdict(Verdict.FALSIFIED, w, explain(a, b, w, cmap), tuple(obligations),
                                stage="differential")
    return InclusionVerdict(
        Verdict.UNKNOWN, None,
        f"no rejected trace among {samples} random runs of length <= {max_length}",
        tuple(obligations), stage="differential")


# -- undetectable deviations ---------------------------------------------------


@dataclass(frozen=True)
class DeviationWitness:
    symbols: tuple[Symbol, ...]
    kind: str  # "structural" or "guard"
    trace: Optional[tuple[Event, ...]] = None

    def to_json(self) -> dict:
        return {
            "symbols": word_str(self.symbols),
            "kind": self.kind,
            "trace": None if self.trace is None else [_event_json(e) for e in self.trace],
        }

    def __str__(self) -> str:
        s = f"{self.kind}\t{word_str(self.symbols)}"
        if self.trace is not None:
            s += "\t" + " ".join(str(e) for e in self.trace)
        return s


@dataclass(frozen=True)
class DeviationReport:
    witnesses: tuple[DeviationWitness, ...]
    bound: int

    def __len__(self) -> int:
        return len(self.witnesses)

    def __iter__(self):
        return iter(self.witnesses)

    def to_json(self) -> dict:
        return {"bound": self.bound, "count": len(self.witnesses),
                "witnesses": [w.to_json() for w in self.witnesses]}

    def to_text(self) -> str:
        lines = [str(w) for w in self.witnesses]
        lines.append(f"# bound={self.bound} witnesses={len(self.witnesses)}")
        return "\n".join(lines)


def _constants(m: Efsm, channels: set[str]) -> set[float]:
    out = set()
    for t in m.transitions:
        if t.channel in channels:
            for atom in t.guard.atoms():
                for term in atom.terms():
                    if isinstance(term, Const) and not isinstance(term.value, bool):
                        out.add(float(term.value))
    return out


def _candidates(near: set[float], others: set[float], vtype: ValueType) -> list:
    """Values to try for a guard-level deviation.

    Just past ``a``'s own boundaries first (upper side first), then the
    midpoints between all known constants, then points far outside them.
    """
    near_s = sorted((p for p in near if math.isfinite(p)), reverse=True)
    s = sorted(p for p in near | others if math.isfinite(p)) or [0.0]
    raw = []
    for p in near_s:
        raw += [p + 1, p - 1, p + 0.5, p - 0.5]
    raw += [(x + y) / 2 for x, y in zip(s, s[1:])]
    for p in s:
        raw += [p + 1, p - 1]
    raw += [s[-1] + 1000, s[0] - 1000, 0.0]
    out = []
    for v in raw:
        if vtype is ValueType.INT:
            for iv in (math.floor(v), math.ceil(v)):
                if iv not in out:
                    out.append(iv)
        elif float(v) not in out:
            out.append(float(v))
    return out


def undetectable_deviations(
    a: Efsm,
    b: Efsm,
    bound: int,
    channel_map: Optional[Mapping[str, str]] = None,
    seed: int = 0,
) -> DeviationReport:
    """Traces of length <= ``bound`` that ``b`` accepts and ``a`` rejects.

    Structural witnesses are words of the erased ``b`` outside the erased
    ``a``, each with a concrete instance sampled from ``b`` when one exists.
    Guard witnesses share a word with both machines but end in a value that
    only ``b`` accepts.  Traces use ``a``'s channel names; every reported
    trace has been replayed on both machines.  Order: structural before
    guard, then shortest-first, then lexicographic by symbols.
    """
    cmap = dict(channel_map or {})
    _check_alphabets(a, b, cmap)
    inverse = {v: k for k, v in cmap.items()}
    rng = random.Random(seed)
    a_nfa, b_nfa = erase(a), erase(b)
    b_symbols = {c.name: SYMBOL_OF_TYPE[c.value_type] for c in b.channels}
    a_symbols = {c.name: SYMBOL_OF_TYPE[c.value_type] for c in a.channels}
    witnesses = []

    for word in difference_upto(b_nfa, a_nfa, bound):
        trace = None
        for _ in range(4):
            t = run_along(b, word, b_symbols, rng, tries=16)
            if t is None:
                break
            t = _rename(t, inverse)
            if not _accepts(a, t) and _accepts(b, _rename(t, cmap)):
                trace = t
                break
        witnesses.append(DeviationWitness(word, "structural", trace))

    for word in words_upto(a_nfa, bound):
        if not word or not b_nfa.accepts(word):
            continue
        w = _guard_witness(a, b, word, cmap, a_symbols, rng)
        if w is not None:
            witnesses.append(DeviationWitness(word, "guard", w))
    return DeviationReport(tuple(witnesses), bound)


def _guard_witness(a, b, word, cmap, a_symbols, rng) -> Optional[tuple[Event, ...]]:
    prefix_word, last = word[:-1], word[-1]
    chans = sorted(c for c, s in a_symbols.items() if s is last)
    for _ in range(8):
        prefix = run_along(a, prefix_word, a_symbols, rng, tries=16) if prefix_word else ()
        if prefix is None:
            return None
        if not _accepts(b, _rename(prefix, cmap)):
            continue
        _, sa = run(a, prefix)
        for ch in chans:
            if not any(a.outgoing(cfg.location, ch) for cfg in sa):
                continue
            vtype = a.channel_types[ch]
            if vtype is ValueType.UNIT:
                values = [None]
            else:
                others = _constants(b, {cmap.get(ch, ch)})
                for cfg in sa:
                    others |= {float(v) for v in cfg.valuation.values() if not isinstance(v, bool)}
                values = _candidates(_constants(a, {ch}), others, vtype)
            for v in values:
                t = prefix + (Event(ch, v),)
                if not _accepts(a, t) and _accepts(b, _rename(t, cmap)):
                    return t
        return None
    return None
