import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from agmon.case_study import generate_conforming
from agmon.efsm import (
    ChannelDecl, Efsm, Event, StepKind, Transition, Valuation, ValueType, VariableDecl,
    accepts, apply_update, eval_guard, initial_state, project, run, step,
)
from agmon.errors import EfsmError, EventTypeError, UndeclaredChannelError
from agmon.expr import parse_guard, parse_update
from agmon.formats import efsm_to_json
from agmon.sampling import random_run

T, LAT, LON, NL = "time", "lat", "lon", "newline"


def ev(*pairs):
    return [Event(*p) if isinstance(p, tuple) else Event(p) for p in pairs]


def test_eval_guard_examples():
    assert eval_guard(parse_guard(["c >= -90", "c <= 90"]), {}, 45.0)
    assert eval_guard(parse_guard([]), {"x": 1}, 99)
    assert not eval_guard(parse_guard(["c >= last_time"]), {"last_time": 7}, 3)


def test_apply_update_examples():
    assert apply_update(parse_update(["last_time := c"]), Valuation({"last_time": 0}), 5) == {"last_time": 5}
    assert apply_update(parse_update([]), Valuation({"x": 1}), 9) == {"x": 1}
    assert apply_update(parse_update(["x := c", "y := x"]), Valuation({"x": 2, "y": 0}), 7) == {"x": 7, "y": 2}


def test_valuation_equality_is_type_aware():
    assert Valuation({"x": 1}) != Valuation({"x": True})
    assert hash(Valuation({"x": 1.0})) == hash(Valuation({"x": 1.0}))


def test_step_first_timestamp(cs):
    out = step(cs.assumption, initial_state(cs.assumption), Event(T, 0))
    assert out.kind is StepKind.ACCEPTED
    (cfg,) = out.successors
    assert cfg.valuation["last_time"] == 0 and cfg.valuation["first"] is False


def test_step_decreasing_timestamp_is_guard_rejected(cs):
    a = cs.assumption
    _, st_ = run(a, ev((T, 5), (LAT, 1.0), (LON, 1.0), NL))
    out = step(a, st_, Event(T, 3))
    assert out.kind is StepKind.GUARD_REJECTED
    assert any("c >= last_time" in str(cl) for _, cls in out.failures for cl in cls)


def test_step_from_empty_state(cs):
    out = step(cs.assumption, frozenset(), Event(T, 0))
    assert out.rejected and not out.successors


def test_no_channel_match(cs):
    out = step(cs.assumption, initial_state(cs.assumption), Event(LAT, 0.0))
    assert out.kind is StepKind.NO_CHANNEL_MATCH


def test_undeclared_channel_is_an_error(cs):
    with pytest.raises(UndeclaredChannelError):
        step(cs.assumption, initial_state(cs.assumption), Event("alt", 1.0))
    with pytest.raises(UndeclaredChannelError):
        accepts(cs.assumption, [Event("alt", 1.0)])


def test_event_typing(cs):
    a = cs.assumption
    with pytest.raises(EventTypeError):
        a.check_event(Event(T, 1.5))
    with pytest.raises(EventTypeError):
        a.check_event(Event(NL, 1))
    with pytest.raises(EventTypeError):
        a.check_event(Event(T, True))
    with pytest.raises(EventTypeError):
        a.check_event(Event(T, 2**63))
    assert a.check_event(Event(LAT, 10)) == Event(LAT, 10.0)


def test_accepts_examples(cs):
    a = cs.assumption
    assert accepts(a, ev((T, 0), (LAT, 10.0), (LON, 20.0), NL))
    assert accepts(a, [])
    assert not accepts(a, ev((T, 0), (LAT, 95.0)))
    assert not accepts(a, ev((T, -1)))
    assert accepts(a, ev((T, 5), (LAT, 0.0), (LON, 0.0), NL, (T, 5)))  # non-decreasing, not increasing


def test_project_examples():
    t = ev((T, 0), NL, (T, 1))
    assert project(t, {T}) == tuple(ev((T, 0), (T, 1)))
    assert project(t, set()) == ()
    assert project(t, {T, NL}) == tuple(t)


@pytest.mark.parametrize("kwargs", [
    dict(locations=("a",), start="b", channels=()),
    dict(locations=("a", "a"), start="a", channels=()),
    dict(locations=("a",), start="a", channels=(ChannelDecl("x", ValueType.INT),),
         transitions=(Transition("a", "z", "x"),)),
    dict(locations=("a",), start="a", channels=(), transitions=(Transition("a", "a", "x"),)),
    dict(locations=("a",), start="a", channels=(ChannelDecl("x", ValueType.INT),),
         transitions=(Transition("a", "a", "x", parse_guard(["c >= y"])),)),
    dict(locations=("a",), start="a", channels=(ChannelDecl("x", ValueType.FLOAT),),
         variables=(VariableDecl("n", ValueType.INT, 0),),
         transitions=(Transition("a", "a", "x", update=parse_update(["n := c"])),)),
    dict(locations=("a",), start="a", channels=(ChannelDecl("u", ValueType.UNIT),),
         transitions=(Transition("a", "a", "u", parse_guard(["c >= 1"])),)),
])
def test_malformed_machines(kwargs):
    with pytest.raises(EfsmError):
        Efsm(**kwargs)


def test_assumption_is_deterministic_on_conforming_traces(cs):
    a = cs.assumption
    for seed in range(20):
        st_ = initial_state(a)
        for e in generate_conforming(30, seed):
            out = step(a, st_, e)
            assert len(out.successors) == 1
            st_ = out.successors


def _mixed_traces(a, seed, n=200):
    rng = random.Random(seed)
    chans = [(T, lambda: rng.randint(-5, 2000)), (LAT, lambda: rng.uniform(-120, 120)),
             (LON, lambda: rng.uniform(-200, 200)), (NL, lambda: None)]
    for _ in range(n):
        if rng.random() < 0.5:
            t = list(random_run(a, rng, rng.randint(0, 20)))
            if t and rng.random() < 0.5:
                i = rng.randrange(len(t))
                ch, gen = rng.choice(chans)
                t[i] = Event(ch, gen())
            yield t
        else:
            yield [Event(ch, gen()) for ch, gen in (rng.choice(chans) for _ in range(rng.randint(0, 8)))]


def test_accepts_agrees_with_json_oracle(cs, raw):
    doc = raw["assumption"]
    for t in _mixed_traces(cs.assumption, 7):
        assert accepts(cs.assumption, t) == oracles.accepts(doc, [(e.channel, e.value) for e in t])


def test_accepts_agrees_with_oracle_on_nondeterministic_machine():
    m = Efsm(("s", "a", "b"), "s", (ChannelDecl("x", ValueType.INT),),
             (VariableDecl("n", ValueType.INT, 0),),
             (Transition("s", "a", "x", parse_guard(["c > 0"]), parse_update(["n := c"])),
              Transition("s", "b", "x", parse_guard(["c < 10"])),
              Transition("a", "a", "x", parse_guard(["c >= n"]), parse_update(["n := c"])),
              Transition("b", "b", "x", parse_guard(["c < 0"]))))
    doc = efsm_to_json(m)
    rng = random.Random(3)
    for _ in range(500):
        t = [Event("x", rng.randint(-3, 12)) for _ in range(rng.randint(0, 5))]
        assert accepts(m, t) == oracles.accepts(doc, [(e.channel, e.value) for e in t])


@given(st.integers(0, 10_000))
def test_prefix_closure(seed):
    from agmon.case_study import load_case_study

    a = load_case_study().assumption
    t = next(_mixed_traces(a, seed, 1))
    if accepts(a, t):
        assert all(accepts(a, t[:k]) for k in range(len(t)))


@given(st.integers(0, 10_000))
def test_step_accepts_coherence(seed):
    from agmon.case_study import load_case_study

    a = load_case_study().assumption
    t = next(_mixed_traces(a, seed, 1))
    st_ = initial_state(a)
    alive = True
    for e in t:
        st_ = step(a, st_, e).successors
        alive = alive and bool(st_)
    assert alive == accepts(a, t)


@given(st.lists(st.sampled_from([T, LAT, LON, NL])), st.sets(st.sampled_from([T, LAT, LON, NL])))
def test_projection_idempotent(chans, keep):
    t = [Event(c) for c in chans]
    p = project(t, keep)
    assert project(p, keep) == p
    assert [e.channel for e in p] == [c for c in chans if c in keep]
