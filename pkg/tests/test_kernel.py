import random
from array import array

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agmon import kernel
from agmon.efsm import ChannelDecl, Efsm, Event, Transition, ValueType, VariableDecl, accepts
from agmon.expr import parse_guard, parse_update
from agmon.monitor import AlarmPolicy, StructuralPolicy, program_for, run_trace

BACKENDS = sorted(kernel.BACKENDS)
OPS = ["<", "<=", ">", ">=", "=", "!="]


def test_python_backend_always_present():
    assert kernel.get_backend("python") is kernel.BACKENDS["python"]
    with pytest.raises(ValueError):
        kernel.get_backend("gpu")


def test_native_backend_built():
    # the build ships the extension; the fallback is covered by the python backend tests
    assert kernel.HAVE_NATIVE


def test_ineligible_machines():
    nondet = Efsm(("a", "b"), "a", (ChannelDecl("x", ValueType.INT),), (),
                  (Transition("a", "a", "x"), Transition("a", "b", "x")))
    assert kernel.compile_machine(nondet) is None
    big = Efsm(("a",), "a", (ChannelDecl("x", ValueType.INT),), (),
               (Transition("a", "a", "x", parse_guard([f"c >= {2**60 + 1}"])),))
    assert kernel.compile_machine(big) is None


def test_huge_int_event_falls_back(cs):
    prog = program_for(cs.assumption)
    with pytest.raises(kernel.Ineligible):
        kernel.encode_trace(prog, [Event("time", 2**60 + 1)])
    rep = run_trace(cs.assumption, [Event("time", 2**60 + 1), Event("time", 0)])
    assert len(rep.alarms) == 1 and rep.alarms[0].kind.value == "structural_violation"


@st.composite
def machines(draw):
    n_loc = draw(st.integers(1, 4))
    locs = tuple(f"l{i}" for i in range(n_loc))
    chans = (ChannelDecl("i", ValueType.INT), ChannelDecl("f", ValueType.FLOAT), ChannelDecl("u", ValueType.UNIT))
    vars_ = (VariableDecl("n", ValueType.INT, 0), VariableDecl("x", ValueType.FLOAT, 0.0),
             VariableDecl("b", ValueType.BOOL, True))
    trans = []
    for loc in locs:
        for ch in chans:
            if not draw(st.booleans()):
                continue
            guard, update = [], []
            if ch.value_type is not ValueType.UNIT:
                var = "n" if ch.value_type is ValueType.INT else "x"
                for _ in range(draw(st.integers(0, 2))):
                    atoms = [f"c {draw(st.sampled_from(OPS))} {draw(st.sampled_from([var, '0', '3', '-2']))}"
                             for _ in range(draw(st.integers(1, 2)))]
                    if draw(st.booleans()):
                        atoms.append(f"b = {draw(st.sampled_from(['true', 'false']))}")
                    guard.append(" || ".join(atoms))
                if draw(st.booleans()):
                    update.append(f"{var} := c")
            if draw(st.booleans()):
                update.append(f"b := {draw(st.sampled_from(['true', 'false']))}")
            trans.append(Transition(loc, draw(st.sampled_from(locs)), ch.name,
                                    parse_guard(guard), parse_update(update)))
    return Efsm(locs, locs[0], chans, vars_, tuple(trans))


def _trace(rng, n):
    out = []
    for _ in range(n):
        ch = rng.choice("ifu")
        out.append(Event(ch, None if ch == "u" else (rng.randint(-3, 4) if ch == "i" else rng.choice(
            [-2.0, -0.5, 0.0, 1.5, 3.0]))))
    return out


@settings(max_examples=200)
@given(machines(), st.integers(0, 10_000), st.sampled_from(list(StructuralPolicy)))
def test_backends_agree_with_reference(m, seed, policy):
    prog = program_for(m)
    assert prog is not None
    t = _trace(random.Random(seed), 12)
    pol = AlarmPolicy(policy)
    ref = run_trace(m, t, pol, backend="reference")
    for b in BACKENDS:
        assert run_trace(m, t, pol, backend=b) == ref
    chans, vals = kernel.encode_trace(prog, t)
    want = next((k for k in range(len(t)) if not accepts(m, t[:k + 1])), -1)
    for b in BACKENDS:
        assert kernel.get_backend(b).first_reject(prog, chans, vals) == want


def test_encoding_is_flat(cs):
    prog = program_for(cs.assumption)
    chans, vals = kernel.encode_trace(prog, [Event("time", 3), Event("lat", 1.5), Event("newline")])
    assert isinstance(chans, array) and isinstance(vals, array)
    assert list(vals[:2]) == [3.0, 1.5]
