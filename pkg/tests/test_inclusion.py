import copy
import json
import random

import pytest

from agmon.api_effects import DEFAULT_APIS, build_external_efsm
from agmon.automata import Symbol
from agmon.case_study import Implementation
from agmon.efsm import accepts
from agmon.errors import IncompatibleAlphabetError
from agmon.formats import annotation_from_json, cfg_from_json, efsm_from_json
from agmon.inclusion import (
    Verdict, check_inclusion, discover_var_map, first_reject, simulate, undetectable_deviations,
)
from agmon.sampling import random_run


def _external(raw, listing, **guards):
    doc = copy.deepcopy(raw["gps"])
    for key, g in guards.items():
        doc["bindings"][key[::-1].replace("_", "/", 1)[::-1]]["guard"] = g
    return build_external_efsm(cfg_from_json(raw[listing]), DEFAULT_APIS, annotation_from_json(doc))


@pytest.mark.parametrize("impl", list(Implementation))
def test_listings_are_verified(cs, impl):
    v = check_inclusion(cs.assumption, cs.externals[impl])
    assert v.status is Verdict.VERIFIED and v.stage == "simulation" and v.witness is None


def test_plain_monitor_is_falsified_by_a_newline(cs):
    v = check_inclusion(cs.assumption, cs.monitors[Implementation.SCANF])
    assert v.status is Verdict.FALSIFIED and v.stage == "symbol"
    assert v.symbol_witness == (Symbol.INT, Symbol.FLOAT, Symbol.FLOAT, Symbol.NEWLINE)
    assert accepts(cs.assumption, v.witness)
    # the plain monitor has no newline channel at all
    assert first_reject(cs.monitors[Implementation.SCANF], v.witness) == 3


def test_narrowed_lat_is_falsified(cs, raw):
    b = _external(raw, "listing1", read_lat_0=["c >= -45", "c <= 45"])
    v = check_inclusion(cs.assumption, b, seed=3)
    assert v.status is Verdict.FALSIFIED and v.stage == "differential"
    assert accepts(cs.assumption, v.witness) and not accepts(b, v.witness)
    bad = v.witness[-1]
    assert bad.channel == "lat" and 45 < abs(bad.value) <= 90
    assert first_reject(b, v.witness) == len(v.witness) - 1
    assert "reject" in v.explanation.lower()
    doc = v.to_json()
    assert doc["status"] == "falsified" and json.dumps(doc)


def test_verdict_is_deterministic(cs, raw):
    b = _external(raw, "listing1", read_lat_0=["c >= -45", "c <= 45"])
    assert check_inclusion(cs.assumption, b, seed=9) == check_inclusion(cs.assumption, b, seed=9)


def test_unknown_when_sampling_misses(cs, raw):
    # a single excluded value is (almost surely) never sampled
    b = _external(raw, "listing1", read_lat_0=["c >= -90.0", "c <= 90.0", "c != 12.345"])
    v = check_inclusion(cs.assumption, b, samples=50)
    assert v.status is Verdict.UNKNOWN and v.obligations
    assert any("12.345" in o for o in v.obligations)


def test_var_map_discovery(cs):
    ext = cs.externals[Implementation.SCANF]
    assert discover_var_map(cs.assumption, ext) == {"first": "first", "last_time": "last_time"}
    assert simulate(cs.assumption, ext, {}, {"first": "first", "last_time": "last_time"}).holds


def test_renamed_variables_still_verify(cs, raw):
    doc = json.loads(json.dumps(raw["assumption"]).replace("last_time", "prev"))
    a = efsm_from_json(doc)
    v = check_inclusion(a, cs.externals[Implementation.SCANF])
    assert v.status is Verdict.VERIFIED


def test_alphabet_errors(cs):
    with pytest.raises(IncompatibleAlphabetError):
        check_inclusion(cs.assumption, cs.externals[Implementation.SCANF], channel_map={"alt": "time"})
    with pytest.raises(IncompatibleAlphabetError):
        check_inclusion(cs.assumption, cs.externals[Implementation.SCANF], channel_map={"time": "lat"})
    with pytest.raises(IncompatibleAlphabetError):
        check_inclusion(cs.assumption, cs.externals[Implementation.SCANF], var_map={"nope": "first"})


@pytest.mark.parametrize("impl", list(Implementation))
def test_verified_is_sound_on_many_runs(cs, impl):
    rng = random.Random(11)
    ext = cs.externals[impl]
    for _ in range(2000):
        t = random_run(cs.assumption, rng, rng.randint(0, 50))
        assert accepts(ext, t)


def test_no_deviations_against_itself(cs):
    assert len(undetectable_deviations(cs.assumption, cs.assumption, 6)) == 0


def test_widened_lon_guard_witness(cs, raw):
    b = _external(raw, "listing1", read_lon_0=["c >= -360.0", "c <= 360.0"])
    rep = undetectable_deviations(cs.assumption, b, 5)
    guard = [w for w in rep if w.kind == "guard"]
    assert guard and all(w.trace is not None for w in guard)
    # newline placement differs from the assumption regardless of the guards
    baseline = undetectable_deviations(cs.assumption, cs.externals[Implementation.SCANF], 5)
    assert [w.symbols for w in rep if w.kind == "structural"] == [w.symbols for w in baseline]
    assert all(w.kind == "structural" for w in baseline)
    for w in guard:
        bad = w.trace[-1]
        assert bad.channel == "lon" and 180 < abs(bad.value) <= 360
        assert accepts(b, w.trace) and not accepts(cs.assumption, w.trace)


def test_plain_monitor_structural_deviations(cs):
    mon = cs.monitors[Implementation.SCANF]
    rep = undetectable_deviations(cs.assumption, mon, 5)
    words = [w.symbols for w in rep if w.kind == "structural"]
    assert (Symbol.INT, Symbol.FLOAT, Symbol.FLOAT, Symbol.INT) in words
    assert all(Symbol.NEWLINE not in w for w in words)
    assert words == sorted(words, key=lambda w: (len(w), [list(Symbol).index(s) for s in w]))
    for w in rep:
        if w.trace is not None:
            assert accepts(mon, w.trace) and not accepts(cs.assumption, w.trace)
    assert rep.to_json()["count"] == len(rep)
