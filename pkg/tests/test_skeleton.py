import random
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from agmon.api_effects import DEFAULT_APIS, build_external_efsm
from agmon.automata import Symbol, erase, words_upto
from agmon.efsm import Origin, accepts
from agmon.errors import CfgError, FormatError, ChannelTypeError, CoverageError, UnknownApiError, UnsupportedFormatError
from agmon.formats import annotation_from_json, cfg_from_json
from agmon.skeleton import AnnotationSpec, Cfg, CfgNode, NodeKind, Mode, annotate, extract_skeleton
from conftest import cfgs

SYM = {"Int": Symbol.INT, "Float": Symbol.FLOAT, "Newline": Symbol.NEWLINE}


def _cycle(n):
    return {tuple(SYM[s] for s in w) for w in oracles.gps_cycle_language(n)}


def _lang(sk, n):
    return set(words_upto(sk.to_nfa(), n))


@pytest.mark.parametrize("listing", ["listing1", "listing2"])
def test_plain_skeleton_is_the_three_state_cycle(raw, listing):
    sk = extract_skeleton(cfg_from_json(raw[listing]), DEFAULT_APIS, Mode.PLAIN)
    assert len(sk.states) == 3 and len(sk.transitions) == 3
    assert _lang(sk, 9) == _cycle(9)


def test_only_opaque_nodes():
    cfg = cfg_from_json({"entry": "a", "nodes": [{"id": "a", "kind": "opaque"}, {"id": "b", "kind": "exit"}],
                         "edges": [{"from": "a", "to": "b"}, {"from": "a", "to": "a"}]})
    sk = extract_skeleton(cfg, DEFAULT_APIS)
    assert sk.states == ("a",) and sk.transitions == ()
    m = annotate(sk, AnnotationSpec({}))
    assert accepts(m, []) and not m.transitions


def test_provenance(raw):
    sk = extract_skeleton(cfg_from_json(raw["listing1"]), DEFAULT_APIS, Mode.API_EFFECTS)
    keys = sorted(t.key for t in sk.directive_transitions())
    assert keys == ["read_lat/0", "read_lon/0", "read_time/0"]
    assert {t.origin for t in sk.transitions} == {Origin.DIRECTIVE, Origin.API_SELF_LOOP}


def test_cfg_validation():
    with pytest.raises(CfgError):
        Cfg("x", [CfgNode("a", NodeKind.OPAQUE)], [])
    with pytest.raises(FormatError, match="entry 'x'"):
        cfg_from_json({"entry": "x", "nodes": [{"id": "a", "kind": "opaque"}], "edges": []})
    with pytest.raises(FormatError):
        cfg_from_json({"entry": "a", "nodes": [{"id": "a", "kind": "exit"}], "edges": [{"from": "a", "to": "a"}]})
    with pytest.raises(FormatError):
        cfg_from_json({"entry": "a", "nodes": [{"id": "a", "kind": "api", "api": "scanf"}], "edges": []})
    with pytest.warns(UserWarning, match="unreachable"):
        cfg_from_json({"entry": "a", "nodes": [{"id": "a", "kind": "opaque"}, {"id": "b", "kind": "opaque"}],
                       "edges": []})


def test_extraction_errors():
    bad_fmt = cfg_from_json({"entry": "a", "nodes": [{"id": "a", "kind": "api", "api": "scanf", "format": "%s"}],
                             "edges": []})
    with pytest.raises(UnsupportedFormatError):
        extract_skeleton(bad_fmt, DEFAULT_APIS)
    bad_api = cfg_from_json({"entry": "a", "nodes": [{"id": "a", "kind": "api", "api": "gets", "format": "%d"}],
                             "edges": []})
    with pytest.raises(UnknownApiError):
        extract_skeleton(bad_api, DEFAULT_APIS)


def test_annotation_yields_the_monitor(cs, raw):
    from agmon.case_study import Implementation

    m = cs.monitors[Implementation.SCANF]
    by_chan = {t.channel: t for t in m.transitions}
    assert set(by_chan) == {"time", "lat", "lon"}
    assert [str(c) for c in by_chan["time"].guard.conjuncts] == ["c >= 0", "first = true || c >= last_time"]
    assert str(by_chan["time"].update) == "last_time := c; first := false"
    assert [str(c) for c in by_chan["lat"].guard.conjuncts] == ["c >= -90.0", "c <= 90.0"]
    assert [str(c) for c in by_chan["lon"].guard.conjuncts] == ["c >= -180.0", "c <= 180.0"]
    assert m.initial_valuation == {"first": True, "last_time": 0}


def test_annotation_coverage_error(raw):
    doc = dict(raw["gps"])
    doc["bindings"] = {k: v for k, v in doc["bindings"].items() if k != "read_lon/0"}
    sk = extract_skeleton(cfg_from_json(raw["listing1"]), DEFAULT_APIS)
    with pytest.raises(CoverageError, match="read_lon/0"):
        annotate(sk, annotation_from_json(doc))


def test_annotation_type_mismatch(raw):
    doc = dict(raw["gps"])
    doc["bindings"] = dict(doc["bindings"])
    doc["bindings"]["read_time/0"] = {"channel": "lat", "guard": [], "update": []}
    sk = extract_skeleton(cfg_from_json(raw["listing1"]), DEFAULT_APIS)
    with pytest.raises(ChannelTypeError):
        annotate(sk, annotation_from_json(doc))


def test_external_machines(cs):
    from agmon.case_study import Implementation

    ext1 = cs.externals[Implementation.SCANF]
    loops = [t for t in ext1.transitions if t.origin is Origin.API_SELF_LOOP]
    assert len(loops) == 3 and all(t.channel == "newline" and t.source == t.target for t in loops)
    assert len({t.source for t in loops}) == 3
    ext2 = cs.externals[Implementation.LINE]
    loops2 = [t for t in ext2.transitions if t.origin is Origin.API_SELF_LOOP]
    assert sorted(t.channel for t in loops2) == ["lat", "lon", "time"]
    (term,) = [t for t in ext2.transitions if t.origin is Origin.API_TERMINATOR]
    assert term.channel == "newline" and term.target == ext2.start


def _directives_of(node):
    return tuple({"d": Symbol.INT, "f": Symbol.FLOAT}[c] for c in node["format"].replace("%", "").replace(" ", ""))


@settings(max_examples=150)
@given(cfgs())
def test_epsilon_elimination_preserves_language(doc):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = cfg_from_json(doc)
    sk = extract_skeleton(cfg, DEFAULT_APIS, Mode.PLAIN)
    assert _lang(sk, 6) == oracles.cfg_language(doc, _directives_of, 6)


@settings(max_examples=100)
@given(cfgs(), st.integers(0, 1000))
def test_random_cfg_paths_are_accepted(doc, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = cfg_from_json(doc)
    nfa = extract_skeleton(cfg, DEFAULT_APIS).to_nfa()
    rng = random.Random(seed)
    node, word = doc["entry"], []
    kinds = {n["id"]: n for n in doc["nodes"]}
    for _ in range(10):
        if kinds[node]["kind"] == "api":
            word.extend(_directives_of(kinds[node]))
        succ = [e["to"] for e in doc["edges"] if e["from"] == node]
        if not succ:
            break
        node = rng.choice(succ)
    assert nfa.accepts(word)


@settings(max_examples=100)
@given(cfgs())
def test_provenance_is_total(doc):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = cfg_from_json(doc)
    for mode in Mode:
        for t in extract_skeleton(cfg, DEFAULT_APIS, mode).transitions:
            if t.origin is Origin.DIRECTIVE:
                assert t.directive is not None and t.node in {n["id"] for n in doc["nodes"]}


def test_listings_plain_languages_agree(raw):
    a = extract_skeleton(cfg_from_json(raw["listing1"]), DEFAULT_APIS)
    b = extract_skeleton(cfg_from_json(raw["listing2"]), DEFAULT_APIS)
    assert _lang(a, 9) == _lang(b, 9)


def test_build_external_equals_composition(raw):
    cfg, spec = cfg_from_json(raw["listing2"]), annotation_from_json(raw["gps"])
    assert build_external_efsm(cfg, DEFAULT_APIS, spec) == annotate(
        extract_skeleton(cfg, DEFAULT_APIS, Mode.API_EFFECTS), spec)


def test_opaque_only_external():
    cfg = cfg_from_json({"entry": "a", "nodes": [{"id": "a", "kind": "opaque"}], "edges": []})
    m = build_external_efsm(cfg, DEFAULT_APIS, AnnotationSpec({}))
    assert not m.transitions and erase(m).accepts(()) and not erase(m).accepts((Symbol.INT,))
