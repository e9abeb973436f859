import json
import os
import sys

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from agmon.automata import ALPHABET, Nfa  # noqa: E402
from agmon.case_study import data_text, load_case_study  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cs():
    return load_case_study()


@pytest.fixture(scope="session")
def raw():
    names = ("assumption.efsm.json", "listing1.cfg.json", "listing2.cfg.json",
             "gps.annotations.json", "apis.json")
    return {n.split(".")[0]: json.loads(data_text(n)) for n in names}


@st.composite
def nfas(draw, max_states=6, alphabet=ALPHABET):
    n = draw(st.integers(1, max_states))
    states = [f"q{i}" for i in range(n)]
    trans = draw(st.sets(st.tuples(st.sampled_from(states), st.sampled_from(alphabet), st.sampled_from(states)),
                         max_size=3 * n))
    return Nfa(frozenset(states), states[0], frozenset(trans))


@st.composite
def cfgs(draw, max_nodes=6):
    """Raw CFG documents with api nodes on formats over %d/%f."""
    n = draw(st.integers(1, max_nodes))
    ids = [f"n{i}" for i in range(n)]
    nodes = []
    for i in ids:
        kind = draw(st.sampled_from(["api", "api", "opaque", "exit"]))
        if kind == "api":
            fmt = "".join(draw(st.lists(st.sampled_from(["%d", "%f", " %f"]), max_size=3)))
            api = draw(st.sampled_from(["scanf", "getline_sscanf"]))
            nodes.append({"id": i, "kind": "api", "api": api, "format": fmt})
        else:
            nodes.append({"id": i, "kind": kind})
    exits = {nd["id"] for nd in nodes if nd["kind"] == "exit"}
    edges = draw(st.sets(st.tuples(st.sampled_from(ids), st.sampled_from(ids)), max_size=2 * n))
    edges = sorted(e for e in edges if e[0] not in exits)
    return {"entry": ids[0], "nodes": nodes, "edges": [{"from": a, "to": b} for a, b in edges]}
