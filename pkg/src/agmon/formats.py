"""JSON and JSON Lines readers/writers for every on-disk artifact.

Loaders raise ``FormatError`` carrying a JSONPath-like locator of the fault;
semantic errors from the model constructors are re-raised the same way.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from .api_effects import ApiTable
from .automata import Symbol
from .efsm import ChannelDecl, Efsm, Event, Origin, Transition, ValueType, VariableDecl
from .errors import AgmonError, FormatError
from .expr import parse_guard, parse_update
from .skeleton import AnnotationSpec, Binding, Cfg, CfgNode, NodeKind, Skeleton, SkeletonTransition

_SYMBOLS = {"int": Symbol.INT, "float": Symbol.FLOAT, "newline": Symbol.NEWLINE}


def _get(doc: Any, key: str, kind, path: str, default=...):
    if not isinstance(doc, dict):
        raise FormatError("expected an object", path)
    if key not in doc:
        if default is ...:
            raise FormatError(f"missing field {key!r}", path)
        return default
    value = doc[key]
    if kind is not None and not isinstance(value, kind) or (kind in (int, float) and isinstance(value, bool)):
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise FormatError(f"field {key!r} must be {name}", f"{path}.{key}")
    return value


def _strings(doc: Any, key: str, path: str, default=...) -> list[str]:
    items = _get(doc, key, list, path, default)
    for i, s in enumerate(items):
        if not isinstance(s, str):
            raise FormatError("expected a string", f"{path}.{key}[{i}]")
    return items


def _enum(cls, value: Any, path: str):
    try:
        return cls(value)
    except ValueError:
        raise FormatError(f"unknown value {value!r} (expected one of {[m.value for m in cls]})", path) from None


def _wrap(fn, path: str, *args):
    try:
        return fn(*args)
    except FormatError as exc:
        raise exc.under(path) from None
    except AgmonError as exc:
        raise FormatError(str(exc), path) from None


# -- EFSM ----------------------------------------------------------------------


def efsm_from_json(doc: Any) -> Efsm:
    locations = _strings(doc, "locations", "$")
    start = _get(doc, "start", str, "$")
    channels = []
    for i, c in enumerate(_get(doc, "channels", list, "$")):
        p = f"$.channels[{i}]"
        vt = _enum(ValueType, _get(c, "type", str, p), f"{p}.type")
        channels.append(_wrap(ChannelDecl, p, _get(c, "name", str, p), vt))
    variables = []
    for i, v in enumerate(_get(doc, "variables", list, "$", [])):
        p = f"$.variables[{i}]"
        vt = _enum(ValueType, _get(v, "type", str, p), f"{p}.type")
        variables.append(_wrap(VariableDecl, p, _get(v, "name", str, p), vt, _get(v, "init", None, p)))
    transitions = []
    for i, t in enumerate(_get(doc, "transitions", list, "$", [])):
        p = f"$.transitions[{i}]"
        guard = _wrap(parse_guard, f"{p}.guard", _strings(t, "guard", p, []))
        update = _wrap(parse_update, f"{p}.update", _strings(t, "update", p, []))
        origin = _enum(Origin, _get(t, "origin", str, p, Origin.DIRECTIVE.value), f"{p}.origin")
        transitions.append(Transition(
            _get(t, "from", str, p), _get(t, "to", str, p), _get(t, "channel", str, p),
            guard, update, origin, _get(t, "site", (str, type(None)), p, None)))
    return _wrap(Efsm, "$", locations, start, channels, variables, transitions)


def efsm_to_json(m: Efsm) -> dict:
    out_t = []
    for t in m.transitions:
        d = {"from": t.source, "to": t.target, "channel": t.channel,
             "guard": t.guard.to_json(), "update": t.update.to_json(), "origin": t.origin.value}
        if t.site is not None:
            d["site"] = t.site
        out_t.append(d)
    return {
        "locations": list(m.locations),
        "start": m.start,
        "channels": [{"name": c.name, "type": c.value_type.value} for c in m.channels],
        "variables": [{"name": v.name, "type": v.value_type.value, "init": v.init} for v in m.variables],
        "transitions": out_t,
    }


# -- events --------------------------------------------------------------------


def events_from_jsonl(text: str) -> tuple[Event, ...]:
    return tuple(e for _, e in numbered_events(text))


def numbered_events(text: str) -> list[tuple[int, Event]]:
    """Events with their 1-based line numbers; blank lines are skipped."""
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        p = f"line {n}"
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", p) from None
        ch = _get(doc, "channel", str, p)
        value = _get(doc, "value", None, p, None)
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise FormatError("value must be a number or absent", f"{p}.value")
        out.append((n, Event(ch, value)))
    return out


def events_to_jsonl(trace: Iterable[Event]) -> str:
    lines = []
    for e in trace:
        d = {"channel": e.channel} if e.value is None else {"channel": e.channel, "value": e.value}
        lines.append(json.dumps(d))
    return "".join(line + "\n" for line in lines)


# -- CFG, skeleton, annotation -------------------------------------------------


def cfg_from_json(doc: Any) -> Cfg:
    nodes = []
    for i, n in enumerate(_get(doc, "nodes", list, "$")):
        p = f"$.nodes[{i}]"
        kind = _enum(NodeKind, _get(n, "kind", str, p), f"{p}.kind")
        nodes.append(CfgNode(_get(n, "id", str, p), kind,
                             _get(n, "api", (str, type(None)), p, None),
                             _get(n, "format", (str, type(None)), p, None)))
    edges = []
    for i, e in enumerate(_get(doc, "edges", list, "$", [])):
        p = f"$.edges[{i}]"
        edges.append((_get(e, "from", str, p), _get(e, "to", str, p)))
    return _wrap(Cfg, "$", _get(doc, "entry", str, "$"), nodes, edges)


def cfg_to_json(cfg: Cfg) -> dict:
    nodes = []
    for n in cfg.nodes:
        d = {"id": n.id, "kind": n.kind.value}
        if n.api is not None:
            d["api"] = n.api
        if n.format is not None:
            d["format"] = n.format
        nodes.append(d)
    return {"entry": cfg.entry, "nodes": nodes, "edges": [{"from": s, "to": d} for s, d in cfg.edges]}


def skeleton_from_json(doc: Any) -> Skeleton:
    states = _strings(doc, "states", "$")
    start = _get(doc, "start", str, "$")
    trans = []
    for i, t in enumerate(_get(doc, "transitions", list, "$")):
        p = f"$.transitions[{i}]"
        sym = _get(t, "symbol", str, p)
        if sym.lower() not in _SYMBOLS:
            raise FormatError(f"unknown symbol {sym!r}", f"{p}.symbol")
        src, dst = _get(t, "from", str, p), _get(t, "to", str, p)
        for end, key in ((src, "from"), (dst, "to")):
            if end not in states:
                raise FormatError(f"undeclared state {end!r}", f"{p}.{key}")
        origin = _enum(Origin, _get(t, "origin", str, p, Origin.DIRECTIVE.value), f"{p}.origin")
        trans.append(SkeletonTransition(src, _SYMBOLS[sym.lower()], dst, origin,
                                        _get(t, "node", str, p), _get(t, "directive", (int, type(None)), p, None)))
    if start not in states:
        raise FormatError(f"start state {start!r} is not declared", "$.start")
    return Skeleton(tuple(states), start, tuple(trans))


def skeleton_to_json(sk: Skeleton) -> dict:
    return {
        "states": list(sk.states),
        "start": sk.start,
        "transitions": [
            {"from": t.source, "to": t.target, "symbol": t.symbol.value, "origin": t.origin.value,
             "node": t.node, "directive": t.directive}
            for t in sk.transitions
        ],
    }


def annotation_from_json(doc: Any) -> AnnotationSpec:
    channels = None
    if isinstance(doc, dict) and "channels" in doc:
        channels = []
        for i, c in enumerate(_get(doc, "channels", list, "$")):
            p = f"$.channels[{i}]"
            vt = _enum(ValueType, _get(c, "type", str, p), f"{p}.type")
            channels.append(_wrap(ChannelDecl, p, _get(c, "name", str, p), vt))
        channels = tuple(channels)
    variables = []
    for i, v in enumerate(_get(doc, "variables", list, "$", [])):
        p = f"$.variables[{i}]"
        vt = _enum(ValueType, _get(v, "type", str, p), f"{p}.type")
        variables.append(_wrap(VariableDecl, p, _get(v, "name", str, p), vt, _get(v, "init", None, p)))
    bindings = {}
    for key, b in _get(doc, "bindings", dict, "$").items():
        p = f"$.bindings[{json.dumps(key)}]"
        bindings[key] = Binding(
            _get(b, "channel", str, p),
            _wrap(parse_guard, f"{p}.guard", _strings(b, "guard", p, [])),
            _wrap(parse_update, f"{p}.update", _strings(b, "update", p, [])),
        )
    return AnnotationSpec(bindings, tuple(variables), channels)


def annotation_to_json(spec: AnnotationSpec) -> dict:
    out = {}
    if spec.channels is not None:
        out["channels"] = [{"name": c.name, "type": c.value_type.value} for c in spec.channels]
    out["variables"] = [{"name": v.name, "type": v.value_type.value, "init": v.init} for v in spec.variables]
    out["bindings"] = {k: {"channel": b.channel, "guard": b.guard.to_json(), "update": b.update.to_json()}
                       for k, b in spec.bindings.items()}
    return out


def apis_from_json(doc: Any) -> ApiTable:
    return ApiTable.from_json(doc)


# -- files ---------------------------------------------------------------------


class InputFileError(AgmonError):
    """A file is missing, unreadable or malformed; names the file and path."""

    def __init__(self, file: str, message: str, missing: bool = False):
        super().__init__(f"{file}: {message}")
        self.file = file
        self.missing = missing


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileError(str(path), "no such file", missing=True) from None
    except OSError as exc:
        raise InputFileError(str(path), exc.strerror or str(exc), missing=True) from None


def load(path, parser):
    """Read ``path`` as JSON and hand it to ``parser``."""
    text = read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFileError(str(path), f"line {exc.lineno} column {exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        return parser(doc)
    except FormatError as exc:
        raise InputFileError(str(path), str(exc)) from None


def load_events(path) -> tuple[Event, ...]:
    return tuple(e for _, e in load_numbered_events(path))


def load_numbered_events(path) -> list[tuple[int, Event]]:
    try:
        return numbered_events(read_text(path))
    except FormatError as exc:
        raise InputFileError(str(path), str(exc)) from None


def load_efsm(path) -> Efsm:
    return load(path, efsm_from_json)


def load_cfg(path) -> Cfg:
    return load(path, cfg_from_json)


def load_skeleton(path) -> Skeleton:
    return load(path, skeleton_from_json)


def load_annotation(path) -> AnnotationSpec:
    return load(path, annotation_from_json)


def load_apis(path) -> ApiTable:
    return load(path, apis_from_json)


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"
