"""Independent reference implementations used as test oracles.

Nothing here imports agmon: the interpreter works on the raw JSON documents
and the enumerators on plain tuples, so agreement with the package is
evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import operator
import re

_OPS = {
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "=": operator.eq, "==": operator.eq, "!=": operator.ne, "<>": operator.ne,
    "≤": operator.le, "≥": operator.ge, "≠": operator.ne,
}
_ATOM = re.compile(r"^\s*(\S+?)\s*(<=|>=|!=|==|<>|≤|≥|≠|=|<|>)\s*(\S+)\s*$")
_ASSIGN = re.compile(r"^\s*(\w+)\s*(?::=|<-|←)\s*(\S+)\s*$")


def _term(tok, env, c):
    if tok == "c":
        return c
    if tok == "true":
        return True
    if tok == "false":
        return False
    if tok in env:
        return env[tok]
    return float(tok) if any(ch in tok for ch in ".eE") else int(tok)


def _num(x):
    return float(x) if isinstance(x, bool) else x


def holds(guard, env, c) -> bool:
    for clause in guard:
        ok = False
        for part in re.split(r"\|\||∨", clause):
            lhs, op, rhs = _ATOM.match(part).groups()
            x, y = _term(lhs, env, c), _term(rhs, env, c)
            if isinstance(x, bool) != isinstance(y, bool):
                raise TypeError("bool compared with number")
            if _OPS[op](_num(x), _num(y)):
                ok = True
                break
        if not ok:
            return False
    return True


def update(assignments, env, c):
    new = dict(env)
    for a in assignments:
        var, rhs = _ASSIGN.match(a).groups()
        v = _term(rhs, env, c)
        if isinstance(env[var], float) and not isinstance(v, bool):
            v = float(v)
        new[var] = v
    return new


def accepts(doc, trace) -> bool:
    """``trace`` is a list of (channel, value) pairs."""
    init = {v["name"]: (float(v["init"]) if v["type"] == "float" else v["init"]) for v in doc.get("variables", [])}
    states = [(doc["start"], init)]
    for ch, val in trace:
        nxt = []
        for loc, env in states:
            for t in doc["transitions"]:
                if t["from"] == loc and t["channel"] == ch and holds(t.get("guard", []), env, val):
                    cand = (t["to"], update(t.get("update", []), env, val))
                    if cand not in nxt:
                        nxt.append(cand)
        if not nxt:
            return False
        states = nxt
    return True


# -- languages -----------------------------------------------------------------


def nfa_accepts(start, transitions, word) -> bool:
    """``transitions`` is an iterable of (src, symbol, dst)."""
    cur = {start}
    for s in word:
        cur = {d for (a, sym, d) in transitions if a in cur and sym == s}
        if not cur:
            return False
    return True


def nfa_language(start, transitions, alphabet, n):
    """All accepted words of length <= n (brute force over alphabet^k)."""
    out = set()
    for k in range(n + 1):
        for w in itertools.product(alphabet, repeat=k):
            if nfa_accepts(start, transitions, w):
                out.add(w)
    return out


def brute_inclusion(a, b, alphabet, n):
    """(holds up to n, shortest-then-lexicographic counterexample)."""
    rank = {s: i for i, s in enumerate(alphabet)}
    for k in range(1, n + 1):
        for w in sorted(itertools.product(alphabet, repeat=k), key=lambda w: [rank[s] for s in w]):
            if nfa_accepts(*a, w) and not nfa_accepts(*b, w):
                return False, w
    return True, None


def cfg_language(cfg, directives_of, n):
    """Words of length <= n produced by paths of a CFG from its entry.

    ``cfg`` is the raw JSON document; ``directives_of(node)`` gives the
    symbol sequence of an API node.  States are (node, offset) with naive
    ε-closure, written independently of the package's construction.
    """
    kinds = {nd["id"]: nd for nd in cfg["nodes"]}
    succ = {nd["id"]: [] for nd in cfg["nodes"]}
    for e in cfg["edges"]:
        succ[e["from"]].append(e["to"])

    def seq(node):
        nd = kinds[node]
        return directives_of(nd) if nd["kind"] == "api" else ()

    def closure(states):
        todo, seen = list(states), set(states)
        while todo:
            node, k = todo.pop()
            if k == len(seq(node)) and kinds[node]["kind"] != "exit":
                for d in succ[node]:
                    if (d, 0) not in seen:
                        seen.add((d, 0))
                        todo.append((d, 0))
        return seen

    words = {()}
    layer = {(): closure({(cfg["entry"], 0)})}
    for _ in range(n):
        nxt = {}
        for w, states in layer.items():
            for node, k in states:
                s = seq(node)
                if k < len(s):
                    nxt.setdefault(w + (s[k],), set()).add((node, k + 1))
        layer = {w: closure(st) for w, st in nxt.items()}
        words |= set(layer)
    return words


def gps_cycle_language(n):
    """Prefixes of (Int Float Float)* up to length n, as symbol names."""
    cyc = ("Int", "Float", "Float")
    return {tuple(cyc[i % 3] for i in range(k)) for k in range(n + 1)}
