"""``agmon`` command line.

Exit codes: 0 success / verified / no alarms, 1 falsified / alarms raised /
expectations not met, 2 unknown, 64 usage error or missing file, 65
malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import __version__, formats
from .api_effects import DEFAULT_APIS, build_external_efsm
from .errors import AgmonError
from .formats import InputFileError

EX_OK, EX_FAIL, EX_UNKNOWN, EX_USAGE, EX_DATAERR = 0, 1, 2, 64, 65

DATA_FILES = ("assumption.efsm.json", "listing1.cfg.json", "listing2.cfg.json",
              "gps.annotations.json", "apis.json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2
        raise UsageError(f"{self.prog}: {message}")


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None) in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")


def _report(args, obj) -> None:
    if args.format == "json":
        _emit(args, json.dumps(obj.to_json(), indent=2, sort_keys=True))
    else:
        _emit(args, obj.to_text())


def _semantic(file: str, fn: Callable, *a):
    """Run a model step whose inputs came from ``file``; errors become exit 65."""
    try:
        return fn(*a)
    except AgmonError as exc:
        raise InputFileError(file, str(exc)) from None


def _apis(args):
    return formats.load_apis(args.apis) if args.apis else DEFAULT_APIS


# -- commands ------------------------------------------------------------------


def cmd_extract(args) -> int:
    from .skeleton import Mode, extract_skeleton

    cfg, apis = formats.load_cfg(args.cfg), _apis(args)
    sk = _semantic(args.cfg, extract_skeleton, cfg, apis, Mode(args.mode))
    _emit(args, formats.dumps(formats.skeleton_to_json(sk)))
    return EX_OK


def cmd_annotate(args) -> int:
    from .skeleton import annotate

    sk, spec = formats.load_skeleton(args.skeleton), formats.load_annotation(args.spec)
    m = _semantic(args.spec, annotate, sk, spec)
    _emit(args, formats.dumps(formats.efsm_to_json(m)))
    return EX_OK


def cmd_build_external(args) -> int:
    cfg, apis, spec = formats.load_cfg(args.cfg), _apis(args), formats.load_annotation(args.spec)
    m = _semantic(args.spec, build_external_efsm, cfg, apis, spec)
    _emit(args, formats.dumps(formats.efsm_to_json(m)))
    return EX_OK


def _channel_map(args) -> dict:
    out = {}
    for item in args.map or ():
        src, sep, dst = item.partition("=")
        if not sep or not src or not dst:
            raise UsageError(f"--map expects A_CHANNEL=B_CHANNEL, got {item!r}")
        out[src] = dst
    return out


def cmd_verify(args) -> int:
    from .inclusion import Verdict, check_inclusion

    a, b = formats.load_efsm(args.assumption), formats.load_efsm(args.candidate)
    v = _semantic(args.candidate, lambda: check_inclusion(
        a, b, channel_map=_channel_map(args), samples=args.samples, max_length=args.bound, seed=args.seed))
    _report(args, v)
    return {Verdict.VERIFIED: EX_OK, Verdict.FALSIFIED: EX_FAIL, Verdict.UNKNOWN: EX_UNKNOWN}[v.status]


def cmd_deviations(args) -> int:
    from .inclusion import undetectable_deviations

    a, b = formats.load_efsm(args.assumption), formats.load_efsm(args.candidate)
    r = _semantic(args.candidate, lambda: undetectable_deviations(
        a, b, args.bound, channel_map=_channel_map(args), seed=args.seed))
    _report(args, r)
    return EX_OK


def cmd_monitor(args) -> int:
    from .monitor import AlarmPolicy, StructuralPolicy, run_trace

    m = formats.load_efsm(args.efsm)
    numbered = formats.load_numbered_events(args.events)
    for lineno, e in numbered:
        try:
            m.check_event(e)
        except AgmonError as exc:
            raise InputFileError(args.events, f"line {lineno}: {exc}") from None
    events = [e for _, e in numbered]
    policy = AlarmPolicy(StructuralPolicy(args.policy))
    rep = run_trace(m, events, policy, backend=args.backend)
    _report(args, rep)
    return EX_FAIL if rep.alarms else EX_OK


def cmd_case_study(args) -> int:
    from .case_study import detection_matrix

    if args.n < 2:
        raise UsageError("--n must be at least 2")
    mat = detection_matrix(args.n, args.seed)
    _report(args, mat)
    return EX_OK if mat.expectations_met() else EX_FAIL


def cmd_generate(args) -> int:
    from .case_study import D1, D2, Implementation, apply_deviation, generate_conforming, run_calculator

    if args.n < 0:
        raise UsageError("--n must be non-negative")
    t = generate_conforming(args.n, args.seed)
    if args.deviation != "none":
        t = apply_deviation(t, {"D1": D1, "D2": D2}[args.deviation], args.seed)
    if args.observed:
        t = run_calculator(Implementation(args.observed), t).observed
    _emit(args, formats.events_to_jsonl(t) or "\n")
    return EX_OK


def cmd_data(args) -> int:
    from .case_study import data_text

    if args.name is None:
        _emit(args, "\n".join(DATA_FILES))
        return EX_OK
    if args.name not in DATA_FILES:
        raise UsageError(f"unknown data file {args.name!r}; choose from {', '.join(DATA_FILES)}")
    _emit(args, data_text(args.name))
    return EX_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="agmon", description="Assumption monitors extracted from input-handling code.")
    p.add_argument("--version", action="version", version=f"agmon {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def out(sp, reporting=False):
        sp.add_argument("--out", metavar="FILE", help="write here instead of standard output")
        if reporting:
            sp.add_argument("--format", choices=("json", "text"), default="text")

    sp = sub.add_parser("extract", help="CFG to type skeleton")
    sp.add_argument("--cfg", required=True)
    sp.add_argument("--apis", help="API table (default: scanf, getline_sscanf)")
    sp.add_argument("--mode", choices=("plain", "api_effects"), default="plain")
    out(sp)
    sp.set_defaults(fn=cmd_extract)

    sp = sub.add_parser("annotate", help="skeleton plus annotation spec to EFSM")
    sp.add_argument("--skeleton", required=True)
    sp.add_argument("--spec", required=True)
    out(sp)
    sp.set_defaults(fn=cmd_annotate)

    sp = sub.add_parser("build-external", help="annotated skeleton with API effects")
    sp.add_argument("--cfg", required=True)
    sp.add_argument("--apis")
    sp.add_argument("--spec", required=True)
    out(sp)
    sp.set_defaults(fn=cmd_build_external)

    for name, fn, bound, helptext in (
        ("verify", cmd_verify, 40, "check every assumption trace is a candidate trace"),
        ("deviations", cmd_deviations, 5, "list traces the candidate accepts but the assumption rejects"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--assumption", required=True)
        sp.add_argument("--candidate", required=True)
        sp.add_argument("--bound", type=int, default=bound,
                        help="max trace length explored" + (" by random testing" if name == "verify" else ""))
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--map", action="append", metavar="A=B", help="channel correspondence (repeatable)")
        if name == "verify":
            sp.add_argument("--samples", type=int, default=2000, help="random traces in the testing stage")
        out(sp, reporting=True)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("monitor", help="replay an event file through a monitor EFSM")
    sp.add_argument("--efsm", required=True)
    sp.add_argument("--events", required=True, help="JSON Lines event file")
    sp.add_argument("--policy", choices=("halt", "drop"), default="halt",
                    help="on an event with no transition for its channel")
    sp.add_argument("--backend", choices=("native", "python", "reference"))
    out(sp, reporting=True)
    sp.set_defaults(fn=cmd_monitor)

    sp = sub.add_parser("case-study", help="GPS calculator detection matrix")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    out(sp, reporting=True)
    sp.set_defaults(fn=cmd_case_study)

    sp = sub.add_parser("generate", help="write a GPS event trace")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--deviation", choices=("none", "D1", "D2"), default="none")
    sp.add_argument("--observed", choices=("scanf", "line"),
                    help="write what that calculator reads instead of the raw input")
    out(sp)
    sp.set_defaults(fn=cmd_generate)

    sp = sub.add_parser("data", help="list or print the bundled case-study files")
    sp.add_argument("name", nargs="?")
    out(sp)
    sp.set_defaults(fn=cmd_data)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    except InputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE if exc.missing else EX_DATAERR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    except SystemExit as exc:  # --help, --version
        return exc.code if isinstance(exc.code, int) else EX_OK


if __name__ == "__main__":
    sys.exit(main())
