"""GPS distance calculator case study.

Input points are ``time lat lon`` lines.  Two calculators read them: one with
three ``scanf`` calls per point, one with ``getline`` + ``sscanf`` per line.
Both are simulated here at the level of the values their calls return, so
the effect of a format deviation on the monitor and on the computed
distance can be measured without running C code.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

from .api_effects import LINE_PATTERN, NEWLINE, SCANF_LIKE, ApiTable, build_external_efsm, split_lines
from .efsm import Efsm, Event
from .formats import annotation_from_json, apis_from_json, cfg_from_json, efsm_from_json
from .monitor import run_trace
from .skeleton import AnnotationSpec, Mode, annotate, extract_skeleton

EARTH_RADIUS_M = 6_371_000.0
START_TIME = 1000
MAX_STEP = 60
ALT_RANGE = (0.0, 9000.0)
REL_TOL = 1e-9


@dataclass(frozen=True)
class GpsPoint:
    time: int
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if self.time < 0 or not -90.0 <= self.lat <= 90.0 or not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"point out of range: {self}")

    def events(self) -> tuple[Event, ...]:
        return (Event("time", self.time), Event("lat", self.lat), Event("lon", self.lon), Event(NEWLINE))


class DeviationKind(str, Enum):
    D1 = "D1"  # extra altitude value after lon
    D2 = "D2"  # no line breaks


@dataclass(frozen=True)
class Deviation:
    kind: DeviationKind
    alt_range: tuple[float, float] = ALT_RANGE


D1 = Deviation(DeviationKind.D1)
D2 = Deviation(DeviationKind.D2)


def generate_points(n: int, seed: int, start_time: int = START_TIME) -> list[GpsPoint]:
    # timestamps start high enough that a timestamp misread as a latitude
    # always breaks the latitude range
    rng = random.Random(seed)
    t = start_time
    pts = []
    for _ in range(n):
        pts.append(GpsPoint(t, rng.uniform(-90.0, 90.0), rng.uniform(-180.0, 180.0)))
        t += rng.randint(0, MAX_STEP)
    return pts


def generate_conforming(n: int, seed: int, start_time: int = START_TIME) -> tuple[Event, ...]:
    if n < 0:
        raise ValueError("n must be non-negative")
    return tuple(e for p in generate_points(n, seed, start_time) for e in p.events())


def apply_deviation(t: Sequence[Event], d: Deviation, seed: int = 0) -> tuple[Event, ...]:
    if d.kind is DeviationKind.D2:
        return tuple(e for e in t if e.channel != NEWLINE)
    rng = random.Random(seed)
    lo, hi = d.alt_range
    out = []
    for e in t:
        out.append(e)
        if e.channel == "lon":
            out.append(Event("alt", rng.uniform(lo, hi)))
    return tuple(out)


# -- calculators ---------------------------------------------------------------


class Implementation(str, Enum):
    SCANF = "scanf"  # one scanf per value
    LINE = "line"  # getline + sscanf per point


# channel and %d/%f conversion for the 1st, 2nd, 3rd value of a point
FIELDS = (("time", int), ("lat", float), ("lon", float))


@dataclass(frozen=True)
class CalculatorRun:
    distance: float
    points_consumed: int
    observed: tuple[Event, ...]  # values as the application received them
    sources: tuple[int, ...] = ()  # index in the external trace of each observed value
    points: tuple[tuple[float, float], ...] = field(default=(), repr=False)


def haversine(lat1: float, lon1: float, lat2: float, lon2: float, r: float = EARTH_RADIUS_M) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * r * math.asin(math.sqrt(min(1.0, max(0.0, h))))


def path_distance(points: Sequence[tuple[float, float]]) -> float:
    return math.fsum(haversine(a[0], a[1], b[0], b[1]) for a, b in zip(points, points[1:]))


def run_calculator(impl: Implementation, external: Sequence[Event]) -> CalculatorRun:
    """Simulate ``impl``'s read loop on an environment trace."""
    observed: list[Event] = []
    sources: list[int] = []
    points: list[tuple[float, float]] = []
    if impl is Implementation.SCANF:
        values = [(i, e.value) for i, e in enumerate(external) if e.channel != NEWLINE]
        for k, (src, v) in enumerate(values):
            name, conv = FIELDS[k % 3]
            observed.append(Event(name, conv(v)))
            sources.append(src)
            if k % 3 == 2:
                points.append((float(observed[-2].value), float(observed[-1].value)))
    else:
        idx = [i for i, e in enumerate(external) if e.channel != NEWLINE]
        pos = 0
        for line in split_lines(external):
            got = line[:3]
            for j, e in enumerate(got):
                name, conv = FIELDS[j]
                observed.append(Event(name, conv(e.value)))
                sources.append(idx[pos + j])
            pos += len(line)
            if len(got) < 3:
                break
            points.append((float(observed[-2].value), float(observed[-1].value)))
    return CalculatorRun(path_distance(points), len(points), tuple(observed), tuple(sources), tuple(points))


# -- bundled artifacts ---------------------------------------------------------


def data_text(name: str) -> str:
    return resources.files("agmon").joinpath("data", name).read_text(encoding="utf-8")


def _data(name: str):
    return json.loads(data_text(name))


CFG_FILES = {Implementation.SCANF: "listing1.cfg.json", Implementation.LINE: "listing2.cfg.json"}
API_MODELS = {Implementation.SCANF: SCANF_LIKE, Implementation.LINE: LINE_PATTERN}


@dataclass(frozen=True)
class CaseStudy:
    assumption: Efsm
    apis: ApiTable
    spec: AnnotationSpec
    cfgs: dict
    monitors: dict  # internal assumption per implementation
    externals: dict  # internal assumption with API effects


@lru_cache(maxsize=1)
def load_case_study() -> CaseStudy:
    apis = apis_from_json(_data("apis.json"))
    spec = annotation_from_json(_data("gps.annotations.json"))
    cfgs = {impl: cfg_from_json(_data(f)) for impl, f in CFG_FILES.items()}
    monitors = {impl: annotate(extract_skeleton(c, apis, Mode.PLAIN), spec) for impl, c in cfgs.items()}
    externals = {impl: build_external_efsm(c, apis, spec) for impl, c in cfgs.items()}
    return CaseStudy(efsm_from_json(_data("assumption.efsm.json")), apis, spec, cfgs, monitors, externals)


# -- detection matrix ----------------------------------------------------------


class ResultStatus(str, Enum):
    CORRECT = "CorrectResult"
    WRONG = "WrongResult"


@dataclass(frozen=True)
class Cell:
    impl: Implementation
    deviation: str  # "none", "D1" or "D2"
    alarms: int
    distance: float
    baseline: float
    points_consumed: int
    status: ResultStatus
    first_alarm: Optional[int] = None

    def to_json(self) -> dict:
        return {"impl": self.impl.value, "deviation": self.deviation, "alarms": self.alarms,
                "distance": self.distance, "baseline": self.baseline,
                "points_consumed": self.points_consumed, "status": self.status.value,
                "first_alarm": self.first_alarm}


ROWS = ("none", "D1", "D2")


@dataclass(frozen=True)
class DetectionMatrix:
    n: int
    seed: int
    cells: tuple[Cell, ...]

    def cell(self, impl: Implementation, deviation: str) -> Cell:
        for c in self.cells:
            if c.impl is Implementation(impl) and c.deviation == deviation:
                return c
        raise KeyError((impl, deviation))

    def expectations(self) -> dict[str, bool]:
        s, ln = Implementation.SCANF, Implementation.LINE
        c = self.cell
        return {
            "none: no alarms, correct result": all(
                c(i, "none").alarms == 0 and c(i, "none").status is ResultStatus.CORRECT for i in (s, ln)),
            "scanf/D1: stream of alarms": c(s, "D1").alarms >= 2,
            "scanf/D2: no alarms, correct result": c(s, "D2").alarms == 0 and c(s, "D2").status is ResultStatus.CORRECT,
            "line/D1: no alarms, correct result": c(ln, "D1").alarms == 0 and c(ln, "D1").status is ResultStatus.CORRECT,
            "line/D2: no alarms, one point, wrong result": (
                c(ln, "D2").alarms == 0 and c(ln, "D2").points_consumed == 1
                and c(ln, "D2").distance == 0.0 and c(ln, "D2").status is ResultStatus.WRONG),
        }

    def expectations_met(self) -> bool:
        return all(self.expectations().values())

    def to_json(self) -> dict:
        return {"n": self.n, "seed": self.seed, "cells": [c.to_json() for c in self.cells],
                "expectations": self.expectations(), "expectations_met": self.expectations_met()}

    def to_text(self) -> str:
        head = f"{'impl':<6} {'deviation':<9} {'alarms':>6} {'points':>6} {'distance_m':>16} {'baseline_m':>16}  status"
        lines = [f"# detection matrix n={self.n} seed={self.seed}", head]
        for c in self.cells:
            lines.append(f"{c.impl.value:<6} {c.deviation:<9} {c.alarms:>6} {c.points_consumed:>6} "
                         f"{c.distance:>16.3f} {c.baseline:>16.3f}  {c.status.value}")
        for name, ok in self.expectations().items():
            lines.append(f"{'ok' if ok else 'FAILED':<6} {name}")
        return "\n".join(lines)


def _same(x: float, y: float) -> bool:
    return math.isclose(x, y, rel_tol=REL_TOL, abs_tol=0.0) or x == y


def detection_matrix(n: int, seed: int, backend: Optional[str] = None) -> DetectionMatrix:
    if n < 2:
        raise ValueError("the detection matrix needs at least 2 points")
    cs = load_case_study()
    base = generate_conforming(n, seed)
    traces = {"none": base, "D1": apply_deviation(base, D1, seed), "D2": apply_deviation(base, D2, seed)}
    cells = []
    for impl in Implementation:
        baseline = run_calculator(impl, base).distance
        for row in ROWS:
            r = run_calculator(impl, traces[row])
            rep = run_trace(cs.monitors[impl], r.observed, backend=backend)
            cells.append(Cell(
                impl, row, len(rep.alarms), r.distance, baseline, r.points_consumed,
                ResultStatus.CORRECT if _same(r.distance, baseline) else ResultStatus.WRONG,
                rep.alarms[0].position if rep.alarms else None))
    return DetectionMatrix(n, seed, tuple(cells))
