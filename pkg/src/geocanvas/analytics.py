"""Post-hoc analysis over episode traces.

Provenance rules (applied in this order, first match wins):

1. ``no_tools``: the episode made no tool calls.
2. ``resilient``: at least one call failed and the episode still answered.
3. ``clean_oracle``: the final numeric answer equals a query return.
4. ``hybrid``: the answering text quotes a query return, but the final
   value differs from every return.
5. ``llm_bypass``: tools were used and nothing in the answer is anchored.

Values are compared under a relative tolerance of 0.1%.
"""

from __future__ import annotations

import json
import math
import re
import statistics
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .errors import ErrorCode
from .harness import Trace
from .toolspec import ALL_SPECS

PROVENANCE_CLASSES = ("clean_oracle", "hybrid", "resilient", "llm_bypass", "no_tools")
ENGINE_AIDED = frozenset({"clean_oracle", "hybrid", "resilient"})
RULES_VERSION = 1
ANCHOR_REL_TOL = 1e-3
ANCHOR_ABS_TOL = 4e-7

PHASE_GROUPS = ("Primitive Construction", "Derived Construction", "Transform & Utility", "Query & Verification")
_GROUP_OF = {
    "points": 0,
    "lines": 0,
    "circles_conics": 0,
    "polygons_centers": 0,
    "solid3d": 0,
    "measurements": 1,
    "functions_calculus": 1,
    "other_construction": 1,
    "transforms": 2,
    "utility": 2,
    "render": 2,
    "query_measure": 3,
    "query_verify": 3,
    "query_cas": 3,
}
N_BINS = 4

_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")


def phase_group(tool: str) -> str | None:
    spec = ALL_SPECS.get(tool)
    if spec is None:
        return None
    return PHASE_GROUPS[_GROUP_OF[spec.group]]


# ----------------------------------------------------------------- provenance


def _close(a: float, b: float) -> bool:
    d = abs(a - b)
    return d <= ANCHOR_ABS_TOL or d <= ANCHOR_REL_TOL * max(abs(a), abs(b))


def _numbers(x: Any) -> list[float]:
    if isinstance(x, bool) or x is None:
        return []
    if isinstance(x, (int, float)):
        return [float(x)] if math.isfinite(x) else []
    if isinstance(x, (list, tuple)):
        return [v for item in x for v in _numbers(item)]
    if isinstance(x, Mapping):
        return [v for item in x.values() for v in _numbers(item)]
    return []


def engine_values(trace: Trace) -> list[float]:
    """Numeric values returned by successful queries, in trace order."""
    out: list[float] = []
    for o in trace.observations:
        if o.kind == "value":
            out.extend(_numbers(o.payload.get("value")))
            out.extend(_numbers({k: v for k, v in o.payload.items() if k not in ("value", "text", "units")}))
    return out


def _answer_turn_text(trace: Trace) -> str:
    return trace.turns[-1].text if trace.turns else ""


@dataclass(frozen=True)
class Provenance:
    klass: str
    engine_involved: bool
    anchored: bool  # the answer quotes or equals an engine value

    def to_json(self) -> dict[str, Any]:
        return {"class": self.klass, "engine_involved": self.engine_involved, "anchored": self.anchored}


def classify_provenance(trace: Trace) -> Provenance | None:
    """Provenance of an answered trace; ``None`` for traces that never answered."""
    if trace.termination != "answered":
        return None
    actions = trace.actions
    values = engine_values(trace)
    final = trace.final_answer
    exact = isinstance(final, (int, float)) and not isinstance(final, bool) and any(_close(final, v) for v in values)
    quoted = any(_close(float(m), v) for m in _NUMBER_RE.findall(_answer_turn_text(trace)) for v in values)
    anchored = exact or quoted
    if not actions:
        return Provenance("no_tools", False, False)
    if any(not o.ok for o in trace.observations):
        return Provenance("resilient", True, anchored)
    if exact:
        return Provenance("clean_oracle", True, True)
    if quoted:
        return Provenance("hybrid", True, True)
    return Provenance("llm_bypass", False, False)


def provenance_counts(traces: Iterable[Trace]) -> dict[str, int]:
    counts = {k: 0 for k in PROVENANCE_CLASSES}
    for t in traces:
        p = classify_provenance(t)
        if p is not None:
            counts[p.klass] += 1
    return counts


# ------------------------------------------------------------------- failures


@dataclass(frozen=True)
class FailureEvent:
    episode: str
    turn: int
    tool: str
    code: str
    ref: str | None = None
    cascade_root: str | None = None


@dataclass
class FailureReport:
    counts: dict[str, int]
    events: list[FailureEvent] = field(default_factory=list)
    cascades: list[tuple[str, str, int]] = field(default_factory=list)  # (episode, missing name, length)
    total_calls: int = 0

    @property
    def total_failures(self) -> int:
        return sum(self.counts.values())

    @property
    def failure_rate(self) -> float:
        return self.total_failures / self.total_calls if self.total_calls else 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "counts": self.counts,
            "total_failures": self.total_failures,
            "total_calls": self.total_calls,
            "failure_rate": self.failure_rate,
            "cascade_chains": len(self.cascades),
            "cascades": [{"episode": e, "missing": n, "length": k} for e, n, k in self.cascades],
        }


def _cascades(events: Sequence[FailureEvent]) -> list[tuple[int, int]]:
    """Index spans of >= 2 consecutive EntityNotFound failures on the same missing name."""
    spans, i = [], 0
    while i < len(events):
        e = events[i]
        j = i + 1
        if e.code == ErrorCode.ENTITY_NOT_FOUND.value and e.ref:
            while j < len(events) and events[j].code == e.code and events[j].ref == e.ref:
                j += 1
            if j - i >= 2:
                spans.append((i, j))
        i = j
    return spans


def failure_report(traces: Iterable[Trace]) -> FailureReport:
    counts = {c.value: 0 for c in ErrorCode}
    report = FailureReport(counts)
    for t in traces:
        evs = []
        for turn, a, o in t.pairs():
            report.total_calls += 1
            if not o.ok:
                code = o.code or ErrorCode.ENGINE_ERROR.value
                counts[code] = counts.get(code, 0) + 1
                evs.append(FailureEvent(t.problem_id, turn, a.tool, code, o.payload.get("ref")))
        for i, j in _cascades(evs):
            root = evs[i].ref
            for k in range(i, j):
                evs[k] = FailureEvent(**{**evs[k].__dict__, "cascade_root": root})
            report.cascades.append((t.problem_id, str(root), j - i))
        report.events.extend(evs)
    return report


# ---------------------------------------------------------------- trajectory


def phase_profile(traces: Iterable[Trace]) -> list[dict[str, float] | None]:
    """Tool-group shares per quartile of normalized call position.

    Traces with fewer than two calls are skipped.  A bin that received no
    calls is reported as ``None``.
    """
    counts = [[0] * len(PHASE_GROUPS) for _ in range(N_BINS)]
    for t in traces:
        tools = [a.tool for a in t.actions]
        k = len(tools)
        if k < 2:
            continue
        for i, tool in enumerate(tools):
            g = phase_group(tool)
            if g is None:
                continue
            p = i / (k - 1)
            b = min(int(p * N_BINS), N_BINS - 1)
            counts[b][PHASE_GROUPS.index(g)] += 1
    out: list[dict[str, float] | None] = []
    for row in counts:
        n = sum(row)
        out.append(None if n == 0 else {g: c / n for g, c in zip(PHASE_GROUPS, row)})
    return out


def turn_stats(traces: Sequence[Trace]) -> dict[str, Any]:
    turns = [len(t.turns) for t in traces]
    calls = [len(t.actions) for t in traces]
    term: dict[str, int] = {}
    for t in traces:
        term[t.termination] = term.get(t.termination, 0) + 1

    def summary(xs: list[int]) -> dict[str, float]:
        if not xs:
            return {"mean": 0.0, "median": 0.0, "max": 0}
        return {"mean": statistics.fmean(xs), "median": float(statistics.median(xs)), "max": max(xs)}

    hist: dict[str, int] = {}
    for n in turns:
        hist[str(n)] = hist.get(str(n), 0) + 1
    return {"episodes": len(traces), "turns": summary(turns), "calls": summary(calls), "turn_histogram": hist, "termination": term}


# -------------------------------------------------------------------- report


def analyze(traces: Sequence[Trace]) -> dict[str, Any]:
    return {
        "rules_version": RULES_VERSION,
        "provenance": provenance_counts(traces),
        "failures": failure_report(traces).to_json(),
        "phase_profile": phase_profile(traces),
        "turns": turn_stats(traces),
    }


def _table(rows: list[tuple[str, ...]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in rows)


def format_report(report: Mapping[str, Any]) -> str:
    """Aligned-column text rendering of :func:`analyze` output."""
    parts = []
    prov = report["provenance"]
    parts.append(_table([("provenance", "count")] + [(k, str(v)) for k, v in prov.items()]))
    fail = report["failures"]
    rows = [("error code", "count")] + [(k, str(v)) for k, v in fail["counts"].items()]
    rows.append(("total", str(fail["total_failures"])))
    rows.append(("cascade chains", str(fail["cascade_chains"])))
    parts.append(_table(rows))
    bins = report["phase_profile"]
    header = ("group",) + tuple(f"Q{i + 1}" for i in range(len(bins)))
    prow = [header]
    for g in PHASE_GROUPS:
        prow.append((g,) + tuple("-" if b is None else f"{b[g]:.3f}" for b in bins))
    parts.append(_table(prow))
    ts = report["turns"]
    parts.append(
        _table(
            [
                ("episodes", "turns mean", "turns max", "calls mean"),
                (str(ts["episodes"]), f"{ts['turns']['mean']:.2f}", str(ts["turns"]["max"]), f"{ts['calls']['mean']:.2f}"),
            ]
        )
    )
    return "\n\n".join(parts) + "\n"


def report_json(report: Mapping[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
