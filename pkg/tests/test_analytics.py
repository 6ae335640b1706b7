from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocanvas.analytics import (
    PHASE_GROUPS,
    PROVENANCE_CLASSES,
    analyze,
    classify_provenance,
    failure_report,
    format_report,
    phase_group,
    phase_profile,
    provenance_counts,
    report_json,
    turn_stats,
)
from geocanvas.harness import Problem, ScriptedPolicy, Trace, Turn, run_episode
from geocanvas.toolspec import Action

from conftest import BUILD_345, FIXTURES

BUILD = [{"tool": t, "args": a} for t, a in BUILD_345]
QUERY = {"tool": "query_distance", "args": {"obj1": "B", "obj2": "P"}}


def episode(*turns, pid="e"):
    return run_episode(Problem(pid, ""), ScriptedPolicy(list(turns)))


def step(*actions, text="working"):
    return {"text": text, "actions": list(actions)}


class TestProvenance:
    def test_no_tools(self):
        p = classify_provenance(episode({"text": "ANSWER: 5"}))
        assert p.klass == "no_tools" and not p.engine_involved

    def test_clean_oracle(self):
        p = classify_provenance(episode(step(*BUILD, QUERY), {"text": "ANSWER: 5"}))
        assert (p.klass, p.engine_involved, p.anchored) == ("clean_oracle", True, True)

    def test_hybrid(self):
        tr = episode(step(*BUILD, QUERY), {"text": "BP is 5.000, so twice that is\nANSWER: 10"})
        assert classify_provenance(tr).klass == "hybrid"

    def test_llm_bypass(self):
        tr = episode(step(*BUILD), {"text": "ANSWER: 7"})
        p = classify_provenance(tr)
        assert p.klass == "llm_bypass" and not p.anchored

    def test_resilient_wins(self):
        bad = {"tool": "add_segment", "args": {"name": "s", "p1": "A", "p2": "Nope"}}
        tr = episode(step(*BUILD, bad, QUERY), {"text": "ANSWER: 5"})
        p = classify_provenance(tr)
        assert p.klass == "resilient" and p.anchored

    def test_unanswered(self):
        assert classify_provenance(episode({"text": "a"}, {"text": "b"})) is None

    def test_fixture_counts(self):
        counts = provenance_counts([Trace.read(FIXTURES / "dag-345.trace")])
        assert counts == {k: int(k == "clean_oracle") for k in PROVENANCE_CLASSES}


def lines_setup():
    return [
        {"tool": "add_point", "args": {"name": n, "x": x, "y": y}}
        for n, x, y in [("A", 0, 0), ("B", 1, 0), ("C", 0, 1), ("D", 1, 1)]
    ] + [
        {"tool": "add_line", "args": {"name": "l1", "p1": "A", "p2": "B"}},
        {"tool": "add_line", "args": {"name": "l2", "p1": "C", "p2": "D"}},
    ]


class TestFailures:
    def test_cascade(self):
        refs = [
            {"tool": "add_segment", "args": {"name": "s", "p1": "A", "p2": "X"}},
            {"tool": "query_x_coord", "args": {"point": "X"}},
            {"tool": "add_circle", "args": {"name": "k", "center": "X", "radius": 1}},
        ]
        fail = {"tool": "add_intersect", "args": {"name": "X", "obj1": "l1", "obj2": "l2"}}
        tr = episode(step(*lines_setup(), fail, *refs), {"text": "ANSWER: 0"})
        rep = failure_report([tr])
        assert rep.counts["PreconditionFailed"] == 1 and rep.counts["EntityNotFound"] == 3
        assert rep.cascades == [("e", "X", 3)]
        assert rep.total_calls == 10 and rep.total_failures == 4
        assert rep.failure_rate == pytest.approx(0.4)
        assert [e.cascade_root for e in rep.events] == [None, "X", "X", "X"]

    def test_interrupted_chain(self):
        acts = [
            {"tool": "add_segment", "args": {"name": "s", "p1": "A", "p2": "X"}},
            {"tool": "add_segment", "args": {"name": "t", "p1": "A", "p2": "Y"}},
            {"tool": "add_segment", "args": {"name": "u", "p1": "A", "p2": "X"}},
        ]
        tr = episode(step(*lines_setup(), *acts), {"text": "ANSWER: 0"})
        assert failure_report([tr]).cascades == []

    def test_clean_trace(self):
        rep = failure_report([Trace.read(FIXTURES / "dag-345.trace")])
        assert rep.total_failures == 0 and rep.total_calls == 7
        assert rep.to_json()["cascade_chains"] == 0


class TestTrajectory:
    def test_phase_groups(self):
        assert phase_group("add_point") == "Primitive Construction"
        assert phase_group("add_distance") == "Derived Construction"
        assert phase_group("transform_reflect_line") == "Transform & Utility"
        assert phase_group("query_angle") == "Query & Verification"
        assert phase_group("not_a_tool") is None

    def test_profile_shape(self):
        tr = episode(step(*BUILD, QUERY), {"text": "ANSWER: 5"})
        bins = phase_profile([tr])
        assert len(bins) == 4
        assert bins[0]["Primitive Construction"] == 1.0
        assert bins[3]["Query & Verification"] == pytest.approx(0.5)
        for b in bins:
            assert sum(b.values()) == pytest.approx(1.0)

    def test_empty_bins(self):
        short = episode(step(*BUILD[:2]), {"text": "ANSWER: 1"})
        bins = phase_profile([short])
        assert bins[1] is None and bins[2] is None
        assert phase_profile([episode({"text": "ANSWER: 1"})]) == [None] * 4

    @given(st.lists(st.sampled_from(["add_point", "add_distance", "query_angle", "transform_translate"]), min_size=2, max_size=40))
    @settings(max_examples=50)
    def test_each_call_lands_once(self, tools):
        tr = Trace("t", "d")
        tr.turns = [Turn(1, "", [Action(t, {}) for t in tools])]
        bins = phase_profile([tr])
        assert all(b is None or sum(b.values()) == pytest.approx(1.0) for b in bins)
        assert bins[0] is not None and bins[3] is not None

    def test_turn_stats(self):
        traces = [episode(step(*BUILD), {"text": "ANSWER: 1"}, pid="a"), episode({"text": "x"}, {"text": "y"}, pid="b")]
        s = turn_stats(traces)
        assert s["episodes"] == 2
        assert s["termination"] == {"answered": 1, "no_tool_no_answer": 1}
        assert s["calls"]["max"] == 6 and s["turns"]["mean"] == 2.0
        assert turn_stats([])["turns"]["mean"] == 0.0


class TestReport:
    def test_format(self):
        rep = analyze([Trace.read(FIXTURES / "dag-345.trace")])
        text = format_report(rep)
        for g in PHASE_GROUPS:
            assert g in text
        assert "cascade chains" in text
        assert json.loads(report_json(rep))["rules_version"] == 1
