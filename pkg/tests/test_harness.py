from __future__ import annotations

import json
import math
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocanvas import build_catalog
from geocanvas.harness import (
    AnswerParseError,
    DigestMismatch,
    HttpPolicy,
    Limits,
    PolicyProtocolError,
    PolicyResponse,
    Problem,
    ScriptedPolicy,
    StdioPolicy,
    Trace,
    extract_answer,
    find_answer,
    replay,
    replay_trace,
    run_episode,
    run_episodes,
)
from geocanvas.toolspec import Action, digest_of

from conftest import BUILD_345, FIXTURES, build

PROBLEM = Problem("p1", "Find BP.")


def build_turn(text="building", extra=()):
    acts = [{"tool": t, "args": a} for t, a in BUILD_345] + list(extra)
    return {"text": text, "actions": acts}


class TestAnswer:
    def test_find(self):
        assert find_answer("work\nANSWER: 42\n") == "42"
        assert find_answer("  answer:   7.5") == "7.5"
        assert find_answer("the answer is 42") is None

    @pytest.mark.parametrize(
        "text,value",
        [("ANSWER: 5", 5.0), ("ANSWER: sqrt(6)/2", math.sqrt(6) / 2), ("ANSWER: 2*pi.", 2 * math.pi), ("ANSWER: -1e-3", -1e-3)],
    )
    def test_numeric(self, text, value):
        assert extract_answer(text) == pytest.approx(value)

    def test_choice_letter(self):
        assert extract_answer("ANSWER: (B)", choices=["A", "B", "C"]) == "B"
        assert extract_answer("ANSWER: c", choices=["A", "B", "C"]) == "C"

    def test_choice_by_value(self):
        choices = {"A": 3, "B": "sqrt(2)", "C": 5}
        assert extract_answer("ANSWER: 1.4142", choices=choices) == "B"
        assert extract_answer("ANSWER: 4", choices=choices) == 4.0

    def test_canvas_names(self, canvas_345):
        canvas_345.apply("add_distance", {"name": "d", "obj1": "B", "obj2": "P"})
        assert extract_answer("ANSWER: d", canvas_345) == pytest.approx(5.0)
        assert extract_answer("ANSWER: d^2 - 1", canvas_345) == pytest.approx(24.0)

    def test_angle_in_degrees(self):
        c = build(
            [
                ("add_point", {"name": "A", "x": 1, "y": 0}),
                ("add_point", {"name": "O", "x": 0, "y": 0}),
                ("add_point", {"name": "B", "x": 0, "y": 1}),
                ("add_angle", {"name": "t", "a": "A", "b": "O", "c": "B"}),
            ]
        )
        assert extract_answer("ANSWER: t", c) == pytest.approx(90.0)

    @pytest.mark.parametrize("text", ["no marker", "ANSWER:", "ANSWER: 2x", "ANSWER: zz", "ANSWER: sqrt(-1)"])
    def test_errors(self, text):
        with pytest.raises(AnswerParseError):
            extract_answer(text)

    def test_non_numeric_object(self, canvas_345):
        with pytest.raises(AnswerParseError, match="point"):
            extract_answer("ANSWER: A", canvas_345)


class TestEpisode:
    def test_answered(self):
        pol = ScriptedPolicy([build_turn(extra=[{"tool": "query_distance", "args": {"obj1": "B", "obj2": "P"}}]), {"text": "ANSWER: 5"}])
        tr = run_episode(PROBLEM, pol)
        assert tr.termination == "answered"
        assert tr.final_answer == 5.0 and tr.answer_text == "5"
        assert len(tr.turns) == 2 and len(tr.actions) == 7
        assert tr.observations[-1].value == pytest.approx(5.0)

    def test_answer_turn_actions_not_executed(self):
        pol = ScriptedPolicy([{"text": "ANSWER: 1", "actions": [{"tool": "add_point", "args": {"name": "A", "x": 0, "y": 0}}]}])
        tr = run_episode(PROBLEM, pol)
        assert tr.termination == "answered" and tr.actions == []
        assert tr.state_digest == digest_of(build([]).export())

    def test_no_tool_streak(self):
        tr = run_episode(PROBLEM, ScriptedPolicy([{"text": "hmm"}, {"text": "still thinking"}]))
        assert tr.termination == "no_tool_no_answer" and len(tr.turns) == 2

    def test_streak_resets(self):
        pol = ScriptedPolicy([{"text": "a"}, build_turn(), {"text": "b"}, {"text": "ANSWER: 3"}])
        assert run_episode(PROBLEM, pol).termination == "answered"

    def test_turn_cap(self):
        step = {"text": "more", "actions": [{"tool": "query_is_defined", "args": {"expr": "1"}}]}
        tr = run_episode(PROBLEM, ScriptedPolicy([step], repeat_last=True), limits=Limits(max_turns=4))
        assert tr.termination == "turn_cap" and len(tr.turns) == 4

    def test_timeout(self):
        def slow(request):
            threading.Event().wait(1.0)
            return PolicyResponse("late")

        tr = run_episode(PROBLEM, slow, limits=Limits(per_turn_timeout_s=0.05))
        assert tr.termination == "timeout" and len(tr.turns) == 1

    def test_unparseable_answer_kept(self):
        tr = run_episode(PROBLEM, ScriptedPolicy([{"text": "ANSWER: a lot"}]))
        assert tr.termination == "answered" and tr.final_answer is None and tr.answer_error

    def test_failures_are_observations(self):
        pol = ScriptedPolicy([{"text": "x", "actions": [{"tool": "add_segment", "args": {"name": "s", "p1": "A", "p2": "B"}}]}, {"text": "ANSWER: 0"}])
        tr = run_episode(PROBLEM, pol)
        assert tr.observations[0].code == "EntityNotFound"

    def test_bad_policy_return(self):
        with pytest.raises(PolicyProtocolError):
            run_episode(PROBLEM, lambda req: {"text": "dict"})

    def test_limits_validation(self):
        with pytest.raises(ValueError):
            Limits(max_turns=0)
        with pytest.raises(ValueError):
            Limits(per_turn_timeout_s=0)

    def test_request_history(self):
        seen = []

        def pol(req):
            seen.append(len(req.history))
            return PolicyResponse("", (Action("add_point", {"name": f"Q{len(seen)}", "x": 0, "y": 0}),)) if len(seen) < 3 else PolicyResponse("ANSWER: 1")

        run_episode(PROBLEM, pol)
        assert seen == [0, 1, 2]

    def test_run_episodes_parallel(self):
        problems = [Problem(f"p{i}", "") for i in range(6)]
        script = {f"p{i}": [build_turn(), {"text": f"ANSWER: {i}"}] for i in range(6)}
        pol = ScriptedPolicy(script)
        serial = run_episodes(problems, lambda p: ScriptedPolicy(script))
        parallel = run_episodes(problems, lambda p: pol, jobs=3)
        assert [t.final_answer for t in parallel] == list(range(6))
        assert [t.to_jsonl(timing=False) for t in serial] == [t.to_jsonl(timing=False) for t in parallel]


class TestTrace:
    @pytest.fixture
    def trace(self):
        pol = ScriptedPolicy([build_turn(extra=[{"tool": "add_line", "args": {"name": "m", "p1": "A", "p2": "Z"}}]), {"text": "ANSWER: BP", "actions": []}])
        return run_episode(PROBLEM, pol)

    def test_jsonl_round_trip(self, trace):
        text = trace.to_jsonl()
        back = Trace.from_jsonl(text)
        assert back.to_jsonl() == text
        assert back.actions == trace.actions

    def test_events_are_ordered(self, trace):
        lines = [json.loads(x) for x in trace.to_jsonl(timing=False).splitlines()]
        assert lines[0]["type"] == "header"
        assert [e["seq"] for e in lines[1:]] == list(range(len(lines) - 1))
        assert lines[-1]["type"] == "termination"
        assert "wall_time_s" not in json.dumps(lines)

    def test_replay_reaches_digest(self, trace):
        canvas, obs = replay_trace(trace)
        assert digest_of(canvas.export()) == trace.state_digest
        assert [o.to_json() for o in obs] == [o.to_json() for o in trace.observations]

    def test_digest_mismatch(self, trace):
        with pytest.raises(DigestMismatch):
            replay(trace.actions, catalog=build_catalog("solve3d"), expected_digest=trace.catalog_digest)

    def test_fixture(self):
        tr = Trace.read(FIXTURES / "dag-345.trace")
        canvas, obs = replay_trace(tr)
        assert digest_of(canvas.export()) == tr.state_digest
        assert obs[-1].value == pytest.approx(5.0)

    @pytest.mark.parametrize(
        "text",
        ["", '{"type":"text"}', '{"format_version":99,"type":"header"}'],
    )
    def test_bad_trace(self, text):
        with pytest.raises(ValueError):
            Trace.from_jsonl(text)


class TestPolicyResponse:
    @pytest.mark.parametrize(
        "payload",
        [[], {"text": 3}, {"actions": {}}, {"actions": [{"args": {}}]}, {"actions": [{"tool": "x", "args": []}]}],
    )
    def test_malformed(self, payload):
        with pytest.raises(PolicyProtocolError):
            PolicyResponse.from_json(payload)

    @given(st.text(max_size=30), st.lists(st.sampled_from(["add_point", "query_angle"]), max_size=3))
    @settings(max_examples=50)
    def test_round_trip(self, text, tools):
        r = PolicyResponse(text, tuple(Action(t, {"name": "A"}) for t in tools), {"in": 3})
        assert PolicyResponse.from_json(json.loads(json.dumps(r.to_json()))) == r


ECHO = (
    "import json,sys\n"
    "for line in sys.stdin:\n"
    "    req = json.loads(line)\n"
    "    n = len(req['history'])\n"
    "    out = {'text': 'ANSWER: %d' % n} if n else {'text': 'go', 'actions': [{'tool': 'add_point', 'args': {'name': 'A', 'x': 1, 'y': 2}}]}\n"
    "    print(json.dumps(out), flush=True)\n"
)


class TestExternalPolicies:
    def test_stdio(self):
        pol = StdioPolicy([sys.executable, "-c", ECHO])
        try:
            tr = run_episode(PROBLEM, pol)
        finally:
            pol.close()
        assert tr.termination == "answered" and tr.final_answer == 1.0

    def test_stdio_garbage(self):
        pol = StdioPolicy([sys.executable, "-c", "print('not json', flush=True)"])
        try:
            with pytest.raises(PolicyProtocolError):
                run_episode(PROBLEM, pol)
        finally:
            pol.close()

    @pytest.fixture
    def server(self):
        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                if self.path != "/turn":
                    self.send_response(404)
                    self.end_headers()
                    return
                out = json.dumps({"text": "ANSWER: %d" % len(body["history"])}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(out)))
                self.end_headers()
                self.wfile.write(out)

            def log_message(self, *args):
                pass

        srv = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        th = threading.Thread(target=srv.serve_forever, daemon=True)
        th.start()
        yield f"http://127.0.0.1:{srv.server_address[1]}"
        srv.shutdown()
        srv.server_close()

    def test_http(self, server):
        tr = run_episode(PROBLEM, HttpPolicy(server, timeout_s=5))
        assert tr.termination == "answered" and tr.final_answer == 0.0

    def test_http_errors(self, server):
        with pytest.raises(PolicyProtocolError, match="404"):
            run_episode(PROBLEM, HttpPolicy(server + "/nowhere", timeout_s=5))
        with pytest.raises(PolicyProtocolError, match="unreachable"):
            run_episode(PROBLEM, HttpPolicy("http://127.0.0.1:9", timeout_s=2))
