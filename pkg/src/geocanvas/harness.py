"""Episode loop between a policy and a canvas session.

A policy sees the problem, the catalog digest and the full action history,
and answers with prose plus an ordered list of tool calls.  The loop stops
when the prose carries an ``ANSWER:`` line, after two consecutive turns
without tool calls, at the turn cap, or when a policy call overruns its
deadline.  Every observation recorded here comes from :class:`Canvas`.
"""

from __future__ import annotations

import json
import re
import shlex
import subprocess
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

from .canvas import Canvas, Observation
from .expr import ParseError, UnboundVariable, parse_expr, referenced_names, RESERVED_NAMES, compile_expr
from .errors import GeoError
from .numeric import DEFAULT_POLICY, is_undefined, to_deg
from .toolspec import Action, Catalog, OverlayPatch, build_catalog, canonical_json, digest_of

TRACE_FORMAT_VERSION = 1
TERMINATIONS = ("answered", "no_tool_no_answer", "turn_cap", "timeout")
ANSWER_RE = re.compile(r"^[ \t]*ANSWER:[ \t]*(.*)$", re.IGNORECASE | re.MULTILINE)
NO_TOOL_STREAK = 2


class PolicyProtocolError(RuntimeError):
    """The policy sent something that is not a well-formed response."""


class AnswerParseError(ValueError):
    pass


class DigestMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class Limits:
    max_turns: int = 30
    per_turn_timeout_s: float = 120.0

    def __post_init__(self) -> None:
        if self.max_turns < 1:
            raise ValueError("max_turns must be at least 1")
        if self.per_turn_timeout_s <= 0:
            raise ValueError("per_turn_timeout_s must be positive")


@dataclass(frozen=True)
class Problem:
    id: str
    text: str
    image: str | None = None
    choices: Any = None  # list of letters, or mapping letter -> value

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id, "text": self.text}
        if self.image is not None:
            d["image"] = self.image
        if self.choices is not None:
            d["choices"] = self.choices
        return d

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> Problem:
        return cls(str(d["id"]), str(d.get("text", "")), d.get("image"), d.get("choices"))


@dataclass
class Turn:
    index: int
    text: str
    actions: list[Action] = field(default_factory=list)
    observations: list[Observation] = field(default_factory=list)
    wall_time_s: float = 0.0
    tokens: dict[str, Any] | None = None


@dataclass
class Trace:
    problem_id: str
    catalog_digest: str
    turns: list[Turn] = field(default_factory=list)
    final_answer: Any = None
    answer_text: str | None = None
    termination: str = "turn_cap"
    profile: str = "solve2d"
    mode: str = "full"
    overlays: list[dict[str, Any]] = field(default_factory=list)
    engine_mode: str = "strict"
    state_digest: str | None = None
    answer_error: str | None = None

    @property
    def actions(self) -> list[Action]:
        return [a for t in self.turns for a in t.actions]

    @property
    def observations(self) -> list[Observation]:
        return [o for t in self.turns for o in t.observations]

    def pairs(self) -> list[tuple[int, Action, Observation]]:
        return [(t.index, a, o) for t in self.turns for a, o in zip(t.actions, t.observations)]

    # ------------------------------------------------------------- JSONL

    def header(self) -> dict[str, Any]:
        return {
            "format_version": TRACE_FORMAT_VERSION,
            "type": "header",
            "episode": self.problem_id,
            "catalog_digest": self.catalog_digest,
            "profile": self.profile,
            "mode": self.mode,
            "overlays": self.overlays,
            "engine_mode": self.engine_mode,
        }

    def events(self, timing: bool = True) -> list[dict[str, Any]]:
        out: list[dict[str, Any]] = []
        seq = 0

        def emit(turn: int, kind: str, payload: Any) -> None:
            nonlocal seq
            out.append({"episode": self.problem_id, "turn": turn, "seq": seq, "type": kind, "payload": payload})
            seq += 1

        for t in self.turns:
            text_payload: dict[str, Any] = {"text": t.text}
            if timing:
                text_payload["wall_time_s"] = round(t.wall_time_s, 6)
            if t.tokens is not None:
                text_payload["tokens"] = t.tokens
            emit(t.index, "text", text_payload)
            for a, o in zip(t.actions, t.observations):
                emit(t.index, "action", a.to_json())
                emit(t.index, "observation", o.to_json())
        last = self.turns[-1].index if self.turns else 0
        emit(
            last,
            "termination",
            {
                "termination": self.termination,
                "final_answer": self.final_answer,
                "answer_text": self.answer_text,
                "answer_error": self.answer_error,
                "state_digest": self.state_digest,
            },
        )
        return out

    def to_jsonl(self, timing: bool = True) -> str:
        lines = [canonical_json(self.header())] + [canonical_json(e) for e in self.events(timing)]
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path, timing: bool = True) -> None:
        Path(path).write_text(self.to_jsonl(timing), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str) -> Trace:
        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not lines or lines[0].get("type") != "header":
            raise ValueError("trace has no header line")
        head = lines[0]
        if head.get("format_version") != TRACE_FORMAT_VERSION:
            raise ValueError(f"unsupported trace format_version {head.get('format_version')!r}")
        tr = cls(
            problem_id=str(head["episode"]),
            catalog_digest=head["catalog_digest"],
            profile=head.get("profile", "solve2d"),
            mode=head.get("mode", "full"),
            overlays=list(head.get("overlays") or []),
            engine_mode=head.get("engine_mode", "strict"),
        )
        turns: dict[int, Turn] = {}
        pending: Action | None = None
        for ev in lines[1:]:
            kind, idx, p = ev["type"], int(ev["turn"]), ev["payload"]
            if kind == "text":
                turns[idx] = Turn(idx, p.get("text", ""), wall_time_s=p.get("wall_time_s", 0.0), tokens=p.get("tokens"))
            elif kind == "action":
                pending = Action.from_json(p)
            elif kind == "observation":
                if pending is None:
                    raise ValueError(f"observation without action at seq {ev['seq']}")
                turn = turns.setdefault(idx, Turn(idx, ""))
                turn.actions.append(pending)
                turn.observations.append(Observation.from_json(p))
                pending = None
            elif kind == "termination":
                tr.termination = p["termination"]
                tr.final_answer = p.get("final_answer")
                tr.answer_text = p.get("answer_text")
                tr.answer_error = p.get("answer_error")
                tr.state_digest = p.get("state_digest")
            else:
                raise ValueError(f"unknown trace event type {kind!r}")
        tr.turns = [turns[k] for k in sorted(turns)]
        return tr

    @classmethod
    def read(cls, path: str | Path) -> Trace:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))

    def catalog(self) -> Catalog:
        return build_catalog(self.profile, self.mode, [OverlayPatch.from_json(o) for o in self.overlays])


# ------------------------------------------------------------------ policies


@dataclass(frozen=True)
class PolicyRequest:
    problem: Problem
    catalog_digest: str
    history: tuple[tuple[int, Action, Observation], ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "problem": self.problem.to_json(),
            "catalog_digest": self.catalog_digest,
            "history": [
                {"turn": t, "action": a.to_json(), "observation": {**o.to_json(), "text": o.text()}}
                for t, a, o in self.history
            ],
        }


@dataclass(frozen=True)
class PolicyResponse:
    text: str
    actions: tuple[Action, ...] = ()
    tokens: dict[str, Any] | None = None

    @classmethod
    def from_json(cls, d: Any) -> PolicyResponse:
        if not isinstance(d, Mapping):
            raise PolicyProtocolError("policy response must be a JSON object")
        text = d.get("text", "")
        raw = d.get("actions", [])
        if not isinstance(text, str):
            raise PolicyProtocolError("'text' must be a string")
        if not isinstance(raw, list):
            raise PolicyProtocolError("'actions' must be a list")
        acts = []
        for i, a in enumerate(raw):
            if not isinstance(a, Mapping) or not isinstance(a.get("tool"), str):
                raise PolicyProtocolError(f"action {i} must be an object with a string 'tool'")
            args = a.get("args", {})
            if args is None:
                args = {}
            if not isinstance(args, Mapping):
                raise PolicyProtocolError(f"action {i} 'args' must be an object")
            acts.append(Action(a["tool"], dict(args)))
        tokens = d.get("tokens")
        return cls(text, tuple(acts), dict(tokens) if isinstance(tokens, Mapping) else None)

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {"text": self.text, "actions": [a.to_json() for a in self.actions]}
        if self.tokens is not None:
            d["tokens"] = self.tokens
        return d


class Policy(Protocol):
    def __call__(self, request: PolicyRequest) -> PolicyResponse: ...


class ScriptedPolicy:
    """Plays back canned responses; an exhausted script yields empty turns.

    ``script`` is a list of responses, or a mapping from problem id to such
    a list.  Each episode keeps its own cursor.
    """

    def __init__(self, script: Sequence[Any] | Mapping[str, Sequence[Any]], repeat_last: bool = False):
        self._script = script
        self._repeat_last = repeat_last
        self._cursor: dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedPolicy:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def _responses(self, pid: str) -> Sequence[Any]:
        if isinstance(self._script, Mapping):
            return self._script.get(pid, [])
        return self._script

    def __call__(self, request: PolicyRequest) -> PolicyResponse:
        pid = request.problem.id
        with self._lock:
            i = self._cursor.get(pid, 0)
            self._cursor[pid] = i + 1
        items = self._responses(pid)
        if i >= len(items):
            if not (self._repeat_last and items):
                return PolicyResponse("")
            i = len(items) - 1
        item = items[i]
        return item if isinstance(item, PolicyResponse) else PolicyResponse.from_json(item)


class StdioPolicy:
    """Child process speaking one JSON line per request and per response."""

    def __init__(self, command: str | Sequence[str]):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen[str] | None = None

    def _ensure(self) -> subprocess.Popen[str]:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
            )
        return self._proc

    def __call__(self, request: PolicyRequest) -> PolicyResponse:
        proc = self._ensure()
        assert proc.stdin is not None and proc.stdout is not None
        try:
            proc.stdin.write(canonical_json(request.to_json()) + "\n")
            proc.stdin.flush()
        except OSError as exc:
            raise PolicyProtocolError(f"policy process rejected input: {exc}") from exc
        line = proc.stdout.readline()
        if not line:
            raise PolicyProtocolError("policy process closed its output")
        try:
            return PolicyResponse.from_json(json.loads(line))
        except json.JSONDecodeError as exc:
            raise PolicyProtocolError(f"policy output is not JSON: {exc}") from exc

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.poll() is None:
                self._proc.kill()
            self._proc.wait()
            for stream in (self._proc.stdin, self._proc.stdout):
                if stream is not None:
                    stream.close()
            self._proc = None


class HttpPolicy:
    """``POST <endpoint>/turn`` per turn with the request body as JSON."""

    def __init__(self, endpoint: str, timeout_s: float | None = None):
        self.url = endpoint.rstrip("/") + "/turn"
        self.timeout_s = timeout_s

    def __call__(self, request: PolicyRequest) -> PolicyResponse:
        body = canonical_json(request.to_json()).encode("utf-8")
        req = urllib.request.Request(self.url, data=body, method="POST", headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                if resp.status != 200:
                    raise PolicyProtocolError(f"policy endpoint returned HTTP {resp.status}")
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            raise PolicyProtocolError(f"policy endpoint returned HTTP {exc.code}") from exc
        except urllib.error.URLError as exc:
            raise PolicyProtocolError(f"policy endpoint unreachable: {exc.reason}") from exc
        try:
            return PolicyResponse.from_json(json.loads(payload))
        except json.JSONDecodeError as exc:
            raise PolicyProtocolError(f"policy endpoint sent invalid JSON: {exc}") from exc


class _Timeout(Exception):
    pass


def call_with_deadline(fn: Callable[[], Any], timeout_s: float) -> Any:
    """Run ``fn`` in a daemon thread and stop waiting after ``timeout_s``."""
    box: dict[str, Any] = {}

    def target() -> None:
        try:
            box["value"] = fn()
        except BaseException as exc:  # re-raised in the caller's thread
            box["error"] = exc

    th = threading.Thread(target=target, daemon=True)
    th.start()
    th.join(timeout_s)
    if th.is_alive():
        raise _Timeout
    if "error" in box:
        raise box["error"]
    return box["value"]


# -------------------------------------------------------------------- answer


def find_answer(text: str) -> str | None:
    m = ANSWER_RE.search(text or "")
    return m.group(1).strip() if m else None


def _choice_key(s: str) -> str:
    return s.strip().strip("().[]:").strip().upper()


def _canvas_scalar(state: Canvas | None, text: str) -> float:
    try:
        e = parse_expr(text)
    except ParseError as exc:
        raise AnswerParseError(f"cannot parse answer {text!r}: {exc}") from exc
    env: dict[str, Any] = {}
    for name in referenced_names(e) - RESERVED_NAMES:
        rec = state.get(name) if state is not None else None
        if rec is None or not rec.defined:
            raise AnswerParseError(f"answer refers to unknown or undefined object {name!r}")
        if rec.kind == "angle":
            env[name] = to_deg(rec.value)  # angles read out in degrees
        elif rec.kind == "number":
            env[name] = rec.value
        elif rec.kind == "function":
            env[name] = rec.value.evaluate
        elif rec.kind == "integral":
            env[name] = rec.value.value
        else:
            raise AnswerParseError(f"answer refers to {name!r}, a {rec.kind}")
    try:
        v = compile_expr(e)(env)
    except (UnboundVariable, GeoError) as exc:
        raise AnswerParseError(str(exc)) from exc
    if is_undefined(v) or isinstance(v, bool):
        raise AnswerParseError(f"answer {text!r} does not evaluate to a number")
    return float(v)


def extract_answer(text: str, state: Canvas | None = None, choices: Any = None, rel_tol: float = 1e-3) -> Any:
    """Read the value after the ANSWER marker.

    Numbers and expressions (over canvas names too) evaluate to floats.  With
    ``choices`` given, a choice letter is returned as-is; when choices carry
    values, a numeric answer maps to the nearest choice within ``rel_tol``.
    """
    raw = find_answer(text)
    if raw is None:
        raise AnswerParseError("no ANSWER line in text")
    raw = raw.rstrip(".").strip()
    if not raw:
        raise AnswerParseError("empty answer")
    if choices:
        letters = {_choice_key(str(k)): str(k) for k in choices}
        key = _choice_key(raw)
        if key in letters:
            return letters[key]
    try:
        value = _canvas_scalar(state, raw)
    except AnswerParseError:
        if choices:
            raise AnswerParseError(f"answer {raw!r} is neither a choice nor a number") from None
        raise
    if isinstance(choices, Mapping):
        best, best_err = None, None
        for k, cv in choices.items():
            try:
                target = float(cv) if not isinstance(cv, str) else _canvas_scalar(None, cv)
            except (AnswerParseError, TypeError, ValueError):
                continue
            err = abs(value - target)
            if err <= rel_tol * max(abs(value), abs(target)) or err <= DEFAULT_POLICY.abs_tol:
                if best_err is None or err < best_err:
                    best, best_err = str(k), err
        if best is not None:
            return best
    return value


# -------------------------------------------------------------------- episode


def run_episode(
    problem: Problem,
    policy: Policy,
    catalog: Catalog | None = None,
    limits: Limits = Limits(),
    env: Canvas | None = None,
    engine_mode: str = "strict",
) -> Trace:
    """Drive one episode to termination and return its trace."""
    catalog = catalog or build_catalog("solve2d")
    canvas = env if env is not None else Canvas(catalog=catalog)
    canvas.catalog = catalog
    trace = Trace(
        problem_id=problem.id,
        catalog_digest=catalog.digest,
        profile=catalog.profile,
        mode=catalog.mode,
        overlays=[o.to_json() for o in catalog.overlays],
        engine_mode=engine_mode,
    )
    history: list[tuple[int, Action, Observation]] = []
    streak = 0
    trace.termination = "turn_cap"
    for index in range(1, limits.max_turns + 1):
        request = PolicyRequest(problem, catalog.digest, tuple(history))
        start = time.monotonic()
        try:
            response = call_with_deadline(lambda: policy(request), limits.per_turn_timeout_s)
        except _Timeout:
            trace.termination = "timeout"
            trace.turns.append(Turn(index, "", wall_time_s=time.monotonic() - start))
            break
        if not isinstance(response, PolicyResponse):
            raise PolicyProtocolError(f"policy returned {type(response).__name__}, not a PolicyResponse")
        turn = Turn(index, response.text, wall_time_s=time.monotonic() - start, tokens=response.tokens)
        trace.turns.append(turn)
        raw = find_answer(response.text)
        if raw is not None:
            trace.termination = "answered"
            trace.answer_text = raw
            try:
                trace.final_answer = extract_answer(response.text, canvas, problem.choices)
            except AnswerParseError as exc:
                trace.answer_error = str(exc)
            break
        if not response.actions:
            streak += 1
            if streak >= NO_TOOL_STREAK:
                trace.termination = "no_tool_no_answer"
                break
            continue
        streak = 0
        for action in response.actions:
            obs = canvas.apply(action, mode=engine_mode)
            turn.actions.append(action)
            turn.observations.append(obs)
            history.append((index, action, obs))
    trace.state_digest = digest_of(canvas.export())
    return trace


def run_episodes(
    problems: Iterable[Problem],
    policy_factory: Callable[[Problem], Policy],
    catalog: Catalog | None = None,
    limits: Limits = Limits(),
    engine_mode: str = "strict",
    jobs: int = 1,
) -> list[Trace]:
    """Independent episodes, optionally in parallel; output order follows input."""
    items = list(problems)

    def one(p: Problem) -> Trace:
        return run_episode(p, policy_factory(p), catalog, limits, engine_mode=engine_mode)

    if jobs <= 1:
        return [one(p) for p in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, items))


# --------------------------------------------------------------------- replay


def replay(
    actions: Iterable[Action],
    env: Canvas | None = None,
    catalog: Catalog | None = None,
    expected_digest: str | None = None,
    engine_mode: str = "strict",
) -> tuple[Canvas, list[Observation]]:
    """Re-execute recorded actions from a fresh (or given) canvas."""
    catalog = catalog or build_catalog("solve2d")
    if expected_digest is not None and catalog.digest != expected_digest:
        raise DigestMismatch(f"catalog digest {catalog.digest[:12]} does not match trace digest {expected_digest[:12]}")
    canvas = env if env is not None else Canvas(catalog=catalog)
    canvas.catalog = catalog
    return canvas, [canvas.apply(a, mode=engine_mode) for a in actions]


def replay_trace(trace: Trace, catalog: Catalog | None = None) -> tuple[Canvas, list[Observation]]:
    """Replay a trace under the catalog named in its header (or ``catalog``)."""
    cat = catalog or trace.catalog()
    return replay(trace.actions, catalog=cat, expected_digest=trace.catalog_digest, engine_mode=trace.engine_mode)
