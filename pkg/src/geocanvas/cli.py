"""Command-line entry point.

Exit status: 0 on success, 1 when an operation fails, 2 on usage errors.
Settings for ``run`` come from flags, then ``GEOCANVAS_*`` environment
variables, then an optional TOML config file, then built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Sequence, TextIO

from . import analytics, verifier
from .canvas import MODES as ENGINE_MODES
from .canvas import STYLE_PRESETS, Canvas
from .harness import (
    DigestMismatch,
    HttpPolicy,
    Limits,
    PolicyProtocolError,
    Problem,
    ScriptedPolicy,
    StdioPolicy,
    Trace,
    replay_trace,
    run_episode,
)
from .numeric import DEFAULT_POLICY, TolerancePolicy
from .render import Viewport, apply_textbook_preset, fit_viewport, render_svg
from .toolspec import MODES as CATALOG_MODES
from .toolspec import PROFILES, UnknownOverlayTarget, build_catalog, digest_of, export_catalog, load_overlays

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

ENV_PREFIX = "GEOCANVAS_"


class OperationError(Exception):
    pass


@dataclass
class RunConfig:
    policy: str = "scripted"
    endpoint: str | None = None  # script file, child command, or base URL
    profile: str = "solve2d"
    mode: str = "full"
    overlay: str | None = None
    max_turns: int = 30
    per_turn_timeout_s: float = 120.0
    engine_mode: str = "strict"
    out: str = "runs"
    jobs: int = 1
    timing: bool = False

    @classmethod
    def resolve(cls, flags: argparse.Namespace, env: dict[str, str] | None = None) -> RunConfig:
        env = dict(os.environ if env is None else env)
        values: dict[str, Any] = {}
        if getattr(flags, "config", None):
            data = tomllib.loads(Path(flags.config).read_text(encoding="utf-8"))
            values.update(data.get("run", data))
        for f in fields(cls):
            key = ENV_PREFIX + f.name.upper()
            if key in env:
                values[f.name] = env[key]
        for f in fields(cls):
            v = getattr(flags, f.name, None)
            if v is not None:
                values[f.name] = v
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise OperationError(f"unknown run setting(s): {', '.join(unknown)}")
        cfg = cls()
        for k, v in values.items():
            default = getattr(cfg, k)
            if isinstance(default, bool) and isinstance(v, str):
                v = v.lower() in ("1", "true", "yes")
            elif isinstance(default, int) and not isinstance(default, bool):
                v = int(v)
            elif isinstance(default, float):
                v = float(v)
            setattr(cfg, k, v)
        return cfg

    @property
    def limits(self) -> Limits:
        return Limits(self.max_turns, self.per_turn_timeout_s)


# ----------------------------------------------------------------- helpers


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OperationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise OperationError(f"{path} is not valid JSON: {exc}") from exc


def _catalog(profile: str, mode: str, overlay: str | None):
    overlays = load_overlays(_read_json(overlay)) if overlay else []
    try:
        return build_catalog(profile, mode, overlays)
    except UnknownOverlayTarget as exc:
        raise OperationError(str(exc)) from exc


def _write(path: str | None, text: str, out: TextIO) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def parse_call(line: str) -> tuple[str, dict[str, Any]]:
    """``tool key=value ...`` or a JSON object ``{"tool": ..., "args": {...}}``."""
    line = line.strip()
    if line.startswith("{"):
        d = json.loads(line)
        return d["tool"], dict(d.get("args") or {})
    parts = shlex.split(line)
    tool, args = parts[0], {}
    for p in parts[1:]:
        if "=" not in p:
            raise ValueError(f"expected key=value, got {p!r}")
        k, v = p.split("=", 1)
        try:
            args[k] = json.loads(v)
        except json.JSONDecodeError:
            args[k] = v
    return tool, args


# ------------------------------------------------------------- subcommands


def cmd_repl(a: argparse.Namespace, out: TextIO) -> int:
    catalog = _catalog(a.profile, a.mode, None)
    canvas = Canvas.from_document(Path(a.load).read_text(encoding="utf-8")) if a.load else Canvas(a.style)
    canvas.catalog = catalog
    stream = open(a.input, encoding="utf-8") if a.input else sys.stdin
    prompt = stream.isatty()
    failed = False
    try:
        while True:
            if prompt:
                out.write("geo> ")
                out.flush()
            line = stream.readline()
            if not line:
                break
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line in (":q", ":quit", "quit", "exit"):
                break
            if line == ":export":
                out.write(canvas.export_json(indent=2) + "\n")
                continue
            if line == ":list":
                for o in canvas.objects.values():
                    out.write(f"{o.name} ({o.kind}) = {o.printable()}\n")
                continue
            try:
                tool, args = parse_call(line)
            except (ValueError, KeyError, json.JSONDecodeError) as exc:
                out.write(f"usage error: {exc}\n")
                failed = True
                continue
            obs = canvas.apply(tool, args, mode=a.engine_mode)
            failed |= not obs.ok
            out.write(obs.text() + "\n")
    finally:
        if stream is not sys.stdin:
            stream.close()
    if a.save:
        Path(a.save).write_text(canvas.export_json(indent=2) + "\n", encoding="utf-8")
    return 1 if (failed and a.strict_exit) else 0


def _policy_factory(cfg: RunConfig):
    if cfg.policy == "scripted":
        if not cfg.endpoint:
            raise OperationError("scripted policy needs --endpoint <script.json>")
        script = _read_json(cfg.endpoint)
        return lambda p: ScriptedPolicy(script)
    if cfg.policy == "stdio":
        if not cfg.endpoint:
            raise OperationError("stdio policy needs --endpoint '<command>'")
        return lambda p: StdioPolicy(cfg.endpoint)
    if cfg.policy == "http":
        if not cfg.endpoint:
            raise OperationError("http policy needs --endpoint <url>")
        return lambda p: HttpPolicy(cfg.endpoint, timeout_s=cfg.per_turn_timeout_s)
    raise OperationError(f"unknown policy transport {cfg.policy!r}")


def load_problem_file(path: str) -> list[Problem]:
    data = _read_json(path)
    items = data.get("problems", [data]) if isinstance(data, dict) else data
    return [Problem.from_json(d) for d in items]


def cmd_run(a: argparse.Namespace, out: TextIO) -> int:
    cfg = RunConfig.resolve(a)
    if cfg.engine_mode not in ENGINE_MODES:
        raise OperationError(f"engine mode must be one of {', '.join(ENGINE_MODES)}")
    catalog = _catalog(cfg.profile, cfg.mode, cfg.overlay)
    problems = load_problem_file(a.problems)
    make = _policy_factory(cfg)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)

    def one(p: Problem) -> Trace:
        policy = make(p)
        try:
            env = Canvas(catalog=catalog)
            tr = run_episode(p, policy, catalog, cfg.limits, env=env, engine_mode=cfg.engine_mode)
            (outdir / f"{p.id}.state.json").write_text(env.export_json(indent=2) + "\n", encoding="utf-8")
        finally:
            close = getattr(policy, "close", None)
            if close:
                close()
        tr.write(outdir / f"{p.id}.trace.jsonl", timing=cfg.timing)
        return tr

    try:
        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                traces = list(pool.map(one, problems))
        else:
            traces = [one(p) for p in problems]
    except PolicyProtocolError as exc:
        raise OperationError(f"policy protocol error: {exc}") from exc
    for t in traces:
        ans = "" if t.final_answer is None else f" answer={t.final_answer}"
        out.write(f"{t.problem_id}: {t.termination} turns={len(t.turns)} calls={len(t.actions)}{ans}\n")
    return 0


def cmd_replay(a: argparse.Namespace, out: TextIO) -> int:
    try:
        trace = Trace.read(a.trace)
    except (OSError, ValueError, KeyError) as exc:
        raise OperationError(f"cannot read trace {a.trace}: {exc}") from exc
    try:
        canvas, observations = replay_trace(trace)
    except DigestMismatch as exc:
        raise OperationError(str(exc)) from exc
    if not a.quiet:
        for o in observations:
            out.write(o.text() + "\n")
    values = [o for o in observations if o.kind == "value"]
    if values:
        v = values[-1].value
        shown = json.dumps(float(v)) if isinstance(v, (int, float)) and not isinstance(v, bool) else json.dumps(v)
        out.write(f"final query value: {shown}\n")
    digest = digest_of(canvas.export())
    if trace.state_digest and digest != trace.state_digest:
        raise OperationError("replayed state differs from the state recorded in the trace")
    export = canvas.export_json(indent=2) + "\n"
    if a.output:
        _write(a.output, export, out)
    else:
        out.write(export)
    return 0


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise OperationError(f"bad --sweep grid: {exc}") from exc
    if not grid or any(b < a for a, b in zip(grid, grid[1:])):
        raise OperationError("--sweep grid must be a non-empty ascending list")
    return grid


def cmd_verify(a: argparse.Namespace, out: TextIO) -> int:
    try:
        specs = verifier.load_problems(a.problems)
    except (OSError, ValueError, KeyError) as exc:
        raise OperationError(f"cannot load problems: {exc}") from exc
    coords = verifier.load_coords(a.coords, [s.id for s in specs])
    policy = TolerancePolicy(abs_tol=a.abs_tol, rel_tol=a.rel_tol)
    if a.jobs > 1:
        with ThreadPoolExecutor(max_workers=a.jobs) as pool:
            scores = list(pool.map(lambda s: verifier.score_problem(s, coords.get(s.id, {}), policy), specs))
        report = verifier.VerdictReport(scores)
    else:
        report = verifier.verify(specs, coords, policy)
    doc = report.to_json()
    out.write(report.summary() + "\n")
    if a.sweep:
        grid = _parse_grid(a.sweep)
        targets = [(q, coords.get(s.id, {})) for s in specs for q in s.queries]
        curves: dict[str, list[float]] = {}
        counts: dict[str, int] = {}
        for q, c in targets:
            for klass, rates in verifier.tolerance_sweep([q], c, grid, a.abs_tol).items():
                acc = curves.setdefault(klass, [0.0] * len(grid))
                curves[klass] = [x + y for x, y in zip(acc, rates)]
                counts[klass] = counts.get(klass, 0) + 1
        sweep = {k: [v / counts[k] for v in vs] for k, vs in curves.items()}
        doc["sweep"] = {"grid": grid, "pass_rate": sweep}
        for k, vs in sorted(sweep.items()):
            out.write(f"sweep {k}: " + " ".join(f"{g:g}:{v:.3f}" for g, v in zip(grid, vs)) + "\n")
    if a.output:
        _write(a.output, json.dumps(doc, indent=2, sort_keys=True) + "\n", out)
    return 0


def cmd_analyze(a: argparse.Namespace, out: TextIO) -> int:
    traces = []
    for p in a.traces:
        try:
            traces.append(Trace.read(p))
        except (OSError, ValueError, KeyError) as exc:
            raise OperationError(f"cannot read trace {p}: {exc}") from exc
    report = analytics.analyze(traces)
    text = analytics.report_json(report) + "\n" if a.json else analytics.format_report(report)
    _write(a.output, text, out)
    return 0


def cmd_catalog(a: argparse.Namespace, out: TextIO) -> int:
    catalog = _catalog(a.profile, a.mode, a.overlay)
    _write(a.output, export_catalog(catalog) + "\n", out)
    return 0


def _parse_viewport(text: str, width: int, height: int) -> Viewport:
    try:
        x0, x1, y0, y1 = (float(v) for v in text.split(","))
        return Viewport(x0, x1, y0, y1, width, height)
    except ValueError as exc:
        raise OperationError(f"bad --viewport: {exc}") from exc


def cmd_render(a: argparse.Namespace, out: TextIO) -> int:
    try:
        canvas = Canvas.from_document(Path(a.state).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OperationError(f"cannot read {a.state}: {exc.strerror}") from exc
    except (ValueError, KeyError) as exc:
        raise OperationError(f"{a.state} is not a canvas export: {exc}") from exc
    if a.style == "textbook":
        canvas = apply_textbook_preset(canvas)
    vp = _parse_viewport(a.viewport, a.width, a.height) if a.viewport else fit_viewport(canvas, a.width, a.height)
    _write(a.output, render_svg(canvas, vp), out)
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geocanvas", description="Deterministic geometric construction environment.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("repl", help="line-per-tool-call interactive canvas")
    r.add_argument("--profile", choices=PROFILES, default="solve3d")
    r.add_argument("--mode", choices=CATALOG_MODES, default="full")
    r.add_argument("--engine-mode", choices=ENGINE_MODES, default="strict")
    r.add_argument("--style", choices=STYLE_PRESETS, default="default")
    r.add_argument("--load", help="start from a canvas export")
    r.add_argument("--save", help="write the final canvas export here")
    r.add_argument("--input", help="read calls from this file instead of stdin")
    r.add_argument("--strict-exit", action="store_true", help="exit 1 if any call failed")
    r.set_defaults(func=cmd_repl)

    r = sub.add_parser("run", help="run episodes from a problem file")
    r.add_argument("problems", help="JSON problem file")
    r.add_argument("--config", help="TOML file with run settings")
    r.add_argument("--policy", choices=("scripted", "stdio", "http"))
    r.add_argument("--endpoint", help="script file, child command, or base URL")
    r.add_argument("--profile", choices=PROFILES)
    r.add_argument("--mode", choices=CATALOG_MODES)
    r.add_argument("--overlay", help="JSON overlay file")
    r.add_argument("--max-turns", dest="max_turns", type=int)
    r.add_argument("--timeout", dest="per_turn_timeout_s", type=float, help="seconds per policy call")
    r.add_argument("--engine-mode", dest="engine_mode", choices=ENGINE_MODES)
    r.add_argument("--out", help="output directory for traces and states")
    r.add_argument("--jobs", type=int)
    r.add_argument("--timing", action="store_const", const=True, help="record wall times in traces")
    r.set_defaults(func=cmd_run)

    r = sub.add_parser("replay", help="replay a trace and export the final state")
    r.add_argument("trace")
    r.add_argument("-o", "--output", help="write the canvas export here")
    r.add_argument("-q", "--quiet", action="store_true", help="do not print observations")
    r.set_defaults(func=cmd_replay)

    r = sub.add_parser("verify", help="score canvases against problem predicates")
    r.add_argument("--problems", required=True)
    r.add_argument("--coords", required=True, help="directory of <id>.json coordinate files")
    r.add_argument("--sweep", help="comma-separated ascending relative tolerances")
    r.add_argument("--abs-tol", type=float, default=DEFAULT_POLICY.abs_tol)
    r.add_argument("--rel-tol", type=float, default=DEFAULT_POLICY.rel_tol)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("-o", "--output", help="write the JSON report here")
    r.set_defaults(func=cmd_verify)

    r = sub.add_parser("analyze", help="provenance, failure and phase statistics over traces")
    r.add_argument("traces", nargs="+")
    r.add_argument("--json", action="store_true", help="emit JSON instead of a text table")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_analyze)

    r = sub.add_parser("catalog", help="export a tool catalog as JSON")
    r.add_argument("--profile", choices=PROFILES, default="solve2d")
    r.add_argument("--mode", choices=CATALOG_MODES, default="full")
    r.add_argument("--overlay", help="JSON overlay file")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_catalog)

    r = sub.add_parser("render", help="render a canvas export to SVG")
    r.add_argument("state")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--style", choices=STYLE_PRESETS, default="default")
    r.add_argument("--viewport", help="x_min,x_max,y_min,y_max")
    r.add_argument("--width", type=int, default=800)
    r.add_argument("--height", type=int, default=600)
    r.set_defaults(func=cmd_render)
    return p


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return a.func(a, out)
    except (OperationError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
