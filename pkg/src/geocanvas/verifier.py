"""Offline numeric audit of a finished canvas.

The verifier reads only named-point coordinates.  Predicates are checked
with scale-aware residuals under a :class:`TolerancePolicy`; query targets
are expressions over the same coordinates (``x(A)``, ``dist(A,B)``,
``angle(A,B,C)`` ...) compared against a reference value.

Scores follow the usual three rates:

* SR: mean per-problem predicate pass fraction,
* SC: fraction of problems whose predicates all pass,
* CR: fraction of problems with a non-empty canvas.

An unresolvable predicate (missing or undefined point) is ``NA`` and counts
as not passing.  Problems without predicates take part in CR only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .expr import RESERVED_NAMES, compile_expr, parse_expr, referenced_names
from .numeric import DEFAULT_POLICY, TolerancePolicy, is_undefined, tol_pass

Point = tuple[float, float]
Coords = Mapping[str, "Point | None"]

TIERS = ("premise", "numcheck", "derived")
ARITY = {"coll": 3, "para": 4, "perp": 4, "cong": 4, "midp": 3, "cyclic": 4, "eqangle": 8, "eqratio": 8}
STRUCTURAL_TARGETS = (0.0, 1.0, 90.0, 180.0)
C1_THRESHOLD = 1e-2
SCALE_FLOOR = 1.0  # denominator floor for relative error near zero targets
VERDICTS = ("pass", "fail", "NA")
FAILURE_CLASSES = ("OK", "C1", "C2", "C3", "NA")


class ArityError(ValueError):
    pass


# ----------------------------------------------------------------- geometry


def _sub(a: Point, b: Point) -> Point:
    return (a[0] - b[0], a[1] - b[1])


def _cross(u: Point, v: Point) -> float:
    return u[0] * v[1] - u[1] * v[0]


def _dot(u: Point, v: Point) -> float:
    return u[0] * v[0] + u[1] * v[1]


def _norm(u: Point) -> float:
    return math.hypot(u[0], u[1])


def _dist(a: Point, b: Point) -> float:
    return _norm(_sub(a, b))


def _sine(u: Point, v: Point) -> float | None:
    n = _norm(u) * _norm(v)
    return None if n == 0.0 else _cross(u, v) / n


def _cosine(u: Point, v: Point) -> float | None:
    n = _norm(u) * _norm(v)
    return None if n == 0.0 else _dot(u, v) / n


def _line_angle(a: Point, b: Point) -> float | None:
    """Direction of line AB in degrees, in [0, 180)."""
    d = _sub(b, a)
    if d == (0.0, 0.0):
        return None
    return math.degrees(math.atan2(d[1], d[0])) % 180.0


def _circumcircle(a: Point, b: Point, c: Point) -> tuple[Point, float] | None:
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    scale = max(_dist(a, b), _dist(b, c), _dist(a, c)) ** 2
    if scale == 0.0 or abs(d) <= 1e-14 * scale:
        return None
    sa, sb, sc = _dot(a, a), _dot(b, b), _dot(c, c)
    ux = (sa * (b[1] - c[1]) + sb * (c[1] - a[1]) + sc * (a[1] - b[1])) / d
    uy = (sa * (c[0] - b[0]) + sb * (a[0] - c[0]) + sc * (b[0] - a[0])) / d
    o = (ux, uy)
    return o, _dist(o, a)


def _zero(r: float | None, policy: TolerancePolicy) -> bool:
    return r is not None and tol_pass(r, 0.0, policy)


def _wrap180(d: float) -> float:
    """Signed representative of ``d`` modulo 180 in (-90, 90]."""
    d = math.fmod(d, 180.0)
    if d > 90.0:
        d -= 180.0
    elif d <= -90.0:
        d += 180.0
    return d


def _coll(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    a, b, c = p
    if a == b or a == c or b == c:
        return True
    return _zero(_sine(_sub(b, a), _sub(c, a)), pol)


def _para(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    return _zero(_sine(_sub(p[1], p[0]), _sub(p[3], p[2])), pol)


def _perp(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    return _zero(_cosine(_sub(p[1], p[0]), _sub(p[3], p[2])), pol)


def _cong(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    return tol_pass(_dist(p[0], p[1]), _dist(p[2], p[3]), pol)


def _midp(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    m, a, b = p
    return tol_pass(m[0], (a[0] + b[0]) / 2.0, pol) and tol_pass(m[1], (a[1] + b[1]) / 2.0, pol)


def _cyclic(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    cc = _circumcircle(p[0], p[1], p[2])
    if cc is None:
        return False
    o, r = cc
    return tol_pass(_dist(o, p[3]), r, pol)


def _eqangle(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    angles = [_line_angle(p[i], p[i + 1]) for i in (0, 2, 4, 6)]
    if any(a is None for a in angles):
        return False
    a1, a2, a3, a4 = angles
    first = (a2 - a1) % 180.0
    diff = _wrap180((a4 - a3) - (a2 - a1))
    return tol_pass(first, first + diff, pol)


def _eqratio(p: Sequence[Point], pol: TolerancePolicy) -> bool:
    d = [_dist(p[i], p[i + 1]) for i in (0, 2, 4, 6)]
    if d[1] == 0.0 or d[3] == 0.0:
        return False
    return tol_pass(d[0] / d[1], d[2] / d[3], pol)


CHECKS: dict[str, Callable[[Sequence[Point], TolerancePolicy], bool]] = {
    "coll": _coll,
    "para": _para,
    "perp": _perp,
    "cong": _cong,
    "midp": _midp,
    "cyclic": _cyclic,
    "eqangle": _eqangle,
    "eqratio": _eqratio,
}


# ------------------------------------------------------- coordinate language


def _polygon_area(*pts: Point) -> float:
    s = 0.0
    for i, a in enumerate(pts):
        b = pts[(i + 1) % len(pts)]
        s += a[0] * b[1] - b[0] * a[1]
    return abs(s) / 2.0


def _vertex_angle(a: Point, b: Point, c: Point) -> Any:
    cos = _cosine(_sub(a, b), _sub(c, b))
    if cos is None:
        return None
    return math.degrees(math.acos(max(-1.0, min(1.0, cos))))


COORD_FUNCTIONS: dict[str, Callable[..., Any]] = {
    "x": lambda p: p[0],
    "y": lambda p: p[1],
    "dist": _dist,
    "angle": _vertex_angle,  # unsigned vertex angle at the middle point, degrees
    "area": _polygon_area,
}


def evaluate_coords(expr: str, coords: Coords) -> float | None:
    """Evaluate a coordinate expression; ``None`` when any point is missing."""
    e = parse_expr(expr)
    names = referenced_names(e) - RESERVED_NAMES - set(COORD_FUNCTIONS)
    env: dict[str, Any] = {}
    for n in names:
        p = coords.get(n)
        if p is None:
            return None
        env[n] = p
    out = compile_expr(e, COORD_FUNCTIONS)(env)
    if is_undefined(out) or isinstance(out, bool) or not isinstance(out, float):
        return None
    return out


# -------------------------------------------------------------- predicates


@dataclass(frozen=True)
class Extension:
    """A user-registered predicate: ``expr`` over ``p1..pn`` must equal ``target``."""

    name: str
    arity: int
    expr: str
    target: float = 0.0

    def check(self, pts: Sequence[Point], policy: TolerancePolicy) -> bool:
        env = {f"p{i + 1}": pt for i, pt in enumerate(pts)}
        v = evaluate_coords(self.expr, env)
        return v is not None and tol_pass(v, self.target, policy)


@dataclass(frozen=True)
class Predicate:
    type: str
    args: tuple[str, ...]
    tier: str = "premise"
    extension: Extension | None = None

    def __post_init__(self) -> None:
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}")
        want = self.extension.arity if self.extension else ARITY.get(self.type)
        if want is None:
            raise ValueError(f"unknown predicate type {self.type!r}")
        if len(self.args) != want:
            raise ArityError(f"{self.type} takes {want} points, got {len(self.args)}")

    def to_json(self) -> dict[str, Any]:
        return {"type": self.type, "args": list(self.args), "tier": self.tier}


def check_predicate(p: Predicate, coords: Coords, policy: TolerancePolicy = DEFAULT_POLICY) -> bool | None:
    """True/False verdict, or ``None`` (NA) when an argument point is unavailable."""
    pts = []
    for n in p.args:
        pt = coords.get(n)
        if pt is None:
            return None
        pts.append((float(pt[0]), float(pt[1])))
    if p.extension is not None:
        return p.extension.check(pts, policy)
    return CHECKS[p.type](pts, policy)


# ----------------------------------------------------------------- queries


@dataclass(frozen=True)
class QueryTarget:
    expr: str
    target: float

    @property
    def structural(self) -> bool:
        return any(self.target == t for t in STRUCTURAL_TARGETS)

    @property
    def klass(self) -> str:
        return "structural" if self.structural else "non_structural"

    def measure(self, coords: Coords) -> float | None:
        return evaluate_coords(self.expr, coords)


def classify_failure(
    q: QueryTarget,
    measured: Any,
    policy: TolerancePolicy = DEFAULT_POLICY,
    c1_threshold: float = C1_THRESHOLD,
) -> str:
    if measured is None or is_undefined(measured):
        return "NA"
    if tol_pass(measured, q.target, policy):
        return "OK"
    e = abs(measured - q.target) / max(abs(q.target), SCALE_FLOOR)
    if e > c1_threshold:
        return "C1"
    if e > policy.rel_tol:
        return "C2"
    return "C3"


def tolerance_sweep(
    targets: Sequence[QueryTarget],
    coords: Coords,
    grid: Sequence[float],
    abs_tol: float = DEFAULT_POLICY.abs_tol,
) -> dict[str, list[float]]:
    """Pass rate per target class at each relative tolerance in ``grid``."""
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be ascending")
    measured = [(q, q.measure(coords)) for q in targets]
    out: dict[str, list[float]] = {}
    for klass in ("structural", "non_structural", "all"):
        group = [(q, m) for q, m in measured if klass == "all" or q.klass == klass]
        if not group:
            continue
        rates = []
        for rel in grid:
            pol = TolerancePolicy(abs_tol=abs_tol, rel_tol=rel)
            ok = sum(1 for q, m in group if m is not None and tol_pass(m, q.target, pol))
            rates.append(ok / len(group))
        out[klass] = rates
    return out


# ---------------------------------------------------------------- problems


@dataclass
class ProblemSpec:
    id: str
    predicates: list[Predicate] = field(default_factory=list)
    queries: list[QueryTarget] = field(default_factory=list)
    points_expected: list[str] = field(default_factory=list)

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> ProblemSpec:
        exts = {
            name: Extension(name, int(e["arity"]), str(e["expr"]), float(e.get("target", 0.0)))
            for name, e in (d.get("extensions") or {}).items()
        }
        preds = []
        for p in d.get("predicates", []):
            t = p["type"]
            ext = exts.get(t) or REGISTRY.get(t)
            if t == "extensible":
                ext = Extension(p.get("name", "extensible"), len(p["args"]), p["expr"], float(p.get("target", 0.0)))
            preds.append(Predicate(t, tuple(p["args"]), p.get("tier", "premise"), ext))
        queries = [QueryTarget(q["expr"], float(q["target"])) for q in d.get("queries", [])]
        return cls(str(d["id"]), preds, queries, list(d.get("points_expected", [])))


REGISTRY: dict[str, Extension] = {}


def register_predicate(name: str, arity: int, expr: str, target: float = 0.0) -> Extension:
    """Admit an extra predicate type, evaluated over positional points ``p1..pn``."""
    if name in ARITY:
        raise ValueError(f"{name!r} is a built-in predicate")
    ext = Extension(name, arity, expr, target)
    REGISTRY[name] = ext
    return ext


@dataclass
class ProblemScore:
    id: str
    verdicts: list[tuple[Predicate, str]]
    nonempty: bool
    query_classes: list[tuple[QueryTarget, float | None, str]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.verdicts)

    @property
    def passed(self) -> int:
        return sum(1 for _, v in self.verdicts if v == "pass")

    @property
    def all_pass(self) -> bool:
        return self.passed == self.total

    def tier_counts(self) -> dict[str, tuple[int, int]]:
        out: dict[str, tuple[int, int]] = {}
        for p, v in self.verdicts:
            ok, n = out.get(p.tier, (0, 0))
            out[p.tier] = (ok + (v == "pass"), n + 1)
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "nonempty": self.nonempty,
            "passed": self.passed,
            "total": self.total,
            "all_pass": self.all_pass,
            "predicates": [{**p.to_json(), "verdict": v} for p, v in self.verdicts],
            "queries": [{"expr": q.expr, "target": q.target, "measured": m, "class": c} for q, m, c in self.query_classes],
        }


def score_problem(spec: ProblemSpec, coords: Coords, policy: TolerancePolicy = DEFAULT_POLICY) -> ProblemScore:
    nonempty = any(v is not None for v in coords.values())
    verdicts = []
    for p in spec.predicates:
        r = check_predicate(p, coords, policy) if nonempty else None
        verdicts.append((p, "NA" if r is None else ("pass" if r else "fail")))
    qc = []
    for q in spec.queries:
        m = q.measure(coords)
        qc.append((q, m, classify_failure(q, m, policy)))
    return ProblemScore(spec.id, verdicts, nonempty, qc)


@dataclass
class VerdictReport:
    problems: list[ProblemScore]

    def _scored(self) -> list[ProblemScore]:
        return [s for s in self.problems if s.total > 0]

    @property
    def sr(self) -> float:
        s = self._scored()
        return sum(p.passed / p.total for p in s) / len(s) if s else 0.0

    @property
    def sc(self) -> float:
        s = self._scored()
        return sum(1 for p in s if p.all_pass) / len(s) if s else 0.0

    @property
    def cr(self) -> float:
        return sum(1 for p in self.problems if p.nonempty) / len(self.problems) if self.problems else 0.0

    def sr_by_tier(self) -> dict[str, float]:
        out = {}
        for tier in TIERS:
            fracs = [ok / n for s in self.problems for t, (ok, n) in s.tier_counts().items() if t == tier]
            if fracs:
                out[tier] = sum(fracs) / len(fracs)
        return out

    def failure_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in FAILURE_CLASSES}
        for s in self.problems:
            for _, _, c in s.query_classes:
                counts[c] += 1
        return counts

    def to_json(self) -> dict[str, Any]:
        return {
            "SR": self.sr,
            "SC": self.sc,
            "CR": self.cr,
            "SR_by_tier": self.sr_by_tier(),
            "query_classes": self.failure_counts(),
            "problems": [s.to_json() for s in self.problems],
        }

    def summary(self) -> str:
        return f"SR={self.sr:.4g} SC={self.sc:.4g} CR={self.cr:.4g} problems={len(self.problems)}"


def verify(
    specs: Iterable[ProblemSpec], coords_by_id: Mapping[str, Coords], policy: TolerancePolicy = DEFAULT_POLICY
) -> VerdictReport:
    return VerdictReport([score_problem(s, coords_by_id.get(s.id, {}), policy) for s in specs])


# ------------------------------------------------------------------- files


def coords_from_document(doc: Mapping[str, Any]) -> dict[str, Point | None]:
    """Point coordinates from either a plain ``{name: [x, y]}`` map or a canvas export."""
    if "objects" in doc and "format_version" in doc:
        out: dict[str, Point | None] = {}
        for o in doc["objects"]:
            if o.get("kind") != "point":
                continue
            v = o.get("value")
            out[o["name"]] = None if v is None else (float(v["xy"][0]), float(v["xy"][1]))
        return out
    return {k: None if v is None else (float(v[0]), float(v[1])) for k, v in doc.items()}


def load_problems(path: str | Path) -> list[ProblemSpec]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    items = data if isinstance(data, list) else data.get("problems", [data])
    return [ProblemSpec.from_json(d) for d in items]


def load_coords(directory: str | Path, ids: Iterable[str]) -> dict[str, dict[str, Point | None]]:
    out = {}
    for pid in ids:
        f = Path(directory) / f"{pid}.json"
        if f.exists():
            out[pid] = coords_from_document(json.loads(f.read_text(encoding="utf-8")))
    return out
