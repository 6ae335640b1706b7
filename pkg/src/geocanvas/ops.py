"""Tool dispatch: turns validated tool arguments into kernel calls.

Construction builders return ``(kind, value)``; query handlers return a
:class:`QueryResult`.  Both read the canvas only through :class:`Resolver`,
which enforces argument kinds and binds expression names.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from . import geom2d as g2
from . import geom3d as g3
from .errors import (
    DegenerateInput,
    EntityNotFound,
    IndexOutOfRange,
    PreconditionFailed,
    TypeMismatch,
)
from .expr import (
    RESERVED_NAMES,
    EvalUndefinedOnInterval,
    Expr,
    Relation,
    Var,
    compile_expr,
    extremum_on,
    find_roots,
    golden_min,
    inflection_points,
    integrate,
    parse_expr,
    parse_relation,
    referenced_names,
    relation_text,
    to_text,
    turning_points,
)
from .numeric import UNDEFINED, fmt_number, is_undefined, to_deg, to_rad
from .toolspec import ToolSpec

# Names that expressions may bind, and how each kind evaluates inside one.
EXPR_KINDS = ("number", "angle", "function", "integral")


@dataclass(frozen=True)
class TextLabel:
    text: str
    position: g2.Point2


@dataclass(frozen=True)
class IntegralShade:
    function: g2.FunctionGraph
    a: float
    b: float
    value: float


@dataclass(frozen=True)
class QueryResult:
    value: Any
    units: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict)


# ------------------------------------------------------------ static analysis

# Expression parameters whose identifiers are bound locally, not canvas names.
def _expr_locals(tool: str, args: Mapping[str, Any]) -> set[str]:
    if tool == "add_function":
        return {"x"}
    if tool == "add_curve":
        return {"t"}
    if tool == "add_inequality":
        return {"x", "y"}
    if tool in ("query_solve", "query_nsolve", "query_definite_integral"):
        return {str(args.get("var") or "x")}
    return set()


def _names_in(text: Any, relation: bool) -> set[str]:
    if not isinstance(text, str):
        return set()
    try:
        if relation:
            rel = parse_relation(text)
            names = referenced_names(rel.lhs) | referenced_names(rel.rhs)
        else:
            names = referenced_names(parse_expr(text))
    except ValueError:
        return set()
    return names - RESERVED_NAMES


def action_refs(spec: ToolSpec, args: Mapping[str, Any]) -> list[tuple[str, str]]:
    """Canvas names an action reads, as ``(param, name)`` pairs in parameter order."""
    out: list[tuple[str, str]] = []
    seen: set[str] = set()

    def add(param: str, name: str) -> None:
        if name not in seen:
            seen.add(name)
            out.append((param, name))

    local = _expr_locals(spec.name, args)
    for p in spec.params:
        if p.new_name or p.name not in args:
            continue
        v = args[p.name]
        if p.type in ("object_name", "point_name", "linelike_name", "conic_name"):
            if spec.name == "rename_object" and p.name == "new_name":
                continue
            add(p.name, v)
        elif p.type == "point_list":
            for n in v:
                add(p.name, n)
        elif p.type == "scalar":
            for n in sorted(_names_in(v, relation=False)):
                add(p.name, n)
        elif p.type == "expr_text":
            for n in sorted(_names_in(v, relation=True) - local):
                add(p.name, n)
    return out


# ------------------------------------------------------------------- resolver


class Resolver:
    """Read-only view of canvas objects used by builders and queries."""

    def __init__(self, lookup: Callable[[str], Any]):
        self._lookup = lookup

    def _rec(self, name: str, arg: str | None) -> Any:
        rec = self._lookup(name)
        if rec is None:
            raise EntityNotFound(f"object '{name}' does not exist", arg=arg, ref=name)
        return rec

    def kind(self, name: str, arg: str | None = None) -> str:
        return self._rec(name, arg).kind

    def get(self, name: str, arg: str | None = None) -> Any:
        rec = self._rec(name, arg)
        if is_undefined(rec.value):
            raise PreconditionFailed(f"object '{name}' is undefined", arg=arg, ref=name)
        return rec.value

    def point(self, name: str, arg: str) -> g2.Point2:
        v = self.get(name, arg)
        if not isinstance(v, g2.Point2):
            raise TypeMismatch(f"'{name}' is a {self.kind(name)}, not a point", arg=arg, ref=name)
        return v

    def point3(self, name: str, arg: str) -> g3.Point3:
        v = self.get(name, arg)
        if isinstance(v, (g2.Point2, g3.Point3)):
            return g3.lift(v)
        raise TypeMismatch(f"'{name}' is a {self.kind(name)}, not a point", arg=arg, ref=name)

    def linelike(self, name: str, arg: str) -> g2.LineLike:
        v = self.get(name, arg)
        if not isinstance(v, g2.LineLike):
            raise TypeMismatch(f"'{name}' is a {self.kind(name)}, not a line-like object", arg=arg, ref=name)
        return v

    def function(self, name: str, arg: str) -> g2.FunctionGraph:
        v = self.get(name, arg)
        if not isinstance(v, g2.FunctionGraph):
            raise TypeMismatch(f"'{name}' is a {self.kind(name)}, not a function", arg=arg, ref=name)
        return v

    def bindings(self, names: set[str], arg: str) -> tuple[tuple[str, Any], ...]:
        out = []
        for n in sorted(names):
            rec = self._rec(n, arg)
            if rec.kind not in EXPR_KINDS:
                raise TypeMismatch(f"'{n}' is a {rec.kind} and cannot appear in an expression", arg=arg, ref=n)
            v = self.get(n, arg)
            if isinstance(v, IntegralShade):
                v = v.value
            out.append((n, v))
        return tuple(out)

    def num(self, v: Any, arg: str) -> float:
        """Evaluate a scalar argument (a number or an expression over canvas names)."""
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
        e = parse_expr(str(v))
        names = referenced_names(e) - RESERVED_NAMES
        env = {k: (val.evaluate if isinstance(val, g2.FunctionGraph) else val) for k, val in self.bindings(names, arg)}
        out = compile_expr(e)(env)
        if is_undefined(out) or isinstance(out, bool):
            raise PreconditionFailed(f"'{v}' does not evaluate to a number", arg=arg)
        return out

    def degrees(self, v: Any, arg: str) -> float:
        # A bare angle object is read in degrees here; everywhere else angles are radians.
        if isinstance(v, str):
            e = parse_expr(v)
            if isinstance(e, Var) and e.name not in RESERVED_NAMES:
                rec = self._rec(e.name, arg)
                if rec.kind == "angle":
                    return to_deg(self.get(e.name, arg))
        return self.num(v, arg)


# ------------------------------------------------------------------ builders

Built = tuple[str, Any]


def _multi(kind: str, items: Sequence[Any]) -> Built:
    if len(items) == 1:
        return kind, items[0]
    return "list", tuple(items)


def _span(r: Resolver, a: Mapping[str, Any], lo_key: str, hi_key: str) -> tuple[float, float]:
    lo, hi = r.num(a[lo_key], lo_key), r.num(a[hi_key], hi_key)
    if not lo < hi:
        raise DegenerateInput(f"{lo_key} must be smaller than {hi_key}", arg=lo_key)
    return lo, hi


def root_grid(lo: float, hi: float) -> int:
    return int(min(100_001, max(2001, (hi - lo) * 50 + 1)))


def _points_at(f: g2.FunctionGraph, xs: Sequence[float], what: str) -> Built:
    pts = []
    for x in xs:
        y = f.evaluate(x)
        if not is_undefined(y):
            pts.append(g2.Point2(x, y))
    if not pts:
        raise PreconditionFailed(f"no {what} found in the interval")
    return _multi("point", pts)


def _guard_interval(fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except EvalUndefinedOnInterval as exc:
        raise PreconditionFailed(str(exc)) from None


def _linelike_build(kind: str, k1: str, k2: str) -> Callable[[Resolver, Mapping[str, Any]], Built]:
    def build(r: Resolver, a: Mapping[str, Any]) -> Built:
        return kind, g2.make_linelike(kind, r.point(a[k1], k1), r.point(a[k2], k2))

    return build


def _arc_build(kind: str) -> Callable[[Resolver, Mapping[str, Any]], Built]:
    def build(r: Resolver, a: Mapping[str, Any]) -> Built:
        return kind, g2.make_arc(kind, r.point(a["center"], "center"), r.point(a["start"], "start"), r.point(a["end"], "end"))

    return build


def _b_point_on(r: Resolver, a: Mapping[str, Any]) -> Built:
    path = r.get(a["path"], "path")
    return "point", g2.point_on(path, r.num(a.get("t", 0.5), "t"))


def _b_intersect(r: Resolver, a: Mapping[str, Any]) -> Built:
    o1, o2 = r.get(a["obj1"], "obj1"), r.get(a["obj2"], "obj2")
    res = g2.intersect(o1, o2, a.get("index"))
    if isinstance(res, list):
        return _multi("point", res)
    return "point", res


def _b_tangent(r: Resolver, a: Mapping[str, Any]) -> Built:
    return _multi("line", g2.tangents_from_point(r.point(a["point"], "point"), r.get(a["conic"], "conic")))


def _as_circle(v: Any, arg: str) -> g2.Circle2:
    if isinstance(v, g2.Circle2):
        return v
    if isinstance(v, g2.ArcLike):
        return v.circle
    raise TypeMismatch("common tangents are supported for circles only", arg=arg)


def _b_tangent_cc(r: Resolver, a: Mapping[str, Any]) -> Built:
    c1 = _as_circle(r.get(a["conic1"], "conic1"), "conic1")
    c2 = _as_circle(r.get(a["conic2"], "conic2"), "conic2")
    return _multi("line", g2.common_tangents(c1, c2))


def _b_circle(r: Resolver, a: Mapping[str, Any]) -> Built:
    c = r.point(a["center"], "center")
    has_r, has_p = a.get("radius") is not None, a.get("point") is not None
    if has_r == has_p:
        raise TypeMismatch("give exactly one of radius and point", arg="radius")
    if has_r:
        return "circle", g2.make_circle(c, r.num(a["radius"], "radius"))
    p = r.point(a["point"], "point")
    if g2.coincident(c, p):
        raise DegenerateInput("point coincides with the centre", arg="point")
    return "circle", g2.make_circle(c, g2.distance(c, p))


def _b_vertex(r: Resolver, a: Mapping[str, Any]) -> Built:
    poly = r.get(a["polygon"], "polygon")
    if not isinstance(poly, g2.Polygon2):
        raise TypeMismatch("expected a polygon", arg="polygon")
    i = a["index"]
    if not 1 <= i <= len(poly.vertices):
        raise IndexOutOfRange(f"vertex index {i} out of range (1..{len(poly.vertices)})", arg="index")
    return "point", poly.vertices[i - 1]


def _is3d(v: Any) -> bool:
    return isinstance(v, (g3.Point3, g3.Plane3, g3.Vector3))


def _distance(o1: Any, o2: Any) -> float:
    if _is3d(o1) or _is3d(o2):
        def lift(o: Any) -> Any:
            return g3.lift(o) if isinstance(o, g2.Point2) else o

        return g3.distance3(lift(o1), lift(o2))
    return g2.distance(o1, o2)


def _b_function(r: Resolver, a: Mapping[str, Any]) -> Built:
    e = parse_expr(a["expr"])
    binds = r.bindings(referenced_names(e) - RESERVED_NAMES - {"x"}, "expr")
    dom = None
    if a.get("x_min") is not None or a.get("x_max") is not None:
        lo = r.num(a["x_min"], "x_min") if a.get("x_min") is not None else -math.inf
        hi = r.num(a["x_max"], "x_max") if a.get("x_max") is not None else math.inf
        if not lo < hi:
            raise DegenerateInput("x_min must be smaller than x_max", arg="x_min")
        dom = (lo, hi)
    return "function", g2.FunctionGraph("expr", "x", e, binds, domain=dom)


def _b_curve(r: Resolver, a: Mapping[str, Any]) -> Built:
    ex, ey = parse_expr(a["x_expr"]), parse_expr(a["y_expr"])
    names = (referenced_names(ex) | referenced_names(ey)) - RESERVED_NAMES - {"t"}
    binds = r.bindings(names, "x_expr")
    lo, hi = _span(r, a, "t_min", "t_max")
    return "curve", g2.ParametricCurve(ex, ey, "t", lo, hi, binds)


def _b_inequality(r: Resolver, a: Mapping[str, Any]) -> Built:
    rel = parse_relation(a["inequality"])
    if rel.op == "=":
        raise TypeMismatch("a region needs an inequality (<, >, <=, >=)", arg="inequality")
    names = (referenced_names(rel.lhs) | referenced_names(rel.rhs)) - RESERVED_NAMES - {"x", "y"}
    return "region", g2.Region2(rel, r.bindings(names, "inequality"))


def _b_slider(r: Resolver, a: Mapping[str, Any]) -> Built:
    v = a["value"]
    if isinstance(v, str) and referenced_names(parse_expr(v)) - RESERVED_NAMES:
        raise TypeMismatch("a slider value must be a constant", arg="value")
    return "number", r.num(v, "value")


def _b_shade(r: Resolver, a: Mapping[str, Any]) -> Built:
    f = r.function(a["function"], "function")
    lo, hi = r.num(a["a"], "a"), r.num(a["b"], "b")
    val = _guard_interval(lambda: integrate(f.evaluate, lo, hi))
    return "integral", IntegralShade(f, lo, hi, val)


def _b_roots(r: Resolver, a: Mapping[str, Any]) -> Built:
    f = r.function(a["function"], "function")
    lo, hi = _span(r, a, "x_min", "x_max")
    xs = _guard_interval(lambda: find_roots(f.evaluate, lambda x: 0.0, lo, hi, root_grid(lo, hi)))
    if not xs:
        raise PreconditionFailed("no roots found in the interval")
    return _multi("point", [g2.Point2(x, 0.0) for x in xs])


def _b_turning(r: Resolver, a: Mapping[str, Any]) -> Built:
    f = r.function(a["function"], "function")
    lo, hi = _span(r, a, "x_min", "x_max")
    return _points_at(f, _guard_interval(lambda: turning_points(f.evaluate, lo, hi)), "turning points")


def _b_inflection(r: Resolver, a: Mapping[str, Any]) -> Built:
    f = r.function(a["function"], "function")
    lo, hi = _span(r, a, "x_min", "x_max")
    return _points_at(f, _guard_interval(lambda: inflection_points(f.evaluate, lo, hi)), "inflection points")


# Asymptote search window and probe abscissae for the behaviour at infinity.
ASYMPTOTE_WINDOW = (-100.0, 100.0)
_FAR = (1e6, 2e6, 4e6)
_FAR_CHECK = 8e6


def _blows_up(f: Callable[[float], Any], x0: float, side: float) -> bool:
    vals = []
    for d in (1e-4, 1e-8, 1e-12):
        v = f(x0 + side * d * max(1.0, abs(x0)))
        if is_undefined(v):
            return False
        vals.append(abs(v))
    return vals[0] < vals[1] < vals[2] and vals[2] - vals[0] >= 10.0


def _vertical_asymptotes(f: g2.FunctionGraph, lo: float, hi: float, n: int = 20001) -> list[float]:
    fn = f.evaluate
    xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    vals = [fn(x) for x in xs]
    cands: list[float] = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        ua, ub = is_undefined(a), is_undefined(b)
        if ua and ub:
            continue
        if ua != ub:
            # bisect the defined/undefined boundary
            x0, x1 = xs[i], xs[i + 1]
            for _ in range(200):
                m = 0.5 * (x0 + x1)
                if m in (x0, x1):
                    break
                if is_undefined(fn(m)) == ua:
                    x0 = m
                else:
                    x1 = m
            cands.append(0.5 * (x0 + x1))
        elif (a < 0) != (b < 0) and a != 0 and b != 0:
            x0, x1, fa = xs[i], xs[i + 1], a
            for _ in range(200):
                m = 0.5 * (x0 + x1)
                fm = fn(m)
                if m in (x0, x1) or is_undefined(fm) or fm == 0:
                    break
                if (fm < 0) == (fa < 0):
                    x0, fa = m, fm
                else:
                    x1 = m
            cands.append(0.5 * (x0 + x1))
        elif 0 < i and not is_undefined(vals[i - 1]) and abs(a) > abs(vals[i - 1]) and abs(a) >= abs(b):
            neg = lambda x: -abs(fn(x)) if not is_undefined(fn(x)) else -math.inf  # noqa: E731
            cands.append(golden_min(neg, xs[i - 1], xs[i + 1]))
    found: list[float] = []
    for c in sorted(cands):
        if _blows_up(fn, c, 1.0) or _blows_up(fn, c, -1.0):
            c = 0.0 if abs(c) <= 1e-12 else c
            if not found or abs(found[-1] - c) > 1e-6 * max(1.0, abs(c)):
                found.append(c)
    return found


def _far_line(f: Callable[[float], Any], s: float) -> tuple[float, float] | None:
    xs = [s * X for X in _FAR]
    ys = [f(x) for x in xs]
    if any(is_undefined(y) for y in ys):
        return None
    # solve y = m x + b + c / x through three samples (Cramer's rule)
    rows = [(x, 1.0, 1.0 / x) for x in xs]

    def det(m: Sequence[Sequence[float]]) -> float:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )

    d = det(rows)
    sol = []
    for k in range(3):
        mk = [list(row) for row in rows]
        for j in range(3):
            mk[j][k] = ys[j]
        sol.append(det(mk) / d)
    m, b, c = sol
    xc = s * _FAR_CHECK
    yc = f(xc)
    if is_undefined(yc) or not all(math.isfinite(v) for v in sol):
        return None
    if abs(yc - (m * xc + b + c / xc)) > 1e-6 * max(1.0, abs(yc)):
        return None
    # snap fitting noise so exact asymptotes print exactly
    m = 0.0 if abs(m) <= 1e-9 else m
    b = 0.0 if abs(b) <= 1e-8 * max(1.0, abs(m)) else b
    return m, b


def asymptotes(f: g2.FunctionGraph) -> list[g2.LineLike]:
    lo, hi = ASYMPTOTE_WINDOW
    if f.domain is not None:
        lo, hi = max(lo, f.domain[0]), min(hi, f.domain[1])
    lines: list[g2.LineLike] = []
    if lo < hi:
        for x in _vertical_asymptotes(f, lo, hi):
            lines.append(g2.LineLike("line", g2.Point2(x, 0.0), g2.Point2(x, 1.0)))
    for s in (-1.0, 1.0):
        if f.domain is not None and math.isfinite(f.domain[0 if s < 0 else 1]):
            continue
        mb = _far_line(f.evaluate, s)
        if mb is None:
            continue
        m, b = mb
        line = g2.LineLike("line", g2.Point2(0.0, b), g2.Point2(1.0, m + b))
        if not any(g2.are_equal(line, l) for l in lines):
            lines.append(line)
    return lines


def _b_asymptote(r: Resolver, a: Mapping[str, Any]) -> Built:
    found = asymptotes(r.function(a["function"], "function"))
    if not found:
        raise PreconditionFailed("the function has no asymptotes")
    return _multi("line", found)


def _source_kind(r: Resolver, name: str) -> str:
    return r.kind(name, "obj")


def _transform(map_fn: Callable[[Resolver, Mapping[str, Any]], g2.Affine]) -> Callable[[Resolver, Mapping[str, Any]], Built]:
    def build(r: Resolver, a: Mapping[str, Any]) -> Built:
        obj = r.get(a["obj"], "obj")
        if not isinstance(obj, (g2.Point2, tuple, g2.FunctionGraph) + g2.CURVE_TYPES) or isinstance(obj, g2.ParametricCurve):
            raise TypeMismatch(f"a {_source_kind(r, a['obj'])} cannot be transformed", arg="obj")
        return _source_kind(r, a["obj"]), g2.apply_affine(obj, map_fn(r, a))

    return build


def _center_or_origin(r: Resolver, a: Mapping[str, Any]) -> g2.Point2:
    return r.point(a["center"], "center") if a.get("center") is not None else g2.Point2(0.0, 0.0)


def _translate_map(r: Resolver, a: Mapping[str, Any]) -> g2.Affine:
    v = r.get(a["vector"], "vector")
    if not isinstance(v, g2.LineLike) or v.kind != "vector":
        raise TypeMismatch("translation needs a vector", arg="vector")
    return g2.translate_map((v.p2.x - v.p1.x, v.p2.y - v.p1.y))


# 3D ---------------------------------------------------------------------


def _direction3(r: Resolver, name: str, arg: str) -> g3.Vec:
    v = r.get(name, arg)
    if isinstance(v, g3.Vector3):
        d = v.delta
    elif isinstance(v, g2.LineLike):
        d = (v.p2.x - v.p1.x, v.p2.y - v.p1.y, 0.0)
    else:
        raise TypeMismatch(f"'{name}' does not define a direction", arg=arg)
    if g3.norm(d) == 0:
        raise DegenerateInput("direction has zero length", arg=arg)
    return d


def _b_vector3d(r: Resolver, a: Mapping[str, Any]) -> Built:
    s = r.point3(a["start"], "start")
    if a.get("end") is None:
        return "vector3d", g3.make_vector(g3.Point3(0.0, 0.0, 0.0), s)
    return "vector3d", g3.make_vector(s, r.point3(a["end"], "end"))


def _three3(r: Resolver, a: Mapping[str, Any]) -> tuple[g3.Point3, g3.Point3, g3.Point3]:
    return r.point3(a["p1"], "p1"), r.point3(a["p2"], "p2"), r.point3(a["p3"], "p3")


def _b_sphere(r: Resolver, a: Mapping[str, Any]) -> Built:
    c = r.point3(a["center"], "center")
    has_r, has_p = a.get("radius") is not None, a.get("point") is not None
    if has_r == has_p:
        raise TypeMismatch("give exactly one of radius and point", arg="radius")
    rad = r.num(a["radius"], "radius") if has_r else g3.distance3(c, r.point3(a["point"], "point"))
    return "sphere", g3.sphere(c, rad)


def _b_tetra(r: Resolver, a: Mapping[str, Any]) -> Built:
    p3 = r.point3(a["p3"], "p3") if a.get("p3") is not None else None
    return "tetrahedron", g3.tetrahedron(r.point3(a["p1"], "p1"), r.point3(a["p2"], "p2"), p3)


def _b_unsupported(tool: str) -> Callable[[Resolver, Mapping[str, Any]], Built]:
    def build(r: Resolver, a: Mapping[str, Any]) -> Built:
        g3.unsupported(tool)
        raise AssertionError("unreachable")

    return build


def _kinded(kind: str, fn: Callable[[Resolver, Mapping[str, Any]], Any]) -> Callable[[Resolver, Mapping[str, Any]], Built]:
    return lambda r, a: (kind, fn(r, a))


def _p(r: Resolver, a: Mapping[str, Any], *keys: str) -> list[g2.Point2]:
    return [r.point(a[k], k) for k in keys]


BUILDERS: dict[str, Callable[[Resolver, Mapping[str, Any]], Built]] = {
    "add_point": _kinded("point", lambda r, a: g2.Point2(r.num(a["x"], "x"), r.num(a["y"], "y"))),
    "add_point_on": _b_point_on,
    "add_intersect": _b_intersect,
    "add_midpoint": _kinded("point", lambda r, a: g2.midpoint(*_p(r, a, "p1", "p2"))),
    "add_segment": _linelike_build("segment", "p1", "p2"),
    "add_line": _linelike_build("line", "p1", "p2"),
    "add_ray": _linelike_build("ray", "start", "through"),
    "add_vector": _linelike_build("vector", "start", "end"),
    "add_perpendicular_line": _kinded(
        "line", lambda r, a: g2.perpendicular_line(r.point(a["point"], "point"), r.linelike(a["line"], "line"))
    ),
    "add_perpendicular_bisector": _kinded("line", lambda r, a: g2.perpendicular_bisector(*_p(r, a, "p1", "p2"))),
    "add_parallel_line": _kinded(
        "line", lambda r, a: g2.parallel_line(r.point(a["point"], "point"), r.linelike(a["line"], "line"))
    ),
    "add_angle_bisector": _kinded("line", lambda r, a: g2.angle_bisector(*_p(r, a, "a", "b", "c"))),
    "add_tangent": _b_tangent,
    "add_tangent_conic_conic": _b_tangent_cc,
    "add_circle": _b_circle,
    "add_arc": _arc_build("arc"),
    "add_sector": _arc_build("sector"),
    "add_semicircle": _kinded("semicircle", lambda r, a: g2.semicircle(*_p(r, a, "p1", "p2"))),
    "add_circle_3_points": _kinded("circle", lambda r, a: g2.circumcircle(*_p(r, a, "p1", "p2", "p3"))),
    "add_incircle": _kinded("circle", lambda r, a: g2.incircle(*_p(r, a, "p1", "p2", "p3"))),
    "add_ellipse": _kinded("ellipse", lambda r, a: g2.ellipse(*_p(r, a, "focus1", "focus2", "point"))),
    "add_hyperbola": _kinded("hyperbola", lambda r, a: g2.hyperbola(*_p(r, a, "focus1", "focus2", "point"))),
    "add_parabola": _kinded(
        "parabola", lambda r, a: g2.parabola(r.point(a["focus"], "focus"), r.linelike(a["directrix"], "directrix"))
    ),
    "add_polygon": _kinded("polygon", lambda r, a: g2.make_polygon([r.point(n, "vertices") for n in a["vertices"]])),
    "add_regular_polygon": _kinded("polygon", lambda r, a: g2.regular_polygon(*_p(r, a, "p1", "p2"), a["n"])),
    "add_vertex": _b_vertex,
    "add_center": _kinded("point", lambda r, a: g2.center_of(r.get(a["conic"], "conic"))),
    "add_triangle_center": _kinded("point", lambda r, a: g2.triangle_center(*_p(r, a, "p1", "p2", "p3"), a["kind"])),
    "add_angle": _kinded("angle", lambda r, a: to_rad(g2.angle_measure(*_p(r, a, "a", "b", "c")))),
    "add_distance": _kinded("number", lambda r, a: _distance(r.get(a["obj1"], "obj1"), r.get(a["obj2"], "obj2"))),
    "add_area": _kinded("number", lambda r, a: _area(r.get(a["obj"], "obj"))),
    "add_slope": _kinded("number", lambda r, a: g2.measure("slope", r.linelike(a["line"], "line"))),
    "add_function": _b_function,
    "add_derivative": _kinded(
        "function",
        lambda r, a: (lambda f: g2.FunctionGraph("derivative", base=f, domain=f.domain))(r.function(a["function"], "function")),
    ),
    "add_integral_function": _kinded(
        "function",
        lambda r, a: (lambda f: g2.FunctionGraph("integral", base=f, lower=r.num(a.get("lower", 0.0), "lower"), domain=f.domain))(
            r.function(a["function"], "function")
        ),
    ),
    "add_inflection_point": _b_inflection,
    "add_asymptote": _b_asymptote,
    "add_curve": _b_curve,
    "add_roots": _b_roots,
    "add_turning_point": _b_turning,
    "add_slider": _b_slider,
    "add_best_fit_line": _kinded("line", lambda r, a: g2.best_fit_line([r.point(n, "points") for n in a["points"]])),
    "add_inequality": _b_inequality,
    "add_integral_shade": _b_shade,
    "add_text": _kinded(
        "text", lambda r, a: TextLabel(a["text"], g2.Point2(r.num(a.get("x", 0.0), "x"), r.num(a.get("y", 0.0), "y")))
    ),
    "transform_reflect_line": _transform(lambda r, a: g2.reflect_line_map(r.linelike(a["line"], "line"))),
    "transform_reflect_point": _transform(lambda r, a: g2.reflect_point_map(r.point(a["point"], "point"))),
    "transform_rotate": _transform(lambda r, a: g2.rotate_map(_center_or_origin(r, a), r.degrees(a["angle"], "angle"))),
    "transform_translate": _transform(_translate_map),
    "transform_dilate": _transform(lambda r, a: g2.dilate_map(_center_or_origin(r, a), r.num(a["factor"], "factor"))),
    # solids
    "add_point3d": _kinded("point3d", lambda r, a: g3.Point3(r.num(a["x"], "x"), r.num(a["y"], "y"), r.num(a["z"], "z"))),
    "add_vector3d": _b_vector3d,
    "add_plane": _kinded("plane", lambda r, a: g3.plane_from_points(*_three3(r, a))),
    "add_finite_plane": _kinded("plane", lambda r, a: g3.finite_plane(*_three3(r, a))),
    "add_perpendicular_plane": _kinded(
        "plane", lambda r, a: g3.perpendicular_plane(r.point3(a["point"], "point"), _direction3(r, a["line"], "line"))
    ),
    "add_plane_bisector": _kinded("plane", lambda r, a: g3.plane_bisector(r.point3(a["p1"], "p1"), r.point3(a["p2"], "p2"))),
    "add_pyramid": _kinded(
        "pyramid", lambda r, a: g3.pyramid([r.point3(n, "base") for n in a["base"]], r.point3(a["apex"], "apex"))
    ),
    "add_prism": _kinded(
        "prism", lambda r, a: g3.prism([r.point3(n, "base") for n in a["base"]], _direction3(r, a["vector"], "vector"))
    ),
    "add_cone": _kinded(
        "cone",
        lambda r, a: g3.cone(r.point3(a["base_center"], "base_center"), r.point3(a["apex"], "apex"), r.num(a["radius"], "radius")),
    ),
    "add_cylinder": _kinded(
        "cylinder",
        lambda r, a: g3.cylinder(
            r.point3(a["base_center"], "base_center"), r.point3(a["top_center"], "top_center"), r.num(a["radius"], "radius")
        ),
    ),
    "add_sphere": _b_sphere,
    "add_tetrahedron": _b_tetra,
    "add_cube": _kinded("cube", lambda r, a: g3.cube(*_three3(r, a))),
    "add_cross_section": _kinded(
        "polygon3d", lambda r, a: g3.cross_section(r.get(a["plane"], "plane"), r.get(a["solid"], "solid"))
    ),
    "add_net": _b_unsupported("add_net"),
    "add_text_3d": _kinded("text3d", lambda r, a: g3.Text3(a["text"], r.point3(a["position"], "position"))),
    "add_surface_revolution": _b_unsupported("add_surface_revolution"),
}

# Nominal kind of an object whose construction produced no value (silent mode).
TOOL_KIND: dict[str, str] = {
    "add_point": "point", "add_point_on": "point", "add_intersect": "point", "add_midpoint": "point",
    "add_segment": "segment", "add_line": "line", "add_ray": "ray", "add_vector": "vector",
    "add_perpendicular_line": "line", "add_perpendicular_bisector": "line", "add_parallel_line": "line",
    "add_angle_bisector": "line", "add_tangent": "line", "add_tangent_conic_conic": "line",
    "add_circle": "circle", "add_arc": "arc", "add_sector": "sector", "add_semicircle": "semicircle",
    "add_circle_3_points": "circle", "add_incircle": "circle", "add_ellipse": "ellipse",
    "add_parabola": "parabola", "add_hyperbola": "hyperbola", "add_polygon": "polygon",
    "add_regular_polygon": "polygon", "add_vertex": "point", "add_center": "point",
    "add_triangle_center": "point", "add_angle": "angle", "add_distance": "number", "add_area": "number",
    "add_slope": "number", "add_function": "function", "add_derivative": "function",
    "add_integral_function": "function", "add_inflection_point": "point", "add_asymptote": "line",
    "add_curve": "curve", "add_roots": "point", "add_turning_point": "point", "add_slider": "number",
    "add_best_fit_line": "line", "add_inequality": "region", "add_integral_shade": "integral",
    "add_text": "text", "add_point3d": "point3d", "add_vector3d": "vector3d", "add_plane": "plane",
    "add_finite_plane": "plane", "add_perpendicular_plane": "plane", "add_plane_bisector": "plane",
    "add_pyramid": "pyramid", "add_prism": "prism", "add_cone": "cone", "add_cylinder": "cylinder",
    "add_sphere": "sphere", "add_tetrahedron": "tetrahedron", "add_cube": "cube",
    "add_cross_section": "polygon3d", "add_net": "polygon3d", "add_text_3d": "text3d",
    "add_surface_revolution": "surface",
}


def nominal_kind(tool: str, args: Mapping[str, Any], lookup: Callable[[str], Any]) -> str:
    if tool.startswith("transform_"):
        rec = lookup(args.get("obj", ""))
        return rec.kind if rec is not None else "point"
    return TOOL_KIND.get(tool, "point")


# -------------------------------------------------------------------- queries


def _area(obj: Any) -> float:
    if isinstance(obj, g3.Polygon3):
        return g3.polygon3_area(obj.vertices)
    if isinstance(obj, IntegralShade):
        return abs(obj.value)
    return g2.measure("area", obj)


def _q_concyclic(r: Resolver, a: Mapping[str, Any]) -> QueryResult:
    pts = _p(r, a, "p1", "p2", "p3", "p4")
    try:
        return QueryResult(g2.are_concyclic(*pts))
    except DegenerateInput:
        return QueryResult(False)


def _relation_fn(text: str, var: str, r: Resolver, arg: str) -> tuple[Callable, Callable, Relation]:
    rel = parse_relation(text)
    if rel.op != "=":
        raise TypeMismatch("expected an equation", arg=arg)
    names = (referenced_names(rel.lhs) | referenced_names(rel.rhs)) - RESERVED_NAMES - {var}
    env = {k: (v.evaluate if isinstance(v, g2.FunctionGraph) else v) for k, v in r.bindings(names, arg)}
    fl, fr = compile_expr(rel.lhs), compile_expr(rel.rhs)

    def side(run: Callable) -> Callable[[float], Any]:
        local = dict(env)

        def f(x: float) -> Any:
            local[var] = x
            return run(local)

        return f

    return side(fl), side(fr), rel


def _solve(r: Resolver, a: Mapping[str, Any], lo: float, hi: float, grid: int) -> list[float]:
    var = a.get("var") or "x"
    fl, fr, _ = _relation_fn(a["equation"], var, r, "equation")
    return _guard_interval(lambda: find_roots(fl, fr, lo, hi, grid))


def _q_solve(r: Resolver, a: Mapping[str, Any]) -> QueryResult:
    return QueryResult(_solve(r, a, -1000.0, 1000.0, 100_001), extra={"numeric_fallback": True, "var": a.get("var") or "x"})


def _q_nsolve(r: Resolver, a: Mapping[str, Any]) -> QueryResult:
    lo, hi = _span(r, a, "x_min", "x_max")
    return QueryResult(_solve(r, a, lo, hi, root_grid(lo, hi)), extra={"var": a.get("var") or "x"})


def _q_integral(r: Resolver, a: Mapping[str, Any]) -> QueryResult:
    var = a.get("var") or "x"
    text = a["expr"].strip()
    lo, hi = r.num(a["a"], "a"), r.num(a["b"], "b")
    e = parse_expr(text)
    if isinstance(e, Var) and e.name != var and e.name not in RESERVED_NAMES:
        fn = r.function(e.name, "expr").evaluate
    else:
        names = referenced_names(e) - RESERVED_NAMES - {var}
        env = {k: (v.evaluate if isinstance(v, g2.FunctionGraph) else v) for k, v in r.bindings(names, "expr")}
        run = compile_expr(e)

        def fn(x: float) -> Any:
            env[var] = x
            return run(env)

    return QueryResult(_guard_interval(lambda: integrate(fn, lo, hi)))


def _q_extremum(kind: str) -> Callable[[Resolver, Mapping[str, Any]], QueryResult]:
    def q(r: Resolver, a: Mapping[str, Any]) -> QueryResult:
        f = r.function(a["function"], "function")
        lo, hi = r.num(a["a"], "a"), r.num(a["b"], "b")
        if lo > hi:
            raise DegenerateInput("interval start exceeds its end", arg="a")
        x, y = _guard_interval(lambda: extremum_on(f.evaluate, lo, hi, kind))
        return QueryResult(y, extra={"at": x})

    return q


def _measure(kind: str, key: str) -> Callable[[Resolver, Mapping[str, Any]], QueryResult]:
    return lambda r, a: QueryResult(g2.measure(kind, r.get(a[key], key)))


def _q_area(r: Resolver, a: Mapping[str, Any]) -> QueryResult:
    return QueryResult(_area(r.get(a["obj"], "obj")))


def _q_volume(fn: Callable[[Any], float]) -> Callable[[Resolver, Mapping[str, Any]], QueryResult]:
    return lambda r, a: QueryResult(fn(r.get(a["solid"], "solid")))


def _q_angle(r: Resolver, a: Mapping[str, Any]) -> QueryResult:
    extra = {"label": a["name"]} if a.get("name") else {}
    return QueryResult(g2.angle_measure(*_p(r, a, "a", "b", "c")), "deg", extra)


QUERIES: dict[str, Callable[[Resolver, Mapping[str, Any]], QueryResult]] = {
    "query_angle": _q_angle,
    "query_distance": lambda r, a: QueryResult(_distance(r.get(a["obj1"], "obj1"), r.get(a["obj2"], "obj2"))),
    "query_length": _measure("length", "obj"),
    "query_perimeter": _measure("perimeter", "obj"),
    "query_area": _q_area,
    "query_slope": _measure("slope", "line"),
    "query_radius": _measure("radius", "obj"),
    "query_x_coord": _measure("coord_x", "point"),
    "query_y_coord": _measure("coord_y", "point"),
    "query_are_parallel": lambda r, a: QueryResult(g2.are_parallel(r.linelike(a["line1"], "line1"), r.linelike(a["line2"], "line2"))),
    "query_are_perpendicular": lambda r, a: QueryResult(
        g2.are_perpendicular(r.linelike(a["line1"], "line1"), r.linelike(a["line2"], "line2"))
    ),
    "query_is_tangent": lambda r, a: QueryResult(g2.is_tangent(r.get(a["obj1"], "obj1"), r.get(a["obj2"], "obj2"))),
    "query_is_in_region": lambda r, a: QueryResult(g2.in_region(r.point(a["point"], "point"), r.get(a["region"], "region"))),
    "query_are_equal": lambda r, a: QueryResult(g2.are_equal(r.get(a["obj1"], "obj1"), r.get(a["obj2"], "obj2"))),
    "query_are_collinear": lambda r, a: QueryResult(g2.are_collinear(*_p(r, a, "p1", "p2", "p3"))),
    "query_are_concyclic": _q_concyclic,
    "query_are_congruent": lambda r, a: QueryResult(g2.are_congruent(r.get(a["obj1"], "obj1"), r.get(a["obj2"], "obj2"))),
    "query_solve": _q_solve,
    "query_nsolve": _q_nsolve,
    "query_definite_integral": _q_integral,
    "query_function_max": _q_extremum("max"),
    "query_function_min": _q_extremum("min"),
    "query_volume": _q_volume(g3.volume),
    "query_surface_area": _q_volume(g3.surface_area),
    "query_coords3d": lambda r, a: QueryResult(list(r.point3(a["point"], "point"))),
}
# query_is_defined and query_dependents read canvas structure and live in the canvas.


# ------------------------------------------------------------------ printing


def _pt(p: Any) -> str:
    return "(" + ", ".join(fmt_number(c) for c in p) + ")"


def describe(kind: str, v: Any) -> str:
    """Short printable value used in observations."""
    if is_undefined(v):
        return "undefined"
    if isinstance(v, tuple):
        return "[" + ", ".join(describe(kind, x) for x in v) + "]"
    if isinstance(v, (g2.Point2, g3.Point3)):
        return _pt(v)
    if kind == "angle":
        return f"{fmt_number(to_deg(v))}°"
    if isinstance(v, (bool, int, float)):
        return fmt_number(v)
    if isinstance(v, g2.LineLike):
        if v.kind == "line":
            ux, uy = v.direction
            a, b = -uy, ux
            c = a * v.p1.x + b * v.p1.y
            return f"{fmt_number(a)}x + {fmt_number(b)}y = {fmt_number(c)}"
        return f"{v.kind} {_pt(v.p1)} -> {_pt(v.p2)}"
    if isinstance(v, g2.Circle2):
        return f"circle centre {_pt(v.center)} radius {fmt_number(v.radius)}"
    if isinstance(v, g2.ArcLike):
        return (
            f"{v.kind} centre {_pt(v.center)} radius {fmt_number(v.radius)} "
            f"from {fmt_number(to_deg(v.start))}° sweeping {fmt_number(to_deg(v.span))}°"
        )
    if isinstance(v, g2.Conic2):
        if v.kind == "parabola":
            return f"parabola focus {_pt(v.focus1)} directrix {describe('line', v.directrix)}"
        return f"{v.kind} foci {_pt(v.focus1)}, {_pt(v.focus2)} a = {fmt_number(v.a)}"
    if isinstance(v, (g2.Polygon2, g3.Polygon3)):
        return "polygon " + ", ".join(_pt(p) for p in v.vertices)
    if isinstance(v, g2.FunctionGraph):
        return f"f(x) = {v.describe()}"
    if isinstance(v, g2.ParametricCurve):
        return f"curve ({to_text(v.x_expr)}, {to_text(v.y_expr)}), {v.var} in [{fmt_number(v.t_min)}, {fmt_number(v.t_max)}]"
    if isinstance(v, g2.Region2):
        return relation_text(v.relation)
    if isinstance(v, IntegralShade):
        return fmt_number(v.value)
    if isinstance(v, (TextLabel, g3.Text3)):
        return repr(v.text)
    if isinstance(v, g3.Vector3):
        return "vector " + _pt(v.delta)
    if isinstance(v, g3.Plane3):
        n = v.normal
        return f"plane {fmt_number(n[0])}x + {fmt_number(n[1])}y + {fmt_number(n[2])}z = {fmt_number(g3.dot(n, v.point))}"
    if isinstance(v, g3.Solid3):
        if v.polyhedral:
            return f"{v.kind} with {len(v.vertices)} vertices"
        return f"{v.kind} centre {_pt(v.center)} radius {fmt_number(v.radius)}"
    return str(v)


# ------------------------------------------------------------------ snapshot


def _xy(p: Any) -> list[float]:
    return [float(c) for c in p]


def snapshot(v: Any) -> Any:
    """JSON-safe record of a value; floats are kept at full precision."""
    if is_undefined(v):
        return None
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, (tuple, list)):
        return [snapshot(x) for x in v]
    if isinstance(v, g2.Point2):
        return {"type": "point", "xy": _xy(v)}
    if isinstance(v, g3.Point3):
        return {"type": "point3d", "xyz": _xy(v)}
    if isinstance(v, g2.LineLike):
        return {"type": v.kind, "p1": _xy(v.p1), "p2": _xy(v.p2)}
    if isinstance(v, g2.Circle2):
        return {"type": "circle", "center": _xy(v.center), "radius": v.radius}
    if isinstance(v, g2.ArcLike):
        return {"type": v.kind, "center": _xy(v.center), "radius": v.radius, "start": v.start, "span": v.span}
    if isinstance(v, g2.Conic2):
        if v.kind == "parabola":
            return {"type": "parabola", "focus": _xy(v.focus1), "directrix": snapshot(v.directrix)}
        return {"type": v.kind, "focus1": _xy(v.focus1), "focus2": _xy(v.focus2), "a": v.a}
    if isinstance(v, g2.Polygon2):
        return {"type": "polygon", "vertices": [_xy(p) for p in v.vertices]}
    if isinstance(v, g3.Polygon3):
        return {"type": "polygon3d", "vertices": [_xy(p) for p in v.vertices]}
    if isinstance(v, g2.FunctionGraph):
        return {"type": "function", "text": v.describe(), "domain": None if v.domain is None else [snapshot(d) if math.isfinite(d) else None for d in v.domain]}
    if isinstance(v, g2.ParametricCurve):
        return {"type": "curve", "x": to_text(v.x_expr), "y": to_text(v.y_expr), "t": [v.t_min, v.t_max]}
    if isinstance(v, g2.Region2):
        return {"type": "region", "relation": relation_text(v.relation)}
    if isinstance(v, IntegralShade):
        return {"type": "integral", "a": v.a, "b": v.b, "value": v.value}
    if isinstance(v, TextLabel):
        return {"type": "text", "text": v.text, "xy": _xy(v.position)}
    if isinstance(v, g3.Text3):
        return {"type": "text3d", "text": v.text, "xyz": _xy(v.position)}
    if isinstance(v, g3.Vector3):
        return {"type": "vector3d", "p1": _xy(v.p1), "p2": _xy(v.p2)}
    if isinstance(v, g3.Plane3):
        return {"type": "plane", "point": _xy(v.point), "normal": list(v.normal), "corners": [_xy(c) for c in v.corners]}
    if isinstance(v, g3.Solid3):
        return {
            "type": v.kind,
            "vertices": [_xy(p) for p in v.vertices],
            "faces": [list(f) for f in v.faces],
            "center": None if v.center is None else _xy(v.center),
            "radius": v.radius,
            "axis": list(v.axis),
        }
    raise TypeError(f"cannot snapshot {type(v).__name__}")


def check_finite(v: Any) -> None:
    """Reject results carrying NaN or infinities (they never leave the engine)."""
    def walk(x: Any) -> None:
        if isinstance(x, float):
            if not math.isfinite(x):
                raise DegenerateInput("construction has no finite result")
        elif isinstance(x, (list, tuple)):
            for y in x:
                walk(y)
        elif isinstance(x, dict):
            for y in x.values():
                walk(y)

    if not isinstance(v, g2.FunctionGraph):
        walk(snapshot(v))


def plain_value(v: Any, kind: str = "") -> Any:
    """Query payload value: floats, booleans, lists of those, or None for undefined."""
    if is_undefined(v):
        return None
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [plain_value(x) for x in v]
    return snapshot(v)


__all__ = [
    "BUILDERS",
    "QUERIES",
    "TOOL_KIND",
    "IntegralShade",
    "QueryResult",
    "Resolver",
    "TextLabel",
    "action_refs",
    "asymptotes",
    "check_finite",
    "describe",
    "nominal_kind",
    "plain_value",
    "snapshot",
]
