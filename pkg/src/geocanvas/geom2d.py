"""Analytic plane geometry behind every 2D construction, transform and query.

Conventions:

* angles are radians internally; tool-facing values are converted by callers;
* a line's natural parameter is the signed distance ``t`` from ``p1`` along
  its unit direction;
* circles, arcs and centred conics are parameterized by the CCW angle from
  east about their centre;
* intersection lists are sorted by the parameter along the *first* operand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .errors import DegenerateInput, IndexOutOfRange, PreconditionFailed, TypeMismatch
from .expr import (
    Expr,
    Relation,
    compile_expr,
    derivative,
    find_roots,
    golden_min,
    holds,
    integrate,
    to_text,
)
from .numeric import DEFAULT_POLICY, UNDEFINED, TolerancePolicy, is_undefined, tol_pass

TAU = 2.0 * math.pi
_EPS = 1e-12
DEFAULT_FN_RANGE = (-1e3, 1e3)
DEFAULT_FN_GRID = 100_001

# --------------------------------------------------------------------- types


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class LineLike:
    kind: str  # line | ray | segment | vector
    p1: Point2
    p2: Point2

    @property
    def direction(self) -> tuple[float, float]:
        return _unit(_sub(self.p2, self.p1))

    @property
    def length(self) -> float:
        return _dist(self.p1, self.p2)


@dataclass(frozen=True)
class Circle2:
    center: Point2
    radius: float


@dataclass(frozen=True)
class ArcLike:
    kind: str  # arc | sector | semicircle
    center: Point2
    radius: float
    start: float  # radians, CCW sweep from start
    span: float  # (0, 2*pi]

    @property
    def end(self) -> float:
        return self.start + self.span

    @property
    def circle(self) -> Circle2:
        return Circle2(self.center, self.radius)


@dataclass(frozen=True)
class Conic2:
    """Ellipse/hyperbola by foci and semi-major axis, or parabola by focus and directrix."""

    kind: str  # ellipse | hyperbola | parabola
    focus1: Point2
    focus2: Point2 | None = None
    a: float = 0.0
    directrix: LineLike | None = None


@dataclass(frozen=True)
class Polygon2:
    vertices: tuple[Point2, ...]


@dataclass(frozen=True)
class FunctionGraph:
    """y = f(x).

    ``kind`` is expr, derivative (of ``base``), integral (of ``base`` from
    ``lower``) or shifted (``base`` translated by ``shift``).
    """

    kind: str
    var: str = "x"
    expr: Expr | None = None
    bindings: tuple = ()
    base: FunctionGraph | None = None
    lower: float = 0.0
    domain: tuple[float, float] | None = None
    shift: tuple[float, float] = (0.0, 0.0)
    _fn: Any = field(default=None, compare=False, repr=False, hash=False)

    def evaluate(self, x: float) -> Any:
        fn = self._fn
        if fn is None:
            fn = self._build()
            object.__setattr__(self, "_fn", fn)
        if self.domain is not None and not (self.domain[0] <= x <= self.domain[1]):
            return UNDEFINED
        return fn(x)

    __call__ = evaluate

    def _build(self) -> Callable[[float], Any]:
        if self.kind == "derivative":
            base = self.base
            return lambda x: derivative(base.evaluate, x)
        if self.kind == "integral":
            base, lower = self.base, self.lower

            def antiderivative(x: float) -> Any:
                try:
                    return integrate(base.evaluate, lower, x)
                except ValueError:
                    return UNDEFINED

            return antiderivative
        if self.kind == "shifted":
            base, (dx, dy) = self.base, self.shift

            def moved(x: float) -> Any:
                y = base.evaluate(x - dx)
                return UNDEFINED if is_undefined(y) else y + dy

            return moved
        run = compile_expr(self.expr)
        env = {name: (v.evaluate if isinstance(v, FunctionGraph) else v) for name, v in self.bindings}
        var = self.var

        def f(x: float) -> Any:
            env[var] = x
            return run(env)

        return f

    def describe(self) -> str:
        if self.kind == "derivative":
            return f"d/dx[{self.base.describe()}]"
        if self.kind == "integral":
            return f"integral[{self.base.describe()}]"
        if self.kind == "shifted":
            return f"{self.base.describe()} shifted by ({self.shift[0]!r}, {self.shift[1]!r})"
        return to_text(self.expr)


@dataclass(frozen=True)
class ParametricCurve:
    x_expr: Expr
    y_expr: Expr
    var: str
    t_min: float
    t_max: float
    bindings: tuple = ()
    _fn: Any = field(default=None, compare=False, repr=False, hash=False)

    def evaluate(self, t: float) -> Point2 | Any:
        fn = self._fn
        if fn is None:
            fx, fy = compile_expr(self.x_expr), compile_expr(self.y_expr)
            env = {name: (v.evaluate if isinstance(v, FunctionGraph) else v) for name, v in self.bindings}
            var = self.var

            def fn(t: float) -> Any:
                env[var] = t
                x, y = fx(env), fy(env)
                if is_undefined(x) or is_undefined(y):
                    return UNDEFINED
                return Point2(x, y)

            object.__setattr__(self, "_fn", fn)
        return fn(t)


@dataclass(frozen=True)
class Region2:
    relation: Relation
    bindings: tuple = ()

    def contains(self, p: Point2, abs_tol: float = DEFAULT_POLICY.abs_tol) -> Any:
        env = {name: (v.evaluate if isinstance(v, FunctionGraph) else v) for name, v in self.bindings}
        env["x"], env["y"] = p.x, p.y
        return holds(self.relation, env, abs_tol)


CURVE_TYPES = (LineLike, Circle2, ArcLike, Conic2, FunctionGraph, Polygon2, ParametricCurve)

# ------------------------------------------------------------------ vector ops


def _sub(a: Point2, b: Point2) -> tuple[float, float]:
    return (a.x - b.x, a.y - b.y)


def _dot(u: Sequence[float], v: Sequence[float]) -> float:
    return u[0] * v[0] + u[1] * v[1]


def _cross(u: Sequence[float], v: Sequence[float]) -> float:
    return u[0] * v[1] - u[1] * v[0]


def _norm(u: Sequence[float]) -> float:
    return math.hypot(u[0], u[1])


def _unit(u: Sequence[float]) -> tuple[float, float]:
    n = _norm(u)
    if n == 0:
        raise DegenerateInput("zero-length direction")
    return (u[0] / n, u[1] / n)


def _rot90(u: Sequence[float]) -> tuple[float, float]:
    return (-u[1], u[0])


def _dist(a: Point2, b: Point2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def _at(p: Point2, u: Sequence[float], t: float) -> Point2:
    return Point2(p.x + t * u[0], p.y + t * u[1])


def _angle_of(u: Sequence[float]) -> float:
    a = math.atan2(u[1], u[0])
    if a < 0:
        a += TAU
    return 0.0 if a >= TAU else a


def _scale(*pts: Point2) -> float:
    return max([1.0] + [abs(c) for p in pts for c in (p.x, p.y)])


def coincident(a: Point2, b: Point2, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    return _dist(a, b) <= policy.abs_tol


# ------------------------------------------------------------ constructors


def make_linelike(kind: str, p1: Point2, p2: Point2) -> LineLike:
    if coincident(p1, p2):
        raise DegenerateInput(f"{kind} needs two distinct points")
    return LineLike(kind, p1, p2)


def midpoint(a: Point2, b: Point2) -> Point2:
    return Point2(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))


def perpendicular_line(p: Point2, l: LineLike) -> LineLike:
    if not isinstance(l, LineLike):
        raise TypeMismatch("reference must be a line, segment, ray or vector")
    d = _rot90(l.direction)
    return LineLike("line", p, _at(p, d, 1.0))


def parallel_line(p: Point2, l: LineLike) -> LineLike:
    if not isinstance(l, LineLike):
        raise TypeMismatch("reference must be a line, segment, ray or vector")
    return LineLike("line", p, _at(p, l.direction, 1.0))


def perpendicular_bisector(a: Point2, b: Point2) -> LineLike:
    if coincident(a, b):
        raise DegenerateInput("perpendicular bisector needs two distinct points")
    m = midpoint(a, b)
    return LineLike("line", m, _at(m, _rot90(_unit(_sub(b, a))), 1.0))


def angle_bisector(a: Point2, b: Point2, c: Point2) -> LineLike:
    """Interior bisector of angle ABC, through B."""
    if coincident(a, b) or coincident(c, b):
        raise DegenerateInput("angle arm has zero length")
    ua, uc = _unit(_sub(a, b)), _unit(_sub(c, b))
    d = (ua[0] + uc[0], ua[1] + uc[1])
    if _norm(d) <= 1e-12:
        d = _rot90(ua)
    return LineLike("line", b, _at(b, _unit(d), 1.0))


def make_circle(center: Point2, radius: float) -> Circle2:
    if not (radius > 0) or not math.isfinite(radius):
        raise DegenerateInput("circle radius must be positive")
    return Circle2(center, float(radius))


def make_arc(kind: str, center: Point2, start_pt: Point2, end_pt: Point2) -> ArcLike:
    if coincident(center, start_pt) or coincident(center, end_pt):
        raise DegenerateInput("arc endpoints must differ from the centre")
    r = _dist(center, start_pt)
    s = _angle_of(_sub(start_pt, center))
    e = _angle_of(_sub(end_pt, center))
    span = (e - s) % TAU
    if span <= 1e-15:
        span = TAU
    return ArcLike(kind, center, r, s, span)


def semicircle(p1: Point2, p2: Point2) -> ArcLike:
    """Half circle on diameter p1p2, lying on the left when walking p1 -> p2."""
    if coincident(p1, p2):
        raise DegenerateInput("semicircle needs two distinct points")
    m = midpoint(p1, p2)
    return ArcLike("semicircle", m, 0.5 * _dist(p1, p2), _angle_of(_sub(p2, m)), math.pi)


def _collinear_residual(a: Point2, b: Point2, c: Point2) -> float:
    s = max(_dist(a, b), _dist(a, c), _dist(b, c))
    if s == 0:
        return 0.0
    return _cross(_sub(b, a), _sub(c, a)) / (s * s)


def circumcircle(a: Point2, b: Point2, c: Point2) -> Circle2:
    d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y))
    if abs(_collinear_residual(a, b, c)) <= 1e-12:
        raise DegenerateInput("points are collinear")
    a2, b2, c2 = a.x**2 + a.y**2, b.x**2 + b.y**2, c.x**2 + c.y**2
    ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d
    uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d
    o = Point2(ux, uy)
    return Circle2(o, _dist(o, a))


def incircle(a: Point2, b: Point2, c: Point2) -> Circle2:
    if abs(_collinear_residual(a, b, c)) <= 1e-12:
        raise DegenerateInput("points are collinear")
    la, lb, lc = _dist(b, c), _dist(a, c), _dist(a, b)
    p = la + lb + lc
    center = Point2((la * a.x + lb * b.x + lc * c.x) / p, (la * a.y + lb * b.y + lc * c.y) / p)
    area = abs(_cross(_sub(b, a), _sub(c, a))) / 2.0
    return Circle2(center, 2.0 * area / p)


TRIANGLE_CENTERS = {1: "incenter", 2: "centroid", 3: "circumcenter", 4: "orthocenter"}


def triangle_center(a: Point2, b: Point2, c: Point2, kind: int) -> Point2:
    if kind not in TRIANGLE_CENTERS:
        raise IndexOutOfRange("triangle center kind must be 1..4")
    if abs(_collinear_residual(a, b, c)) <= 1e-12:
        raise DegenerateInput("points are collinear")
    if kind == 1:
        return incircle(a, b, c).center
    if kind == 2:
        return Point2((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    o = circumcircle(a, b, c).center
    if kind == 3:
        return o
    return Point2(a.x + b.x + c.x - 2.0 * o.x, a.y + b.y + c.y - 2.0 * o.y)


def ellipse(f1: Point2, f2: Point2, p: Point2) -> Conic2:
    a = 0.5 * (_dist(p, f1) + _dist(p, f2))
    c = 0.5 * _dist(f1, f2)
    if a - c <= 1e-12 * max(1.0, a):
        raise DegenerateInput("point lies on the focal segment")
    return Conic2("ellipse", f1, f2, a)


def hyperbola(f1: Point2, f2: Point2, p: Point2) -> Conic2:
    if coincident(f1, f2):
        raise DegenerateInput("hyperbola foci must be distinct")
    a = 0.5 * abs(_dist(p, f1) - _dist(p, f2))
    c = 0.5 * _dist(f1, f2)
    if a <= 1e-12 * max(1.0, c):
        raise DegenerateInput("point lies on the perpendicular bisector of the foci")
    if c - a <= 1e-12 * max(1.0, c):
        raise DegenerateInput("point lies on the focal line outside the foci")
    return Conic2("hyperbola", f1, f2, a)


def parabola(focus: Point2, directrix: LineLike) -> Conic2:
    if not isinstance(directrix, LineLike):
        raise TypeMismatch("directrix must be a line")
    if point_line_distance(focus, LineLike("line", directrix.p1, directrix.p2)) <= 1e-12:
        raise DegenerateInput("focus lies on the directrix")
    return Conic2("parabola", focus, directrix=LineLike("line", directrix.p1, directrix.p2))


def make_polygon(vertices: Sequence[Point2]) -> Polygon2:
    if len(vertices) < 3:
        raise DegenerateInput("polygon needs at least three vertices")
    n = len(vertices)
    for i in range(n):
        if coincident(vertices[i], vertices[(i + 1) % n]):
            raise DegenerateInput("consecutive polygon vertices coincide")
    return Polygon2(tuple(vertices))


def regular_polygon(p1: Point2, p2: Point2, n: int) -> Polygon2:
    if n < 3:
        raise DegenerateInput("regular polygon needs n >= 3")
    if coincident(p1, p2):
        raise DegenerateInput("regular polygon needs two distinct points")
    edge = _sub(p2, p1)
    verts = [p1, p2]
    cur = p2
    for k in range(1, n - 1):
        th = TAU * k / n
        c, s = math.cos(th), math.sin(th)
        step = (edge[0] * c - edge[1] * s, edge[0] * s + edge[1] * c)
        cur = Point2(cur.x + step[0], cur.y + step[1])
        verts.append(cur)
    return Polygon2(tuple(verts))


def best_fit_line(points: Sequence[Point2]) -> LineLike:
    """Least-squares regression y on x (vertical fallback when all x coincide)."""
    if len(points) < 2:
        raise DegenerateInput("best-fit line needs at least two points")
    n = len(points)
    mx = sum(p.x for p in points) / n
    my = sum(p.y for p in points) / n
    sxx = sum((p.x - mx) ** 2 for p in points)
    sxy = sum((p.x - mx) * (p.y - my) for p in points)
    if sxx <= 1e-24:
        syy = sum((p.y - my) ** 2 for p in points)
        if syy <= 1e-24:
            raise DegenerateInput("all points coincide")
        return LineLike("line", Point2(mx, my), Point2(mx, my + 1.0))
    slope = sxy / sxx
    return LineLike("line", Point2(mx, my), Point2(mx + 1.0, my + slope))


# ----------------------------------------------------------- conic algebra


def center_of(obj: Any) -> Point2:
    if isinstance(obj, (Circle2, ArcLike)):
        return obj.center
    if isinstance(obj, Conic2):
        if obj.kind == "parabola":
            raise PreconditionFailed("a parabola has no centre")
        return midpoint(obj.focus1, obj.focus2)
    if isinstance(obj, Polygon2):
        n = len(obj.vertices)
        return Point2(sum(p.x for p in obj.vertices) / n, sum(p.y for p in obj.vertices) / n)
    raise TypeMismatch("object has no centre")


def _conic_frame(c: Conic2) -> tuple[Point2, tuple[float, float], float, float]:
    """Centre, major-axis unit vector, a, b for ellipse/hyperbola."""
    m = midpoint(c.focus1, c.focus2)
    d = _sub(c.focus2, c.focus1)
    u = _unit(d) if _norm(d) > 0 else (1.0, 0.0)
    ce = 0.5 * _norm(d)
    if c.kind == "ellipse":
        b = math.sqrt(max(c.a * c.a - ce * ce, 0.0))
    else:
        b = math.sqrt(max(ce * ce - c.a * c.a, 0.0))
    return m, u, c.a, b


def _parabola_frame(c: Conic2) -> tuple[Point2, tuple[float, float], tuple[float, float], float]:
    """Vertex, axis direction (towards focus), directrix direction, focal length."""
    d = c.directrix
    u = d.direction
    f = c.focus1
    t = _dot(_sub(f, d.p1), u)
    foot = _at(d.p1, u, t)
    axis = _sub(f, foot)
    p = _norm(axis)
    n = (axis[0] / p, axis[1] / p)
    vertex = Point2(foot.x + 0.5 * axis[0], foot.y + 0.5 * axis[1])
    return vertex, n, u, 0.5 * p


def conic_coefficients(obj: Any) -> tuple[float, float, float, float, float, float]:
    """(A, B, C, D, E, F) with A x^2 + B xy + C y^2 + D x + E y + F = 0."""
    if isinstance(obj, (Circle2, ArcLike)):
        cx, cy, r = obj.center.x, obj.center.y, obj.radius
        return (1.0, 0.0, 1.0, -2.0 * cx, -2.0 * cy, cx * cx + cy * cy - r * r)
    if not isinstance(obj, Conic2):
        raise TypeMismatch("not a conic")
    if obj.kind == "parabola":
        vertex, n, u, fl = _parabola_frame(obj)
        f = obj.focus1
        # |p - F|^2 - ((p - q) . n)^2 with q the directrix foot
        q = Point2(vertex.x - fl * n[0], vertex.y - fl * n[1])
        nx, ny = n
        k = nx * q.x + ny * q.y
        return (
            1.0 - nx * nx,
            -2.0 * nx * ny,
            1.0 - ny * ny,
            -2.0 * f.x + 2.0 * k * nx,
            -2.0 * f.y + 2.0 * k * ny,
            f.x * f.x + f.y * f.y - k * k,
        )
    m, u, a, b = _conic_frame(obj)
    alpha = 1.0 / (a * a)
    beta = (1.0 if obj.kind == "ellipse" else -1.0) / (b * b)
    ux, uy = u
    a11 = alpha * ux * ux + beta * uy * uy
    a12 = (alpha - beta) * ux * uy
    a22 = alpha * uy * uy + beta * ux * ux
    return (
        a11,
        2.0 * a12,
        a22,
        -2.0 * (a11 * m.x + a12 * m.y),
        -2.0 * (a12 * m.x + a22 * m.y),
        a11 * m.x * m.x + 2.0 * a12 * m.x * m.y + a22 * m.y * m.y - 1.0,
    )


def _conic_eval(coef: Sequence[float], x: float, y: float) -> float:
    A, B, C, D, E, F = coef
    return A * x * x + B * x * y + C * y * y + D * x + E * y + F


def conic_point(obj: Any, s: float) -> Point2:
    """Point at the natural parameter of a circle-like or conic curve."""
    if isinstance(obj, (Circle2, ArcLike)):
        return Point2(obj.center.x + obj.radius * math.cos(s), obj.center.y + obj.radius * math.sin(s))
    if obj.kind == "ellipse":
        m, u, a, b = _conic_frame(obj)
        v = _rot90(u)
        X, Y = a * math.cos(s), b * math.sin(s)
    elif obj.kind == "hyperbola":
        # s in (-pi/2, pi/2) -> right branch, (pi/2, 3pi/2) -> left branch
        m, u, a, b = _conic_frame(obj)
        v = _rot90(u)
        X, Y = a / math.cos(s), b * math.tan(s)
    else:
        vertex, n, u, fl = _parabola_frame(obj)
        return Point2(vertex.x + s * u[0] + (s * s / (4 * fl)) * n[0], vertex.y + s * u[1] + (s * s / (4 * fl)) * n[1])
    return Point2(m.x + X * u[0] + Y * v[0], m.y + X * u[1] + Y * v[1])


# --------------------------------------------------------------- parameters


def _in_span(arc: ArcLike, angle: float, tol: float = 1e-9) -> bool:
    if arc.span >= TAU:
        return True
    rel = (angle - arc.start) % TAU
    return rel <= arc.span + tol or rel >= TAU - tol


def _line_bounds_ok(l: LineLike, t: float) -> bool:
    eps = 1e-9 * max(1.0, l.length)
    if l.kind == "line":
        return True
    if l.kind == "ray":
        return t >= -eps
    return -eps <= t <= l.length + eps


def param_along(obj: Any, p: Point2) -> float:
    """Natural parameter of ``p`` (assumed on ``obj``) used for ordering."""
    if isinstance(obj, LineLike):
        return _dot(_sub(p, obj.p1), obj.direction)
    if isinstance(obj, (Circle2, ArcLike)):
        return _angle_of(_sub(p, obj.center))
    if isinstance(obj, Conic2):
        if obj.kind == "parabola":
            vertex, n, u, fl = _parabola_frame(obj)
            return _dot(_sub(p, vertex), u)
        return _angle_of(_sub(p, center_of(obj)))
    if isinstance(obj, FunctionGraph):
        return p.x
    if isinstance(obj, Polygon2):
        acc = 0.0
        verts = obj.vertices
        best, best_d = 0.0, math.inf
        for i, a in enumerate(verts):
            b = verts[(i + 1) % len(verts)]
            seg = LineLike("segment", a, b)
            t = min(max(_dot(_sub(p, a), seg.direction), 0.0), seg.length)
            d = _dist(_at(a, seg.direction, t), p)
            if d < best_d - 1e-12:
                best, best_d = acc + t, d
            acc += seg.length
        return best
    if isinstance(obj, ParametricCurve):
        return _curve_param(obj, p)
    raise TypeMismatch("object has no natural parameter")


def _curve_param(c: ParametricCurve, p: Point2) -> float:
    def d(t: float) -> float:
        q = c.evaluate(t)
        return math.inf if is_undefined(q) else _dist(q, p)

    n = 2001
    ts = [c.t_min + (c.t_max - c.t_min) * i / (n - 1) for i in range(n)]
    k = min(range(n), key=lambda i: d(ts[i]))
    return golden_min(d, ts[max(k - 1, 0)], ts[min(k + 1, n - 1)])


# ------------------------------------------------------------- intersections


def _check_curve(obj: Any, which: str) -> None:
    if not isinstance(obj, CURVE_TYPES):
        raise TypeMismatch(
            f"{which} must be a line, segment, ray, circle, conic or function (not a point or number)", arg=which
        )


def intersect(a: Any, b: Any, index: int | None = None) -> Any:
    """All intersection points of two curves, ordered along ``a``.

    Returns the ``index``-th point (1-based) or the ordered list.
    """
    _check_curve(a, "obj1")
    _check_curve(b, "obj2")
    pts = _intersect_points(a, b)
    pts = _dedupe(pts)
    if not pts:
        raise PreconditionFailed("objects do not intersect")
    pts.sort(key=lambda p: (param_along(a, p), p.x, p.y))
    if index is None:
        return pts
    if index < 1 or index > len(pts):
        raise IndexOutOfRange(f"intersection index {index} out of range (1..{len(pts)})", arg="index")
    return pts[index - 1]


def _dedupe(pts: Iterable[Point2]) -> list[Point2]:
    out: list[Point2] = []
    for p in pts:
        if all(_dist(p, q) > 1e-9 * _scale(p, q) for q in out):
            out.append(p)
    return out


def _intersect_points(a: Any, b: Any) -> list[Point2]:
    if isinstance(a, Polygon2):
        return [p for e in polygon_edges(a) for p in _intersect_points(e, b)]
    if isinstance(b, Polygon2):
        return [p for e in polygon_edges(b) for p in _intersect_points(a, e)]
    if isinstance(a, LineLike) and isinstance(b, LineLike):
        return _line_line(a, b)
    if isinstance(a, LineLike) and isinstance(b, (Circle2, ArcLike)):
        return _line_circle(a, b)
    if isinstance(b, LineLike) and isinstance(a, (Circle2, ArcLike)):
        return _line_circle(b, a)
    if isinstance(a, LineLike) and isinstance(b, Conic2):
        return _line_conic(a, b)
    if isinstance(b, LineLike) and isinstance(a, Conic2):
        return _line_conic(b, a)
    if isinstance(a, (Circle2, ArcLike)) and isinstance(b, (Circle2, ArcLike)):
        return _circle_circle(a, b)
    if isinstance(a, (Circle2, ArcLike, Conic2)) and isinstance(b, (Circle2, ArcLike, Conic2)):
        return _conic_conic(a, b)
    if isinstance(a, FunctionGraph) or isinstance(b, FunctionGraph):
        f, other = (a, b) if isinstance(a, FunctionGraph) else (b, a)
        return _function_intersections(f, other)
    if isinstance(a, ParametricCurve) or isinstance(b, ParametricCurve):
        c, other = (a, b) if isinstance(a, ParametricCurve) else (b, a)
        return _curve_intersections(c, other)
    raise TypeMismatch("unsupported intersection pair")


def polygon_edges(poly: Polygon2) -> list[LineLike]:
    v = poly.vertices
    return [LineLike("segment", v[i], v[(i + 1) % len(v)]) for i in range(len(v))]


def _line_line(a: LineLike, b: LineLike) -> list[Point2]:
    ua, ub = a.direction, b.direction
    den = _cross(ua, ub)
    if abs(den) <= 1e-12:
        raise PreconditionFailed("lines are parallel and do not intersect in a single point")
    w = _sub(b.p1, a.p1)
    ta = _cross(w, ub) / den
    tb = _cross(w, ua) / den
    if not (_line_bounds_ok(a, ta) and _line_bounds_ok(b, tb)):
        return []
    return [_at(a.p1, ua, ta)]


def _line_circle(l: LineLike, c: Circle2 | ArcLike) -> list[Point2]:
    u = l.direction
    t0 = _dot(_sub(c.center, l.p1), u)
    foot = _at(l.p1, u, t0)
    d = _dist(foot, c.center)
    r = c.radius
    if abs(d - r) <= 1e-12 * max(1.0, r):
        ts = [t0]
    elif d > r:
        return []
    else:
        h = math.sqrt(r * r - d * d)
        ts = [t0 - h, t0 + h]
    out = []
    for t in ts:
        p = _at(l.p1, u, t)
        if not _line_bounds_ok(l, t):
            continue
        if isinstance(c, ArcLike) and not _in_span(c, _angle_of(_sub(p, c.center))):
            continue
        out.append(p)
    return out


def _quadratic_roots(qa: float, qb: float, qc: float) -> list[float]:
    scale = max(abs(qa), abs(qb), abs(qc), 1e-300)
    if abs(qa) <= 1e-14 * scale:
        if abs(qb) <= 1e-14 * scale:
            return []
        return [-qc / qb]
    disc = qb * qb - 4.0 * qa * qc
    if abs(disc) <= 1e-12 * (qb * qb + abs(4.0 * qa * qc)):
        return [-qb / (2.0 * qa)]
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (qb + math.copysign(sq, qb))
    r1 = q / qa
    r2 = qc / q if q != 0 else -qb / qa - r1
    return sorted([r1, r2])


def _line_conic(l: LineLike, c: Conic2) -> list[Point2]:
    A, B, C, D, E, F = conic_coefficients(c)
    u = l.direction
    p = l.p1
    qa = A * u[0] ** 2 + B * u[0] * u[1] + C * u[1] ** 2
    qb = 2 * A * p.x * u[0] + B * (p.x * u[1] + p.y * u[0]) + 2 * C * p.y * u[1] + D * u[0] + E * u[1]
    qc = _conic_eval((A, B, C, D, E, F), p.x, p.y)
    return [_at(p, u, t) for t in _quadratic_roots(qa, qb, qc) if _line_bounds_ok(l, t)]


def _circle_circle(a: Circle2 | ArcLike, b: Circle2 | ArcLike) -> list[Point2]:
    d = _dist(a.center, b.center)
    r1, r2 = a.radius, b.radius
    scale = max(1.0, r1, r2)
    if d <= 1e-12 * scale:
        if abs(r1 - r2) <= 1e-12 * scale:
            raise PreconditionFailed("circles coincide")
        return []
    if d > r1 + r2 + 1e-12 * scale or d < abs(r1 - r2) - 1e-12 * scale:
        return []
    x = (d * d + r1 * r1 - r2 * r2) / (2 * d)
    h2 = r1 * r1 - x * x
    u = _unit(_sub(b.center, a.center))
    base = _at(a.center, u, x)
    if h2 <= (1e-12 * scale) ** 2 * 4 or abs(d - r1 - r2) <= 1e-12 * scale or abs(d - abs(r1 - r2)) <= 1e-12 * scale:
        pts = [base]
    else:
        h = math.sqrt(h2)
        v = _rot90(u)
        pts = [_at(base, v, h), _at(base, v, -h)]
    out = []
    for p in pts:
        if isinstance(a, ArcLike) and not _in_span(a, _angle_of(_sub(p, a.center))):
            continue
        if isinstance(b, ArcLike) and not _in_span(b, _angle_of(_sub(p, b.center))):
            continue
        out.append(p)
    return out


def _param_ranges(obj: Any) -> list[tuple[float, float]]:
    if isinstance(obj, ArcLike):
        return [(obj.start, obj.start + obj.span)]
    if isinstance(obj, Circle2) or (isinstance(obj, Conic2) and obj.kind == "ellipse"):
        return [(0.0, TAU)]
    if obj.kind == "hyperbola":
        lim = math.pi / 2 - 1e-6
        return [(-lim, lim), (math.pi - lim, math.pi + lim)]
    return [(-1e3, 1e3)]


def _conic_conic(a: Any, b: Any) -> list[Point2]:
    # parameterize the bounded operand when there is one
    if isinstance(a, Conic2) and a.kind != "ellipse" and (isinstance(b, (Circle2, ArcLike)) or b.kind == "ellipse"):
        a, b = b, a
    coef = conic_coefficients(b)
    norm = max(abs(c) for c in coef[:3]) or 1.0

    def g(s: float) -> float:
        p = conic_point(a, s)
        v = _conic_eval(coef, p.x, p.y) / norm
        return v if math.isfinite(v) else UNDEFINED

    out: list[Point2] = []
    for lo, hi in _param_ranges(a):
        for s in find_roots(g, lambda s: 0.0, lo, hi, 7201):
            p = conic_point(a, s)
            if isinstance(b, ArcLike) and not _in_span(b, _angle_of(_sub(p, b.center))):
                continue
            out.append(p)
    return out


def _function_range(f: FunctionGraph, lo: float | None = None, hi: float | None = None) -> tuple[float, float]:
    flo, fhi = f.domain if f.domain is not None else DEFAULT_FN_RANGE
    if lo is not None:
        flo = max(flo, lo)
    if hi is not None:
        fhi = min(fhi, hi)
    return flo, fhi


def _roots_on(g: Callable[[float], Any], lo: float, hi: float) -> list[float]:
    if not lo < hi:
        return []
    span = hi - lo
    n = int(min(DEFAULT_FN_GRID, max(2001, span * 50 + 1)))
    return find_roots(g, lambda x: 0.0, lo, hi, n)


def _function_intersections(f: FunctionGraph, other: Any) -> list[Point2]:
    if isinstance(other, LineLike):
        u = other.direction
        if abs(u[0]) <= 1e-12:
            x0 = other.p1.x
            y0 = f.evaluate(x0)
            if is_undefined(y0):
                return []
            t = _dot(_sub(Point2(x0, y0), other.p1), u)
            return [Point2(x0, y0)] if _line_bounds_ok(other, t) else []
        slope = u[1] / u[0]
        lo = hi = None
        if other.kind == "segment":
            lo, hi = sorted((other.p1.x, other.p2.x))
        elif other.kind == "ray":
            lo, hi = (other.p1.x, None) if u[0] > 0 else (None, other.p1.x)

        def g(x: float) -> Any:
            y = f.evaluate(x)
            return UNDEFINED if is_undefined(y) else y - (other.p1.y + slope * (x - other.p1.x))

        lo, hi = _function_range(f, lo, hi)
        pts = [Point2(x, f.evaluate(x)) for x in _roots_on(g, lo, hi)]
        return [p for p in pts if _line_bounds_ok(other, _dot(_sub(p, other.p1), u))]
    if isinstance(other, FunctionGraph):

        def g(x: float) -> Any:
            y1, y2 = f.evaluate(x), other.evaluate(x)
            return UNDEFINED if is_undefined(y1) or is_undefined(y2) else y1 - y2

        lo, hi = _function_range(f)
        lo, hi = _function_range(other, lo, hi)
        return [Point2(x, f.evaluate(x)) for x in _roots_on(g, lo, hi)]
    if isinstance(other, (Circle2, ArcLike, Conic2)):
        coef = conic_coefficients(other)
        norm = max(abs(c) for c in coef[:3]) or 1.0
        lo = hi = None
        if isinstance(other, (Circle2, ArcLike)):
            lo, hi = other.center.x - other.radius, other.center.x + other.radius
        elif other.kind == "ellipse":
            m, u, a, b = _conic_frame(other)
            lo, hi = m.x - a, m.x + a

        def g(x: float) -> Any:
            y = f.evaluate(x)
            return UNDEFINED if is_undefined(y) else _conic_eval(coef, x, y) / norm

        lo, hi = _function_range(f, lo, hi)
        pts = [Point2(x, f.evaluate(x)) for x in _roots_on(g, lo, hi)]
        if isinstance(other, ArcLike):
            pts = [p for p in pts if _in_span(other, _angle_of(_sub(p, other.center)))]
        return pts
    raise TypeMismatch("unsupported intersection pair")


def _curve_intersections(c: ParametricCurve, other: Any) -> list[Point2]:
    if isinstance(other, LineLike):
        u = other.direction
        n = _rot90(u)

        def g(t: float) -> Any:
            p = c.evaluate(t)
            return UNDEFINED if is_undefined(p) else _dot(_sub(p, other.p1), n)

        pts = [c.evaluate(t) for t in find_roots(g, lambda t: 0.0, c.t_min, c.t_max, 20001)]
        return [p for p in pts if _line_bounds_ok(other, _dot(_sub(p, other.p1), u))]
    if isinstance(other, (Circle2, ArcLike, Conic2)):
        coef = conic_coefficients(other)
        norm = max(abs(x) for x in coef[:3]) or 1.0

        def g(t: float) -> Any:
            p = c.evaluate(t)
            return UNDEFINED if is_undefined(p) else _conic_eval(coef, p.x, p.y) / norm

        return [c.evaluate(t) for t in find_roots(g, lambda t: 0.0, c.t_min, c.t_max, 20001)]
    raise TypeMismatch("unsupported intersection pair")


# -------------------------------------------------------------------- tangents


def tangents_from_point(p: Point2, conic: Any) -> list[LineLike]:
    """Tangent lines through ``p``: two from outside, one when ``p`` is on the curve."""
    if isinstance(conic, (Circle2, ArcLike)):
        c, r = conic.center, conic.radius
        d = _dist(p, c)
        if abs(d - r) <= 1e-9 * max(1.0, r):
            u = _rot90(_unit(_sub(p, c)))
            return [LineLike("line", p, _at(p, u, 1.0))]
        if d < r:
            raise PreconditionFailed("point lies inside the circle")
        # tangent points on the circle at angle +-acos(r/d) from the centre->point ray
        base = _angle_of(_sub(p, c))
        phi = math.acos(r / d)
        touch = [Point2(c.x + r * math.cos(base + s * phi), c.y + r * math.sin(base + s * phi)) for s in (-1, 1)]
        touch.sort(key=lambda q: _angle_of(_sub(q, c)))
        return [LineLike("line", p, q) for q in touch]
    if not isinstance(conic, Conic2):
        raise TypeMismatch("tangent target must be a circle or conic", arg="conic")
    A, B, C, D, E, F = conic_coefficients(conic)
    scale = max(abs(A), abs(B), abs(C)) * max(1.0, _scale(p)) ** 2
    val = _conic_eval((A, B, C, D, E, F), p.x, p.y)
    # polar line of p: (A x0 + B/2 y0 + D/2) x + (B/2 x0 + C y0 + E/2) y + (D/2 x0 + E/2 y0 + F) = 0
    la = A * p.x + 0.5 * B * p.y + 0.5 * D
    lb = 0.5 * B * p.x + C * p.y + 0.5 * E
    lc = 0.5 * D * p.x + 0.5 * E * p.y + F
    if math.hypot(la, lb) == 0:
        raise DegenerateInput("point is the centre of the conic")
    if abs(val) <= 1e-9 * scale:
        dirn = _unit((-lb, la))
        return [LineLike("line", p, _at(p, dirn, 1.0))]
    nrm = la * la + lb * lb
    q0 = Point2(-la * lc / nrm, -lb * lc / nrm)
    polar = LineLike("line", q0, _at(q0, _unit((-lb, la)), 1.0))
    touch = [q for q in _line_conic(polar, conic) if _dist(q, p) > 1e-12]
    if not touch:
        raise PreconditionFailed("no tangent from a point inside the conic")
    touch.sort(key=lambda q: param_along(conic, q))
    return [LineLike("line", p, q) for q in touch]


def common_tangents(c1: Circle2, c2: Circle2) -> list[LineLike]:
    """Common tangent lines of two circles ordered by normal angle (up to four)."""
    d = _sub(c2.center, c1.center)
    D = _norm(d)
    if D <= 1e-12 * max(1.0, c1.radius, c2.radius):
        raise PreconditionFailed("concentric circles have no common tangent")
    lines: list[tuple[float, LineLike]] = []
    seen: list[tuple[float, float, float]] = []
    for s2 in (1.0, -1.0):
        delta = s2 * c2.radius - c1.radius
        ratio = delta / D
        if abs(ratio) > 1.0 + 1e-12:
            continue
        ratio = max(-1.0, min(1.0, ratio))
        h0 = math.sqrt(max(0.0, 1.0 - ratio * ratio))
        for hs in (1.0, -1.0):
            h = hs * h0
            n = (ratio * d[0] / D - h * d[1] / D, ratio * d[1] / D + h * d[0] / D)
            k = _dot(n, (c1.center.x, c1.center.y)) - c1.radius
            key = (n[0], n[1], k)
            if any(abs(key[0] - o[0]) + abs(key[1] - o[1]) + abs(key[2] - o[2]) <= 1e-9 * max(1.0, abs(k)) for o in seen):
                continue
            seen.append(key)
            t1 = Point2(c1.center.x - c1.radius * n[0], c1.center.y - c1.radius * n[1])
            lines.append((_angle_of(n), LineLike("line", t1, _at(t1, _rot90(n), 1.0))))
    if not lines:
        raise PreconditionFailed("circles have no common tangent")
    lines.sort(key=lambda item: item[0])
    return [l for _, l in lines]


# ----------------------------------------------------------------- projection


def point_line_distance(p: Point2, l: LineLike) -> float:
    u = l.direction
    return abs(_cross(u, _sub(p, l.p1)))


def closest_point(obj: Any, p: Point2) -> Point2:
    if isinstance(obj, Point2):
        return obj
    if isinstance(obj, LineLike):
        u = obj.direction
        t = _dot(_sub(p, obj.p1), u)
        if obj.kind == "ray":
            t = max(t, 0.0)
        elif obj.kind in ("segment", "vector"):
            t = min(max(t, 0.0), obj.length)
        return _at(obj.p1, u, t)
    if isinstance(obj, Circle2):
        if coincident(p, obj.center):
            return Point2(obj.center.x + obj.radius, obj.center.y)
        u = _unit(_sub(p, obj.center))
        return _at(obj.center, u, obj.radius)
    if isinstance(obj, ArcLike):
        ang = _angle_of(_sub(p, obj.center)) if not coincident(p, obj.center) else obj.start
        if _in_span(obj, ang):
            return conic_point(obj, ang)
        ends = [conic_point(obj, obj.start), conic_point(obj, obj.end)]
        return min(ends, key=lambda q: _dist(q, p))
    if isinstance(obj, Polygon2):
        return min((closest_point(e, p) for e in polygon_edges(obj)), key=lambda q: _dist(q, p))
    if isinstance(obj, Conic2):
        best: Point2 | None = None
        for lo, hi in _param_ranges(obj):
            n = 3601
            ss = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
            dist = lambda s: _dist(conic_point(obj, s), p)  # noqa: E731
            k = min(range(n), key=lambda i: dist(ss[i]))
            s = golden_min(dist, ss[max(k - 1, 0)], ss[min(k + 1, n - 1)])
            q = conic_point(obj, s)
            if best is None or _dist(q, p) < _dist(best, p):
                best = q
        return best
    if isinstance(obj, FunctionGraph):
        lo, hi = _function_range(obj, p.x - 1e3, p.x + 1e3)

        def dist(x: float) -> float:
            y = obj.evaluate(x)
            return math.inf if is_undefined(y) else math.hypot(x - p.x, y - p.y)

        n = 20001
        xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
        k = min(range(n), key=lambda i: dist(xs[i]))
        x = golden_min(dist, xs[max(k - 1, 0)], xs[min(k + 1, n - 1)])
        y = obj.evaluate(x)
        if is_undefined(y):
            raise PreconditionFailed("function undefined near the point")
        return Point2(x, y)
    if isinstance(obj, ParametricCurve):
        t = _curve_param(obj, p)
        return obj.evaluate(t)
    raise TypeMismatch("cannot project onto this object")


def point_on(obj: Any, t: float = 0.5) -> Point2:
    """Point at fractional position ``t`` along a path."""
    if isinstance(obj, LineLike):
        return Point2(obj.p1.x + t * (obj.p2.x - obj.p1.x), obj.p1.y + t * (obj.p2.y - obj.p1.y))
    if isinstance(obj, Circle2):
        return conic_point(obj, TAU * t)
    if isinstance(obj, ArcLike):
        return conic_point(obj, obj.start + obj.span * t)
    if isinstance(obj, Conic2):
        if obj.kind == "ellipse":
            return conic_point(obj, TAU * t)
        if obj.kind == "hyperbola":
            return conic_point(obj, (t - 0.5) * (math.pi - 1e-3))
        return conic_point(obj, t)
    if isinstance(obj, Polygon2):
        edges = polygon_edges(obj)
        total = sum(e.length for e in edges)
        target = (t % 1.0) * total
        for e in edges:
            if target <= e.length:
                return _at(e.p1, e.direction, target)
            target -= e.length
        return edges[-1].p2
    if isinstance(obj, FunctionGraph):
        y = obj.evaluate(t)
        if is_undefined(y):
            raise PreconditionFailed("function undefined at the requested position")
        return Point2(t, y)
    if isinstance(obj, ParametricCurve):
        p = obj.evaluate(obj.t_min + (obj.t_max - obj.t_min) * t)
        if is_undefined(p):
            raise PreconditionFailed("curve undefined at the requested position")
        return p
    raise TypeMismatch("object is not a path", arg="path")


# ------------------------------------------------------------------- measures


def angle_measure(a: Point2, b: Point2, c: Point2) -> float:
    """CCW sweep from ray b->a to ray b->c, in degrees within [0, 360)."""
    if coincident(a, b) or coincident(c, b):
        raise DegenerateInput("angle arm has zero length")
    u, v = _sub(a, b), _sub(c, b)
    ang = math.degrees(math.atan2(_cross(u, v), _dot(u, v))) % 360.0
    return 0.0 if ang >= 360.0 else ang


def distance(a: Any, b: Any) -> float:
    """Shortest distance between two objects (symmetric)."""
    if isinstance(b, Point2) and not isinstance(a, Point2):
        a, b = b, a
    if isinstance(a, Point2):
        if isinstance(b, Point2):
            return _dist(a, b)
        if isinstance(b, LineLike):
            if b.kind == "line":
                return point_line_distance(a, b)
            return _dist(a, closest_point(b, a))
        if isinstance(b, Circle2):
            return abs(_dist(a, b.center) - b.radius)
        if isinstance(b, (ArcLike, Polygon2, Conic2, FunctionGraph, ParametricCurve)):
            return _dist(a, closest_point(b, a))
        raise TypeMismatch("unsupported distance pair")
    if isinstance(a, LineLike) and isinstance(b, LineLike):
        if a.kind == "line" and b.kind == "line":
            if abs(_cross(a.direction, b.direction)) <= 1e-12:
                return point_line_distance(b.p1, a)
            return 0.0
        try:
            if _line_line(a, b):
                return 0.0
        except PreconditionFailed:
            pass
        cands = []
        for l, other in ((a, b), (b, a)):
            ends = [l.p1] if l.kind == "ray" else [l.p1, l.p2] if l.kind != "line" else []
            cands += [distance(e, other) for e in ends]
        return min(cands) if cands else 0.0
    if isinstance(a, Circle2) and isinstance(b, Circle2):
        d = _dist(a.center, b.center)
        if d >= a.radius + b.radius:
            return d - a.radius - b.radius
        if d <= abs(a.radius - b.radius):
            return abs(a.radius - b.radius) - d
        return 0.0
    if isinstance(a, (LineLike,)) and isinstance(b, Circle2) or isinstance(b, LineLike) and isinstance(a, Circle2):
        l, c = (a, b) if isinstance(a, LineLike) else (b, a)
        q = closest_point(l, c.center)
        return max(0.0, _dist(q, c.center) - c.radius) if _dist(q, c.center) >= c.radius else 0.0
    raise TypeMismatch("unsupported distance pair")


def polygon_signed_area(poly: Polygon2) -> float:
    v = poly.vertices
    return 0.5 * sum(v[i].x * v[(i + 1) % len(v)].y - v[(i + 1) % len(v)].x * v[i].y for i in range(len(v)))


def _ellipse_perimeter(a: float, b: float) -> float:
    return 4.0 * integrate(lambda t: math.sqrt((a * math.sin(t)) ** 2 + (b * math.cos(t)) ** 2), 0.0, math.pi / 2)


def curve_length(c: ParametricCurve) -> float:
    def speed(t: float) -> Any:
        h = 1e-6 * max(1.0, abs(t))
        p1, p0 = c.evaluate(t + h), c.evaluate(t - h)
        if is_undefined(p1) or is_undefined(p0):
            return UNDEFINED
        return _dist(p1, p0) / (2 * h)

    return integrate(speed, c.t_min, c.t_max, tol=1e-7)


def measure(kind: str, obj: Any) -> Any:
    """Composite measurements.  Returns ``UNDEFINED`` where the value does not exist."""
    if kind == "length":
        if isinstance(obj, LineLike):
            if obj.kind == "line":
                raise TypeMismatch("an infinite line has no length")
            if obj.kind == "ray":
                raise TypeMismatch("a ray has no length")
            return obj.length
        if isinstance(obj, ArcLike):
            return obj.radius * obj.span
        if isinstance(obj, Circle2):
            return TAU * obj.radius
        if isinstance(obj, Polygon2):
            return measure("perimeter", obj)
        if isinstance(obj, ParametricCurve):
            return curve_length(obj)
        raise TypeMismatch("object has no length")
    if kind == "perimeter":
        if isinstance(obj, Polygon2):
            return sum(e.length for e in polygon_edges(obj))
        if isinstance(obj, Circle2):
            return TAU * obj.radius
        if isinstance(obj, ArcLike):
            arc = obj.radius * obj.span
            if obj.kind == "sector":
                return arc + (0.0 if obj.span >= TAU else 2 * obj.radius)
            if obj.kind == "semicircle":
                return arc + 2 * obj.radius
            return arc
        if isinstance(obj, Conic2) and obj.kind == "ellipse":
            m, u, a, b = _conic_frame(obj)
            return _ellipse_perimeter(a, b)
        raise TypeMismatch("object has no perimeter")
    if kind == "area":
        if isinstance(obj, Polygon2):
            return abs(polygon_signed_area(obj))
        if isinstance(obj, Circle2):
            return math.pi * obj.radius**2
        if isinstance(obj, ArcLike):
            r, th = obj.radius, obj.span
            if obj.kind == "sector":
                return 0.5 * r * r * th
            # circular segment between the arc and its chord
            return 0.5 * r * r * (th - math.sin(th))
        if isinstance(obj, Conic2) and obj.kind == "ellipse":
            m, u, a, b = _conic_frame(obj)
            return math.pi * a * b
        raise TypeMismatch("object has no area")
    if kind == "slope":
        if not isinstance(obj, LineLike):
            raise TypeMismatch("slope needs a line, segment, ray or vector")
        dx, dy = _sub(obj.p2, obj.p1)
        if abs(dx) <= 1e-12 * _norm((dx, dy)):
            return UNDEFINED
        return dy / dx
    if kind == "radius":
        if isinstance(obj, (Circle2, ArcLike)):
            return obj.radius
        raise TypeMismatch("object has no radius")
    if kind in ("coord_x", "coord_y"):
        if isinstance(obj, Point2):
            return obj.x if kind == "coord_x" else obj.y
        if isinstance(obj, LineLike) and obj.kind == "vector":
            dx, dy = _sub(obj.p2, obj.p1)
            return dx if kind == "coord_x" else dy
        raise TypeMismatch("coordinates need a point")
    raise ValueError(f"unknown measure {kind!r}")


# ------------------------------------------------------------------ predicates


def _linelike_arg(obj: Any) -> LineLike:
    if not isinstance(obj, LineLike):
        raise TypeMismatch("expected a line, segment, ray or vector")
    return obj


def are_parallel(l1: Any, l2: Any, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    return policy.near_zero(_cross(_linelike_arg(l1).direction, _linelike_arg(l2).direction))


def are_perpendicular(l1: Any, l2: Any, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    return policy.near_zero(_dot(_linelike_arg(l1).direction, _linelike_arg(l2).direction))


def are_collinear(a: Point2, b: Point2, c: Point2, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    return policy.near_zero(_collinear_residual(a, b, c))


def are_concyclic(a: Point2, b: Point2, c: Point2, d: Point2, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    circ = circumcircle(a, b, c)
    return tol_pass(_dist(d, circ.center), circ.radius, policy)


def is_tangent(a: Any, b: Any, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    if isinstance(b, LineLike) and not isinstance(a, LineLike):
        a, b = b, a
    if isinstance(a, LineLike):
        line = LineLike("line", a.p1, a.p2)
        if isinstance(b, (Circle2, ArcLike)):
            return tol_pass(point_line_distance(b.center, line), b.radius, policy)
        if isinstance(b, Conic2):
            if b.kind == "parabola":
                m = reflect_point_line(b.focus1, line)
                return policy.near_zero(point_line_distance(m, b.directrix) / max(1.0, _dist(b.focus1, m)))
            _, _, _, bb = _conic_frame(b)
            prod = point_line_distance(b.focus1, line) * point_line_distance(b.focus2, line)
            if b.kind == "hyperbola" and _cross(_sub(b.focus1, line.p1), line.direction) * _cross(_sub(b.focus2, line.p1), line.direction) > 0:
                return False
            return tol_pass(prod, bb * bb, policy)
        if isinstance(b, FunctionGraph):
            return _function_tangent(b, line, policy)
        raise TypeMismatch("tangency needs a line and a circle, conic or function")
    if isinstance(a, (Circle2, ArcLike)) and isinstance(b, (Circle2, ArcLike)):
        d = _dist(a.center, b.center)
        return tol_pass(d, a.radius + b.radius, policy) or tol_pass(d, abs(a.radius - b.radius), policy)
    raise TypeMismatch("tangency needs a line and a curve, or two circles")


def _function_tangent(f: FunctionGraph, line: LineLike, policy: TolerancePolicy) -> bool:
    u = line.direction
    if abs(u[0]) <= 1e-12:
        return False
    slope = u[1] / u[0]

    def gap(x: float) -> Any:
        y = f.evaluate(x)
        return UNDEFINED if is_undefined(y) else y - (line.p1.y + slope * (x - line.p1.x))

    lo, hi = _function_range(f)
    for x in _roots_on(gap, lo, hi):
        if tol_pass(derivative(f.evaluate, x), slope, policy):
            return True
    return False


def _same_point(p: Point2, q: Point2, policy: TolerancePolicy) -> bool:
    return tol_pass(p.x, q.x, policy) and tol_pass(p.y, q.y, policy)


def are_equal(a: Any, b: Any, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """Geometric identity of two objects of the same kind."""
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return tol_pass(a, b, policy)
    if type(a) is not type(b):
        return False
    if isinstance(a, Point2):
        return _same_point(a, b, policy)
    if isinstance(a, LineLike):
        if a.kind != b.kind:
            return False
        if a.kind == "line":
            return are_parallel(a, b, policy) and policy.near_zero(point_line_distance(b.p1, a) / _scale(a.p1, b.p1))
        if a.kind == "segment":
            return (_same_point(a.p1, b.p1, policy) and _same_point(a.p2, b.p2, policy)) or (
                _same_point(a.p1, b.p2, policy) and _same_point(a.p2, b.p1, policy)
            )
        if a.kind == "ray":
            return _same_point(a.p1, b.p1, policy) and policy.near_zero(_dist_dir(a, b))
        return _same_point(Point2(*_sub(a.p2, a.p1)), Point2(*_sub(b.p2, b.p1)), policy)
    if isinstance(a, Circle2):
        return _same_point(a.center, b.center, policy) and tol_pass(a.radius, b.radius, policy)
    if isinstance(a, ArcLike):
        return (
            a.kind == b.kind
            and _same_point(a.center, b.center, policy)
            and tol_pass(a.radius, b.radius, policy)
            and _same_point(conic_point(a, a.start), conic_point(b, b.start), policy)
            and tol_pass(a.span, b.span, policy)
        )
    if isinstance(a, Polygon2):
        n = len(a.vertices)
        if n != len(b.vertices):
            return False
        for shift in range(n):
            for seq in (b.vertices, tuple(reversed(b.vertices))):
                if all(_same_point(a.vertices[i], seq[(i + shift) % n], policy) for i in range(n)):
                    return True
        return False
    if isinstance(a, Conic2):
        ca, cb = conic_coefficients(a), conic_coefficients(b)
        na = max(abs(c) for c in ca)
        nb = max(abs(c) for c in cb)
        return all(tol_pass(x / na, y / nb, policy) for x, y in zip(ca, cb))
    return a == b


def _dist_dir(a: LineLike, b: LineLike) -> float:
    ua, ub = a.direction, b.direction
    return _norm((ua[0] - ub[0], ua[1] - ub[1]))


def _polygon_signature(p: Polygon2) -> tuple[list[float], list[float]]:
    v = p.vertices
    n = len(v)
    sides = [_dist(v[i], v[(i + 1) % n]) for i in range(n)]
    angles = []
    for i in range(n):
        a, b, c = v[i - 1], v[i], v[(i + 1) % n]
        u, w = _sub(a, b), _sub(c, b)
        angles.append(math.degrees(abs(math.atan2(_cross(u, w), _dot(u, w)))))
    return sorted(sides), sorted(angles)


def are_congruent(a: Any, b: Any, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    if isinstance(a, LineLike) and isinstance(b, LineLike):
        if a.kind in ("line", "ray") or b.kind in ("line", "ray"):
            return a.kind == b.kind
        return tol_pass(a.length, b.length, policy)
    if isinstance(a, (Circle2, ArcLike)) and isinstance(b, (Circle2, ArcLike)):
        if isinstance(a, ArcLike) != isinstance(b, ArcLike):
            return False
        same_r = tol_pass(a.radius, b.radius, policy)
        return same_r and (not isinstance(a, ArcLike) or tol_pass(a.span, b.span, policy))
    if isinstance(a, Polygon2) and isinstance(b, Polygon2):
        if len(a.vertices) != len(b.vertices):
            return False
        sa, aa = _polygon_signature(a)
        sb, ab = _polygon_signature(b)
        return all(tol_pass(x, y, policy) for x, y in zip(sa, sb)) and all(tol_pass(x, y, policy) for x, y in zip(aa, ab))
    if isinstance(a, Conic2) and isinstance(b, Conic2):
        if a.kind != b.kind:
            return False
        if a.kind == "parabola":
            return tol_pass(_parabola_frame(a)[3], _parabola_frame(b)[3], policy)
        _, _, a1, b1 = _conic_frame(a)
        _, _, a2, b2 = _conic_frame(b)
        return tol_pass(a1, a2, policy) and tol_pass(b1, b2, policy)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return tol_pass(a, b, policy)
    raise TypeMismatch("congruence needs two objects of the same kind")


def in_region(p: Point2, region: Region2, policy: TolerancePolicy = DEFAULT_POLICY) -> Any:
    if not isinstance(region, Region2):
        raise TypeMismatch("expected a region", arg="region")
    return region.contains(p, policy.abs_tol)


# ------------------------------------------------------------------ transforms


@dataclass(frozen=True)
class Affine:
    """x' = a x + b y + e ;  y' = c x + d y + f"""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def apply(self, p: Point2) -> Point2:
        return Point2(self.a * p.x + self.b * p.y + self.e, self.c * p.x + self.d * p.y + self.f)

    def apply_dir(self, u: Sequence[float]) -> tuple[float, float]:
        return (self.a * u[0] + self.b * u[1], self.c * u[0] + self.d * u[1])


def reflect_line_map(l: LineLike) -> Affine:
    if not isinstance(l, LineLike):
        raise TypeMismatch("reflection axis must be a line", arg="line")
    if coincident(l.p1, l.p2):
        raise DegenerateInput("reflection axis has zero length")
    ux, uy = l.direction
    a, b, d = 2 * ux * ux - 1, 2 * ux * uy, 2 * uy * uy - 1
    px, py = l.p1.x, l.p1.y
    return Affine(a, b, b, d, px - (a * px + b * py), py - (b * px + d * py))


def reflect_point_line(p: Point2, l: LineLike) -> Point2:
    u = l.direction
    t = _dot(_sub(p, l.p1), u)
    foot = _at(l.p1, u, t)
    return Point2(2 * foot.x - p.x, 2 * foot.y - p.y)


def reflect_point_map(c: Point2) -> Affine:
    return Affine(-1.0, 0.0, 0.0, -1.0, 2 * c.x, 2 * c.y)


def _exact_cos_sin(theta_deg: float) -> tuple[float, float]:
    q = theta_deg / 90.0
    if q == int(q):
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(q) % 4]
    th = math.radians(theta_deg)
    return math.cos(th), math.sin(th)


def rotate_map(center: Point2, theta_deg: float) -> Affine:
    c, s = _exact_cos_sin(theta_deg)
    return Affine(c, -s, s, c, center.x - (c * center.x - s * center.y), center.y - (s * center.x + c * center.y))


def translate_map(v: Sequence[float]) -> Affine:
    return Affine(1.0, 0.0, 0.0, 1.0, v[0], v[1])


def dilate_map(center: Point2, k: float) -> Affine:
    if k == 0:
        raise DegenerateInput("dilation factor must be nonzero")
    return Affine(k, 0.0, 0.0, k, center.x * (1 - k), center.y * (1 - k))


def apply_affine(obj: Any, m: Affine) -> Any:
    """Image of ``obj`` under a similarity map; the result has the same kind."""
    if isinstance(obj, Point2):
        return m.apply(obj)
    if isinstance(obj, LineLike):
        return LineLike(obj.kind, m.apply(obj.p1), m.apply(obj.p2))
    k = math.sqrt(abs(m.det))
    if isinstance(obj, Circle2):
        return Circle2(m.apply(obj.center), obj.radius * k)
    if isinstance(obj, ArcLike):
        c = m.apply(obj.center)
        s = m.apply(conic_point(obj, obj.start))
        e = m.apply(conic_point(obj, obj.end))
        if m.det < 0:
            s, e = e, s
        start = _angle_of(_sub(s, c))
        return ArcLike(obj.kind, c, obj.radius * k, start, obj.span)
    if isinstance(obj, Polygon2):
        return Polygon2(tuple(m.apply(v) for v in obj.vertices))
    if isinstance(obj, Conic2):
        if obj.kind == "parabola":
            d = obj.directrix
            return Conic2("parabola", m.apply(obj.focus1), directrix=LineLike("line", m.apply(d.p1), m.apply(d.p2)))
        return Conic2(obj.kind, m.apply(obj.focus1), m.apply(obj.focus2), obj.a * k)
    if isinstance(obj, FunctionGraph):
        if not (m.a == 1.0 and m.b == 0.0 and m.c == 0.0 and m.d == 1.0):
            raise TypeMismatch("function graphs support translation only", arg="obj")
        dom = None if obj.domain is None else (obj.domain[0] + m.e, obj.domain[1] + m.e)
        return FunctionGraph("shifted", base=obj, shift=(m.e, m.f), domain=dom)
    if isinstance(obj, tuple):
        return tuple(apply_affine(o, m) for o in obj)
    raise TypeMismatch("object cannot be transformed", arg="obj")
