"""SVG export of a canvas.

Output is a pure function of the canvas and the viewport: objects are drawn
in insertion order and every coordinate is printed with two decimals.  3D
content is drawn with an orthographic projection built from the stored view
angles; edges whose adjacent faces all point away from the viewer are
dashed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

from . import geom2d as g2
from . import geom3d as g3
from .canvas import DEFAULT_VIEW3D, Canvas, CanvasObject
from .errors import GeoError
from .numeric import is_undefined
from .ops import IntegralShade, TextLabel, describe

LABEL_OFFSET_PX = 6.0
MARGIN = 0.10
SAMPLES = 400
MARK_PX = 10.0
FONT_PX = 12
_DASH = {"solid": None, "dashed": "6 4", "dotted": "2 3"}


@dataclass(frozen=True)
class Viewport:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    width: int = 800
    height: int = 600

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("viewport bounds must satisfy x_min < x_max and y_min < y_max")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("viewport pixel size must be positive")

    def px(self, x: float, y: float) -> tuple[float, float]:
        sx = (x - self.x_min) / (self.x_max - self.x_min) * self.width
        sy = (self.y_max - y) / (self.y_max - self.y_min) * self.height
        return sx, sy

    @property
    def unit_px(self) -> float:
        return min(self.width / (self.x_max - self.x_min), self.height / (self.y_max - self.y_min))


# ---------------------------------------------------------------- projection


@dataclass(frozen=True)
class Projection:
    """Orthographic view: ``x_angle`` is the elevation, ``z_angle`` the azimuth (degrees)."""

    x_angle: float = DEFAULT_VIEW3D["x_angle"]
    z_angle: float = DEFAULT_VIEW3D["z_angle"]

    def _trig(self) -> tuple[float, float, float, float]:
        el, az = math.radians(self.x_angle), math.radians(self.z_angle)
        return math.cos(el), math.sin(el), math.cos(az), math.sin(az)

    def project(self, p: Sequence[float]) -> tuple[float, float]:
        ce, se, ca, sa = self._trig()
        x, y, z = p[0], p[1], p[2]
        u = -x * sa + y * ca
        v = z * ce - (x * ca + y * sa) * se
        return u, v

    @property
    def toward_viewer(self) -> tuple[float, float, float]:
        ce, se, ca, sa = self._trig()
        return (ca * ce, sa * ce, se)


# ------------------------------------------------------------------ helpers


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _stroke(style: Mapping[str, Any], dash: str | None = None) -> str:
    d = dash if dash is not None else _DASH.get(style.get("line_style", "solid"))
    out = f'stroke="{escape(style.get("color", "#000000"))}" stroke-width="{_f(style.get("thickness", 1.0))}"'
    if d:
        out += f' stroke-dasharray="{d}"'
    return out


def _fill(style: Mapping[str, Any]) -> str:
    op = float(style.get("opacity", 0.0))
    if op <= 0:
        return 'fill="none"'
    return f'fill="{escape(style.get("color", "#000000"))}" fill-opacity="{_f(op)}"'


def _polyline_runs(pts: Iterable[tuple[float, float] | None]) -> list[list[tuple[float, float]]]:
    runs: list[list[tuple[float, float]]] = [[]]
    for p in pts:
        if p is None:
            if runs[-1]:
                runs.append([])
        else:
            runs[-1].append(p)
    return [r for r in runs if len(r) >= 2]


def _path(run: Sequence[tuple[float, float]], closed: bool = False) -> str:
    d = "M" + " L".join(f"{_f(x)} {_f(y)}" for x, y in run)
    return d + (" Z" if closed else "")


def _clip_line(vp: Viewport, p: tuple[float, float], d: tuple[float, float], t0: float, t1: float) -> tuple[float, float] | None:
    """Liang-Barsky clip of ``p + t d`` for ``t`` in [t0, t1] against the viewport box."""
    for q, dq, lo, hi in ((p[0], d[0], vp.x_min, vp.x_max), (p[1], d[1], vp.y_min, vp.y_max)):
        if dq == 0.0:
            if q < lo or q > hi:
                return None
            continue
        a, b = (lo - q) / dq, (hi - q) / dq
        if a > b:
            a, b = b, a
        t0, t1 = max(t0, a), min(t1, b)
        if t0 > t1:
            return None
    return t0, t1


# ------------------------------------------------------------------ geometry


def _points_of(v: Any) -> list[tuple[float, float]]:
    """Representative 2D points of a value, used for the bounding box."""
    if isinstance(v, g2.Point2):
        return [(v.x, v.y)]
    if isinstance(v, g2.LineLike):
        return [(v.p1.x, v.p1.y), (v.p2.x, v.p2.y)]
    if isinstance(v, (g2.Circle2, g2.ArcLike)):
        c, r = v.center, v.radius
        return [(c.x - r, c.y - r), (c.x + r, c.y + r)]
    if isinstance(v, g2.Conic2):
        if v.kind == "ellipse":
            return [(p.x, p.y) for p in (g2.conic_point(v, k * math.pi / 2) for k in range(4))]
        return [(v.focus1.x, v.focus1.y)] + ([(v.focus2.x, v.focus2.y)] if v.focus2 else [])
    if isinstance(v, g2.Polygon2):
        return [(p.x, p.y) for p in v.vertices]
    if isinstance(v, TextLabel):
        return [(v.position.x, v.position.y)]
    if isinstance(v, IntegralShade):
        return [(v.a, 0.0), (v.b, 0.0)]
    if isinstance(v, g2.ParametricCurve):
        pts = [v.evaluate(v.t_min + (v.t_max - v.t_min) * i / 64) for i in range(65)]
        return [(p.x, p.y) for p in pts if isinstance(p, g2.Point2)]
    if isinstance(v, tuple):
        return [p for item in v for p in _points_of(item)]
    return []


def _points3_of(v: Any) -> list[Sequence[float]]:
    if isinstance(v, g3.Point3):
        return [v]
    if isinstance(v, g3.Vector3):
        return [v.p1, v.p2]
    if isinstance(v, g3.Polygon3):
        return list(v.vertices)
    if isinstance(v, g3.Plane3):
        return list(v.corners)
    if isinstance(v, g3.Text3):
        return [v.position]
    if isinstance(v, g3.Solid3):
        if v.polyhedral:
            return list(v.vertices)
        c, r = v.center, v.radius
        pts = [g3.add(c, (sx * r, sy * r, sz * r)) for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
        if v.kind != "sphere":
            pts += [g3.add(p, v.axis) for p in pts]
        return pts
    if isinstance(v, tuple):
        return [p for item in v for p in _points3_of(item)]
    return []


def _is3d(v: Any) -> bool:
    if isinstance(v, tuple):
        return any(_is3d(x) for x in v)
    return isinstance(v, (g3.Point3, g3.Vector3, g3.Polygon3, g3.Plane3, g3.Solid3, g3.Text3))


def _visible(state: Canvas) -> list[CanvasObject]:
    return [o for o in state.objects.values() if o.defined and o.style.get("visible", True)]


def fit_viewport(state: Canvas, width: int = 800, height: int = 600) -> Viewport:
    """Stored coordinate window, else bounding box of visible content plus a 10% margin."""
    box = state.view.get("coord_system")
    if box:
        return Viewport(box[0], box[1], box[2], box[3], width, height)
    proj = _projection(state)
    pts: list[tuple[float, float]] = []
    for o in _visible(state):
        pts.extend(_points_of(o.value))
        pts.extend(proj.project(p) for p in _points3_of(o.value))
    if not pts:
        return Viewport(-10.0, 10.0, -7.5, 7.5, width, height)
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    w, h = max(x1 - x0, 1e-6), max(y1 - y0, 1e-6)
    if x1 - x0 < 1e-6 and y1 - y0 < 1e-6:
        w = h = 2.0
    # keep one unit per pixel in both directions
    aspect = width / height
    if w / h > aspect:
        h = w / aspect
    else:
        w = h * aspect
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    w, h = w * (1 + 2 * MARGIN), h * (1 + 2 * MARGIN)
    return Viewport(cx - w / 2, cx + w / 2, cy - h / 2, cy + h / 2, width, height)


def _projection(state: Canvas) -> Projection:
    v3 = state.view.get("view3d") or DEFAULT_VIEW3D
    return Projection(float(v3["x_angle"]), float(v3["z_angle"]))


# ------------------------------------------------------------------ drawing


class _Painter:
    def __init__(self, state: Canvas, vp: Viewport):
        self.state, self.vp = state, vp
        self.proj = _projection(state)
        self.out: list[str] = []

    def px(self, x: float, y: float) -> tuple[float, float]:
        return self.vp.px(x, y)

    def px3(self, p: Sequence[float]) -> tuple[float, float]:
        return self.vp.px(*self.proj.project(p))

    def emit(self, s: str) -> None:
        self.out.append(s)

    # ---- 2D primitives

    def point(self, x: float, y: float, style: Mapping[str, Any], name: str) -> None:
        sx, sy = x, y
        r = max(float(style.get("point_size", 5)) * 0.5, 0.5)
        color = escape(style.get("color", "#000000"))
        shape = style.get("point_style", "dot")
        nid = f' data-name="{escape(name)}"'
        if shape == "dot":
            self.emit(f'<circle{nid} cx="{_f(sx)}" cy="{_f(sy)}" r="{_f(r)}" fill="{color}"/>')
        elif shape == "circle":
            self.emit(f'<circle{nid} cx="{_f(sx)}" cy="{_f(sy)}" r="{_f(r)}" fill="#ffffff" stroke="{color}" stroke-width="1.00"/>')
        elif shape == "square":
            self.emit(f'<rect{nid} x="{_f(sx - r)}" y="{_f(sy - r)}" width="{_f(2 * r)}" height="{_f(2 * r)}" fill="{color}"/>')
        elif shape == "diamond":
            d = f"M{_f(sx)} {_f(sy - r)} L{_f(sx + r)} {_f(sy)} L{_f(sx)} {_f(sy + r)} L{_f(sx - r)} {_f(sy)} Z"
            self.emit(f'<path{nid} d="{d}" fill="{color}"/>')
        elif shape == "triangle":
            d = f"M{_f(sx)} {_f(sy - r)} L{_f(sx + r)} {_f(sy + r)} L{_f(sx - r)} {_f(sy + r)} Z"
            self.emit(f'<path{nid} d="{d}" fill="{color}"/>')
        else:  # cross
            d = f"M{_f(sx - r)} {_f(sy - r)} L{_f(sx + r)} {_f(sy + r)} M{_f(sx - r)} {_f(sy + r)} L{_f(sx + r)} {_f(sy - r)}"
            self.emit(f'<path{nid} d="{d}" fill="none" stroke="{color}" stroke-width="1.50"/>')

    def disc(self, centre: tuple[float, float], r: float, style: Mapping[str, Any], name: str) -> None:
        rx = r * self.vp.width / (self.vp.x_max - self.vp.x_min)
        ry = r * self.vp.height / (self.vp.y_max - self.vp.y_min)
        self.emit(
            f'<ellipse data-name="{escape(name)}" cx="{_f(centre[0])}" cy="{_f(centre[1])}" rx="{_f(rx)}" ry="{_f(ry)}" '
            f"{_fill(style)} {_stroke(style)}/>"
        )

    def runs(self, runs: list[list[tuple[float, float]]], style: Mapping[str, Any], name: str, closed: bool = False, fill: bool = False, dash: str | None = None) -> None:
        for run in runs:
            f = _fill(style) if fill else 'fill="none"'
            self.emit(f'<path data-name="{escape(name)}" d="{_path(run, closed)}" {f} {_stroke(style, dash)}/>')

    def linelike(self, v: g2.LineLike, style: Mapping[str, Any], name: str) -> None:
        d = (v.p2.x - v.p1.x, v.p2.y - v.p1.y)
        lo, hi = {"line": (-math.inf, math.inf), "ray": (0.0, math.inf)}.get(v.kind, (0.0, 1.0))
        span = _clip_line(self.vp, (v.p1.x, v.p1.y), d, lo, hi)
        if span is None:
            return
        a = self.px(v.p1.x + span[0] * d[0], v.p1.y + span[0] * d[1])
        b = self.px(v.p1.x + span[1] * d[0], v.p1.y + span[1] * d[1])
        self.runs([[a, b]], style, name)
        deco = style.get("decoration", "none")
        if v.kind == "vector" or deco in ("arrow", "double_arrow"):
            self.arrow(a, b, style)
            if deco == "double_arrow":
                self.arrow(b, a, style)
        elif deco.startswith("tick"):
            self.ticks(a, b, int(deco[-1]), style)

    def arrow(self, a: tuple[float, float], b: tuple[float, float], style: Mapping[str, Any]) -> None:
        L = math.hypot(b[0] - a[0], b[1] - a[1])
        if L == 0:
            return
        ux, uy = (b[0] - a[0]) / L, (b[1] - a[1]) / L
        s = 8.0
        p1 = (b[0] - s * ux + 0.5 * s * uy, b[1] - s * uy - 0.5 * s * ux)
        p2 = (b[0] - s * ux - 0.5 * s * uy, b[1] - s * uy + 0.5 * s * ux)
        color = escape(style.get("color", "#000000"))
        self.emit(f'<path d="{_path([b, p1, p2], True)}" fill="{color}"/>')

    def ticks(self, a: tuple[float, float], b: tuple[float, float], n: int, style: Mapping[str, Any]) -> None:
        L = math.hypot(b[0] - a[0], b[1] - a[1])
        if L == 0:
            return
        ux, uy = (b[0] - a[0]) / L, (b[1] - a[1]) / L
        mx, my = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
        for k in range(n):
            off = (k - (n - 1) / 2) * 4.0
            cx, cy = mx + off * ux, my + off * uy
            self.runs([[(cx - 5 * uy, cy + 5 * ux), (cx + 5 * uy, cy - 5 * ux)]], style, "", dash="")

    def sampled(self, fn, t0: float, t1: float, n: int = SAMPLES) -> list[list[tuple[float, float]]]:
        pts: list[tuple[float, float] | None] = []
        jump = 4.0 * max(self.vp.width, self.vp.height)
        prev = None
        for i in range(n + 1):
            p = fn(t0 + (t1 - t0) * i / n)
            if p is None:
                pts.append(None)
                prev = None
                continue
            q = self.px(*p)
            if prev is not None and math.hypot(q[0] - prev[0], q[1] - prev[1]) > jump:
                pts.append(None)
            if abs(q[0]) > 1e6 or abs(q[1]) > 1e6:
                pts.append(None)
                prev = None
                continue
            pts.append(q)
            prev = q
        return _polyline_runs(pts)

    def draw_value(self, v: Any, kind: str, style: Mapping[str, Any], name: str) -> None:
        if is_undefined(v):
            return
        if isinstance(v, tuple):
            for item in v:
                self.draw_value(item, kind, style, name)
            return
        if isinstance(v, g2.Point2):
            self.point(*self.px(v.x, v.y), style, name)
        elif isinstance(v, g2.LineLike):
            self.linelike(v, style, name)
        elif isinstance(v, g2.Circle2):
            self.disc(self.px(v.center.x, v.center.y), v.radius, style, name)
        elif isinstance(v, g2.ArcLike):
            pts = self.sampled(lambda s: _xy(g2.conic_point(v, s)), v.start, v.start + v.span, 120)
            if v.kind == "sector" and pts:
                c = self.px(v.center.x, v.center.y)
                pts = [[c] + pts[0] + [c]]
            self.runs(pts, style, name, closed=v.kind != "arc", fill=v.kind != "arc")
        elif isinstance(v, g2.Conic2):
            self.conic(v, style, name)
        elif isinstance(v, g2.Polygon2):
            run = [self.px(p.x, p.y) for p in v.vertices]
            self.runs([run], style, name, closed=True, fill=True)
        elif isinstance(v, g2.FunctionGraph):
            self.runs(self.sampled(lambda x: _fy(v, x), self.vp.x_min, self.vp.x_max), style, name)
        elif isinstance(v, g2.ParametricCurve):
            self.runs(self.sampled(lambda t: _xy(v.evaluate(t)), v.t_min, v.t_max), style, name)
        elif isinstance(v, g2.Region2):
            self.region(v, style, name)
        elif isinstance(v, IntegralShade):
            self.shade(v, style, name)
        elif isinstance(v, TextLabel):
            x, y = self.px(v.position.x, v.position.y)
            self.text(x, y, v.text, style.get("color", "#000000"), name)
        elif _is3d(v):
            self.draw3d(v, style, name)

    def conic(self, v: g2.Conic2, style: Mapping[str, Any], name: str) -> None:
        if v.kind == "ellipse":
            self.runs(self.sampled(lambda s: _xy(g2.conic_point(v, s)), 0.0, 2 * math.pi, 240), style, name, closed=True, fill=True)
            return
        reach = 2.0 * max(self.vp.x_max - self.vp.x_min, self.vp.y_max - self.vp.y_min)
        if v.kind == "parabola":
            self.runs(self.sampled(lambda s: _xy(g2.conic_point(v, s)), -reach, reach), style, name)
            return
        lim = math.atan(reach)  # branch parameter range large enough to leave the viewport
        for c in (0.0, math.pi):
            self.runs(self.sampled(lambda s: _xy(g2.conic_point(v, s)), c - lim, c + lim), style, name)

    def region(self, v: g2.Region2, style: Mapping[str, Any], name: str) -> None:
        nx, ny = 48, 36
        dx, dy = (self.vp.x_max - self.vp.x_min) / nx, (self.vp.y_max - self.vp.y_min) / ny
        cw, ch = self.vp.width / nx, self.vp.height / ny
        color = escape(style.get("color", "#000000"))
        op = max(float(style.get("opacity", 0.0)), 0.15)
        cells = []
        for j in range(ny):
            for i in range(nx):
                p = g2.Point2(self.vp.x_min + (i + 0.5) * dx, self.vp.y_max - (j + 0.5) * dy)
                if v.contains(p) is True:
                    cells.append(f"M{_f(i * cw)} {_f(j * ch)} h{_f(cw)} v{_f(ch)} h{_f(-cw)} Z")
        if cells:
            self.emit(f'<path data-name="{escape(name)}" d="{" ".join(cells)}" fill="{color}" fill-opacity="{_f(op)}" stroke="none"/>')

    def shade(self, v: IntegralShade, style: Mapping[str, Any], name: str) -> None:
        f = v.function
        top = []
        for i in range(SAMPLES // 4 + 1):
            x = v.a + (v.b - v.a) * i / (SAMPLES // 4)
            y = f.evaluate(x)
            if is_undefined(y):
                return
            top.append(self.px(x, y))
        run = [self.px(v.a, 0.0)] + top + [self.px(v.b, 0.0)]
        st = dict(style)
        st["opacity"] = max(float(style.get("opacity", 0.0)), 0.25)
        self.runs([run], st, name, closed=True, fill=True)

    # ---- 3D

    def draw3d(self, v: Any, style: Mapping[str, Any], name: str) -> None:
        if isinstance(v, g3.Point3):
            self.point(*self.px3(v), style, name)
        elif isinstance(v, g3.Vector3):
            a, b = self.px3(v.p1), self.px3(v.p2)
            self.runs([[a, b]], style, name)
            self.arrow(a, b, style)
        elif isinstance(v, g3.Polygon3):
            self.runs([[self.px3(p) for p in v.vertices]], style, name, closed=True, fill=True)
        elif isinstance(v, g3.Plane3):
            if v.corners:
                st = dict(style)
                st["opacity"] = max(float(style.get("opacity", 0.0)), 0.1)
                self.runs([[self.px3(p) for p in v.corners]], st, name, closed=True, fill=True)
        elif isinstance(v, g3.Text3):
            x, y = self.px3(v.position)
            self.text(x, y, v.text, style.get("color", "#000000"), name)
        elif isinstance(v, g3.Solid3):
            self.solid(v, style, name)

    def solid(self, s: g3.Solid3, style: Mapping[str, Any], name: str) -> None:
        view = self.proj.toward_viewer
        if s.polyhedral:
            centroid = tuple(sum(p[i] for p in s.vertices) / len(s.vertices) for i in range(3))
            front = []
            for face in s.faces:
                pts = [s.vertices[i] for i in face]
                n = g3._newell_normal(pts)
                fc = tuple(sum(p[i] for p in pts) / len(pts) for i in range(3))
                if g3.dot(n, g3.sub(fc, centroid)) < 0:
                    n = g3.scale(n, -1.0)
                front.append(g3.dot(n, view) > 1e-12)
            edges: dict[tuple[int, int], bool] = {}
            for face, is_front in zip(s.faces, front):
                for k in range(len(face)):
                    e = tuple(sorted((face[k], face[(k + 1) % len(face)])))
                    edges[e] = edges.get(e, False) or is_front
            for (i, j), shown in sorted(edges.items()):
                run = [[self.px3(s.vertices[i]), self.px3(s.vertices[j])]]
                self.runs(run, style, name, dash=None if shown else "5 4")
            return
        c, r = s.center, s.radius
        if s.kind == "sphere":
            self.disc(self.px3(c), r, style, name)
            ring = _ring(c, (0.0, 0.0, 1.0), r)
            self.runs([[self.px3(p) for p in ring]], style, name, closed=True, dash="5 4")
            return
        base = _ring(c, s.axis, r)
        top_c = g3.add(c, s.axis)
        self.runs([[self.px3(p) for p in base]], style, name, closed=True)
        proj = [self.px3(p) for p in base]
        lo = min(range(len(proj)), key=lambda k: (proj[k][0], k))
        hi = max(range(len(proj)), key=lambda k: (proj[k][0], -k))
        if s.kind == "cone":
            apex = self.px3(top_c)
            self.runs([[proj[lo], apex, proj[hi]]], style, name)
        else:
            top = _ring(top_c, s.axis, r)
            self.runs([[self.px3(p) for p in top]], style, name, closed=True)
            self.runs([[proj[lo], self.px3(top[lo])], [proj[hi], self.px3(top[hi])]], style, name)

    # ---- annotations

    def text(self, x: float, y: float, s: str, color: str, name: str = "", anchor: str = "start") -> None:
        nid = f' data-label="{escape(name)}"' if name else ""
        anc = f' text-anchor="{anchor}"' if anchor != "start" else ""
        self.emit(
            f'<text{nid} x="{_f(x)}" y="{_f(y)}"{anc} font-family="sans-serif" font-size="{FONT_PX}" '
            f'fill="{escape(color)}">{escape(s)}</text>'
        )


def _xy(p: Any) -> tuple[float, float] | None:
    return (p.x, p.y) if isinstance(p, g2.Point2) else None


def _fy(f: g2.FunctionGraph, x: float) -> tuple[float, float] | None:
    y = f.evaluate(x)
    return None if is_undefined(y) or isinstance(y, bool) else (x, y)


def _ring(c: Sequence[float], axis: Sequence[float], r: float, n: int = 64) -> list[Sequence[float]]:
    a = g3.unit(axis) if g3.norm(axis) > 0 else (0.0, 0.0, 1.0)
    helper = (1.0, 0.0, 0.0) if abs(a[0]) < 0.9 else (0.0, 1.0, 0.0)
    u = g3.unit(g3.cross(a, helper))
    w = g3.cross(a, u)
    return [g3.add(c, g3.add(g3.scale(u, r * math.cos(2 * math.pi * k / n)), g3.scale(w, r * math.sin(2 * math.pi * k / n)))) for k in range(n)]


# ------------------------------------------------------------------- labels


def label_text(o: CanvasObject) -> str:
    mode = o.style.get("label_mode", 0)
    value = describe(o.kind, o.value)
    if mode == 1:
        return f"{o.name} = {value}"
    if mode == 2:
        return value
    if mode == 3:
        return o.style.get("caption") or o.name
    return o.name


def _anchor(o: CanvasObject) -> tuple[float, float] | None:
    v = o.value
    if isinstance(v, g2.Point2):
        return (v.x, v.y)
    if isinstance(v, g2.LineLike):
        return ((v.p1.x + v.p2.x) / 2, (v.p1.y + v.p2.y) / 2)
    if isinstance(v, (g2.Circle2, g2.ArcLike)):
        return (v.center.x, v.center.y + v.radius)
    if isinstance(v, g2.Polygon2):
        n = len(v.vertices)
        return (sum(p.x for p in v.vertices) / n, sum(p.y for p in v.vertices) / n)
    if isinstance(v, g2.Conic2):
        return (v.focus1.x, v.focus1.y)
    return None


def _incident_directions(state: Canvas, o: CanvasObject) -> list[tuple[float, float]]:
    """Unit directions from a point toward the far ends of segments and polygon sides it touches."""
    p = o.value
    out = []
    for other in state.objects.values():
        if not other.defined:
            continue
        v = other.value
        ends: list[tuple[g2.Point2, g2.Point2]] = []
        if isinstance(v, g2.LineLike):
            ends = [(v.p1, v.p2), (v.p2, v.p1)]
        elif isinstance(v, g2.Polygon2):
            n = len(v.vertices)
            ends = [(v.vertices[i], v.vertices[(i + d) % n]) for i in range(n) for d in (1, -1)]
        for a, b in ends:
            if a == p and b != p:
                dx, dy = b.x - a.x, b.y - a.y
                L = math.hypot(dx, dy)
                out.append((dx / L, dy / L))
    return out


def _label_offset(state: Canvas, o: CanvasObject) -> tuple[float, float]:
    """Screen offset of ``LABEL_OFFSET_PX`` pointing away from incident segments."""
    default = (LABEL_OFFSET_PX / math.sqrt(2), -LABEL_OFFSET_PX / math.sqrt(2))
    if not isinstance(o.value, g2.Point2):
        return default
    dirs = _incident_directions(state, o)
    if not dirs:
        return default
    sx, sy = sum(d[0] for d in dirs), sum(d[1] for d in dirs)
    L = math.hypot(sx, sy)
    if L < 1e-9:
        return default
    # screen y grows downward
    return (-sx / L * LABEL_OFFSET_PX, sy / L * LABEL_OFFSET_PX)


# ------------------------------------------------------------------ document


def _nice_step(span: float) -> float:
    raw = span / 10.0
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _axes_and_grid(p: _Painter, axes: bool, grid: bool) -> None:
    vp = p.vp
    if grid:
        step = _nice_step(max(vp.x_max - vp.x_min, vp.y_max - vp.y_min))
        lines = []
        k = math.ceil(vp.x_min / step)
        while k * step <= vp.x_max:
            x, _ = vp.px(k * step, 0.0)
            lines.append(f"M{_f(x)} 0.00 L{_f(x)} {_f(vp.height)}")
            k += 1
        k = math.ceil(vp.y_min / step)
        while k * step <= vp.y_max:
            _, y = vp.px(0.0, k * step)
            lines.append(f"M0.00 {_f(y)} L{_f(vp.width)} {_f(y)}")
            k += 1
        if lines:
            p.emit(f'<path class="grid" d="{" ".join(lines)}" fill="none" stroke="#e0e0e0" stroke-width="0.50"/>')
    if axes:
        parts = []
        if vp.y_min <= 0.0 <= vp.y_max:
            _, y = vp.px(0.0, 0.0)
            parts.append(f"M0.00 {_f(y)} L{_f(vp.width)} {_f(y)}")
        if vp.x_min <= 0.0 <= vp.x_max:
            x, _ = vp.px(0.0, 0.0)
            parts.append(f"M{_f(x)} 0.00 L{_f(x)} {_f(vp.height)}")
        if parts:
            p.emit(f'<path class="axes" d="{" ".join(parts)}" fill="none" stroke="#757575" stroke-width="1.00"/>')


def _right_angle_mark(p: _Painter, state: Canvas, names: Sequence[str]) -> None:
    objs = [state.get(n) for n in names]
    if any(o is None or not o.defined or not isinstance(o.value, g2.Point2) for o in objs):
        return
    a, b, c = (p.px(o.value.x, o.value.y) for o in objs)
    u = (a[0] - b[0], a[1] - b[1])
    w = (c[0] - b[0], c[1] - b[1])
    lu, lw = math.hypot(*u), math.hypot(*w)
    if lu == 0 or lw == 0:
        return
    u = (u[0] / lu * MARK_PX, u[1] / lu * MARK_PX)
    w = (w[0] / lw * MARK_PX, w[1] / lw * MARK_PX)
    run = [(b[0] + u[0], b[1] + u[1]), (b[0] + u[0] + w[0], b[1] + u[1] + w[1]), (b[0] + w[0], b[1] + w[1])]
    color = "#000000" if state.style_preset == "textbook" else "#37474f"
    p.emit(f'<path class="right-angle" d="{_path(run)}" fill="none" stroke="{color}" stroke-width="1.00"/>')


def render_svg(state: Canvas, viewport: Viewport | None = None) -> str:
    """SVG 1.1 document for the visible, defined objects of ``state``."""
    vp = viewport or fit_viewport(state)
    p = _Painter(state, vp)
    p.emit(f'<rect x="0" y="0" width="{vp.width}" height="{vp.height}" fill="#ffffff"/>')
    _axes_and_grid(p, bool(state.view.get("axes")), bool(state.view.get("grid")))
    objs = _visible(state)
    for o in objs:
        if o.kind not in ("point", "point3d"):
            p.draw_value(o.value, o.kind, o.style, o.name)
    for o in objs:
        if o.kind in ("point", "point3d"):
            p.draw_value(o.value, o.kind, o.style, o.name)
    for mark in state.view.get("marks", []):
        _right_angle_mark(p, state, mark)
    for o in objs:
        if not o.style.get("label_visible"):
            continue
        if isinstance(o.value, g3.Point3):
            x, y = p.px3(o.value)
        else:
            at = _anchor(o)
            if at is None:
                continue
            x, y = vp.px(*at)
        dx, dy = _label_offset(state, o)
        color = "#000000" if state.style_preset == "textbook" else o.style.get("color", "#000000")
        anchor = "end" if dx < -1e-9 else ("middle" if abs(dx) <= 1e-9 else "start")
        p.text(x + dx, y + dy, label_text(o), color, o.name, anchor)
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{vp.width}" height="{vp.height}" '
        f'viewBox="0 0 {vp.width} {vp.height}">'
    )
    return head + "\n" + "\n".join(p.out) + "\n</svg>\n"


# ----------------------------------------------------------- style operations

_ERRORS = {cls.code.value: cls for cls in GeoError.__subclasses__()}


def apply_render_tool(state: Canvas, tool: str, args: Mapping[str, Any]) -> Canvas:
    """Copy of ``state`` with one render tool applied; engine errors are raised."""
    spec = state.catalog.get(tool)
    if spec.action_type != "render":
        raise ValueError(f"{tool} is not a render tool")
    out = state.clone()
    obs = out.apply(tool, dict(args))
    if not obs.ok:
        cls = _ERRORS.get(obs.code or "", GeoError)
        raise cls(obs.payload["message"], arg=obs.payload.get("offending_arg"), ref=obs.payload.get("ref"))
    return out


def apply_textbook_preset(state: Canvas) -> Canvas:
    """Copy of ``state`` repainted with the textbook preset; idempotent."""
    out = state.clone()
    out.set_style_preset("textbook")
    return out


def geometry_projection(doc: Mapping[str, Any]) -> list[dict[str, Any]]:
    """Export records without style fields, for comparing geometry only."""
    return [{k: v for k, v in o.items() if k != "style"} for o in doc["objects"]]
