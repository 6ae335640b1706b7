"""Solid geometry: 3D points, vectors, planes, convex solids and plane sections."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

from .errors import DegenerateInput, PreconditionFailed, TypeMismatch, UnsupportedTool
from .numeric import DEFAULT_POLICY, TolerancePolicy, tol_pass

Vec = tuple[float, float, float]


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z

    def __getitem__(self, i: int) -> float:
        return (self.x, self.y, self.z)[i]

    def __len__(self) -> int:
        return 3


@dataclass(frozen=True)
class Vector3:
    """Directed segment ``p1 -> p2`` (``p1`` is the origin for free vectors)."""

    p1: Point3
    p2: Point3

    @property
    def delta(self) -> Vec:
        return sub(self.p2, self.p1)


@dataclass(frozen=True)
class Plane3:
    point: Point3
    normal: Vec  # unit length
    corners: tuple[Point3, ...] = ()  # non-empty for finite (visual) planes


@dataclass(frozen=True)
class Polygon3:
    vertices: tuple[Point3, ...]


@dataclass(frozen=True)
class Solid3:
    """Polyhedral solids carry vertices/faces; round solids carry centre, radius and axis."""

    kind: str  # pyramid | prism | cube | tetrahedron | cone | cylinder | sphere
    vertices: tuple[Point3, ...] = ()
    faces: tuple[tuple[int, ...], ...] = ()
    center: Point3 | None = None
    radius: float = 0.0
    axis: Vec = (0.0, 0.0, 0.0)  # base centre -> apex/top centre

    @property
    def polyhedral(self) -> bool:
        return self.kind in POLYHEDRAL


@dataclass(frozen=True)
class Text3:
    text: str
    position: Point3


POLYHEDRAL = frozenset({"pyramid", "prism", "cube", "tetrahedron"})

# -------------------------------------------------------------------- algebra


def sub(a: Sequence[float], b: Sequence[float]) -> Vec:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def add(a: Sequence[float], b: Sequence[float]) -> Vec:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def scale(a: Sequence[float], k: float) -> Vec:
    return (a[0] * k, a[1] * k, a[2] * k)


def dot(a: Sequence[float], b: Sequence[float]) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: Sequence[float], b: Sequence[float]) -> Vec:
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def norm(a: Sequence[float]) -> float:
    return math.sqrt(dot(a, a))


def unit(a: Sequence[float]) -> Vec:
    n = norm(a)
    if n == 0:
        raise DegenerateInput("zero-length direction")
    return (a[0] / n, a[1] / n, a[2] / n)


def as_point(v: Sequence[float]) -> Point3:
    return Point3(float(v[0]), float(v[1]), float(v[2]))


def lift(p: Any) -> Point3:
    """Accept a 3D point or a planar point (placed at z = 0)."""
    if isinstance(p, Point3):
        return p
    if hasattr(p, "x") and hasattr(p, "y"):
        return Point3(p.x, p.y, 0.0)
    raise TypeMismatch("expected a point")


def _tiny(*pts: Sequence[float]) -> float:
    return 1e-12 * max([1.0] + [abs(c) for p in pts for c in p])


# --------------------------------------------------------------- constructors


def make_vector(p1: Point3, p2: Point3) -> Vector3:
    return Vector3(p1, p2)


def plane_from_points(a: Point3, b: Point3, c: Point3) -> Plane3:
    n = cross(sub(b, a), sub(c, a))
    if norm(n) <= 1e-12 * max(norm(sub(b, a)) * norm(sub(c, a)), 1e-300):
        raise DegenerateInput("plane points are collinear")
    return Plane3(a, unit(n))


def finite_plane(a: Point3, b: Point3, c: Point3) -> Plane3:
    """Parallelogram spanned at ``a`` by ``b - a`` and ``c - a`` (visual rectangle)."""
    p = plane_from_points(a, b, c)
    d = as_point(add(b, sub(c, a)))
    return Plane3(a, p.normal, (a, b, d, c))


def perpendicular_plane(p: Point3, direction: Vec) -> Plane3:
    return Plane3(p, unit(direction))


def plane_bisector(a: Point3, b: Point3) -> Plane3:
    if norm(sub(b, a)) <= _tiny(a, b):
        raise DegenerateInput("bisector plane needs two distinct points")
    m = as_point(scale(add(a, b), 0.5))
    return Plane3(m, unit(sub(b, a)))


def _check_planar_convex(base: Sequence[Point3], policy: TolerancePolicy) -> Vec:
    if len(base) < 3:
        raise DegenerateInput("base needs at least three vertices")
    n = _newell_normal(base)
    if norm(n) <= _tiny(*base):
        raise DegenerateInput("base vertices are collinear")
    nu = unit(n)
    span = max(norm(sub(p, base[0])) for p in base)
    for p in base:
        if abs(dot(sub(p, base[0]), nu)) > policy.abs_tol * max(1.0, span):
            raise DegenerateInput("base vertices are not coplanar")
    k = len(base)
    for i in range(k):
        e1 = sub(base[(i + 1) % k], base[i])
        e2 = sub(base[(i + 2) % k], base[(i + 1) % k])
        if dot(cross(e1, e2), nu) < -policy.abs_tol * max(1.0, span) ** 2:
            raise DegenerateInput("base polygon is not convex")
    return nu


def _newell_normal(pts: Sequence[Point3]) -> Vec:
    nx = ny = nz = 0.0
    k = len(pts)
    for i in range(k):
        a, b = pts[i], pts[(i + 1) % k]
        nx += (a.y - b.y) * (a.z + b.z)
        ny += (a.z - b.z) * (a.x + b.x)
        nz += (a.x - b.x) * (a.y + b.y)
    return (nx, ny, nz)


def polygon3_area(pts: Sequence[Point3]) -> float:
    return 0.5 * norm(_newell_normal(pts))


def pyramid(base: Sequence[Point3], apex: Point3, policy: TolerancePolicy = DEFAULT_POLICY) -> Solid3:
    n = _check_planar_convex(base, policy)
    h = dot(sub(apex, base[0]), n)
    if abs(h) <= policy.abs_tol:
        raise DegenerateInput("apex lies in the base plane")
    k = len(base)
    verts = tuple(base) + (apex,)
    faces = [tuple(range(k))] + [(i, (i + 1) % k, k) for i in range(k)]
    return Solid3("pyramid", verts, tuple(faces))


def prism(base: Sequence[Point3], shift: Vec, policy: TolerancePolicy = DEFAULT_POLICY) -> Solid3:
    n = _check_planar_convex(base, policy)
    if abs(dot(shift, n)) <= policy.abs_tol:
        raise DegenerateInput("prism translation is parallel to the base")
    k = len(base)
    top = tuple(as_point(add(p, shift)) for p in base)
    faces = [tuple(range(k)), tuple(range(k, 2 * k))] + [(i, (i + 1) % k, k + (i + 1) % k, k + i) for i in range(k)]
    return Solid3("prism", tuple(base) + top, tuple(faces))


def cube(a: Point3, b: Point3, c: Point3, policy: TolerancePolicy = DEFAULT_POLICY) -> Solid3:
    """Cube whose face has consecutive corners a, b, c (right angle at b)."""
    ab, bc = sub(b, a), sub(c, b)
    la, lc = norm(ab), norm(bc)
    if la <= policy.abs_tol:
        raise DegenerateInput("cube edge has zero length")
    if not tol_pass(la, lc, policy) or not policy.near_zero(dot(ab, bc) / (la * lc)):
        raise DegenerateInput("three points must form a square corner")
    d = as_point(add(a, bc))
    up = scale(unit(cross(ab, bc)), la)
    base = (a, b, c, d)
    s = prism(base, up, policy)
    return Solid3("cube", s.vertices, s.faces)


def tetrahedron(a: Point3, b: Point3, c: Point3 | None = None, policy: TolerancePolicy = DEFAULT_POLICY) -> Solid3:
    """Regular tetrahedron on base triangle abc; apex on the side of (b-a) x (c-a)."""
    ab = sub(b, a)
    e = norm(ab)
    if e <= policy.abs_tol:
        raise DegenerateInput("tetrahedron edge has zero length")
    if c is None:
        if abs(ab[0]) + abs(ab[1]) <= _tiny(a, b):
            raise DegenerateInput("edge is vertical; supply the third base point")
        cs, sn = 0.5, math.sqrt(3) / 2
        c = as_point(add(a, (ab[0] * cs - ab[1] * sn, ab[0] * sn + ab[1] * cs, ab[2])))
    for u, v in ((a, c), (b, c)):
        if not tol_pass(norm(sub(u, v)), e, policy):
            raise DegenerateInput("base triangle is not equilateral")
    centroid = scale(add(add(a, b), c), 1.0 / 3.0)
    n = unit(cross(ab, sub(c, a)))
    apex = as_point(add(centroid, scale(n, e * math.sqrt(2.0 / 3.0))))
    faces = ((0, 2, 1), (0, 1, 3), (1, 2, 3), (2, 0, 3))
    return Solid3("tetrahedron", (a, b, c, apex), faces)


def cone(base_center: Point3, apex: Point3, radius: float) -> Solid3:
    if not radius > 0:
        raise DegenerateInput("cone radius must be positive")
    axis = sub(apex, base_center)
    if norm(axis) <= _tiny(base_center, apex):
        raise DegenerateInput("cone height must be positive")
    return Solid3("cone", center=base_center, radius=float(radius), axis=axis)


def cylinder(base_center: Point3, top_center: Point3, radius: float) -> Solid3:
    if not radius > 0:
        raise DegenerateInput("cylinder radius must be positive")
    axis = sub(top_center, base_center)
    if norm(axis) <= _tiny(base_center, top_center):
        raise DegenerateInput("cylinder height must be positive")
    return Solid3("cylinder", center=base_center, radius=float(radius), axis=axis)


def sphere(center: Point3, radius: float) -> Solid3:
    if not radius > 0:
        raise DegenerateInput("sphere radius must be positive")
    return Solid3("sphere", center=center, radius=float(radius))


def unsupported(tool: str) -> None:
    raise UnsupportedTool(f"{tool} is not supported by this engine")


# ------------------------------------------------------------------- measures


def _base_area_height(s: Solid3) -> tuple[float, float]:
    if s.kind == "pyramid":
        base = s.vertices[:-1]
        n = unit(_newell_normal(base))
        return polygon3_area(base), abs(dot(sub(s.vertices[-1], base[0]), n))
    k = len(s.vertices) // 2
    base = s.vertices[:k]
    n = unit(_newell_normal(base))
    return polygon3_area(base), abs(dot(sub(s.vertices[k], base[0]), n))


def volume(s: Any) -> float:
    if not isinstance(s, Solid3):
        raise TypeMismatch("volume needs a solid")
    if s.kind == "sphere":
        return 4.0 / 3.0 * math.pi * s.radius**3
    if s.kind == "cone":
        return math.pi * s.radius**2 * norm(s.axis) / 3.0
    if s.kind == "cylinder":
        return math.pi * s.radius**2 * norm(s.axis)
    if s.kind == "cube":
        a = norm(sub(s.vertices[1], s.vertices[0]))
        return a**3
    if s.kind == "tetrahedron":
        a = norm(sub(s.vertices[1], s.vertices[0]))
        return a**3 / (6.0 * math.sqrt(2.0))
    area, h = _base_area_height(s)
    return area * h / 3.0 if s.kind == "pyramid" else area * h


def surface_area(s: Any) -> float:
    if not isinstance(s, Solid3):
        raise TypeMismatch("surface area needs a solid")
    r = s.radius
    if s.kind == "sphere":
        return 4.0 * math.pi * r * r
    if s.kind == "cone":
        return math.pi * r * r + math.pi * r * math.hypot(r, norm(s.axis))
    if s.kind == "cylinder":
        return 2.0 * math.pi * r * r + 2.0 * math.pi * r * norm(s.axis)
    if s.kind == "cube":
        a = norm(sub(s.vertices[1], s.vertices[0]))
        return 6.0 * a * a
    if s.kind == "tetrahedron":
        a = norm(sub(s.vertices[1], s.vertices[0]))
        return math.sqrt(3.0) * a * a
    return sum(polygon3_area([s.vertices[i] for i in f]) for f in s.faces)


def distance3(a: Any, b: Any) -> float:
    """Euclidean distance between points, planes and vector lines (symmetric)."""
    if isinstance(b, Point3) and not isinstance(a, Point3):
        a, b = b, a
    if isinstance(a, Point3):
        if isinstance(b, Point3):
            return norm(sub(a, b))
        if isinstance(b, Plane3):
            return abs(dot(sub(a, b.point), b.normal))
        if isinstance(b, Vector3):
            u = unit(b.delta)
            return norm(cross(sub(a, b.p1), u))
    if isinstance(a, Plane3) and isinstance(b, Plane3):
        if norm(cross(a.normal, b.normal)) > 1e-12:
            return 0.0
        return abs(dot(sub(b.point, a.point), a.normal))
    if isinstance(a, Vector3) and isinstance(b, Vector3):
        n = cross(a.delta, b.delta)
        if norm(n) <= 1e-12 * norm(a.delta) * norm(b.delta):
            return distance3(a.p1, b)
        return abs(dot(sub(b.p1, a.p1), unit(n)))
    if isinstance(a, Plane3) and isinstance(b, Vector3) or isinstance(b, Plane3) and isinstance(a, Vector3):
        pl, v = (a, b) if isinstance(a, Plane3) else (b, a)
        if abs(dot(unit(v.delta), pl.normal)) > 1e-12:
            return 0.0
        return distance3(v.p1, pl)
    raise TypeMismatch("unsupported 3D distance pair")


# ------------------------------------------------------------- cross-section


def _edges(s: Solid3) -> set[tuple[int, int]]:
    out = set()
    for f in s.faces:
        for i in range(len(f)):
            a, b = f[i], f[(i + 1) % len(f)]
            out.add((min(a, b), max(a, b)))
    return out


def order_ccw(pts: Sequence[Point3], normal: Vec) -> list[Point3]:
    c = scale(
        (sum(p.x for p in pts), sum(p.y for p in pts), sum(p.z for p in pts)),
        1.0 / len(pts),
    )
    seed = (1.0, 0.0, 0.0) if abs(normal[0]) < 0.9 else (0.0, 1.0, 0.0)
    e1 = unit(cross(normal, seed))
    e2 = cross(normal, e1)
    return sorted(pts, key=lambda p: math.atan2(dot(sub(p, c), e2), dot(sub(p, c), e1)))


def cross_section(plane: Plane3, s: Any, policy: TolerancePolicy = DEFAULT_POLICY) -> Polygon3:
    if not isinstance(s, Solid3):
        raise TypeMismatch("cross-section needs a solid")
    if not s.polyhedral:
        raise UnsupportedTool(f"cross-section of a {s.kind} is not supported")
    if not isinstance(plane, Plane3):
        raise TypeMismatch("cross-section needs a plane")
    dist = [dot(sub(v, plane.point), plane.normal) for v in s.vertices]
    eps = 1e-12 * max(1.0, max(abs(c) for v in s.vertices for c in v))
    pts: list[Point3] = []
    for i, v in enumerate(s.vertices):
        if abs(dist[i]) <= eps:
            pts.append(v)
    for i, j in _edges(s):
        di, dj = dist[i], dist[j]
        if (di < -eps and dj > eps) or (di > eps and dj < -eps):
            t = di / (di - dj)
            pi, pj = s.vertices[i], s.vertices[j]
            pts.append(as_point(add(pi, scale(sub(pj, pi), t))))
    uniq: list[Point3] = []
    for p in pts:
        if all(norm(sub(p, q)) > 1e-9 * max(1.0, norm(p)) for q in uniq):
            uniq.append(p)
    if len(uniq) < 3:
        raise PreconditionFailed("plane does not cut the solid")
    ordered = order_ccw(uniq, plane.normal)
    if polygon3_area(ordered) <= policy.abs_tol**2:
        raise PreconditionFailed("plane only touches the solid")
    return Polygon3(tuple(ordered))
