"""Typed tool catalog: specs, profiles, ablation modes, overlays, validation and export."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from .errors import TypeMismatch, UnsupportedTool
from .expr import ParseError, parse_expr, parse_relation

SEMANTIC_TYPES = (
    "object_name",
    "point_name",
    "linelike_name",
    "conic_name",
    "scalar",
    "expr_text",
    "count",
    "enum",
    "color",
    "flag",
    "point_list",
    "text",
)

GROUPS = (
    "points",
    "lines",
    "circles_conics",
    "polygons_centers",
    "measurements",
    "functions_calculus",
    "other_construction",
    "transforms",
    "utility",
    "query_measure",
    "query_verify",
    "query_cas",
    "render",
    "solid3d",
)

ACTION_TYPES = ("construction", "query", "render", "delete")
PROFILES = ("solve2d", "solve3d", "render_pipeline")
MODES = ("full", "bare_signature", "no_measurement", "no_query", "no_delete")

IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")

# object kinds as stored on the canvas
LINELIKE_KINDS = ("line", "segment", "ray", "vector")
CIRCULAR_KINDS = ("circle", "arc", "sector", "semicircle")
CONIC_KINDS = CIRCULAR_KINDS + ("ellipse", "parabola", "hyperbola")
CURVE_KINDS = LINELIKE_KINDS + CONIC_KINDS + ("function", "polygon", "curve")
POINT_KINDS = ("point",)
POINT_ANY = ("point", "point3d")
SOLID_KINDS = ("pyramid", "prism", "cone", "cylinder", "sphere", "tetrahedron", "cube")
NUMERIC_KINDS = ("number", "angle")

_DEFAULT_ACCEPTS = {
    "point_name": POINT_KINDS,
    "linelike_name": LINELIKE_KINDS,
    "conic_name": CONIC_KINDS,
    "point_list": POINT_KINDS,
}

NAMED_COLORS = {
    "black": "#000000",
    "white": "#ffffff",
    "red": "#d32f2f",
    "green": "#388e3c",
    "blue": "#1565c0",
    "orange": "#ef6c00",
    "purple": "#6a1b9a",
    "gray": "#757575",
    "grey": "#757575",
    "brown": "#6d4c41",
    "yellow": "#fbc02d",
    "cyan": "#00838f",
    "magenta": "#ad1457",
}


class UnknownOverlayTarget(ValueError):
    pass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    doc: str = ""
    required: bool = True
    default: Any = None
    choices: tuple | None = None
    accepts: tuple[str, ...] | None = None  # object kinds allowed for *_name params
    new_name: bool = False  # names the object being created

    def allowed_kinds(self) -> tuple[str, ...] | None:
        if self.accepts is not None:
            return self.accepts
        return _DEFAULT_ACCEPTS.get(self.type)

    def json_schema(self) -> dict:
        base = {
            "point_name": "string",
            "linelike_name": "string",
            "conic_name": "string",
            "object_name": "string",
            "expr_text": "string",
            "color": "string",
            "text": "string",
            "count": "integer",
            "flag": "boolean",
        }
        out: dict[str, Any] = {"x-semantic": self.type, "description": self.doc}
        if self.type in base:
            out["type"] = base[self.type]
        elif self.type == "scalar":
            out["type"] = ["number", "string"]
        elif self.type == "point_list":
            out["type"] = "array"
            out["items"] = {"type": "string"}
        elif self.type == "enum":
            out["enum"] = list(self.choices or ())
        if self.default is not None:
            out["default"] = self.default
        if self.accepts:
            out["x-accepts"] = list(self.accepts)
        return out


@dataclass(frozen=True)
class ToolSpec:
    name: str
    group: str
    description: str
    params: tuple[ParamSpec, ...]
    action_type: str

    def param(self, name: str) -> ParamSpec | None:
        for p in self.params:
            if p.name == name:
                return p
        return None

    def to_json(self) -> dict:
        props = {p.name: p.json_schema() for p in self.params}
        return {
            "name": self.name,
            "description": self.description,
            "group": self.group,
            "action_type": self.action_type,
            "parameters": {
                "type": "object",
                "properties": props,
                "required": [p.name for p in self.params if p.required],
                "additionalProperties": False,
            },
        }


@dataclass(frozen=True)
class OverlayPatch:
    tool: str
    description: str
    param: str | None = None

    def to_json(self) -> dict:
        return {"tool": self.tool, "param": self.param, "description": self.description}

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> OverlayPatch:
        return cls(tool=d["tool"], description=d["description"], param=d.get("param"))


@dataclass(frozen=True)
class Action:
    tool: str
    args: Mapping[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"tool": self.tool, "args": dict(self.args)}

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> Action:
        return cls(tool=d["tool"], args=dict(d.get("args") or {}))


# ---------------------------------------------------------------- definitions


def P(name: str, type: str, doc: str = "", required: bool = True, **kw: Any) -> ParamSpec:
    return ParamSpec(name, type, doc, required, **kw)


def _new(doc: str = "name of the new object") -> ParamSpec:
    return ParamSpec("name", "object_name", doc, True, new_name=True)


def _pt(name: str, doc: str, required: bool = True) -> ParamSpec:
    return ParamSpec(name, "point_name", doc, required)


def _pt3(name: str, doc: str, required: bool = True) -> ParamSpec:
    return ParamSpec(name, "point_name", doc, required, accepts=POINT_ANY)


def _obj(name: str, doc: str, accepts: tuple[str, ...] | None = None, required: bool = True) -> ParamSpec:
    return ParamSpec(name, "object_name", doc, required, accepts=accepts)


def _sc(name: str, doc: str, required: bool = True, default: Any = None) -> ParamSpec:
    return ParamSpec(name, "scalar", doc, required, default=default)


def _spec(name: str, group: str, description: str, *params: ParamSpec) -> ToolSpec:
    if name.startswith("query_"):
        at = "query"
    elif name.startswith("render_") or name in ("set_label_visible", "set_object_visible"):
        at = "render"
    elif name == "delete_object":
        at = "delete"
    else:
        at = "construction"
    return ToolSpec(name, group, description, tuple(params), at)


_FN = ("function",)
_RANGE_LO = "left end of the search interval"
_RANGE_HI = "right end of the search interval"

SOLVE_SPECS: tuple[ToolSpec, ...] = (
    # points
    _spec(
        "add_point", "points",
        "Places a free point at coordinates (x, y). Coordinates may be numbers or expressions over existing numeric objects.",
        _new(), _sc("x", "x-coordinate"), _sc("y", "y-coordinate"),
    ),
    _spec(
        "add_point_on", "points",
        "Places a point constrained to a path such as a line, circle, conic, polygon or function graph. "
        "Parameter t picks the position: the fraction from p1 to p2 on line-like objects, the fraction of a full turn "
        "counter-clockwise from east on circles, the x-value on function graphs.",
        _new(), _obj("path", "path object", CURVE_KINDS), _sc("t", "position along the path", False, 0.5),
    ),
    _spec(
        "add_intersect", "points",
        "Creates the intersection of two curves. Both obj1 and obj2 must be lines, segments, rays, circles, conics, "
        "polygons or function graphs; points and numbers are rejected. Index k (1-based) selects the k-th intersection "
        "counted along obj1: by signed position along a line, by counter-clockwise angle from east on a circle. "
        "Leave index out to store every intersection under the one name (a lone intersection is stored as a point). "
        "Refer to the result by exactly the name you gave; names with _1 or _2 appended do not exist.",
        _new(), _obj("obj1", "first curve (not a point)", CURVE_KINDS), _obj("obj2", "second curve (not a point)", CURVE_KINDS),
        P("index", "count", "1-based intersection index", False),
    ),
    _spec("add_midpoint", "points", "Midpoint of two points.", _new(), _pt("p1", "first point"), _pt("p2", "second point")),
    # lines
    _spec("add_segment", "lines", "Segment between two distinct points.", _new(), _pt("p1", "start point"), _pt("p2", "end point")),
    _spec("add_line", "lines", "Infinite line through two distinct points.", _new(), _pt("p1", "first point"), _pt("p2", "second point")),
    _spec("add_ray", "lines", "Ray starting at one point and passing through another.", _new(), _pt("start", "origin of the ray"), _pt("through", "point the ray passes through")),
    _spec("add_vector", "lines", "Vector from a start point to an end point.", _new(), _pt("start", "tail"), _pt("end", "head")),
    _spec(
        "add_perpendicular_line", "lines",
        "Line through a point perpendicular to an existing line, segment, ray or vector. The reference must already be a "
        "line-like object, never a point: to get the perpendicular at A to AB, first create L = Line(A, B) and then pass L. "
        "The new line's direction is the reference direction turned 90 degrees counter-clockwise.",
        _new(), _pt("point", "point the line passes through"), P("line", "linelike_name", "reference line-like object"),
    ),
    _spec(
        "add_perpendicular_bisector", "lines",
        "Perpendicular bisector of the segment between two points.",
        _new(), _pt("p1", "first endpoint"), _pt("p2", "second endpoint"),
    ),
    _spec(
        "add_parallel_line", "lines",
        "Line through a point parallel to an existing line-like object.",
        _new(), _pt("point", "point the line passes through"), P("line", "linelike_name", "reference line-like object"),
    ),
    _spec(
        "add_angle_bisector", "lines",
        "Interior bisector of angle ABC; the line passes through the vertex b.",
        _new(), _pt("a", "point on the first arm"), _pt("b", "vertex"), _pt("c", "point on the second arm"),
    ),
    _spec(
        "add_tangent", "lines",
        "Tangent line(s) from a point to a circle, ellipse, parabola or hyperbola. Always use this tool for tangents rather "
        "than drawing them by hand with segments or lines. An outside point gives two lines stored together under the name "
        "you provide (no _1 or _2 suffixes); a point on the curve gives one. When a single contact point is needed, "
        "a robust alternative is the intersection of the curve with the circle whose diameter joins the point and the centre.",
        _new(), _pt("point", "point the tangents pass through"), P("conic", "conic_name", "circle or conic"),
    ),
    _spec(
        "add_tangent_conic_conic", "lines",
        "Common tangent lines of two circles (up to four), stored together under one name and ordered by the direction "
        "of their normals. Other conic pairs are not supported.",
        _new(), P("conic1", "conic_name", "first circle"), P("conic2", "conic_name", "second circle"),
    ),
    # circles and conics
    _spec(
        "add_circle", "circles_conics",
        "Circle with the given centre and either a radius or a point on the circle. Give exactly one of radius and point.",
        _new(), _pt("center", "centre point"), _sc("radius", "radius (number or expression)", False),
        _pt("point", "point on the circle", False),
    ),
    _spec(
        "add_arc", "circles_conics",
        "Circular arc about a centre, running counter-clockwise from the start point to the direction of the end point.",
        _new(), _pt("center", "centre"), _pt("start", "start point (fixes the radius)"), _pt("end", "point fixing the end direction"),
    ),
    _spec(
        "add_sector", "circles_conics",
        "Circular sector about a centre, swept counter-clockwise from the start point to the direction of the end point.",
        _new(), _pt("center", "centre"), _pt("start", "start point (fixes the radius)"), _pt("end", "point fixing the end direction"),
    ),
    _spec(
        "add_semicircle", "circles_conics",
        "Half circle on the diameter p1p2, drawn on the left-hand side when walking from p1 to p2. So p1 left of p2 puts "
        "the arc above, p1 right of p2 puts it below, p1 below p2 puts it on the left, p1 above p2 puts it on the right. "
        "Swap p1 and p2 to get the other half. Any point on the arc sees the diameter under a right angle.",
        _new(), _pt("p1", "first diameter endpoint"), _pt("p2", "second diameter endpoint"),
    ),
    _spec(
        "add_circle_3_points", "circles_conics",
        "Circle through three non-collinear points.",
        _new(), _pt("p1", "first point"), _pt("p2", "second point"), _pt("p3", "third point"),
    ),
    _spec(
        "add_incircle", "circles_conics",
        "Inscribed circle of the triangle with the given vertices.",
        _new(), _pt("p1", "first vertex"), _pt("p2", "second vertex"), _pt("p3", "third vertex"),
    ),
    _spec(
        "add_ellipse", "circles_conics",
        "Ellipse with two foci passing through a point; the point must not lie on the segment between the foci.",
        _new(), _pt("focus1", "first focus"), _pt("focus2", "second focus"), _pt("point", "point on the ellipse"),
    ),
    _spec(
        "add_parabola", "circles_conics",
        "Parabola from its focus and directrix line; the focus must not lie on the directrix.",
        _new(), _pt("focus", "focus"), P("directrix", "linelike_name", "directrix line"),
    ),
    _spec(
        "add_hyperbola", "circles_conics",
        "Hyperbola with two foci passing through a point.",
        _new(), _pt("focus1", "first focus"), _pt("focus2", "second focus"), _pt("point", "point on the hyperbola"),
    ),
    # polygons and centres
    _spec(
        "add_polygon", "polygons_centers",
        "Polygon through the listed vertices in order (at least three points).",
        _new(), P("vertices", "point_list", "ordered vertex names"),
    ),
    _spec(
        "add_regular_polygon", "polygons_centers",
        "Regular n-gon with first edge p1p2; the polygon lies to the left of p1->p2, so vertices run counter-clockwise.",
        _new(), _pt("p1", "first vertex"), _pt("p2", "second vertex"), P("n", "count", "number of vertices (at least 3)"),
    ),
    _spec(
        "add_vertex", "polygons_centers",
        "Extracts the vertex with the given 1-based index from a polygon.",
        _new(), _obj("polygon", "polygon", ("polygon",)), P("index", "count", "1-based vertex index"),
    ),
    _spec(
        "add_center", "polygons_centers",
        "Centre of a circle, arc, ellipse or hyperbola.",
        _new(), _obj("conic", "circle or centred conic", CIRCULAR_KINDS + ("ellipse", "hyperbola")),
    ),
    _spec(
        "add_triangle_center", "polygons_centers",
        "Triangle centre of the given kind: 1 incenter, 2 centroid, 3 circumcenter, 4 orthocenter.",
        _new(), _pt("p1", "first vertex"), _pt("p2", "second vertex"), _pt("p3", "third vertex"),
        P("kind", "enum", "1 incenter, 2 centroid, 3 circumcenter, 4 orthocenter", choices=(1, 2, 3, 4)),
    ),
    # measurement constructions
    _spec(
        "add_angle", "measurements",
        "Angle object at vertex b, measured counter-clockwise from ray b->a to ray b->c, valued in degrees.",
        _new(), _pt("a", "point on the first arm"), _pt("b", "vertex"), _pt("c", "point on the second arm"),
    ),
    _spec(
        "add_distance", "measurements",
        "Numeric object holding the shortest distance between two objects.",
        _new(), _obj("obj1", "first object"), _obj("obj2", "second object"),
    ),
    _spec(
        "add_area", "measurements",
        "Numeric object holding the area of a polygon, circle, sector or ellipse.",
        _new(), _obj("obj", "closed shape"),
    ),
    _spec(
        "add_slope", "measurements",
        "Numeric object holding the slope of a line-like object.",
        _new(), P("line", "linelike_name", "line-like object"),
    ),
    # functions and calculus
    _spec(
        "add_function", "functions_calculus",
        "Defines a function f(x) = expr. Use explicit * for products and pi for the constant; other functions and numeric "
        "objects may be referenced by name. Optional x_min/x_max restrict the domain.",
        _new(), P("expr", "expr_text", "body in the variable x"),
        _sc("x_min", "domain start", False), _sc("x_max", "domain end", False),
    ),
    _spec("add_derivative", "functions_calculus", "Derivative of an existing function.", _new(), _obj("function", "function", _FN)),
    _spec(
        "add_integral_function", "functions_calculus",
        "Antiderivative of a function, zero at the given lower limit.",
        _new(), _obj("function", "function", _FN), _sc("lower", "point where the antiderivative is zero", False, 0.0),
    ),
    _spec(
        "add_inflection_point", "functions_calculus",
        "Inflection point(s) of a function inside an interval (one point, or all found points under one name).",
        _new(), _obj("function", "function", _FN), _sc("x_min", _RANGE_LO, False, -10.0), _sc("x_max", _RANGE_HI, False, 10.0),
    ),
    _spec(
        "add_asymptote", "functions_calculus",
        "Vertical, horizontal or oblique asymptote line(s) of a function, stored under one name.",
        _new(), _obj("function", "function", _FN),
    ),
    _spec(
        "add_curve", "functions_calculus",
        "Parametric curve (x(t), y(t)) for t between t_min and t_max.",
        _new(), P("x_expr", "expr_text", "x as an expression in t"), P("y_expr", "expr_text", "y as an expression in t"),
        _sc("t_min", "parameter start"), _sc("t_max", "parameter end"),
    ),
    _spec(
        "add_roots", "functions_calculus",
        "Root point(s) of a function within an interval.",
        _new(), _obj("function", "function", _FN), _sc("x_min", _RANGE_LO, False, -1000.0), _sc("x_max", _RANGE_HI, False, 1000.0),
    ),
    _spec(
        "add_turning_point", "functions_calculus",
        "Local extremum point(s) of a function within an interval.",
        _new(), _obj("function", "function", _FN), _sc("x_min", _RANGE_LO, False, -10.0), _sc("x_max", _RANGE_HI, False, 10.0),
    ),
    # other constructions
    _spec(
        "add_slider", "other_construction",
        "Free numeric value that other objects may reference by name; change it later with set_value.",
        _new(), _sc("value", "initial value"), _sc("min", "slider minimum", False, -5.0), _sc("max", "slider maximum", False, 5.0),
        _sc("step", "slider increment", False, 0.1),
    ),
    _spec(
        "add_best_fit_line", "other_construction",
        "Least-squares regression line through at least two points.",
        _new(), P("points", "point_list", "names of the data points"),
    ),
    _spec(
        "add_inequality", "other_construction",
        "Region of the plane satisfying an inequality in x and y, for example y < 2*x + 1.",
        _new(), P("inequality", "expr_text", "relation in x and y"),
    ),
    _spec(
        "add_integral_shade", "other_construction",
        "Shaded region under a function between a and b; its value is the signed definite integral.",
        _new(), _obj("function", "function", _FN), _sc("a", "left limit"), _sc("b", "right limit"),
    ),
    _spec(
        "add_text", "other_construction",
        "Free text label placed at (x, y).",
        _new(), P("text", "text", "label text"), _sc("x", "anchor x", False, 0.0), _sc("y", "anchor y", False, 0.0),
    ),
    # transforms
    _spec(
        "transform_reflect_line", "transforms",
        "Mirror image of an object across a line.",
        _new(), _obj("obj", "object to reflect"), P("line", "linelike_name", "mirror line"),
    ),
    _spec(
        "transform_reflect_point", "transforms",
        "Image of an object under the half-turn about a point.",
        _new(), _obj("obj", "object to reflect"), _pt("point", "centre of the half-turn"),
    ),
    _spec(
        "transform_rotate", "transforms",
        "Image of an object rotated counter-clockwise by an angle in degrees about a centre (the origin when omitted).",
        _new(), _obj("obj", "object to rotate"), _sc("angle", "rotation angle in degrees"), _pt("center", "rotation centre", False),
    ),
    _spec(
        "transform_translate", "transforms",
        "Image of an object shifted by a vector.",
        _new(), _obj("obj", "object to move"), _obj("vector", "translation vector", ("vector",)),
    ),
    _spec(
        "transform_dilate", "transforms",
        "Image of an object scaled by a nonzero factor from a centre (the origin when omitted).",
        _new(), _obj("obj", "object to scale"), _sc("factor", "scale factor"), _pt("center", "dilation centre", False),
    ),
    # utility
    _spec(
        "delete_object", "utility",
        "Deletes an object together with every object that depends on it.",
        _obj("name", "object to delete"),
    ),
    _spec(
        "set_value", "utility",
        "Sets a slider or free number to a new value; every dependent object is recomputed.",
        _obj("name", "slider or free number", NUMERIC_KINDS), _sc("value", "new value"),
    ),
    _spec(
        "rename_object", "utility",
        "Renames an object; dependants keep working under the new name.",
        _obj("name", "current name"), P("new_name", "object_name", "new name", new_name=True),
    ),
    _spec("set_label_visible", "utility", "Shows or hides an object's label.", _obj("name", "object"), P("visible", "flag", "true to show")),
    _spec("set_object_visible", "utility", "Shows or hides an object in the drawing.", _obj("name", "object"), P("visible", "flag", "true to show")),
    # measurement queries
    _spec(
        "query_angle", "query_measure",
        "Measures the angle at vertex b, sweeping counter-clockwise from ray b->a to ray b->c; returns degrees in [0, 360). "
        "Point order matters: Angle(A, B, C) and Angle(C, B, A) add up to 360. For a triangle ABC listed counter-clockwise, "
        "the interior angle at B is Angle(C, B, A). All three arguments must be existing points.",
        _pt("a", "point on the first arm"), _pt("b", "vertex"), _pt("c", "point on the second arm"),
        P("name", "text", "optional label echoed in the observation", False),
    ),
    _spec("query_distance", "query_measure", "Shortest distance between two objects.", _obj("obj1", "first object"), _obj("obj2", "second object")),
    _spec("query_length", "query_measure", "Length of a segment, vector, arc, polygon boundary or parametric curve.", _obj("obj", "object")),
    _spec("query_perimeter", "query_measure", "Perimeter of a polygon, circle, sector or ellipse.", _obj("obj", "closed shape")),
    _spec("query_area", "query_measure", "Area of a polygon, circle, sector, circular segment or ellipse.", _obj("obj", "closed shape")),
    _spec("query_slope", "query_measure", "Slope of a line-like object; undefined for vertical lines.", P("line", "linelike_name", "line-like object")),
    _spec("query_radius", "query_measure", "Radius of a circle or arc.", _obj("obj", "circle or arc", CIRCULAR_KINDS)),
    _spec("query_x_coord", "query_measure", "x-coordinate of a point.", _pt("point", "point")),
    _spec("query_y_coord", "query_measure", "y-coordinate of a point.", _pt("point", "point")),
    # verification queries
    _spec("query_are_parallel", "query_verify", "Tests whether two line-like objects are parallel.", P("line1", "linelike_name", "first"), P("line2", "linelike_name", "second")),
    _spec("query_are_perpendicular", "query_verify", "Tests whether two line-like objects are perpendicular.", P("line1", "linelike_name", "first"), P("line2", "linelike_name", "second")),
    _spec(
        "query_is_tangent", "query_verify",
        "Tests whether a line touches a circle, conic or function graph, or whether two circles touch.",
        _obj("obj1", "line or circle", CURVE_KINDS), _obj("obj2", "curve", CURVE_KINDS),
    ),
    _spec(
        "query_is_in_region", "query_verify",
        "Tests whether a point satisfies an inequality region; points on the boundary count as inside.",
        _pt("point", "point"), _obj("region", "inequality region", ("region",)),
    ),
    _spec("query_are_equal", "query_verify", "Tests whether two objects are geometrically identical.", _obj("obj1", "first"), _obj("obj2", "second")),
    _spec("query_are_collinear", "query_verify", "Tests whether three points lie on one line.", _pt("p1", "first"), _pt("p2", "second"), _pt("p3", "third")),
    _spec(
        "query_are_concyclic", "query_verify",
        "Tests whether four points lie on one circle.",
        _pt("p1", "first"), _pt("p2", "second"), _pt("p3", "third"), _pt("p4", "fourth"),
    ),
    _spec(
        "query_are_congruent", "query_verify",
        "Tests whether two objects of the same kind are congruent (polygons: matching side lengths and angles).",
        _obj("obj1", "first"), _obj("obj2", "second"),
    ),
    # CAS queries
    _spec(
        "query_solve", "query_cas",
        "Solves an equation in one variable and returns the real solutions. Solutions are found numerically on [-1000, 1000] "
        "and flagged as such.",
        P("equation", "expr_text", "equation such as x^2 = 2"), P("var", "text", "unknown", False, default="x"),
    ),
    _spec(
        "query_nsolve", "query_cas",
        "Numeric roots of an equation in one variable within an interval.",
        P("equation", "expr_text", "equation such as sin(x) = 0.5"), P("var", "text", "unknown", False, default="x"),
        _sc("x_min", _RANGE_LO, False, -1000.0), _sc("x_max", _RANGE_HI, False, 1000.0),
    ),
    _spec(
        "query_definite_integral", "query_cas",
        "Numeric definite integral of an expression or function name between a and b.",
        P("expr", "expr_text", "integrand or function name"), _sc("a", "lower limit"), _sc("b", "upper limit"),
        P("var", "text", "integration variable", False, default="x"),
    ),
    _spec(
        "query_function_max", "query_cas",
        "Maximum value of a function on [a, b]; the observation also reports where it occurs.",
        _obj("function", "function", _FN), _sc("a", "interval start"), _sc("b", "interval end"),
    ),
    _spec(
        "query_function_min", "query_cas",
        "Minimum value of a function on [a, b]; the observation also reports where it occurs.",
        _obj("function", "function", _FN), _sc("a", "interval start"), _sc("b", "interval end"),
    ),
    _spec("query_is_defined", "query_cas", "Whether an object exists and has a defined value.", P("name", "text", "object name")),
    _spec("query_dependents", "query_cas", "Names of all objects that depend on the given object.", _obj("name", "object")),
)

SOLID_SPECS: tuple[ToolSpec, ...] = (
    _spec("add_point3d", "solid3d", "Free point at 3D coordinates (x, y, z).", _new(), _sc("x", "x"), _sc("y", "y"), _sc("z", "z")),
    _spec(
        "add_vector3d", "solid3d",
        "3D vector from start to end, or from the origin to start when end is omitted.",
        _new(), _pt3("start", "tail, or head when end is omitted"), _pt3("end", "head", False),
    ),
    _spec("add_plane", "solid3d", "Infinite plane through three non-collinear points.", _new(), _pt3("p1", "first"), _pt3("p2", "second"), _pt3("p3", "third")),
    _spec(
        "add_finite_plane", "solid3d",
        "Bounded parallelogram patch spanned at p1 by p2 - p1 and p3 - p1 (for display).",
        _new(), _pt3("p1", "corner"), _pt3("p2", "adjacent corner"), _pt3("p3", "other adjacent corner"),
    ),
    _spec(
        "add_perpendicular_plane", "solid3d",
        "Plane through a point perpendicular to a vector or line.",
        _new(), _pt3("point", "point on the plane"), _obj("line", "normal direction", ("vector3d",) + LINELIKE_KINDS),
    ),
    _spec("add_plane_bisector", "solid3d", "Plane of points equidistant from two points.", _new(), _pt3("p1", "first"), _pt3("p2", "second")),
    _spec(
        "add_pyramid", "solid3d",
        "Pyramid over a convex planar base polygon with the given apex.",
        _new(), P("base", "point_list", "base vertices in order", accepts=POINT_ANY), _pt3("apex", "apex"),
    ),
    _spec(
        "add_prism", "solid3d",
        "Prism obtained by sweeping a convex planar base polygon along a vector.",
        _new(), P("base", "point_list", "base vertices in order", accepts=POINT_ANY), _obj("vector", "translation", ("vector3d", "vector")),
    ),
    _spec(
        "add_cone", "solid3d",
        "Right circular cone from its base centre, apex and base radius.",
        _new(), _pt3("base_center", "centre of the base"), _pt3("apex", "apex"), _sc("radius", "base radius"),
    ),
    _spec(
        "add_cylinder", "solid3d",
        "Solid right circular cylinder from the centres of its two caps and its radius.",
        _new(), _pt3("base_center", "bottom centre"), _pt3("top_center", "top centre"), _sc("radius", "radius"),
    ),
    _spec(
        "add_sphere", "solid3d",
        "Sphere from a centre and either a radius or a point on the surface.",
        _new(), _pt3("center", "centre"), _sc("radius", "radius", False), _pt3("point", "point on the sphere", False),
    ),
    _spec(
        "add_tetrahedron", "solid3d",
        "Regular tetrahedron on an equilateral base p1 p2 p3; without p3 the base lies in the horizontal plane of p1 "
        "to the left of p1->p2. The apex is on the counter-clockwise side of the base.",
        _new(), _pt3("p1", "first base vertex"), _pt3("p2", "second base vertex"), _pt3("p3", "third base vertex", False),
    ),
    _spec(
        "add_cube", "solid3d",
        "Cube from three consecutive corners of one face; they must form a square corner (equal edges, right angle at p2).",
        _new(), _pt3("p1", "first corner"), _pt3("p2", "corner with the right angle"), _pt3("p3", "third corner"),
    ),
    _spec(
        "add_cross_section", "solid3d",
        "Polygon where a plane cuts a polyhedral solid, vertices ordered counter-clockwise about the plane normal.",
        _new(), _obj("plane", "cutting plane", ("plane",)), _obj("solid", "solid", SOLID_KINDS),
    ),
    _spec("add_net", "solid3d", "Unfolded net of a convex polyhedron (not supported by this engine).", _new(), _obj("solid", "solid", SOLID_KINDS)),
    _spec(
        "add_text_3d", "solid3d",
        "Text label anchored at a 3D point.",
        _new(), P("text", "text", "label text"), _pt3("position", "anchor point"),
    ),
    _spec(
        "add_surface_revolution", "solid3d",
        "Surface of revolution of a function about the x-axis (not supported by this engine).",
        _new(), _obj("function", "function", _FN), _sc("x_min", "start", False), _sc("x_max", "end", False),
    ),
    _spec("query_volume", "solid3d", "Volume of a solid.", _obj("solid", "solid", SOLID_KINDS)),
    _spec("query_surface_area", "solid3d", "Total surface area of a solid, caps and base included.", _obj("solid", "solid", SOLID_KINDS)),
    _spec("query_coords3d", "solid3d", "Coordinates (x, y, z) of a point.", _pt3("point", "point")),
    _spec(
        "render_set_3d_view", "solid3d",
        "Sets the 3D view: elevation angle, azimuth angle (degrees) and zoom scale.",
        _sc("x_angle", "elevation in degrees", False, 20.0), _sc("z_angle", "azimuth in degrees", False, 50.0),
        _sc("scale", "pixels per unit", False, 40.0), P("show_axes", "flag", "draw 3D axes", False),
    ),
)

RENDER_SPECS: tuple[ToolSpec, ...] = (
    _spec("render_set_color", "render", "Sets an object's colour (hex #rrggbb or a basic colour name).", _obj("obj", "object"), P("color", "color", "colour")),
    _spec(
        "render_set_line_style", "render", "Sets the stroke pattern of a curve.",
        _obj("obj", "object"), P("style", "enum", "stroke pattern", choices=("solid", "dashed", "dotted")),
    ),
    _spec("render_set_line_thickness", "render", "Sets stroke width in points.", _obj("obj", "object"), _sc("thickness", "width")),
    _spec(
        "render_set_point_style", "render", "Sets the marker shape of a point.",
        _obj("obj", "point"), P("style", "enum", "marker", choices=("dot", "circle", "cross", "square", "diamond", "triangle")),
    ),
    _spec("render_set_point_size", "render", "Sets the marker size of a point.", _obj("obj", "point"), P("size", "count", "marker size")),
    _spec("render_set_filling", "render", "Sets the fill opacity (0 to 1) of a closed shape.", _obj("obj", "object"), _sc("opacity", "fill opacity")),
    _spec(
        "render_set_decoration", "render", "Adds equal-length tick marks or arrow heads to a segment.",
        _obj("obj", "object"), P("decoration", "enum", "decoration", choices=("none", "tick1", "tick2", "tick3", "arrow", "double_arrow")),
    ),
    _spec("render_show_axes", "render", "Shows or hides the coordinate axes.", P("visible", "flag", "true to show")),
    _spec("render_show_grid", "render", "Shows or hides the grid.", P("visible", "flag", "true to show")),
    _spec("render_set_caption", "render", "Sets the caption text used by label mode 3.", _obj("obj", "object"), P("caption", "text", "caption")),
    _spec(
        "render_set_label_mode", "render",
        "Chooses what an object's label shows and makes the label visible: 0 name (A), 1 name and value (A = (1, 2)), "
        "2 value only ((1, 2)), 3 caption (set one first with render_set_caption).",
        _obj("obj", "object"), P("mode", "enum", "0, 1, 2 or 3", choices=(0, 1, 2, 3)),
    ),
    _spec(
        "render_set_coord_system", "render", "Sets the visible window in canvas units.",
        _sc("x_min", "left"), _sc("x_max", "right"), _sc("y_min", "bottom"), _sc("y_max", "top"),
    ),
    _spec(
        "render_add_right_angle_mark", "render", "Draws a right-angle square at vertex b between rays b->a and b->c.",
        _pt("a", "point on the first arm"), _pt("b", "vertex"), _pt("c", "point on the second arm"),
    ),
)

ALL_SPECS: dict[str, ToolSpec] = {s.name: s for s in SOLVE_SPECS + SOLID_SPECS + RENDER_SPECS}

MEASUREMENT_QUERIES = frozenset(s.name for s in SOLVE_SPECS if s.group == "query_measure")
QUERY_TOOLS = frozenset(s.name for s in SOLVE_SPECS if s.action_type == "query")
BARE_PREFIXES = ("add_", "transform_")
# Listed in the catalog, but the engine declines them before looking at arguments.
UNSUPPORTED_TOOLS = frozenset({"add_net", "add_surface_revolution"})

# ------------------------------------------------------------------- catalog


@dataclass(frozen=True)
class Catalog:
    profile: str
    mode: str
    specs: tuple[ToolSpec, ...]
    overlays: tuple[OverlayPatch, ...] = ()
    source: tuple[ToolSpec, ...] = ()  # specs before overlays

    def __len__(self) -> int:
        return len(self.specs)

    def __contains__(self, name: str) -> bool:
        return any(s.name == name for s in self.specs)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def get(self, name: str) -> ToolSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise UnsupportedTool(f"tool {name!r} is not available in this catalog")

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.specs:
            out[s.action_type] = out.get(s.action_type, 0) + 1
        return out

    def with_overlays(self, overlays: Sequence[OverlayPatch]) -> Catalog:
        return _apply_overlays(self.profile, self.mode, self.source or self.specs, tuple(self.overlays) + tuple(overlays))

    def without_overlays(self) -> Catalog:
        base = self.source or self.specs
        return Catalog(self.profile, self.mode, base, (), base)

    def to_json(self) -> dict:
        tools = [s.to_json() for s in self.specs]
        return {
            "format_version": 1,
            "profile": self.profile,
            "mode": self.mode,
            "overlays": [o.to_json() for o in self.overlays],
            "tools": tools,
            "digest": digest_of(tools),
        }

    @property
    def digest(self) -> str:
        return digest_of([s.to_json() for s in self.specs])


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def digest_of(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def _strip(spec: ToolSpec) -> ToolSpec:
    return replace(spec, description="", params=tuple(replace(p, doc="") for p in spec.params))


def _apply_overlays(profile: str, mode: str, source: tuple[ToolSpec, ...], overlays: tuple[OverlayPatch, ...]) -> Catalog:
    by_name = {s.name: s for s in source}
    for o in overlays:
        spec = by_name.get(o.tool)
        if spec is None:
            raise UnknownOverlayTarget(f"overlay targets unknown tool {o.tool!r}")
        if o.param is None:
            spec = replace(spec, description=o.description)
        else:
            if spec.param(o.param) is None:
                raise UnknownOverlayTarget(f"overlay targets unknown parameter {o.tool}.{o.param}")
            spec = replace(
                spec, params=tuple(replace(p, doc=o.description) if p.name == o.param else p for p in spec.params)
            )
        by_name[o.tool] = spec
    specs = tuple(by_name[s.name] for s in source)
    return Catalog(profile, mode, specs, overlays, source)


def build_catalog(profile: str = "solve2d", mode: str = "full", overlays: Iterable[OverlayPatch] = ()) -> Catalog:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    specs = list(SOLVE_SPECS)
    if profile == "solve3d":
        specs += SOLID_SPECS
    elif profile == "render_pipeline":
        specs += RENDER_SPECS
    if mode == "no_measurement":
        specs = [s for s in specs if s.name not in MEASUREMENT_QUERIES]
    elif mode == "no_query":
        specs = [s for s in specs if s.action_type != "query"]
    elif mode == "no_delete":
        specs = [s for s in specs if s.name != "delete_object"]
    elif mode == "bare_signature":
        specs = [_strip(s) if s.name.startswith(BARE_PREFIXES) else s for s in specs]
    return _apply_overlays(profile, mode, tuple(specs), tuple(overlays))


def load_overlays(data: Any) -> list[OverlayPatch]:
    items = data.get("overlays", data) if isinstance(data, dict) else data
    return [OverlayPatch.from_json(d) for d in items]


# ---------------------------------------------------------------- validation


def _bad(param: str, message: str) -> TypeMismatch:
    return TypeMismatch(message, arg=param)


def _as_name(p: ParamSpec, v: Any) -> str:
    if not isinstance(v, str) or not IDENT_RE.match(v.strip()):
        raise _bad(p.name, f"parameter '{p.name}' must be an object name, got {v!r}")
    return v.strip()


def _as_scalar(p: ParamSpec, v: Any) -> Any:
    if isinstance(v, bool):
        raise _bad(p.name, f"parameter '{p.name}' must be a number or expression")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        text = v.strip()
        try:
            return float(text)
        except ValueError:
            pass
        try:
            parse_expr(text)
        except ParseError as exc:
            raise _bad(p.name, f"parameter '{p.name}': {exc}") from None
        return text
    raise _bad(p.name, f"parameter '{p.name}' must be a number or expression")


def _as_count(p: ParamSpec, v: Any) -> int:
    if isinstance(v, bool):
        raise _bad(p.name, f"parameter '{p.name}' must be an integer")
    if isinstance(v, str):
        try:
            v = float(v.strip())
        except ValueError:
            raise _bad(p.name, f"parameter '{p.name}' must be an integer") from None
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    if not isinstance(v, int):
        raise _bad(p.name, f"parameter '{p.name}' must be an integer")
    return v


def _as_enum(p: ParamSpec, v: Any) -> Any:
    for c in p.choices or ():
        if v == c and not isinstance(v, bool):
            return c
        if isinstance(c, int) and isinstance(v, str) and v.strip().lstrip("-").isdigit() and int(v) == c:
            return c
        if isinstance(c, str) and isinstance(v, str) and v.strip().lower() == c:
            return c
    raise _bad(p.name, f"parameter '{p.name}' must be one of {list(p.choices or ())}, got {v!r}")


def _as_color(p: ParamSpec, v: Any) -> str:
    if isinstance(v, str):
        t = v.strip().lower()
        if t in NAMED_COLORS:
            return NAMED_COLORS[t]
        if re.fullmatch(r"#[0-9a-f]{6}", t):
            return t
        if re.fullmatch(r"#[0-9a-f]{3}", t):
            return "#" + "".join(ch * 2 for ch in t[1:])
    raise _bad(p.name, f"parameter '{p.name}' must be a colour (#rrggbb or a basic colour name)")


def _as_flag(p: ParamSpec, v: Any) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, int) and v in (0, 1):
        return bool(v)
    if isinstance(v, str) and v.strip().lower() in ("true", "false", "1", "0"):
        return v.strip().lower() in ("true", "1")
    raise _bad(p.name, f"parameter '{p.name}' must be true or false")


def _as_point_list(p: ParamSpec, v: Any) -> list[str]:
    if isinstance(v, str):
        v = [s for s in re.split(r"[,\s]+", v.strip()) if s]
    if not isinstance(v, (list, tuple)) or not v:
        raise _bad(p.name, f"parameter '{p.name}' must be a list of point names")
    return [_as_name(p, x) for x in v]


def _as_expr_text(p: ParamSpec, v: Any) -> str:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = repr(float(v))
    if not isinstance(v, str) or not v.strip():
        raise _bad(p.name, f"parameter '{p.name}' must be an expression")
    text = v.strip()
    try:
        parse_relation(text)
    except ParseError as exc:
        raise _bad(p.name, f"parameter '{p.name}': {exc}") from None
    return text


def _as_text(p: ParamSpec, v: Any) -> str:
    if not isinstance(v, str):
        raise _bad(p.name, f"parameter '{p.name}' must be text")
    return v


_COERCE = {
    "object_name": _as_name,
    "point_name": _as_name,
    "linelike_name": _as_name,
    "conic_name": _as_name,
    "scalar": _as_scalar,
    "expr_text": _as_expr_text,
    "count": _as_count,
    "enum": _as_enum,
    "color": _as_color,
    "flag": _as_flag,
    "point_list": _as_point_list,
    "text": _as_text,
}


def validate_call(catalog: Catalog, tool: str, raw_args: Mapping[str, Any] | None, state: Any = None) -> Action:
    """Check a raw call against the catalog and return a normalized :class:`Action`.

    With ``state`` (a canvas) the kinds of referenced objects are checked too;
    names that do not exist are left for the canvas to report.
    """
    spec = catalog.get(tool) if tool in catalog else None
    if spec is None:
        raise UnsupportedTool(f"tool {tool!r} is not available in this catalog")
    if tool in UNSUPPORTED_TOOLS:
        raise UnsupportedTool(f"{tool} is not supported by this engine")
    raw = dict(raw_args or {})
    if not isinstance(raw_args, Mapping) and raw_args is not None:
        raise TypeMismatch("arguments must be an object")
    known = {p.name for p in spec.params}
    for key in raw:
        if key not in known:
            raise _bad(key, f"{tool} has no parameter '{key}'")
    out: dict[str, Any] = {}
    for p in spec.params:
        v = raw.get(p.name)
        if v is None:
            if p.required:
                raise _bad(p.name, f"{tool} requires parameter '{p.name}'")
            if p.default is not None:
                out[p.name] = p.default
            continue
        out[p.name] = _COERCE[p.type](p, v)
        if state is not None:
            _check_kinds(state, p, out[p.name])
    return Action(tool, out)


def _check_kinds(state: Any, p: ParamSpec, value: Any) -> None:
    allowed = p.allowed_kinds()
    if allowed is None or p.new_name:
        return
    names = value if isinstance(value, list) else [value]
    for n in names:
        kind = state.kind_of(n) if hasattr(state, "kind_of") else None
        if kind is None:
            continue
        if kind not in allowed:
            raise _bad(p.name, f"parameter '{p.name}' must name a {' or '.join(allowed)}, but '{n}' is a {kind}")


def export_catalog(catalog: Catalog) -> str:
    return json.dumps(catalog.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
