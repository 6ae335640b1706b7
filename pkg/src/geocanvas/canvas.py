"""The construction canvas: named objects, their dependency DAG and deterministic transitions.

A :class:`Canvas` is a single-writer session.  :meth:`Canvas.apply` runs one
tool call and returns an :class:`Observation`; a failed call in strict mode
leaves the canvas exactly as it was.  The module-level functions
(:func:`apply_action`, :func:`delete_cascade`, ...) are pure wrappers that
work on copies.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from . import ops
from .errors import (
    SILENT_CODES,
    EngineFailure,
    EntityNotFound,
    GeoError,
    NameConflict,
    PreconditionFailed,
    TypeMismatch,
)
from .expr import (
    RESERVED_NAMES,
    ParseError,
    Relation,
    UnboundVariable,
    parse_expr,
    parse_relation,
    referenced_names,
    relation_text,
    rename_names,
    to_text,
)
from .numeric import UNDEFINED, fmt_number, is_undefined
from .toolspec import ALL_SPECS, Action, Catalog, ToolSpec, canonical_json, validate_call

FORMAT_VERSION = 1
MODES = ("strict", "silent")
STYLE_PRESETS = ("default", "textbook")

CLOSED_KINDS = frozenset(
    {"circle", "sector", "semicircle", "ellipse", "polygon", "region", "integral", "polygon3d",
     "pyramid", "prism", "cone", "cylinder", "sphere", "tetrahedron", "cube", "plane"}
)
POINTISH = frozenset({"point", "point3d"})

_PRESETS: dict[str, dict[str, Any]] = {
    "default": {
        "point_color": "#1565c0",
        "color": "#37474f",
        "thickness": 2.0,
        "point_size": 5,
        "opacity": 0.25,
        "axes": True,
        "grid": True,
    },
    "textbook": {
        "point_color": "#000000",
        "color": "#000000",
        "thickness": 1.0,
        "point_size": 3,
        "opacity": 0.0,
        "axes": False,
        "grid": False,
    },
}

DEFAULT_VIEW3D = {"x_angle": 20.0, "z_angle": 50.0, "scale": 40.0, "show_axes": True}


def preset_style(preset: str, kind: str) -> dict[str, Any]:
    p = _PRESETS[preset]
    return {
        "color": p["point_color"] if kind in POINTISH else p["color"],
        "thickness": p["thickness"],
        "point_size": p["point_size"],
        "opacity": p["opacity"] if kind in CLOSED_KINDS else 0.0,
    }


def default_style(preset: str, kind: str) -> dict[str, Any]:
    style = {
        "line_style": "solid",
        "point_style": "dot",
        "decoration": "none",
        "visible": True,
        "label_visible": kind in POINTISH,
        "label_mode": 0,
        "caption": "",
    }
    style.update(preset_style(preset, kind))
    return style


@dataclass
class CanvasObject:
    name: str
    kind: str
    tool: str
    args: dict[str, Any]
    parents: tuple[str, ...]
    value: Any
    style: dict[str, Any] = field(default_factory=dict)

    @property
    def defined(self) -> bool:
        return not is_undefined(self.value)

    def printable(self) -> str:
        return ops.describe(self.kind, self.value)

    def record(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "definition": {"tool": self.tool, "args": dict(self.args), "parents": list(self.parents)},
            "value": ops.snapshot(self.value),
            "style": dict(self.style),
        }


@dataclass(frozen=True)
class Observation:
    """Engine verdict for one action.

    ``kind`` is one of created, value, deleted, style, updated or error.
    """

    kind: str
    tool: str
    payload: Mapping[str, Any]

    @property
    def ok(self) -> bool:
        return self.kind != "error"

    @property
    def code(self) -> str | None:
        return self.payload.get("code") if self.kind == "error" else None

    @property
    def value(self) -> Any:
        return self.payload.get("value")

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "tool": self.tool, "payload": _jsonable(self.payload)}

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> Observation:
        return cls(d["kind"], d["tool"], dict(d.get("payload") or {}))

    def text(self) -> str:
        """One-line rendering shown to a policy."""
        p = self.payload
        if self.kind == "error":
            arg = f" (argument '{p['offending_arg']}')" if p.get("offending_arg") else ""
            return f"Error[{p['code']}] in {self.tool}{arg}: {p['message']}"
        if self.kind in ("created", "updated"):
            verb = "Created" if self.kind == "created" else "Updated"
            parts = [f"{o['name']} ({o['kind']}) = {o['value']}" for o in p.get("objects", [])]
            if p.get("renamed_from"):
                verb = f"Renamed {p['renamed_from']} ->"
            return f"{verb} " + "; ".join(parts) if parts else f"{verb} nothing"
        if self.kind == "deleted":
            return "Deleted " + ", ".join(p.get("names", []))
        if self.kind == "style":
            names = p.get("names") or []
            return "Style updated" + (" for " + ", ".join(names) if names else "")
        units = p.get("units") or ""
        out = f"{self.tool} = {p.get('text')}" + (f" {units}" if units and units != "deg" else "")
        extra = {k: v for k, v in p.items() if k not in ("value", "text", "units")}
        if extra:
            out += " " + json.dumps(_jsonable(extra), sort_keys=True)
        return out


def _jsonable(x: Any) -> Any:
    if is_undefined(x):
        return None
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def error_observation(tool: str, exc: GeoError) -> Observation:
    return Observation(
        "error",
        tool,
        {"code": exc.code.value, "message": exc.message, "tool": tool, "offending_arg": exc.arg, "ref": exc.ref},
    )


def universal_catalog() -> Catalog:
    specs = tuple(ALL_SPECS.values())
    return Catalog("all", "full", specs, (), specs)


_UNIVERSAL = universal_catalog()


def _value_text(v: Any, units: str) -> str:
    if is_undefined(v):
        return "undefined"
    if isinstance(v, list):
        return "[" + ", ".join(_value_text(x, "") for x in v) + "]"
    if isinstance(v, (bool, int, float)):
        return fmt_number(v) + ("°" if units == "deg" else "")
    return str(v)


class Canvas:
    """Mutable construction state; see the module docstring."""

    def __init__(self, style_preset: str = "default", catalog: Catalog | None = None):
        if style_preset not in STYLE_PRESETS:
            raise ValueError(f"unknown style preset {style_preset!r}")
        self.objects: dict[str, CanvasObject] = {}
        self.children: dict[str, list[str]] = {}
        self.style_preset = style_preset
        self.view: dict[str, Any] = {
            "axes": _PRESETS[style_preset]["axes"],
            "grid": _PRESETS[style_preset]["grid"],
            "coord_system": None,
            "view3d": None,
            "marks": [],
        }
        self.catalog = catalog or _UNIVERSAL

    # ----------------------------------------------------------- inspection

    def __contains__(self, name: str) -> bool:
        return name in self.objects

    def __len__(self) -> int:
        return len(self.objects)

    def names(self) -> list[str]:
        return list(self.objects)

    def get(self, name: str) -> CanvasObject | None:
        return self.objects.get(name)

    def kind_of(self, name: str) -> str | None:
        rec = self.objects.get(name)
        return rec.kind if rec else None

    def value_of(self, name: str) -> Any:
        rec = self.objects.get(name)
        if rec is None:
            raise EntityNotFound(f"object '{name}' does not exist", ref=name)
        return rec.value

    def descendants(self, name: str) -> list[str]:
        """Strict descendants of ``name`` in insertion (topological) order."""
        seen: set[str] = set()
        stack = list(self.children.get(name, ()))
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.children.get(n, ()))
        return [n for n in self.objects if n in seen]

    def edges(self) -> list[tuple[str, str]]:
        return [(p, o.name) for o in self.objects.values() for p in o.parents]

    def clone(self) -> Canvas:
        other = Canvas.__new__(Canvas)
        other.objects = {
            n: CanvasObject(o.name, o.kind, o.tool, copy.deepcopy(o.args), o.parents, o.value, dict(o.style))
            for n, o in self.objects.items()
        }
        other.children = {k: list(v) for k, v in self.children.items()}
        other.style_preset = self.style_preset
        other.view = copy.deepcopy(self.view)
        other.catalog = self.catalog
        return other

    def _restore(self, snap: Canvas) -> None:
        self.objects, self.children = snap.objects, snap.children
        self.style_preset, self.view = snap.style_preset, snap.view

    # ------------------------------------------------------------- actions

    def apply(self, action: Action | str, args: Mapping[str, Any] | None = None, mode: str = "strict") -> Observation:
        """Run one tool call.  Errors come back as ``error`` observations, never exceptions."""
        if isinstance(action, str):
            action = Action(action, dict(args or {}))
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        tool = action.tool
        snap = self.clone()
        try:
            act = validate_call(self.catalog, tool, action.args, state=self)
            spec = self.catalog.get(tool)
            return self._dispatch(spec, dict(act.args), mode)
        except GeoError as exc:
            self._restore(snap)
            return error_observation(tool, exc)
        except UnboundVariable as exc:
            self._restore(snap)
            return error_observation(tool, EntityNotFound(f"object '{exc.name}' does not exist", ref=exc.name))
        except Exception as exc:  # kernel bug: report, never propagate
            self._restore(snap)
            return error_observation(tool, EngineFailure(f"{type(exc).__name__}: {exc}"))

    def _dispatch(self, spec: ToolSpec, args: dict[str, Any], mode: str) -> Observation:
        tool = spec.name
        if tool == "delete_object":
            return self.delete(args["name"])
        if tool == "set_value":
            return self._set_value(args)
        if tool == "rename_object":
            return self._rename(args["name"], args["new_name"])
        if spec.action_type == "render":
            return self._render(spec, args)
        if spec.action_type == "query":
            return self._query(spec, args, mode)
        return self._construct(spec, args, mode)

    def _refs(self, spec: ToolSpec, args: Mapping[str, Any]) -> list[tuple[str, str]]:
        refs = ops.action_refs(spec, args)
        for param, name in refs:
            if name not in self.objects:
                raise EntityNotFound(f"object '{name}' does not exist", arg=param, ref=name)
        return refs

    def _evaluate(self, tool: str, args: Mapping[str, Any]) -> tuple[str, Any]:
        kind, value = ops.BUILDERS[tool](ops.Resolver(self.objects.get), args)
        ops.check_finite(value)
        return kind, value

    def _construct(self, spec: ToolSpec, args: dict[str, Any], mode: str) -> Observation:
        name = args["name"]
        if name in self.objects:
            raise NameConflict(f"an object named '{name}' already exists", arg="name", ref=name)
        if name in RESERVED_NAMES:
            raise NameConflict(f"'{name}' is a reserved name", arg="name", ref=name)
        refs = self._refs(spec, args)
        for param, ref in refs:
            if not self.objects[ref].defined:
                if mode == "strict":
                    raise PreconditionFailed(f"object '{ref}' is undefined", arg=param, ref=ref)
                return self._add(name, ops.nominal_kind(spec.name, args, self.objects.get), spec.name, args, refs, UNDEFINED)
        try:
            kind, value = self._evaluate(spec.name, args)
        except GeoError as exc:
            if mode == "silent" and exc.code in SILENT_CODES:
                kind, value = ops.nominal_kind(spec.name, args, self.objects.get), UNDEFINED
            else:
                raise
        return self._add(name, kind, spec.name, args, refs, value)

    def _add(self, name: str, kind: str, tool: str, args: dict[str, Any], refs: list[tuple[str, str]], value: Any) -> Observation:
        parents = tuple(r for _, r in refs)
        obj = CanvasObject(name, kind, tool, args, parents, value, default_style(self.style_preset, kind))
        self.objects[name] = obj
        self.children[name] = []
        for p in parents:
            self.children[p].append(name)
        return Observation("created", tool, {"objects": [{"name": name, "kind": kind, "value": obj.printable()}]})

    def _query(self, spec: ToolSpec, args: dict[str, Any], mode: str) -> Observation:
        tool = spec.name
        if tool == "query_is_defined":
            rec = self.objects.get(args["name"])
            v = rec is not None and rec.defined
            return Observation("value", tool, {"value": v, "text": fmt_number(v), "units": ""})
        refs = self._refs(spec, args)
        if tool == "query_dependents":
            deps = self.descendants(args["name"])
            return Observation("value", tool, {"value": deps, "text": "[" + ", ".join(deps) + "]", "units": ""})
        for param, ref in refs:
            if not self.objects[ref].defined:
                if mode == "strict":
                    raise PreconditionFailed(f"object '{ref}' is undefined", arg=param, ref=ref)
                return Observation("value", tool, {"value": None, "text": "undefined", "units": ""})
        res = ops.QUERIES[tool](ops.Resolver(self.objects.get), args)
        value = ops.plain_value(res.value)
        payload: dict[str, Any] = {"value": value, "text": _value_text(res.value, res.units), "units": res.units}
        payload.update(res.extra)
        return Observation("value", tool, payload)

    # ---------------------------------------------------------------- style

    def _render(self, spec: ToolSpec, args: dict[str, Any]) -> Observation:
        tool = spec.name
        self._refs(spec, args)
        target = args.get("obj") or (args.get("name") if tool in ("set_label_visible", "set_object_visible") else None)
        names = [target] if target else []
        st = self.objects[target].style if target else None
        if tool == "render_set_color":
            st["color"] = args["color"]
        elif tool == "render_set_line_style":
            st["line_style"] = args["style"]
        elif tool == "render_set_line_thickness":
            t = float(ops.Resolver(self.objects.get).num(args["thickness"], "thickness"))
            if not t > 0:
                raise TypeMismatch("thickness must be positive", arg="thickness")
            st["thickness"] = t
        elif tool == "render_set_point_style":
            st["point_style"] = args["style"]
        elif tool == "render_set_point_size":
            if not 1 <= args["size"] <= 20:
                raise TypeMismatch("point size must be between 1 and 20", arg="size")
            st["point_size"] = args["size"]
        elif tool == "render_set_filling":
            op = float(ops.Resolver(self.objects.get).num(args["opacity"], "opacity"))
            if not 0.0 <= op <= 1.0:
                raise TypeMismatch("opacity must be between 0 and 1", arg="opacity")
            st["opacity"] = op
        elif tool == "render_set_decoration":
            st["decoration"] = args["decoration"]
        elif tool == "render_set_caption":
            st["caption"] = args["caption"]
        elif tool == "render_set_label_mode":
            st["label_mode"] = args["mode"]
            st["label_visible"] = True
        elif tool == "set_label_visible":
            st["label_visible"] = args["visible"]
        elif tool == "set_object_visible":
            st["visible"] = args["visible"]
        elif tool == "render_show_axes":
            self.view["axes"] = args["visible"]
        elif tool == "render_show_grid":
            self.view["grid"] = args["visible"]
        elif tool == "render_set_coord_system":
            r = ops.Resolver(self.objects.get)
            box = [r.num(args[k], k) for k in ("x_min", "x_max", "y_min", "y_max")]
            if not (box[0] < box[1] and box[2] < box[3]):
                raise TypeMismatch("coordinate window must have x_min < x_max and y_min < y_max", arg="x_min")
            self.view["coord_system"] = box
        elif tool == "render_set_3d_view":
            r = ops.Resolver(self.objects.get)
            v3 = dict(self.view["view3d"] or DEFAULT_VIEW3D)
            for k in ("x_angle", "z_angle", "scale"):
                if k in args:
                    v3[k] = r.num(args[k], k)
            if not v3["scale"] > 0:
                raise TypeMismatch("scale must be positive", arg="scale")
            if "show_axes" in args:
                v3["show_axes"] = args["show_axes"]
            self.view["view3d"] = v3
        elif tool == "render_add_right_angle_mark":
            r = ops.Resolver(self.objects.get)
            for k in ("a", "b", "c"):
                r.point(args[k], k)
            mark = [args["a"], args["b"], args["c"]]
            if mark not in self.view["marks"]:
                self.view["marks"].append(mark)
        else:  # pragma: no cover - catalog and dispatch are kept in step
            raise EngineFailure(f"no render handler for {tool}")
        return Observation("style", tool, {"names": names})

    def set_style_preset(self, preset: str) -> None:
        """Repaint every object with ``preset``; explicit non-preset styling survives."""
        if preset not in STYLE_PRESETS:
            raise ValueError(f"unknown style preset {preset!r}")
        self.style_preset = preset
        for o in self.objects.values():
            o.style.update(preset_style(preset, o.kind))
        self.view["axes"] = _PRESETS[preset]["axes"]
        self.view["grid"] = _PRESETS[preset]["grid"]

    # ---------------------------------------------------------- structure

    def delete(self, name: str) -> Observation:
        if name not in self.objects:
            raise EntityNotFound(f"object '{name}' does not exist", arg="name", ref=name)
        doomed = set(self.descendants(name)) | {name}
        removed = [n for n in self.objects if n in doomed]
        for n in removed:
            del self.objects[n]
            self.children.pop(n, None)
        for n, kids in self.children.items():
            self.children[n] = [k for k in kids if k not in doomed]
        self.view["marks"] = [m for m in self.view["marks"] if not doomed.intersection(m)]
        return Observation("deleted", "delete_object", {"names": removed})

    def _set_value(self, args: dict[str, Any]) -> Observation:
        name = args["name"]
        rec = self.objects.get(name)
        if rec is None:
            raise EntityNotFound(f"object '{name}' does not exist", arg="name", ref=name)
        if rec.tool != "add_slider":
            raise TypeMismatch(f"'{name}' is not a slider or free number", arg="name", ref=name)
        v = args["value"]
        if isinstance(v, str) and referenced_names(parse_expr(v)) - RESERVED_NAMES:
            raise TypeMismatch("the new value must be a constant", arg="value")
        value = ops.Resolver(self.objects.get).num(v, "value")
        rec.args["value"] = value
        rec.value = value
        changed = [name] + self.descendants(name)
        self._recompute(changed[1:])
        objs = [{"name": n, "kind": self.objects[n].kind, "value": self.objects[n].printable()} for n in changed]
        return Observation("updated", "set_value", {"objects": objs})

    def _rename(self, old: str, new: str) -> Observation:
        if old not in self.objects:
            raise EntityNotFound(f"object '{old}' does not exist", arg="name", ref=old)
        if new in self.objects:
            raise NameConflict(f"an object named '{new}' already exists", arg="new_name", ref=new)
        if new in RESERVED_NAMES:
            raise NameConflict(f"'{new}' is a reserved name", arg="new_name", ref=new)
        mapping = {old: new}
        rebuilt: dict[str, CanvasObject] = {}
        for n, o in self.objects.items():
            if n == old:
                o.name = new
                o.args["name"] = new
            if old in o.parents:
                o.args = _rename_args(ALL_SPECS[o.tool], o.args, mapping)
                o.parents = tuple(new if p == old else p for p in o.parents)
            rebuilt[o.name] = o
        self.objects = rebuilt
        self.children = {mapping.get(k, k): [mapping.get(c, c) for c in v] for k, v in self.children.items()}
        self.view["marks"] = [[mapping.get(x, x) for x in m] for m in self.view["marks"]]
        o = self.objects[new]
        return Observation(
            "created", "rename_object",
            {"objects": [{"name": new, "kind": o.kind, "value": o.printable()}], "renamed_from": old},
        )

    def _recompute(self, names: Iterable[str] | None = None) -> None:
        targets = set(self.objects) if names is None else set(names)
        for n, o in self.objects.items():
            if n not in targets:
                continue
            if any(not self.objects[p].defined for p in o.parents):
                o.value = UNDEFINED
                continue
            try:
                kind, value = self._evaluate(o.tool, o.args)
            except GeoError:
                o.value = UNDEFINED
                continue
            except Exception:  # wrapped as Undefined; recompute never raises
                o.value = UNDEFINED
                continue
            o.kind, o.value = kind, value

    def recompute(self) -> None:
        """Re-evaluate every object from its definition, in topological order."""
        self._recompute(None)

    # -------------------------------------------------------------- export

    def export(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "style_preset": self.style_preset,
            "view": copy.deepcopy(self.view),
            "objects": [o.record() for o in self.objects.values()],
        }

    def export_json(self, indent: int | None = None) -> str:
        if indent is None:
            return canonical_json(self.export())
        return json.dumps(self.export(), sort_keys=True, indent=indent, ensure_ascii=False, allow_nan=False) + "\n"

    @classmethod
    def from_document(cls, doc: Mapping[str, Any] | str) -> Canvas:
        if isinstance(doc, str):
            doc = json.loads(doc)
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported canvas format_version {doc.get('format_version')!r}")
        c = cls(doc.get("style_preset", "default"))
        for rec in doc.get("objects", []):
            d = rec["definition"]
            spec = ALL_SPECS.get(d["tool"])
            if spec is None or spec.action_type != "construction":
                raise ValueError(f"record {rec.get('name')!r} has no construction tool")
            args = dict(d["args"])
            refs = ops.action_refs(spec, args)
            missing = [r for _, r in refs if r not in c.objects]
            if missing:
                raise ValueError(f"record {rec['name']!r} references unknown objects {missing}")
            c._add(rec["name"], rec["kind"], d["tool"], args, refs, UNDEFINED)
            c._recompute([rec["name"]])
            c.objects[rec["name"]].style = dict(rec.get("style") or {})
        view = dict(doc.get("view") or {})
        c.view.update(copy.deepcopy(view))
        return c


def _rename_text(text: str, mapping: Mapping[str, str]) -> str:
    try:
        rel = parse_relation(text, default_zero=False)
    except ParseError:
        return to_text(rename_names(parse_expr(text), mapping))
    return relation_text(Relation(rename_names(rel.lhs, mapping), rel.op, rename_names(rel.rhs, mapping)))


def _rename_args(spec: ToolSpec, args: dict[str, Any], mapping: Mapping[str, str]) -> dict[str, Any]:
    out = dict(args)
    for p in spec.params:
        if p.new_name or p.name not in out:
            continue
        v = out[p.name]
        if p.type in ("object_name", "point_name", "linelike_name", "conic_name"):
            out[p.name] = mapping.get(v, v)
        elif p.type == "point_list":
            out[p.name] = [mapping.get(n, n) for n in v]
        elif p.type == "scalar" and isinstance(v, str) and set(mapping) & referenced_names(parse_expr(v)):
            out[p.name] = _rename_text(v, mapping)
        elif p.type == "expr_text":
            rel = parse_relation(v)
            if set(mapping) & (referenced_names(rel.lhs) | referenced_names(rel.rhs)):
                out[p.name] = _rename_text(v, mapping)
    return out


# ------------------------------------------------------------ pure wrappers

CanvasState = Canvas


def apply_action(state: Canvas, action: Action, mode: str = "strict") -> tuple[Canvas, Observation]:
    new = state.clone()
    obs = new.apply(action, mode=mode)
    return new, obs


def delete_cascade(state: Canvas, name: str) -> tuple[Canvas, Observation]:
    new = state.clone()
    try:
        return new, new.delete(name)
    except GeoError as exc:
        return state, error_observation("delete_object", exc)


def recompute(state: Canvas) -> Canvas:
    new = state.clone()
    new.recompute()
    return new


def export_state(state: Canvas) -> dict[str, Any]:
    return state.export()


def import_state(doc: Mapping[str, Any] | str) -> Canvas:
    return Canvas.from_document(doc)
