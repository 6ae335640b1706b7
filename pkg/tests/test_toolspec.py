from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from geocanvas import Canvas, build_catalog, export_catalog, validate_call
from geocanvas.errors import TypeMismatch, UnsupportedTool
from geocanvas.toolspec import (
    ACTION_TYPES,
    GROUPS,
    SEMANTIC_TYPES,
    UNSUPPORTED_TOOLS,
    OverlayPatch,
    UnknownOverlayTarget,
    digest_of,
    load_overlays,
)


@pytest.fixture(scope="module")
def full():
    return build_catalog("solve2d")


class TestCatalog:
    @pytest.mark.parametrize(
        "profile,mode,n",
        [
            ("solve2d", "full", 79),
            ("solve2d", "no_query", 55),
            ("solve2d", "no_measurement", 70),
            ("solve2d", "no_delete", 78),
            ("solve3d", "full", 100),
            ("render_pipeline", "full", 92),
            ("solve3d", "no_query", 73),
        ],
    )
    def test_counts(self, profile, mode, n):
        assert len(build_catalog(profile, mode)) == n

    def test_names_unique_and_prefix_convention(self):
        for profile in ("solve3d", "render_pipeline"):
            cat = build_catalog(profile)
            assert len(set(cat.names)) == len(cat.names)
            for s in cat.specs:
                assert s.group in GROUPS and s.action_type in ACTION_TYPES
                if s.name.startswith("query_"):
                    assert s.action_type == "query"
                if s.name.startswith("render_"):
                    assert s.action_type == "render"
                for p in s.params:
                    assert p.type in SEMANTIC_TYPES

    def test_delete_counted_with_constructions(self, full):
        assert full.get("delete_object").action_type == "delete"
        assert "delete_object" in build_catalog("solve2d", "no_query")

    def test_unknown_profile_or_mode(self):
        with pytest.raises(ValueError):
            build_catalog("solve4d")
        with pytest.raises(ValueError):
            build_catalog("solve2d", "tiny")

    def test_every_tool_described(self):
        for s in build_catalog("solve3d").specs:
            assert s.description.strip()

    def test_bare_keeps_schema(self, full):
        bare = build_catalog("solve2d", "bare_signature")
        assert bare.get("add_circle").description == ""
        assert [p.name for p in bare.get("add_circle").params] == [p.name for p in full.get("add_circle").params]


class TestExport:
    def test_stable(self, full):
        assert export_catalog(full) == export_catalog(build_catalog("solve2d"))
        doc = json.loads(export_catalog(full))
        assert doc["digest"] == full.digest
        assert len(doc["digest"]) == 64 and doc["digest"] == doc["digest"].lower()

    def test_digest_tracks_text(self, full):
        patched = full.with_overlays([OverlayPatch("add_point", "Another wording.")])
        assert patched.digest != full.digest
        same = full.with_overlays([OverlayPatch("add_point", full.get("add_point").description)])
        assert same.digest == full.digest

    def test_schema_shape(self, full):
        doc = full.get("add_circle").to_json()
        params = doc["parameters"]
        assert params["required"] == ["name", "center"]
        assert params["properties"]["radius"]["x-semantic"] == "scalar"
        assert params["additionalProperties"] is False

    def test_digest_of_is_canonical(self):
        assert digest_of({"b": 1, "a": 2}) == digest_of({"a": 2, "b": 1})


class TestOverlays:
    def test_unknown_target(self, full):
        with pytest.raises(UnknownOverlayTarget):
            full.with_overlays([OverlayPatch("add_unicorn", "x")])
        with pytest.raises(UnknownOverlayTarget):
            full.with_overlays([OverlayPatch("add_point", "x", param="z")])

    def test_param_overlay(self, full):
        cat = full.with_overlays([OverlayPatch("add_point", "horizontal position", param="x")])
        assert cat.get("add_point").param("x").doc == "horizontal position"
        assert cat.get("add_point").description == full.get("add_point").description

    def test_load_overlays(self):
        items = load_overlays({"overlays": [{"tool": "add_point", "description": "d"}]})
        assert items == [OverlayPatch("add_point", "d")]

    @given(st.lists(st.sampled_from(["add_point", "add_line", "query_angle", "add_circle"]), max_size=5), st.text(max_size=20))
    def test_round_trip_property(self, tools, text):
        base = build_catalog("solve2d")
        patched = base.with_overlays([OverlayPatch(t, text) for t in tools])
        assert export_catalog(patched.without_overlays()) == export_catalog(base)


class TestValidate:
    def test_unknown_tool(self, full):
        with pytest.raises(UnsupportedTool):
            validate_call(full, "add_dragon", {})
        with pytest.raises(UnsupportedTool):
            validate_call(full, "add_cube", {})  # 3D tool outside the 2D profile

    @pytest.mark.parametrize("tool", sorted(UNSUPPORTED_TOOLS))
    def test_declared_unsupported(self, tool):
        with pytest.raises(UnsupportedTool, match=tool):
            validate_call(build_catalog("solve3d"), tool, {"name": "n", "solid": "A"})

    def test_missing_required(self, full):
        with pytest.raises(TypeMismatch) as info:
            validate_call(full, "add_point", {"name": "C", "x": 1})
        assert info.value.arg == "y"

    def test_circle_without_radius_or_point(self, full):
        c = Canvas()
        c.apply("add_point", {"name": "A", "x": 0, "y": 0})
        obs = c.apply("add_circle", {"name": "C", "center": "A"})
        assert obs.code == "TypeMismatch"

    def test_point_for_curve(self, full):
        c = Canvas()
        c.apply("add_point", {"name": "A", "x": 0, "y": 0})
        c.apply("add_point", {"name": "B", "x": 1, "y": 0})
        c.apply("add_line", {"name": "l", "p1": "A", "p2": "B"})
        with pytest.raises(TypeMismatch) as info:
            validate_call(full, "add_intersect", {"name": "X", "obj1": "A", "obj2": "l"}, state=c)
        assert info.value.arg == "obj1"

    def test_normalizes(self, full):
        act = validate_call(full, "query_angle", {"a": "A", "b": "B", "c": "C"})
        assert act.tool == "query_angle" and dict(act.args) == {"a": "A", "b": "B", "c": "C"}
        act = validate_call(full, "add_point", {"name": "A", "x": "3", "y": 2})
        assert act.args["x"] in (3.0, "3")

    @pytest.mark.parametrize(
        "tool,args,arg",
        [
            ("add_point", {"name": "1A", "x": 0, "y": 0}, "name"),
            ("add_point", {"name": "A", "x": [1], "y": 0}, "x"),
            ("add_regular_polygon", {"name": "h", "p1": "A", "p2": "B", "n": 2.5}, "n"),
            ("add_polygon", {"name": "p", "vertices": 5}, "vertices"),
            ("add_point", {"name": "A", "x": 0, "y": 0, "z": 0}, "z"),
        ],
    )
    def test_type_errors(self, full, tool, args, arg):
        with pytest.raises(TypeMismatch) as info:
            validate_call(full, tool, args)
        assert info.value.arg == arg

    def test_pure(self, full):
        args = {"name": "A", "x": 1, "y": 2}
        assert validate_call(full, "add_point", args) == validate_call(full, "add_point", args)
        assert args == {"name": "A", "x": 1, "y": 2}
