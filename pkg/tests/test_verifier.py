from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocanvas.numeric import TolerancePolicy
from geocanvas.verifier import (
    REGISTRY,
    ArityError,
    Predicate,
    ProblemSpec,
    QueryTarget,
    check_predicate,
    classify_failure,
    coords_from_document,
    evaluate_coords,
    load_coords,
    load_problems,
    register_predicate,
    tolerance_sweep,
    verify,
)

from conftest import FIXTURES

SQUARE = {"A": (0.0, 0.0), "B": (1.0, 0.0), "C": (1.0, 1.0), "D": (0.0, 1.0), "O": (0.5, 0.5)}


def check(kind, *names, coords=SQUARE):
    return check_predicate(Predicate(kind, tuple(names)), coords)


class TestPredicates:
    @pytest.mark.parametrize(
        "kind,names,expected",
        [
            ("coll", "AOC", True),
            ("coll", "ABC", False),
            ("coll", "AAB", True),
            ("para", "ABDC", True),
            ("para", "ABBA", True),
            ("para", "ABAC", False),
            ("perp", "ABBC", True),
            ("perp", "ABAC", False),
            ("cong", "ABBC", True),
            ("cong", "ABAC", False),
            ("midp", "OAC", True),
            ("midp", "OAB", False),
            ("cyclic", "ABCD", True),
            ("cyclic", "ABCO", False),
            ("cyclic", "AOCB", False),
            ("eqangle", "ABACACAD", True),
            ("eqangle", "ABACABAD", False),
            ("eqratio", "ACABBDBC", True),
            ("eqratio", "ACABABBC", False),
        ],
    )
    def test_square(self, kind, names, expected):
        assert check(kind, *names) is expected

    def test_eqangle_is_directed_mod_180(self):
        pts = {"A": (0.0, 0.0), "B": (1.0, 0.0), "C": (1.0, 1.0), "E": (0.0, 1.0)}
        assert check("eqangle", *"ABACBAAC", coords=pts) is True  # lines carry no direction
        assert check("eqangle", *"ABACACAB", coords=pts) is False  # orientation matters
        assert check("eqangle", *"ABACACAE", coords=pts) is True

    def test_tolerance(self):
        pts = dict(SQUARE, C=(1.0, 1.0 + 5e-4))
        assert check("cong", *"ABBC", coords=pts)
        pts = dict(SQUARE, C=(1.0, 1.0 + 5e-3))
        assert not check("cong", *"ABBC", coords=pts)

    def test_degenerate_inputs_fail(self):
        pts = {"A": (0.0, 0.0), "B": (0.0, 0.0), "C": (1.0, 1.0), "D": (2.0, 2.0)}
        assert check("para", *"ABCD", coords=pts) is False
        assert check("cyclic", *"ACDB", coords=pts) is False
        assert check("eqratio", *"CDABCDAB", coords=pts) is False

    def test_missing_point_is_na(self):
        assert check("coll", "A", "B", "Z") is None
        assert check_predicate(Predicate("coll", ("A", "B", "C")), dict(SQUARE, C=None)) is None

    def test_arity(self):
        with pytest.raises(ArityError):
            Predicate("perp", ("A", "B", "C"))
        with pytest.raises(ValueError):
            Predicate("tangentish", ("A",))
        with pytest.raises(ValueError):
            Predicate("coll", ("A", "B", "C"), tier="bonus")

    @given(
        st.floats(-50, 50),
        st.floats(-50, 50),
        st.floats(0.1, 10),
        st.floats(0, 2 * math.pi),
        st.floats(0.1, 3),
        st.floats(0.1, 3),
    )
    @settings(max_examples=200)
    def test_constructed_configurations_pass(self, cx, cy, r, t0, d1, d2):
        pts = {f"P{i}": (cx + r * math.cos(t0 + k), cy + r * math.sin(t0 + k)) for i, k in enumerate((0, d1, d1 + d2, d1 + d2 + 0.05))}
        pts["M"] = ((pts["P0"][0] + pts["P1"][0]) / 2, (pts["P0"][1] + pts["P1"][1]) / 2)
        assert check("cyclic", "P0", "P1", "P2", "P3", coords=pts)
        assert check("midp", "M", "P0", "P1", coords=pts)
        assert check("coll", "P0", "M", "P1", coords=pts)


class TestExtensions:
    def test_register(self):
        ext = register_predicate("isosceles_at", 3, "dist(p1, p2) - dist(p1, p3)")
        try:
            spec = ProblemSpec.from_json({"id": "t", "predicates": [{"type": "isosceles_at", "args": ["O", "A", "B"]}]})
            assert spec.predicates[0].extension == ext
            assert verify([spec], {"t": SQUARE}).sc == 1.0
            with pytest.raises(ArityError):
                ProblemSpec.from_json({"id": "t", "predicates": [{"type": "isosceles_at", "args": ["O", "A"]}]})
        finally:
            REGISTRY.pop("isosceles_at")

    def test_builtin_names_reserved(self):
        with pytest.raises(ValueError):
            register_predicate("perp", 4, "0")

    def test_inline_extensible(self):
        spec = ProblemSpec.from_json(
            {"id": "t", "predicates": [{"type": "extensible", "args": ["A", "C"], "expr": "dist(p1, p2)^2", "target": 2}]}
        )
        assert verify([spec], {"t": SQUARE}).sr == 1.0


class TestQueries:
    @pytest.mark.parametrize(
        "expr,value",
        [
            ("x(C)", 1.0),
            ("dist(A, C)", math.sqrt(2)),
            ("angle(B, A, C)", 45.0),
            ("angle(C, A, B)", 45.0),
            ("area(A, B, C, D)", 1.0),
            ("dist(A, O) * 2", math.sqrt(2)),
        ],
    )
    def test_evaluate(self, expr, value):
        assert evaluate_coords(expr, SQUARE) == pytest.approx(value)

    def test_missing(self):
        assert evaluate_coords("dist(A, Z)", SQUARE) is None
        assert evaluate_coords("angle(A, A, B)", SQUARE) is None

    @pytest.mark.parametrize(
        "target,measured,klass",
        [
            (10.0, 10.0, "OK"),
            (10.0, 10.005, "OK"),
            (10.0, 10.5, "C1"),
            (10.0, 10.05, "C2"),
            (10.0, None, "NA"),
        ],
    )
    def test_classify(self, target, measured, klass):
        strict = TolerancePolicy(abs_tol=1e-7, rel_tol=1e-3)
        assert classify_failure(QueryTarget("x(A)", target), measured, strict) == klass

    def test_c3_boundary(self):
        # between the absolute floor and the relative gate
        q = QueryTarget("x(A)", 0.0)
        assert classify_failure(q, 2e-4, TolerancePolicy(abs_tol=1e-7, rel_tol=1e-3)) == "C3"
        assert classify_failure(q, 2e-3, TolerancePolicy(abs_tol=1e-7, rel_tol=1e-3)) == "C2"

    def test_structural_targets(self):
        assert QueryTarget("e", 90).structural and QueryTarget("e", 0).structural
        assert not QueryTarget("e", 45).structural

    def test_sweep_rejects_descending_grid(self):
        with pytest.raises(ValueError):
            tolerance_sweep([QueryTarget("x(C)", 1)], SQUARE, [1e-3, 1e-4])

    def test_sweep_classes(self):
        out = tolerance_sweep([QueryTarget("x(C)", 1), QueryTarget("dist(A,C)", 1.4142)], SQUARE, [1e-6, 1e-3])
        assert out == {"structural": [1.0, 1.0], "non_structural": [0.0, 1.0], "all": [0.5, 1.0]}


class TestScoring:
    def test_fixture_problems(self):
        specs = load_problems(FIXTURES / "verify" / "problems.json")
        coords = load_coords(FIXTURES / "verify" / "coords", [s.id for s in specs])
        rep = verify(specs, coords)
        assert (rep.sr, rep.sc, rep.cr) == (1.0, 1.0, 1.0)
        assert rep.failure_counts()["OK"] == 4
        assert set(rep.sr_by_tier()) == {"premise", "numcheck", "derived"}
        assert "SR=1" in rep.summary()

    def test_missing_coords_is_empty_canvas(self):
        specs = load_problems(FIXTURES / "verify" / "problems.json")
        rep = verify(specs, {})
        assert (rep.sr, rep.sc, rep.cr) == (0.0, 0.0, 0.0)
        assert all(v == "NA" for p in rep.problems for _, v in p.verdicts)

    def test_problem_without_predicates(self):
        specs = [ProblemSpec("a", [Predicate("coll", tuple("AOC"))]), ProblemSpec("b")]
        rep = verify(specs, {"a": SQUARE, "b": {}})
        assert rep.sr == 1.0 and rep.sc == 1.0 and rep.cr == 0.5

    def test_canvas_export_coords(self, canvas_345):
        coords = coords_from_document(canvas_345.export())
        assert coords["P"] == pytest.approx((0.0, -3.0))
        assert set(coords) == {"A", "B", "P"}

    def test_undefined_point_in_export(self, canvas_345):
        canvas_345.apply("add_point", {"name": "Q", "x": 9, "y": 9})
        canvas_345.apply("add_circle", {"name": "small", "center": "Q", "radius": 1})
        canvas_345.apply("add_intersect", {"name": "Z", "obj1": "L", "obj2": "small", "index": 1}, mode="silent")
        assert coords_from_document(canvas_345.export()).get("Z") is None

    def test_plain_map(self):
        assert coords_from_document({"A": [1, 2], "B": None}) == {"A": (1.0, 2.0), "B": None}
