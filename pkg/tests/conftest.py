from __future__ import annotations

import json
from pathlib import Path

import pytest

from geocanvas import Canvas, build_catalog

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

BUILD_345 = [
    ("add_point", {"name": "A", "x": 0, "y": 0}),
    ("add_point", {"name": "B", "x": 4, "y": 0}),
    ("add_segment", {"name": "AB", "p1": "A", "p2": "B"}),
    ("add_perpendicular_line", {"name": "L", "point": "A", "line": "AB"}),
    ("add_circle", {"name": "c", "center": "A", "radius": 3}),
    ("add_intersect", {"name": "P", "obj1": "L", "obj2": "c", "index": 1}),
]

# criterion number -> (title, outcome); filled by the report hook below
_CRITERIA: dict[int, list] = {}


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call: pytest.CallInfo):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None or rep.when not in ("setup", "call"):
        return
    n, title = m.args
    entry = _CRITERIA.setdefault(n, [title, True])
    if rep.failed or rep.skipped:
        entry[1] = False


def pytest_terminal_summary(terminalreporter) -> None:
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")


def build(actions, catalog=None, mode: str = "strict") -> Canvas:
    c = Canvas(catalog=catalog)
    for tool, args in actions:
        obs = c.apply(tool, args, mode=mode)
        assert obs.ok, obs.text()
    return c


@pytest.fixture
def canvas_345() -> Canvas:
    return build(BUILD_345)


@pytest.fixture
def canvas3d() -> Canvas:
    return Canvas(catalog=build_catalog("solve3d"))


@pytest.fixture
def triangle() -> Canvas:
    return build(
        [
            ("add_point", {"name": "A", "x": 0, "y": 0}),
            ("add_point", {"name": "B", "x": 4, "y": 0}),
            ("add_point", {"name": "C", "x": 0, "y": 3}),
            ("add_polygon", {"name": "T", "vertices": ["A", "B", "C"]}),
        ]
    )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def load_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))
