"""Deterministic geometric construction environment with a typed tool catalog."""

from .canvas import Canvas, CanvasState, Observation, apply_action, delete_cascade, export_state, import_state, recompute
from .errors import ErrorCode, GeoError
from .harness import Limits, Problem, ScriptedPolicy, Trace, extract_answer, replay, replay_trace, run_episode
from .numeric import UNDEFINED, TolerancePolicy, deg_rad_convert, tol_pass
from .toolspec import Action, Catalog, build_catalog, export_catalog, validate_call

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Canvas",
    "CanvasState",
    "Catalog",
    "ErrorCode",
    "GeoError",
    "Limits",
    "Observation",
    "Problem",
    "ScriptedPolicy",
    "TolerancePolicy",
    "Trace",
    "UNDEFINED",
    "apply_action",
    "build_catalog",
    "deg_rad_convert",
    "delete_cascade",
    "export_catalog",
    "export_state",
    "extract_answer",
    "import_state",
    "recompute",
    "replay",
    "replay_trace",
    "run_episode",
    "tol_pass",
    "validate_call",
]
