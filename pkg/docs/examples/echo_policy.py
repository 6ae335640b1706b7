"""Minimal stdio policy: builds the 3-4-5 figure, queries BP, then answers.

Reads one JSON request per line on stdin and writes one JSON response per
line on stdout.
"""

import json
import sys

BUILD = [
    {"tool": "add_point", "args": {"name": "A", "x": 0, "y": 0}},
    {"tool": "add_point", "args": {"name": "B", "x": 4, "y": 0}},
    {"tool": "add_segment", "args": {"name": "AB", "p1": "A", "p2": "B"}},
    {"tool": "add_perpendicular_line", "args": {"name": "L", "point": "A", "line": "AB"}},
    {"tool": "add_circle", "args": {"name": "c", "center": "A", "radius": 3}},
    {"tool": "add_intersect", "args": {"name": "P", "obj1": "L", "obj2": "c", "index": 1}},
    {"tool": "query_distance", "args": {"obj1": "B", "obj2": "P"}},
]

for line in sys.stdin:
    history = json.loads(line)["history"]
    if not history:
        reply = {"text": "Build the figure and measure BP.", "actions": BUILD}
    else:
        obs = history[-1]["observation"]
        value = obs.get("payload", {}).get("value")
        reply = {"text": f"ANSWER: {value}"}
    print(json.dumps(reply), flush=True)
