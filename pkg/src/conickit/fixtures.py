"""Bundled input documents for the command-line tool.

A document is sectioned: each top-level key names a payload type and every
command picks the first section it understands.  Section types:

conic    {"chart", "g", "omega", "h", "point", "params"}
affine   {"chart", "f", "g", "point", "box_halfwidth", "params"}
qnl      {"kind", "chart", "A", "B", "C", "point", "box_halfwidth", "params"}
hfamily  {"a", "b", "c", "d", "e", "epsilon", "point", "params"}
witness  {"chart", "S", "S_tilde", "phi", "delta", "grid", "tol"}
"""

from __future__ import annotations

import copy

SECTIONS = ("conic", "affine", "qnl", "hfamily", "witness")

_FIXTURES = {
    "dubins": {
        "conic": {
            "chart": ["z", "y"],
            "g": [["1", "0"], ["0", "1"]],
            "omega": ["0", "0"],
            "h": "-r^2",
            "point": [0, 0],
            "params": {"r": 1},
        },
        "affine": {
            "chart": ["z", "y", "w"],
            "f": ["r*cos(w)", "r*sin(w)", "0"],
            "g": ["0", "0", "1"],
            "point": [0, 0, 0],
            "box_halfwidth": 0.5,
            "params": {"r": 1},
        },
        "qnl": {
            "kind": "E",
            "chart": ["z", "y"],
            "A": ["r", "0"],
            "B": ["0", "r"],
            "C": ["0", "0"],
            "point": [0, 0],
            "box_halfwidth": 0.5,
            "params": {"r": 1},
        },
    },
    "dubins-hyperbolic": {
        "conic": {
            "chart": ["z", "y"],
            "g": [["1", "0"], ["0", "-1"]],
            "omega": ["0", "0"],
            "h": "-1",
            "point": [0, 0],
        },
        "affine": {
            "chart": ["z", "y", "w"],
            "f": ["cosh(w)", "sinh(w)", "0"],
            "g": ["0", "0", "1"],
            "point": [0, 0, 0],
            "box_halfwidth": 0.5,
        },
        "qnl": {
            "kind": "H",
            "chart": ["z", "y"],
            "A": ["1", "0"],
            "B": ["0", "1"],
            "C": ["0", "0"],
            "point": [0, 0],
            "box_halfwidth": 0.5,
        },
    },
    "parabolic-null": {
        "conic": {
            "chart": ["z", "y"],
            "g": [["0", "0"], ["0", "1"]],
            "omega": ["-1/2", "0"],
            "h": "0",
            "point": [0, 0],
        },
        "affine": {
            "chart": ["z", "y", "w"],
            "f": ["w^2", "w", "0"],
            "g": ["0", "0", "1"],
            "point": [0, 0, 0],
            "box_halfwidth": 0.5,
        },
        "qnl": {
            "kind": "P",
            "chart": ["z", "y"],
            "A": ["1", "0"],
            "B": ["0", "1"],
            "C": ["0", "0"],
            "point": [0, 0],
            "box_halfwidth": 0.5,
        },
    },
    "example1": {
        "witness": {
            "chart": ["z", "y"],
            "S": "zdot - (-1 + sqrt(1 + ydot))^2",
            "S_tilde": "zdot - (ydot/2)^2",
            "phi": ["z", "y - z"],
            "delta": "-(zdot - ydot - 2 - 2*sqrt(1 + ydot))/4",
            "grid": {"z": [-1, 1, 10], "y": [-1, 1, 10],
                     "zdot": [-1, 1, 10], "ydot": [-0.8, 1, 10]},
            "tol": 1e-9,
        },
    },
    "hfamily-elliptic": {
        "hfamily": {"a": 1, "b": 0, "c": 0, "d": -1, "e": 0, "epsilon": 0, "point": [0, 0, 0]},
    },
    "hfamily-hyperbolic": {
        "hfamily": {"a": 1, "b": 0, "c": 0, "d": 1, "e": 0, "epsilon": 0, "point": [0, 0, 0]},
    },
    "hfamily-parabolic": {
        "hfamily": {"a": 1, "b": 0, "c": 0, "d": 0, "e": "1/2", "epsilon": 1, "point": [0, 0, 0]},
    },
}

NAMES = tuple(_FIXTURES)


def get(name: str) -> dict:
    if name not in _FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(NAMES)}")
    return copy.deepcopy(_FIXTURES[name])
