"""Regenerate the JSON configs in this directory (matrices from axes)."""
import json
from pathlib import Path

from orbitherm.geometry import Isometry
from orbitherm.groups import hyperbolic_from_axis

HERE = Path(__file__).parent


def mat(g):
    return [float(x) for x in g.normalized().entries]


def axis(a, b, ell):
    return mat(hyperbolic_from_axis(a, b, ell))


def orbit(w):
    return {"type": "ClosedOrbit", "word": w}


def core(gens, depth, amb=None):
    out = {"type": "SubgroupCore", "generators": gens, "sample_depth": depth}
    if amb is not None:
        out["ambient_len"] = amb
    return out


DEMO = {"generators": [axis(-3, -1, 3.0), axis(1, 3, 3.0)], "disks": "isometric"}
DEMO2 = {"generators": [axis(-4, -1, 4.0), axis(0.5, 2.5, 4.0)], "disks": "isometric"}
EXTENDED = {"generators": [mat(Isometry(1.0, 0.0, 2.0, 1.0)), axis(3, 7, 3.0),
                           axis(-5 - 1e-4, -5 + 1e-4, 4.0)],
            "disks": "isometric", "extended": True}
TILT_CC = {"generators": [axis(-3, -1, 3.0), axis(1, 3, 3.0), axis(20, 20.5, 3.0)], "disks": "isometric"}
FOUR = {"generators": [axis(-7, -5, 3.0), axis(-3, -1, 3.0), axis(1, 3, 3.0), axis(5, 7, 3.0)],
        "disks": "isometric"}
DIVERGE = {"generators": [axis(c - 0.5, c + 0.5, l) for c, l in ((-9, 8.0), (-3, 1.2), (3, 7.0), (9, 6.0))],
           "disks": "isometric"}

CONFIGS = {
    "demo_zero_temp": {
        "group": DEMO, "n_range": [1, 9],
        "potentials": {"phi": {"type": "Bump", "target": orbit("a")}},
        "t_grid": [0, 0.5, 1, 2, 5, 10, 20, 40],
        "regions": [{"id": "target", "target": orbit("a"), "r": 0.3}],
    },
    "demo_pressure": {
        "group": DEMO, "n_range": [1, 9],
        "potentials": {"phi": {"type": "Bump", "target": orbit("a")}},
        "t_grid": [-1, -0.5, 0, 0.5, 1, 2, 3, 5],
    },
    "demo2_pressure": {
        "group": DEMO2, "n_range": [1, 9],
        "potentials": {"phi": {"type": "Bump", "target": orbit("a")}},
        "t_grid": [0],
    },
    "demo_intermediate": {
        "group": DEMO, "n_range": [1, 9],
        "potentials": {"phi": {"type": "Bump", "target": orbit("a")}},
        "experiment": {"target_c_frac": [0.25, 0.5, 0.75]},
    },
    "demo_nonergodic": {
        "group": DEMO, "n_range": [1, 8],
        "potentials": {"phi": {"type": "Bump", "target": {"type": "Union", "parts": [
            orbit("ab"), {"type": "Flipped", "inner": orbit("ab")}]}}},
        "t_grid": [0, 1, 5, 10, 20, 40],
        "regions": [{"id": "K", "target": orbit("ab"), "r": 0.3}],
    },
    "demo_density": {
        "group": DEMO, "n_range": [1, 9],
        "potentials": {"phi": {"type": "Bump", "target": orbit("a")}},
        "t_grid": [1, 2.5, 5, 10, 20, 40],
        "experiment": {"target_word": "a", "test_words": ["b", "ab", "aB"]},
    },
    "nested_decay": {
        "group": FOUR, "n_range": [1, 4],
        "experiment": {"n_list": [0, 1, 2, 3], "families": {"plus": [1, 2], "minus": [3, 4]}},
    },
    "divergence": {
        "group": DIVERGE, "n_range": [6, 6],
        "knobs": {"step": 0.2, "neighbor_depth": 1, "t_cap": 1e6},
        "regions": [{"id": "U", "target": orbit("a"), "r": 0.3}],
        "experiment": {"levels": 2, "eps": [0.1, 0.1], "plus_index": [0, 3, 4], "minus_index": [0, 1, 2],
                       "families": {"plus": [1, 2], "minus": [3, 4]}},
    },
    "extended_escape": {
        "group": EXTENDED, "n_range": [1, 5],
        "potentials": {"phi": {"type": "Tail", "target": orbit("c")},
                       "psi": {"type": "Bump", "target": orbit("c")}},
        "t_grid": [0, 0.05, 0.1, 0.2, 0.3, 0.4],
        "experiment": {"family_n": [1, 5, 10, 20, 30], "p": 1, "h": 2, "expect": "FullEscapeExpected"},
    },
    "tilt_cc": {
        "group": TILT_CC, "n_range": [1, 6],
        "potentials": {"phi": {"type": "Bump", "target": orbit("a")},
                       "psi": {"type": "Bump", "target": orbit("c")}},
        "t_grid": [0, 0.05, 0.1, 0.2, 0.3, 0.4],
    },
}

if __name__ == "__main__":
    for name, cfg in CONFIGS.items():
        (HERE / f"{name}.json").write_text(json.dumps(cfg, indent=1) + "\n")
        print(name)
