"""Canned scenario specs shipped with the package."""

from __future__ import annotations

import copy

_RIG = {"radius": 6.0, "height": 2.0, "focal": 1000.0, "resolution": [1920, 1080]}
_PLANE = {"n": [1.0, 0.0, 0.0], "point": [0.0, 0.0, 0.0]}
_PERF = [-2.0, -2.0, 0.0, 2.0, 2.0, 4.0]

CANNED: dict[str, dict] = {
    # Full four-view coverage, mild noise, long clip.
    "clean-4cam": {
        "seed": 7,
        "duration": 1800,
        "noise_px": 1.0,
        "rig": _RIG,
        "plane": _PLANE,
        "perf_space": _PERF,
        "beta": 1.0,
        "persons": [
            {"kind": "on_plane_jump", "is_target": True,
             "off_plane_amplitude": 0.1, "on_plane_intervals": []},
            {"kind": "off_plane_walk", "is_target": False, "offset": 1.3},
            {"kind": "off_plane_walk", "is_target": False, "offset": -1.4},
        ],
        "dropout": [],
    },
    # Views 1 and 3 go dark for 100 frames, leaving only the opposite
    # pair (0, 2); the target stays exactly on the plane throughout the
    # episode and drifts slightly off it otherwise.  The wide radius keeps
    # the surviving pair's rays close to antiparallel.
    "opposite-only-episode": {
        "seed": 11,
        "duration": 220,
        "noise_px": 2.0,
        "rig": {"radius": 10.0, "height": 2.0, "focal": 1000.0,
                "resolution": [1920, 1080]},
        "plane": _PLANE,
        "perf_space": _PERF,
        "beta": 1.0,
        "persons": [
            {"kind": "on_plane_jump", "is_target": True,
             "off_plane_amplitude": 0.15, "on_plane_intervals": [[90, 210]]},
            {"kind": "off_plane_walk", "is_target": False, "offset": 1.3},
            {"kind": "off_plane_walk", "is_target": False, "offset": -1.4},
        ],
        "dropout": [{"cameras": [1, 3], "start": 100, "end": 200}],
    },
    # A busier scene with four non-target walkers.
    "crowded-distractors": {
        "seed": 23,
        "duration": 600,
        "noise_px": 1.5,
        "rig": _RIG,
        "plane": _PLANE,
        "perf_space": _PERF,
        "beta": 1.0,
        "persons": [
            {"kind": "on_plane_jump", "is_target": True,
             "off_plane_amplitude": 0.1, "on_plane_intervals": []},
            {"kind": "off_plane_walk", "is_target": False, "offset": 1.2},
            {"kind": "off_plane_walk", "is_target": False, "offset": -1.3},
            {"kind": "off_plane_walk", "is_target": False, "offset": 1.6},
            {"kind": "off_plane_walk", "is_target": False, "offset": -1.7},
        ],
        "dropout": [],
    },
}


def get_scenario_spec(name: str) -> dict:
    if name not in CANNED:
        raise KeyError(f"unknown canned scenario {name!r}; "
                       f"available: {', '.join(sorted(CANNED))}")
    return copy.deepcopy(CANNED[name])
