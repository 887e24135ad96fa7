"""Measured constants, frozen by ``mfbst calibrate`` into constants.json."""
from __future__ import annotations

import json
from importlib import resources

NAMES = {
    "c_sim": "hand simulation ops per trace step, per log2(k+1)",
    "c_init": "initial hand layout ops per key",
    "c_h": "pseudofinger depth per log2(k+1)",
    "c_dq": "deque ops per deque operation (every prefix)",
    "c_delta": "units changed per finger step",
    "c_switch": "expert switch steps per n log2 n",
    "c_strip": "distance distortion after removing auxiliary keys",
    "c_hier": "tilted-grid strategy cost per key",
}


def path():
    return resources.files(__package__) / "constants.json"


def load() -> dict:
    with path().open() as fh:
        data = json.load(fh)
    missing = set(NAMES) - set(data)
    if missing:
        raise KeyError(f"constants.json lacks {sorted(missing)}")
    return data


def save(values: dict, target=None):
    target = target or path()
    with open(target, "w") as fh:
        json.dump({k: values[k] for k in NAMES}, fh, indent=2, sort_keys=True)
        fh.write("\n")
