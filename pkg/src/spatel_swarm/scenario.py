"""Scenario files: JSON, versioned, validated against a JSON Schema.

Example::

    {
      "version": 1,
      "name": "demo",
      "grid": {"depth": 2, "side_length": 4.0, "max_speed": 2.0, "step": 1.0},
      "robots": 3,
      "initial": {"cells": [[1, 1, 3]]},          # or {"positions": [[x, y], ...]}
      "formula": ["const g = 2", "F[0,4) A[SE] O mu >= g"],
      "planner": {"alpha": 1.0, "mode": "exact", "time_limit": 60},
      "seed": 0,
      "regions": [{"name": "goal", "cells": [[3, 3]], "color": "#4daf4a"}]
    }

``formula`` is either one string or a list of lines in the ``const``/``let``
program syntax of :func:`spatel_swarm.logic.parse_program`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import logic as L
from .grid import GridConfig, GridError, OccupancyMatrix
from .lowlevel import place_uniform
from .planner import EXACT, RELAXED_ROUND, PlannerConfig
from .render import Region

SCENARIO_VERSION = 1

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NAT = {"type": "integer", "minimum": 0}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "grid", "robots", "initial", "formula"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCENARIO_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "grid": {
            "type": "object",
            "required": ["depth", "side_length", "max_speed", "step"],
            "additionalProperties": False,
            "properties": {
                "depth": {"type": "integer", "minimum": 1, "maximum": 6},
                "side_length": _POS,
                "max_speed": _POS,
                "step": _POS,
            },
        },
        "robots": {"type": "integer", "minimum": 1},
        "initial": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "cells": {
                    "type": "array",
                    "items": {"type": "array", "prefixItems": [_NAT, _NAT, _NAT],
                              "minItems": 3, "maxItems": 3},
                },
                "positions": {
                    "type": "array",
                    "items": {"type": "array", "prefixItems": [_NUM, _NUM],
                              "minItems": 2, "maxItems": 2},
                },
            },
        },
        "formula": {
            "oneOf": [
                {"type": "string", "minLength": 1},
                {"type": "array", "items": {"type": "string"}, "minItems": 1},
            ]
        },
        "planner": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number", "minimum": 0},
                "mode": {"enum": ["exact", "relaxed"]},
                "time_limit": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "capacity": {"type": ["integer", "null"], "minimum": 1},
                "epsilon": {"type": "number", "minimum": 0},
                "running_cost": {"enum": ["total_displacement", "none"]},
            },
        },
        "seed": _NAT,
        "regions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "cells"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "color": {"type": "string"},
                    "cells": {"type": "array", "items": {
                        "type": "array", "prefixItems": [_NAT, _NAT], "minItems": 2, "maxItems": 2}},
                },
            },
        },
    },
}


class ScenarioError(ValueError):
    """Invalid scenario; ``errors`` is a list of ``(json_pointer, message)``."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p or '/'}: {m}" for p, m in self.errors))


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


@dataclass
class Scenario:
    name: str
    grid: GridConfig
    initial: OccupancyMatrix
    formula: object
    formula_text: str
    planner: PlannerConfig
    seed: int = 0
    positions: np.ndarray | None = None
    regions: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    def initial_positions(self) -> np.ndarray:
        """Explicit positions if given, otherwise seeded uniform placement."""
        if self.positions is not None:
            return self.positions.copy()
        return place_uniform(self.grid, self.initial, self.seed)


def validate(data) -> None:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errs:
        raise ScenarioError([(_pointer(e.absolute_path), e.message) for e in errs])


def from_dict(data: dict, overrides: dict | None = None) -> Scenario:
    validate(data)
    g = data["grid"]
    n = data["robots"]
    try:
        cfg = GridConfig(g["depth"], float(g["side_length"]), n, float(g["max_speed"]), float(g["step"]))
    except GridError as e:
        raise ScenarioError([("/grid", str(e))]) from None
    errors = []
    positions = None
    counts = np.zeros((cfg.size, cfg.size), dtype=np.int64)
    init = data["initial"]
    if "cells" in init:
        for t, (i, j, c) in enumerate(init["cells"]):
            if i >= cfg.size or j >= cfg.size:
                errors.append((f"/initial/cells/{t}", f"cell ({i}, {j}) outside the {cfg.size}x{cfg.size} grid"))
            else:
                counts[i, j] += c
        if not errors and counts.sum() != n:
            errors.append(("/initial/cells", f"counts sum to {int(counts.sum())}, expected {n} robots"))
    else:
        positions = np.array(init["positions"], dtype=float).reshape(-1, 2)
        half = cfg.side_length / 2
        for t, (x, y) in enumerate(positions):
            if abs(x) > half or abs(y) > half:
                errors.append((f"/initial/positions/{t}", f"({x}, {y}) is outside the workspace"))
        if len(positions) != n:
            errors.append(("/initial/positions", f"{len(positions)} positions, expected {n} robots"))
    for t, reg in enumerate(data.get("regions", [])):
        for s, (i, j) in enumerate(reg["cells"]):
            if i >= cfg.size or j >= cfg.size:
                errors.append((f"/regions/{t}/cells/{s}", f"cell ({i}, {j}) outside the grid"))
    text = data["formula"] if isinstance(data["formula"], str) else "\n".join(data["formula"])
    phi = None
    try:
        phi = L.parse_program(text)
    except (L.ParseError, L.FormulaError) as e:
        errors.append(("/formula", str(e)))
    if errors:
        raise ScenarioError(errors)
    if positions is not None:
        N0 = OccupancyMatrix.from_positions(cfg, positions)
    else:
        N0 = OccupancyMatrix(counts)
    p = dict(data.get("planner", {}))
    p.update({k: v for k, v in (overrides or {}).items() if v is not None})
    mode = p.pop("mode", "exact")
    try:
        pcfg = PlannerConfig(mode=EXACT if mode == "exact" else RELAXED_ROUND, **p)
    except (TypeError, ValueError) as e:
        raise ScenarioError([("/planner", str(e))]) from None
    regions = [Region(r["name"], tuple((i, j) for i, j in r["cells"]), r.get("color", ""))
               for r in data.get("regions", [])]
    return Scenario(
        name=data.get("name", ""),
        grid=cfg,
        initial=N0,
        formula=phi,
        formula_text=text,
        planner=pcfg,
        seed=int(data.get("seed", 0)),
        positions=positions,
        regions=regions,
        raw=data,
    )


def load(path, overrides: dict | None = None) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError([("", f"not valid JSON: {e}")]) from None
    return from_dict(data, overrides)
