"""Experiment configuration: JSON-loadable, merged onto per-experiment defaults."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..functionals import ScaleGrid
from ..grid import Grid

GRID_1D = {"dimension": 1, "L": 16.0, "N": 4096}
GRID_2D = {"dimension": 2, "L": 8.0, "N": 256}


@dataclass
class ExperimentConfig:
    experiment: str
    grid: dict = field(default_factory=lambda: dict(GRID_1D))
    scales: dict | None = None  # {t_min, t_max, count}; None -> ScaleGrid.for_grid
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def make_grid(self) -> Grid:
        return Grid.from_dict(self.grid)

    def make_scales(self, grid: Grid | None = None) -> ScaleGrid | None:
        if self.scales is None:
            return None
        sc = ScaleGrid(float(self.scales["t_min"]), float(self.scales["t_max"]), int(self.scales.get("count", 48)))
        if grid is not None:
            sc.check(grid)
        return sc

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "grid": dict(self.grid),
            "scales": None if self.scales is None else dict(self.scales),
            "params": copy.deepcopy(self.params),
            "seed": self.seed,
            "out": self.out,
        }

    @classmethod
    def from_dict(cls, d: dict, defaults: dict | None = None) -> ExperimentConfig:
        """Build a config from ``d`` laid over ``defaults`` (params merged key by key)."""
        base = copy.deepcopy(defaults or {})
        unknown = set(d) - {"experiment", "grid", "scales", "params", "seed", "out"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        params = dict(base.get("params", {}))
        params.update(d.get("params", {}))
        grid = dict(base.get("grid", GRID_1D))
        grid.update(d.get("grid", {}))
        if "experiment" not in d and "experiment" not in base:
            raise ValueError("config needs an 'experiment' name")
        return cls(
            experiment=d.get("experiment", base.get("experiment")),
            grid=grid,
            scales=d.get("scales", base.get("scales")),
            params=params,
            seed=int(d.get("seed", base.get("seed", 0))),
            out=d.get("out", base.get("out")),
        )

    @classmethod
    def from_json(cls, path, defaults: dict | None = None) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()), defaults)
