"""Scenario configuration documents (JSON)."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .channel import ChannelSpec, FrameConfig, generate_channel
from .core import ChannelRealization, Grid
from .oracle import OracleConfig
from .search import ALGORITHM_IDS


class ScenarioError(ValueError):
    pass


# Desk-scale reproduction of the prototype: an 8-row x 10-column panel with a
# 2x2 controller block (76 controllable elements), -10 dBm transmit power.
DEFAULT_SCENARIO: dict[str, Any] = {
    "rows": 8,
    "cols": 10,
    "mask": {"controller_block": [2, 2], "corner": "top-left"},
    "alpha": 1.0,
    "tx_power_dbm": -10.0,
    "noise_power_dbm": -90.0,
    "locations": [
        {"id": "LocA", "channel": {"kind": "rayleigh", "path_loss_db": 30.0, "seed": 101}},
        {"id": "LocB", "channel": {"kind": "rayleigh", "path_loss_db": 30.0, "seed": 202}},
        {"id": "LocC", "channel": {"kind": "rayleigh", "path_loss_db": 30.0, "seed": 303}},
    ],
    "oracle": {"mode": "analytic", "measurement_noise_db": 0.0, "noise_seed": 0,
               "frames": 50, "samples_per_frame": 1000, "modulation_order": 4},
    "algorithms": ["alg1", "bench1", "bench2"],
    "seeds": [1, 2, 3],
    "locations_algorithm": "alg1",
    "random_budget": None,
    "bench2_reset": False,
    "workers": 1,
}


@dataclass(frozen=True)
class Location:
    id: str
    channel: ChannelSpec
    background: complex = 0j


@dataclass(frozen=True)
class Scenario:
    grid: Grid
    locations: tuple[Location, ...]
    oracle: OracleConfig
    algorithms: tuple[str, ...]
    seeds: tuple[int, ...]
    alpha: float = 1.0
    tx_power_dbm: float = -10.0
    noise_power_dbm: float = -90.0
    locations_algorithm: str = "alg1"
    random_budget: int | None = None
    bench2_reset: bool = False
    workers: int = 1

    def channel_for(self, location: Location, seed: int | None = None) -> ChannelRealization:
        spec = location.channel
        if seed is not None:
            spec = ChannelSpec(spec.kind, spec.rician_k, spec.path_loss_db, seed)
        return generate_channel(spec, self.grid.n, background=location.background, alpha=self.alpha,
                                tx_power_dbm=self.tx_power_dbm, noise_power_dbm=self.noise_power_dbm)


def _mask(rows: int, cols: int, spec: Any) -> Grid:
    if spec is None:
        return Grid(rows, cols)
    if isinstance(spec, list):
        if len(spec) != rows or any(not isinstance(s, str) or len(s) != cols for s in spec):
            raise ScenarioError(f"mask must be {rows} strings of {cols} characters")
        cells = "".join(spec)
        if set(cells) - {".", "#"}:
            raise ScenarioError("mask strings may only contain '.' (element) and '#' (controller)")
        return Grid(rows, cols, tuple(ch == "." for ch in cells))
    if isinstance(spec, dict):
        block = spec.get("controller_block", [0, 0])
        return Grid.with_block(rows, cols, int(block[0]), int(block[1]), spec.get("corner", "top-left"))
    raise ScenarioError("mask must be null, a list of row strings, or a controller_block object")


def parse_scenario(doc: dict[str, Any]) -> Scenario:
    """Build a Scenario from a config document; missing keys take defaults."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    merged = copy.deepcopy(DEFAULT_SCENARIO)
    merged.update(doc)
    oracle_doc = dict(DEFAULT_SCENARIO["oracle"])
    oracle_doc.update(doc.get("oracle") or {})
    try:
        grid = _mask(int(merged["rows"]), int(merged["cols"]), merged["mask"])
        if grid.n < 1:
            raise ScenarioError("scenario needs at least one controllable element")
        locations = []
        for loc in merged["locations"]:
            bg = loc.get("background", [0.0, 0.0])
            locations.append(Location(str(loc["id"]), ChannelSpec(**loc.get("channel", {})),
                                      complex(float(bg[0]), float(bg[1]))))
        if not locations:
            raise ScenarioError("scenario needs at least one location")
        if len({loc.id for loc in locations}) != len(locations):
            raise ScenarioError("location ids must be unique")
        oracle = OracleConfig(
            mode=oracle_doc["mode"],
            measurement_noise_db=float(oracle_doc["measurement_noise_db"]),
            frame_config=FrameConfig(int(oracle_doc["frames"]), int(oracle_doc["samples_per_frame"]),
                                     int(oracle_doc["modulation_order"])),
            noise_seed=int(oracle_doc["noise_seed"]),
        )
        algorithms = tuple(merged["algorithms"])
        seeds = tuple(int(s) for s in merged["seeds"])
        budget = merged["random_budget"]
        scenario = Scenario(
            grid=grid,
            locations=tuple(locations),
            oracle=oracle,
            algorithms=algorithms,
            seeds=seeds,
            alpha=float(merged["alpha"]),
            tx_power_dbm=float(merged["tx_power_dbm"]),
            noise_power_dbm=float(merged["noise_power_dbm"]),
            locations_algorithm=str(merged["locations_algorithm"]),
            random_budget=None if budget is None else int(budget),
            bench2_reset=bool(merged["bench2_reset"]),
            workers=int(merged["workers"]),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None
    if not algorithms:
        raise ScenarioError("scenario needs at least one algorithm")
    for algo in (*algorithms, scenario.locations_algorithm):
        if algo not in ALGORITHM_IDS:
            raise ScenarioError(f"unknown algorithm {algo!r}")
    if len(set(seeds)) != len(seeds):
        raise ScenarioError("seeds must be distinct")
    if scenario.workers < 1:
        raise ScenarioError("workers must be >= 1")
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file. IO problems surface as OSError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from None
    return parse_scenario(doc)
