"""Experiment sweeps: algorithm comparison and cross-location codebook matrix."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .core import Codebook
from .oracle import RssiOracle
from .scenario import Scenario, ScenarioError
from .search import SearchReport, run_search

RUN_HEADER = ["seed", "algorithm", "rows", "cols", "n", "i", "queries",
              "rssi_all_off_dbm", "rssi_final_dbm", "gain_db"]
LOCATIONS_HEADER = ["location", "cb_id", "rssi_dbm", "diag_is_row_max"]


def fmt(x: float) -> str:
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.6f}"


@dataclass(frozen=True)
class RunRow:
    seed: int
    algorithm: str
    report: SearchReport
    rssi_all_off_dbm: float
    rssi_final_dbm: float

    @property
    def gain_db(self) -> float:
        return self.rssi_final_dbm - self.rssi_all_off_dbm

    def as_csv(self) -> list[str]:
        g = self.report.final_codebook.grid
        i = self.report.influential_count
        return [str(self.seed), self.algorithm, str(g.rows), str(g.cols), str(g.n),
                "" if i is None else str(i), str(self.report.queries_used),
                fmt(self.rssi_all_off_dbm), fmt(self.rssi_final_dbm), fmt(self.gain_db)]


def run_cell(scenario: Scenario, seed: int, algorithm: str) -> RunRow:
    """One (seed, algorithm) run on the first location's channel model, reseeded.

    The RSSI columns are the true (noiseless, analytic) received powers of
    the all-off and final codebooks, independent of the oracle's noise.
    """
    chan = scenario.channel_for(scenario.locations[0], seed)
    oracle = RssiOracle(chan, scenario.oracle, stream_key=(seed,))
    report = run_search(algorithm, oracle, scenario.grid, random_budget=scenario.random_budget,
                        seed=seed, bench2_reset=scenario.bench2_reset)
    return RunRow(seed, algorithm, report, oracle.true_rssi(Codebook.all_off(scenario.grid)),
                  oracle.true_rssi(report.final_codebook))


def run_sweep(scenario: Scenario) -> list[RunRow]:
    cells = [(s, a) for s in scenario.seeds for a in scenario.algorithms]
    with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
        return list(pool.map(lambda cell: run_cell(scenario, *cell), cells))


def rows_to_csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run_csv(scenario: Scenario) -> str:
    return rows_to_csv(RUN_HEADER, [row.as_csv() for row in run_sweep(scenario)])


@dataclass(frozen=True)
class CrossEntry:
    location: str
    cb_id: str
    rssi_dbm: float
    diag_is_row_max: bool


def cross_location(scenario: Scenario, seed_offset: int = 0) -> list[CrossEntry]:
    """Generate one codebook per location, then measure every codebook everywhere.

    Location channels use each location's own seed plus ``seed_offset``.
    """
    if len(scenario.locations) < 2:
        raise ScenarioError("the cross-location experiment needs at least two locations")
    chans = [scenario.channel_for(loc, loc.channel.seed + seed_offset) for loc in scenario.locations]
    books: list[Codebook] = []
    for k, chan in enumerate(chans):
        oracle = RssiOracle(chan, scenario.oracle, stream_key=(seed_offset, k, 0))
        report = run_search(scenario.locations_algorithm, oracle, scenario.grid,
                            random_budget=scenario.random_budget, seed=seed_offset + k,
                            bench2_reset=scenario.bench2_reset)
        books.append(report.final_codebook)
    entries: list[CrossEntry] = []
    for k, (loc, chan) in enumerate(zip(scenario.locations, chans)):
        oracle = RssiOracle(chan, scenario.oracle, stream_key=(seed_offset, k, 1))
        values = [oracle.measure(cb) for cb in books]
        own_is_max = values[k] >= max(values)
        entries.extend(CrossEntry(loc.id, other.id, v, own_is_max)
                       for other, v in zip(scenario.locations, values))
    return entries


def locations_csv(scenario: Scenario) -> str:
    rows = [[e.location, e.cb_id, fmt(e.rssi_dbm), "true" if e.diag_is_row_max else "false"]
            for e in cross_location(scenario)]
    return rows_to_csv(LOCATIONS_HEADER, rows)
