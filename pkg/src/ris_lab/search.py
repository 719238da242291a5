"""Codebook search driven purely by RSSI feedback.

Implements the influential-element iterative search (``alg1``), the
per-element benchmark (``bench1``), the row-then-column benchmark
(``bench2``), a random baseline and an exhaustive genie baseline.

Counting convention: every ``oracle.measure`` call is one query, including
the initial all-off measurement and the re-measurement of the merged
codebook before refinement.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .core import STATES, Codebook, Grid, exhaustive_optimum

ALGORITHM_IDS = ("alg1", "bench1", "bench2", "random", "exhaustive")


class Oracle(Protocol):
    def measure(self, cb: Codebook) -> float: ...

    def query_count(self) -> int: ...


Accepted = list[tuple[int, float]]


@dataclass
class SearchReport:
    """Outcome of one search run.

    ``accepted_trajectory`` starts with the measurement the final codebook's
    lineage was built on (the all-off baseline, or for ``alg1`` the merged
    codebook measured before refinement) followed by every strict
    improvement, as ``(query index, rssi_dbm)`` pairs.
    """

    algorithm_id: str
    final_codebook: Codebook
    final_rssi_dbm: float
    queries_used: int
    accepted_trajectory: Accepted
    initial_rssi_dbm: float | None = None
    phi_h: Codebook | None = None
    phi_v: Codebook | None = None
    influential_count: int | None = None
    influential_mask: tuple[bool, ...] | None = None
    phase_trajectories: dict[str, Accepted] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def text(cb: Codebook | None) -> str | None:
            return None if cb is None else cb.to_text()

        return {
            "algorithm_id": self.algorithm_id,
            "final_codebook": text(self.final_codebook),
            "final_rssi_dbm": self.final_rssi_dbm,
            "queries_used": self.queries_used,
            "accepted_trajectory": [list(p) for p in self.accepted_trajectory],
            "initial_rssi_dbm": self.initial_rssi_dbm,
            "phi_h": text(self.phi_h),
            "phi_v": text(self.phi_v),
            "influential_count": self.influential_count,
            "influential_mask": None if self.influential_mask is None else [int(m) for m in self.influential_mask],
            "phase_trajectories": {k: [list(p) for p in v] for k, v in self.phase_trajectories.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _group_pass(oracle: Oracle, base: Codebook, groups: Iterable[Sequence[int]],
                p_max: float) -> tuple[Codebook, float, Accepted]:
    """Try every state on each group in turn, keeping strict improvements.

    Each group is written into the working codebook as a whole; after a group
    is finished the working codebook is reset to the best one found so far.
    Groups without members are still measured so the query count depends
    only on the number of groups.
    """
    best = base
    temp = base
    accepted: Accepted = []
    for members in groups:
        for state in STATES:
            temp = temp.replace(members, state)
            p = oracle.measure(temp)
            if p > p_max:
                best, p_max = temp, p
                accepted.append((oracle.query_count(), p))
        temp = best
    return best, p_max, accepted


def _measure(oracle: Oracle, cb: Codebook) -> tuple[int, float]:
    p = oracle.measure(cb)
    return oracle.query_count(), p


def horizontal_search(oracle: Oracle, grid: Grid, trace: Accepted | None = None
                      ) -> tuple[Codebook, float, float]:
    """Row-by-row search from all-off. Returns ``(phi_h, p_max, p0)``; 1 + 4R queries."""
    off = Codebook.all_off(grid)
    i0, p0 = _measure(oracle, off)
    phi_h, p_max, accepted = _group_pass(oracle, off, grid.row_members, p0)
    if trace is not None:
        trace.extend([(i0, p0), *accepted])
    return phi_h, p_max, p0


def vertical_search(oracle: Oracle, grid: Grid, p0: float, trace: Accepted | None = None
                    ) -> tuple[Codebook, float]:
    """Column-by-column search from all-off against the initial power ``p0``; 4C queries."""
    off = Codebook.all_off(grid)
    phi_v, p_max, accepted = _group_pass(oracle, off, grid.col_members, p0)
    if trace is not None:
        trace.extend(accepted)
    return phi_v, p_max


def influential_merge(phi_h: Codebook, phi_v: Codebook) -> tuple[Codebook, tuple[bool, ...], int]:
    """Cells whose full (h, v) state agrees in both codebooks, fixed to that state.

    Returns the partial codebook (all other cells off), a per-cell mask over
    the R x C grid, and the influential count I.
    """
    if phi_h.grid != phi_v.grid:
        raise ValueError("phi_h and phi_v have different grid dimensions or masks")
    grid = phi_h.grid
    states = []
    mask = [False] * (grid.rows * grid.cols)
    for (r, c), sh, sv in zip(grid.cells, phi_h.states, phi_v.states):
        if sh == sv:
            mask[r * grid.cols + c] = True
            states.append(sh)
        else:
            states.append(STATES[0])
    partial = Codebook(grid, tuple(states))
    return partial, tuple(mask), sum(mask)


def _remaining(grid: Grid, influential_mask: Sequence[bool]) -> list[tuple[int]]:
    if len(influential_mask) != grid.rows * grid.cols:
        raise ValueError(f"influential mask has {len(influential_mask)} cells, expected {grid.rows * grid.cols}")
    return [(idx,) for idx, (r, c) in enumerate(grid.cells) if not influential_mask[r * grid.cols + c]]


def refine_remaining(oracle: Oracle, partial: Codebook, influential_mask: Sequence[bool],
                     trace: Accepted | None = None) -> Codebook:
    """Per-element pass over non-influential cells on top of ``partial``; 1 + 4(N - I) queries."""
    return _refine(oracle, partial, influential_mask, trace)[0]


def _refine(oracle: Oracle, partial: Codebook, influential_mask: Sequence[bool],
            trace: Accepted | None) -> tuple[Codebook, float]:
    groups = _remaining(partial.grid, influential_mask)
    i_base, p_base = _measure(oracle, partial)
    final, p_max, accepted = _group_pass(oracle, partial, groups, p_base)
    if trace is not None:
        trace.extend([(i_base, p_base), *accepted])
    return final, p_max


def run_alg1(oracle: Oracle, grid: Grid) -> SearchReport:
    start = oracle.query_count()
    h_trace: Accepted = []
    v_trace: Accepted = []
    r_trace: Accepted = []
    phi_h, _, p0 = horizontal_search(oracle, grid, h_trace)
    phi_v, _ = vertical_search(oracle, grid, p0, v_trace)
    partial, mask, influential = influential_merge(phi_h, phi_v)
    final, p_final = _refine(oracle, partial, mask, r_trace)
    return SearchReport(
        algorithm_id="alg1",
        final_codebook=final,
        final_rssi_dbm=p_final,
        queries_used=oracle.query_count() - start,
        accepted_trajectory=r_trace,
        initial_rssi_dbm=p0,
        phi_h=phi_h,
        phi_v=phi_v,
        influential_count=influential,
        influential_mask=mask,
        phase_trajectories={"horizontal": h_trace, "vertical": [h_trace[0], *v_trace], "refine": r_trace},
    )


def run_benchmark1(oracle: Oracle, grid: Grid) -> SearchReport:
    """Element-by-element search from all-off; 1 + 4N queries."""
    start = oracle.query_count()
    off = Codebook.all_off(grid)
    i0, p0 = _measure(oracle, off)
    final, p_final, accepted = _group_pass(oracle, off, [(i,) for i in range(grid.n)], p0)
    return SearchReport(
        algorithm_id="bench1",
        final_codebook=final,
        final_rssi_dbm=p_final,
        queries_used=oracle.query_count() - start,
        accepted_trajectory=[(i0, p0), *accepted],
        initial_rssi_dbm=p0,
    )


def run_benchmark2(oracle: Oracle, grid: Grid, reset_max: bool = False) -> SearchReport:
    """Row search, then a column search on top of the trained rows; 1 + 4R + 4C queries.

    By default the running maximum carries over from the row pass into the
    column pass. ``reset_max=True`` restarts it at the all-off power instead.
    """
    start = oracle.query_count()
    h_trace: Accepted = []
    phi_h, p_h, p0 = horizontal_search(oracle, grid, h_trace)
    final, p_final, v_accepted = _group_pass(oracle, phi_h, grid.col_members, p0 if reset_max else p_h)
    return SearchReport(
        algorithm_id="bench2",
        final_codebook=final,
        final_rssi_dbm=p_final,
        queries_used=oracle.query_count() - start,
        accepted_trajectory=[*h_trace, *v_accepted],
        initial_rssi_dbm=p0,
        phi_h=phi_h,
        phi_v=final,
    )


def run_random(oracle: Oracle, grid: Grid, budget: int, seed: int) -> SearchReport:
    """Best of ``budget`` uniformly random codebooks (drawn with replacement)."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    start = oracle.query_count()
    rng = np.random.default_rng(seed)
    best: Codebook | None = None
    p_best = -np.inf
    accepted: Accepted = []
    for _ in range(budget):
        cb = Codebook.from_codes(grid, rng.integers(0, 4, grid.n))
        p = oracle.measure(cb)
        if best is None or p > p_best:
            best, p_best = cb, p
            accepted.append((oracle.query_count(), p))
    assert best is not None
    return SearchReport(
        algorithm_id="random",
        final_codebook=best,
        final_rssi_dbm=float(p_best),
        queries_used=oracle.query_count() - start,
        accepted_trajectory=accepted,
    )


def run_exhaustive(oracle, grid: Grid) -> SearchReport:
    """Genie baseline: enumerates the oracle's channel directly, using no queries."""
    best, gain = exhaustive_optimum(oracle.channel, grid)
    rssi = gain.dbm(oracle.channel.tx_power_dbm)
    return SearchReport(
        algorithm_id="exhaustive",
        final_codebook=best,
        final_rssi_dbm=rssi,
        queries_used=0,
        accepted_trajectory=[],
    )


def run_search(algorithm_id: str, oracle: Oracle, grid: Grid, *, random_budget: int | None = None,
               seed: int = 0, bench2_reset: bool = False) -> SearchReport:
    if algorithm_id == "alg1":
        return run_alg1(oracle, grid)
    if algorithm_id == "bench1":
        return run_benchmark1(oracle, grid)
    if algorithm_id == "bench2":
        return run_benchmark2(oracle, grid, reset_max=bench2_reset)
    if algorithm_id == "random":
        budget = random_budget if random_budget is not None else 1 + 4 * grid.n
        return run_random(oracle, grid, budget, seed)
    if algorithm_id == "exhaustive":
        return run_exhaustive(oracle, grid)
    raise ValueError(f"unknown algorithm {algorithm_id!r}")


def predicted_queries(algorithm_id: str, rows: int, cols: int, n: int, influential: int | None = None) -> int:
    """Exact query count of a run under the counting convention above."""
    if not (rows >= 1 and cols >= 1 and 1 <= n <= rows * cols):
        raise ValueError(f"inconsistent dimensions R={rows} C={cols} N={n}")
    if algorithm_id == "bench1":
        return 1 + 4 * n
    if algorithm_id == "bench2":
        return 1 + 4 * rows + 4 * cols
    if algorithm_id == "alg1":
        if influential is None or not 0 <= influential <= n:
            raise ValueError(f"alg1 needs an influential count in [0, {n}], got {influential!r}")
        return 2 + 4 * rows + 4 * cols + 4 * (n - influential)
    raise ValueError(f"no query-count formula for algorithm {algorithm_id!r}")
