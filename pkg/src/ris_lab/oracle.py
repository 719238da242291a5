"""Black-box RSSI measurement interface consumed by every search algorithm."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .channel import FrameConfig, simulate_frames
from .core import ChannelRealization, Codebook, cascade_gain


@dataclass(frozen=True)
class OracleConfig:
    mode: str = "analytic"
    # Placeholder: the test-bed's measurement noise is not characterised.
    measurement_noise_db: float = 0.0
    frame_config: FrameConfig = field(default_factory=FrameConfig)
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("analytic", "empirical"):
            raise ValueError(f"oracle mode must be analytic or empirical, got {self.mode!r}")
        if not self.measurement_noise_db >= 0:
            raise ValueError("measurement_noise_db must be >= 0")


class Measurement(NamedTuple):
    index: int
    digest: str
    rssi_dbm: float


@dataclass
class QueryLog:
    trajectory: list[Measurement] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.trajectory)


class RssiOracle:
    """Measures the received power of a codebook on one channel realization.

    Every ``measure`` call counts as one query. ``stream_key`` selects an
    independent noise stream under the same ``noise_seed`` (used by sweeps
    that share one config across many runs).
    """

    def __init__(self, channel: ChannelRealization, config: OracleConfig | None = None,
                 stream_key: Sequence[int] = ()):
        self.channel = channel
        self.config = config or OracleConfig()
        seq = np.random.SeedSequence(self.config.noise_seed, spawn_key=tuple(stream_key))
        dbn_seq, frame_seq = seq.spawn(2)
        self._db_noise = np.random.default_rng(dbn_seq)
        self._frame_seeds = frame_seq
        self._log = QueryLog()

    @property
    def frames(self) -> int:
        return self.config.frame_config.frames if self.config.mode == "empirical" else 0

    def measure(self, cb: Codebook) -> float:
        if cb.n != self.channel.n:
            raise ValueError(f"dimension mismatch: oracle channel has N={self.channel.n}, codebook has N={cb.n}")
        if self.config.mode == "analytic":
            rssi = cascade_gain(self.channel, cb).dbm(self.channel.tx_power_dbm)
        else:
            (child,) = self._frame_seeds.spawn(1)
            rssi = simulate_frames(self.channel, cb, self.config.frame_config, child)
        if self.config.measurement_noise_db > 0:
            rssi += float(self._db_noise.normal(0.0, self.config.measurement_noise_db))
        self._log.trajectory.append(Measurement(self._log.count + 1, cb.digest(), rssi))
        return rssi

    def true_rssi(self, cb: Codebook) -> float:
        """Noiseless analytic power; not counted as a query."""
        return cascade_gain(self.channel, cb).dbm(self.channel.tx_power_dbm)

    def reset(self) -> None:
        self._log = QueryLog()

    def query_count(self) -> int:
        return self._log.count

    def take_trajectory(self) -> QueryLog:
        return QueryLog(list(self._log.trajectory))

