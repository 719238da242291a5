"""Desk-scale laboratory for RIS codebook search driven by RSSI feedback."""
from .channel import ChannelSpec, FrameConfig, generate_channel, simulate_frames
from .core import (
    STATES,
    ChannelRealization,
    Codebook,
    ElementState,
    GainValue,
    Grid,
    cascade_gain,
    codebook_from_text,
    codebook_to_text,
    element_coefficient,
    exhaustive_optimum,
    flip_all,
)
from .oracle import OracleConfig, QueryLog, RssiOracle
from .search import (
    SearchReport,
    horizontal_search,
    influential_merge,
    predicted_queries,
    refine_remaining,
    run_alg1,
    run_benchmark1,
    run_benchmark2,
    run_random,
    run_search,
    vertical_search,
)

__version__ = "0.1.0"
