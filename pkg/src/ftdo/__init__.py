"""Fault-tolerant distance oracles, spanner sketches, and stream processing.

Compact data structures that answer post-deletion distance queries (or
recover post-deletion spanners) for any bounded set of edge failures,
verified at desk scale against exact brute force.
"""

from .graph import (
    UNREACHABLE,
    Graph,
    Unreachable,
    bfs_distances,
    brute_force_expansion,
    conductance,
    edge_from_id,
    edge_id,
    format_edge_list,
    induced_subgraph,
    parse_edge_list,
)
from .sketch import L0Sketch, SyndromeSketch, choose_prime, open_bundle
from .decomposition import (
    Decomposition,
    DecompositionConfig,
    certify_expansion,
    decompose,
    peel,
    robustness_report,
)
from .oracle import (
    ExpanderOracle,
    OracleConfig,
    build_oracle,
    build_weighted_oracle,
)
from .stars import StarConfig, StarOracle, build_star_oracle, construct_star, star_covers
from .spanner import SpannerConfig, SpannerSketch, build_spanner_sketch, recover_spanner
from .streaming import StreamConfig, StreamState, parse_events
from .verify import Scenario, measure_space, run_verification, space_sweep

__version__ = "0.1.0"

__all__ = [
    "UNREACHABLE",
    "Unreachable",
    "Graph",
    "bfs_distances",
    "brute_force_expansion",
    "conductance",
    "edge_from_id",
    "edge_id",
    "format_edge_list",
    "induced_subgraph",
    "parse_edge_list",
    "L0Sketch",
    "SyndromeSketch",
    "choose_prime",
    "open_bundle",
    "Decomposition",
    "DecompositionConfig",
    "certify_expansion",
    "decompose",
    "peel",
    "robustness_report",
    "ExpanderOracle",
    "OracleConfig",
    "build_oracle",
    "build_weighted_oracle",
    "StarConfig",
    "StarOracle",
    "build_star_oracle",
    "construct_star",
    "star_covers",
    "SpannerConfig",
    "SpannerSketch",
    "build_spanner_sketch",
    "recover_spanner",
    "StreamConfig",
    "StreamState",
    "parse_events",
    "Scenario",
    "measure_space",
    "run_verification",
    "space_sweep",
]
