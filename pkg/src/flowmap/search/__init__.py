"""Search for maps that minimize the map equation."""

from flowmap.search.config import SearchConfig
from flowmap.search.graph import FlowGraph
from flowmap.search.hierarchy import (
    ClusteringResult,
    multilevel_partition,
    partition_two_level,
    sub_modules,
    super_modules,
)
from flowmap.search.partition import FlatPartition, optimize_moves
from flowmap.search.tuning import coarse_tune, fine_tune, repeated_node_aggregation

__all__ = [
    "ClusteringResult",
    "FlatPartition",
    "FlowGraph",
    "SearchConfig",
    "coarse_tune",
    "fine_tune",
    "multilevel_partition",
    "optimize_moves",
    "partition_two_level",
    "repeated_node_aggregation",
    "sub_modules",
    "super_modules",
]
