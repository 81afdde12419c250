"""Summary statistics of flows and clusterings."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import ClassVar, Optional

from flowmap.flow import FlowField
from flowmap.mixins import SerializableMixin
from flowmap.network import StateNetwork
from flowmap.search import ClusteringResult
from flowmap.utils import entropy, perplexity


@dataclass
class MetricsReport(SerializableMixin):
    """Statistics of one clustering.

    Attributes:
        entropy_rate: Bits needed per step to predict where flow goes.
        weighted_depth: Flow-weighted average leaf depth, root counted as 1.
        module_perplexity: Effective number of top modules.
        assignment_perplexity: Effective number of finest modules per
            physical node, averaged with physical visit rates as weights.
        num_physical_nodes: Number of physical nodes.
        num_state_nodes: Number of state nodes.
        num_links: Number of links.
        codelength: Code length of the clustering.
        one_module_codelength: Code length without modules.
        num_top_modules: Number of top modules.
        num_levels: Depth of the deepest leaf.
    """

    _serialized_properties: ClassVar[list[str]] = ["relative_codelength_savings"]

    entropy_rate: float
    weighted_depth: float
    module_perplexity: float
    assignment_perplexity: float
    num_physical_nodes: int
    num_state_nodes: int
    num_links: int
    codelength: float = 0.0
    one_module_codelength: float = 0.0
    num_top_modules: int = 0
    num_levels: int = 0

    @property
    def relative_codelength_savings(self) -> float:
        if self.one_module_codelength <= 0:
            return 0.0
        return 1.0 - self.codelength / self.one_module_codelength


def entropy_rate(flow: FlowField) -> float:
    """Average entropy of the next step, weighted by state visit rates.

    Dangling states contribute nothing.
    """
    rows: dict[int, list[float]] = defaultdict(list)
    for (source, _), probability in flow.transition.items():
        rows[source].append(probability)
    return sum(
        flow.state_visit_rate[state_id] * entropy(probabilities)
        for state_id, probabilities in rows.items()
    )


def clustering_metrics(
    result: ClusteringResult, network: Optional[StateNetwork] = None
) -> MetricsReport:
    """Compute the statistics of a clustering result.

    Args:
        result: A search result.
        network: The clustered network; defaults to the result's network.

    Returns:
        The statistics of the clustering.
    """
    network = network or result.network
    flow = result.flow
    state_flow = flow.state_visit_rate
    multilevel_map = result.multilevel_map

    depths = multilevel_map.leaf_depths()
    total_flow = sum(state_flow[state] for state in depths)
    weighted_depth = sum(state_flow[state] * depth for state, depth in depths.items())

    module_flows = [
        sum(state_flow[state] for state in module.leaves())
        for module in multilevel_map.top_modules
    ]

    splits: dict[int, dict[tuple[int, ...], float]] = defaultdict(dict)
    for path, module in multilevel_map.finest_modules():
        for state_id in module.leaves():
            split = splits[network.physical_of(state_id)]
            split[path] = split.get(path, 0.0) + state_flow[state_id]
    physical_flows = {node: sum(split.values()) for node, split in splits.items()}
    assignment = sum(
        physical_flows[node] * perplexity(split.values())
        for node, split in splits.items()
    )

    return MetricsReport(
        entropy_rate=entropy_rate(flow),
        weighted_depth=weighted_depth / total_flow if total_flow > 0 else 0.0,
        module_perplexity=perplexity(module_flows),
        assignment_perplexity=assignment / total_flow if total_flow > 0 else 0.0,
        num_physical_nodes=network.num_physical_nodes,
        num_state_nodes=network.num_state_nodes,
        num_links=network.num_links,
        codelength=result.codelength,
        one_module_codelength=result.one_module_codelength,
        num_top_modules=result.num_top_modules,
        num_levels=result.num_levels,
    )
