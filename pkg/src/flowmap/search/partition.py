"""Two-level partitions of flow graphs and the core node-moving loop."""

from __future__ import annotations

import heapq
import logging
from collections import defaultdict
from collections.abc import Sequence
from typing import Optional

import numpy as np

from flowmap.mapequation import ModuleFlow, NodeMoveTerms, TwoLevelTerms
from flowmap.search.config import SearchConfig
from flowmap.search.graph import FlowGraph

logger = logging.getLogger(__name__)


class FlatPartition:
    """A two-level partition of a flow graph with incremental code lengths.

    Module ids are integers below the number of nodes. Ids freed by
    emptied modules are reused smallest first.

    Args:
        graph: The graph to partition.
        assignment: Module label of each node, or None for one
            module per node. Labels are renumbered in ascending order.
    """

    def __init__(
        self, graph: FlowGraph, assignment: Optional[Sequence[int]] = None
    ) -> None:
        self.graph = graph
        if assignment is None:
            self.module_of = list(range(graph.num_nodes))
        else:
            labels = {label: i for i, label in enumerate(sorted(set(assignment)))}
            self.module_of = [labels[label] for label in assignment]

        modules: dict[int, ModuleFlow] = defaultdict(ModuleFlow)
        for node, module_id in enumerate(self.module_of):
            module = modules[module_id]
            module.flow += graph.node_flow[node]
            module.num_nodes += 1
            for key, flow in graph.physical_flow[node].items():
                module.physical_flow[key] = module.physical_flow.get(key, 0.0) + flow
                module.physical_count[key] = module.physical_count.get(key, 0) + 1
        for source, targets in enumerate(graph.out_links):
            for target, flow in targets.items():
                source_module = self.module_of[source]
                target_module = self.module_of[target]
                if source_module != target_module:
                    modules[source_module].exit_flow += flow
                    modules[target_module].enter_flow += flow

        self.terms = TwoLevelTerms()
        for module_id in sorted(modules):
            self.terms.add_module(module_id, modules[module_id])
        unused = set(range(graph.num_nodes)) - set(modules)
        self._free_ids = sorted(unused)
        heapq.heapify(self._free_ids)

    @property
    def num_modules(self) -> int:
        return len(self.terms.modules)

    @property
    def codelength(self) -> float:
        return self.terms.codelength

    def node_terms(self, node: int) -> NodeMoveTerms:
        """Collect the flows of a node toward and from each module."""
        out_to: dict[int, float] = defaultdict(float)
        in_from: dict[int, float] = defaultdict(float)
        for target, flow in self.graph.out_links[node].items():
            out_to[self.module_of[target]] += flow
        for source, flow in self.graph.in_links[node].items():
            in_from[self.module_of[source]] += flow
        return NodeMoveTerms(
            flow=self.graph.node_flow[node],
            physical_flow=self.graph.physical_flow[node],
            out_flow=sum(out_to.values()),
            in_flow=sum(in_from.values()),
            out_to=out_to,
            in_from=in_from,
        )

    def candidate_modules(self, node: int, terms: NodeMoveTerms) -> list[int]:
        """List neighboring modules by id, then an unused module if any helps."""
        current = self.module_of[node]
        candidates = sorted((set(terms.out_to) | set(terms.in_from)) - {current})
        if self.terms.modules[current].num_nodes > 1:
            candidates.append(self._free_ids[0])
        return candidates

    def delta(self, node: int, terms: NodeMoveTerms, target: int) -> float:
        return self.terms.delta(terms, self.module_of[node], target)

    def move(self, node: int, terms: NodeMoveTerms, target: int) -> None:
        source = self.module_of[node]
        if source == target:
            return
        if target not in self.terms.modules:
            heapq.heappop(self._free_ids)
        self.terms.move(terms, source, target)
        self.module_of[node] = target
        if source not in self.terms.modules:
            heapq.heappush(self._free_ids, source)

    def compact_assignment(self) -> list[int]:
        """Module of each node, renumbered 0, 1, ... in ascending id order."""
        labels = {label: i for i, label in enumerate(sorted(self.terms.modules))}
        return [labels[module_id] for module_id in self.module_of]


def optimize_moves(
    partition: FlatPartition, config: SearchConfig, rng: np.random.Generator
) -> int:
    """Move single nodes between modules while the code length drops.

    Each sweep visits the nodes in a fresh random order and moves each
    node to the neighboring module, or to a new module, that lowers the
    code length the most, provided it lowers it by more than epsilon.

    Args:
        partition: The partition to improve in place.
        config: Search settings.
        rng: Source of the node orders.

    Returns:
        The number of sweeps that moved at least one node.
    """
    sweeps_with_moves = 0
    for _ in range(config.max_move_iterations):
        moves = 0
        for node in rng.permutation(partition.graph.num_nodes).tolist():
            terms = partition.node_terms(node)
            best_module = partition.module_of[node]
            best_delta = 0.0
            for candidate in partition.candidate_modules(node, terms):
                delta = partition.delta(node, terms, candidate)
                if delta < best_delta:
                    best_module, best_delta = candidate, delta
            if best_delta < -config.epsilon:
                partition.move(node, terms, best_module)
                moves += 1
        logger.debug(
            f"Sweep moved {moves} nodes, {partition.num_modules} modules remain."
        )
        if moves == 0:
            break
        sweeps_with_moves += 1
    return sweeps_with_moves
