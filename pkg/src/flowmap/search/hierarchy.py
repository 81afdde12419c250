"""Hierarchical search: supermodules above and submodules below a partition."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from flowmap.flow import FlowField
from flowmap.mapequation import (
    CodelengthTerms,
    codelength_multilevel,
    flow_terms,
    log_terms,
    one_module_codelength,
)
from flowmap.network import StateNetwork
from flowmap.search.config import SearchConfig
from flowmap.search.graph import FlowGraph
from flowmap.search.tuning import best_two_level_trial, two_level_trial
from flowmap.tree import MultilevelMap, TreeNode

logger = logging.getLogger(__name__)


@dataclass
class ClusteringResult:
    """The best map found by a search, with its code length and provenance.

    Attributes:
        multilevel_map: The clustering of the state nodes.
        codelength: Code length of the map in bits per step.
        network: The clustered network.
        flow: Flows of the network.
        seed: Seed of the search.
        trial: Index of the trial that found the map.
        two_level_codelength: Best code length among two-level maps.
        one_module_codelength: Code length without modules.
    """

    multilevel_map: MultilevelMap
    codelength: float
    network: StateNetwork
    flow: FlowField
    seed: int
    trial: int
    two_level_codelength: float
    one_module_codelength: float

    @property
    def num_top_modules(self) -> int:
        return self.multilevel_map.num_top_modules

    @property
    def num_levels(self) -> int:
        return self.multilevel_map.num_levels

    @property
    def relative_codelength_savings(self) -> float:
        """Fraction of the no-module code length saved by the map."""
        if self.one_module_codelength <= 0:
            return 0.0
        return 1.0 - self.codelength / self.one_module_codelength


class _Evaluator:
    """Code lengths of maps over the state ids of a leaf-level graph."""

    def __init__(self, graph: FlowGraph) -> None:
        self.state_flow = graph.state_flows()
        self.physical_of = graph.physical_keys()
        self.link_flows = list(graph.link_flows())

    def terms(self, multilevel_map: MultilevelMap) -> CodelengthTerms:
        return flow_terms(
            multilevel_map, self.state_flow, self.physical_of, self.link_flows
        )

    def codelength(self, multilevel_map: MultilevelMap) -> float:
        return self.terms(multilevel_map).codelength


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def tree_from_assignment(graph: FlowGraph, assignment: Sequence[int]) -> MultilevelMap:
    """Build a two-level map with one module per label over the member states."""
    groups: dict[int, list[int]] = dict()
    for node, label in enumerate(assignment):
        groups.setdefault(label, []).extend(graph.members[node])
    return MultilevelMap(
        TreeNode.module(TreeNode.leaf(state) for state in sorted(groups[label]))
        for label in sorted(groups)
    )


def super_modules(
    graph: FlowGraph,
    multilevel_map: MultilevelMap,
    config: SearchConfig,
    rng: np.random.Generator,
) -> MultilevelMap:
    """Stack levels of supermodules on top of a map while they shorten it.

    The top modules become the nodes of a module-level graph, with visit
    rates equal to their enter rates and links carrying the flow between
    them. A two-level partition of that graph replaces the index codebook
    by a smaller index codebook and one codebook per supermodule, taking
    the best of ``config.num_trials`` partitions of the module graph. A level
    is kept if this lowers the code length by more than epsilon, and not
    when everything ends up in one supermodule or each module in its own.

    Args:
        graph: Leaf-level graph of the clustered states.
        multilevel_map: The map to extend.
        config: Search settings.
        rng: Source of the node orders.

    Returns:
        The map with any accepted supermodule levels on top.
    """
    evaluator = _Evaluator(graph)
    current = multilevel_map
    for level in range(1, config.max_level_iterations + 1):
        num_top = current.num_top_modules
        if num_top <= 1:
            break
        terms = evaluator.terms(current)
        top_of = current.top_module_of()
        assignment = [top_of[members[0]] for members in graph.members]
        enter_flow = {i: terms.modules[(i + 1,)].enter_rate for i in range(num_top)}
        module_graph = graph.module_graph(assignment, enter_flow)

        grouping, super_length = best_two_level_trial(module_graph, config, rng)
        num_super = len(set(grouping))
        delta = super_length - terms.index_codelength
        if num_super in (1, num_top) or delta > -config.epsilon:
            break

        groups: dict[int, list[TreeNode]] = dict()
        for module, label in zip(current.top_modules, grouping):
            groups.setdefault(label, []).append(module)
        current = MultilevelMap(
            TreeNode.module(groups[label]) for label in sorted(groups)
        )
        logger.info(
            f"Supermodule level {level}: {num_top} modules into {num_super} "
            f"supermodules ({delta:+.6f} bits)."
        )
    return current


def _split_module(
    graph: FlowGraph,
    node_of_state: dict[int, int],
    states: list[int],
    config: SearchConfig,
    seed: int,
) -> Optional[list[TreeNode]]:
    if len(states) <= 1:
        return None
    subgraph = graph.subgraph([node_of_state[state] for state in states])
    rng = np.random.default_rng(seed)
    assignment, _ = best_two_level_trial(subgraph, config, rng)
    if len(set(assignment)) in (1, len(states)):
        return None
    sub_map = tree_from_assignment(subgraph, assignment)
    sub_map = super_modules(subgraph, sub_map, config, rng)
    return sub_map.top_modules


def _finest_modules(nodes: Sequence[TreeNode]) -> list[TreeNode]:
    finest = list()
    for node in nodes:
        if node.is_finest:
            finest.append(node)
        else:
            finest.extend(_finest_modules(node.children))
    return finest


def sub_modules(
    graph: FlowGraph,
    multilevel_map: MultilevelMap,
    config: SearchConfig,
    rng: np.random.Generator,
) -> MultilevelMap:
    """Search for submodules below the top modules, breadth first.

    Only the top modules of the map are kept. Each module in the queue is
    clustered on its own subgraph with the best of ``config.num_trials``
    two-level trials, and supermodules are stacked on the
    result. A non-trivial split that lowers the code length of the whole
    map replaces the module's leaves, and its finest new modules join the
    queue. Each module gets its own seed drawn in queue order, so the
    outcome does not depend on whether worker threads are used.

    Args:
        graph: Leaf-level graph of the clustered states.
        multilevel_map: The map whose top modules are refined.
        config: Search settings.
        rng: Source of the per-module seeds.

    Returns:
        The refined map.
    """
    evaluator = _Evaluator(graph)
    node_of_state = graph.node_index()
    result = MultilevelMap(
        TreeNode.module(TreeNode.leaf(state) for state in module.leaves())
        for module in multilevel_map.top_modules
    )
    queue = list(result.top_modules)
    depth = 1
    while queue:
        seeds = rng.integers(0, 2**32, size=len(queue)).tolist()
        states = [list(module.leaves()) for module in queue]

        def split(item: tuple[list[int], int]) -> Optional[list[TreeNode]]:
            return _split_module(graph, node_of_state, item[0], config, item[1])

        if config.parallel_submodules:
            with ThreadPoolExecutor(max_workers=config.max_workers) as executor:
                proposals = list(executor.map(split, zip(states, seeds)))
        else:
            proposals = [split(item) for item in zip(states, seeds)]

        next_queue: list[TreeNode] = list()
        codelength = evaluator.codelength(result)
        accepted = 0
        for module, proposal in zip(queue, proposals):
            if proposal is None:
                continue
            leaves = module.children
            module.children = proposal
            candidate_length = evaluator.codelength(result)
            if candidate_length < codelength - config.epsilon:
                codelength = candidate_length
                next_queue.extend(_finest_modules(proposal))
                accepted += 1
            else:
                module.children = leaves
        logger.info(
            f"Submodule depth {depth}: split {accepted} of {len(queue)} modules."
        )
        queue = next_queue
        depth += 1
    return result


def _best_index(lengths: Sequence[float], epsilon: float) -> int:
    best = 0
    for index, length in enumerate(lengths):
        if length < lengths[best] - epsilon:
            best = index
    return best


def partition_two_level(
    network: StateNetwork, flow: FlowField, config: Optional[SearchConfig] = None
) -> ClusteringResult:
    """Find the best two-level map over several seeded trials.

    Args:
        network: The network to cluster.
        flow: Stationary flows of the network.
        config: Search settings.

    Returns:
        The best map; ties go to the earliest trial.
    """
    config = config or SearchConfig()
    graph = FlowGraph.from_flow(network, flow)
    trials = list()
    for trial in range(config.num_trials):
        assignment, codelength = two_level_trial(
            graph, config, _trial_rng(config.seed, trial)
        )
        logger.info(
            f"Trial {trial + 1}/{config.num_trials}: {codelength:.6f} bits in "
            f"{len(set(assignment))} modules."
        )
        trials.append((assignment, codelength))
    best = _best_index([length for _, length in trials], config.epsilon)
    multilevel_map = tree_from_assignment(graph, trials[best][0])
    codelength = codelength_multilevel(multilevel_map, flow, network)
    return ClusteringResult(
        multilevel_map=multilevel_map,
        codelength=codelength,
        network=network,
        flow=flow,
        seed=config.seed,
        trial=best,
        two_level_codelength=codelength,
        one_module_codelength=one_module_codelength(flow, network),
    )


def multilevel_partition(
    network: StateNetwork, flow: FlowField, config: Optional[SearchConfig] = None
) -> ClusteringResult:
    """Find the best multilevel map over several seeded trials.

    Each trial finds a two-level map, stacks supermodules on it, and then
    searches for submodules below its top modules. The shortest of these
    three maps is the outcome of the trial, so the result is never longer
    than the best two-level map.

    Args:
        network: The network to cluster.
        flow: Stationary flows of the network.
        config: Search settings.

    Returns:
        The best map; ties go to the earliest trial and the simpler map.
    """
    config = config or SearchConfig()
    if config.two_level_only:
        return partition_two_level(network, flow, config)
    graph = FlowGraph.from_flow(network, flow)
    evaluator = _Evaluator(graph)

    trials = list()
    two_level_lengths = list()
    for trial in range(config.num_trials):
        rng = _trial_rng(config.seed, trial)
        assignment, two_level_length = two_level_trial(graph, config, rng)
        two_level = tree_from_assignment(graph, assignment)
        with_super = super_modules(graph, two_level, config, rng)
        with_sub = sub_modules(graph, with_super, config, rng)
        candidates = [two_level, with_super, with_sub]
        lengths = [evaluator.codelength(candidate) for candidate in candidates]
        choice = _best_index(lengths, config.epsilon)
        logger.info(
            f"Trial {trial + 1}/{config.num_trials}: {lengths[choice]:.6f} bits "
            f"in {candidates[choice].num_levels} levels "
            f"(two-level: {two_level_length:.6f} bits)."
        )
        trials.append((candidates[choice], lengths[choice]))
        two_level_lengths.append(two_level_length)

    best = _best_index([length for _, length in trials], config.epsilon)
    multilevel_map = trials[best][0]
    log_terms(evaluator.terms(multilevel_map))
    return ClusteringResult(
        multilevel_map=multilevel_map,
        codelength=codelength_multilevel(multilevel_map, flow, network),
        network=network,
        flow=flow,
        seed=config.seed,
        trial=best,
        two_level_codelength=min(two_level_lengths),
        one_module_codelength=one_module_codelength(flow, network),
    )
