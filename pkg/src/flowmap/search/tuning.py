"""Two-level search: node aggregation with fine- and coarse-tuning."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import Optional

import numpy as np

from flowmap.search.config import SearchConfig
from flowmap.search.graph import FlowGraph
from flowmap.search.partition import FlatPartition, optimize_moves

logger = logging.getLogger(__name__)

Assignment = list[int]


def repeated_node_aggregation(
    graph: FlowGraph,
    config: SearchConfig,
    rng: np.random.Generator,
    initial: Optional[Sequence[int]] = None,
) -> Assignment:
    """Alternate node moves and aggregation of modules into nodes.

    Each level moves nodes until no move helps, then merges every module
    into a single node of a new graph and starts over. The loop stops
    when everything is in one module, when no node joined another, when
    a level does not lower the code length by more than epsilon, or
    after the level cap.

    Args:
        graph: The graph to partition.
        config: Search settings.
        rng: Source of the node orders.
        initial: Starting module labels, or None for singleton modules.

    Returns:
        The module (numbered from 0) of each node of the input graph.
    """
    partition = FlatPartition(graph, initial)
    level_graph = graph
    level_of = list(range(graph.num_nodes))
    assignment = partition.compact_assignment()
    codelength = partition.codelength

    for level in range(1, config.max_level_iterations + 1):
        num_nodes = level_graph.num_nodes
        optimize_moves(partition, config, rng)
        modules = partition.compact_assignment()
        assignment = [modules[level_node] for level_node in level_of]
        delta = partition.codelength - codelength
        codelength = partition.codelength
        logger.debug(
            f"Level {level}: {num_nodes} nodes into {partition.num_modules} "
            f"modules, {codelength:.6f} bits."
        )
        if partition.num_modules in (1, num_nodes) or delta > -config.epsilon:
            break
        level_graph = level_graph.aggregate(modules)
        level_of = assignment
        partition = FlatPartition(level_graph)
    return assignment


def fine_tune(
    graph: FlowGraph,
    assignment: Sequence[int],
    config: SearchConfig,
    rng: np.random.Generator,
) -> Assignment:
    """Let single nodes leave their modules, starting from the current ones."""
    return repeated_node_aggregation(graph, config, rng, initial=assignment)


def coarse_tune(
    graph: FlowGraph,
    assignment: Sequence[int],
    config: SearchConfig,
    rng: np.random.Generator,
) -> Assignment:
    """Let submodules move between modules.

    Each module is partitioned on its own into submodules. The submodules
    then become the nodes of a new graph, start out in the module they
    came from, and are moved between modules by node aggregation.

    Args:
        graph: The partitioned graph.
        assignment: Module of each node.
        config: Search settings.
        rng: Source of the node orders.

    Returns:
        The new module (numbered from 0) of each node.
    """
    submodule_of = [0] * graph.num_nodes
    parents: list[int] = list()
    for module_id in sorted(set(assignment)):
        nodes = [node for node, label in enumerate(assignment) if label == module_id]
        if len(nodes) == 1:
            local = [0]
        else:
            local = repeated_node_aggregation(graph.subgraph(nodes), config, rng)
        offset = len(parents)
        for node, label in zip(nodes, local):
            submodule_of[node] = offset + label
        parents.extend([module_id] * (max(local) + 1))

    logger.debug(
        f"Coarse-tuning split {len(set(assignment))} modules "
        f"into {len(parents)} submodules."
    )
    submodule_graph = graph.aggregate(submodule_of)
    moved = repeated_node_aggregation(submodule_graph, config, rng, initial=parents)
    return [moved[submodule] for submodule in submodule_of]


def two_level_trial(
    graph: FlowGraph, config: SearchConfig, rng: np.random.Generator
) -> tuple[Assignment, float]:
    """Find one two-level partition: aggregate, then tune while it helps.

    Fine-tuning runs on odd iterations and coarse-tuning on even ones.
    A tuning step that makes the code length worse is discarded.

    Returns:
        The module of each node and the two-level code length.
    """
    assignment = repeated_node_aggregation(graph, config, rng)
    codelength = FlatPartition(graph, assignment).codelength
    for iteration in range(1, config.max_tune_iterations + 1):
        tune = fine_tune if iteration % 2 == 1 else coarse_tune
        candidate = tune(graph, assignment, config, rng)
        candidate_length = FlatPartition(graph, candidate).codelength
        delta = candidate_length - codelength
        logger.debug(f"Tuning iteration {iteration} ({tune.__name__}): {delta:+.3e}")
        if delta < 0:
            assignment, codelength = candidate, candidate_length
        if delta > -config.epsilon:
            break
    return assignment, codelength


def best_two_level_trial(
    graph: FlowGraph, config: SearchConfig, rng: np.random.Generator
) -> tuple[Assignment, float]:
    """Repeat the two-level trial ``config.num_trials`` times on one generator.

    Returns:
        The shortest partition found; ties go to the earliest trial.
    """
    best = two_level_trial(graph, config, rng)
    for _ in range(1, config.num_trials):
        candidate = two_level_trial(graph, config, rng)
        if candidate[1] < best[1] - config.epsilon:
            best = candidate
    return best
