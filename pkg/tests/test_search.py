import math
from collections.abc import Iterator

import numpy as np
import pytest

from flowmap.flow import RelaxParameters, stationary_visit_rates
from flowmap.mapequation import codelength_multilevel
from flowmap.network import PhysicalNode, StateNetwork, StateNode, first_order_network
from flowmap.search import (
    FlatPartition,
    FlowGraph,
    SearchConfig,
    coarse_tune,
    fine_tune,
    multilevel_partition,
    optimize_moves,
    partition_two_level,
    repeated_node_aggregation,
    sub_modules,
    super_modules,
)
from flowmap.search import tuning
from flowmap.search.tuning import best_two_level_trial
from flowmap.tree import MultilevelMap

TWO_LAYER_OPTIMUM = 2.0114


def set_partitions(size: int) -> Iterator[list[int]]:
    """Yield every partition of range(size) as a list of block labels."""
    if size == 0:
        yield []
        return
    for partial in set_partitions(size - 1):
        for label in range(max(partial, default=-1) + 2):
            yield partial + [label]


def exhaustive_optimum(graph: FlowGraph) -> float:
    return min(
        FlatPartition(graph, labels).codelength
        for labels in set_partitions(graph.num_nodes)
    )


def module_sets(result) -> list[set[int]]:
    modules = [set(module.leaves()) for module in result.multilevel_map.top_modules]
    return sorted(modules, key=min)


def random_network(rng: np.random.Generator) -> StateNetwork:
    num_states = int(rng.integers(3, 9))
    if rng.random() < 0.5:
        links = {(1, 2): 1.0}
        for source in range(1, num_states + 1):
            for target in range(source + 1, num_states + 1):
                if rng.random() < 0.4:
                    links[source, target] = float(rng.integers(1, 4))
        return first_order_network(links, directed=False)

    num_physical = int(rng.integers(2, num_states + 1))
    physical_of = rng.integers(1, num_physical + 1, size=num_states).tolist()
    state_nodes = [StateNode(i + 1, p) for i, p in enumerate(physical_of)]
    physical_nodes = [PhysicalNode(p) for p in sorted(set(physical_of))]
    links = dict()
    for source in range(1, num_states + 1):
        links[source, source % num_states + 1] = 1.0
        for target in range(1, num_states + 1):
            if target != source and rng.random() < 0.3:
                links[source, target] = float(rng.integers(1, 4))
    return StateNetwork(physical_nodes, state_nodes, links)


def test_that_set_partitions_are_counted_by_bell_numbers():
    counts = [sum(1 for _ in set_partitions(n)) for n in range(1, 7)]
    assert counts == [1, 2, 5, 15, 52, 203]


def test_that_the_two_layer_example_splits_along_layers(sparse_network, sparse_flow):
    result = partition_two_level(sparse_network, sparse_flow)
    assert result.codelength == pytest.approx(TWO_LAYER_OPTIMUM, abs=1e-4)
    assert module_sets(result) == [{1, 2, 3}, {4, 5, 6}]
    assert result.multilevel_map.is_two_level
    assert result.one_module_codelength == pytest.approx(2.2516, abs=1e-4)


def test_that_the_two_layer_example_has_no_deeper_structure(
    sparse_network, sparse_flow
):
    result = multilevel_partition(sparse_network, sparse_flow)
    assert result.codelength == pytest.approx(TWO_LAYER_OPTIMUM, abs=1e-4)
    assert module_sets(result) == [{1, 2, 3}, {4, 5, 6}]
    assert result.num_levels == 2
    assert result.two_level_codelength == pytest.approx(result.codelength)


@pytest.mark.parametrize("relax_rate", [0.0, 0.4, 0.9, 1.0])
def test_that_the_search_finds_the_exhaustive_optimum(
    relaxed_sparse_network, relax_rate
):
    network = relaxed_sparse_network(relax_rate)
    flow = stationary_visit_rates(network)
    graph = FlowGraph.from_flow(network, flow)
    result = partition_two_level(network, flow)
    assert result.codelength == pytest.approx(exhaustive_optimum(graph), abs=1e-9)


def test_that_disconnected_triangles_stay_apart(two_triangles):
    flow = stationary_visit_rates(two_triangles)
    result = multilevel_partition(two_triangles, flow)
    assert module_sets(result) == [{1, 2, 3}, {4, 5, 6}]
    assert result.codelength == pytest.approx(math.log2(3))


def test_that_the_same_seed_gives_the_same_map(sparse_network, sparse_flow):
    config = SearchConfig(seed=7, num_trials=3)
    first = multilevel_partition(sparse_network, sparse_flow, config)
    second = multilevel_partition(sparse_network, sparse_flow, config)
    assert first.multilevel_map == second.multilevel_map
    assert first.trial == second.trial
    assert first.seed == 7


def test_that_parallel_submodules_give_the_same_map(memory_network):
    flow = stationary_visit_rates(memory_network)
    sequential = multilevel_partition(memory_network, flow, SearchConfig(num_trials=2))
    config = SearchConfig(num_trials=2, parallel_submodules=True, max_workers=2)
    parallel = multilevel_partition(memory_network, flow, config)
    assert parallel.multilevel_map == sequential.multilevel_map
    assert parallel.codelength == sequential.codelength


def test_that_the_multilevel_result_is_never_longer_than_two_level(memory_network):
    flow = stationary_visit_rates(memory_network)
    two_level = partition_two_level(memory_network, flow)
    multilevel = multilevel_partition(memory_network, flow)
    assert multilevel.codelength <= two_level.codelength + 1e-10
    multilevel.multilevel_map.check_covers(memory_network.state_ids)


def test_that_node_moves_lower_the_code_length(sparse_network, sparse_flow):
    graph = FlowGraph.from_flow(sparse_network, sparse_flow)
    partition = FlatPartition(graph)
    before = partition.codelength
    sweeps = optimize_moves(partition, SearchConfig(), np.random.default_rng(1))
    assert sweeps >= 1
    assert partition.codelength < before
    assert partition.num_modules < graph.num_nodes


def test_that_coarse_tuning_splits_a_merged_module(two_triangles):
    flow = stationary_visit_rates(two_triangles)
    graph = FlowGraph.from_flow(two_triangles, flow)
    tuned = coarse_tune(graph, [0] * 6, SearchConfig(), np.random.default_rng(5))
    assert len(set(tuned)) == 2
    assert FlatPartition(graph, tuned).codelength == pytest.approx(math.log2(3))


def test_that_aggregation_stops_at_one_module_per_component(two_triangles):
    flow = stationary_visit_rates(two_triangles)
    graph = FlowGraph.from_flow(two_triangles, flow)
    assignment = repeated_node_aggregation(
        graph, SearchConfig(), np.random.default_rng(11)
    )
    assert assignment[:3] == [assignment[0]] * 3
    assert assignment[3:] == [assignment[3]] * 3
    assert assignment[0] != assignment[3]


def test_that_aggregation_keeps_all_flow(sparse_network, sparse_flow):
    graph = FlowGraph.from_flow(sparse_network, sparse_flow)
    aggregated = graph.aggregate([0, 0, 0, 1, 1, 1])
    assert aggregated.num_nodes == 2
    assert aggregated.members == [(1, 2, 3), (4, 5, 6)]
    assert aggregated.total_link_flow == pytest.approx(graph.total_link_flow)
    assert aggregated.physical_flow[0] == pytest.approx({1: 1 / 6, 2: 1 / 6, 3: 1 / 6})


def test_that_supermodules_group_singleton_modules(two_triangles):
    flow = stationary_visit_rates(two_triangles)
    graph = FlowGraph.from_flow(two_triangles, flow)
    singletons = MultilevelMap.from_nested([[state] for state in range(1, 7)])
    stacked = super_modules(graph, singletons, SearchConfig(), np.random.default_rng(2))
    assert stacked.num_top_modules == 2
    groups = sorted((set(module.leaves()) for module in stacked.top_modules), key=min)
    assert groups == [{1, 2, 3}, {4, 5, 6}]


def test_that_submodules_split_a_module_of_two_components(two_triangles):
    flow = stationary_visit_rates(two_triangles)
    graph = FlowGraph.from_flow(two_triangles, flow)
    merged = MultilevelMap.one_module(range(1, 7))
    refined = sub_modules(graph, merged, SearchConfig(), np.random.default_rng(4))
    assert refined.num_top_modules == 1
    children = refined.top_modules[0].children
    assert sorted(set(child.leaves()) for child in children) == [{1, 2, 3}, {4, 5, 6}]


@pytest.mark.parametrize(
    "settings",
    [
        {"seed": -1},
        {"num_trials": 0},
        {"epsilon": 0.0},
        {"max_move_iterations": 0},
        {"max_workers": 0},
    ],
)
def test_for_an_error_with_invalid_search_settings(settings):
    with pytest.raises(ValueError):
        SearchConfig(**settings)


@pytest.mark.slow
def test_that_the_search_matches_exhaustive_optima_on_random_networks():
    rng = np.random.default_rng(2024)
    params = RelaxParameters(teleportation_probability=0.15)
    for _ in range(50):
        network = random_network(rng)
        flow = stationary_visit_rates(network, params)
        graph = FlowGraph.from_flow(network, flow)
        result = partition_two_level(network, flow)
        assert result.codelength == pytest.approx(exhaustive_optimum(graph), abs=1e-9)


def clique_links(nodes: list[int]) -> dict[tuple[int, int], float]:
    return {
        (source, target): 1.0
        for i, source in enumerate(nodes)
        for target in nodes[i + 1 :]
    }


def barbell_of_cliques() -> StateNetwork:
    """Four 4-cliques: A-B and C-D matched node to node, B-C joined by one link."""
    cliques = [list(range(start, start + 4)) for start in (1, 5, 9, 13)]
    links = dict()
    for nodes in cliques:
        links.update(clique_links(nodes))
    for first, second in [(0, 1), (2, 3)]:
        for source, target in zip(cliques[first], cliques[second]):
            links[source, target] = 1.0
    links[8, 9] = 1.0
    return first_order_network(links, directed=False)


def hierarchical_cliques() -> StateNetwork:
    """Four groups of four 4-cliques, the groups joined in a ring.

    Node ``16 g + 4 k + j + 1`` is node j of clique k in group g. Within a
    group, node b of clique a links to node a of clique b.
    """

    def node(group: int, clique: int, index: int) -> int:
        return 16 * group + 4 * clique + index + 1

    links = dict()
    for group in range(4):
        for clique in range(4):
            links.update(clique_links([node(group, clique, j) for j in range(4)]))
            for other in range(clique + 1, 4):
                links[node(group, clique, other), node(group, other, clique)] = 1.0
        links[node(group, 0, 0), node((group + 1) % 4, 0, 0)] = 1.0
    return first_order_network(links, directed=False)


def hierarchical_groups() -> list[list[list[int]]]:
    return [
        [[16 * group + 4 * clique + j + 1 for j in range(4)] for clique in range(4)]
        for group in range(4)
    ]


def test_that_a_complete_graph_stays_in_one_module():
    network = first_order_network(clique_links([1, 2, 3, 4]), directed=False)
    flow = stationary_visit_rates(network)
    graph = FlowGraph.from_flow(network, flow)
    assignment = repeated_node_aggregation(
        graph, SearchConfig(), np.random.default_rng(8)
    )
    assert len(set(assignment)) == 1
    one_module = FlatPartition(graph, [0] * 4).codelength
    assert one_module == pytest.approx(exhaustive_optimum(graph), abs=1e-12)
    assert one_module == pytest.approx(2.0)


def test_that_coarse_tuning_moves_whole_cliques():
    network = barbell_of_cliques()
    flow = stationary_visit_rates(network)
    graph = FlowGraph.from_flow(network, flow)
    start = [0] * 4 + [1] * 8 + [2] * 4
    tuned = coarse_tune(graph, start, SearchConfig(), np.random.default_rng(6))
    tuned_length = FlatPartition(graph, tuned).codelength
    assert tuned_length < FlatPartition(graph, start).codelength

    modules: dict[int, set[int]] = dict()
    for node, label in enumerate(tuned):
        modules.setdefault(label, set()).update(graph.members[node])
    expected = [set(range(1, 9)), set(range(9, 17))]
    assert sorted(modules.values(), key=min) == expected

    clique_graph = graph.aggregate([node // 4 for node in range(16)])
    assert tuned_length <= exhaustive_optimum(clique_graph) + 1e-10


def test_that_fine_tuning_returns_a_misplaced_node(sparse_network, sparse_flow):
    graph = FlowGraph.from_flow(sparse_network, sparse_flow)
    misplaced = [1, 0, 0, 1, 1, 1]
    assert FlatPartition(graph, misplaced).codelength > TWO_LAYER_OPTIMUM
    tuned = fine_tune(graph, misplaced, SearchConfig(), np.random.default_rng(3))
    assert FlatPartition(graph, tuned).codelength == pytest.approx(
        TWO_LAYER_OPTIMUM, abs=1e-4
    )
    assert tuned[:3] == [tuned[0]] * 3
    assert tuned[3:] == [tuned[3]] * 3
    assert tuned[0] != tuned[3]


def test_that_nested_cliques_give_three_levels():
    network = hierarchical_cliques()
    flow = stationary_visit_rates(network)
    result = multilevel_partition(network, flow, SearchConfig(num_trials=3))
    assert result.num_levels == 3
    assert result.codelength < result.two_level_codelength

    groups = [set(sum(cliques, [])) for cliques in hierarchical_groups()]
    assert module_sets(result) == groups
    finest_modules = result.multilevel_map.finest_modules()
    finest = [set(module.leaves()) for _, module in finest_modules]
    cliques = [set(clique) for group in hierarchical_groups() for clique in group]
    assert sorted(finest, key=min) == cliques

    true_map = MultilevelMap.from_nested(hierarchical_groups())
    true_length = codelength_multilevel(true_map, flow, network)
    assert result.codelength <= true_length + 1e-10


def test_that_supermodules_group_nested_cliques():
    network = hierarchical_cliques()
    flow = stationary_visit_rates(network)
    graph = FlowGraph.from_flow(network, flow)
    cliques = [clique for group in hierarchical_groups() for clique in group]
    flat = MultilevelMap.from_nested(cliques)
    stacked = super_modules(graph, flat, SearchConfig(), np.random.default_rng(9))
    assert stacked.num_top_modules == 4
    flat_length = codelength_multilevel(flat, flow, network)
    assert codelength_multilevel(stacked, flow, network) < flat_length


def test_that_submodules_split_groups_into_cliques():
    network = hierarchical_cliques()
    flow = stationary_visit_rates(network)
    graph = FlowGraph.from_flow(network, flow)
    groups = [sum(cliques, []) for cliques in hierarchical_groups()]
    merged = MultilevelMap.from_nested(groups)
    refined = sub_modules(graph, merged, SearchConfig(), np.random.default_rng(10))
    assert refined.num_top_modules == 4
    for module, cliques in zip(refined.top_modules, hierarchical_groups()):
        children = sorted((set(child.leaves()) for child in module.children), key=min)
        assert children == [set(clique) for clique in cliques]


def test_that_the_best_of_several_trials_is_kept(mocker, sparse_network, sparse_flow):
    graph = FlowGraph.from_flow(sparse_network, sparse_flow)
    outcomes = [([0] * 6, 3.0), ([0, 0, 0, 1, 1, 1], 2.0), ([1] * 6, 2.5)]
    trial = mocker.patch.object(tuning, "two_level_trial", side_effect=outcomes)
    config = SearchConfig(num_trials=3)
    best = best_two_level_trial(graph, config, np.random.default_rng(0))
    assert trial.call_count == 3
    assert best == ([0, 0, 0, 1, 1, 1], 2.0)


def test_that_submodule_searches_repeat_trials(mocker, two_triangles):
    flow = stationary_visit_rates(two_triangles)
    graph = FlowGraph.from_flow(two_triangles, flow)
    spy = mocker.spy(tuning, "two_level_trial")
    merged = MultilevelMap.one_module(range(1, 7))
    sub_modules(graph, merged, SearchConfig(num_trials=4), np.random.default_rng(4))
    assert spy.call_count >= 4
    assert spy.call_count % 4 == 0
