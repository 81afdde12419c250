import io
import math
import warnings

import pytest

from flowmap.flow import (
    FlowConvergenceError,
    RelaxParameters,
    expand_multilayer,
    physical_visit_rates,
    stationary_visit_rates,
    transition_matrix,
)
from flowmap.network import NetworkError, StateNetwork, first_order_network
from flowmap.parsers import MultilayerParser, parse_link_list
from flowmap.search import multilevel_partition


def bipartite_path() -> StateNetwork:
    return first_order_network({(1, 2): 1, (2, 1): 1, (2, 3): 1, (3, 2): 1})


@pytest.mark.parametrize("relax_rate", [0.0, 0.25, 0.4, 1.0])
def test_that_the_relaxed_examples_have_uniform_visit_rates(
    relaxed_sparse_network, relax_rate
):
    flow = stationary_visit_rates(relaxed_sparse_network(relax_rate))
    for rate in flow.state_visit_rate.values():
        assert rate == pytest.approx(1 / 6, abs=1e-10)
    assert sum(flow.link_flow.values()) == pytest.approx(1.0)


def test_that_the_memory_example_has_uniform_visit_rates(memory_network):
    flow = stationary_visit_rates(memory_network)
    assert len(flow.state_visit_rate) == 12
    for rate in flow.state_visit_rate.values():
        assert rate == pytest.approx(1 / 12, abs=1e-10)


def test_that_physical_visit_rates_sum_over_states(sparse_flow, sparse_network):
    rates = physical_visit_rates(sparse_flow, sparse_network)
    assert rates[1] == pytest.approx(2 / 6)
    for physical_id in (2, 3, 4, 5):
        assert rates[physical_id] == pytest.approx(1 / 6)


def test_that_transitions_are_normalized_outlink_weights(sparse_network):
    flow = transition_matrix(sparse_network)
    assert flow.out_transitions(1) == pytest.approx(
        {2: 0.4, 3: 0.4, 5: 0.1, 6: 0.1}
    )
    assert not flow.has_rates
    assert flow.dangling == frozenset()


def test_that_undirected_networks_use_closed_form_rates(two_triangles):
    flow = stationary_visit_rates(two_triangles)
    assert flow.iterations == 0
    for rate in flow.state_visit_rate.values():
        assert rate == pytest.approx(1 / 6)


def test_that_undirected_rates_are_proportional_to_strength():
    network = first_order_network({(1, 2): 1, (2, 3): 3}, directed=False)
    flow = stationary_visit_rates(network)
    assert flow.state_visit_rate[2] == pytest.approx(0.5)
    assert flow.state_visit_rate[3] == pytest.approx(3 / 8)


def test_that_isolated_vertices_of_undirected_networks_get_no_flow():
    text = '*Vertices 4\n1 "a"\n2 "b"\n3 "c"\n4 "d"\n*Edges\n1 2\n2 3\n'
    network = parse_link_list(io.StringIO(text))
    flow = stationary_visit_rates(network)
    assert flow.iterations == 0
    assert flow.state_visit_rate == pytest.approx({1: 0.25, 2: 0.5, 3: 0.25, 4: 0.0})
    assert flow.dangling == frozenset({4})
    assert sum(flow.link_flow.values()) == pytest.approx(1.0)

    result = multilevel_partition(network, flow)
    result.multilevel_map.check_covers(network.state_ids)
    assert math.isfinite(result.codelength)


def test_for_an_error_when_a_periodic_network_never_converges():
    with pytest.raises(FlowConvergenceError) as excinfo:
        stationary_visit_rates(bipartite_path(), max_iterations=50)
    assert excinfo.value.iterations == 50


def test_that_teleportation_makes_a_periodic_network_converge():
    params = RelaxParameters(teleportation_probability=0.15)
    flow = stationary_visit_rates(bipartite_path(), params)
    assert sum(flow.state_visit_rate.values()) == pytest.approx(1.0)
    assert flow.state_visit_rate[2] > flow.state_visit_rate[1]
    # Teleportation is not recorded in the link flows
    assert set(flow.link_flow) == set(bipartite_path().link_weights)


def test_that_dangling_states_teleport():
    network = first_order_network({(1, 2): 1, (2, 3): 1, (1, 3): 1})
    params = RelaxParameters(teleportation_probability=0.15)
    flow = stationary_visit_rates(network, params)
    assert flow.dangling == frozenset({3})
    assert sum(flow.state_visit_rate.values()) == pytest.approx(1.0)


def test_for_an_error_when_the_network_has_no_links():
    network = first_order_network({}, {1: "a"})
    with pytest.raises(NetworkError):
        stationary_visit_rates(network)


@pytest.mark.parametrize("value", [-0.1, 1.5])
def test_for_an_error_with_probabilities_outside_the_unit_interval(value):
    with pytest.raises(ValueError):
        RelaxParameters(relax_rate=value)
    with pytest.raises(ValueError):
        RelaxParameters(teleportation_probability=value)


def test_that_relaxing_splits_transitions_between_layers(multilayer_file):
    network = expand_multilayer(multilayer_file, relax_rate=0.4)
    assert network.num_state_nodes == 6
    # States are numbered by (layer, physical id): (1, i), (1, l), (1, m), ...
    assert [network.physical_of(state) for state in network.state_ids] == [
        1,
        4,
        5,
        1,
        2,
        3,
    ]
    flow = transition_matrix(network)
    assert flow.transition[1, 2] == pytest.approx(0.4)
    assert flow.transition[1, 5] == pytest.approx(0.1)
    assert flow.transition[2, 1] == pytest.approx(0.5)


def test_that_zero_relax_rate_keeps_layers_apart(multilayer_file):
    network = expand_multilayer(multilayer_file, relax_rate=0.0)
    layer_of = {1: 1, 2: 1, 3: 1, 4: 2, 5: 2, 6: 2}
    for source, target, _ in network.iter_links():
        assert layer_of[source] == layer_of[target]


def test_that_explicit_interlayer_links_override_the_relax_rate(get_data):
    parsed = MultilayerParser.parse_path(get_data("fig3a_inter.net"))
    with pytest.warns(UserWarning, match="relax rate"):
        network = expand_multilayer(parsed, relax_rate=0.4)
    assert network.link_weights[1, 4] == 1.0
    assert network.link_weights[4, 1] == 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert expand_multilayer(parsed, relax_rate=None) == network
