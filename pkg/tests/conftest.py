"""
    Shared fixtures for the flowmap tests.

    Read more about conftest.py under:
    - https://docs.pytest.org/en/stable/fixture.html
    - https://docs.pytest.org/en/stable/writing_plugins.html
"""

from pathlib import Path

import pytest

from flowmap.flow import stationary_visit_rates
from flowmap.network import StateNetwork, first_order_network
from flowmap.parsers import MemoryParser, MultilayerParser, SparseParser

CNFPATH = Path(__file__).resolve()
TESTDIR = CNFPATH.parent
DATADIR = TESTDIR / "data"
OUTDIR = TESTDIR / "outputs"

OUTDIR.mkdir(exist_ok=True)

# Track the list of output files to avoid clashes between tests
outputs = set()


def relaxed_network(relax_rate: float, filename: str = "fig3c.net") -> StateNetwork:
    """Reweight one of the sparse two-layer examples for another relax rate.

    The listings use relax rate 0.4, where a layer copy of node i sends
    0.8 to each neighbor in its own layer and 0.2 to each in the other.
    """
    network = SparseParser.parse_path(DATADIR / filename)
    stay = (1 - relax_rate / 2) / 2
    cross = relax_rate / 4
    weights = {0.8: stay, 0.2: cross, 1.0: 1.0}
    links = {key: weights[weight] for key, weight in network.link_weights.items()}
    return StateNetwork(network.physical_nodes, network.state_nodes, links)


@pytest.fixture
def get_data():
    def _get_data(filename: str) -> Path:
        path = DATADIR / filename
        if not path.exists():
            raise ValueError(f"Path ({path}) does not exist.")
        return path

    yield _get_data


@pytest.fixture
def get_output():
    def _get_output(filename: str) -> Path:
        output = OUTDIR / filename
        if output in outputs:
            message = f"Output ({output}) has already been used in another test."
            raise ValueError(message)
        outputs.add(output)
        return output

    yield _get_output


@pytest.fixture
def relaxed_sparse_network():
    yield relaxed_network


@pytest.fixture
def multilayer_file(get_data):
    return MultilayerParser.parse_path(get_data("fig3a.net"))


@pytest.fixture
def memory_network(get_data):
    return MemoryParser.parse_path(get_data("fig3b.net"))


@pytest.fixture
def sparse_network(get_data):
    return SparseParser.parse_path(get_data("fig3c.net"))


@pytest.fixture
def memory_sparse_network(get_data):
    return SparseParser.parse_path(get_data("fig3b_sparse.net"))


@pytest.fixture
def sparse_flow(sparse_network):
    return stationary_visit_rates(sparse_network)


@pytest.fixture
def two_triangles():
    links = {(1, 2): 1, (2, 3): 1, (3, 1): 1, (4, 5): 1, (5, 6): 1, (6, 4): 1}
    return first_order_network(links, directed=False)
