"""State networks: physical nodes, state nodes and weighted links.

Every input format ends up as a :class:`StateNetwork`. A first-order
network is the degenerate case with one state node per physical node.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

logger = logging.getLogger(__name__)

LUMPING_TOLERANCE = 1e-12

LinkKey = tuple[int, int]


class NetworkError(ValueError):
    """Raised when a network or map cannot be used for flow or code lengths."""


@dataclass(frozen=True)
class PhysicalNode:
    """An object of the modeled system, such as an airport or a person.

    Attributes:
        physical_id: Positive integer identifier.
        name: Label used in outputs. Defaults to the identifier.
    """

    physical_id: int
    name: str = ""

    def __post_init__(self):
        if not self.name:
            object.__setattr__(self, "name", str(self.physical_id))


@dataclass(frozen=True)
class StateNode:
    """A memory- or layer-specific state attached to one physical node."""

    state_id: int
    physical_id: int
    name: Optional[str] = None


@dataclass(frozen=True)
class WeightedLink:
    source: int
    target: int
    weight: float


class ViolationKind(Enum):
    NONPOSITIVE_ID = "nonpositive-id"
    DUPLICATE_PHYSICAL = "duplicate-physical"
    DUPLICATE_STATE = "duplicate-state"
    UNDECLARED_PHYSICAL = "undeclared-physical"
    DANGLING_ENDPOINT = "dangling-endpoint"
    NONPOSITIVE_WEIGHT = "nonpositive-weight"


@dataclass(frozen=True)
class Violation:
    """One breach of the state network invariants."""

    kind: ViolationKind
    offending_id: int


@dataclass(frozen=True)
class MultilayerNetworkFile:
    """Sections of a multilayer network file before state expansion.

    Attributes:
        vertices: Physical node ids and names.
        intra: Links ``(layer, source, target, weight)`` within layers.
        inter: Links ``(layer, physical, other_layer, weight)``
            between the copies of one physical node.
    """

    vertices: tuple[tuple[int, str], ...] = ()
    intra: tuple[tuple[int, int, int, float], ...] = ()
    inter: tuple[tuple[int, int, int, float], ...] = ()

    @property
    def layers(self) -> tuple[int, ...]:
        layers = {layer for layer, *_ in self.intra}
        layers.update(layer for layer, *_ in self.inter)
        layers.update(other for _, _, other, _ in self.inter)
        return tuple(sorted(layers))


class StateNetwork:
    """A sparse memory network.

    Links are directed and stored once per (source, target) pair, with
    duplicate links summed and zero-weight links dropped. Undirected
    networks store every link in both directions and are flagged so
    that flows can be computed in closed form.

    The network is immutable after construction. Declarations are kept
    as given so that :func:`validate` can report duplicates.

    Args:
        physical_nodes: Declared physical nodes.
        state_nodes: Declared state nodes.
        links: Links as :class:`WeightedLink` or a mapping from
            ``(source, target)`` to weight.
        directed: Whether the links are directed.
    """

    def __init__(
        self,
        physical_nodes: Iterable[PhysicalNode],
        state_nodes: Iterable[StateNode],
        links: Union[Iterable[WeightedLink], Mapping[LinkKey, float]] = (),
        directed: bool = True,
    ) -> None:
        self.physical_nodes = tuple(physical_nodes)
        self.state_nodes = tuple(state_nodes)
        self.directed = directed
        self._link_weights = self._sum_links(links)
        self._physical = {node.physical_id: node for node in self.physical_nodes}
        self._states = {node.state_id: node for node in self.state_nodes}

        self._out_links: dict[int, dict[int, float]] = defaultdict(dict)
        for (source, target), weight in self._link_weights.items():
            self._out_links[source][target] = weight

        self._states_of: dict[int, list[StateNode]] = defaultdict(list)
        for state in self._states.values():
            self._states_of[state.physical_id].append(state)

    @staticmethod
    def _sum_links(links) -> dict[LinkKey, float]:
        if isinstance(links, Mapping):
            items: Iterable[tuple[LinkKey, float]] = links.items()
        else:
            items = (((link.source, link.target), link.weight) for link in links)
        weights: dict[LinkKey, float] = dict()
        for key, weight in items:
            weights[key] = weights.get(key, 0.0) + float(weight)
        return {key: weights[key] for key in sorted(weights) if weights[key] != 0}

    def __repr__(self) -> str:
        return (
            f"StateNetwork(physical_nodes={self.num_physical_nodes}, "
            f"state_nodes={self.num_state_nodes}, links={self.num_links}, "
            f"directed={self.directed})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateNetwork):
            return NotImplemented
        return (
            self.directed == other.directed
            and set(self.physical_nodes) == set(other.physical_nodes)
            and set(self.state_nodes) == set(other.state_nodes)
            and self._link_weights == other._link_weights
        )

    __hash__ = None  # type: ignore

    @property
    def num_physical_nodes(self) -> int:
        return len(self._physical)

    @property
    def num_state_nodes(self) -> int:
        return len(self._states)

    @property
    def num_links(self) -> int:
        return len(self._link_weights)

    @property
    def links(self) -> tuple[WeightedLink, ...]:
        """Stored links in ascending (source, target) order."""
        items = self._link_weights.items()
        return tuple(WeightedLink(source, target, w) for (source, target), w in items)

    @property
    def link_weights(self) -> Mapping[LinkKey, float]:
        return self._link_weights

    @property
    def state_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._states))

    @property
    def physical_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._physical))

    @property
    def is_first_order(self) -> bool:
        return all(len(states) == 1 for states in self._states_of.values())

    def physical(self, physical_id: int) -> PhysicalNode:
        return self._physical[physical_id]

    def state(self, state_id: int) -> StateNode:
        return self._states[state_id]

    def physical_of(self, state_id: int) -> int:
        return self._states[state_id].physical_id

    def states_of(self, physical_id: int) -> tuple[StateNode, ...]:
        """List the state nodes of a physical node in ascending id order."""
        states = self._states_of.get(physical_id, [])
        return tuple(sorted(states, key=lambda state: state.state_id))

    def state_name(self, state_id: int) -> str:
        """Return the state's own name, falling back to its physical node's."""
        state = self._states[state_id]
        if state.name is not None:
            return state.name
        return self._physical[state.physical_id].name

    def out_links(self, state_id: int) -> Mapping[int, float]:
        return self._out_links.get(state_id, {})

    def out_weight(self, state_id: int) -> float:
        return sum(self.out_links(state_id).values())

    def iter_links(self) -> Iterator[tuple[int, int, float]]:
        for (source, target), weight in self._link_weights.items():
            yield source, target, weight

    def with_virtual_physical_nodes(self) -> StateNetwork:
        """Give every state node its own physical node.

        The virtual physical node takes the state id and the name the
        state would be printed with. This removes code-word sharing
        between states of the same physical node.

        Returns:
            A network with one state node per physical node.
        """
        physical_nodes = []
        state_nodes = []
        for state_id in self.state_ids:
            name = self.state_name(state_id)
            physical_nodes.append(PhysicalNode(state_id, name))
            state_nodes.append(StateNode(state_id, state_id))
        return StateNetwork(
            physical_nodes, state_nodes, self._link_weights, self.directed
        )


def first_order_network(
    links: Mapping[LinkKey, float],
    names: Optional[Mapping[int, str]] = None,
    directed: bool = True,
) -> StateNetwork:
    """Build a network with exactly one state node per physical node.

    State ids equal physical ids. Undirected links are stored in both
    directions, with self-links stored once.

    Args:
        links: Link weights between node ids.
        names: Optional node names. Nodes without a link are kept
            when they are named here.
        directed: Whether the links are directed.

    Returns:
        The first-order state network.
    """
    names = names or dict()
    node_ids = set(names)
    weights: dict[LinkKey, float] = defaultdict(float)
    for (source, target), weight in links.items():
        node_ids.update((source, target))
        weights[source, target] += weight
        if not directed and source != target:
            weights[target, source] += weight
    physical_nodes = [PhysicalNode(i, names.get(i, "")) for i in sorted(node_ids)]
    state_nodes = [StateNode(i, i) for i in sorted(node_ids)]
    return StateNetwork(physical_nodes, state_nodes, weights, directed)


def validate(network: StateNetwork) -> list[Violation]:
    """Check the invariants of a state network.

    Violations are data, not failures: this never raises.

    Args:
        network: The network to check.

    Returns:
        One violation per breach, or an empty list for a valid network.
    """
    violations = list()
    seen_physical: set[int] = set()
    for node in network.physical_nodes:
        if node.physical_id <= 0:
            violations.append(Violation(ViolationKind.NONPOSITIVE_ID, node.physical_id))
        if node.physical_id in seen_physical:
            kind = ViolationKind.DUPLICATE_PHYSICAL
            violations.append(Violation(kind, node.physical_id))
        seen_physical.add(node.physical_id)

    seen_states: set[int] = set()
    for state in network.state_nodes:
        if state.state_id <= 0:
            violations.append(Violation(ViolationKind.NONPOSITIVE_ID, state.state_id))
        if state.state_id in seen_states:
            violations.append(Violation(ViolationKind.DUPLICATE_STATE, state.state_id))
        seen_states.add(state.state_id)
        if state.physical_id not in seen_physical:
            kind = ViolationKind.UNDECLARED_PHYSICAL
            violations.append(Violation(kind, state.physical_id))

    for source, target, weight in network.iter_links():
        for endpoint in dict.fromkeys((source, target)):
            if endpoint not in seen_states:
                kind = ViolationKind.DANGLING_ENDPOINT
                violations.append(Violation(kind, endpoint))
        if weight <= 0:
            violations.append(Violation(ViolationKind.NONPOSITIVE_WEIGHT, source))
    return violations


def _same_row(first: Mapping[int, float], second: Mapping[int, float]) -> bool:
    if first.keys() != second.keys():
        return False
    return all(abs(first[key] - second[key]) <= LUMPING_TOLERANCE for key in first)


def lump_redundant_states(network: StateNetwork) -> StateNetwork:
    """Merge state nodes of one physical node that have identical outlinks.

    Two states of the same physical node are redundant when their
    normalized outlink distributions agree entry by entry. A lumped state
    keeps the lowest state id and name of its class and receives the
    summed inlinks and outlinks, so transition probabilities and the flow
    between physical nodes are unchanged. Merging targets can make more
    rows identical, so lumping repeats until nothing changes.

    Args:
        network: A valid state network.

    Returns:
        The lumped network, or the input itself when nothing is redundant.
    """
    representative = {state_id: state_id for state_id in network.state_ids}
    while True:
        merged = 0
        for physical_id in network.physical_ids:
            live = {representative[s.state_id] for s in network.states_of(physical_id)}
            if len(live) < 2:
                continue
            classes: list[tuple[int, dict[int, float]]] = list()
            for state_id in sorted(live):
                row = _lumped_row(network, state_id, representative)
                for class_id, class_row in classes:
                    if _same_row(row, class_row):
                        _redirect(representative, state_id, class_id)
                        merged += 1
                        break
                else:
                    classes.append((state_id, row))
        if merged == 0:
            break
        logger.debug(f"Lumped {merged} redundant state nodes.")

    if all(key == value for key, value in representative.items()):
        return network

    state_nodes = [
        network.state(state_id)
        for state_id in network.state_ids
        if representative[state_id] == state_id
    ]
    weights: dict[LinkKey, float] = defaultdict(float)
    for source, target, weight in network.iter_links():
        weights[representative[source], representative[target]] += weight
    lumped = StateNetwork(
        network.physical_nodes, state_nodes, weights, network.directed
    )
    logger.info(
        f"Lumped {network.num_state_nodes} state nodes "
        f"into {lumped.num_state_nodes}."
    )
    return lumped


def _members(representative: Mapping[int, int], class_id: int) -> list[int]:
    return [state for state, rep in representative.items() if rep == class_id]


def _lumped_row(
    network: StateNetwork, class_id: int, representative: Mapping[int, int]
) -> dict[int, float]:
    # Members of a class share one normalized row, so summing raw weights
    # over the members and normalizing gives the same distribution
    row: dict[int, float] = defaultdict(float)
    for member in _members(representative, class_id):
        for target, weight in network.out_links(member).items():
            row[representative[target]] += weight
    total = sum(row.values())
    return {target: weight / total for target, weight in row.items()}


def _redirect(representative: dict[int, int], old: int, new: int) -> None:
    for state_id, rep in representative.items():
        if rep == old:
            representative[state_id] = new
