"""Transition probabilities and stationary visit rates of state networks."""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Optional
from warnings import warn

import numpy as np
from scipy import sparse

from flowmap.network import (
    LinkKey,
    MultilayerNetworkFile,
    NetworkError,
    PhysicalNode,
    StateNetwork,
    StateNode,
)

logger = logging.getLogger(__name__)

DEFAULT_RELAX_RATE = 0.25


class FlowConvergenceError(RuntimeError):
    """Raised when power iteration does not reach the tolerance."""

    def __init__(self, residual: float, iterations: int) -> None:
        self.residual = residual
        self.iterations = iterations
        message = (
            f"Visit rates did not converge after {iterations} iterations "
            f"(residual: {residual:.3e}). Try a positive teleportation "
            "probability."
        )
        super().__init__(message)


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        message = f"The {name} ({value}) must lie between 0 and 1."
        raise ValueError(message)


@dataclass(frozen=True)
class RelaxParameters:
    """Parameters of the random walk.

    Attributes:
        relax_rate: Probability of ignoring the current layer when
            stepping in a multilayer network.
        teleportation_probability: Probability of jumping to a random
            state node on each step.
    """

    relax_rate: float = DEFAULT_RELAX_RATE
    teleportation_probability: float = 0.0

    def __post_init__(self):
        _check_probability("relax rate", self.relax_rate)
        _check_probability("teleportation probability", self.teleportation_probability)


@dataclass(frozen=True)
class FlowField:
    """Transition probabilities and, once computed, stationary flows.

    Attributes:
        transition: Row-normalized probability of each link.
        dangling: State nodes without outlinks.
        state_visit_rate: Stationary visit rate of each state node.
        link_flow: Flow on each link, summing to one over all links.
        iterations: Power iterations used (0 for closed-form flows).
        residual: L1 change of the last power iteration.
    """

    transition: Mapping[LinkKey, float]
    dangling: frozenset[int] = frozenset()
    state_visit_rate: Mapping[int, float] = field(default_factory=dict)
    link_flow: Mapping[LinkKey, float] = field(default_factory=dict)
    iterations: int = 0
    residual: float = 0.0

    @property
    def has_rates(self) -> bool:
        return len(self.state_visit_rate) > 0

    def out_transitions(self, state_id: int) -> dict[int, float]:
        return {
            target: probability
            for (source, target), probability in self.transition.items()
            if source == state_id
        }


class _IndexedNetwork:
    """Dense reindexing of a state network for matrix computations."""

    def __init__(self, network: StateNetwork) -> None:
        if network.num_links == 0:
            message = f"Network ({network!r}) has no links and hence no dynamics."
            raise NetworkError(message)
        self.state_ids = network.state_ids
        self.index = {state_id: i for i, state_id in enumerate(self.state_ids)}
        size = len(self.state_ids)
        keys = list(network.link_weights)
        self.keys = keys
        self.rows = np.array([self.index[source] for source, _ in keys])
        self.cols = np.array([self.index[target] for _, target in keys])
        self.weights = np.array([network.link_weights[key] for key in keys])
        self.matrix = sparse.csr_matrix(
            (self.weights, (self.rows, self.cols)), shape=(size, size)
        )
        self.out_weight = np.asarray(self.matrix.sum(axis=1)).ravel()
        self.in_weight = np.asarray(self.matrix.sum(axis=0)).ravel()
        self.dangling = self.out_weight <= 0

    def transition_values(self) -> np.ndarray:
        return self.weights / self.out_weight[self.rows]

    def transition_matrix(self) -> sparse.csr_matrix:
        size = len(self.state_ids)
        return sparse.csr_matrix(
            (self.transition_values(), (self.rows, self.cols)), shape=(size, size)
        )


def transition_matrix(network: StateNetwork) -> FlowField:
    """Normalize outlink weights into transition probabilities.

    Args:
        network: A valid network with at least one link.

    Raises:
        NetworkError: If the network has no links.

    Returns:
        A flow field holding only transitions and dangling states.
    """
    indexed = _IndexedNetwork(network)
    values = indexed.transition_values()
    transition = {key: float(value) for key, value in zip(indexed.keys, values)}
    dangling = frozenset(
        state_id
        for state_id, is_dangling in zip(indexed.state_ids, indexed.dangling)
        if is_dangling
    )
    return FlowField(transition=transition, dangling=dangling)


def stationary_visit_rates(
    network: StateNetwork,
    params: Optional[RelaxParameters] = None,
    *,
    tolerance: float = 1e-12,
    max_iterations: int = 1000,
) -> FlowField:
    """Compute the stationary visit rates of a random walk on the network.

    With teleportation probability τ the walker jumps, or always jumps
    from a dangling state, to a state node chosen proportionally to its
    inlink weight. Teleportation shapes the visit rates but is not
    recorded: link flows use the raw transitions and are normalized to
    sum to one. Undirected networks without teleportation use the
    closed-form rates proportional to node strength.

    Args:
        network: A valid network with at least one link.
        params: Walk parameters; only the teleportation probability is used.
        tolerance: L1 change between iterations that counts as converged.
        max_iterations: Cap on power iterations.

    Raises:
        NetworkError: If the network has no links.
        FlowConvergenceError: If the tolerance is not reached in time.

    Returns:
        The complete flow field.
    """
    params = params or RelaxParameters()
    tau = params.teleportation_probability
    indexed = _IndexedNetwork(network)
    size = len(indexed.state_ids)
    matrix = indexed.transition_matrix()
    dangling = indexed.dangling

    iterations = 0
    residual = 0.0
    if not network.directed and tau == 0.0:
        # Dangling states of an undirected network are isolated: rate 0
        rates = indexed.out_weight / indexed.out_weight.sum()
    else:
        teleport_to = indexed.in_weight / indexed.in_weight.sum()
        transposed = matrix.T.tocsr()
        rates = np.full(size, 1.0 / size)
        converged = False
        while iterations < max_iterations:
            iterations += 1
            moving = np.where(dangling, 0.0, rates)
            jumping = tau * moving.sum() + rates[dangling].sum()
            updated = (1.0 - tau) * (transposed @ moving) + jumping * teleport_to
            updated /= updated.sum()
            residual = float(np.abs(updated - rates).sum())
            rates = updated
            if residual < tolerance:
                converged = True
                break
        if not converged:
            raise FlowConvergenceError(residual, iterations)
        logger.debug(f"Power iteration converged in {iterations} iterations.")

    flows = rates[indexed.rows] * indexed.transition_values()
    if flows.sum() > 0:
        flows /= flows.sum()
    return FlowField(
        transition=dict(zip(indexed.keys, indexed.transition_values().tolist())),
        dangling=frozenset(np.asarray(indexed.state_ids)[dangling].tolist()),
        state_visit_rate=dict(zip(indexed.state_ids, rates.tolist())),
        link_flow=dict(zip(indexed.keys, flows.tolist())),
        iterations=iterations,
        residual=residual,
    )


def physical_visit_rates(flow: FlowField, network: StateNetwork) -> dict[int, float]:
    """Sum the visit rates of the state nodes of each physical node."""
    rates: dict[int, float] = defaultdict(float)
    for state_id, rate in flow.state_visit_rate.items():
        rates[network.physical_of(state_id)] += rate
    return {physical_id: rates[physical_id] for physical_id in sorted(rates)}


def expand_multilayer(
    file: MultilayerNetworkFile, relax_rate: Optional[float] = DEFAULT_RELAX_RATE
) -> StateNetwork:
    """Represent a multilayer network as a state network.

    Each (layer, physical node) pair becomes a state node, numbered from 1
    in ascending (layer, physical id) order. Without explicit interlayer
    links, the walker in layer α at node i follows a link in α with
    probability 1 - r, or relaxes with probability r and follows any
    link of i in any layer, proportionally to the link weights summed
    over layers. The resulting link weights are the transition
    probabilities themselves. With explicit interlayer links the given
    weights are used as they are and the relax rate is ignored.

    Args:
        file: Parsed multilayer sections.
        relax_rate: The relax rate r, or None for explicit interlayer links.

    Raises:
        ValueError: If the relax rate lies outside [0, 1].

    Returns:
        The state network with one state node per layer copy.
    """
    names = dict(file.vertices)
    intra: dict[tuple[int, int], dict[int, float]] = defaultdict(
        lambda: defaultdict(float)
    )
    for layer, source, target, weight in file.intra:
        intra[layer, source][target] += weight

    state_keys = set(intra)
    for (layer, _), row in intra.items():
        state_keys.update((layer, target) for target in row)
    state_keys.update((layer, physical) for layer, physical, _, _ in file.inter)
    state_keys.update((other, physical) for _, physical, other, _ in file.inter)
    state_of = {key: state_id for state_id, key in enumerate(sorted(state_keys), 1)}

    weights: dict[LinkKey, float] = defaultdict(float)
    if file.inter:
        if relax_rate is not None:
            warn(
                f"Ignoring the relax rate ({relax_rate}) because the network "
                "declares explicit interlayer links."
            )
        for (layer, source), row in intra.items():
            for target, weight in row.items():
                weights[state_of[layer, source], state_of[layer, target]] += weight
        for layer, physical, other, weight in file.inter:
            weights[state_of[layer, physical], state_of[other, physical]] += weight
    else:
        rate = DEFAULT_RELAX_RATE if relax_rate is None else relax_rate
        _check_probability("relax rate", rate)
        _add_relaxed_links(intra, state_of, rate, weights)

    physical_ids = sorted({physical for _, physical in state_keys} | set(names))
    physical_nodes = [PhysicalNode(i, names.get(i, "")) for i in physical_ids]
    state_nodes = [StateNode(state_id, key[1]) for key, state_id in state_of.items()]
    network = StateNetwork(physical_nodes, state_nodes, weights, directed=True)
    logger.info(
        f"Expanded {len(file.layers)} layers into {network.num_state_nodes} "
        f"state nodes and {network.num_links} links."
    )
    return network


def _add_relaxed_links(
    intra: Mapping[tuple[int, int], Mapping[int, float]],
    state_of: Mapping[tuple[int, int], int],
    relax_rate: float,
    weights: dict[LinkKey, float],
) -> None:
    layers_of: dict[int, list[int]] = defaultdict(list)
    physical_weight: dict[int, float] = defaultdict(float)
    for layer, physical in sorted(intra):
        layers_of[physical].append(layer)
        physical_weight[physical] += sum(intra[layer, physical].values())

    for (layer, physical), state_id in state_of.items():
        own = intra.get((layer, physical), {})
        own_weight = sum(own.values())
        # States without links in their own layer keep only the relaxed part
        for target, weight in own.items():
            weights[state_id, state_of[layer, target]] += (
                (1.0 - relax_rate) * weight / own_weight
            )
        if physical_weight[physical] <= 0:
            continue
        for other in layers_of[physical]:
            for target, weight in intra[other, physical].items():
                weights[state_id, state_of[other, target]] += (
                    relax_rate * weight / physical_weight[physical]
                )
