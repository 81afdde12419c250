"""Code lengths of multilevel maps under the map equation.

Module codebooks of finest modules encode physical nodes rather than
state nodes: state nodes of one physical node within one module share a
code word, and their visit rates are summed. All logarithms are base 2.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from typing import Optional

from flowmap.flow import FlowField, physical_visit_rates
from flowmap.network import NetworkError, StateNetwork
from flowmap.tree import MultilevelMap, Path, format_path
from flowmap.utils import entropy, plogp

logger = logging.getLogger(__name__)

LinkFlow = tuple[int, int, float]


@dataclass
class ModuleTerms:
    """Flows of one module that enter its codebook.

    Finest modules hold aggregated physical rates; intermediate
    modules hold the enter rates of their submodules.
    """

    path: Path
    is_finest: bool
    exit_rate: float = 0.0
    enter_rate: float = 0.0
    child_enter_rates: list[float] = field(default_factory=list)
    physical_rates: dict[int, float] = field(default_factory=dict)

    @property
    def total_use(self) -> float:
        """Use rate of the codebook, including the exit code word."""
        if self.is_finest:
            return self.exit_rate + sum(self.physical_rates.values())
        return self.exit_rate + sum(self.child_enter_rates)

    @property
    def codebook_length(self) -> float:
        """Use rate times the entropy of the codebook, in bits."""
        if self.is_finest:
            rates: Iterable[float] = self.physical_rates.values()
        else:
            rates = self.child_enter_rates
        length = plogp(self.total_use) - plogp(self.exit_rate)
        length -= sum(plogp(rate) for rate in rates)
        return length


@dataclass
class CodelengthTerms:
    """Per-module terms of a map and the code lengths they add up to."""

    modules: dict[Path, ModuleTerms]

    @property
    def top_enter_rates(self) -> list[float]:
        items = self.modules.items()
        return [terms.enter_rate for path, terms in items if len(path) == 1]

    @property
    def index_codelength(self) -> float:
        rates = self.top_enter_rates
        return plogp(sum(rates)) - sum(plogp(rate) for rate in rates)

    @property
    def module_codelength(self) -> float:
        return sum(terms.codebook_length for terms in self.modules.values())

    @property
    def codelength(self) -> float:
        return self.index_codelength + self.module_codelength


def flow_terms(
    multilevel_map: MultilevelMap,
    state_flow: Mapping[int, float],
    physical_of: Mapping[int, Hashable],
    link_flows: Iterable[LinkFlow],
) -> CodelengthTerms:
    """Collect module terms from raw state and link flows.

    A link contributes to the exit rate of every module that contains
    its source but not its target, and to the enter rate of every module
    that contains its target but not its source.

    Args:
        multilevel_map: The map to evaluate.
        state_flow: Visit rate of each leaf.
        physical_of: Code word key of each leaf.
        link_flows: ``(source, target, flow)`` triples.

    Returns:
        The terms of every module.
    """
    modules: dict[Path, ModuleTerms] = dict()
    module_of: dict[int, Path] = dict()
    for path, module in multilevel_map.iter_modules():
        terms = ModuleTerms(path, module.is_finest)
        modules[path] = terms
        if module.is_finest:
            rates: dict = defaultdict(float)
            for state_id in module.leaves():
                module_of[state_id] = path
                rates[physical_of[state_id]] += state_flow[state_id]
            terms.physical_rates = dict(rates)

    for source, target, flow in link_flows:
        source_path = module_of[source]
        target_path = module_of[target]
        if source_path == target_path:
            continue
        common = 0
        for source_index, target_index in zip(source_path, target_path):
            if source_index != target_index:
                break
            common += 1
        for depth in range(common + 1, len(source_path) + 1):
            modules[source_path[:depth]].exit_rate += flow
        for depth in range(common + 1, len(target_path) + 1):
            modules[target_path[:depth]].enter_rate += flow

    child_enter_rates: dict[Path, list[float]] = defaultdict(list)
    for path, terms in modules.items():
        if len(path) > 1:
            child_enter_rates[path[:-1]].append(terms.enter_rate)
    for path, terms in modules.items():
        if not terms.is_finest:
            terms.child_enter_rates = child_enter_rates[path]
    return CodelengthTerms(modules)


def module_flow_terms(
    multilevel_map: MultilevelMap, flow: FlowField, network: StateNetwork
) -> CodelengthTerms:
    """Compute exit, enter and aggregated physical rates of every module.

    Args:
        multilevel_map: A map covering every state node of the network.
        flow: Stationary flows of the network.
        network: The clustered network.

    Raises:
        NetworkError: If the map does not cover the network.

    Returns:
        The terms of every module.
    """
    multilevel_map.check_covers(network.state_ids)
    physical_of = {state: network.physical_of(state) for state in network.state_ids}
    link_flows = ((source, target, f) for (source, target), f in flow.link_flow.items())
    return flow_terms(multilevel_map, flow.state_visit_rate, physical_of, link_flows)


def codelength_multilevel(
    multilevel_map: MultilevelMap, flow: FlowField, network: StateNetwork
) -> float:
    """Compute the code length of any map in bits per step."""
    return module_flow_terms(multilevel_map, flow, network).codelength


def codelength_two_level(
    multilevel_map: MultilevelMap, flow: FlowField, network: StateNetwork
) -> float:
    """Compute the code length of a two-level map in bits per step.

    Raises:
        NetworkError: If the map has submodules.
    """
    if not multilevel_map.is_two_level:
        message = f"Map ({multilevel_map!r}) is not a two-level map."
        raise NetworkError(message)
    return codelength_multilevel(multilevel_map, flow, network)


def one_module_codelength(flow: FlowField, network: StateNetwork) -> float:
    """Code length without modules: the entropy of the physical visit rates."""
    return entropy(physical_visit_rates(flow, network).values())


def describe_terms(terms: CodelengthTerms) -> str:
    lines = [f"index: {terms.index_codelength:.6f} bits"]
    for path, module in terms.modules.items():
        lines.append(
            f"{format_path(path)}: exit {module.exit_rate:.6f}, "
            f"enter {module.enter_rate:.6f}, {module.codebook_length:.6f} bits"
        )
    return "\n".join(lines)


@dataclass
class ModuleFlow:
    """Flows of one module of a two-level partition under node moves."""

    exit_flow: float = 0.0
    enter_flow: float = 0.0
    flow: float = 0.0
    num_nodes: int = 0
    physical_flow: dict[Hashable, float] = field(default_factory=dict)
    physical_count: dict[Hashable, int] = field(default_factory=dict)


@dataclass
class NodeMoveTerms:
    """Flows of one node relative to the modules of a partition.

    Self-links are excluded from every flow.

    Attributes:
        flow: Visit rate of the node.
        physical_flow: Visit rate of the node per code word key.
        out_flow: Total flow on the node's outlinks.
        in_flow: Total flow on the node's inlinks.
        out_to: Outlink flow toward each module.
        in_from: Inlink flow from each module.
    """

    flow: float
    physical_flow: Mapping[Hashable, float]
    out_flow: float
    in_flow: float
    out_to: Mapping[int, float]
    in_from: Mapping[int, float]


class TwoLevelTerms:
    """Module flows of a two-level partition, updated move by move."""

    def __init__(self) -> None:
        self.modules: dict[int, ModuleFlow] = dict()
        self.enter_total = 0.0

    def add_module(self, module_id: int, module: ModuleFlow) -> None:
        self.modules[module_id] = module
        self.enter_total += module.enter_flow

    @property
    def codelength(self) -> float:
        enter = [module.enter_flow for module in self.modules.values()]
        length = plogp(sum(enter)) - sum(plogp(rate) for rate in enter)
        for module in self.modules.values():
            length -= plogp(module.exit_flow)
            length += plogp(module.exit_flow + module.flow)
            length -= sum(plogp(rate) for rate in module.physical_flow.values())
        return length

    @property
    def index_codelength(self) -> float:
        enter = [module.enter_flow for module in self.modules.values()]
        return plogp(sum(enter)) - sum(plogp(rate) for rate in enter)

    def _moved(
        self, node: NodeMoveTerms, source: int, target: int
    ) -> tuple[ModuleFlow, ModuleFlow, ModuleFlow, ModuleFlow]:
        old_source = self.modules[source]
        old_target = self.modules.get(target) or ModuleFlow()
        out_source = node.out_to.get(source, 0.0)
        in_source = node.in_from.get(source, 0.0)
        out_target = node.out_to.get(target, 0.0)
        in_target = node.in_from.get(target, 0.0)

        if old_source.num_nodes == 1:
            new_source = ModuleFlow()
        else:
            new_source = ModuleFlow(
                exit_flow=old_source.exit_flow
                - (node.out_flow - out_source)
                + in_source,
                enter_flow=old_source.enter_flow
                - (node.in_flow - in_source)
                + out_source,
                flow=old_source.flow - node.flow,
                num_nodes=old_source.num_nodes - 1,
            )
        new_target = ModuleFlow(
            exit_flow=old_target.exit_flow + (node.out_flow - out_target) - in_target,
            enter_flow=old_target.enter_flow + (node.in_flow - in_target) - out_target,
            flow=old_target.flow + node.flow,
            num_nodes=old_target.num_nodes + 1,
        )
        return old_source, old_target, new_source, new_target

    def delta(self, node: NodeMoveTerms, source: int, target: int) -> float:
        """Change in code length if the node moves from source to target.

        Args:
            node: Flows of the node relative to the current modules.
            source: Current module of the node.
            target: An existing module or an unused module id.

        Returns:
            The code length after the move minus before, in bits.
        """
        if source == target:
            return 0.0
        old_source, old_target, new_source, new_target = self._moved(
            node, source, target
        )
        enter_total = (
            self.enter_total
            - old_source.enter_flow
            - old_target.enter_flow
            + new_source.enter_flow
            + new_target.enter_flow
        )
        delta = plogp(enter_total) - plogp(self.enter_total)
        delta -= plogp(new_source.enter_flow) + plogp(new_target.enter_flow)
        delta += plogp(old_source.enter_flow) + plogp(old_target.enter_flow)
        delta -= plogp(new_source.exit_flow) + plogp(new_target.exit_flow)
        delta += plogp(old_source.exit_flow) + plogp(old_target.exit_flow)
        delta += plogp(new_source.exit_flow + new_source.flow)
        delta += plogp(new_target.exit_flow + new_target.flow)
        delta -= plogp(old_source.exit_flow + old_source.flow)
        delta -= plogp(old_target.exit_flow + old_target.flow)

        for key, rate in node.physical_flow.items():
            before_source = old_source.physical_flow[key]
            if old_source.physical_count[key] == 1:
                after_source = 0.0
            else:
                after_source = before_source - rate
            before_target = old_target.physical_flow.get(key, 0.0)
            delta -= plogp(after_source) + plogp(before_target + rate)
            delta += plogp(before_source) + plogp(before_target)
        return delta

    def move(self, node: NodeMoveTerms, source: int, target: int) -> None:
        """Apply a move, creating the target module if it is new."""
        if source == target:
            return
        old_source, old_target, new_source, new_target = self._moved(
            node, source, target
        )
        self.enter_total += (
            new_source.enter_flow
            + new_target.enter_flow
            - old_source.enter_flow
            - old_target.enter_flow
        )

        new_source.physical_flow = old_source.physical_flow
        new_source.physical_count = old_source.physical_count
        new_target.physical_flow = old_target.physical_flow
        new_target.physical_count = old_target.physical_count
        for key, rate in node.physical_flow.items():
            if new_source.physical_count[key] == 1:
                del new_source.physical_flow[key]
                del new_source.physical_count[key]
            else:
                new_source.physical_flow[key] -= rate
                new_source.physical_count[key] -= 1
            target_flow = new_target.physical_flow
            target_count = new_target.physical_count
            target_flow[key] = target_flow.get(key, 0.0) + rate
            target_count[key] = target_count.get(key, 0) + 1

        if new_source.num_nodes == 0:
            del self.modules[source]
        else:
            self.modules[source] = new_source
        self.modules[target] = new_target


def delta_codelength_move(
    terms: TwoLevelTerms,
    node: NodeMoveTerms,
    from_module: int,
    to_module: int,
) -> float:
    """Change in two-level code length from moving one node.

    Only the two affected modules are touched, including the aggregated
    physical rates of any code words the node shares with them.
    """
    return terms.delta(node, from_module, to_module)


def log_terms(terms: CodelengthTerms, level: Optional[int] = None) -> None:
    if logger.isEnabledFor(logging.DEBUG):
        prefix = "" if level is None else f"level {level} "
        logger.debug(f"Code length {prefix}terms:\n{describe_terms(terms)}")
