"""Flow graphs that the search moves, aggregates and splits."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Hashable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

from flowmap.flow import FlowField
from flowmap.network import StateNetwork


@dataclass
class FlowGraph:
    """Nodes with visit rates and links with flows, indexed from 0.

    A node of a leaf-level graph is a state node. A node of an
    aggregated graph is a module of a finer graph; flows between its
    members are kept as ``self_flow`` rather than as links.

    Attributes:
        node_flow: Visit rate of each node.
        physical_flow: Visit rate of each node per code word key.
        out_links: Flow from each node to each other node.
        members: State ids represented by each node.
        self_flow: Flow on links that start and end within each node.
    """

    node_flow: list[float]
    physical_flow: list[dict[Hashable, float]]
    out_links: list[dict[int, float]]
    members: list[tuple[int, ...]]
    self_flow: list[float] = field(default_factory=list)
    in_links: list[dict[int, float]] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.self_flow:
            self.self_flow = [0.0] * len(self.node_flow)
        self.in_links = [dict() for _ in self.node_flow]
        for source, targets in enumerate(self.out_links):
            for target, flow in targets.items():
                self.in_links[target][source] = flow

    @classmethod
    def from_flow(cls, network: StateNetwork, flow: FlowField) -> FlowGraph:
        """Build the leaf-level graph of a network with computed flows."""
        state_ids = network.state_ids
        index = {state_id: i for i, state_id in enumerate(state_ids)}
        out_links: list[dict[int, float]] = [defaultdict(float) for _ in state_ids]
        self_flow = [0.0] * len(state_ids)
        for (source, target), link_flow in flow.link_flow.items():
            if source == target:
                self_flow[index[source]] += link_flow
            else:
                out_links[index[source]][index[target]] += link_flow
        return cls(
            node_flow=[flow.state_visit_rate[s] for s in state_ids],
            physical_flow=[
                {network.physical_of(s): flow.state_visit_rate[s]} for s in state_ids
            ],
            out_links=[dict(links) for links in out_links],
            members=[(state_id,) for state_id in state_ids],
            self_flow=self_flow,
        )

    @property
    def num_nodes(self) -> int:
        return len(self.node_flow)

    @property
    def total_link_flow(self) -> float:
        between = sum(sum(links.values()) for links in self.out_links)
        return between + sum(self.self_flow)

    def physical_keys(self) -> dict[int, Hashable]:
        """Map each state id of a leaf-level graph to its code word key."""
        return {
            members[0]: next(iter(physical))
            for members, physical in zip(self.members, self.physical_flow)
        }

    def state_flows(self) -> dict[int, float]:
        pairs = zip(self.members, self.node_flow)
        return {members[0]: flow for members, flow in pairs}

    def link_flows(self) -> Iterator[tuple[int, int, float]]:
        """Yield links between state ids of a leaf-level graph."""
        for source, targets in enumerate(self.out_links):
            for target, flow in targets.items():
                yield self.members[source][0], self.members[target][0], flow

    def node_index(self) -> dict[int, int]:
        """Map each member state id to the node that holds it."""
        return {
            state_id: node
            for node, members in enumerate(self.members)
            for state_id in members
        }

    def aggregate(self, assignment: Sequence[int]) -> FlowGraph:
        """Merge the nodes of each module into one node.

        Args:
            assignment: Module id of each node.

        Returns:
            A graph with one node per module, in ascending module id order.
        """
        module_ids = sorted(set(assignment))
        position = {module_id: i for i, module_id in enumerate(module_ids)}
        size = len(module_ids)
        node_flow = [0.0] * size
        self_flow = [0.0] * size
        physical_flow: list[dict[Hashable, float]]
        physical_flow = [defaultdict(float) for _ in range(size)]
        members: list[list[int]] = [list() for _ in range(size)]
        out_links: list[dict[int, float]] = [defaultdict(float) for _ in range(size)]
        for node, module_id in enumerate(assignment):
            new = position[module_id]
            node_flow[new] += self.node_flow[node]
            self_flow[new] += self.self_flow[node]
            members[new].extend(self.members[node])
            for key, flow in self.physical_flow[node].items():
                physical_flow[new][key] += flow
            for target, flow in self.out_links[node].items():
                new_target = position[assignment[target]]
                if new_target == new:
                    self_flow[new] += flow
                else:
                    out_links[new][new_target] += flow
        return FlowGraph(
            node_flow=node_flow,
            physical_flow=[dict(flows) for flows in physical_flow],
            out_links=[dict(links) for links in out_links],
            members=[tuple(sorted(states)) for states in members],
            self_flow=self_flow,
        )

    def module_graph(
        self, assignment: Sequence[int], enter_flow: Mapping[int, float]
    ) -> FlowGraph:
        """Aggregate modules into nodes weighted by how often they are entered.

        Every node gets its own code word, so the two-level code length
        of a partition of this graph is the index code length it would
        have one level up.

        Args:
            assignment: Module id of each node.
            enter_flow: Enter rate of each module id.

        Returns:
            The module-level graph, in ascending module id order.
        """
        graph = self.aggregate(assignment)
        module_ids = sorted(set(assignment))
        graph.node_flow = [enter_flow[module_id] for module_id in module_ids]
        graph.physical_flow = [
            {index: flow} for index, flow in enumerate(graph.node_flow)
        ]
        return graph

    def subgraph(self, nodes: Sequence[int]) -> FlowGraph:
        """Restrict the graph to some nodes, dropping links that leave them.

        Node flows keep their values in the full graph.
        """
        position = {node: i for i, node in enumerate(nodes)}
        out_links = [
            {
                position[target]: flow
                for target, flow in self.out_links[node].items()
                if target in position
            }
            for node in nodes
        ]
        return FlowGraph(
            node_flow=[self.node_flow[node] for node in nodes],
            physical_flow=[dict(self.physical_flow[node]) for node in nodes],
            out_links=out_links,
            members=[self.members[node] for node in nodes],
            self_flow=[self.self_flow[node] for node in nodes],
        )
