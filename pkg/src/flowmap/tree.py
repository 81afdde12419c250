"""Multilevel maps: trees of modules with state nodes as leaves."""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from flowmap.network import NetworkError

Path = tuple[int, ...]
Nested = Union[int, Sequence[Any]]

# Decimal places kept when comparing flows for output order
ORDERING_PRECISION = 10


@dataclass(eq=False)
class TreeNode:
    """A module (with children) or a leaf (with a state id)."""

    children: list[TreeNode] = field(default_factory=list)
    state_id: Optional[int] = None

    @classmethod
    def leaf(cls, state_id: int) -> TreeNode:
        return cls(state_id=state_id)

    @classmethod
    def module(cls, children: Iterable[TreeNode]) -> TreeNode:
        return cls(children=list(children))

    @property
    def is_leaf(self) -> bool:
        return self.state_id is not None

    @property
    def is_finest(self) -> bool:
        """Whether this is a module whose children are all leaves."""
        return not self.is_leaf and all(child.is_leaf for child in self.children)

    def leaves(self) -> Iterator[int]:
        """Yield the state ids below this node in tree order."""
        if self.state_id is not None:
            yield self.state_id
            return
        for child in self.children:
            yield from child.leaves()

    def copy(self) -> TreeNode:
        if self.is_leaf:
            return TreeNode(state_id=self.state_id)
        return TreeNode(children=[child.copy() for child in self.children])

    def to_nested(self) -> Nested:
        if self.state_id is not None:
            return self.state_id
        return [child.to_nested() for child in self.children]

    @classmethod
    def from_nested(cls, nested: Nested) -> TreeNode:
        if isinstance(nested, int):
            return cls.leaf(nested)
        return cls.module(cls.from_nested(item) for item in nested)


class MultilevelMap:
    """A hierarchical clustering of the state nodes of a network.

    The root is not a module: its children are the top modules. Every
    module has at least one child, and the children of a module are
    either all modules or all leaves. Modules are addressed by 1-based
    sibling indices, so a leaf at path ``(1, 2)`` is the second entry of
    the first top module.

    Args:
        top_modules: The children of the root.

    Raises:
        ValueError: If the tree breaks any of the structural rules.
    """

    def __init__(self, top_modules: Iterable[TreeNode]) -> None:
        self.root = TreeNode.module(top_modules)
        self._check_structure()

    def _check_structure(self) -> None:
        if not self.root.children:
            raise ValueError("A map needs at least one module.")
        if any(child.is_leaf for child in self.root.children):
            raise ValueError("Leaves must be nested inside a top module.")
        seen: set[int] = set()
        for path, module in self.iter_modules():
            if not module.children:
                raise ValueError(f"Module ({format_path(path)}) is empty.")
            kinds = {child.is_leaf for child in module.children}
            if len(kinds) > 1:
                message = f"Module ({format_path(path)}) mixes leaves and submodules."
                raise ValueError(message)
        for state_id in self.root.leaves():
            if state_id in seen:
                raise ValueError(f"State node ({state_id}) appears more than once.")
            seen.add(state_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultilevelMap):
            return NotImplemented
        return self.to_nested() == other.to_nested()

    __hash__ = None  # type: ignore

    def __repr__(self) -> str:
        return f"MultilevelMap({self.to_nested()})"

    @classmethod
    def from_nested(cls, nested: Sequence[Nested]) -> MultilevelMap:
        """Build a map from nested lists such as ``[[1, 2], [[3], [4]]]``."""
        return cls(TreeNode.from_nested(item) for item in nested)

    @classmethod
    def from_assignment(cls, assignment: Mapping[int, Hashable]) -> MultilevelMap:
        """Build a two-level map from a state-to-module mapping.

        Modules are ordered by their smallest state id, and so are
        the leaves within each module.
        """
        groups: dict[Hashable, list[int]] = dict()
        for state_id in sorted(assignment):
            groups.setdefault(assignment[state_id], []).append(state_id)
        return cls.from_nested(list(groups.values()))

    @classmethod
    def one_module(cls, state_ids: Iterable[int]) -> MultilevelMap:
        return cls.from_nested([sorted(state_ids)])

    def copy(self) -> MultilevelMap:
        return MultilevelMap(child.copy() for child in self.root.children)

    def to_nested(self) -> list[Nested]:
        return [child.to_nested() for child in self.root.children]

    @property
    def top_modules(self) -> list[TreeNode]:
        return self.root.children

    @property
    def num_top_modules(self) -> int:
        return len(self.root.children)

    @property
    def state_ids(self) -> tuple[int, ...]:
        return tuple(self.root.leaves())

    @property
    def num_levels(self) -> int:
        """The deepest leaf depth, counting the root as level 1."""
        return max(self.leaf_depths().values())

    @property
    def is_two_level(self) -> bool:
        return all(module.is_finest for module in self.top_modules)

    def iter_modules(self) -> Iterator[tuple[Path, TreeNode]]:
        """Yield every module with its path, parents before children."""
        stack: list[tuple[Path, TreeNode]] = [
            ((index,), child) for index, child in enumerate(self.root.children, 1)
        ]
        stack.reverse()
        while stack:
            path, module = stack.pop()
            yield path, module
            submodules = [
                (path + (index,), child)
                for index, child in enumerate(module.children, 1)
                if not child.is_leaf
            ]
            stack.extend(reversed(submodules))

    def finest_modules(self) -> Iterator[tuple[Path, TreeNode]]:
        for path, module in self.iter_modules():
            if module.is_finest:
                yield path, module

    def leaf_paths(self) -> dict[int, Path]:
        """Map each state id to its full path, ending in its rank."""
        paths = dict()
        for path, module in self.finest_modules():
            for rank, child in enumerate(module.children, 1):
                paths[child.state_id] = path + (rank,)
        return paths

    def leaf_depths(self) -> dict[int, int]:
        return {state: len(path) for state, path in self.leaf_paths().items()}

    def top_module_of(self) -> dict[int, int]:
        """Map each state id to the 0-based index of its top module."""
        return {
            state_id: index
            for index, module in enumerate(self.top_modules)
            for state_id in module.leaves()
        }

    def check_covers(self, state_ids: Iterable[int]) -> None:
        """Ensure the leaves are exactly the given state ids.

        Raises:
            NetworkError: If a state is missing or a leaf is unknown.
        """
        expected = set(state_ids)
        actual = set(self.root.leaves())
        if expected != actual:
            missing = sorted(expected - actual)
            unknown = sorted(actual - expected)
            message = (
                f"Map does not cover the network (missing: {missing}, "
                f"unknown: {unknown})."
            )
            raise NetworkError(message)

    def ordered(
        self,
        state_flow: Mapping[int, float],
        physical_of: Callable[[int], int],
    ) -> MultilevelMap:
        """Return a copy with children sorted for output.

        Leaves are sorted by descending flow, then ascending physical and
        state ids. Modules are sorted by descending flow, then by the
        physical ids and state ids of their leaves in output order.

        Args:
            state_flow: Visit rate of each state node.
            physical_of: Physical node id of a state id.

        Returns:
            The sorted map.
        """
        ordered = self.copy()
        for module in ordered.top_modules:
            _sort_module(module, state_flow, physical_of)
        ordered.root.children.sort(
            key=lambda module: _signature(module, state_flow, physical_of)
        )
        return ordered


SortKey = tuple[float, tuple[int, ...], tuple[int, ...]]


def _signature(
    node: TreeNode,
    state_flow: Mapping[int, float],
    physical_of: Callable[[int], int],
) -> SortKey:
    states = tuple(node.leaves())
    flow = round(sum(state_flow[state] for state in states), ORDERING_PRECISION)
    physical_ids = tuple(physical_of(state) for state in states)
    return -flow, physical_ids, states


def _sort_module(
    module: TreeNode,
    state_flow: Mapping[int, float],
    physical_of: Callable[[int], int],
) -> None:
    for child in module.children:
        if not child.is_leaf:
            _sort_module(child, state_flow, physical_of)

    def key(child: TreeNode) -> SortKey:
        return _signature(child, state_flow, physical_of)

    module.children.sort(key=key)


def format_path(path: Path) -> str:
    """Render a path as colon-separated indices, e.g. ``1:2:3``."""
    return ":".join(str(index) for index in path)
