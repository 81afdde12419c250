"""Parsers for the link-list, multilayer, memory and sparse network formats.

All formats share the same line conventions: blank lines and lines
starting with ``#`` are ignored, and sections start with a header such
as ``*Vertices`` (case-insensitive, trailing tokens ignored).
"""

from __future__ import annotations

import io
import re
from abc import abstractmethod
from collections import defaultdict
from collections.abc import Iterator
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import ClassVar, Optional, TextIO, Union
from warnings import warn

from flowmap.mixins import SubclassRegistryMixin
from flowmap.network import (
    MultilayerNetworkFile,
    PhysicalNode,
    StateNetwork,
    StateNode,
    first_order_network,
)

VERTEX_REGEX = re.compile(r'(\d+)(?:\s+"([^"]*)"|\s+(\S+))?')
STATE_REGEX = re.compile(r'(\d+)\s+(\d+)(?:\s+"([^"]*)"|\s+(\S+))?')

ParsedNetwork = Union[StateNetwork, MultilayerNetworkFile]


class InputFormat(str, Enum):
    LINK_LIST = "link-list"
    MULTILAYER = "multilayer"
    MEMORY = "memory"
    SPARSE = "sparse"


class ParseError(ValueError):
    """Raised for malformed network files.

    Attributes:
        line_number: 1-based line of the offending input.
        path: Input file, if known.
    """

    def __init__(
        self, message: str, line_number: int, path: Optional[str] = None
    ) -> None:
        self.line_number = line_number
        self.path = path
        location = f"line {line_number}" if path is None else f"{path}:{line_number}"
        super().__init__(f"{message} ({location})")


@dataclass(frozen=True)
class Line:
    number: int
    section: Optional[str]
    text: str

    @property
    def fields(self) -> list[str]:
        return self.text.split()


class NetworkParser(SubclassRegistryMixin["NetworkParser"]):
    """Base class for the parsers of each input format.

    Subclasses declare the sections they accept and turn the data lines
    of those sections into a network.

    Args:
        stream: Text stream with the network file contents.
        path: Name of the input used in error messages.
    """

    registry_key: ClassVar[str]
    sections: ClassVar[tuple[str, ...]]
    # Section of data lines that come before any header
    implicit_section: ClassVar[Optional[str]] = None

    def __init__(self, stream: TextIO, path: Optional[str] = None) -> None:
        self.stream = stream
        self.path = path or getattr(stream, "name", None)

    @classmethod
    def for_format(cls, input_format: InputFormat) -> type[NetworkParser]:
        return cls.get_subclass(input_format.value)

    @classmethod
    def parse_path(cls, path: Path, **kwargs) -> ParsedNetwork:
        """Parse a UTF-8 network file.

        Raises:
            ParseError: If the file is malformed or not valid UTF-8.
        """
        lines = path.read_bytes().splitlines(keepends=True)
        decoded = list()
        for number, raw in enumerate(lines, 1):
            try:
                decoded.append(raw.decode("utf-8"))
            except UnicodeDecodeError as error:
                message = f"Invalid UTF-8 text ({error.reason})"
                raise ParseError(message, number, str(path)) from None
        stream = io.StringIO("".join(decoded), newline=None)
        parser = cls(stream, path=str(path), **kwargs)
        return parser.parse()

    @abstractmethod
    def parse(self) -> ParsedNetwork:
        """Parse the whole stream."""

    def error(self, line: Line, message: str) -> ParseError:
        return ParseError(message, line.number, self.path)

    def iter_lines(self) -> Iterator[Line]:
        """Yield data lines tagged with the section they belong to."""
        section = self.implicit_section
        seen_sections: list[str] = list()
        for number, raw in enumerate(self.stream, 1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            line = Line(number, section, text)
            if text.startswith("*"):
                header = text.split()[0][1:].lower()
                if header not in self.sections:
                    options = ", ".join(f"*{name}" for name in self.sections)
                    message = f"Unknown section ({text.split()[0]}), expected {options}"
                    raise self.error(line, message)
                if header == "vertices" and seen_sections:
                    raise self.error(line, "Section (*Vertices) must come first")
                section = header
                seen_sections.append(header)
                continue
            if section is None:
                raise self.error(line, f"Data outside of a section ({text})")
            yield line

    def parse_vertex(self, line: Line) -> tuple[int, str]:
        match = VERTEX_REGEX.fullmatch(line.text)
        if match is None:
            raise self.error(line, f"Malformed vertex ({line.text})")
        node_id, quoted, bare = match.groups()
        name = quoted if quoted is not None else bare
        return int(node_id), name or ""

    def parse_ints(self, line: Line, values: list[str]) -> list[int]:
        try:
            return [int(value) for value in values]
        except ValueError:
            raise self.error(line, f"Expected integer ids ({line.text})") from None

    def parse_weight(self, line: Line, value: str) -> Optional[float]:
        """Parse a link weight, returning None for zero weights."""
        try:
            weight = float(value)
        except ValueError:
            raise self.error(line, f"Expected a numeric weight ({value})") from None
        if weight < 0:
            raise self.error(line, f"Negative weight ({value})")
        if weight == 0:
            warn(f"Dropping zero-weight link on line {line.number} ({line.text}).")
            return None
        return weight

    def check_arity(self, line: Line, allowed: tuple[int, ...]) -> list[str]:
        fields = line.fields
        if len(fields) not in allowed:
            expected = " or ".join(str(count) for count in allowed)
            message = f"Expected {expected} fields, found {len(fields)} ({line.text})"
            raise self.error(line, message)
        return fields

    def collect_vertices(self, line: Line, names: dict[int, str]) -> None:
        node_id, name = self.parse_vertex(line)
        if node_id in names:
            raise self.error(line, f"Duplicate vertex ({node_id})")
        names[node_id] = name


class LinkListParser(NetworkParser):
    """First-order networks as ``source target [weight]`` lines.

    Node ids that are not declared under ``*Vertices`` are declared
    implicitly. Networks are undirected unless requested otherwise.
    Links under ``*Arcs`` are always directed; a file with arcs yields a
    directed network whose other links are stored in both directions.
    """

    registry_key = InputFormat.LINK_LIST.value
    sections = ("vertices", "links", "edges", "arcs")
    implicit_section = "links"

    def __init__(
        self, stream: TextIO, path: Optional[str] = None, directed: bool = False
    ) -> None:
        super().__init__(stream, path)
        self.directed = directed

    def parse(self) -> StateNetwork:
        names: dict[int, str] = dict()
        weights: dict[tuple[int, int], float] = defaultdict(float)
        arcs: dict[tuple[int, int], float] = defaultdict(float)
        for line in self.iter_lines():
            if line.section == "vertices":
                self.collect_vertices(line, names)
                continue
            fields = self.check_arity(line, (2, 3))
            source, target = self.parse_ints(line, fields[:2])
            weight = self.parse_weight(line, fields[2]) if len(fields) == 3 else 1.0
            if weight is None:
                continue
            if line.section == "arcs":
                arcs[source, target] += weight
            else:
                weights[source, target] += weight
        if not arcs:
            return first_order_network(weights, names, directed=self.directed)

        links = defaultdict(float, arcs)
        for (source, target), weight in weights.items():
            links[source, target] += weight
            if not self.directed and source != target:
                links[target, source] += weight
        return first_order_network(links, names, directed=True)


class MultilayerParser(NetworkParser):
    """Multilayer networks with ``*Intra`` and optional ``*Inter`` links."""

    registry_key = InputFormat.MULTILAYER.value
    sections = ("vertices", "intra", "inter")

    def parse(self) -> MultilayerNetworkFile:
        names: dict[int, str] = dict()
        intra = list()
        inter = list()
        for line in self.iter_lines():
            if line.section == "vertices":
                self.collect_vertices(line, names)
                continue
            fields = self.check_arity(line, (4,))
            first, second, third = self.parse_ints(line, fields[:3])
            weight = self.parse_weight(line, fields[3])
            if weight is None:
                continue
            if line.section == "intra":
                intra.append((first, second, third, weight))
            else:
                inter.append((first, second, third, weight))

        declared = set(names)
        for _, source, target, _ in intra:
            declared.update((source, target))
        for _, physical, _, _ in inter:
            declared.add(physical)
        vertices = tuple((i, names.get(i, "")) for i in sorted(declared))
        return MultilayerNetworkFile(vertices, tuple(intra), tuple(inter))


class MemoryParser(NetworkParser):
    """Second-order networks as ``from through to weight`` trigrams.

    The trigram ``a b c w`` links the state node of physical node ``b``
    reached from ``a`` to the state node of ``c`` reached from ``b``.
    State nodes are numbered in order of first mention.
    """

    registry_key = InputFormat.MEMORY.value
    sections = ("vertices", "3grams")

    def parse(self) -> StateNetwork:
        names: dict[int, str] = dict()
        state_of: dict[tuple[int, int], int] = dict()
        weights: dict[tuple[int, int], float] = dict()
        for line in self.iter_lines():
            if line.section == "vertices":
                self.collect_vertices(line, names)
                continue
            fields = self.check_arity(line, (4,))
            previous, current, following = self.parse_ints(line, fields[:3])
            weight = self.parse_weight(line, fields[3])
            if weight is None:
                continue
            source = state_of.setdefault((previous, current), len(state_of) + 1)
            target = state_of.setdefault((current, following), len(state_of) + 1)
            weights[source, target] = weights.get((source, target), 0.0) + weight

        physical = set(names) | {node for _, node in state_of}
        physical_nodes = [PhysicalNode(i, names.get(i, "")) for i in sorted(physical)]
        state_nodes = [StateNode(state, key[1]) for key, state in state_of.items()]
        return StateNetwork(physical_nodes, state_nodes, weights, directed=True)


class SparseParser(NetworkParser):
    """Sparse memory networks with explicit ``*States`` and ``*Links``."""

    registry_key = InputFormat.SPARSE.value
    sections = ("vertices", "states", "links")

    def parse(self) -> StateNetwork:
        names: dict[int, str] = dict()
        states: dict[int, StateNode] = dict()
        links: list[tuple[Line, int, int, float]] = list()
        for line in self.iter_lines():
            if line.section == "vertices":
                self.collect_vertices(line, names)
            elif line.section == "states":
                state = self._parse_state(line)
                if state.state_id in states:
                    raise self.error(line, f"Duplicate state ({state.state_id})")
                if state.physical_id not in names:
                    message = f"State refers to undeclared vertex ({state.physical_id})"
                    raise self.error(line, message)
                states[state.state_id] = state
            else:
                fields = self.check_arity(line, (3,))
                source, target = self.parse_ints(line, fields[:2])
                weight = self.parse_weight(line, fields[2])
                if weight is not None:
                    links.append((line, source, target, weight))

        weights: dict[tuple[int, int], float] = dict()
        for line, source, target, weight in links:
            for endpoint in (source, target):
                if endpoint not in states:
                    message = f"Link refers to undeclared state ({endpoint})"
                    raise self.error(line, message)
            weights[source, target] = weights.get((source, target), 0.0) + weight

        physical_nodes = [PhysicalNode(i, name) for i, name in sorted(names.items())]
        return StateNetwork(physical_nodes, states.values(), weights, directed=True)

    def _parse_state(self, line: Line) -> StateNode:
        match = STATE_REGEX.fullmatch(line.text)
        if match is None:
            raise self.error(line, f"Malformed state ({line.text})")
        state_id, physical_id, quoted, bare = match.groups()
        name = quoted if quoted is not None else bare
        return StateNode(int(state_id), int(physical_id), name)


def parse_link_list(stream: TextIO, directed: bool = False) -> StateNetwork:
    return LinkListParser(stream, directed=directed).parse()


def parse_multilayer(stream: TextIO) -> MultilayerNetworkFile:
    return MultilayerParser(stream).parse()


def parse_memory(stream: TextIO) -> StateNetwork:
    return MemoryParser(stream).parse()


def parse_sparse(stream: TextIO) -> StateNetwork:
    return SparseParser(stream).parse()
