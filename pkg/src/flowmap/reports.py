"""Text reports: clustering trees, metrics sidecars and state networks."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections import defaultdict
from typing import Any, ClassVar, Generic, TypeVar

from fs.errors import ResourceNotFound

from flowmap import __version__
from flowmap.metrics import MetricsReport, clustering_metrics
from flowmap.network import StateNetwork
from flowmap.search import ClusteringResult
from flowmap.tree import ORDERING_PRECISION, format_path
from flowmap.utils import open_parent_fs

T = TypeVar("T")


def format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class TextReport(ABC, Generic[T]):
    """A report rendered as text and written through PyFilesystem."""

    suffix: ClassVar[str]

    def file_name(self, basename: str) -> str:
        return f"{basename}{self.suffix}"

    def _create_parent_directories(self, url: str) -> None:
        scheme, separator, resource = url.rpartition("://")
        parent_resource, _, _ = resource.rpartition("/")
        parent_url = f"{scheme}{separator}{parent_resource}"
        fs, fs_path = open_parent_fs(parent_url)
        try:
            info = fs.getinfo(fs_path)
        except ResourceNotFound:
            fs.makedirs(fs_path, recreate=True)
            info = fs.getinfo(fs_path)
        if not info.is_dir:
            message = f"Parent URL ({url}) does not refer to a directory."
            raise NotADirectoryError(message)

    def check_destination(self, url: str) -> None:
        """Create the parent directories of a file URL ahead of writing.

        Raises:
            NotADirectoryError: If the parent location is a file.
        """
        self._create_parent_directories(url)

    def to_file(self, text: str, url: str, overwrite: bool) -> None:
        """Write text to a file URL, creating parent directories.

        Raises:
            FileExistsError: If the file exists and overwrite is disabled.
            NotADirectoryError: If the parent location is a file.
        """
        self._create_parent_directories(url)
        fs, fs_path = open_parent_fs(url)
        if fs.exists(fs_path) and not overwrite:
            message = f"URL ({url}) already exists. Enable `overwrite` to ignore."
            raise FileExistsError(message)
        with fs.open(fs_path, "w", encoding="utf-8") as outfile:
            outfile.write(text)

    @abstractmethod
    def generate(self, item: T) -> str:
        """Render the item as text."""

    def save(self, item: T, url: str, overwrite: bool = False) -> str:
        text = self.generate(item)
        self.to_file(text, url, overwrite)
        return text


class TreeReport(TextReport[ClusteringResult]):
    """The clustering tree, one line per physical node per finest module.

    With ``expanded``, one line per state node with an extra state id
    column. Modules are ordered by descending flow, ties broken by the
    ids of their entries.
    """

    def __init__(self, expanded: bool = False) -> None:
        self.expanded = expanded

    @property
    def suffix(self) -> str:  # type: ignore[override]
        return "_expanded.tree" if self.expanded else ".tree"

    def header(self, result: ClusteringResult) -> list[str]:
        metrics = clustering_metrics(result)
        lines = [f"# flowmap {__version__}"]
        lines.append(f"# seed = {result.seed}")
        lines.append(f"# trial = {result.trial}")
        for key, value in metrics.to_dict().items():
            lines.append(f"# {key} = {format_value(value)}")
        columns = "path flow name physicalId"
        if self.expanded:
            columns += " stateId"
        lines.append(f"# {columns}:")
        return lines

    def generate(self, result: ClusteringResult) -> str:
        network = result.network
        state_flow = result.flow.state_visit_rate
        ordered = result.multilevel_map.ordered(state_flow, network.physical_of)
        lines = self.header(result)
        for path, module in ordered.finest_modules():
            states = list(module.leaves())
            if self.expanded:
                for rank, state_id in enumerate(states, 1):
                    physical_id = network.physical_of(state_id)
                    lines.append(
                        f"{format_path(path + (rank,))} {state_flow[state_id]:.6f} "
                        f'"{network.state_name(state_id)}" {physical_id} {state_id}'
                    )
                continue
            merged: dict[int, float] = defaultdict(float)
            for state_id in states:
                merged[network.physical_of(state_id)] += state_flow[state_id]
            entries = sorted(
                merged.items(),
                key=lambda item: (-round(item[1], ORDERING_PRECISION), item[0]),
            )
            for rank, (physical_id, flow) in enumerate(entries, 1):
                name = network.physical(physical_id).name
                lines.append(
                    f'{format_path(path + (rank,))} {flow:.6f} "{name}" {physical_id}'
                )
        return "\n".join(lines) + "\n"


class MetricsFileReport(TextReport[MetricsReport]):
    """Flat ``key = value`` lines."""

    suffix = ".metrics"

    def generate(self, report: MetricsReport) -> str:
        items = report.to_dict().items()
        return "".join(f"{key} = {format_value(value)}\n" for key, value in items)


class StateNetworkReport(TextReport[StateNetwork]):
    """A state network in the sparse input format."""

    suffix = "_states.net"

    def generate(self, network: StateNetwork) -> str:
        lines = [f"# State network written by flowmap {__version__}"]
        lines.append(f"*Vertices {network.num_physical_nodes}")
        lines.append("#physicalId name")
        for physical_id in network.physical_ids:
            lines.append(f'{physical_id} "{network.physical(physical_id).name}"')
        lines.append(f"*States {network.num_state_nodes}")
        lines.append("#stateId physicalId name")
        for state_id in network.state_ids:
            state = network.state(state_id)
            name = "" if state.name is None else f' "{state.name}"'
            lines.append(f"{state_id} {state.physical_id}{name}")
        lines.append(f"*Links {network.num_links}")
        lines.append("#sourceStateId targetStateId weight")
        for source, target, weight in network.iter_links():
            lines.append(f"{source} {target} {format_value(float(weight))}")
        return "\n".join(lines) + "\n"


def write_tree(result: ClusteringResult, expanded: bool = False) -> str:
    return TreeReport(expanded).generate(result)


def write_metrics(report: MetricsReport) -> str:
    return MetricsFileReport().generate(report)


def write_sparse(network: StateNetwork) -> str:
    return StateNetworkReport().generate(network)
