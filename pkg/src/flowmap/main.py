import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fs.errors import FSError
from typer import Argument, Exit, Option, Typer, echo

from flowmap import __version__
from flowmap.flow import (
    DEFAULT_RELAX_RATE,
    FlowConvergenceError,
    RelaxParameters,
    expand_multilayer,
    stationary_visit_rates,
)
from flowmap.metrics import clustering_metrics
from flowmap.network import (
    MultilayerNetworkFile,
    NetworkError,
    StateNetwork,
    lump_redundant_states,
)
from flowmap.parsers import InputFormat, NetworkParser, ParseError
from flowmap.reports import (
    MetricsFileReport,
    StateNetworkReport,
    TextReport,
    TreeReport,
)
from flowmap.search import SearchConfig, multilevel_partition

logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 1
EXIT_INVALID_OPTIONS = 2
EXIT_NOT_CONVERGED = 3

app = Typer()


@dataclass(frozen=True)
class RunOptions:
    """Settings of one clustering run, one field per command-line flag."""

    network_data: Path
    dest: str
    input_format: InputFormat = InputFormat.LINK_LIST
    relax_rate: Optional[float] = None
    teleportation_probability: float = 0.0
    directed: bool = False
    two_level: bool = False
    expanded: bool = False
    seed: int = 123
    num_trials: int = 10
    lump_states: bool = False
    virtual_physical_nodes: bool = False
    write_state_network: bool = False
    parallel_submodules: bool = False
    overwrite: bool = True

    def relax_parameters(self) -> RelaxParameters:
        relax_rate = DEFAULT_RELAX_RATE if self.relax_rate is None else self.relax_rate
        return RelaxParameters(relax_rate, self.teleportation_probability)

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            seed=self.seed,
            num_trials=self.num_trials,
            two_level_only=self.two_level,
            parallel_submodules=self.parallel_submodules,
        )

    def output_url(self, file_name: str) -> str:
        if "://" in self.dest:
            return f"{self.dest.rstrip('/')}/{file_name}"
        return (Path(self.dest).resolve() / file_name).as_posix()


def load_network(options: RunOptions) -> StateNetwork:
    """Parse the input file into the state network that gets clustered.

    Raises:
        FileNotFoundError: If the input file does not exist.
        ParseError: If the input file is malformed.
        NetworkError: If the network cannot carry flow.
    """
    if not options.network_data.is_file():
        message = f"Input file ({options.network_data}) does not exist."
        raise FileNotFoundError(message)
    parser_cls = NetworkParser.for_format(options.input_format)
    kwargs = dict()
    if options.input_format == InputFormat.LINK_LIST:
        kwargs["directed"] = options.directed
    parsed = parser_cls.parse_path(options.network_data, **kwargs)

    if isinstance(parsed, MultilayerNetworkFile):
        network = expand_multilayer(parsed, options.relax_rate)
    else:
        network = parsed
    if network.num_links == 0:
        message = f"Network ({options.network_data}) has no links."
        raise NetworkError(message)
    if options.lump_states:
        network = lump_redundant_states(network)
    if options.virtual_physical_nodes:
        network = network.with_virtual_physical_nodes()
    return network


def output_reports(options: RunOptions) -> list[tuple[TextReport, str]]:
    """Pair each requested report with its destination URL."""
    reports: list[TextReport] = [TreeReport()]
    if options.expanded:
        reports.append(TreeReport(expanded=True))
    reports.append(MetricsFileReport())
    if options.write_state_network:
        reports.append(StateNetworkReport())
    basename = options.network_data.stem
    urls = [options.output_url(report.file_name(basename)) for report in reports]
    return list(zip(reports, urls))


def run(options: RunOptions) -> int:
    """Cluster one network and write the tree, metrics and state network.

    Returns:
        The exit status.
    """
    try:
        params = options.relax_parameters()
        config = options.search_config()
    except ValueError as error:
        echo(f"Invalid options: {error}", err=True)
        return EXIT_INVALID_OPTIONS

    try:
        network = load_network(options)
    except (FileNotFoundError, ParseError, NetworkError) as error:
        echo(f"Error: {error}", err=True)
        return EXIT_INPUT_ERROR
    logger.info(f"Loaded {network}.")

    try:
        flow = stationary_visit_rates(network, params)
    except FlowConvergenceError as error:
        echo(f"Error: {error}", err=True)
        return EXIT_NOT_CONVERGED

    destinations = output_reports(options)
    try:
        for report, url in destinations:
            report.check_destination(url)
    except (OSError, FSError) as error:
        echo(f"Invalid destination: {error}", err=True)
        return EXIT_INVALID_OPTIONS

    result = multilevel_partition(network, flow, config)
    items = {MetricsFileReport: clustering_metrics(result), StateNetworkReport: network}
    try:
        for report, url in destinations:
            report.save(items.get(type(report), result), url, options.overwrite)
    except (OSError, FSError) as error:
        echo(f"Invalid destination: {error}", err=True)
        return EXIT_INVALID_OPTIONS

    echo(
        f"codelength: {result.codelength:.6f} bits "
        f"in {result.num_top_modules} top modules"
    )
    return 0


def version_callback(value: bool):
    if value:
        echo(f"flowmap version: {__version__}")
        raise Exit()


def configure_logging(verbosity: int) -> None:
    if verbosity <= 0:
        return
    level = logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# Arguments
network_data_arg = Argument(..., help="Network file", show_default=False)
dest_arg = Argument(..., help="Directory path or (remote) URL for output files")

# Options
input_format_opt = Option(
    InputFormat.LINK_LIST, "--input-format", "-i", help="Input network format"
)
relax_rate_opt = Option(
    None,
    "--multilayer-relax-rate",
    min=0.0,
    max=1.0,
    help=f"Relax rate of multilayer networks [default: {DEFAULT_RELAX_RATE}]",
)
teleportation_opt = Option(
    0.0,
    "--teleportation-probability",
    min=0.0,
    max=1.0,
    help="Probability of teleporting on each step (unrecorded)",
)
directed_opt = Option(False, "--directed", "-d", help="Treat link lists as directed")
two_level_opt = Option(False, "--two-level", help="Only search two-level maps")
expanded_opt = Option(False, "--expanded", help="Also write one line per state node")
seed_opt = Option(123, "--seed", min=0, help="Seed of the search")
num_trials_opt = Option(10, "--num-trials", "-N", min=1, help="Number of trials")
lump_states_opt = Option(
    False, "--lump-states", help="Merge redundant state nodes before clustering"
)
virtual_opt = Option(
    False,
    "--virtual-physical-nodes",
    help="Give every state node its own physical node",
)
write_states_opt = Option(
    False, "--write-state-network", help="Write the clustered state network"
)
parallel_opt = Option(
    False, "--parallel-submodules", help="Search submodules in worker threads"
)
verbose_opt = Option(0, "--verbose", "-v", count=True, help="Log progress")
version_opt = Option(
    None,
    "--version",
    callback=version_callback,
    is_eager=True,
    help="Print the version and exit",
)


@app.command()
def main(
    network_data: Path = network_data_arg,
    dest: str = dest_arg,
    input_format: InputFormat = input_format_opt,
    multilayer_relax_rate: Optional[float] = relax_rate_opt,
    teleportation_probability: float = teleportation_opt,
    directed: bool = directed_opt,
    two_level: bool = two_level_opt,
    expanded: bool = expanded_opt,
    seed: int = seed_opt,
    num_trials: int = num_trials_opt,
    lump_states: bool = lump_states_opt,
    virtual_physical_nodes: bool = virtual_opt,
    write_state_network: bool = write_states_opt,
    parallel_submodules: bool = parallel_opt,
    verbose: int = verbose_opt,
    version: Optional[bool] = version_opt,
):
    """Find flow modules in a network and write them to DEST"""
    configure_logging(verbose)
    options = RunOptions(
        network_data=network_data,
        dest=dest,
        input_format=input_format,
        relax_rate=multilayer_relax_rate,
        teleportation_probability=teleportation_probability,
        directed=directed,
        two_level=two_level,
        expanded=expanded,
        seed=seed,
        num_trials=num_trials,
        lump_states=lump_states,
        virtual_physical_nodes=virtual_physical_nodes,
        write_state_network=write_state_network,
        parallel_submodules=parallel_submodules,
    )
    status = run(options)
    if status != 0:
        raise Exit(code=status)
