#!/usr/bin/env python3
"""
Subgraph Entropy: entropy, equilibrium measures and subgraph entropy of metric graphs.
Main entry point for the command-line interface.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

# Add the project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from logger import logger
from managers.blowup_manager import BlowupManager
from managers.bounds_manager import BoundsManager
from managers.errors import (
    ConvergenceError,
    EnumerationCapError,
    GraphError,
    NormalizationError,
    PreconditionError,
)
from managers.explorer_manager import ExplorerManager
from managers.graph_file_manager import GraphFileManager
from managers.graph_manager import Graph, GraphManager, LengthFunction
from managers.settings_manager import SettingsManager
from managers.spectral_manager import SpectralManager
from nodes.verify_nodes import SUITES, VerifyNodes

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
DEFAULT_SEED = 0xC0FFEE

Command = Literal["entropy", "normalize", "measure", "subgraph", "blowup", "verify", "minimize"]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command
    input_path: Optional[str] = None
    input_paths: List[str] = []
    seed: int = DEFAULT_SEED
    tolerances: Dict[str, float] = {}
    output_path: Optional[str] = None
    settings_path: Optional[str] = None
    options: Dict[str, Any] = {}


def initialize_system(config: RunConfig) -> Dict[str, Any]:
    """Initialize all system components."""
    settings_manager = SettingsManager(config.settings_path)
    settings = settings_manager.apply_overrides(config.tolerances)

    graph_manager = GraphManager(settings.graph)
    spectral_manager = SpectralManager(settings.spectral, graph_manager)
    explorer_manager = ExplorerManager(settings.explorer, spectral_manager, graph_manager)
    bounds_manager = BoundsManager(settings.bounds, spectral_manager, explorer_manager, graph_manager)

    return {
        'graph_manager': graph_manager,
        'file_manager': GraphFileManager(graph_manager),
        'spectral_manager': spectral_manager,
        'blowup_manager': BlowupManager(settings.blowup, spectral_manager, graph_manager),
        'explorer_manager': explorer_manager,
        'bounds_manager': bounds_manager,
        'verify_nodes': VerifyNodes(graph_manager, spectral_manager, bounds_manager, settings.bounds),
    }


def _number(x: float) -> str:
    return f"{x:.12f}"


def _load(config: RunConfig, managers: Dict[str, Any]):
    return managers['file_manager'].load(config.input_path)


def _unit(g: Graph, lengths: LengthFunction, managers: Dict[str, Any]) -> LengthFunction:
    """Normalise with a warning when the input is not at unit entropy."""
    spectral = managers['spectral_manager']
    h = spectral.entropy(g, lengths)
    if abs(h - 1.0) > spectral.settings.unit_tol:
        logger.warning(f"{g.name} has entropy {h:.12g}; normalising to unit entropy")
        return spectral.normalize_unit(g, lengths)
    return lengths


def _write(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_entropy(config: RunConfig, managers: Dict[str, Any]) -> int:
    g, lengths = _load(config, managers)
    spectral = managers['spectral_manager']
    rank = managers['graph_manager'].rank(g)

    print(f"entropy {_number(spectral.entropy(g, lengths))}")
    print(f"rank {rank}")
    for i, component in enumerate(spectral.component_entropies(g, lengths)):
        print(
            f"component {i} vertices={','.join(component.vertices)} "
            f"rank={component.rank} entropy={_number(component.entropy)}"
        )
    if rank <= 1:
        print("note rank ≤ 1")
    if config.options.get('dump_matrix'):
        spectral.weighted_matrix(g, lengths).to_csv(config.options['dump_matrix'], g)
    return EXIT_OK


def cmd_normalize(config: RunConfig, managers: Dict[str, Any]) -> int:
    g, lengths = _load(config, managers)
    unit = managers['spectral_manager'].normalize_unit(g, lengths)
    _write(managers['file_manager'].emit(g, unit), config.output_path)
    return EXIT_OK


def cmd_measure(config: RunConfig, managers: Dict[str, Any]) -> int:
    g, lengths = _load(config, managers)
    lengths = _unit(g, lengths, managers)
    measure = managers['spectral_manager'].equilibrium_measure(g, lengths)
    for k, label in enumerate(g.pair_labels):
        print(f"mu {label} {_number(measure[2 * k])}")
    print(f"total {_number(measure.total)}")
    return EXIT_OK


def cmd_subgraph(config: RunConfig, managers: Dict[str, Any]) -> int:
    g, lengths = _load(config, managers)
    pair = g.pair_index(config.options['edge'])
    method = config.options['method']
    blowup = managers['blowup_manager']

    if method in ("integral", "both"):
        lengths = _unit(g, lengths, managers)
    values = {}
    if method in ("direct", "both"):
        values['direct'] = blowup.subgraph_entropy_direct(g, lengths, pair)
    if method in ("integral", "both"):
        result = blowup.integrate(g, lengths, pair)
        values['integral'] = result.value
        logger.info(f"Integrated to T = {result.horizon:g}, tail bound {result.tail_bound:.3e}")

    for name, value in values.items():
        print(f"{name} {_number(value)}")
    if method == "both":
        print(f"discrepancy {abs(values['direct'] - values['integral']):.3e}")
    return EXIT_OK


def cmd_blowup(config: RunConfig, managers: Dict[str, Any]) -> int:
    g, lengths = _load(config, managers)
    pair = g.pair_index(config.options['edge'])
    lengths = _unit(g, lengths, managers)
    trace = managers['blowup_manager'].blowup_trace(
        g,
        lengths,
        pair,
        config.options['horizon'],
        config.options['samples'],
        spacing=config.options['spacing'],
    )
    _write(trace.to_csv(), config.output_path)
    logger.info(f"Blow-up trace of {len(trace.samples)} samples, tail bound {trace.tail_bound:.3e}")
    return EXIT_OK


def cmd_verify(config: RunConfig, managers: Dict[str, Any]) -> int:
    result = managers['verify_nodes'].run(config.options['suite'], config.options['n'], config.seed)
    _write(result.to_csv(), config.output_path)
    summary_stream = sys.stdout if config.output_path else sys.stderr
    print(result.summary(), file=summary_stream)
    return EXIT_OK if result.all_satisfied else EXIT_VIOLATION


def _print_estimate(estimate, g: Graph, seed: int) -> None:
    print(f"graph {estimate.graph_name}")
    print(f"seed {seed}")
    print(f"value {_number(estimate.value)}")
    print(f"converged {estimate.converged}")
    print(f"best_restart {estimate.best_restart}")
    for label, length in zip(g.pair_labels, estimate.argmin_lengths.values):
        print(f"length {label} {_number(length)}")


def cmd_minimize(config: RunConfig, managers: Dict[str, Any]) -> int:
    files = managers['file_manager']
    graphs = [files.load(path)[0] for path in config.input_paths]
    explorer = managers['explorer_manager']
    restarts = config.options.get('restarts')

    if len(graphs) == 1:
        estimate = explorer.minimize_entropy_sup(graphs[0], restarts=restarts, seed=config.seed)
        _print_estimate(estimate, graphs[0], config.seed)
        if config.output_path:
            estimate.to_csv(config.output_path)
        return EXIT_OK

    catalog = explorer.entropy_rank_estimate(graphs, restarts=restarts, seed=config.seed)
    for g, estimate in zip(graphs, catalog.estimates.values()):
        _print_estimate(estimate, g, config.seed)
    print(f"overall_min {_number(catalog.overall_min)}")
    print(f"argmin_graph {catalog.argmin_graph}")
    if config.output_path:
        frames = []
        for name, estimate in catalog.estimates.items():
            frame = estimate.trace_frame()
            frame.insert(0, "graph", name)
            frames.append(frame)
        pd.concat(frames).to_csv(config.output_path, index=False, lineterminator="\n")
    return EXIT_OK


COMMANDS = {
    'entropy': cmd_entropy,
    'normalize': cmd_normalize,
    'measure': cmd_measure,
    'subgraph': cmd_subgraph,
    'blowup': cmd_blowup,
    'verify': cmd_verify,
    'minimize': cmd_minimize,
}


def _tolerance(text: str):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid value in {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED,
                        help="RNG seed (default: 0xC0FFEE)")
    common.add_argument("--settings", default=None,
                        help="settings JSON (default: config/settings.json)")
    common.add_argument("--tol", type=_tolerance, action="append", default=[],
                        metavar="SECTION.NAME=VALUE", help="override one setting, repeatable")

    parser = argparse.ArgumentParser(
        description="Entropy, equilibrium measure and subgraph entropy of metric graphs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", parents=[common], help="print entropy, rank and components")
    p.add_argument("graph")
    p.add_argument("--dump-matrix", default=None, metavar="CSV",
                   help="write the weighted edge matrix as CSV")

    p = sub.add_parser("normalize", parents=[common], help="rescale to unit entropy")
    p.add_argument("graph")
    p.add_argument("--out", default=None, help="output graph file (default: stdout)")

    p = sub.add_parser("measure", parents=[common], help="print the equilibrium measure")
    p.add_argument("graph")

    p = sub.add_parser("subgraph", parents=[common], help="entropy of the graph minus one edge")
    p.add_argument("graph")
    p.add_argument("--edge", required=True, help="edge id as written in the graph file")
    p.add_argument("--method", choices=["integral", "direct", "both"], default="both")

    p = sub.add_parser("blowup", parents=[common], help="sample the linear time blow-up")
    p.add_argument("graph")
    p.add_argument("--edge", required=True, help="edge id as written in the graph file")
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--spacing", choices=["uniform", "log"], default="uniform")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("verify", parents=[common], help="run randomised inequality sweeps")
    p.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    p.add_argument("--n", type=int, default=1000, help="samples per suite (default: 1000)")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("minimize", parents=[common], help="estimate the minimum of entropy-sup")
    p.add_argument("graph", nargs="+", help="one graph, or a catalog of graphs of one rank")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--out", default=None, help="optimizer trace CSV")
    return parser


def parse_config(argv: Optional[List[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    graphs = args.graph if isinstance(getattr(args, "graph", None), list) else []
    options = {
        key: value
        for key, value in vars(args).items()
        if key not in {"command", "graph", "seed", "settings", "tol", "out"}
    }
    return RunConfig(
        command=args.command,
        input_path=graphs[0] if graphs else getattr(args, "graph", None),
        input_paths=graphs,
        seed=args.seed,
        tolerances=dict(args.tol),
        output_path=getattr(args, "out", None),
        settings_path=args.settings,
        options=options,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    config = parse_config(argv)
    try:
        managers = initialize_system(config)
        return COMMANDS[config.command](config, managers)
    except (
        GraphError,
        NormalizationError,
        PreconditionError,
        ConvergenceError,
        EnumerationCapError,
        FileNotFoundError,
        ValidationError,
        ValueError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
