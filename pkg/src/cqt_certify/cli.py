"""Command line entry point: `cqt-certify sweep|demo-bounds|teleport|povm-selftest`."""
import argparse
import logging
from typing import Any, NoReturn, Sequence

from pydantic import ValidationError
from rich.logging import RichHandler

from . import events
from .config import ChannelChoice, build_config, load_config_file
from .errors import CqtError, SolverConvergenceError
from .povm import DEFAULT_MAX_ITERS, DEFAULT_TOL, Backend
from .session import LabSession
from .states import Channel
from .sweep import demo_bounds, emit_csv, emit_plot_data, povm_selftest, run_sweep
from .teleport import ecp_report

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage()
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_output_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("output")
    group.add_argument(
        "--output-svg",
        dest="output_svg",
        help="Save the console output as an SVG file",
    )
    group.add_argument(
        "--output-html",
        dest="output_html",
        help="Save the console output as an HTML file",
    )
    group.add_argument(
        "--output-text",
        dest="output_text",
        help="Save the console output as a text file",
    )
    group.add_argument(
        "--no-color",
        dest="no_color",
        action="store_true",
        help="Disable colored output",
    )
    verbosity = group.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Only report problems")


def _add_solver_options(group: argparse._ArgumentGroup, defaults: bool) -> None:
    # Sweep values default to None so that a config file is not overridden
    group.add_argument(
        "--sdp-tol",
        dest="sdp_tol",
        type=float,
        default=DEFAULT_TOL if defaults else None,
        help=f"Certified duality gap required of the POVM solver (default {DEFAULT_TOL})",
    )
    group.add_argument(
        "--max-iters",
        dest="sdp_max_iters",
        type=int,
        default=DEFAULT_MAX_ITERS if defaults else None,
        help=f"Iteration limit of the POVM solver (default {DEFAULT_MAX_ITERS})",
    )
    group.add_argument(
        "--backend",
        dest="backend",
        choices=[str(b) for b in Backend],
        default=str(Backend.InteriorPoint) if defaults else None,
        help="POVM solver backend (default interior-point)",
    )


def create_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="cqt-certify",
        description="Certify controlled quantum teleportation with an untrusted receiver.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sweep = subparsers.add_parser("sweep", help="Sweep the noise level of the GHZ resource")
    group = sweep.add_argument_group("sweep")
    group.add_argument("--config", dest="config", help="Flat key = value file of sweep settings")
    group.add_argument(
        "--channel",
        dest="channel",
        choices=[str(c) for c in ChannelChoice],
        help="Depolarizing channel(s) to sweep (default both)",
    )
    group.add_argument("--p-min", dest="p_min", type=float, help="First noise level (default 0)")
    group.add_argument("--p-max", dest="p_max", type=float, help="Last noise level (default 1)")
    group.add_argument(
        "--p-step", dest="p_step", type=float, help="Noise level increment (default 0.02)"
    )
    group.add_argument(
        "--restarts",
        dest="optimizer_restarts",
        type=int,
        help="Random restarts of the settings optimizer (default 8)",
    )
    group.add_argument("--seed", dest="seed", type=int, help="Random seed (default 42)")
    group.add_argument("--out", dest="output_path", help="CSV output file (default sweep.csv)")
    group.add_argument(
        "--jobs", dest="jobs", type=int, help="Grid points evaluated in parallel (default 1)"
    )
    group.add_argument(
        "--plot-data",
        dest="plot_data",
        action="store_true",
        default=None,
        help="Also write one `s ecp` data file per channel",
    )
    group.add_argument(
        "--json", dest="json_path", help="Write the full sweep results as JSON to this file"
    )
    _add_solver_options(group, defaults=False)
    _add_output_options(sweep)

    bounds = subparsers.add_parser(
        "demo-bounds", help="Classical bounds and GHZ maxima of the Bell functionals"
    )
    group = bounds.add_argument_group("optimizer")
    group.add_argument("--restarts", dest="restarts", type=int, default=20)
    group.add_argument("--seed", dest="seed", type=int, default=42)
    _add_output_options(bounds)

    teleport = subparsers.add_parser(
        "teleport", help="Fidelities and ECP of one noisy GHZ resource"
    )
    group = teleport.add_argument_group("resource")
    group.add_argument(
        "--channel",
        dest="channel",
        choices=[str(c) for c in Channel],
        required=True,
        help="Depolarizing channel applied to the GHZ state",
    )
    group.add_argument("--p", dest="p", type=float, required=True, help="Noise level in [0, 1]")
    group.add_argument("--json", dest="json_path", help="Write the report as JSON to this file")
    _add_solver_options(group, defaults=True)
    _add_output_options(teleport)

    selftest = subparsers.add_parser(
        "povm-selftest", help="Check the POVM solver on instances with known optima"
    )
    group = selftest.add_argument_group("solver")
    _add_solver_options(group, defaults=True)
    _add_output_options(selftest)

    return parser


def configure_logging(options: argparse.Namespace) -> None:
    if options.verbose:
        level = logging.DEBUG
    elif options.quiet:
        level = logging.WARNING
    else:
        level = logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True)],
        force=True,
    )


def _sweep_overrides(options: argparse.Namespace) -> dict[str, Any]:
    names = [
        "channel",
        "p_min",
        "p_max",
        "p_step",
        "sdp_tol",
        "sdp_max_iters",
        "backend",
        "optimizer_restarts",
        "seed",
        "output_path",
        "jobs",
        "plot_data",
        "json_path",
    ]
    return {name: getattr(options, name) for name in names}


def cmd_sweep(options: argparse.Namespace, session: LabSession) -> int:
    file_values = load_config_file(options.config) if options.config else {}
    config = build_config(file_values, _sweep_overrides(options))

    results = run_sweep(config, publisher=session.publisher)
    if results.rows:
        session.output_written(emit_csv(results.rows, config.output_path))
        if config.plot_data:
            for path in emit_plot_data(results.rows, config.output_path):
                session.output_written(path)
    if config.json_path is not None:
        session.write_json(results, config.json_path)

    if not results.rows or not results.ok:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_demo_bounds(options: argparse.Namespace, session: LabSession) -> int:
    demo_bounds(restarts=options.restarts, seed=options.seed, publisher=session.publisher)
    return EXIT_OK


def cmd_teleport(options: argparse.Namespace, session: LabSession) -> int:
    report = ecp_report(
        Channel(options.channel),
        options.p,
        tol=options.sdp_tol,
        max_iters=options.sdp_max_iters,
        backend=Backend(options.backend),
    )
    session.publisher.publish(
        events.TeleportReport, subject=str(report.channel), payload={"report": report}
    )
    if options.json_path is not None:
        session.write_json(report, options.json_path)
    return EXIT_OK


def cmd_povm_selftest(options: argparse.Namespace, session: LabSession) -> int:
    cases = povm_selftest(
        tol=options.sdp_tol, backend=Backend(options.backend), publisher=session.publisher
    )
    return EXIT_OK if all(case.passed for case in cases) else EXIT_NUMERICAL


COMMANDS = {
    "sweep": cmd_sweep,
    "demo-bounds": cmd_demo_bounds,
    "teleport": cmd_teleport,
    "povm-selftest": cmd_povm_selftest,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = create_parser()
    try:
        options = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID

    configure_logging(options)
    session = LabSession(options)
    session.start()
    try:
        exit_code = COMMANDS[options.command](options, session)
    except SolverConvergenceError as exc:
        logging.error(f"cli: {exc} (gap {exc.gap:.3e})")
        exit_code = EXIT_NUMERICAL
    except (CqtError, ValidationError, OSError) as exc:
        logging.error(f"cli: {exc}")
        exit_code = EXIT_INVALID
    return session.finish(exit_code)
