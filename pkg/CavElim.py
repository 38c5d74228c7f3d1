"""

CavElim - Adiabatic elimination of an emitter ensemble coupled to a cavity

=================================================

CavElim.py: Main entry point for the CavElim toolkit.

"""

import argparse
import os
import signal
import sys
import time

import numpy as np
from loguru import logger

from app.commands.common import EXIT_CONFIG, EXIT_NUMERICAL
from app.commands.dipole_map import compute_dipole_map, setup_dipole_map_parser
from app.commands.dynamics import run_dynamics, setup_dynamics_parser
from app.commands.eliminate import eliminate_system, setup_eliminate_parser
from app.commands.spectrum import compute_spectrum, setup_spectrum_parser
from app.commands.sweep import run_sweep, setup_sweep_parser
from app.commands.validate import setup_validate_parser, validate_system
from app.log import set_print_stdout
from app.physics.common import CavElimError
from app.physics.states import InitialState, ModelKind, SpectrumMode
from app.utils.config import ConfigError
from app.utils.utils import get_out_dir, update_out_dir

LOG_FILE_PREFIX = "CavElim"


def setup_logging(log_dir: str) -> tuple[str, int]:
    """Setup logging configuration"""
    log_timestamp = time.strftime("%Y%m%d_%H%M%S")
    log_filename = f"{LOG_FILE_PREFIX}_{log_timestamp}.log"
    logger.configure(handlers=[{"sink": sys.stdout, "level": "INFO"}])

    log_file_path = os.path.abspath(os.path.join(log_dir, log_filename))
    handler_id = logger.add(
        log_file_path,
        format="{time:YYYY-MM-DD HH:mm:ss} | {level} | {message}",
        level="DEBUG",
        encoding="utf-8",
    )
    return log_file_path, handler_id


def print_log_summary(log_file_path: str):
    """Print summary of warnings and errors from the current log file"""
    warning_lines = []
    error_lines = []

    TOKEN = " LOG SUMMARY "

    logger.info("=" * 25 + TOKEN + "=" * 25)
    if not os.path.exists(log_file_path):
        logger.info("Log Summary: No log file found")
        logger.info("=" * (50 + len(TOKEN)))
        return

    try:
        with open(log_file_path, encoding="utf-8") as f:
            for line_no, line in enumerate(f):
                if "| WARNING |" in line:
                    warning_lines.append((line_no, line.split("| WARNING |")[1].strip()))
                elif "| ERROR |" in line:
                    error_lines.append((line_no, line.split("| ERROR |")[1].strip()))
    except OSError as e:
        logger.error(f"Error reading log file {log_file_path}: {e}")

    if warning_lines:
        logger.info("\033[33mWARNINGS:\033[0m")
        for line_no, line in warning_lines:
            logger.info(f"\t\033[33m{line_no}: {line}\033[0m")

    if error_lines:
        logger.info("\033[31mERRORS:\033[0m")
        for line_no, line in error_lines:
            logger.info(f"\t\033[31m{line_no}: {line}\033[0m")

    logger.info("-" * (50 + len(TOKEN)))
    logger.info(f"Log file: \033[36m{log_file_path}\033[0m")

    color = "\033[33m" if warning_lines else "\033[32m"
    logger.info(f"\tWarnings: {color}{len(warning_lines)}\033[0m")
    color = "\033[31m" if error_lines else "\033[32m"
    logger.info(f"\tErrors: {color}{len(error_lines)}\033[0m")

    logger.info("=" * (50 + len(TOKEN)))


def signal_handler(signum, frame):
    """Handle termination signals"""
    logger.info("\033[1;34mReceived termination signal, exiting...\033[0m")
    sys.exit(EXIT_CONFIG if signum == signal.SIGINT else 0)


def install_handlers():
    """Route uncaught exceptions and termination signals through loguru"""

    def exception_handler(exc_type, exc_value, exc_traceback):
        """Handle uncaught exceptions and log them"""
        logger.opt(exception=(exc_type, exc_value, exc_traceback)).error(
            "Uncaught exception:"
        )
        sys.__excepthook__(exc_type, exc_value, exc_traceback)

    sys.excepthook = exception_handler
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)


class CavElimArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the configuration status."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CavElimArgumentParser(
        description="CavElim - adiabatic elimination of an emitter ensemble in cavity QED"
    )
    parser.add_argument(
        "--quiet",
        action="store_true",
        help="do not render tables and panels on stdout",
        default=False,
    )

    # Create subparsers for commands
    subparsers = parser.add_subparsers(dest="command", help="command to execute")

    # Setup subcommand parsers
    setup_eliminate_parser(subparsers)
    setup_spectrum_parser(subparsers)
    setup_dynamics_parser(subparsers)
    setup_validate_parser(subparsers)
    setup_sweep_parser(subparsers)
    setup_dipole_map_parser(subparsers)
    return parser


def dispatch(args) -> int:
    if args.command == "eliminate":
        return eliminate_system(
            config=os.path.normpath(args.config),
            n_bar=args.n_bar,
            strict=args.strict,
            threshold=args.threshold,
            marginal_threshold=args.marginal_threshold,
        )

    if args.command == "validate":
        return validate_system(
            config=os.path.normpath(args.config),
            n_bar=args.n_bar,
            strict=args.strict,
            threshold=args.threshold,
            marginal_threshold=args.marginal_threshold,
            alpha=args.alpha,
            beta_A=args.beta_a,
        )

    if args.command == "spectrum":
        return compute_spectrum(
            config=os.path.normpath(args.config) if args.config else None,
            params_file=os.path.normpath(args.params) if args.params else None,
            grid=tuple(args.grid) if args.grid else None,
            mode=SpectrumMode(args.mode),
            eta=args.eta,
            kappa_bare=args.kappa_bare,
        )

    if args.command == "dynamics":
        return run_dynamics(
            config=os.path.normpath(args.config),
            model_kind=ModelKind(args.model),
            initial=InitialState(args.initial),
            n_max=args.n_max,
            t_end=args.t_end,
            dt=args.dt,
            alpha=args.alpha,
            sample_every=args.sample_every,
            hilbert_cap=args.hilbert_cap,
            compare=args.compare,
        )

    if args.command == "sweep":
        return run_sweep(
            sweep_file=os.path.normpath(args.config),
            threads=args.threads,
            serial=args.serial,
            max_points=args.max_points,
        )

    if args.command == "dipole-map":
        return compute_dipole_map(
            theta_grid=tuple(args.theta_grid),
            xi_grid=tuple(args.xi_grid),
            gamma_a=args.gamma_a,
            gamma_b=args.gamma_b,
            clamp_g=args.clamp_g,
        )

    logger.error(
        "Please specify a command: eliminate, spectrum, dynamics, validate, sweep or dipole-map"
    )
    return EXIT_CONFIG


def run(argv: list[str] | None = None) -> int:
    """Parse `argv`, run one subcommand and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG

    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    set_print_stdout(not args.quiet)
    update_out_dir(args.out_dir)
    log_file_path, handler_id = setup_logging(get_out_dir())
    logger.info("CavElim command: {}", " ".join(sys.argv if argv is None else argv))

    try:
        return dispatch(args)
    except ConfigError as e:
        logger.error("Configuration error: {}", e)
        return EXIT_CONFIG
    except CavElimError as e:
        logger.error("Numerical failure ({}): {}", type(e).__name__, e)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as e:
        logger.error("Numerical failure (LinAlgError): {}", e)
        return EXIT_NUMERICAL
    except ValueError as e:
        logger.error("Invalid arguments: {}", e)
        return EXIT_CONFIG
    finally:
        print_log_summary(log_file_path)
        logger.remove(handler_id)


def main():
    """Main entry point"""
    install_handlers()
    sys.exit(run())


if __name__ == "__main__":
    main()
