"""
Helpers shared by the CavElim subcommands.
"""

import os

import numpy as np
from loguru import logger

from app.physics.common import VALIDITY_MARGINAL_THRESHOLD, VALIDITY_PASS_THRESHOLD
from app.utils.config import ConfigError
from app.utils.utils import RunManifest, get_out_dir, write_manifest

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class GridError(ConfigError):
    pass


def linear_grid(lo: float, hi: float, count: int) -> np.ndarray:
    count = int(count)
    if count < 1:
        raise GridError(f"grid count must be positive, got {count}")
    if count > 1 and not hi > lo:
        raise GridError(f"grid needs max > min, got [{lo}, {hi}]")
    return np.linspace(lo, hi, count)


def add_output_argument(sub_parser):
    sub_parser.add_argument(
        "--out-dir",
        type=str,
        help="directory receiving the CSV/JSON outputs, the manifest and the log",
        required=False,
        default="out",
    )


def add_threshold_arguments(sub_parser):
    sub_parser.add_argument(
        "--n-bar",
        type=float,
        help="expected photon number entering the sqrt(n) enhanced ratios",
        required=False,
        default=1.0,
    )
    sub_parser.add_argument(
        "--threshold",
        type=float,
        help="largest ratio still counted as a pass",
        required=False,
        default=VALIDITY_PASS_THRESHOLD,
    )
    sub_parser.add_argument(
        "--marginal-threshold",
        type=float,
        help="largest ratio still counted as marginal",
        required=False,
        default=VALIDITY_MARGINAL_THRESHOLD,
    )
    sub_parser.add_argument(
        "--strict",
        action="store_true",
        help="exit with status 2 when the validity verdict is fail",
        default=False,
    )


def output_path(name: str) -> str:
    return os.path.join(get_out_dir(), name)


def finish_run(
    command: str,
    outputs: list[str],
    exit_status: int,
    config: dict | None = None,
    point_status: list[str] | None = None,
) -> int:
    """Write the manifest after every other output and return the exit status."""
    manifest = RunManifest(
        command=command,
        config=config or {},
        outputs=[os.path.basename(p) for p in outputs],
        point_status=point_status or [],
        exit_status=exit_status,
    )
    path = write_manifest(get_out_dir(), manifest)
    logger.info("Run manifest written to {}", path)
    return exit_status
