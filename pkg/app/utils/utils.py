import json
import math
import os
import tempfile
import time
from typing import Any

import numpy as np
import pandas as pd
import yaml
from loguru import logger
from pydantic import BaseModel, Field

from app import __version__

OUT_DIR = ""
MANIFEST_NAME = "manifest.json"
THREADS_ENV = "CAVELIM_THREADS"


def update_out_dir(out_dir: str):
    global OUT_DIR
    OUT_DIR = os.path.normpath(out_dir)
    os.makedirs(OUT_DIR, exist_ok=True)
    logger.info("Output directory {}", OUT_DIR)


def get_out_dir() -> str:
    global OUT_DIR
    return OUT_DIR


def resolve_threads(flag: int | None) -> int:
    """--threads, else $CAVELIM_THREADS, else the CPU count."""
    if flag is not None:
        if flag < 1:
            raise ValueError(f"--threads must be positive, got {flag}")
        return flag
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be positive, got {value}")
        return value
    return os.cpu_count() or 1


def format_number(value: Any) -> str:
    """Shortest round-trip text for CSV cells."""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    if value is None:
        return ""
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, arrays, complex numbers and pydantic models for json.dump."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="json"))
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, complex | np.complexfloating):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(
        dir=directory, prefix=f".{os.path.basename(path)}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug("Wrote {}", path)


def write_json(path: str, data: dict, with_manifest: bool = True):
    payload = to_jsonable(data)
    if with_manifest:
        payload = {"manifest": MANIFEST_NAME, **payload}
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=False) + "\n")


def write_csv(path: str, rows: list[dict[str, Any]], columns: list[str] | None = None):
    """Write rows as CSV with every number in shortest round-trip form."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    frame = pd.DataFrame(
        [[format_number(row.get(c)) for c in columns] for row in rows],
        columns=columns,
        dtype=str,
    )
    _atomic_write(path, frame.to_csv(index=False, lineterminator="\n"))


def write_yaml(path: str, data: dict):
    _atomic_write(path, yaml.safe_dump(to_jsonable(data), sort_keys=False))


class RunManifest(BaseModel):
    """Provenance record written last into every output directory."""

    command: str = Field(description="Subcommand that produced the outputs")
    version: str = Field(description="Toolkit version", default=__version__)
    timestamp: str = Field(
        description="Local time the run finished",
        default_factory=lambda: time.strftime("%Y-%m-%d %H:%M:%S"),
    )
    config: dict = Field(description="Resolved configuration snapshot", default={})
    outputs: list[str] = Field(description="Files written by the run", default=[])
    point_status: list[str] = Field(
        description="Per-point status of sweeps (ok or the error)", default=[]
    )
    exit_status: int = Field(description="Process exit status", default=0)


def write_manifest(out_dir: str, manifest: RunManifest) -> str:
    path = os.path.join(out_dir, MANIFEST_NAME)
    write_json(path, manifest.model_dump(), with_manifest=False)
    write_yaml(os.path.join(out_dir, "config.resolved.yaml"), manifest.config)
    return path
