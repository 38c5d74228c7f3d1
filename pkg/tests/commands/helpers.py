import json
from pathlib import Path

import pandas as pd

from CavElim import run

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config_example"


def example(name: str) -> str:
    return str(CONFIG_DIR / name)


def cavelim(*args, out_dir: Path) -> int:
    """Run one CavElim subcommand quietly with its outputs under `out_dir`."""
    command, *rest = args
    return run(["--quiet", command, *rest, "--out-dir", str(out_dir)])


def read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)
