"""
Sweep command for CavElim.

A sweep file names a base (a system configuration, an effective-parameter
mapping or the dipole functions), one or more axes and the quantities to
record. Grid points are evaluated independently on a thread pool and the
result table is assembled in grid order.
"""

import atexit
import concurrent.futures
import copy
import itertools
import math
import os
import threading
from collections.abc import Callable
from enum import Enum
from functools import cached_property

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.commands.common import (
    EXIT_OK,
    add_output_argument,
    finish_run,
    linear_grid,
    output_path,
)
from app.log import log_and_print, print_banner
from app.physics.classical import (
    polariton_analysis,
    spectrum_peaks,
    transmission_spectrum,
)
from app.physics.common import CavElimError, SingularGeometryError
from app.physics.dipole import dimensionless_f, dimensionless_g
from app.physics.elimination import EffectiveParams, effective_params, validity_report
from app.physics.model import build_couplings
from app.physics.states import SpectrumMode
from app.utils.config import (
    ConfigError,
    check_system,
    field_loc,
    load_yaml,
    parse_effective,
    to_plain,
    validate_model,
)
from app.utils.utils import resolve_threads, write_csv, write_json

DEFAULT_MAX_POINTS = 100_000


class SweepBase(Enum):
    SYSTEM = "system"
    EFFECTIVE = "effective"
    DIPOLE = "dipole"

    def __str__(self):
        return self.value


class GridRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    min: float
    max: float
    count: int = Field(gt=0)


class SweepAxis(BaseModel):
    """One swept parameter: a dotted path and either explicit values or a linspace."""

    model_config = ConfigDict(frozen=True)

    path: str
    values: tuple[float, ...] | None = None
    grid: GridRange | None = None

    @model_validator(mode="after")
    def _one_grid(self):
        if (self.values is None) == (self.grid is None):
            raise ValueError(f"axis {self.path!r} needs exactly one of values and grid")
        if self.values is not None and len(self.values) == 0:
            raise ValueError(f"axis {self.path!r} has no values")
        return self

    @property
    def base(self) -> str:
        return self.path.split(".", 1)[0]

    @property
    def target(self) -> str:
        return self.path.split(".", 1)[1] if "." in self.path else ""

    def points(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return linear_grid(self.grid.min, self.grid.max, self.grid.count)


class SpectrumSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid: GridRange
    eta: float = Field(default=0.1, gt=0.0)
    kappa_bare: float | None = None
    mode: SpectrumMode = SpectrumMode.EXACT


class DipoleSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta: float | None = None
    xi: float | None = None
    gamma_a: float = Field(default=1.0, ge=0.0)
    gamma_b: float = Field(default=1.0, ge=0.0)


class SweepSpec(BaseModel):
    base: SweepBase
    config: str | None = Field(
        description="System or effective-parameter file, relative to the sweep file",
        default=None,
    )
    effective: dict | None = Field(
        description="Inline effective parameters for the effective base", default=None
    )
    dipole: DipoleSettings = DipoleSettings()
    axes: list[SweepAxis] = Field(min_length=1)
    outputs: list[str] = Field(min_length=1)
    spectrum: SpectrumSettings | None = None
    n_bar: float = Field(default=1.0, ge=0.0)
    max_points: int = Field(default=DEFAULT_MAX_POINTS, gt=0)

    @property
    def total_points(self) -> int:
        return math.prod(len(axis.points()) for axis in self.axes)


class SweepPoint:
    """Quantities of one grid point, computed on first use."""

    def __init__(self, sweep: "PreparedSweep", assignment: dict[str, float]):
        self.sweep = sweep
        self.assignment = assignment

    @cached_property
    def system(self):
        data = copy.deepcopy(self.sweep.system_data)
        for path, value in self.assignment.items():
            set_path(data, path.split(".", 1)[1], value)
        spec, _ = check_system(data, self.sweep.spec_path)
        return spec, build_couplings(spec)

    @cached_property
    def params(self) -> EffectiveParams:
        if self.sweep.spec.base == SweepBase.SYSTEM:
            spec, couplings = self.system
            return effective_params(couplings, spec)
        data = dict(self.sweep.effective_data)
        for path, value in self.assignment.items():
            data[path.split(".", 1)[1]] = value
        return EffectiveParams.model_validate(data)

    @cached_property
    def polariton(self):
        return polariton_analysis(self.params)

    @cached_property
    def validity(self):
        spec, couplings = self.system
        return validity_report(spec, couplings, n_bar=self.sweep.spec.n_bar)

    @cached_property
    def spectrum(self):
        settings = self.sweep.spec.spectrum
        spec = couplings = None
        kappa_bare = settings.kappa_bare
        if self.sweep.spec.base == SweepBase.SYSTEM:
            spec, couplings = self.system
            if kappa_bare is None:
                kappa_bare = spec.cavity.kappa
        elif kappa_bare is None:
            kappa_bare = self.sweep.kappa_bare or self.params.kappa_eff
        grid = linear_grid(settings.grid.min, settings.grid.max, settings.grid.count)
        return transmission_spectrum(
            self.params,
            kappa_bare=kappa_bare,
            eta=settings.eta,
            omega_grid=grid,
            mode=settings.mode,
            spec=spec,
            couplings=couplings,
        )

    @cached_property
    def dipole(self) -> tuple[float, float]:
        settings = self.sweep.spec.dipole
        theta = self.assignment.get("dipole.theta", settings.theta)
        xi = self.assignment.get("dipole.xi", settings.xi)
        if not xi > 0:
            raise SingularGeometryError(f"xi must be positive, got {xi}")
        return float(dimensionless_g(xi, theta)), float(dimensionless_f(xi, theta))

    @property
    def dipole_scale(self) -> float:
        settings = self.sweep.spec.dipole
        return math.sqrt(settings.gamma_a * settings.gamma_b)


def _params_output(name: str) -> Callable[[SweepPoint], float]:
    return lambda point: getattr(point.params, name)


def _polariton_output(name: str) -> Callable[[SweepPoint], float]:
    return lambda point: getattr(point.polariton, name)


EFFECTIVE_OUTPUTS = [*EffectiveParams.model_fields, "omega_c_eff", "omega_A_eff"]
POLARITON_OUTPUTS = [
    "Gamma_plus",
    "Gamma_minus",
    "omega_plus",
    "omega_minus",
    "gamma_plus_onset",
    "exceptional_point",
]

# name -> (evaluator, bases it is defined for)
OUTPUT_REGISTRY: dict[str, tuple[Callable[[SweepPoint], object], set[SweepBase]]] = {
    **{
        name: (_params_output(name), {SweepBase.SYSTEM, SweepBase.EFFECTIVE})
        for name in EFFECTIVE_OUTPUTS
    },
    **{
        name: (_polariton_output(name), {SweepBase.SYSTEM, SweepBase.EFFECTIVE})
        for name in POLARITON_OUTPUTS
    },
    "verdict": (lambda point: str(point.validity.verdict), {SweepBase.SYSTEM}),
    "max_ratio": (lambda point: point.validity.max_ratio, {SweepBase.SYSTEM}),
    "spectrum_peak_count": (
        lambda point: len(spectrum_peaks(point.spectrum)),
        {SweepBase.SYSTEM, SweepBase.EFFECTIVE},
    ),
    "spectrum_max": (
        lambda point: float(np.max(point.spectrum.T_c)),
        {SweepBase.SYSTEM, SweepBase.EFFECTIVE},
    ),
    "g": (lambda point: point.dipole[0], {SweepBase.DIPOLE}),
    "f": (lambda point: point.dipole[1], {SweepBase.DIPOLE}),
    "omega_AB": (lambda point: point.dipole_scale * point.dipole[0], {SweepBase.DIPOLE}),
    "gamma_AB": (lambda point: point.dipole_scale * point.dipole[1], {SweepBase.DIPOLE}),
}


def set_path(data: dict, path: str, value: float):
    """Assign `value` at a dotted path such as 'couplings.g_B[0]'."""
    loc = field_loc(path)
    node = data
    for key, nxt in zip(loc, loc[1:]):
        if isinstance(key, int):
            if not isinstance(node, list) or key >= len(node):
                raise ConfigError(f"index {key} out of range", field=path)
            node = node[key]
        else:
            if node.get(key) is None:
                node[key] = [] if isinstance(nxt, int) else {}
            node = node[key]
    last = loc[-1]
    if isinstance(last, int):
        if not isinstance(node, list) or last >= len(node):
            raise ConfigError(f"index {last} out of range", field=path)
    node[last] = value


class PreparedSweep:
    """Sweep file resolved against its base, ready to evaluate points."""

    def __init__(self, spec: SweepSpec, spec_path: str):
        self.spec = spec
        self.spec_path = spec_path
        self.system_data: dict | None = None
        self.effective_data: dict | None = None
        self.kappa_bare: float | None = None
        self._check()
        self._load_base()
        self.axis_points = [axis.points() for axis in spec.axes]

    def _check(self):
        spec = self.spec
        for axis in spec.axes:
            if axis.base != str(spec.base) or not axis.target:
                raise ConfigError(
                    f"axis {axis.path!r} does not address the {spec.base} base",
                    path=self.spec_path,
                    field="axes",
                )
            if spec.base == SweepBase.DIPOLE and axis.target not in ("theta", "xi"):
                raise ConfigError(
                    f"dipole axes are dipole.theta and dipole.xi, got {axis.path!r}",
                    path=self.spec_path,
                    field="axes",
                )
            if spec.base == SweepBase.EFFECTIVE and axis.target not in EffectiveParams.model_fields:
                raise ConfigError(
                    f"unknown effective parameter in axis {axis.path!r}",
                    path=self.spec_path,
                    field="axes",
                )
        for name in spec.outputs:
            if name not in OUTPUT_REGISTRY:
                raise ConfigError(
                    f"unknown output {name!r}", path=self.spec_path, field="outputs"
                )
            if spec.base not in OUTPUT_REGISTRY[name][1]:
                raise ConfigError(
                    f"output {name!r} is not available for the {spec.base} base",
                    path=self.spec_path,
                    field="outputs",
                )
            if name.startswith("spectrum_") and spec.spectrum is None:
                raise ConfigError(
                    f"output {name!r} needs a spectrum section",
                    path=self.spec_path,
                    field="spectrum",
                )
        if spec.base == SweepBase.DIPOLE:
            swept = {axis.target for axis in spec.axes}
            for name in ("theta", "xi"):
                if name not in swept and getattr(spec.dipole, name) is None:
                    raise ConfigError(
                        f"dipole.{name} is neither swept nor fixed",
                        path=self.spec_path,
                        field=f"dipole.{name}",
                    )
        total = spec.total_points
        if total > spec.max_points:
            raise ConfigError(
                f"sweep has {total} points, above the cap of {spec.max_points}; refusing to run",
                path=self.spec_path,
                field="max_points",
            )

    def _base_path(self) -> str:
        return os.path.join(os.path.dirname(os.path.abspath(self.spec_path)), self.spec.config)

    def _load_base(self):
        spec = self.spec
        if spec.base == SweepBase.SYSTEM:
            if spec.config is None:
                raise ConfigError(
                    "system sweeps need a config file", path=self.spec_path, field="config"
                )
            path = self._base_path()
            raw = load_yaml(path)
            # errors in the base system are fatal before any point runs
            check_system(raw, path)
            self.system_data = to_plain(raw)
        elif spec.base == SweepBase.EFFECTIVE:
            if spec.config is not None:
                path = self._base_path()
                loaded = parse_effective(load_yaml(path), path)
            elif spec.effective is not None:
                loaded = parse_effective(dict(spec.effective), self.spec_path)
            else:
                raise ConfigError(
                    "effective sweeps need a config file or an inline effective mapping",
                    path=self.spec_path,
                    field="effective",
                )
            self.effective_data = loaded.params.model_dump(
                exclude={"omega_c_eff", "omega_A_eff"}
            )
            self.kappa_bare = loaded.kappa_bare

    def assignments(self):
        """Grid points in itertools.product order (last axis fastest)."""
        paths = [axis.path for axis in self.spec.axes]
        for values in itertools.product(*self.axis_points):
            yield dict(zip(paths, (float(v) for v in values)))

    def columns(self) -> list[str]:
        return [axis.path for axis in self.spec.axes] + list(self.spec.outputs) + ["status"]

    def evaluate(self, assignment: dict[str, float]) -> dict:
        row = dict(assignment)
        try:
            point = SweepPoint(self, assignment)
            for name in self.spec.outputs:
                row[name] = OUTPUT_REGISTRY[name][0](point)
            row["status"] = "ok"
        except Exception as e:
            # one bad point must not abort the sweep
            if isinstance(e, (CavElimError, ConfigError, ValueError)):
                logger.warning("Sweep point {} failed: {}", assignment, e)
            else:
                logger.opt(exception=e).error("Sweep point {} raised unexpectedly", assignment)
            for name in self.spec.outputs:
                row.setdefault(name, None)
            row["status"] = f"error: {type(e).__name__}: {e}"
        return row


class SweepExecutor:
    """Thread pool with a bounded number of in-flight grid points."""

    def __init__(self, max_workers: int):
        self.max_workers = max_workers
        self.executor = concurrent.futures.ThreadPoolExecutor(max_workers=max_workers)
        self.slots = threading.BoundedSemaphore(2 * max_workers)
        self.submitted_futures = {}  # future -> grid index
        self.futures_lock = threading.Lock()
        atexit.register(self.cleanup)

    def cleanup(self):
        logger.debug("Shutting down sweep executor...")
        self.executor.shutdown(wait=True)
        atexit.unregister(self.cleanup)

    def submit_point(self, func: Callable, index: int, assignment: dict):
        self.slots.acquire()
        future = self.executor.submit(func, assignment)
        future.add_done_callback(lambda _: self.slots.release())
        with self.futures_lock:
            self.submitted_futures[future] = index
        return future

    def run(self, func: Callable, assignments) -> list[dict]:
        for index, assignment in enumerate(assignments):
            self.submit_point(func, index, assignment)

        with self.futures_lock:
            futures_map = self.submitted_futures.copy()
            self.submitted_futures.clear()

        total = len(futures_map)
        results: list[dict | None] = [None] * total
        completed = 0
        for future in concurrent.futures.as_completed(futures_map.keys()):
            index = futures_map[future]
            results[index] = future.result()
            completed += 1
            if completed % max(1, total // 10) == 0 or completed == total:
                logger.info("Sweep progress {}/{}", completed, total)
        self.cleanup()
        return results


def load_sweep(path: str) -> SweepSpec:
    raw = load_yaml(path)
    return validate_model(SweepSpec, to_plain(raw), raw, path)


def run_sweep(
    sweep_file: str,
    threads: int | None = None,
    serial: bool = False,
    max_points: int | None = None,
) -> int:
    """Evaluate the requested outputs on every grid point of a sweep file."""
    print_banner("SWEEP")
    spec = load_sweep(sweep_file)
    if max_points is not None:
        spec = spec.model_copy(update={"max_points": max_points})
    prepared = PreparedSweep(spec, sweep_file)
    total = spec.total_points
    columns = prepared.columns()

    if serial:
        logger.info("Evaluating {} sweep points serially", total)
        rows = [prepared.evaluate(a) for a in prepared.assignments()]
    else:
        workers = resolve_threads(threads)
        logger.info("Evaluating {} sweep points on {} threads", total, workers)
        rows = SweepExecutor(workers).run(prepared.evaluate, prepared.assignments())

    point_status = [row["status"] for row in rows]
    failures = sum(status != "ok" for status in point_status)

    csv_path = output_path("sweep.csv")
    json_path = output_path("sweep.json")
    write_csv(csv_path, rows, columns)
    write_json(
        json_path,
        {
            "base": str(spec.base),
            "points": total,
            "failures": failures,
            "columns": columns,
        },
    )
    if failures:
        logger.warning("{} of {} sweep points failed; see the status column", failures, total)
    log_and_print(f"sweep finished: {total - failures}/{total} points ok")

    return finish_run(
        "sweep",
        [csv_path, json_path],
        EXIT_OK,
        config=spec.model_dump(mode="json"),
        point_status=point_status,
    )


def setup_sweep_parser(parser):
    """Setup the sweep command parser."""
    sweep_parser = parser.add_parser("sweep", help="evaluate outputs over a parameter grid")
    sweep_parser.add_argument(
        "--config",
        type=str,
        help="sweep file (YAML)",
        required=True,
    )
    sweep_parser.add_argument(
        "--threads",
        type=int,
        help="worker threads (default: $CAVELIM_THREADS, else the CPU count)",
        required=False,
        default=None,
    )
    sweep_parser.add_argument(
        "--serial",
        action="store_true",
        help="evaluate the points in the calling thread",
        default=False,
    )
    sweep_parser.add_argument(
        "--max-points",
        type=int,
        help="override the point cap of the sweep file",
        required=False,
        default=None,
    )
    add_output_argument(sweep_parser)
