"""
YAML configuration loading.

Files are parsed with ruamel.yaml in round-trip mode so that every error can
name the offending line and the dotted field path.
"""

import os
from typing import Any

from loguru import logger
from pydantic import BaseModel, ValidationError
from ruamel.yaml import YAML
from ruamel.yaml.comments import CommentedMap, CommentedSeq
from ruamel.yaml.error import YAMLError

from app.physics.elimination import EffectiveParams
from app.physics.model import Diagnostic, SystemSpec, validate_spec
from app.physics.states import Severity


class ConfigError(Exception):
    """Configuration problem, reported with file, line and field."""

    def __init__(
        self, message: str, path: str = "", line: int | None = None, field: str = ""
    ):
        self.path = path
        self.line = line
        self.field = field
        location = path
        if line is not None:
            location += f":{line}"
        if field:
            location += f" [{field}]"
        super().__init__(f"{location}: {message}" if location else message)


def create_yaml_instance():
    """Round-trip YAML instance that keeps line information."""
    yaml = YAML()
    yaml.preserve_quotes = True
    yaml.default_flow_style = False
    yaml.indent(mapping=2, sequence=4, offset=2)
    return yaml


def to_plain(node: Any) -> Any:
    """Strip ruamel containers down to dicts and lists."""
    if isinstance(node, dict):
        return {str(k): to_plain(v) for k, v in node.items()}
    if isinstance(node, list | tuple):
        return [to_plain(v) for v in node]
    return node


def line_of(node: Any, loc: tuple) -> int | None:
    """1-based line of the deepest node reachable along `loc`."""
    line = None
    for key in loc:
        if isinstance(node, CommentedMap) and key in node:
            line = node.lc.key(key)[0] + 1
            node = node[key]
        elif isinstance(node, CommentedSeq) and isinstance(key, int) and key < len(node):
            line = node.lc.item(key)[0] + 1
            node = node[key]
        else:
            break
    return line


def field_loc(field: str) -> tuple:
    """'ensemble_b.positions[1]' -> ('ensemble_b', 'positions', 1)."""
    parts = field.replace("]", "").replace("[", ".").split(".")
    return tuple(int(p) if p.isdigit() else p for p in parts if p)


def load_yaml(path: str) -> CommentedMap:
    if not os.path.isfile(path):
        raise ConfigError("file not found", path=path)
    try:
        with open(path, encoding="utf-8") as f:
            data = create_yaml_instance().load(f)
    except YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(
            f"invalid YAML: {getattr(e, 'problem', e)}",
            path=path,
            line=mark.line + 1 if mark is not None else None,
        ) from e
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", path=path, line=1)
    return data


def validate_model(model: type[BaseModel], data: dict, raw: Any, path: str):
    """model_validate with the first pydantic error mapped back to its YAML line."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(first["loc"])
        raise ConfigError(
            first["msg"],
            path=path,
            line=line_of(raw, loc),
            field=".".join(str(p) for p in loc),
        ) from e


def check_system(raw: dict, path: str = "") -> tuple[SystemSpec, list[Diagnostic]]:
    """Build a SystemSpec from a parsed mapping and check its invariants.

    Error diagnostics abort with ConfigError; warnings are returned.
    """
    data = to_plain(raw)
    units = data.pop("units", None) or {}
    if "reference_rate" in units:
        data["reference_rate"] = units["reference_rate"]
    spec = validate_model(SystemSpec, data, raw, path)

    diagnostics = validate_spec(spec)
    errors = [d for d in diagnostics if d.severity == Severity.ERROR]
    if errors:
        first = errors[0]
        raise ConfigError(
            "; ".join(f"{d.field}: {d.message}" for d in errors),
            path=path,
            line=line_of(raw, field_loc(first.field)),
            field=first.field,
        )
    return spec.normalized(), diagnostics


def parse_system(raw: dict, path: str = "") -> SystemSpec:
    return check_system(raw, path)[0]


def load_system(path: str) -> SystemSpec:
    spec = parse_system(load_yaml(path), path)
    logger.info("Loaded system from {} (N={})", path, spec.n_emitters)
    return spec


class EffectiveFile(BaseModel):
    """Effective parameters plus the optional spectrum inputs stored with them."""

    params: EffectiveParams
    kappa_bare: float | None = None
    eta: float | None = None


def parse_effective(raw: dict, path: str = "") -> EffectiveFile:
    data = to_plain(raw)
    extras = {k: data.pop(k) for k in ("kappa_bare", "eta") if k in data}
    # omega_c_eff / omega_A_eff are derived, so they are accepted but not stored
    derived = {k: data.pop(k) for k in ("omega_c_eff", "omega_A_eff") if k in data}
    unknown = sorted(set(data) - set(EffectiveParams.model_fields))
    if unknown:
        raise ConfigError(
            f"unknown effective parameter {unknown[0]!r}",
            path=path,
            line=line_of(raw, (unknown[0],)),
            field=unknown[0],
        )
    params = validate_model(EffectiveParams, data, raw, path)
    for key, value in derived.items():
        if abs(getattr(params, key) - float(value)) > 1e-12 * max(1.0, abs(float(value))):
            raise ConfigError(
                f"{key}={value} disagrees with omega_frame + detuning ({getattr(params, key)})",
                path=path,
                line=line_of(raw, (key,)),
                field=key,
            )
    return EffectiveFile(params=params, **extras)


def load_effective(path: str) -> EffectiveFile:
    result = parse_effective(load_yaml(path), path)
    logger.info("Loaded effective parameters from {}", path)
    return result
