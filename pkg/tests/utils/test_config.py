import textwrap

import pytest

from app.physics.states import Severity
from app.utils.config import (
    ConfigError,
    check_system,
    field_loc,
    load_effective,
    load_system,
    load_yaml,
)

SYSTEM = """\
cavity:
  omega_c: 0.0
  kappa: {kappa}
  g0_A: 1.0
  g0_B: 1.0
emitter_a:
  omega_A: 0.0
  gamma_A: 1.0
ensemble_b:
  n_emitters: 1
  omega_B: {omega_B}
  gamma_B: 1.0
couplings:
  g_A: 0.0
  g_B: [1.0]
  omega_AB: [0.5]
  gamma_AB: [{gamma_AB}]
"""


def write(tmp_path, text: str, name: str = "system.yaml") -> str:
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return str(path)


def test_load_valid_system(tmp_path):
    path = write(tmp_path, SYSTEM.format(kappa=1.0, omega_B=10.0, gamma_AB=0.0))
    spec = load_system(path)
    assert spec.n_emitters == 1
    assert spec.delta_B == 10.0
    assert spec.couplings.g_B == (1.0,)


def test_negative_rate_names_line_and_field(tmp_path):
    path = write(tmp_path, SYSTEM.format(kappa=-1.0, omega_B=10.0, gamma_AB=0.0))
    with pytest.raises(ConfigError) as exc:
        load_system(path)
    assert exc.value.field == "cavity.kappa"
    assert exc.value.line == 3
    assert f"{path}:3 [cavity.kappa]" in str(exc.value)


def test_type_error_names_line_and_field(tmp_path):
    path = write(tmp_path, SYSTEM.format(kappa=1.0, omega_B="fast", gamma_AB=0.0))
    with pytest.raises(ConfigError) as exc:
        load_system(path)
    assert exc.value.field == "ensemble_b.omega_B"
    assert exc.value.line == 11


def test_missing_field(tmp_path):
    path = write(
        tmp_path,
        """\
        cavity:
          omega_c: 0.0
          kappa: 1.0
          g0_A: 1.0
          g0_B: 1.0
        emitter_a:
          omega_A: 0.0
          gamma_A: 1.0
        """,
    )
    with pytest.raises(ConfigError) as exc:
        load_system(path)
    assert exc.value.field == "ensemble_b"


def test_yaml_syntax_error_has_line(tmp_path):
    path = write(tmp_path, "cavity:\n  omega_c: [1.0, 2.0\nemitter_a: {}\n")
    with pytest.raises(ConfigError) as exc:
        load_yaml(path)
    assert exc.value.line is not None


def test_missing_file_and_non_mapping(tmp_path):
    with pytest.raises(ConfigError):
        load_yaml(str(tmp_path / "absent.yaml"))
    with pytest.raises(ConfigError):
        load_yaml(write(tmp_path, "- 1\n- 2\n", name="list.yaml"))


def test_check_system_returns_warnings(tmp_path):
    path = write(tmp_path, SYSTEM.format(kappa=1.0, omega_B=10.0, gamma_AB=3.0))
    spec, diagnostics = check_system(load_yaml(path), path)
    assert spec.couplings.gamma_AB == (3.0,)
    fields = {d.field for d in diagnostics}
    assert "couplings.gamma_AB[0]" in fields
    assert all(d.severity == Severity.WARNING for d in diagnostics)


def test_override_length_mismatch(tmp_path):
    text = SYSTEM.format(kappa=1.0, omega_B=10.0, gamma_AB=0.0).replace(
        "g_B: [1.0]", "g_B: [1.0, 2.0]"
    )
    with pytest.raises(ConfigError) as exc:
        load_system(write(tmp_path, text))
    assert exc.value.field == "couplings.g_B"
    assert exc.value.line == 15


def test_reference_rate_normalizes(tmp_path):
    text = "units:\n  reference_rate: 2.0\n" + SYSTEM.format(
        kappa=1.0, omega_B=10.0, gamma_AB=0.0
    )
    spec = load_system(write(tmp_path, text))
    assert spec.reference_rate == 1.0
    assert spec.ensemble_b.omega_B == 5.0
    assert spec.cavity.kappa == 0.5
    assert spec.couplings.omega_AB == (0.25,)


def test_field_loc():
    assert field_loc("ensemble_b.positions[1]") == ("ensemble_b", "positions", 1)
    assert field_loc("cavity.kappa") == ("cavity", "kappa")


def test_load_effective(tmp_path):
    path = write(
        tmp_path,
        """\
        delta_c_eff: 0.5
        delta_A_eff: 0.0
        g_A_eff: 2.0
        kappa_eff: 1.0
        gamma_A_eff: 1.0
        mu: 0.5
        omega_frame: 10.0
        omega_c_eff: 10.5
        kappa_bare: 0.8
        """,
        name="effective.yaml",
    )
    loaded = load_effective(path)
    assert loaded.params.omega_c_eff == 10.5
    assert loaded.kappa_bare == 0.8
    assert loaded.eta is None


def test_effective_unknown_key(tmp_path):
    path = write(
        tmp_path,
        "delta_c_eff: 0.0\ndelta_A_eff: 0.0\ng_A_eff: 1.0\nkappa_eff: 1.0\n"
        "gamma_A_eff: 1.0\nlambda: 3.0\n",
        name="effective.yaml",
    )
    with pytest.raises(ConfigError) as exc:
        load_effective(path)
    assert exc.value.field == "lambda"
    assert exc.value.line == 6


def test_effective_derived_frequency_mismatch(tmp_path):
    path = write(
        tmp_path,
        "delta_c_eff: 0.5\ndelta_A_eff: 0.0\ng_A_eff: 1.0\nkappa_eff: 1.0\n"
        "gamma_A_eff: 1.0\nomega_frame: 10.0\nomega_c_eff: 11.0\n",
        name="effective.yaml",
    )
    with pytest.raises(ConfigError) as exc:
        load_effective(path)
    assert exc.value.field == "omega_c_eff"
