import pytest

from app.commands.common import EXIT_CONFIG, EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK
from tests.commands.helpers import cavelim, example, read_csv, read_json

BAD_RATE = """\
cavity: {omega_c: 0.0, kappa: -1.0, g0_A: 1.0, g0_B: 1.0}
emitter_a: {omega_A: 0.0, gamma_A: 1.0}
ensemble_b: {n_emitters: 1, omega_B: 5.0, gamma_B: 1.0}
couplings: {g_A: 0.0, g_B: [1.0], omega_AB: [0.5], gamma_AB: [0.0]}
"""

UNDAMPED_RESONANT = """\
cavity: {omega_c: 0.0, kappa: 1.0, g0_A: 1.0, g0_B: 1.0}
emitter_a: {omega_A: 0.0, gamma_A: 1.0}
ensemble_b: {n_emitters: 1, omega_B: 0.0, gamma_B: 0.0}
couplings: {g_A: 0.0, g_B: [1.0], omega_AB: [0.5], gamma_AB: [0.0]}
"""


def test_eliminate_dispersive_example(tmp_path):
    status = cavelim("eliminate", "--config", example("dispersive.yaml"), out_dir=tmp_path)
    assert status == EXIT_OK

    table = read_csv(tmp_path / "effective.csv")
    assert len(table) == 1
    row = table.iloc[0]
    assert row["g_A_eff"] == pytest.approx(-5000 / 10001, rel=1e-12)
    assert row["mu"] == pytest.approx(50 / 10001, rel=1e-10)
    assert row["omega_c_eff"] == pytest.approx(1000.0 - 10000 / 10001, rel=1e-12)
    assert row["verdict"] == "pass"

    result = read_json(tmp_path / "effective.json")
    assert result["manifest"] == "manifest.json"
    assert result["validity"]["verdict"] == "pass"
    assert result["linewidth_modification"]["delta_kappa"] == pytest.approx(100 / 10001)
    assert result["dissipator_modes"]["gamma_plus"] > result["dissipator_modes"]["gamma_minus"]

    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["command"] == "eliminate"
    assert manifest["exit_status"] == EXIT_OK
    assert manifest["outputs"] == ["effective.json", "effective.csv"]
    assert manifest["config"]["ensemble_b"]["omega_B"] == 1100.0


def test_eliminate_geometric_pair(tmp_path):
    status = cavelim("eliminate", "--config", example("geometric_pair.yaml"), out_dir=tmp_path)
    assert status == EXIT_OK
    result = read_json(tmp_path / "effective.json")
    assert result["couplings"]["n"] == 2
    assert "coupling_modification" not in result


def test_eliminate_fail_verdict_is_only_fatal_when_strict(tmp_path):
    config = example("validity_fail.yaml")
    assert cavelim("eliminate", "--config", config, out_dir=tmp_path / "lenient") == EXIT_OK
    assert cavelim("eliminate", "--config", config, "--strict", out_dir=tmp_path / "strict") == (
        EXIT_INVALID
    )
    # outputs are still written under --strict
    assert (tmp_path / "strict" / "effective.json").exists()
    assert read_json(tmp_path / "strict" / "manifest.json")["exit_status"] == EXIT_INVALID


def test_validate_fail_example(tmp_path):
    config = example("validity_fail.yaml")
    assert cavelim("validate", "--config", config, "--strict", out_dir=tmp_path) == EXIT_INVALID
    result = read_json(tmp_path / "validity.json")
    assert result["validity"]["verdict"] == "fail"
    assert result["validity"]["max_coupling_ratio"] == pytest.approx(5.0)
    assert result["diagnostics"] == []


def test_validate_relaxed_thresholds(tmp_path):
    status = cavelim(
        "validate",
        "--config",
        example("validity_fail.yaml"),
        "--strict",
        "--threshold",
        "10",
        "--marginal-threshold",
        "1000",
        out_dir=tmp_path,
    )
    assert status == EXIT_OK
    assert read_json(tmp_path / "validity.json")["validity"]["verdict"] == "marginal"


def test_validate_retardation_estimate(tmp_path):
    status = cavelim(
        "validate", "--config", example("dispersive.yaml"), "--alpha", "1", out_dir=tmp_path
    )
    assert status == EXIT_OK
    result = read_json(tmp_path / "validity.json")
    assert result["validity"]["retardation_ratio"] < 0.05
    assert len(result["beta_ad"]) == 1


def test_invalid_config_exits_with_config_status(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(BAD_RATE, encoding="utf-8")
    assert cavelim("eliminate", "--config", str(path), out_dir=tmp_path / "out") == EXIT_CONFIG
    assert cavelim("validate", "--config", str(path), out_dir=tmp_path / "out") == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    status = cavelim("eliminate", "--config", str(tmp_path / "absent.yaml"), out_dir=tmp_path)
    assert status == EXIT_CONFIG


def test_usage_error_exits_with_config_status(tmp_path):
    assert cavelim("eliminate", out_dir=tmp_path) == EXIT_CONFIG
    assert cavelim("spectrum", "--mode", "sideways", out_dir=tmp_path) == EXIT_CONFIG


def test_singular_elimination_exits_with_numerical_status(tmp_path):
    path = tmp_path / "undamped.yaml"
    path.write_text(UNDAMPED_RESONANT, encoding="utf-8")
    assert cavelim("eliminate", "--config", str(path), out_dir=tmp_path / "out") == (
        EXIT_NUMERICAL
    )
