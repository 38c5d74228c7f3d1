import math

import numpy as np
import pytest

from app.physics.model import (
    CouplingSet,
    SystemSpec,
    build_couplings,
    rate_matrix,
    validate_spec,
)
from app.physics.states import Severity
from tests.physics.systems import dispersive_spec, geometric_spec, make_spec


def _errors(spec):
    return [d for d in validate_spec(spec) if d.severity == Severity.ERROR]


def _warnings(spec):
    return [d for d in validate_spec(spec) if d.severity == Severity.WARNING]


def test_from_rates_single_emitter():
    couplings = CouplingSet.from_rates(
        delta_B=3.0, gamma_B=2.0, g_B=[0.5], omega_AB=[0.7], gamma_AB=[0.1], g_A=0.4
    )
    assert couplings.n == 1
    assert couplings.M[0, 0] == complex(3.0, -2.0)
    assert couplings.V[0] == complex(0.7, -0.1)
    assert couplings.G[0] == 0.5
    assert couplings.g_A == 0.4
    assert not couplings.is_decoupled


def test_from_rates_needs_pair_couplings_for_several_emitters():
    with pytest.raises(ValueError):
        CouplingSet.from_rates(1.0, 1.0, [1.0, 1.0], [0.0, 0.0], [0.0, 0.0], 0.0)
    with pytest.raises(ValueError):
        CouplingSet.from_rates(1.0, 1.0, [1.0, 1.0], [0.0], [0.0, 0.0], 0.0)


def test_build_couplings_uses_overrides():
    spec = dispersive_spec()
    couplings = build_couplings(spec)
    assert spec.delta_B == 100.0
    assert couplings.M[0, 0] == complex(100.0, -1.0)
    assert couplings.G[0] == 10.0
    assert couplings.V[0] == 5.0
    assert couplings.g_A == 0.0


def test_geometric_couplings_are_symmetric():
    spec = geometric_spec(3)
    couplings = build_couplings(spec)
    assert couplings.n == 3
    # one evaluation per pair: exactly symmetric, not just to rounding
    assert np.array_equal(couplings.M, couplings.M.T)
    assert np.all(np.diag(couplings.M) == complex(30.0, -1.0))

    profile = spec.cavity_profile(spec.ensemble_b.positions[1])
    assert couplings.G[1].real == pytest.approx(5.0 * profile)
    assert couplings.g_A == pytest.approx(5.0)


def test_rate_matrix_layout():
    spec = make_spec(
        delta_B=1.0,
        gamma_B=2.0,
        g_B=[1.0, 1.0],
        omega_AB=[0.1, 0.2],
        gamma_AB=[0.3, 0.4],
        g_A=0.0,
        kappa=0.5,
        gamma_A=0.6,
        omega_BB=[[0.0, 0.7], [0.7, 0.0]],
        gamma_BB=[[0.0, 0.8], [0.8, 0.0]],
    )
    R = rate_matrix(spec, build_couplings(spec))
    expected = np.array(
        [
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.6, 0.3, 0.4],
            [0.0, 0.3, 2.0, 0.8],
            [0.0, 0.4, 0.8, 2.0],
        ]
    )
    np.testing.assert_allclose(R, expected, atol=1e-15)


def test_validate_spec_accepts_fixtures():
    assert _errors(dispersive_spec()) == []
    assert _warnings(dispersive_spec()) == []
    assert _errors(geometric_spec()) == []


def test_validate_spec_reports_errors():
    base = geometric_spec(2).model_dump()

    negative = dict(base, cavity=dict(base["cavity"], kappa=-1.0))
    fields = [d.field for d in _errors(SystemSpec.model_validate(negative))]
    assert "cavity.kappa" in fields

    positions = base["ensemble_b"]["positions"]
    coincident = dict(
        base, ensemble_b=dict(base["ensemble_b"], positions=[positions[0], positions[0]])
    )
    fields = [d.field for d in _errors(SystemSpec.model_validate(coincident))]
    assert "ensemble_b.positions[1]" in fields

    missing = dict(base, ensemble_b=dict(base["ensemble_b"], positions=[positions[0]]))
    fields = [d.field for d in _errors(SystemSpec.model_validate(missing))]
    assert "ensemble_b.positions" in fields

    empty = dict(base, ensemble_b=dict(base["ensemble_b"], n_emitters=0, positions=[]))
    fields = [d.field for d in _errors(SystemSpec.model_validate(empty))]
    assert "ensemble_b.n_emitters" in fields


def test_validate_spec_warnings():
    spec = make_spec(
        delta_B=10.0,
        gamma_B=1.0,
        g_B=1.0,
        omega_AB=0.0,
        gamma_AB=2.0,  # above sqrt(gamma_A gamma_B) = 1
        g_A=0.0,
        kappa=1.0,
        gamma_A=1.0,
    )
    assert _errors(spec) == []
    assert [d.field for d in _warnings(spec)] == ["couplings.gamma_AB[0]"]

    off_ratio = spec.model_copy(
        update={"cavity": spec.cavity.model_copy(update={"g0_A": 2.0})}
    )
    assert "cavity.g0_A" in [d.field for d in _warnings(off_ratio)]


def test_asymmetric_override_is_an_error():
    spec = make_spec(
        delta_B=1.0,
        gamma_B=1.0,
        g_B=[1.0, 1.0],
        omega_AB=[0.0, 0.0],
        gamma_AB=[0.0, 0.0],
        g_A=0.0,
        kappa=1.0,
        gamma_A=1.0,
        omega_BB=[[0.0, 0.5], [0.4, 0.0]],
        gamma_BB=[[0.0, 0.0], [0.0, 0.0]],
    )
    assert [d.field for d in _errors(spec)] == ["couplings.omega_BB"]


def test_normalized_scales_rates():
    spec = dispersive_spec().model_copy(update={"reference_rate": 2.0})
    normalized = spec.normalized()
    assert normalized.reference_rate == 1.0
    assert normalized.delta_B == 50.0
    assert normalized.cavity.kappa == 0.5
    assert normalized.couplings.g_B == (5.0,)
    assert normalized.couplings.omega_AB == (2.5,)


def test_single_emitter_geometry():
    spec = geometric_spec(1)
    geom, profile = spec.single_emitter_geometry()
    assert geom.xi == pytest.approx(2 * math.pi * 0.21)
    assert geom.theta == pytest.approx(math.pi / 2)
    assert profile == pytest.approx(1.0)

    with pytest.raises(ValueError):
        geometric_spec(2).single_emitter_geometry()


def test_cavity_profile_node():
    spec = dispersive_spec()
    assert abs(spec.cavity_profile([0.0, 0.25, 0.0])) < 1e-15
    assert spec.cavity_profile([0.0, 0.5, 0.0]) == pytest.approx(-1.0)
