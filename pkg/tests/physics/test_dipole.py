import math

import numpy as np
import pytest

from app.physics.common import SingularGeometryError
from app.physics.dipole import (
    MAGIC_ANGLE,
    PairGeometry,
    coupling_map,
    dimensionless_f,
    dimensionless_g,
    dipole_coupling,
    near_field_f_series,
)


def _complex_interaction(xi, theta):
    """-(3/2)(sin^2 e^{i xi}/xi + (3cos^2 - 1)(e^{i xi}/xi^3 - i e^{i xi}/xi^2))."""
    phase = np.exp(1j * xi)
    return -1.5 * (
        np.sin(theta) ** 2 * phase / xi
        + (3 * np.cos(theta) ** 2 - 1) * (phase / xi**3 - 1j * phase / xi**2)
    )


def test_g_f_match_complex_interaction():
    for xi in (0.05, 0.5, 1.0, 3.0, 12.0):
        for theta in (0.0, 0.4, MAGIC_ANGLE, math.pi / 2, 2.5):
            value = _complex_interaction(xi, theta)
            assert dimensionless_g(xi, theta) == pytest.approx(value.real, rel=1e-10, abs=1e-12)
            assert dimensionless_f(xi, theta) == pytest.approx(-value.imag, rel=1e-10, abs=1e-12)


def test_f_tends_to_one_at_small_separation():
    for theta in (0.0, math.pi / 2, MAGIC_ANGLE):
        assert abs(dimensionless_f(1e-3, theta) - 1.0) < 1e-5


def test_magic_angle_value():
    # near-field terms vanish, leaving sin(xi)/xi
    assert math.cos(MAGIC_ANGLE) ** 2 == pytest.approx(1 / 3, rel=1e-15)
    assert dimensionless_f(math.pi / 2, MAGIC_ANGLE) == pytest.approx(2 / math.pi, rel=1e-10)

    coupling = dipole_coupling(PairGeometry(xi=math.pi / 2, theta=MAGIC_ANGLE), 4.0, 9.0)
    assert coupling.gamma == pytest.approx(6.0 * 2 / math.pi, rel=1e-10)


def test_mirror_symmetry_in_theta():
    xi = np.linspace(0.1, 10.0, 25)
    for theta in (0.1, 0.7, 1.2):
        np.testing.assert_allclose(
            dimensionless_g(xi, theta), dimensionless_g(xi, math.pi - theta), rtol=1e-12, atol=1e-12
        )
        np.testing.assert_allclose(
            dimensionless_f(xi, theta), dimensionless_f(xi, math.pi - theta), rtol=1e-12, atol=1e-12
        )


def test_series_and_direct_forms_agree_near_switch():
    for theta in (0.0, 0.9, math.pi / 2):
        # just above the switch the direct form is used
        assert near_field_f_series(0.02, theta) == pytest.approx(
            dimensionless_f(0.02, theta), rel=1e-9
        )
        assert near_field_f_series(0.005, theta) == pytest.approx(
            dimensionless_f(0.005, theta), rel=1e-14
        )


def test_pair_geometry_from_separation():
    along_z = PairGeometry.from_separation([0.0, 0.0, 0.5], k=2 * math.pi)
    assert along_z.xi == pytest.approx(math.pi)
    assert along_z.theta == pytest.approx(0.0)

    along_x = PairGeometry.from_separation([0.25, 0.0, 0.0], k=2 * math.pi)
    assert along_x.xi == pytest.approx(math.pi / 2)
    assert along_x.theta == pytest.approx(math.pi / 2)

    below = PairGeometry.from_separation([0.0, 0.0, -1.0], k=1.0)
    assert below.theta == pytest.approx(math.pi)

    with pytest.raises(SingularGeometryError):
        PairGeometry.from_separation([0.0, 0.0, 0.0])


def test_dipole_coupling_errors():
    with pytest.raises(SingularGeometryError):
        dipole_coupling(PairGeometry(xi=0.0, theta=0.3), 1.0, 1.0)
    with pytest.raises(ValueError):
        dipole_coupling(PairGeometry(xi=1.0, theta=0.3), -1.0, 1.0)


def test_dipole_coupling_complex_value():
    coupling = dipole_coupling(PairGeometry(xi=1.3, theta=0.4), 1.0, 4.0)
    assert coupling.omega == pytest.approx(2.0 * coupling.g_dimless)
    assert coupling.gamma == pytest.approx(2.0 * coupling.f_dimless)
    assert coupling.complex_value == complex(coupling.omega, -coupling.gamma)


def test_coupling_map_shape_and_records():
    theta = np.linspace(0.0, math.pi, 5)
    xi = np.linspace(0.1, 2 * math.pi, 4)
    result = coupling_map(theta, xi)
    assert result.g.shape == (5, 4)
    assert result.f.shape == (5, 4)
    assert result.f[2, 1] == pytest.approx(dimensionless_f(xi[1], theta[2]))

    records = result.to_records(clamp_g=2.0)
    assert len(records) == 20
    assert records[1]["theta"] == theta[0] and records[1]["xi"] == xi[1]  # theta-major
    assert all(abs(r["g"]) <= 2.0 for r in records)
    # the near-field g at xi=0.1 is far above the clamp, the rate is not clipped
    assert abs(records[0]["omega_AB"]) > 2.0

    with pytest.raises(SingularGeometryError):
        coupling_map(theta, [0.0, 1.0])
