"""
Free-space dipole-dipole interaction between z-polarized emitters.

For two emitters at separation r the complex interaction is

    V = -(3 sqrt(gamma_a gamma_b) / 2) * ( sin^2(theta) e^{i xi} / xi
        + (3 cos^2(theta) - 1) (e^{i xi} / xi^3 - i e^{i xi} / xi^2) )

with xi = k r and theta the polar angle of the separation measured from the
dipole (z) axis. The coherent part is Omega = Re V and the dissipative part
is gamma = -Im V. Their dimensionless forms g = Omega / sqrt(gamma_a gamma_b)
and f = gamma / sqrt(gamma_a gamma_b) depend on geometry only.
"""

import math
from dataclasses import dataclass

import numpy as np

from app.physics.common import (
    DEFAULT_WAVENUMBER,
    MAGIC_ANGLE,
    NEAR_FIELD_SERIES_XI,
    SingularGeometryError,
)

__all__ = [
    "MAGIC_ANGLE",
    "PairGeometry",
    "DipoleCoupling",
    "CouplingMap",
    "dimensionless_g",
    "dimensionless_f",
    "near_field_f_series",
    "dipole_coupling",
    "coupling_map",
]

# Taylor coefficients of sin(x)/x^3 - cos(x)/x^2 in powers of x^2.
_NEAR_FIELD_COEFFS = tuple(
    (-1) ** n * 2 * (n + 1) / math.factorial(2 * n + 3) for n in range(8)
)


@dataclass(frozen=True)
class PairGeometry:
    """Separation of an emitter pair in (xi, theta) form."""

    xi: float
    theta: float

    @classmethod
    def from_separation(
        cls, separation, k: float = DEFAULT_WAVENUMBER
    ) -> "PairGeometry":
        """Build the geometry from a Cartesian separation vector.

        theta is taken on the principal arccos branch; the interaction only
        depends on cos^2 and sin^2 so the branch for z < 0 is immaterial.
        """
        r = np.asarray(separation, dtype=float)
        distance = float(np.linalg.norm(r))
        if distance == 0.0 or k * distance <= 0.0:
            raise SingularGeometryError(
                f"Coincident emitters (separation {r.tolist()}) make the dipole coupling singular"
            )
        cos_theta = min(1.0, max(-1.0, float(r[2]) / distance))
        return cls(xi=k * distance, theta=math.acos(cos_theta))


@dataclass(frozen=True)
class DipoleCoupling:
    omega: float
    gamma: float
    g_dimless: float
    f_dimless: float

    @property
    def complex_value(self) -> complex:
        """Omega - i gamma, the entry used in M and V."""
        return complex(self.omega, -self.gamma)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "gamma": self.gamma,
            "g": self.g_dimless,
            "f": self.f_dimless,
        }


def _near_field_h(xi):
    x2 = np.asarray(xi, dtype=float) ** 2
    # Horner evaluation from the highest order term
    acc = np.zeros_like(x2)
    for coeff in reversed(_NEAR_FIELD_COEFFS):
        acc = acc * x2 + coeff
    return acc


def dimensionless_g(xi, theta):
    """Coherent part g(xi, theta); works on scalars and numpy arrays."""
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sin2 = np.sin(theta) ** 2
    angular = 3.0 * np.cos(theta) ** 2 - 1.0
    cos_xi = np.cos(xi)
    sin_xi = np.sin(xi)
    value = -1.5 * (
        sin2 * cos_xi / xi + angular * (cos_xi / xi**3 + sin_xi / xi**2)
    )
    return value if value.ndim else float(value)


def near_field_f_series(xi, theta):
    """Dissipative part f evaluated with the Taylor series of its near-field term."""
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sin2 = np.sin(theta) ** 2
    angular = 3.0 * np.cos(theta) ** 2 - 1.0
    value = 1.5 * (sin2 * np.sin(xi) / xi + angular * _near_field_h(xi))
    return value if value.ndim else float(value)


def dimensionless_f(xi, theta):
    """Dissipative part f(xi, theta); switches to the series at small xi."""
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sin2 = np.sin(theta) ** 2
    angular = 3.0 * np.cos(theta) ** 2 - 1.0
    small = xi < NEAR_FIELD_SERIES_XI
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct_h = np.sin(xi) / xi**3 - np.cos(xi) / xi**2
    h = np.where(small, _near_field_h(xi), direct_h)
    value = 1.5 * (sin2 * np.sin(xi) / xi + angular * h)
    return value if value.ndim else float(value)


def dipole_coupling(
    geom: PairGeometry, gamma_a: float, gamma_b: float
) -> DipoleCoupling:
    if not geom.xi > 0.0:
        raise SingularGeometryError(f"xi must be positive, got {geom.xi}")
    if gamma_a < 0.0 or gamma_b < 0.0:
        raise ValueError(
            f"Decay rates must be non-negative (gamma_a={gamma_a}, gamma_b={gamma_b})"
        )

    scale = math.sqrt(gamma_a * gamma_b)
    g = dimensionless_g(geom.xi, geom.theta)
    f = dimensionless_f(geom.xi, geom.theta)
    return DipoleCoupling(omega=scale * g, gamma=scale * f, g_dimless=g, f_dimless=f)


@dataclass(frozen=True)
class CouplingMap:
    """g and f tabulated on a (theta, xi) grid, shape (len(theta), len(xi))."""

    theta: np.ndarray
    xi: np.ndarray
    g: np.ndarray
    f: np.ndarray
    gamma_a: float
    gamma_b: float

    def to_records(self, clamp_g: float | None = 2.0) -> list[dict[str, float]]:
        """Flatten to plot-ready rows (theta-major order).

        g is clipped to [-clamp_g, clamp_g] in the emitted rows only; the
        rates omega_AB, gamma_AB are never clipped.
        """
        g = self.g if clamp_g is None else np.clip(self.g, -clamp_g, clamp_g)
        scale = math.sqrt(self.gamma_a * self.gamma_b)
        records = []
        for i, theta in enumerate(self.theta):
            for j, xi in enumerate(self.xi):
                records.append(
                    {
                        "theta": float(theta),
                        "xi": float(xi),
                        "g": float(g[i, j]),
                        "f": float(self.f[i, j]),
                        "omega_AB": scale * float(self.g[i, j]),
                        "gamma_AB": scale * float(self.f[i, j]),
                    }
                )
        return records


def coupling_map(theta_grid, xi_grid, gamma_a: float = 1.0, gamma_b: float = 1.0):
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    xi = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    if theta.size == 0 or xi.size == 0:
        raise ValueError("coupling_map needs nonempty theta and xi grids")
    if np.any(xi <= 0.0):
        raise SingularGeometryError("coupling_map needs strictly positive xi values")

    theta_mesh, xi_mesh = np.meshgrid(theta, xi, indexing="ij")
    return CouplingMap(
        theta=theta,
        xi=xi,
        g=np.asarray(dimensionless_g(xi_mesh, theta_mesh)),
        f=np.asarray(dimensionless_f(xi_mesh, theta_mesh)),
        gamma_a=gamma_a,
        gamma_b=gamma_b,
    )
