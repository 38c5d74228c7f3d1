"""
Physical parameters of the cavity + emitter A + ensemble B system and the
coupling structures derived from them.

Frequencies and rates are dimensionless (units of `reference_rate`), lengths
are in units of the cavity wavelength. The rotating frame is fixed to omega_A.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from app.physics.common import (
    DEFAULT_WAVENUMBER,
    G0_RATIO_TOL,
    SYMMETRY_TOL,
    array_to_list,
)
from app.physics.dipole import PairGeometry, dipole_coupling
from app.physics.states import Severity

Vector3 = tuple[float, float, float]


class EmitterA(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega_A: float = Field(description="Transition frequency of A")
    gamma_A: float = Field(description="Amplitude decay rate of A")
    position: Vector3 = Field(
        description="Cartesian position of A in units of lambda", default=(0.0, 0.0, 0.0)
    )


class EnsembleB(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_emitters: int = Field(description="Number N of identical B emitters", ge=0)
    omega_B: float = Field(description="Transition frequency of each B emitter")
    gamma_B: float = Field(description="Amplitude decay rate of each B emitter")
    positions: tuple[Vector3, ...] = Field(
        description="Cartesian positions of the B emitters", default=()
    )


class Cavity(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega_c: float = Field(description="Cavity mode frequency")
    kappa: float = Field(description="Cavity amplitude decay rate")
    g0_A: float = Field(description="Peak cavity coupling of A")
    g0_B: float = Field(description="Peak cavity coupling of each B emitter")
    k: float = Field(description="Cavity wave number", default=DEFAULT_WAVENUMBER)
    wavevector_axis: Vector3 = Field(
        description="Direction of the cavity wave vector", default=(0.0, 1.0, 0.0)
    )


class CouplingOverrides(BaseModel):
    """Explicit rates replacing the geometric evaluation of selected couplings."""

    model_config = ConfigDict(frozen=True)

    g_A: float | None = None
    g_B: tuple[float, ...] | None = None
    omega_AB: tuple[float, ...] | None = None
    gamma_AB: tuple[float, ...] | None = None
    omega_BB: tuple[tuple[float, ...], ...] | None = None
    gamma_BB: tuple[tuple[float, ...], ...] | None = None

    def covers_geometry(self, n: int) -> bool:
        """True when no coupling needs emitter positions."""
        needs_pairs = n > 1 and (self.omega_BB is None or self.gamma_BB is None)
        return (
            self.g_A is not None
            and self.g_B is not None
            and self.omega_AB is not None
            and self.gamma_AB is not None
            and not needs_pairs
        )


class Diagnostic(BaseModel):
    model_config = ConfigDict(frozen=True)

    severity: Severity
    field: str
    message: str

    def __str__(self):
        return f"[{self.severity}] {self.field}: {self.message}"


class SystemSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    emitter_a: EmitterA
    ensemble_b: EnsembleB
    cavity: Cavity
    couplings: CouplingOverrides | None = None
    reference_rate: float = Field(
        description="Rate all frequencies are expressed in", default=1.0
    )

    @property
    def frame(self) -> float:
        return self.emitter_a.omega_A

    @property
    def delta_c(self) -> float:
        return self.cavity.omega_c - self.emitter_a.omega_A

    @property
    def delta_B(self) -> float:
        return self.ensemble_b.omega_B - self.emitter_a.omega_A

    @property
    def n_emitters(self) -> int:
        return self.ensemble_b.n_emitters

    def normalized(self) -> "SystemSpec":
        """Express every frequency and rate in units of `reference_rate`."""
        s = self.reference_rate
        if s == 1.0:
            return self

        def scaled(values):
            return None if values is None else tuple(v / s for v in values)

        overrides = self.couplings
        if overrides is not None:
            overrides = CouplingOverrides(
                g_A=None if overrides.g_A is None else overrides.g_A / s,
                g_B=scaled(overrides.g_B),
                omega_AB=scaled(overrides.omega_AB),
                gamma_AB=scaled(overrides.gamma_AB),
                omega_BB=(
                    None
                    if overrides.omega_BB is None
                    else tuple(scaled(row) for row in overrides.omega_BB)
                ),
                gamma_BB=(
                    None
                    if overrides.gamma_BB is None
                    else tuple(scaled(row) for row in overrides.gamma_BB)
                ),
            )
        return SystemSpec(
            emitter_a=self.emitter_a.model_copy(
                update={
                    "omega_A": self.emitter_a.omega_A / s,
                    "gamma_A": self.emitter_a.gamma_A / s,
                }
            ),
            ensemble_b=self.ensemble_b.model_copy(
                update={
                    "omega_B": self.ensemble_b.omega_B / s,
                    "gamma_B": self.ensemble_b.gamma_B / s,
                }
            ),
            cavity=self.cavity.model_copy(
                update={
                    "omega_c": self.cavity.omega_c / s,
                    "kappa": self.cavity.kappa / s,
                    "g0_A": self.cavity.g0_A / s,
                    "g0_B": self.cavity.g0_B / s,
                }
            ),
            couplings=overrides,
            reference_rate=1.0,
        )

    def cavity_profile(self, position) -> float:
        """cos(k * (axis . r)), the standing-wave factor at `position`."""
        axis = np.asarray(self.cavity.wavevector_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        return math.cos(self.cavity.k * float(axis @ np.asarray(position, dtype=float)))

    def single_emitter_geometry(self) -> tuple[PairGeometry, float]:
        """(r_B - r_A geometry, cavity profile at B) for a single B emitter."""
        if self.n_emitters != 1 or len(self.ensemble_b.positions) != 1:
            raise ValueError("single_emitter_geometry needs exactly one positioned B emitter")
        r_b = np.asarray(self.ensemble_b.positions[0], dtype=float)
        r_a = np.asarray(self.emitter_a.position, dtype=float)
        return (
            PairGeometry.from_separation(r_b - r_a, self.cavity.k),
            self.cavity_profile(r_b),
        )


@dataclass(frozen=True)
class CouplingSet:
    """M, G, V of the B ensemble as seen from the subsystem (cavity + A).

    M[j, l] = (Delta_B - i gamma_B) on the diagonal and Omega_jl - i gamma_jl
    off it; V = Omega_AB - i Gamma.
    """

    M: np.ndarray
    G: np.ndarray
    V: np.ndarray
    Gamma: np.ndarray
    Omega_AB: np.ndarray
    g_A: float

    @property
    def n(self) -> int:
        return int(self.G.shape[0])

    @property
    def is_decoupled(self) -> bool:
        return not (np.any(self.G != 0) or np.any(self.V != 0))

    @classmethod
    def from_rates(
        cls,
        delta_B: float,
        gamma_B: float,
        g_B,
        omega_AB,
        gamma_AB,
        g_A: float,
        omega_BB=None,
        gamma_BB=None,
    ) -> "CouplingSet":
        g_B = np.atleast_1d(np.asarray(g_B, dtype=float))
        omega_AB = np.atleast_1d(np.asarray(omega_AB, dtype=float))
        gamma_AB = np.atleast_1d(np.asarray(gamma_AB, dtype=float))
        n = g_B.shape[0]
        if omega_AB.shape[0] != n or gamma_AB.shape[0] != n:
            raise ValueError(
                f"g_B, omega_AB and gamma_AB must have equal lengths (got {n}, "
                f"{omega_AB.shape[0]}, {gamma_AB.shape[0]})"
            )

        M = np.zeros((n, n), dtype=complex)
        if n > 1:
            if omega_BB is None or gamma_BB is None:
                raise ValueError("omega_BB and gamma_BB are required for more than one B emitter")
            omega_BB = np.asarray(omega_BB, dtype=float)
            gamma_BB = np.asarray(gamma_BB, dtype=float)
            for j, l in combinations(range(n), 2):
                M[j, l] = M[l, j] = complex(omega_BB[j, l], -gamma_BB[j, l])
        M[np.diag_indices(n)] = complex(delta_B, -gamma_B)

        return cls(
            M=M,
            G=g_B.astype(complex),
            V=omega_AB - 1j * gamma_AB,
            Gamma=gamma_AB.copy(),
            Omega_AB=omega_AB.copy(),
            g_A=float(g_A),
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "M": array_to_list(self.M),
            "G": array_to_list(self.G),
            "V": array_to_list(self.V),
            "g_A": self.g_A,
        }


def build_couplings(spec: SystemSpec) -> CouplingSet:
    a = spec.emitter_a
    b = spec.ensemble_b
    cav = spec.cavity
    overrides = spec.couplings or CouplingOverrides()
    n = b.n_emitters

    r_a = np.asarray(a.position, dtype=float)
    r_b = [np.asarray(p, dtype=float) for p in b.positions]
    if len(r_b) != n and not overrides.covers_geometry(n):
        raise ValueError(f"ensemble_b lists {len(r_b)} positions for {n} emitters")

    if overrides.g_B is not None:
        g_B = np.asarray(overrides.g_B, dtype=float)
    else:
        g_B = np.array([cav.g0_B * spec.cavity_profile(r) for r in r_b])
    g_A = overrides.g_A if overrides.g_A is not None else cav.g0_A * spec.cavity_profile(r_a)

    if overrides.omega_AB is not None and overrides.gamma_AB is not None:
        omega_AB = np.asarray(overrides.omega_AB, dtype=float)
        gamma_AB = np.asarray(overrides.gamma_AB, dtype=float)
    else:
        omega_AB = np.zeros(n)
        gamma_AB = np.zeros(n)
        for j, r in enumerate(r_b):
            coupling = dipole_coupling(
                PairGeometry.from_separation(r - r_a, cav.k), a.gamma_A, b.gamma_B
            )
            omega_AB[j] = coupling.omega
            gamma_AB[j] = coupling.gamma
        if overrides.omega_AB is not None:
            omega_AB = np.asarray(overrides.omega_AB, dtype=float)
        if overrides.gamma_AB is not None:
            gamma_AB = np.asarray(overrides.gamma_AB, dtype=float)

    omega_BB = np.zeros((n, n))
    gamma_BB = np.zeros((n, n))
    if n > 1:
        if overrides.omega_BB is not None and overrides.gamma_BB is not None:
            omega_BB = np.asarray(overrides.omega_BB, dtype=float)
            gamma_BB = np.asarray(overrides.gamma_BB, dtype=float)
        else:
            # one evaluation per unordered pair keeps M exactly symmetric
            for j, l in combinations(range(n), 2):
                coupling = dipole_coupling(
                    PairGeometry.from_separation(r_b[l] - r_b[j], cav.k),
                    b.gamma_B,
                    b.gamma_B,
                )
                omega_BB[j, l] = omega_BB[l, j] = coupling.omega
                gamma_BB[j, l] = gamma_BB[l, j] = coupling.gamma

    couplings = CouplingSet.from_rates(
        delta_B=spec.delta_B,
        gamma_B=b.gamma_B,
        g_B=g_B,
        omega_AB=omega_AB,
        gamma_AB=gamma_AB,
        g_A=g_A,
        omega_BB=omega_BB,
        gamma_BB=gamma_BB,
    )
    logger.debug(
        "Built couplings for N={}: g_A={}, |G|max={}, |V|max={}",
        n,
        couplings.g_A,
        float(np.max(np.abs(couplings.G))) if n else 0.0,
        float(np.max(np.abs(couplings.V))) if n else 0.0,
    )
    return couplings


def rate_matrix(spec: SystemSpec, couplings: CouplingSet) -> np.ndarray:
    """Real symmetric rate matrix over the channels (a, sigma_A, sigma_1 ... sigma_N)."""
    n = couplings.n
    R = np.zeros((n + 2, n + 2))
    R[0, 0] = spec.cavity.kappa
    R[1, 1] = spec.emitter_a.gamma_A
    R[1, 2:] = couplings.Gamma
    R[2:, 1] = couplings.Gamma
    R[2:, 2:] = -couplings.M.imag
    return R


def validate_spec(spec: SystemSpec) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []

    def error(field: str, message: str):
        diagnostics.append(Diagnostic(severity=Severity.ERROR, field=field, message=message))

    def warning(field: str, message: str):
        diagnostics.append(
            Diagnostic(severity=Severity.WARNING, field=field, message=message)
        )

    a, b, cav = spec.emitter_a, spec.ensemble_b, spec.cavity
    overrides = spec.couplings or CouplingOverrides()
    n = b.n_emitters

    if spec.reference_rate <= 0:
        error("reference_rate", f"reference rate must be positive, got {spec.reference_rate}")
    if a.gamma_A < 0:
        error("emitter_a.gamma_A", f"negative decay rate {a.gamma_A}")
    if b.gamma_B < 0:
        error("ensemble_b.gamma_B", f"negative decay rate {b.gamma_B}")
    if cav.kappa < 0:
        error("cavity.kappa", f"negative decay rate {cav.kappa}")
    if cav.g0_A <= 0:
        error("cavity.g0_A", f"peak coupling must be positive, got {cav.g0_A}")
    if cav.g0_B <= 0:
        error("cavity.g0_B", f"peak coupling must be positive, got {cav.g0_B}")
    if cav.k <= 0:
        error("cavity.k", f"wave number must be positive, got {cav.k}")
    if np.linalg.norm(cav.wavevector_axis) == 0:
        error("cavity.wavevector_axis", "wave vector axis must be nonzero")
    if n < 1:
        error("ensemble_b.n_emitters", f"ensemble B needs at least one emitter, got {n}")

    if len(b.positions) != n and not overrides.covers_geometry(n):
        error(
            "ensemble_b.positions",
            f"{len(b.positions)} positions given for {n} emitters",
        )
    else:
        points = [("emitter_a.position", np.asarray(a.position, dtype=float))] + [
            (f"ensemble_b.positions[{j}]", np.asarray(p, dtype=float))
            for j, p in enumerate(b.positions)
        ]
        for (name_1, p_1), (name_2, p_2) in combinations(points, 2):
            if np.array_equal(p_1, p_2):
                error(name_2, f"coincides with {name_1}; zero separation is singular")

    for name in ("g_B", "omega_AB", "gamma_AB"):
        values = getattr(overrides, name)
        if values is not None and len(values) != n:
            error(f"couplings.{name}", f"expected {n} entries, got {len(values)}")
    for name in ("omega_BB", "gamma_BB"):
        matrix = getattr(overrides, name)
        if matrix is None:
            continue
        arr = np.asarray(matrix, dtype=float)
        if arr.shape != (n, n):
            error(f"couplings.{name}", f"expected a {n}x{n} matrix, got shape {arr.shape}")
        elif not np.allclose(arr, arr.T, rtol=0.0, atol=SYMMETRY_TOL):
            error(f"couplings.{name}", "matrix must be symmetric")

    if overrides.gamma_AB is not None and a.gamma_A >= 0 and b.gamma_B >= 0:
        bound = math.sqrt(a.gamma_A * b.gamma_B)
        for j, value in enumerate(overrides.gamma_AB):
            if abs(value) > bound * (1 + 1e-9):
                warning(
                    f"couplings.gamma_AB[{j}]",
                    f"|gamma_AB|={abs(value)} exceeds sqrt(gamma_A gamma_B)={bound}; "
                    "the collective rate matrix is indefinite",
                )

    if a.gamma_A >= 0 and b.gamma_B > 0 and cav.g0_A > 0 and cav.g0_B > 0:
        expected = math.sqrt(a.gamma_A / b.gamma_B)
        ratio = cav.g0_A / cav.g0_B
        if expected == 0 or abs(ratio - expected) > G0_RATIO_TOL * expected:
            warning(
                "cavity.g0_A",
                f"g0_A/g0_B={ratio:.6g} differs from sqrt(gamma_A/gamma_B)={expected:.6g}",
            )

    for d in diagnostics:
        if d.severity == Severity.ERROR:
            logger.error("Invalid system spec: {}", d)
        else:
            logger.warning("System spec: {}", d)
    return diagnostics
