"""
Linear (low-excitation) dynamics of the cavity + A + B system, its classical
elimination, the weakly driven steady state, transmission spectra and the
polariton analysis of the effective 2x2 problem.

State vector y = (alpha, beta_A, beta_1 ... beta_N) obeys dy/dt = -i (K y + s)
with the complex symmetric generator

    K = [[Delta_c - i kappa, g_A,          G^T],
         [g_A,               -i gamma_A,   V^T],
         [G,                 V,            M  ]]

and s = (eta, 0, ...) for a laser drive in the laser frame.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from app.physics.common import (
    EXCEPTIONAL_POINT_TOL,
    LOW_EXCITATION_LIMIT,
    ResonanceSingularError,
    StepSizeError,
    UnsupportedConfigurationError,
    array_to_list,
    complex_to_dict,
)
from app.physics.elimination import (
    EffectiveParams,
    coupling_quadratics,
    effective_from_quadratics,
)
from app.physics.model import CouplingSet, SystemSpec
from app.physics.states import SpectrumMode

MAX_HALVINGS = 20
STEP_TOLERANCE = 1e-6
RESONANCE_TOL = 1e-12


@dataclass(frozen=True)
class ClassicalState:
    alpha: complex
    beta_A: complex
    beta: np.ndarray

    @classmethod
    def from_vector(cls, y) -> "ClassicalState":
        y = np.asarray(y, dtype=complex)
        return cls(alpha=complex(y[0]), beta_A=complex(y[1]), beta=y[2:].copy())

    @classmethod
    def ground(cls, n: int) -> "ClassicalState":
        return cls(alpha=0j, beta_A=0j, beta=np.zeros(n, dtype=complex))

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [np.array([self.alpha, self.beta_A], dtype=complex), np.asarray(self.beta, dtype=complex)]
        )

    def low_excitation_ok(self, limit: float = LOW_EXCITATION_LIMIT) -> bool:
        return self.beta.size == 0 or float(np.max(np.abs(self.beta))) < limit

    def to_dict(self) -> dict:
        return {
            "alpha": complex_to_dict(self.alpha),
            "beta_A": complex_to_dict(self.beta_A),
            "beta": array_to_list(self.beta),
        }


class DriveSpec(BaseModel):
    """Weak coherent probe eta (a + a^dagger) at frequency omega_L."""

    model_config = ConfigDict(frozen=True)

    eta: float = Field(description="Drive strength", ge=0.0)
    omega_L: float = Field(description="Laser frequency")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)

    @property
    def alpha(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def beta_A(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def beta(self) -> np.ndarray:
        return self.states[:, 2:]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def final(self) -> ClassicalState:
        return ClassicalState.from_vector(self.states[-1])


def full_generator(
    spec: SystemSpec, couplings: CouplingSet, drive: DriveSpec | None = None
) -> tuple[np.ndarray, np.ndarray]:
    n = couplings.n
    K = np.zeros((n + 2, n + 2), dtype=complex)
    K[0, 0] = complex(spec.delta_c, -spec.cavity.kappa)
    K[1, 1] = complex(0.0, -spec.emitter_a.gamma_A)
    K[0, 1] = K[1, 0] = complex(couplings.g_A, 0.0)
    K[0, 2:] = K[2:, 0] = couplings.G
    K[1, 2:] = K[2:, 1] = couplings.V
    K[2:, 2:] = couplings.M
    source = np.zeros(n + 2, dtype=complex)
    if drive is not None:
        # shift from the omega_A frame to the laser frame
        K += (spec.frame - drive.omega_L) * np.eye(n + 2)
        source[0] = drive.eta
    return K, source


def effective_generator(
    p: EffectiveParams, drive: DriveSpec | None = None
) -> tuple[np.ndarray, np.ndarray]:
    if drive is None:
        delta_c, delta_A = p.delta_c_eff, p.delta_A_eff
    else:
        delta_c, delta_A = p.omega_c_eff - drive.omega_L, p.omega_A_eff - drive.omega_L
    coupling = p.complex_coupling
    K = np.array(
        [
            [complex(delta_c, -p.kappa_eff), coupling],
            [coupling, complex(delta_A, -p.gamma_A_eff)],
        ]
    )
    source = np.array([drive.eta if drive is not None else 0.0, 0.0], dtype=complex)
    return K, source


def _rk4_step(K: np.ndarray, source: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    def rhs(v):
        return -1j * (K @ v + source)

    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _advance(
    K: np.ndarray, source: np.ndarray, y: np.ndarray, dt: float, h: float, tol: float
) -> tuple[np.ndarray, float]:
    """Advance y by dt with substeps of at most h, halving on large step error.

    Returns the new state and the (possibly reduced) substep for the next call.
    """
    t = 0.0
    halvings = 0
    while t < dt * (1 - 1e-12):
        step = min(h, dt - t)
        full = _rk4_step(K, source, y, step)
        half = _rk4_step(K, source, _rk4_step(K, source, y, step / 2), step / 2)
        scale = max(np.linalg.norm(half), np.finfo(float).tiny)
        error = np.linalg.norm(full - half) / scale
        if error > tol:
            halvings += 1
            if halvings > MAX_HALVINGS:
                raise StepSizeError(
                    f"Step error {error:.3e} above {tol:.1e} after {MAX_HALVINGS} halvings"
                )
            h = step / 2
            logger.debug("Step error {:.3e}, halving substep to {:.3e}", error, h)
            continue
        y = half
        t += step
    return y, h


def integrate_linear(
    K: np.ndarray,
    source: np.ndarray,
    y0,
    t_end: float,
    dt: float,
    tol: float = STEP_TOLERANCE,
) -> Trajectory:
    """RK4 integration of dy/dt = -i (K y + s), sampled every dt."""
    if dt <= 0 or t_end < 0:
        raise ValueError(f"Need dt > 0 and t_end >= 0 (dt={dt}, t_end={t_end})")
    y = np.asarray(y0, dtype=complex).copy()
    n_steps = int(round(t_end / dt))

    radius = float(np.max(np.abs(np.linalg.eigvals(K)))) if K.size else 0.0
    h = dt
    if radius > 0 and dt > 0.1 / radius:
        n_sub = math.ceil(dt * radius / 0.1)
        h = dt / n_sub
        logger.debug(
            "dt={} exceeds 0.1/spectral radius ({:.3e}); using {} substeps",
            dt,
            radius,
            n_sub,
        )

    states = np.empty((n_steps + 1, y.shape[0]), dtype=complex)
    states[0] = y
    for step in range(1, n_steps + 1):
        y, h = _advance(K, source, y, dt, h, tol)
        states[step] = y
    return Trajectory(times=dt * np.arange(n_steps + 1), states=states)


def _warn_low_excitation(trajectory: Trajectory):
    if trajectory.beta.size == 0:
        return
    peak = float(np.max(np.abs(trajectory.beta)))
    if peak >= LOW_EXCITATION_LIMIT:
        logger.warning(
            "B amplitudes reach {:.3g}; the linear low-excitation picture is questionable",
            peak,
        )


def integrate_full_classical(
    spec: SystemSpec,
    couplings: CouplingSet,
    initial: ClassicalState,
    t_end: float,
    dt: float,
    drive: DriveSpec | None = None,
) -> Trajectory:
    K, source = full_generator(spec, couplings, drive)
    trajectory = integrate_linear(K, source, initial.to_vector(), t_end, dt)
    _warn_low_excitation(trajectory)
    return trajectory


def integrate_effective_classical(
    p: EffectiveParams,
    initial: tuple[complex, complex] | ClassicalState,
    t_end: float,
    dt: float,
    drive: DriveSpec | None = None,
) -> Trajectory:
    if isinstance(initial, ClassicalState):
        initial = (initial.alpha, initial.beta_A)
    K, source = effective_generator(p, drive)
    return integrate_linear(K, source, np.asarray(initial, dtype=complex), t_end, dt)


def eliminate_classical(spec: SystemSpec, couplings: CouplingSet) -> EffectiveParams:
    """Effective parameters from the Schur complement of the B block of K.

    Substituting beta = -M^-1 (G alpha + V beta_A) into the (alpha, beta_A)
    rows gives K_eff = K_SS - [G, V]^T M^-1 [G, V].
    """
    K, _ = full_generator(spec, couplings)
    Q = coupling_quadratics(K[2:, 2:], K[2:, 0], K[2:, 1])
    K_eff = K[:2, :2] - Q
    return EffectiveParams(
        delta_c_eff=K_eff[0, 0].real,
        delta_A_eff=K_eff[1, 1].real,
        g_A_eff=K_eff[0, 1].real,
        kappa_eff=-K_eff[0, 0].imag,
        gamma_A_eff=-K_eff[1, 1].imag,
        mu=-K_eff[0, 1].imag,
        omega_frame=spec.frame,
    )


def laser_frame_params(
    spec: SystemSpec, couplings: CouplingSet, omega_L: float
) -> EffectiveParams:
    """Effective parameters re-evaluated with M~ = M + (omega_A - omega_L) 1."""
    shift = spec.frame - omega_L
    M_laser = couplings.M + shift * np.eye(couplings.n)
    Q = coupling_quadratics(M_laser, couplings.G, couplings.V)
    return effective_from_quadratics(
        Q,
        delta_c=spec.cavity.omega_c - omega_L,
        delta_A=shift,
        g_A=couplings.g_A,
        kappa=spec.cavity.kappa,
        gamma_A=spec.emitter_a.gamma_A,
        omega_frame=omega_L,
    )


def driven_steady_state(p: EffectiveParams, drive: DriveSpec) -> ClassicalState:
    K, source = effective_generator(p, drive)
    det = K[0, 0] * K[1, 1] - K[0, 1] ** 2
    scale = max(1.0, float(np.max(np.abs(K)))) ** 2
    if abs(det) <= RESONANCE_TOL * scale:
        raise ResonanceSingularError(
            f"Driven 2x2 system is singular at omega_L={drive.omega_L} (det={det})"
        )
    y = np.linalg.solve(K, -source)
    return ClassicalState(alpha=complex(y[0]), beta_A=complex(y[1]), beta=np.zeros(0, dtype=complex))


def full_driven_steady_state(
    spec: SystemSpec, couplings: CouplingSet, drive: DriveSpec
) -> ClassicalState:
    K, source = full_generator(spec, couplings, drive)
    try:
        y = np.linalg.solve(K, -source)
    except np.linalg.LinAlgError as e:
        raise ResonanceSingularError(
            f"Driven full system is singular at omega_L={drive.omega_L}"
        ) from e
    return ClassicalState.from_vector(y)


@dataclass(frozen=True)
class PolaritonAnalysis:
    xi_plus: complex
    xi_minus: complex
    Gamma_plus: float
    Gamma_minus: float
    omega_plus: float
    omega_minus: float
    Z_plus: complex
    Z_minus: complex
    gamma_plus_onset: float
    exceptional_point: bool
    monotonic_decreasing: bool
    omega0: float

    def to_dict(self) -> dict:
        return {
            "xi_plus": complex_to_dict(self.xi_plus),
            "xi_minus": complex_to_dict(self.xi_minus),
            "Gamma_plus": self.Gamma_plus,
            "Gamma_minus": self.Gamma_minus,
            "omega_plus": self.omega_plus,
            "omega_minus": self.omega_minus,
            "Z_plus": complex_to_dict(self.Z_plus),
            "Z_minus": complex_to_dict(self.Z_minus),
            "gamma_plus_onset": self.gamma_plus_onset,
            "exceptional_point": self.exceptional_point,
            "monotonic_decreasing": self.monotonic_decreasing,
            "omega0": self.omega0,
        }


def _polariton_eigenvalues(kappa: float, gamma: float, g: float, mu: float):
    mean = 0.5 * (kappa + gamma)
    # (kappa - gamma)^2 / 4 - (g - i mu)^2; "+ 0.0" keeps a -0.0 off the branch cut
    disc = complex(0.25 * (kappa - gamma) ** 2 - g**2 + mu**2, 2.0 * g * mu + 0.0)
    root = cmath.sqrt(disc)
    return -mean - root, -mean + root


def _eigenvector(T: np.ndarray, xi: complex) -> np.ndarray:
    first = np.array([T[0, 1], xi - T[0, 0]])
    second = np.array([xi - T[1, 1], T[0, 1]])
    return first if np.linalg.norm(first) >= np.linalg.norm(second) else second


def polariton_analysis(p: EffectiveParams) -> PolaritonAnalysis:
    kappa, gamma, g, mu = p.kappa_eff, p.gamma_A_eff, p.g_A_eff, p.mu
    if not math.isclose(p.omega_c_eff, p.omega_A_eff, rel_tol=RESONANCE_TOL, abs_tol=RESONANCE_TOL):
        logger.warning(
            "Polariton analysis assumes omega_c_eff = omega_A_eff (got {} and {}); using omega_c_eff",
            p.omega_c_eff,
            p.omega_A_eff,
        )
    omega0 = p.omega_c_eff

    xi_plus, xi_minus = _polariton_eigenvalues(kappa, gamma, g, mu)
    exceptional = abs(xi_plus - xi_minus) < EXCEPTIONAL_POINT_TOL

    if exceptional:
        Z_plus = Z_minus = complex(math.nan, math.nan)
    else:
        T = np.array([[-kappa, complex(-mu, -g)], [complex(-mu, -g), -gamma]])
        u_plus = _eigenvector(T, xi_plus)
        u_minus = _eigenvector(T, xi_minus)
        cross = u_plus[0] * u_minus[1] - u_minus[0] * u_plus[1]
        Z_plus = complex(u_plus[0] * u_minus[1] / cross)
        Z_minus = complex(-u_minus[0] * u_plus[1] / cross)

    onset = 0.5 * (kappa + gamma) + math.sqrt(0.25 * (kappa - gamma) ** 2 + mu**2)

    # local stencil in |g|; Gamma_+ is even in g
    step = 1e-4 * max(1.0, abs(g))
    samples = [max(abs(g) - step, 0.0), abs(g), abs(g) + step]
    widths = [-_polariton_eigenvalues(kappa, gamma, s, mu)[0].real for s in samples]
    monotonic = widths[1] <= widths[0] + 1e-9 and widths[2] <= widths[1] + 1e-9

    return PolaritonAnalysis(
        xi_plus=xi_plus,
        xi_minus=xi_minus,
        Gamma_plus=-xi_plus.real,
        Gamma_minus=-xi_minus.real,
        omega_plus=omega0 - xi_plus.imag,
        omega_minus=omega0 - xi_minus.imag,
        Z_plus=Z_plus,
        Z_minus=Z_minus,
        gamma_plus_onset=onset,
        exceptional_point=exceptional,
        monotonic_decreasing=monotonic,
        omega0=omega0,
    )


@dataclass(frozen=True)
class Spectrum:
    omega_L: np.ndarray
    T_c: np.ndarray
    mode: SpectrumMode

    def to_records(self) -> list[dict[str, float]]:
        return [
            {"omega_L": float(w), "T_c": float(t)} for w, t in zip(self.omega_L, self.T_c)
        ]


def transmission_spectrum(
    p: EffectiveParams | None,
    kappa_bare: float,
    eta: float,
    omega_grid,
    mode: SpectrumMode = SpectrumMode.EXACT,
    spec: SystemSpec | None = None,
    couplings: CouplingSet | None = None,
) -> Spectrum:
    """T_c(omega_L) = kappa_bare^2 |alpha_st|^2 / eta^2 on a laser-frequency grid."""
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if eta <= 0:
        raise ValueError(f"Transmission needs eta > 0, got {eta}")
    T_c = np.empty_like(omega_grid)

    if mode == SpectrumMode.EXACT:
        for i, omega_L in enumerate(omega_grid):
            state = driven_steady_state(p, DriveSpec(eta=eta, omega_L=omega_L))
            T_c[i] = kappa_bare**2 * abs(state.alpha) ** 2 / eta**2

    elif mode == SpectrumMode.POLARITON:
        if not math.isclose(
            p.omega_c_eff, p.omega_A_eff, rel_tol=RESONANCE_TOL, abs_tol=RESONANCE_TOL
        ):
            raise UnsupportedConfigurationError(
                "Polariton spectrum needs omega_c_eff = omega_A_eff "
                f"(got {p.omega_c_eff} and {p.omega_A_eff})"
            )
        pa = polariton_analysis(p)
        if pa.exceptional_point:
            raise UnsupportedConfigurationError(
                "Polariton spectrum is undefined at the exceptional point"
            )
        amplitude = pa.Z_plus / (omega_grid - pa.omega_plus + 1j * pa.Gamma_plus) + pa.Z_minus / (
            omega_grid - pa.omega_minus + 1j * pa.Gamma_minus
        )
        T_c = kappa_bare**2 * np.abs(amplitude) ** 2

    elif mode == SpectrumMode.EXACT_LASER_FRAME:
        if spec is None or couplings is None:
            raise UnsupportedConfigurationError(
                "exact-laser-frame spectra need the full system, not only effective parameters"
            )
        for i, omega_L in enumerate(omega_grid):
            p_laser = laser_frame_params(spec, couplings, omega_L)
            state = driven_steady_state(p_laser, DriveSpec(eta=eta, omega_L=omega_L))
            T_c[i] = kappa_bare**2 * abs(state.alpha) ** 2 / eta**2

    else:
        raise UnsupportedConfigurationError(f"Unknown spectrum mode {mode}")

    return Spectrum(omega_L=omega_grid, T_c=T_c, mode=mode)


def spectrum_peaks(spectrum: Spectrum) -> list[tuple[float, float]]:
    """Interior local maxima as (omega_L, T_c) pairs."""
    T = spectrum.T_c
    return [
        (float(spectrum.omega_L[i]), float(T[i]))
        for i in range(1, len(T) - 1)
        if T[i] > T[i - 1] and T[i] >= T[i + 1]
    ]
