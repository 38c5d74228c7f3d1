"""
Adiabatic elimination of the B ensemble.

The six effective parameters of the cavity + A subsystem follow from the
quadratic forms Q = X^T M^-1 X with X = [G, V]:

    Delta_c_eff = Delta_c - Re Q_GG      kappa_eff   = kappa   + Im Q_GG
    Delta_A_eff =         - Re Q_VV      gamma_A_eff = gamma_A + Im Q_VV
    g_A_eff     = g_A     - Re Q_GV      mu          =           Im Q_GV
"""

import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, computed_field

from app.physics.common import (
    VALIDITY_MARGINAL_THRESHOLD,
    VALIDITY_PASS_THRESHOLD,
    DecompositionUnreliableError,
    DegenerateEnsembleError,
    UnphysicalParametersError,
    UnsupportedConfigurationError,
    array_to_list,
)
from app.physics.cslinalg import (
    SpectralDecomposition,
    SymmetricSolver,
    decompose_complex_symmetric,
)
from app.physics.model import CouplingSet, SystemSpec
from app.physics.states import Verdict


class EffectiveParams(BaseModel):
    """Effective parameters of the cavity + A subsystem after eliminating B.

    Detunings are relative to `omega_frame` (omega_A unless built in a laser
    frame); omega_c_eff and omega_A_eff are the absolute frequencies.
    """

    model_config = ConfigDict(frozen=True)

    delta_c_eff: float = Field(description="Effective cavity detuning")
    delta_A_eff: float = Field(description="Effective detuning of A")
    g_A_eff: float = Field(description="Effective cavity coupling of A")
    kappa_eff: float = Field(description="Effective cavity amplitude decay rate")
    gamma_A_eff: float = Field(description="Effective amplitude decay rate of A")
    mu: float = Field(description="Joint photon/A dissipation rate", default=0.0)
    omega_frame: float = Field(
        description="Frequency of the rotating frame", default=0.0
    )

    @computed_field
    @property
    def omega_c_eff(self) -> float:
        return self.omega_frame + self.delta_c_eff

    @computed_field
    @property
    def omega_A_eff(self) -> float:
        return self.omega_frame + self.delta_A_eff

    @property
    def complex_coupling(self) -> complex:
        """g_A_eff - i mu, the coupling entering the 2x2 dynamics."""
        return complex(self.g_A_eff, -self.mu)

    def mu_bound_satisfied(self, tol: float = 1e-9) -> bool:
        if self.kappa_eff < 0 or self.gamma_A_eff < 0:
            return False
        return abs(self.mu) <= math.sqrt(self.kappa_eff * self.gamma_A_eff) + tol


class DissipatorModes(BaseModel):
    """Diagonal form of the effective 2x2 rate matrix [[kappa_eff, mu], [mu, gamma_A_eff]].

    L_+ = cos(alpha/2) a + sin(alpha/2) sigma_A and
    L_- = -sin(alpha/2) a + cos(alpha/2) sigma_A decay at gamma_plus, gamma_minus.
    """

    model_config = ConfigDict(frozen=True)

    mixing_angle: float
    gamma_plus: float
    gamma_minus: float
    jump_coefficients: tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class CouplingModification:
    delta_g_A: float
    coherent_term: float
    dissipative_term: float
    relative: float  # delta_g_A / g0_A

    def to_dict(self) -> dict:
        return {
            "delta_g_A": self.delta_g_A,
            "coherent_term": self.coherent_term,
            "dissipative_term": self.dissipative_term,
            "relative": self.relative,
        }


@dataclass(frozen=True)
class LinewidthModification:
    delta_kappa: float
    delta_gamma_A: float
    broadening: float
    narrowing: float

    def to_dict(self) -> dict:
        return {
            "delta_kappa": self.delta_kappa,
            "delta_gamma_A": self.delta_gamma_A,
            "broadening": self.broadening,
            "narrowing": self.narrowing,
        }


@dataclass(frozen=True)
class SingleEmitterLimits:
    """Limit forms of the coupling and linewidth changes for one B emitter.

    Relative quantities assume g0_A / g0_B = sqrt(gamma_A / gamma_B).
    """

    profile: float
    g_dimless: float
    f_dimless: float
    coherent_part: float
    dissipative_part: float
    dissipative_limit: float
    large_detuning_limit: float
    narrowing_residual: float
    dissipative_linewidth_ratio: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ValidityReport:
    eigenvalues: np.ndarray
    max_coupling_ratio: float
    scale_separation_ratios: dict[str, float]
    verdict: Verdict
    n_bar: float = 1.0
    retardation_ratio: float | None = None
    dipole_ratio: float | None = None
    composite_ratio: float | None = None
    degraded_confidence: bool = False
    threshold: float = VALIDITY_PASS_THRESHOLD
    marginal_threshold: float = VALIDITY_MARGINAL_THRESHOLD
    beta_ad: np.ndarray | None = field(default=None, repr=False)
    beta_ret: np.ndarray | None = field(default=None, repr=False)

    def ratios(self) -> dict[str, float]:
        values = {"max_coupling_ratio": self.max_coupling_ratio}
        values.update(
            {f"scale_separation.{k}": v for k, v in self.scale_separation_ratios.items()}
        )
        for name in ("retardation_ratio", "dipole_ratio", "composite_ratio"):
            value = getattr(self, name)
            if value is not None:
                values[name] = value
        return values

    @property
    def max_ratio(self) -> float:
        return max(self.ratios().values())

    def to_dict(self) -> dict:
        return {
            "verdict": str(self.verdict),
            "eigenvalues": array_to_list(self.eigenvalues),
            "max_coupling_ratio": self.max_coupling_ratio,
            "scale_separation_ratios": dict(self.scale_separation_ratios),
            "retardation_ratio": self.retardation_ratio,
            "dipole_ratio": self.dipole_ratio,
            "composite_ratio": self.composite_ratio,
            "degraded_confidence": self.degraded_confidence,
            "n_bar": self.n_bar,
            "threshold": self.threshold,
            "marginal_threshold": self.marginal_threshold,
            "max_ratio": self.max_ratio,
        }


def coupling_quadratics(M, G, V) -> np.ndarray:
    """Q = [G, V]^T M^-1 [G, V] from one factorization of M."""
    X = np.column_stack([np.asarray(G, dtype=complex), np.asarray(V, dtype=complex)])
    if X.shape[0] == 0:
        return np.zeros((2, 2), dtype=complex)
    return SymmetricSolver(M).quadratic_block(X)


def effective_from_quadratics(
    Q: np.ndarray,
    delta_c: float,
    delta_A: float,
    g_A: float,
    kappa: float,
    gamma_A: float,
    omega_frame: float = 0.0,
) -> EffectiveParams:
    GG, VV, GV = Q[0, 0], Q[1, 1], Q[0, 1]
    return EffectiveParams(
        delta_c_eff=delta_c - GG.real,
        delta_A_eff=delta_A - VV.real,
        g_A_eff=g_A - GV.real,
        kappa_eff=kappa + GG.imag,
        gamma_A_eff=gamma_A + VV.imag,
        mu=GV.imag,
        omega_frame=omega_frame,
    )


def effective_params(couplings: CouplingSet, spec: SystemSpec) -> EffectiveParams:
    Q = coupling_quadratics(couplings.M, couplings.G, couplings.V)
    params = effective_from_quadratics(
        Q,
        delta_c=spec.delta_c,
        delta_A=0.0,
        g_A=couplings.g_A,
        kappa=spec.cavity.kappa,
        gamma_A=spec.emitter_a.gamma_A,
        omega_frame=spec.frame,
    )
    logger.debug("Effective parameters: {}", params.model_dump())
    if not params.mu_bound_satisfied():
        logger.warning(
            "|mu|={} exceeds sqrt(kappa_eff*gamma_A_eff); the collective rates are not positive semidefinite",
            abs(params.mu),
        )
    return params


def effective_params_single(
    delta_B: float,
    gamma_B: float,
    omega_AB: float,
    gamma_AB: float,
    g_A: float,
    g_B: float,
    gamma_A: float,
    kappa: float,
    delta_c: float,
    omega_frame: float = 0.0,
) -> EffectiveParams:
    """Closed-form effective parameters for a single B emitter."""
    den = delta_B**2 + gamma_B**2
    if den == 0.0:
        raise DegenerateEnsembleError(
            "Delta_B = gamma_B = 0: the B emitter is undamped and resonant with A"
        )
    dipole_sq = omega_AB**2 - gamma_AB**2
    return EffectiveParams(
        delta_c_eff=delta_c - g_B**2 * delta_B / den,
        delta_A_eff=-(dipole_sq * delta_B + 2 * omega_AB * gamma_AB * gamma_B) / den,
        g_A_eff=g_A - g_B * (omega_AB * delta_B + gamma_AB * gamma_B) / den,
        kappa_eff=kappa + g_B**2 * gamma_B / den,
        gamma_A_eff=gamma_A
        + (gamma_B * dipole_sq - 2 * delta_B * omega_AB * gamma_AB) / den,
        mu=g_B * (gamma_B * omega_AB - delta_B * gamma_AB) / den,
        omega_frame=omega_frame,
    )


def _single_emitter_rates(spec: SystemSpec, couplings: CouplingSet):
    if couplings.n != 1:
        raise UnsupportedConfigurationError(
            f"Single-emitter analysis needs N = 1, got N = {couplings.n}"
        )
    delta_B = float(couplings.M[0, 0].real)
    gamma_B = float(-couplings.M[0, 0].imag)
    den = delta_B**2 + gamma_B**2
    if den == 0.0:
        raise DegenerateEnsembleError(
            "Delta_B = gamma_B = 0: the B emitter is undamped and resonant with A"
        )
    return (
        delta_B,
        gamma_B,
        den,
        float(couplings.G[0].real),
        float(couplings.Omega_AB[0]),
        float(couplings.Gamma[0]),
    )


def coupling_modification(spec: SystemSpec, couplings: CouplingSet) -> CouplingModification:
    delta_B, gamma_B, den, g_B, omega_AB, gamma_AB = _single_emitter_rates(spec, couplings)
    coherent = -g_B * omega_AB * delta_B / den
    dissipative = -g_B * gamma_AB * gamma_B / den
    delta_g = coherent + dissipative
    return CouplingModification(
        delta_g_A=delta_g,
        coherent_term=coherent,
        dissipative_term=dissipative,
        relative=delta_g / spec.cavity.g0_A,
    )


def linewidth_modification(spec: SystemSpec, couplings: CouplingSet) -> LinewidthModification:
    delta_B, gamma_B, den, g_B, omega_AB, gamma_AB = _single_emitter_rates(spec, couplings)
    if gamma_B > 0.0:
        broadening = (gamma_B * omega_AB - delta_B * gamma_AB) ** 2 / (gamma_B * den)
        narrowing = gamma_AB**2 / gamma_B
    elif gamma_AB == 0.0:
        broadening = narrowing = 0.0
    else:
        raise UnphysicalParametersError(
            f"gamma_AB={gamma_AB} with gamma_B=0 gives an indefinite collective rate matrix"
        )
    return LinewidthModification(
        delta_kappa=g_B**2 * gamma_B / den,
        delta_gamma_A=broadening - narrowing,
        broadening=broadening,
        narrowing=narrowing,
    )


def single_emitter_limits(spec: SystemSpec, couplings: CouplingSet) -> SingleEmitterLimits:
    delta_B, gamma_B, den, g_B, omega_AB, gamma_AB = _single_emitter_rates(spec, couplings)
    scale = math.sqrt(spec.emitter_a.gamma_A * gamma_B)
    if scale == 0.0:
        raise UnsupportedConfigurationError(
            "Dimensionless dipole functions need gamma_A, gamma_B > 0"
        )
    g = omega_AB / scale
    f = gamma_AB / scale
    profile = g_B / spec.cavity.g0_B
    return SingleEmitterLimits(
        profile=profile,
        g_dimless=g,
        f_dimless=f,
        coherent_part=-profile * g * delta_B * gamma_B / den,
        dissipative_part=-profile * f * gamma_B**2 / den,
        dissipative_limit=-profile * f,
        large_detuning_limit=(
            -profile * g * gamma_B / delta_B if delta_B != 0.0 else math.nan
        ),
        narrowing_residual=gamma_B * g - delta_B * f,
        dissipative_linewidth_ratio=g**2 - f**2,
    )


def diagonalize_dissipator(p: EffectiveParams) -> DissipatorModes:
    kappa, gamma, mu = p.kappa_eff, p.gamma_A_eff, p.mu
    if kappa < 0 or gamma < 0:
        raise UnphysicalParametersError(
            f"Negative effective rates (kappa_eff={kappa}, gamma_A_eff={gamma})"
        )
    mean = 0.5 * (kappa + gamma)
    radius = math.sqrt(0.25 * (kappa - gamma) ** 2 + mu**2)
    gamma_plus = mean + radius
    gamma_minus = mean - radius
    if gamma_minus < -1e-12 * max(1.0, gamma_plus):
        raise UnphysicalParametersError(
            f"gamma_minus={gamma_minus} < 0: kappa_eff*gamma_A_eff < mu^2"
        )

    alpha = math.atan2(2.0 * mu, kappa - gamma) % (2.0 * math.pi)
    c, s = math.cos(alpha / 2.0), math.sin(alpha / 2.0)

    rates = np.array([[kappa, mu], [mu, gamma]])
    rotation = np.array([[c, -s], [s, c]])
    rotated = rotation.T @ rates @ rotation
    off_diagonal = abs(rotated[0, 1])
    if off_diagonal > 1e-10 * max(1.0, gamma_plus) or not math.isclose(
        rotated[0, 0], gamma_plus, rel_tol=1e-10, abs_tol=1e-12
    ):
        raise UnphysicalParametersError(
            f"Mixing angle {alpha} does not diagonalize the rate matrix (residual {off_diagonal:.3e})"
        )

    return DissipatorModes(
        mixing_angle=alpha,
        gamma_plus=gamma_plus,
        gamma_minus=max(gamma_minus, 0.0),
        jump_coefficients=((c, s), (-s, c)),
    )


def retardation_estimate(
    couplings: CouplingSet,
    params: EffectiveParams,
    state: tuple[complex, complex],
    decomposition: SpectralDecomposition | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Adiabatic B amplitudes and their leading retardation correction.

    beta_ad = -M^-1 (G alpha + V beta_A) and
    beta_ret = sum_j x_j x_j^T (G c_1 + V c_2) / lambda_j^2 with
    c_1 = (Delta_c_eff - i kappa_eff) alpha + (g_A_eff - i mu) beta_A and
    c_2 = (Delta_A_eff - i gamma_A_eff) beta_A + (g_A_eff - i mu) alpha.
    Without a decomposition, direct solves give beta_ret = -M^-2 (...).
    """
    alpha, beta_A = complex(state[0]), complex(state[1])
    coupling = params.complex_coupling
    c_1 = complex(params.delta_c_eff, -params.kappa_eff) * alpha + coupling * beta_A
    c_2 = complex(params.delta_A_eff, -params.gamma_A_eff) * beta_A + coupling * alpha
    source = couplings.G * alpha + couplings.V * beta_A
    retarded_source = couplings.G * c_1 + couplings.V * c_2

    if decomposition is not None:
        # B^-1 = i M^-1
        beta_ad = 1j * decomposition.apply_inverse_power(source, 1)
        beta_ret = decomposition.apply_inverse_power(retarded_source, 2)
    else:
        solver = SymmetricSolver(couplings.M)
        beta_ad = -solver.solve(source)
        beta_ret = -solver.solve(solver.solve(retarded_source))
    return beta_ad, beta_ret


def _verdict(values: list[float], threshold: float, marginal_threshold: float) -> Verdict:
    worst = max(values) if values else 0.0
    if worst < threshold:
        return Verdict.PASS
    if worst < marginal_threshold:
        return Verdict.MARGINAL
    return Verdict.FAIL


def validity_report(
    spec: SystemSpec,
    couplings: CouplingSet,
    n_bar: float = 1.0,
    subsystem_state: tuple[complex, complex] | None = None,
    threshold: float = VALIDITY_PASS_THRESHOLD,
    marginal_threshold: float = VALIDITY_MARGINAL_THRESHOLD,
) -> ValidityReport:
    n = couplings.n
    root_n = math.sqrt(n_bar)

    if n == 0:
        return ValidityReport(
            eigenvalues=np.zeros(0, dtype=complex),
            max_coupling_ratio=0.0,
            scale_separation_ratios={"cavity": 0.0, "emitter": 0.0, "coupling": 0.0},
            verdict=Verdict.PASS,
            n_bar=n_bar,
            threshold=threshold,
            marginal_threshold=marginal_threshold,
        )

    params = effective_params(couplings, spec)
    B = -1j * couplings.M
    degraded = False
    decomposition = None
    try:
        decomposition = decompose_complex_symmetric(B)
        eigenvalues = decomposition.eigenvalues
        moduli = np.abs(eigenvalues)
        per_mode = np.maximum(
            np.abs(decomposition.project(couplings.V)),
            np.abs(decomposition.project(couplings.G)) * root_n,
        )
        max_coupling_ratio = float(np.max(per_mode / moduli))
        lam_min = float(np.min(moduli))
    except DecompositionUnreliableError as e:
        logger.warning(
            "B decomposition unreliable (metric {:.3e}); validity ratios use direct-solve bounds",
            e.condition_metric,
        )
        degraded = True
        eigenvalues = np.linalg.eigvals(B)
        lam_min = float(np.linalg.svd(couplings.M, compute_uv=False)[-1])
        max_coupling_ratio = float(
            max(np.linalg.norm(couplings.V), np.linalg.norm(couplings.G) * root_n)
            / lam_min
        )

    if couplings.is_decoupled:
        # B never gets excited, so there is no adiabaticity condition to meet
        scale_separation = {"cavity": 0.0, "emitter": 0.0, "coupling": 0.0}
    else:
        scale_separation = {
            "cavity": abs(complex(params.delta_c_eff, -params.kappa_eff)) / lam_min,
            "emitter": abs(complex(params.delta_A_eff, -params.gamma_A_eff)) / lam_min,
            "coupling": root_n * abs(params.complex_coupling) / lam_min,
        }

    dipole_ratio = composite_ratio = None
    if n == 1:
        m = abs(couplings.M[0, 0])
        dipole_ratio = max(abs(couplings.Omega_AB[0]), abs(couplings.Gamma[0])) / m
        if couplings.is_decoupled:
            composite_ratio = 0.0
        else:
            composite_ratio = (
                max(
                    abs(couplings.V[0]),
                    abs(couplings.G[0]) * root_n,
                    abs(complex(params.delta_c_eff, -params.kappa_eff)),
                    abs(complex(params.delta_A_eff, -params.gamma_A_eff)),
                    root_n * abs(params.complex_coupling),
                )
                / m
            )

    retardation_ratio = None
    beta_ad = beta_ret = None
    if subsystem_state is not None:
        beta_ad, beta_ret = retardation_estimate(
            couplings, params, subsystem_state, decomposition
        )
        norm_ad = float(np.linalg.norm(beta_ad))
        retardation_ratio = (
            float(np.linalg.norm(beta_ret)) / norm_ad if norm_ad > 0 else 0.0
        )

    values = [max_coupling_ratio, *scale_separation.values()]
    values += [v for v in (dipole_ratio, composite_ratio, retardation_ratio) if v is not None]
    verdict = _verdict(values, threshold, marginal_threshold)

    report = ValidityReport(
        eigenvalues=eigenvalues,
        max_coupling_ratio=max_coupling_ratio,
        scale_separation_ratios=scale_separation,
        verdict=verdict,
        n_bar=n_bar,
        retardation_ratio=retardation_ratio,
        dipole_ratio=dipole_ratio,
        composite_ratio=composite_ratio,
        degraded_confidence=degraded,
        threshold=threshold,
        marginal_threshold=marginal_threshold,
        beta_ad=beta_ad,
        beta_ret=beta_ret,
    )
    if verdict != Verdict.PASS:
        logger.warning(
            "Adiabatic elimination validity verdict {} (largest ratio {:.4g})",
            verdict,
            report.max_ratio,
        )
    return report
