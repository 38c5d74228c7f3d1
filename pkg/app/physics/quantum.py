"""
Dense Lindblad master equations for the full (cavity + A + B) model and the
effective (cavity + A) model.

Ordering of the tensor factors is photon (x) A (x) B_1 (x) ... (x) B_N, and
every two-level factor uses index 0 for the ground state, so
sigma^- = [[0, 1], [0, 0]].

Dissipators are stored in diagonal jump form: a Hermitian rate matrix
R = sum_k w_k v_k v_k^dagger over channels c_y gives L_k = sum_y conj(v_ky) c_y
with

    d rho / dt |_k = w_k (2 L_k rho L_k^dagger - {L_k^dagger L_k, rho}),

i.e. w_k is an amplitude rate and populations decay at 2 w_k.
"""

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from app.physics.classical import DriveSpec
from app.physics.common import (
    DEFAULT_HILBERT_CAP,
    HERMITIAN_TOL,
    NEGATIVE_EIGENVALUE_TOL,
    PSD_TOL,
    TRACE_DRIFT_TOL,
    DimensionCapError,
    InvariantBreachError,
    UnphysicalParametersError,
)
from app.physics.elimination import (
    DissipatorModes,
    EffectiveParams,
    effective_params,
    validity_report,
)
from app.physics.model import CouplingSet, Diagnostic, SystemSpec, rate_matrix
from app.physics.states import InitialState, Severity, Verdict

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


class HilbertSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    photon_cutoff: int = Field(description="Largest photon number n_max", ge=1)
    n_spins_B: int = Field(description="Number of B two-level systems", ge=0)
    cap: int = Field(description="Largest allowed dimension", default=DEFAULT_HILBERT_CAP)

    @property
    def dims(self) -> list[int]:
        return [self.photon_cutoff + 1, 2] + [2] * self.n_spins_B

    @property
    def dimension(self) -> int:
        return (self.photon_cutoff + 1) * 2 ** (self.n_spins_B + 1)

    @property
    def subsystem_dimension(self) -> int:
        return (self.photon_cutoff + 1) * 2

    def check(self):
        if self.dimension > self.cap:
            raise DimensionCapError(
                f"Hilbert space dimension {self.dimension} exceeds the cap {self.cap} "
                f"(n_max={self.photon_cutoff}, N={self.n_spins_B})"
            )


def _kron_all(factors: list[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors)


def _embed(op: np.ndarray, site: int, dims: list[int]) -> np.ndarray:
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[site] = op
    return _kron_all(factors)


def annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def _site_operators(hilbert: HilbertSpec) -> dict[str, np.ndarray]:
    dims = hilbert.dims
    ops = {
        "a": _embed(annihilation(hilbert.photon_cutoff), 0, dims),
        "sigma_A": _embed(SIGMA_MINUS, 1, dims),
    }
    for j in range(hilbert.n_spins_B):
        ops[f"sigma_B{j}"] = _embed(SIGMA_MINUS, 2 + j, dims)
    return ops


@dataclass
class LindbladModel:
    hamiltonian: np.ndarray
    jump_operators: list[tuple[float, np.ndarray]]
    hilbert: HilbertSpec
    operators: dict[str, np.ndarray]
    rate_matrix: np.ndarray | None = None
    channels: list[np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        H = self.hamiltonian
        if np.linalg.norm(H - H.conj().T) > HERMITIAN_TOL * max(1.0, np.linalg.norm(H)):
            raise InvariantBreachError("Hamiltonian is not Hermitian")
        decay = sum(
            (w * (L.conj().T @ L) for w, L in self.jump_operators),
            np.zeros_like(H),
        )
        self._h_eff = H - 1j * decay
        self._h_eff_dag = self._h_eff.conj().T
        self._jumps = [(2.0 * w, L, L.conj().T) for w, L in self.jump_operators]

    @property
    def dimension(self) -> int:
        return int(self.hamiltonian.shape[0])

    @property
    def dissipator_terms(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        """(gamma_xy, c_x^dagger, c_y) triples of the collective rate matrix."""
        if self.rate_matrix is None or self.channels is None:
            return []
        terms = []
        for x, c_x in enumerate(self.channels):
            for y, c_y in enumerate(self.channels):
                if self.rate_matrix[x, y] != 0:
                    terms.append((self.rate_matrix[x, y], c_x.conj().T, c_y))
        return terms

    def generator(self, rho: np.ndarray) -> np.ndarray:
        """d rho / dt = -i (H_eff rho - rho H_eff^dagger) + sum_k 2 w_k L_k rho L_k^dagger."""
        out = -1j * (self._h_eff @ rho - rho @ self._h_eff_dag)
        for rate, L, L_dag in self._jumps:
            out += rate * (L @ rho @ L_dag)
        return out

    def minimum_rate(self) -> float:
        rates = [w for w, _ in self.jump_operators if w > 0]
        return min(rates) if rates else 0.0


def jumps_from_rate_matrix(
    R: np.ndarray, channels: list[np.ndarray]
) -> list[tuple[float, np.ndarray]]:
    R = np.asarray(R)
    if np.linalg.norm(R - R.conj().T) > HERMITIAN_TOL * max(1.0, np.linalg.norm(R)):
        raise UnphysicalParametersError("Rate matrix is not Hermitian")
    weights, vectors = np.linalg.eigh(R)
    scale = max(1.0, float(np.max(np.abs(weights)))) if weights.size else 1.0
    if weights.size and weights[0] < -PSD_TOL * scale:
        raise UnphysicalParametersError(
            f"Collective rate matrix is not positive semidefinite (eigenvalue {weights[0]:.3e})"
        )
    jumps = []
    for k, w in enumerate(weights):
        if w <= PSD_TOL * scale:
            continue
        L = sum(np.conj(vectors[y, k]) * c for y, c in enumerate(channels))
        jumps.append((float(w), L))
    return jumps


def build_full_model(
    spec: SystemSpec,
    couplings: CouplingSet,
    hilbert: HilbertSpec,
    drive: DriveSpec | None = None,
) -> LindbladModel:
    hilbert.check()
    n = couplings.n
    if hilbert.n_spins_B != n:
        raise ValueError(
            f"HilbertSpec has {hilbert.n_spins_B} B spins but the couplings describe {n}"
        )

    ops = _site_operators(hilbert)
    a, s_A = ops["a"], ops["sigma_A"]
    s_B = [ops[f"sigma_B{j}"] for j in range(n)]

    # every detuning is relative to the frame; the laser frame shifts them all
    shift = 0.0 if drive is None else spec.frame - drive.omega_L
    G = couplings.G.real
    Omega_AB = couplings.Omega_AB
    H_BB = couplings.M.real

    H = (spec.delta_c + shift) * (a.conj().T @ a) + shift * (s_A.conj().T @ s_A)
    H = H + couplings.g_A * (a.conj().T @ s_A + s_A.conj().T @ a)
    for j in range(n):
        H = H + G[j] * (a.conj().T @ s_B[j] + s_B[j].conj().T @ a)
        H = H + Omega_AB[j] * (s_B[j].conj().T @ s_A + s_A.conj().T @ s_B[j])
        for l in range(n):
            coeff = H_BB[j, l] + (shift if j == l else 0.0)
            if coeff != 0:
                H = H + coeff * (s_B[j].conj().T @ s_B[l])
    if drive is not None:
        H = H + drive.eta * (a + a.conj().T)

    R = rate_matrix(spec, couplings)
    channels = [a, s_A, *s_B]
    model = LindbladModel(
        hamiltonian=H,
        jump_operators=jumps_from_rate_matrix(R, channels),
        hilbert=hilbert,
        operators=ops,
        rate_matrix=R,
        channels=channels,
    )
    logger.debug(
        "Full model built: d={}, {} jump operators", model.dimension, len(model.jump_operators)
    )
    return model


def _effective_hamiltonian(
    p: EffectiveParams, ops: dict[str, np.ndarray], drive: DriveSpec | None
) -> np.ndarray:
    a, s_A = ops["a"], ops["sigma_A"]
    if drive is None:
        delta_c, delta_A = p.delta_c_eff, p.delta_A_eff
    else:
        delta_c, delta_A = p.omega_c_eff - drive.omega_L, p.omega_A_eff - drive.omega_L
    H = delta_c * (a.conj().T @ a) + delta_A * (s_A.conj().T @ s_A)
    H = H + p.g_A_eff * (a.conj().T @ s_A + s_A.conj().T @ a)
    if drive is not None:
        H = H + drive.eta * (a + a.conj().T)
    return H


def build_effective_model(
    p: EffectiveParams, n_max: int, drive: DriveSpec | None = None
) -> LindbladModel:
    hilbert = HilbertSpec(photon_cutoff=n_max, n_spins_B=0)
    hilbert.check()
    ops = _site_operators(hilbert)
    R = np.array([[p.kappa_eff, p.mu], [p.mu, p.gamma_A_eff]])
    channels = [ops["a"], ops["sigma_A"]]
    return LindbladModel(
        hamiltonian=_effective_hamiltonian(p, ops, drive),
        jump_operators=jumps_from_rate_matrix(R, channels),
        hilbert=hilbert,
        operators=ops,
        rate_matrix=R,
        channels=channels,
    )


def build_effective_model_from_modes(
    p: EffectiveParams,
    modes: DissipatorModes,
    n_max: int,
    drive: DriveSpec | None = None,
) -> LindbladModel:
    """Effective model with the dissipator written through L_+ and L_-."""
    hilbert = HilbertSpec(photon_cutoff=n_max, n_spins_B=0)
    hilbert.check()
    ops = _site_operators(hilbert)
    a, s_A = ops["a"], ops["sigma_A"]
    (c_p, s_p), (c_m, s_m) = modes.jump_coefficients
    jumps = [
        (modes.gamma_plus, c_p * a + s_p * s_A),
        (modes.gamma_minus, c_m * a + s_m * s_A),
    ]
    return LindbladModel(
        hamiltonian=_effective_hamiltonian(p, ops, drive),
        jump_operators=jumps,
        hilbert=hilbert,
        operators=ops,
    )


def initial_state(
    kind: InitialState, hilbert: HilbertSpec, alpha: complex = 0.0
) -> np.ndarray:
    """Pure initial state with every B emitter in its ground state."""
    n_photon = hilbert.photon_cutoff + 1
    photon = np.zeros(n_photon, dtype=complex)
    photon[0] = 1.0
    ground = np.array([1.0, 0.0], dtype=complex)
    excited = np.array([0.0, 1.0], dtype=complex)
    spin_A = ground

    if kind == InitialState.VACUUM:
        pass
    elif kind == InitialState.A_EXCITED:
        spin_A = excited
    elif kind == InitialState.SUPERPOSITION:
        spin_A = (ground + excited) / math.sqrt(2.0)
    elif kind == InitialState.COHERENT:
        numbers = np.arange(n_photon)
        log_norm = np.array([0.5 * math.lgamma(k + 1) for k in numbers])
        photon = np.exp(-0.5 * abs(alpha) ** 2 - log_norm) * complex(alpha) ** numbers
        truncated = np.linalg.norm(photon)
        if truncated < 1 - 1e-6:
            logger.warning(
                "Coherent state alpha={} truncated at n_max={} keeps norm {:.6f}; renormalizing",
                alpha,
                hilbert.photon_cutoff,
                truncated,
            )
        photon = photon / truncated
    else:
        raise ValueError(f"Unknown initial state {kind}")

    psi = _kron_all([photon, spin_A] + [ground] * hilbert.n_spins_B)
    return np.outer(psi, psi.conj())


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    """tr(rho op)."""
    return complex(np.sum(rho * op.T))


def check_density_matrix(rho: np.ndarray) -> list[Diagnostic]:
    diagnostics = []
    hermiticity = float(np.linalg.norm(rho - rho.conj().T))
    if hermiticity > 1e-10:
        diagnostics.append(
            Diagnostic(
                severity=Severity.ERROR,
                field="rho",
                message=f"not Hermitian (deviation {hermiticity:.3e})",
            )
        )
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > TRACE_DRIFT_TOL:
        diagnostics.append(
            Diagnostic(
                severity=Severity.ERROR, field="rho", message=f"trace {trace} differs from 1"
            )
        )
    smallest = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))
    if smallest < -NEGATIVE_EIGENVALUE_TOL:
        diagnostics.append(
            Diagnostic(
                severity=Severity.WARNING,
                field="rho",
                message=f"negative eigenvalue {smallest:.3e}",
            )
        )
    return diagnostics


@dataclass
class QuantumTrajectory:
    times: np.ndarray
    a: np.ndarray
    sigma_A: np.ndarray
    n_photon: np.ndarray
    n_A: np.ndarray
    trace: np.ndarray
    states: list[np.ndarray] | None = field(default=None, repr=False)

    def to_records(self) -> list[dict[str, float]]:
        return [
            {
                "t": float(t),
                "re_a": float(a.real),
                "im_a": float(a.imag),
                "re_sigma_A": float(s.real),
                "im_sigma_A": float(s.imag),
                "n_photon": float(n_ph),
                "n_A": float(n_a),
                "trace": float(tr),
            }
            for t, a, s, n_ph, n_a, tr in zip(
                self.times, self.a, self.sigma_A, self.n_photon, self.n_A, self.trace
            )
        ]


def _rk4_step(model: LindbladModel, rho: np.ndarray, dt: float) -> np.ndarray:
    k1 = model.generator(rho)
    k2 = model.generator(rho + 0.5 * dt * k1)
    k3 = model.generator(rho + 0.5 * dt * k2)
    k4 = model.generator(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_initial(rho0: np.ndarray, model: LindbladModel):
    if rho0.shape != (model.dimension, model.dimension):
        raise ValueError(
            f"Initial state has shape {rho0.shape}, model dimension is {model.dimension}"
        )
    errors = [d for d in check_density_matrix(rho0) if d.severity == Severity.ERROR]
    if errors:
        raise InvariantBreachError(
            "Initial density matrix is invalid: " + "; ".join(str(d) for d in errors)
        )


def evolve(
    model: LindbladModel,
    rho0: np.ndarray,
    t_end: float,
    dt: float,
    keep_states: bool = False,
    sample_every: int = 1,
    renormalize: bool = False,
) -> QuantumTrajectory:
    rho = np.array(rho0, dtype=complex)
    _check_initial(rho, model)
    if dt <= 0 or t_end < 0:
        raise ValueError(f"Need dt > 0 and t_end >= 0 (dt={dt}, t_end={t_end})")

    ops = model.operators
    a, s_A = ops["a"], ops["sigma_A"]
    n_photon_op = a.conj().T @ a
    n_A_op = s_A.conj().T @ s_A
    n_steps = int(round(t_end / dt))

    times, series, states = [], [], []
    warned = False

    def record(step: int, rho: np.ndarray):
        times.append(step * dt)
        series.append(
            (
                expectation(rho, a),
                expectation(rho, s_A),
                expectation(rho, n_photon_op).real,
                expectation(rho, n_A_op).real,
                complex(np.trace(rho)).real,
            )
        )
        if keep_states:
            states.append(rho.copy())

    record(0, rho)
    for step in range(1, n_steps + 1):
        rho = _rk4_step(model, rho, dt)
        trace = complex(np.trace(rho))
        drift = abs(trace - 1.0)
        if drift > TRACE_DRIFT_TOL:
            raise InvariantBreachError(
                f"Trace drifted by {drift:.3e} at t={step * dt:.6g}"
            )
        hermiticity = float(np.linalg.norm(rho - rho.conj().T))
        if hermiticity > 1e-10:
            raise InvariantBreachError(
                f"Density matrix lost Hermiticity ({hermiticity:.3e}) at t={step * dt:.6g}"
            )
        if renormalize:
            rho = 0.5 * (rho + rho.conj().T) / trace.real
        if step % sample_every == 0 or step == n_steps:
            if not warned:
                smallest = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))
                if smallest < -NEGATIVE_EIGENVALUE_TOL:
                    logger.warning(
                        "Density matrix eigenvalue {:.3e} at t={:.6g}; reduce dt",
                        smallest,
                        step * dt,
                    )
                    warned = True
            record(step, rho)

    values = np.array(series, dtype=complex)
    return QuantumTrajectory(
        times=np.array(times),
        a=values[:, 0],
        sigma_A=values[:, 1],
        n_photon=values[:, 2].real,
        n_A=values[:, 3].real,
        trace=values[:, 4].real,
        states=states if keep_states else None,
    )


def steady_state(
    model: LindbladModel,
    rho0: np.ndarray,
    dt: float,
    tol: float = 1e-9,
    t_max: float | None = None,
) -> np.ndarray:
    """Long-time integration until ||d rho / dt|| < tol."""
    rho = np.array(rho0, dtype=complex)
    _check_initial(rho, model)
    if t_max is None:
        slowest = model.minimum_rate()
        if slowest <= 0:
            raise UnphysicalParametersError("Steady state needs at least one decay channel")
        t_max = 20.0 / slowest
    n_steps = int(math.ceil(t_max / dt))
    for step in range(n_steps):
        if np.linalg.norm(model.generator(rho)) < tol:
            logger.debug("Steady state converged after t={:.6g}", step * dt)
            return rho
        rho = _rk4_step(model, rho, dt)
    logger.warning(
        "Steady state not converged to {:.1e} within t={:.6g} (residual {:.3e})",
        tol,
        t_max,
        float(np.linalg.norm(model.generator(rho))),
    )
    return rho


def partial_trace_B(rho: np.ndarray, hilbert: HilbertSpec) -> np.ndarray:
    d_S = hilbert.subsystem_dimension
    d_B = 2**hilbert.n_spins_B
    if rho.shape != (d_S * d_B, d_S * d_B):
        raise ValueError(
            f"Density matrix shape {rho.shape} does not match dimension {d_S * d_B}"
        )
    return np.einsum("ijkj->ik", rho.reshape(d_S, d_B, d_S, d_B))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = rho - sigma
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


@dataclass
class ComparisonReport:
    max_trace_distance: float
    max_a_discrepancy: float
    max_sigma_A_discrepancy: float
    max_n_photon_discrepancy: float
    max_n_A_discrepancy: float
    amplitude_peak: float
    population_peak: float
    relative_discrepancy: float
    verdict: Verdict
    full: QuantumTrajectory = field(repr=False)
    effective: QuantumTrajectory = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "max_trace_distance": self.max_trace_distance,
            "max_a_discrepancy": self.max_a_discrepancy,
            "max_sigma_A_discrepancy": self.max_sigma_A_discrepancy,
            "max_n_photon_discrepancy": self.max_n_photon_discrepancy,
            "max_n_A_discrepancy": self.max_n_A_discrepancy,
            "amplitude_peak": self.amplitude_peak,
            "population_peak": self.population_peak,
            "relative_discrepancy": self.relative_discrepancy,
            "verdict": str(self.verdict),
        }


def compare_full_vs_effective(
    spec: SystemSpec,
    couplings: CouplingSet,
    hilbert: HilbertSpec,
    initial: InitialState = InitialState.A_EXCITED,
    t_end: float = 20.0,
    dt: float = 0.01,
    alpha: complex = 0.0,
    n_bar: float = 1.0,
) -> ComparisonReport:
    report = validity_report(spec, couplings, n_bar=n_bar)
    if report.verdict == Verdict.FAIL:
        logger.warning(
            "Comparing full and effective dynamics outside the validity region (largest ratio {:.3g})",
            report.max_ratio,
        )

    full_model = build_full_model(spec, couplings, hilbert)
    rho0 = initial_state(initial, hilbert, alpha=alpha)
    full = evolve(full_model, rho0, t_end, dt, keep_states=True)

    params = effective_params(couplings, spec)
    eff_model = build_effective_model(params, hilbert.photon_cutoff)
    effective = evolve(eff_model, partial_trace_B(rho0, hilbert), t_end, dt, keep_states=True)

    distances = [
        trace_distance(partial_trace_B(rho_full, hilbert), rho_eff)
        for rho_full, rho_eff in zip(full.states, effective.states)
    ]
    a_disc = float(np.max(np.abs(full.a - effective.a)))
    s_disc = float(np.max(np.abs(full.sigma_A - effective.sigma_A)))
    n_ph_disc = float(np.max(np.abs(full.n_photon - effective.n_photon)))
    n_A_disc = float(np.max(np.abs(full.n_A - effective.n_A)))
    amplitude_peak = float(max(np.max(np.abs(full.a)), np.max(np.abs(full.sigma_A))))
    population_peak = float(max(np.max(full.n_photon), np.max(full.n_A)))
    peak = max(amplitude_peak, population_peak)
    relative = max(a_disc, s_disc, n_ph_disc, n_A_disc) / peak if peak > 0 else 0.0

    comparison = ComparisonReport(
        max_trace_distance=float(max(distances)),
        max_a_discrepancy=a_disc,
        max_sigma_A_discrepancy=s_disc,
        max_n_photon_discrepancy=n_ph_disc,
        max_n_A_discrepancy=n_A_disc,
        amplitude_peak=amplitude_peak,
        population_peak=population_peak,
        relative_discrepancy=relative,
        verdict=report.verdict,
        full=full,
        effective=effective,
    )
    logger.info(
        "Full vs effective: relative discrepancy {:.3e}, max trace distance {:.3e}, verdict {}",
        relative,
        comparison.max_trace_distance,
        report.verdict,
    )
    return comparison
