import math

import numpy as np
import pytest

from app.physics.common import (
    DegenerateEnsembleError,
    EliminationSingularError,
    UnphysicalParametersError,
    UnsupportedConfigurationError,
)
from app.physics.elimination import (
    EffectiveParams,
    coupling_modification,
    diagonalize_dissipator,
    effective_params,
    effective_params_single,
    linewidth_modification,
    retardation_estimate,
    single_emitter_limits,
    validity_report,
)
from app.physics.model import CouplingSet, build_couplings
from app.physics.states import Verdict
from tests.physics.systems import (
    dispersive_spec,
    dissipative_spec,
    geometric_spec,
    make_spec,
)

EFFECTIVE_FIELDS = ["delta_c_eff", "delta_A_eff", "g_A_eff", "kappa_eff", "gamma_A_eff", "mu"]


def _random_single(rng):
    gamma_A = rng.uniform(0.1, 2.0)
    gamma_B = rng.uniform(0.1, 5.0)
    bound = math.sqrt(gamma_A * gamma_B)
    return dict(
        delta_B=rng.uniform(-50.0, 50.0),
        gamma_B=gamma_B,
        omega_AB=rng.uniform(-3.0, 3.0),
        gamma_AB=rng.uniform(-bound, bound),
        g_A=rng.uniform(-2.0, 2.0),
        g_B=rng.uniform(-3.0, 3.0),
        gamma_A=gamma_A,
        kappa=rng.uniform(0.0, 2.0),
        delta_c=rng.uniform(-5.0, 5.0),
    )


def _spec_from(values):
    return make_spec(
        delta_B=values["delta_B"],
        gamma_B=values["gamma_B"],
        g_B=values["g_B"],
        omega_AB=values["omega_AB"],
        gamma_AB=values["gamma_AB"],
        g_A=values["g_A"],
        kappa=values["kappa"],
        gamma_A=values["gamma_A"],
        delta_c=values["delta_c"],
    )


def test_closed_form_matches_general_path():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        values = _random_single(rng)
        spec = _spec_from(values)
        general = effective_params(build_couplings(spec), spec)
        closed = effective_params_single(**values)
        for name in EFFECTIVE_FIELDS:
            a, b = getattr(general, name), getattr(closed, name)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12), name


def test_mu_identity_and_bound():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        values = _random_single(rng)
        spec = _spec_from(values)
        couplings = build_couplings(spec)
        params = effective_params(couplings, spec)
        linewidth = linewidth_modification(spec, couplings)
        assert abs(params.mu) == pytest.approx(
            math.sqrt(linewidth.delta_kappa * linewidth.broadening), rel=1e-10, abs=1e-14
        )
        assert params.mu_bound_satisfied()


def test_dispersive_example():
    spec = dispersive_spec()
    couplings = build_couplings(spec)
    params = effective_params(couplings, spec)
    assert params.g_A_eff == pytest.approx(-5000 / 10001, rel=1e-12)
    assert params.g_A_eff == pytest.approx(-0.49995, abs=1e-5)
    assert params.mu == pytest.approx(50 / 10001, rel=1e-12)
    assert params.kappa_eff - 1.0 == pytest.approx(100 / 10001, rel=1e-10)
    assert params.gamma_A_eff - 1.0 == pytest.approx(25 / 10001, rel=1e-10)
    assert params.delta_c_eff == pytest.approx(-10000 / 10001, rel=1e-12)
    assert params.omega_A_eff == params.delta_A_eff  # frame at omega_A = 0

    report = validity_report(spec, couplings)
    assert report.dipole_ratio == pytest.approx(5 / math.sqrt(10001), rel=1e-12)
    assert report.verdict == Verdict.PASS


def test_dissipative_example():
    spec = dissipative_spec()
    couplings = build_couplings(spec)
    params = effective_params(couplings, spec)
    assert params.g_A_eff == pytest.approx(-0.5, rel=1e-12)
    assert params.gamma_A_eff == pytest.approx(0.9, rel=1e-12)
    assert params.kappa_eff == pytest.approx(3.5, rel=1e-12)
    assert params.mu == pytest.approx(0.0, abs=1e-15)

    modification = coupling_modification(spec, couplings)
    assert modification.coherent_term == pytest.approx(0.0, abs=1e-15)
    assert modification.dissipative_term == pytest.approx(-0.5)

    linewidth = linewidth_modification(spec, couplings)
    assert linewidth.narrowing == pytest.approx(0.1)
    assert linewidth.broadening == pytest.approx(0.0, abs=1e-15)
    assert linewidth.delta_gamma_A == pytest.approx(-0.1)


def test_single_emitter_limits():
    spec = dissipative_spec()
    limits = single_emitter_limits(spec, build_couplings(spec))
    scale = math.sqrt(10.0)
    assert limits.f_dimless == pytest.approx(1.0 / scale)
    assert limits.g_dimless == 0.0
    # on resonance the dissipative part equals the dissipative limit
    assert limits.dissipative_part == pytest.approx(limits.dissipative_limit)
    assert limits.dissipative_linewidth_ratio == pytest.approx(-0.1)
    assert math.isnan(limits.large_detuning_limit)

    with pytest.raises(UnsupportedConfigurationError):
        single_emitter_limits(geometric_spec(2), build_couplings(geometric_spec(2)))


def test_degenerate_single_emitter():
    with pytest.raises(DegenerateEnsembleError):
        effective_params_single(0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0)

    spec = make_spec(
        delta_B=0.0,
        gamma_B=0.0,
        g_B=1.0,
        omega_AB=0.0,
        gamma_AB=0.0,
        g_A=0.0,
        kappa=1.0,
        gamma_A=1.0,
    )
    with pytest.raises(EliminationSingularError):
        effective_params(build_couplings(spec), spec)


def test_decoupled_ensemble_leaves_parameters_unchanged():
    spec = make_spec(
        delta_B=3.0,
        gamma_B=1.0,
        g_B=0.0,
        omega_AB=0.0,
        gamma_AB=0.0,
        g_A=0.7,
        kappa=0.4,
        gamma_A=0.3,
        delta_c=1.5,
    )
    couplings = build_couplings(spec)
    params = effective_params(couplings, spec)
    assert params.g_A_eff == 0.7
    assert params.kappa_eff == 0.4
    assert params.gamma_A_eff == 0.3
    assert params.delta_c_eff == 1.5
    assert params.mu == 0.0

    report = validity_report(spec, couplings)
    assert report.scale_separation_ratios == {"cavity": 0.0, "emitter": 0.0, "coupling": 0.0}
    assert report.verdict == Verdict.PASS


def test_dissipator_modes():
    params = EffectiveParams(
        delta_c_eff=0.0, delta_A_eff=0.0, g_A_eff=2.0, kappa_eff=2.0, gamma_A_eff=1.0, mu=0.5
    )
    modes = diagonalize_dissipator(params)
    assert modes.gamma_plus == pytest.approx(1.5 + math.sqrt(0.5), rel=1e-12)
    assert modes.gamma_plus == pytest.approx(2.20711, abs=1e-5)
    assert modes.gamma_minus == pytest.approx(0.79289, abs=1e-5)
    assert modes.mixing_angle == pytest.approx(math.pi / 4, rel=1e-12)
    assert modes.gamma_plus + modes.gamma_minus == pytest.approx(3.0)

    (c, s), (c_m, s_m) = modes.jump_coefficients
    assert c * c_m + s * s_m == pytest.approx(0.0, abs=1e-15)

    # negative mu wraps the angle into [0, 2 pi)
    flipped = diagonalize_dissipator(params.model_copy(update={"mu": -0.5}))
    assert flipped.mixing_angle == pytest.approx(2 * math.pi - math.pi / 4)


def test_dissipator_rejects_indefinite_rates():
    params = EffectiveParams(
        delta_c_eff=0.0, delta_A_eff=0.0, g_A_eff=0.0, kappa_eff=1.0, gamma_A_eff=1.0, mu=2.0
    )
    assert not params.mu_bound_satisfied()
    with pytest.raises(UnphysicalParametersError):
        diagonalize_dissipator(params)


def test_validity_verdicts():
    fail = make_spec(
        delta_B=0.0,
        gamma_B=1.0,
        g_B=1.0,
        omega_AB=5.0,
        gamma_AB=0.0,
        g_A=0.2,
        kappa=1.0,
        gamma_A=1.0,
    )
    report = validity_report(fail, build_couplings(fail))
    assert report.verdict == Verdict.FAIL
    assert report.max_coupling_ratio == pytest.approx(5.0)

    # gamma_A_eff = 26 dominates the ratios once the coupling ratio 5 passes
    relaxed = validity_report(
        fail, build_couplings(fail), threshold=10.0, marginal_threshold=1000.0
    )
    assert relaxed.verdict == Verdict.MARGINAL
    assert relaxed.max_ratio == pytest.approx(26.0)


def test_retardation_estimate_paths_agree():
    spec = dispersive_spec()
    couplings = build_couplings(spec)
    params = effective_params(couplings, spec)
    report = validity_report(spec, couplings, subsystem_state=(1.0, 0.0))
    beta_ad_direct, beta_ret_direct = retardation_estimate(couplings, params, (1.0, 0.0))

    np.testing.assert_allclose(report.beta_ad, beta_ad_direct, rtol=1e-10)
    np.testing.assert_allclose(report.beta_ret, beta_ret_direct, rtol=1e-10)
    # beta_ad = -M^-1 G alpha
    assert report.beta_ad[0] == pytest.approx(-10.0 / complex(100.0, -1.0), rel=1e-12)
    assert report.retardation_ratio < 0.05


def test_multi_emitter_general_path():
    spec = geometric_spec(3)
    couplings = build_couplings(spec)
    params = effective_params(couplings, spec)

    Minv = np.linalg.inv(couplings.M)
    GG = couplings.G @ Minv @ couplings.G
    GV = couplings.G @ Minv @ couplings.V
    assert params.kappa_eff == pytest.approx(1.0 + GG.imag, rel=1e-10)
    assert params.g_A_eff == pytest.approx(couplings.g_A - GV.real, rel=1e-10)
    assert params.mu == pytest.approx(GV.imag, rel=1e-10, abs=1e-14)


def test_from_rates_matches_explicit_single_formula():
    couplings = CouplingSet.from_rates(
        delta_B=2.0, gamma_B=0.5, g_B=[1.0], omega_AB=[0.3], gamma_AB=[0.1], g_A=0.0
    )
    spec = make_spec(
        delta_B=2.0,
        gamma_B=0.5,
        g_B=1.0,
        omega_AB=0.3,
        gamma_AB=0.1,
        g_A=0.0,
        kappa=0.0,
        gamma_A=0.1,
    )
    params = effective_params(couplings, spec)
    den = 2.0**2 + 0.5**2
    assert params.mu == pytest.approx((0.5 * 0.3 - 2.0 * 0.1) / den, rel=1e-12)
