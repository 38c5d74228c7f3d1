"""
Dynamics command for CavElim.
"""

from loguru import logger

from app.commands.common import EXIT_OK, add_output_argument, finish_run, output_path
from app.log import log_and_print, print_banner, print_parameters
from app.physics.common import DEFAULT_HILBERT_CAP
from app.physics.elimination import effective_params
from app.physics.model import build_couplings
from app.physics.quantum import (
    HilbertSpec,
    build_effective_model,
    build_full_model,
    compare_full_vs_effective,
    evolve,
    initial_state,
    partial_trace_B,
)
from app.physics.states import InitialState, ModelKind
from app.utils.config import load_system
from app.utils.utils import write_csv, write_json

TRAJECTORY_COLUMNS = [
    "t",
    "re_a",
    "im_a",
    "re_sigma_A",
    "im_sigma_A",
    "n_photon",
    "n_A",
    "trace",
]


def run_dynamics(
    config: str,
    model_kind: ModelKind = ModelKind.FULL,
    initial: InitialState = InitialState.A_EXCITED,
    n_max: int = 2,
    t_end: float = 20.0,
    dt: float = 0.01,
    alpha: complex = 0j,
    sample_every: int = 1,
    hilbert_cap: int = DEFAULT_HILBERT_CAP,
    compare: bool = False,
) -> int:
    """Lindblad evolution of the full or the effective model from a product state."""
    print_banner("DYNAMICS")
    spec = load_system(config)
    couplings = build_couplings(spec)
    hilbert = HilbertSpec(photon_cutoff=n_max, n_spins_B=couplings.n, cap=hilbert_cap)
    hilbert.check()
    outputs = []

    if compare:
        report = compare_full_vs_effective(
            spec, couplings, hilbert, initial=initial, t_end=t_end, dt=dt, alpha=alpha
        )
        full_path = output_path("dynamics_full.csv")
        eff_path = output_path("dynamics_effective.csv")
        json_path = output_path("comparison.json")
        write_csv(full_path, report.full.to_records(), TRAJECTORY_COLUMNS)
        write_csv(eff_path, report.effective.to_records(), TRAJECTORY_COLUMNS)
        write_json(json_path, {"initial": str(initial), "comparison": report})
        outputs += [full_path, eff_path, json_path]
        print_parameters("Full vs effective", report.to_dict())
    else:
        rho0 = initial_state(initial, hilbert, alpha=alpha)
        if model_kind == ModelKind.FULL:
            model = build_full_model(spec, couplings, hilbert)
        else:
            params = effective_params(couplings, spec)
            model = build_effective_model(params, n_max)
            rho0 = partial_trace_B(rho0, hilbert)
        logger.info(
            "Evolving the {} model (d={}) to t={} with dt={}", model_kind, model.dimension, t_end, dt
        )
        trajectory = evolve(model, rho0, t_end, dt, sample_every=sample_every)
        csv_path = output_path("dynamics.csv")
        write_csv(csv_path, trajectory.to_records(), TRAJECTORY_COLUMNS)
        outputs.append(csv_path)
        log_and_print(
            f"final <a^+a>={trajectory.n_photon[-1]:.6g}, <sigma_A^+sigma_A^->={trajectory.n_A[-1]:.6g}"
        )

    snapshot = {
        "system": spec.model_dump(mode="json"),
        "model": str(model_kind),
        "initial": str(initial),
        "n_max": n_max,
        "t_end": t_end,
        "dt": dt,
        "alpha": {"re": complex(alpha).real, "im": complex(alpha).imag},
        "compare": compare,
    }
    return finish_run("dynamics", outputs, EXIT_OK, config=snapshot)


def setup_dynamics_parser(parser):
    """Setup the dynamics command parser."""
    dynamics_parser = parser.add_parser(
        "dynamics", help="quantum master-equation dynamics of the full or effective model"
    )
    dynamics_parser.add_argument(
        "--config",
        type=str,
        help="system configuration (YAML)",
        required=True,
    )
    dynamics_parser.add_argument(
        "--model",
        type=str,
        help="model to evolve",
        required=False,
        default=ModelKind.FULL.value,
        choices=[e.value for e in ModelKind],
    )
    dynamics_parser.add_argument(
        "--initial",
        type=str,
        help="initial state of cavity and A (B starts in its ground state)",
        required=False,
        default=InitialState.A_EXCITED.value,
        choices=[e.value for e in InitialState],
    )
    dynamics_parser.add_argument(
        "--n-max",
        type=int,
        help="photon number cutoff",
        required=False,
        default=2,
    )
    dynamics_parser.add_argument(
        "--t-end",
        type=float,
        help="final time",
        required=False,
        default=20.0,
    )
    dynamics_parser.add_argument(
        "--dt",
        type=float,
        help="RK4 step",
        required=False,
        default=0.01,
    )
    dynamics_parser.add_argument(
        "--alpha",
        type=complex,
        help="coherent-state amplitude for --initial coherent",
        required=False,
        default=0j,
    )
    dynamics_parser.add_argument(
        "--sample-every",
        type=int,
        help="record every n-th step",
        required=False,
        default=1,
    )
    dynamics_parser.add_argument(
        "--hilbert-cap",
        type=int,
        help="largest Hilbert space dimension accepted",
        required=False,
        default=DEFAULT_HILBERT_CAP,
    )
    dynamics_parser.add_argument(
        "--compare",
        action="store_true",
        help="evolve both models and report their discrepancy",
        default=False,
    )
    add_output_argument(dynamics_parser)
