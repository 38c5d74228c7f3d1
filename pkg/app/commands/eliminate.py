"""
Eliminate command for CavElim.
"""

from loguru import logger

from app.commands.common import (
    EXIT_INVALID,
    EXIT_OK,
    add_output_argument,
    add_threshold_arguments,
    finish_run,
    output_path,
)
from app.log import print_banner, print_parameters, print_verdict
from app.physics.common import (
    VALIDITY_MARGINAL_THRESHOLD,
    VALIDITY_PASS_THRESHOLD,
    CavElimError,
)
from app.physics.elimination import (
    coupling_modification,
    diagonalize_dissipator,
    effective_params,
    linewidth_modification,
    single_emitter_limits,
    validity_report,
)
from app.physics.model import build_couplings
from app.physics.states import Verdict
from app.utils.config import load_system
from app.utils.utils import write_csv, write_json

EFFECTIVE_COLUMNS = [
    "delta_c_eff",
    "delta_A_eff",
    "g_A_eff",
    "kappa_eff",
    "gamma_A_eff",
    "mu",
    "omega_c_eff",
    "omega_A_eff",
    "verdict",
    "max_ratio",
]


def eliminate_system(
    config: str,
    n_bar: float = 1.0,
    strict: bool = False,
    threshold: float = VALIDITY_PASS_THRESHOLD,
    marginal_threshold: float = VALIDITY_MARGINAL_THRESHOLD,
) -> int:
    """Effective parameters of the cavity + A subsystem with B eliminated."""
    print_banner("ELIMINATE")
    spec = load_system(config)
    couplings = build_couplings(spec)
    params = effective_params(couplings, spec)

    report = validity_report(
        spec,
        couplings,
        n_bar=n_bar,
        threshold=threshold,
        marginal_threshold=marginal_threshold,
    )

    result = {
        "effective_params": params,
        "validity": report,
        "couplings": couplings,
    }
    try:
        result["dissipator_modes"] = diagonalize_dissipator(params)
    except CavElimError as e:
        logger.warning("Dissipator modes unavailable: {}", e)
        result["dissipator_modes"] = None

    if couplings.n == 1:
        for key, analysis in (
            ("coupling_modification", coupling_modification),
            ("linewidth_modification", linewidth_modification),
            ("single_emitter_limits", single_emitter_limits),
        ):
            try:
                result[key] = analysis(spec, couplings)
            except CavElimError as e:
                logger.warning("{} unavailable: {}", key, e)

    json_path = output_path("effective.json")
    csv_path = output_path("effective.csv")
    write_json(json_path, result)
    row = params.model_dump()
    row["verdict"] = str(report.verdict)
    row["max_ratio"] = report.max_ratio
    write_csv(csv_path, [row], EFFECTIVE_COLUMNS)

    print_parameters("Effective parameters", params.model_dump())
    print_verdict(str(report.verdict), report.ratios())

    status = EXIT_OK
    if report.verdict == Verdict.FAIL:
        if strict:
            logger.error("Validity verdict is fail under --strict")
            status = EXIT_INVALID
        else:
            logger.warning("Validity verdict is fail; effective parameters written anyway")

    return finish_run(
        "eliminate",
        [json_path, csv_path],
        status,
        config=spec.model_dump(mode="json"),
    )


def setup_eliminate_parser(parser):
    """Setup the eliminate command parser."""
    eliminate_parser = parser.add_parser(
        "eliminate", help="compute the effective cavity + A parameters with B eliminated"
    )
    eliminate_parser.add_argument(
        "--config",
        type=str,
        help="system configuration (YAML)",
        required=True,
    )
    add_output_argument(eliminate_parser)
    add_threshold_arguments(eliminate_parser)
