"""
Validate command for CavElim.
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
from app.log import log_and_print, print_banner, print_verdict
from app.physics.common import VALIDITY_MARGINAL_THRESHOLD, VALIDITY_PASS_THRESHOLD
from app.physics.elimination import validity_report
from app.physics.model import build_couplings
from app.physics.states import Verdict
from app.utils.config import check_system, load_yaml
from app.utils.utils import write_json


def validate_system(
    config: str,
    n_bar: float = 1.0,
    strict: bool = False,
    threshold: float = VALIDITY_PASS_THRESHOLD,
    marginal_threshold: float = VALIDITY_MARGINAL_THRESHOLD,
    alpha: complex | None = None,
    beta_A: complex = 0j,
) -> int:
    """Configuration diagnostics plus the adiabatic-elimination validity report.

    With `alpha` the report also carries the retardation estimate for the
    subsystem amplitudes (alpha, beta_A).
    """
    print_banner("VALIDATE")
    spec, diagnostics = check_system(load_yaml(config), config)
    couplings = build_couplings(spec)

    state = None if alpha is None else (complex(alpha), complex(beta_A))
    report = validity_report(
        spec,
        couplings,
        n_bar=n_bar,
        subsystem_state=state,
        threshold=threshold,
        marginal_threshold=marginal_threshold,
    )

    result = {
        "diagnostics": [
            {"severity": str(d.severity), "field": d.field, "message": d.message}
            for d in diagnostics
        ],
        "validity": report,
    }
    if report.beta_ad is not None:
        result["beta_ad"] = report.beta_ad
        result["beta_ret"] = report.beta_ret

    json_path = output_path("validity.json")
    write_json(json_path, result)

    for d in diagnostics:
        log_and_print(str(d))
    print_verdict(str(report.verdict), report.ratios())
    if report.degraded_confidence:
        logger.warning("Validity ratios computed with degraded confidence")

    status = EXIT_OK
    if strict and report.verdict == Verdict.FAIL:
        logger.error("Validity verdict is fail under --strict")
        status = EXIT_INVALID

    return finish_run(
        "validate", [json_path], status, config=spec.model_dump(mode="json")
    )


def setup_validate_parser(parser):
    """Setup the validate command parser."""
    validate_parser = parser.add_parser(
        "validate", help="check a configuration and the validity of eliminating B"
    )
    validate_parser.add_argument(
        "--config",
        type=str,
        help="system configuration (YAML)",
        required=True,
    )
    validate_parser.add_argument(
        "--alpha",
        type=complex,
        help="cavity amplitude for the retardation estimate, e.g. 1 or 0.5+0.1j",
        required=False,
        default=None,
    )
    validate_parser.add_argument(
        "--beta-a",
        type=complex,
        help="amplitude of A for the retardation estimate",
        required=False,
        default=0j,
    )
    add_output_argument(validate_parser)
    add_threshold_arguments(validate_parser)
