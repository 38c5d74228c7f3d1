"""
Spectrum command for CavElim.
"""

from loguru import logger

from app.commands.common import (
    EXIT_OK,
    add_output_argument,
    finish_run,
    linear_grid,
    output_path,
)
from app.log import log_and_print, print_banner, print_parameters
from app.physics.classical import (
    polariton_analysis,
    spectrum_peaks,
    transmission_spectrum,
)
from app.physics.elimination import effective_params
from app.physics.model import build_couplings
from app.physics.states import SpectrumMode
from app.utils.config import ConfigError, load_effective, load_system
from app.utils.utils import write_csv, write_json

DEFAULT_ETA = 0.1
DEFAULT_POINTS = 2001


def default_window(p) -> tuple[float, float]:
    """Laser window around omega_c_eff wide enough for both polaritons."""
    half = 4.0 * (abs(p.g_A_eff) + abs(p.mu) + p.kappa_eff + p.gamma_A_eff)
    half = max(half, 1.0)
    return p.omega_c_eff - half, p.omega_c_eff + half


def compute_spectrum(
    config: str | None = None,
    params_file: str | None = None,
    grid: tuple[float, float, int] | None = None,
    mode: SpectrumMode = SpectrumMode.EXACT,
    eta: float | None = None,
    kappa_bare: float | None = None,
) -> int:
    """Weak-drive cavity transmission T_c(omega_L) and the polariton analysis."""
    print_banner("SPECTRUM")
    if (config is None) == (params_file is None):
        raise ConfigError("exactly one of --config and --params is required")

    spec = couplings = None
    snapshot = {}
    if config is not None:
        spec = load_system(config)
        couplings = build_couplings(spec)
        params = effective_params(couplings, spec)
        if kappa_bare is None:
            kappa_bare = spec.cavity.kappa
        snapshot["system"] = spec.model_dump(mode="json")
    else:
        loaded = load_effective(params_file)
        params = loaded.params
        if eta is None:
            eta = loaded.eta
        if kappa_bare is None:
            kappa_bare = loaded.kappa_bare
        if kappa_bare is None:
            logger.warning("No bare cavity linewidth given; using kappa_eff={}", params.kappa_eff)
            kappa_bare = params.kappa_eff
    if eta is None:
        eta = DEFAULT_ETA

    if grid is None:
        lo, hi = default_window(params)
        omega_grid = linear_grid(lo, hi, DEFAULT_POINTS)
    else:
        omega_grid = linear_grid(grid[0], grid[1], int(grid[2]))

    spectrum = transmission_spectrum(
        params,
        kappa_bare=kappa_bare,
        eta=eta,
        omega_grid=omega_grid,
        mode=mode,
        spec=spec,
        couplings=couplings,
    )
    peaks = spectrum_peaks(spectrum)
    analysis = polariton_analysis(params)

    csv_path = output_path("spectrum.csv")
    json_path = output_path("spectrum.json")
    write_csv(csv_path, spectrum.to_records(), ["omega_L", "T_c"])
    write_json(
        json_path,
        {
            "mode": str(mode),
            "eta": eta,
            "kappa_bare": kappa_bare,
            "effective_params": params,
            "polariton": analysis,
            "peaks": [{"omega_L": w, "T_c": t} for w, t in peaks],
        },
    )

    print_parameters(
        "Polaritons",
        {
            "omega_plus": analysis.omega_plus,
            "Gamma_plus": analysis.Gamma_plus,
            "omega_minus": analysis.omega_minus,
            "Gamma_minus": analysis.Gamma_minus,
            "exceptional_point": analysis.exceptional_point,
        },
    )
    for w, t in peaks:
        log_and_print(f"peak at omega_L={w:.6g}: T_c={t:.6g}")

    snapshot.update(
        {
            "effective_params": params.model_dump(),
            "mode": str(mode),
            "eta": eta,
            "kappa_bare": kappa_bare,
            "grid": [float(omega_grid[0]), float(omega_grid[-1]), len(omega_grid)],
        }
    )
    return finish_run("spectrum", [csv_path, json_path], EXIT_OK, config=snapshot)


def setup_spectrum_parser(parser):
    """Setup the spectrum command parser."""
    spectrum_parser = parser.add_parser(
        "spectrum", help="weak-drive cavity transmission spectrum"
    )
    spectrum_parser.add_argument(
        "--config",
        type=str,
        help="system configuration (YAML); B is eliminated first",
        required=False,
        default=None,
    )
    spectrum_parser.add_argument(
        "--params",
        type=str,
        help="effective-parameter file (YAML) used instead of a system",
        required=False,
        default=None,
    )
    spectrum_parser.add_argument(
        "--grid",
        type=float,
        nargs=3,
        metavar=("MIN", "MAX", "COUNT"),
        help="laser frequency grid (default: a window around omega_c_eff)",
        required=False,
        default=None,
    )
    spectrum_parser.add_argument(
        "--mode",
        type=str,
        help="how the stationary cavity amplitude is evaluated",
        required=False,
        default=SpectrumMode.EXACT.value,
        choices=[e.value for e in SpectrumMode],
    )
    spectrum_parser.add_argument(
        "--eta",
        type=float,
        help=f"drive strength (default: from the params file, else {DEFAULT_ETA})",
        required=False,
        default=None,
    )
    spectrum_parser.add_argument(
        "--kappa-bare",
        type=float,
        help="bare cavity amplitude decay rate entering T_c",
        required=False,
        default=None,
    )
    add_output_argument(spectrum_parser)
