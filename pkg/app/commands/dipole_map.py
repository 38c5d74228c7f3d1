"""
Dipole-map command for CavElim.
"""

from app.commands.common import (
    EXIT_OK,
    add_output_argument,
    finish_run,
    linear_grid,
    output_path,
)
from app.log import print_banner, print_parameters
from app.physics.dipole import coupling_map
from app.utils.utils import write_csv

MAP_COLUMNS = ["theta", "xi", "g", "f", "omega_AB", "gamma_AB"]


def compute_dipole_map(
    theta_grid: tuple[float, float, int],
    xi_grid: tuple[float, float, int],
    gamma_a: float = 1.0,
    gamma_b: float = 1.0,
    clamp_g: float = 2.0,
) -> int:
    """Dimensionless dipole functions g, f on a (theta, xi) grid."""
    print_banner("DIPOLE MAP")
    thetas = linear_grid(theta_grid[0], theta_grid[1], int(theta_grid[2]))
    xis = linear_grid(xi_grid[0], xi_grid[1], int(xi_grid[2]))
    result = coupling_map(thetas, xis, gamma_a=gamma_a, gamma_b=gamma_b)

    csv_path = output_path("dipole_map.csv")
    write_csv(csv_path, result.to_records(clamp_g=clamp_g), MAP_COLUMNS)
    print_parameters(
        "Dipole map",
        {
            "points": result.g.size,
            "max |f|": float(abs(result.f).max()),
            "g clamp": clamp_g,
        },
    )
    snapshot = {
        "theta_grid": [float(thetas[0]), float(thetas[-1]), len(thetas)],
        "xi_grid": [float(xis[0]), float(xis[-1]), len(xis)],
        "gamma_a": gamma_a,
        "gamma_b": gamma_b,
        "clamp_g": clamp_g,
    }
    return finish_run("dipole-map", [csv_path], EXIT_OK, config=snapshot)


def setup_dipole_map_parser(parser):
    """Setup the dipole-map command parser."""
    map_parser = parser.add_parser(
        "dipole-map", help="tabulate the dimensionless dipole functions g and f"
    )
    map_parser.add_argument(
        "--theta-grid",
        type=float,
        nargs=3,
        metavar=("MIN", "MAX", "COUNT"),
        help="polar angle grid in radians",
        required=True,
    )
    map_parser.add_argument(
        "--xi-grid",
        type=float,
        nargs=3,
        metavar=("MIN", "MAX", "COUNT"),
        help="dimensionless separation k r grid (values must be positive)",
        required=True,
    )
    map_parser.add_argument(
        "--gamma-a",
        type=float,
        help="amplitude decay rate of A",
        required=False,
        default=1.0,
    )
    map_parser.add_argument(
        "--gamma-b",
        type=float,
        help="amplitude decay rate of B",
        required=False,
        default=1.0,
    )
    map_parser.add_argument(
        "--clamp-g",
        type=float,
        help="clip |g| in the table to this value (the near field diverges)",
        required=False,
        default=2.0,
    )
    add_output_argument(map_parser)
