"""
Shared constants, tolerances and the error hierarchy of the numerical core.

All rates (gamma, kappa, mu) are *amplitude* decay rates: the dissipator
D(x, y)rho = [x, y rho] + [rho x, y] makes an isolated excited population
decay as exp(-2 gamma t). Every module uses this convention.
"""

import math

import numpy as np

# Magic angle where the near-field dipole terms vanish.
MAGIC_ANGLE = math.acos(1.0 / math.sqrt(3.0))

# Default cavity wave number, lengths in units of the cavity wavelength.
DEFAULT_WAVENUMBER = 2.0 * math.pi

SYMMETRY_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
SOLVE_RESIDUAL_TOL = 1e-10
DEFECTIVE_THRESHOLD = 1e-6
DEGENERACY_TOL = 1e-9
EXCEPTIONAL_POINT_TOL = 1e-8
TRACE_DRIFT_TOL = 1e-8
NEGATIVE_EIGENVALUE_TOL = 1e-7
G0_RATIO_TOL = 0.01
LOW_EXCITATION_LIMIT = 0.3

# Below this phase the near-field part of f is evaluated from its Taylor series.
NEAR_FIELD_SERIES_XI = 1e-2

VALIDITY_PASS_THRESHOLD = 0.1
VALIDITY_MARGINAL_THRESHOLD = 0.3

DEFAULT_HILBERT_CAP = 256


class CavElimError(RuntimeError):
    """Base class for all numerical failures of the toolkit."""

    pass


class SingularGeometryError(CavElimError):
    """Raised when two emitters coincide (xi <= 0)."""

    pass


class DecompositionUnreliableError(CavElimError):
    """Raised when a complex symmetric matrix is too close to defective."""

    def __init__(self, message: str, condition_metric: float):
        super().__init__(message)
        self.condition_metric = condition_metric


class EliminationSingularError(CavElimError):
    """Raised when M cannot be inverted reliably (undamped resonant B mode)."""

    def __init__(self, message: str, residual: float = math.inf):
        super().__init__(message)
        self.residual = residual


class DegenerateEnsembleError(CavElimError):
    """Raised by the single-emitter closed form when Delta_B = gamma_B = 0."""

    pass


class UnphysicalParametersError(CavElimError):
    """Raised when rates violate positivity (negative gamma_-, indefinite rate matrix)."""

    pass


class ResonanceSingularError(CavElimError):
    pass


class UnsupportedConfigurationError(CavElimError):
    pass


class DimensionCapError(CavElimError):
    pass


class InvariantBreachError(CavElimError):
    """Raised when trace or Hermiticity drifts beyond tolerance during integration."""

    pass


class StepSizeError(CavElimError):
    pass


def complex_to_dict(z: complex) -> dict[str, float]:
    z = complex(z)
    return {"re": float(z.real), "im": float(z.imag)}


def array_to_list(arr: np.ndarray) -> list:
    """Convert a (possibly complex) numpy array to nested JSON-friendly lists."""
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        if arr.ndim == 0:
            return complex_to_dict(arr.item())
        return [array_to_list(row) for row in arr]
    return arr.tolist()
