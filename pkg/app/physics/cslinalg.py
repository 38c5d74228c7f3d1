"""
Linear algebra for complex symmetric (non-Hermitian) matrices.

Eigenvectors are normalized with the bilinear form x^T y (no complex
conjugation), so that B = sum_j lambda_j x_j x_j^T and sum_j x_j x_j^T = 1.
Quadratic forms X^T M^-1 Y always go through an LU solve.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from loguru import logger

from app.physics.common import (
    DEFECTIVE_THRESHOLD,
    DEGENERACY_TOL,
    SOLVE_RESIDUAL_TOL,
    SYMMETRY_TOL,
    DecompositionUnreliableError,
    EliminationSingularError,
    array_to_list,
)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns x_j
    condition_metric: float
    reconstruction_residual: float
    completeness_residual: float

    @property
    def n(self) -> int:
        return int(self.eigenvalues.shape[0])

    def project(self, vector) -> np.ndarray:
        """x_j^T v for every eigenvector."""
        return self.eigenvectors.T @ np.asarray(vector, dtype=complex)

    def apply_inverse_power(self, vector, power: int = 1) -> np.ndarray:
        """sum_j x_j (x_j^T v) / lambda_j^power."""
        return self.eigenvectors @ (self.project(vector) / self.eigenvalues**power)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": array_to_list(self.eigenvalues),
            "condition_metric": self.condition_metric,
            "reconstruction_residual": self.reconstruction_residual,
            "completeness_residual": self.completeness_residual,
        }


def _check_symmetric(B: np.ndarray, tol: float = SYMMETRY_TOL):
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {B.shape}")
    scale = max(np.linalg.norm(B), np.finfo(float).tiny)
    asym = np.linalg.norm(B - B.T) / scale
    if asym > tol:
        raise ValueError(f"Matrix is not complex symmetric (relative asymmetry {asym:.3e})")


def _degenerate_clusters(eigenvalues: np.ndarray) -> list[list[int]]:
    """Group consecutive (sorted) indices whose eigenvalues coincide."""
    clusters: list[list[int]] = []
    for idx, lam in enumerate(eigenvalues):
        if clusters:
            ref = eigenvalues[clusters[-1][0]]
            if abs(lam - ref) <= DEGENERACY_TOL * max(1.0, abs(ref)):
                clusters[-1].append(idx)
                continue
        clusters.append([idx])
    return clusters


def _bilinear_gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for k in range(out.shape[1]):
        v = out[:, k]
        for prev in range(k):
            u = out[:, prev]
            norm_u = u @ u
            # self-orthogonal vectors are left for the defectiveness check
            if abs(norm_u) <= DEFECTIVE_THRESHOLD * float(np.vdot(u, u).real):
                continue
            v = v - (u @ v) / norm_u * u
        out[:, k] = v
    return out


def decompose_complex_symmetric(
    B, defective_threshold: float = DEFECTIVE_THRESHOLD
) -> SpectralDecomposition:
    B = np.asarray(B, dtype=complex)
    _check_symmetric(B)
    n = B.shape[0]
    if n < 1:
        raise ValueError("Cannot decompose an empty matrix")

    eigenvalues, vectors = scipy.linalg.eig(B)
    order = np.lexsort((eigenvalues.imag, -eigenvalues.real))
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]

    for cluster in _degenerate_clusters(eigenvalues):
        if len(cluster) > 1:
            vectors[:, cluster] = _bilinear_gram_schmidt(vectors[:, cluster])

    unit = vectors / np.linalg.norm(vectors, axis=0)
    self_products = np.einsum("ij,ij->j", unit, unit)
    condition_metric = float(np.min(np.abs(self_products)))
    if not condition_metric >= defective_threshold:
        raise DecompositionUnreliableError(
            f"Matrix is close to defective (min |x^T x| = {condition_metric:.3e})",
            condition_metric,
        )

    X = unit / np.sqrt(self_products)
    for j in range(n):
        col = X[:, j]
        lead = col[np.argmax(np.abs(col))]
        if lead.real < 0 or (lead.real == 0 and lead.imag < 0):
            X[:, j] = -col

    scale = max(np.linalg.norm(B), np.finfo(float).tiny)
    reconstruction = float(np.linalg.norm(X @ np.diag(eigenvalues) @ X.T - B) / scale)
    completeness = float(np.linalg.norm(X @ X.T - np.eye(n)))
    logger.debug(
        "Complex symmetric decomposition N={}: metric={:.3e}, reconstruction={:.3e}, completeness={:.3e}",
        n,
        condition_metric,
        reconstruction,
        completeness,
    )
    if reconstruction > 1e-8 or completeness > 1e-8:
        logger.warning(
            "Decomposition residuals above 1e-8 (reconstruction {:.3e}, completeness {:.3e})",
            reconstruction,
            completeness,
        )

    return SpectralDecomposition(
        eigenvalues=eigenvalues,
        eigenvectors=X,
        condition_metric=condition_metric,
        reconstruction_residual=reconstruction,
        completeness_residual=completeness,
    )


def inverse_via_modes(decomposition: SpectralDecomposition) -> np.ndarray:
    """B^-1 = sum_j x_j x_j^T / lambda_j."""
    X = decomposition.eigenvectors
    return (X / decomposition.eigenvalues) @ X.T


@dataclass
class SymmetricSolver:
    """LU factorization of M, reused for every right-hand side.

    `residual` tracks the largest relative residual seen so far.
    """

    M: np.ndarray
    residual_tol: float = SOLVE_RESIDUAL_TOL
    residual: float = field(default=0.0, init=False)
    _lu: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.M = np.array(self.M, dtype=complex, order="C")
        if self.M.ndim != 2 or self.M.shape[0] != self.M.shape[1]:
            raise ValueError(f"Expected a square matrix, got shape {self.M.shape}")
        if self.n == 0:
            return
        if not np.all(np.isfinite(self.M)):
            raise EliminationSingularError("M contains non-finite entries")
        lu, piv = scipy.linalg.lu_factor(self.M, check_finite=False)
        if np.any(np.diag(lu) == 0):
            raise EliminationSingularError(
                "M is singular: an undamped resonant B mode prevents adiabatic elimination"
            )
        self._lu = (lu, piv)

    @property
    def n(self) -> int:
        return int(self.M.shape[0])

    def solve(self, rhs) -> np.ndarray:
        rhs = np.array(rhs, dtype=complex, order="C")
        if self.n == 0:
            return rhs
        x = scipy.linalg.lu_solve(self._lu, rhs, check_finite=False)
        denom = np.linalg.norm(rhs)
        residual = (
            float(np.linalg.norm(self.M @ x - rhs) / denom) if denom > 0 else 0.0
        )
        if not np.all(np.isfinite(x)) or residual > self.residual_tol:
            raise EliminationSingularError(
                f"Linear solve with M failed (relative residual {residual:.3e})", residual
            )
        self.residual = max(self.residual, residual)
        return x

    def quadratic(self, X, Y) -> complex:
        """X^T M^-1 Y (bilinear, no conjugation)."""
        X = np.asarray(X, dtype=complex)
        if self.n == 0:
            return 0j
        return complex(X @ self.solve(Y))

    def quadratic_block(self, X) -> np.ndarray:
        """X^T M^-1 X for the columns of X, as a k x k matrix."""
        X = np.array(X, dtype=complex, order="C")
        k = X.shape[1]
        if self.n == 0:
            return np.zeros((k, k), dtype=complex)
        return X.T @ self.solve(X)


def quadratic_form(M, X, Y) -> complex:
    solver = SymmetricSolver(M)
    value = solver.quadratic(X, Y)
    logger.debug("quadratic_form residual {:.3e}", solver.residual)
    return value
