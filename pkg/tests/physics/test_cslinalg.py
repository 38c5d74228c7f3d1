import numpy as np
import pytest

from app.physics.common import DecompositionUnreliableError, EliminationSingularError
from app.physics.cslinalg import (
    SymmetricSolver,
    decompose_complex_symmetric,
    inverse_via_modes,
    quadratic_form,
)


def _random_symmetric(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return A + A.T - 1j * n * np.eye(n)


def test_decomposition_reconstructs_matrix():
    for seed in range(10):
        B = _random_symmetric(5, seed)
        decomposition = decompose_complex_symmetric(B)
        X = decomposition.eigenvectors
        lam = decomposition.eigenvalues

        np.testing.assert_allclose(X @ np.diag(lam) @ X.T, B, atol=1e-10)
        np.testing.assert_allclose(X.T @ X, np.eye(5), atol=1e-10)
        assert decomposition.reconstruction_residual < 1e-10
        assert decomposition.completeness_residual < 1e-10


def test_eigenvalues_sorted_by_decreasing_real_part():
    decomposition = decompose_complex_symmetric(_random_symmetric(6, 42))
    real = decomposition.eigenvalues.real
    assert np.all(np.diff(real) <= 0)


def test_degenerate_eigenvalues_are_orthogonalized():
    # two uncoupled identical emitters and a third coupled one
    B = np.diag([1 - 2j, 1 - 2j, 3 - 1j]).astype(complex)
    decomposition = decompose_complex_symmetric(B)
    X = decomposition.eigenvectors
    np.testing.assert_allclose(X.T @ X, np.eye(3), atol=1e-12)


def test_defective_matrix_is_rejected():
    nilpotent = np.array([[1.0, 1j], [1j, -1.0]])
    with pytest.raises(DecompositionUnreliableError) as info:
        decompose_complex_symmetric(nilpotent)
    assert info.value.condition_metric < 1e-6


def test_asymmetric_matrix_is_rejected():
    with pytest.raises(ValueError):
        decompose_complex_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]], dtype=complex))


def test_inverse_via_modes_matches_solver():
    B = _random_symmetric(4, 7)
    decomposition = decompose_complex_symmetric(B)
    np.testing.assert_allclose(inverse_via_modes(decomposition), np.linalg.inv(B), atol=1e-10)

    v = np.arange(1, 5) + 0.5j
    np.testing.assert_allclose(
        decomposition.apply_inverse_power(v, 2),
        np.linalg.solve(B, np.linalg.solve(B, v)),
        atol=1e-10,
    )


def test_solver_quadratics():
    M = _random_symmetric(4, 3)
    G = np.array([1.0, 0.5, -0.3, 0.2], dtype=complex)
    V = np.array([0.1 - 0.2j, 0.0, 0.4, -1.0j])
    solver = SymmetricSolver(M)

    Q = solver.quadratic_block(np.column_stack([G, V]))
    direct = np.column_stack([G, V]).T @ np.linalg.solve(M, np.column_stack([G, V]))
    np.testing.assert_allclose(Q, direct, atol=1e-12)
    # M symmetric makes the block symmetric
    assert Q[0, 1] == pytest.approx(Q[1, 0], abs=1e-12)

    assert quadratic_form(M, G, V) == pytest.approx(direct[0, 1], abs=1e-12)
    assert solver.residual < 1e-10


def test_singular_matrix_is_rejected():
    with pytest.raises(EliminationSingularError):
        SymmetricSolver(np.zeros((2, 2), dtype=complex))


def test_empty_solver():
    solver = SymmetricSolver(np.zeros((0, 0), dtype=complex))
    assert solver.quadratic_block(np.zeros((0, 2))).shape == (2, 2)
    assert solver.quadratic(np.zeros(0), np.zeros(0)) == 0j
