"""
Dense complex matrix engine.

Hermitian eigendecomposition, exact spectral function application (the
verification oracle), matrix Clenshaw for Chebyshev series (the simulated
QSVT path) and operator norms.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from modular.chebyshev import ChebyshevSeries
from modular.errors import DomainError, EvaluationError, ShapeError

HERMITIAN_TOL = 1e-10

# Spectrum of a matrix handed to apply_poly_clenshaw may overshoot [-1, 1] by this much
SPECTRUM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenvalues in ascending order with eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    def reconstruct(self) -> np.ndarray:
        vecs = self.eigenvectors
        return (vecs * self.eigenvalues) @ vecs.conj().T


def as_matrix(data, square: bool = True) -> np.ndarray:
    """
    Convert to a finite complex128 matrix.

    Raises:
        ShapeError: If data is not two-dimensional, not square when required,
            empty or has non-finite entries
    """
    matrix = np.asarray(data, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ShapeError(f"expected a matrix, got an array of shape {matrix.shape}")
    if matrix.size == 0:
        raise ShapeError("matrix is empty")
    if square and matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ShapeError("matrix has non-finite entries")
    return matrix


def check_same_dim(first: np.ndarray, second: np.ndarray, what: str = "operators") -> None:
    if first.shape != second.shape:
        raise ShapeError(f"{what} differ in shape: {first.shape} vs {second.shape}")


def eig_hermitian(matrix) -> SpectralData:
    """
    Eigendecomposition of a Hermitian matrix.

    Args:
        matrix: Square matrix, Hermitian within 1e-10

    Returns:
        SpectralData with ascending eigenvalues

    Raises:
        ShapeError: If the matrix is not square or not Hermitian
    """
    m = as_matrix(matrix)
    asymmetry = float(np.max(np.abs(m - m.conj().T)))
    if asymmetry > HERMITIAN_TOL:
        raise ShapeError(f"matrix is not Hermitian: max |M - M^dagger| = {asymmetry:.3e}")
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (m + m.conj().T))
    return SpectralData(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def apply_function_spectral(
    matrix, func: Callable[[np.ndarray], np.ndarray], spectral: Optional[SpectralData] = None
) -> np.ndarray:
    """
    Compute V f(Lambda) V^dagger.

    Args:
        matrix: Hermitian matrix
        func: Vectorized function of the eigenvalues; complex output is allowed
        spectral: Precomputed decomposition of matrix, if available

    Returns:
        Complex matrix

    Raises:
        EvaluationError: If func is undefined (non-finite) on an eigenvalue
    """
    data = spectral if spectral is not None else eig_hermitian(matrix)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.asarray(func(data.eigenvalues), dtype=np.complex128)
    bad = ~np.isfinite(values)
    if np.any(bad):
        eigenvalue = float(data.eigenvalues[np.flatnonzero(bad)[0]])
        raise EvaluationError(f"function is undefined at eigenvalue {eigenvalue:.17g}")
    vecs = data.eigenvectors
    return (vecs * values) @ vecs.conj().T


def _matrix_clenshaw(coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    identity = np.eye(y.shape[0], dtype=np.complex128)
    b1 = np.zeros_like(y)
    b2 = np.zeros_like(y)
    for c_k in coeffs[:0:-1]:
        b1, b2 = 2.0 * (y @ b1) - b2, b1
        b1[np.diag_indices_from(b1)] += c_k
    return y @ b1 - b2 + coeffs[0] * identity


def apply_poly_clenshaw(matrix, series: ChebyshevSeries) -> np.ndarray:
    """
    Compute sum c_n T_n(M) by the backward Clenshaw recurrence on matrices.

    One matrix product per degree, which is the query cost a block-encoded
    QSVT circuit pays. Even series run in Y = 2 M^2 - I over half the terms.

    Args:
        matrix: Hermitian matrix with spectrum in [-1, 1]
        series: Chebyshev series

    Returns:
        Complex matrix

    Raises:
        DomainError: If the spectrum leaves [-1 - 1e-8, 1 + 1e-8]
    """
    m = as_matrix(matrix)
    radius = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))
    if radius > 1.0 + SPECTRUM_TOL:
        raise DomainError(f"spectrum must lie in [-1, 1] for polynomial application, got radius {radius:.17g}")

    coeffs = series.coefficients
    if coeffs.size == 0:
        return np.zeros_like(m)
    if series.parity == "even":
        identity = np.eye(m.shape[0], dtype=np.complex128)
        return _matrix_clenshaw(coeffs[0::2], 2.0 * (m @ m) - identity)
    return _matrix_clenshaw(coeffs, m)


def operator_norm(matrix) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(as_matrix(matrix, square=False), 2))


def hermitize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


def random_hermitian(dim: int, rng: np.random.Generator, norm: Optional[float] = None) -> np.ndarray:
    """GUE-style Hermitian matrix, optionally rescaled to the given operator norm."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = hermitize(g)
    if norm is not None:
        h *= norm / operator_norm(h)
    return h


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases
