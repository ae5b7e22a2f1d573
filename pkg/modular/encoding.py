"""
Density matrices, pure states and oracle access to a state.

Validation, spectral floor, purification, partial trace, the unitary
block-encoding dilation and seeded random states.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from modular.errors import DomainError, ShapeError, ValidationError
from modular.matfun import SpectralData, apply_function_spectral, as_matrix, eig_hermitian
from modular.validator import StateValidator

DEFAULT_ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    A validated density matrix with its cached eigendecomposition.

    Attributes:
        matrix: Hermitian, trace-one, positive semidefinite matrix
        spectral: Eigendecomposition of matrix
        zero_tol: Eigenvalues at or below this count as exact zeros
        subsystem_dims: Tensor layout, a single factor unless declared
    """

    matrix: np.ndarray
    spectral: SpectralData
    zero_tol: float = DEFAULT_ZERO_TOL
    subsystem_dims: Tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectral.eigenvalues

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of eigenvalues above zero_tol."""
        return self.spectral.eigenvalues > self.zero_tol


@dataclass(frozen=True, eq=False)
class PureState:
    """A unit vector on a tensor product of subsystems."""

    amplitudes: np.ndarray
    subsystem_dims: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        dims = tuple(int(d) for d in self.subsystem_dims) or (amplitudes.size,)
        is_valid, msg = StateValidator.validate_pure(amplitudes, dims)
        if not is_valid:
            raise ValidationError(f"Validation failed: {msg}")
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def as_bipartite(self) -> np.ndarray:
        """Amplitudes reshaped to (d_A, rest)."""
        first = self.subsystem_dims[0]
        return self.amplitudes.reshape(first, self.dim // first)


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    """Unitary whose top-left encoded_dim block is the encoded operator."""

    unitary: np.ndarray
    encoded_dim: int

    @property
    def block(self) -> np.ndarray:
        d = self.encoded_dim
        return self.unitary[:d, :d]


def validate_density(
    matrix, zero_tol: float = DEFAULT_ZERO_TOL, subsystem_dims: Optional[Sequence[int]] = None
) -> DensityMatrix:
    """
    Check the density-matrix invariants and cache the spectrum.

    Args:
        matrix: Candidate density matrix
        zero_tol: Threshold below which eigenvalues are treated as zero
        subsystem_dims: Optional tensor layout, must multiply to the dimension

    Returns:
        DensityMatrix

    Raises:
        ValidationError: Naming the violated invariant
    """
    try:
        m = as_matrix(matrix, square=False)
    except ShapeError as e:
        raise ValidationError(f"Validation failed: Shape: {e}") from e

    is_valid, msg = StateValidator.validate_density(m)
    if not is_valid:
        raise ValidationError(f"Validation failed: {msg}")

    spectral = eig_hermitian(m)
    is_valid, msg = StateValidator.validate_spectrum(spectral.eigenvalues)
    if not is_valid:
        raise ValidationError(f"Validation failed: {msg}")

    dims = tuple(int(d) for d in subsystem_dims) if subsystem_dims else (m.shape[0],)
    is_valid, msg = StateValidator.validate_dims(dims, m.shape[0])
    if not is_valid:
        raise ValidationError(f"Validation failed: {msg}")

    return DensityMatrix(matrix=m, spectral=spectral, zero_tol=zero_tol, subsystem_dims=dims)


def spectral_floor(rho: DensityMatrix) -> float:
    """
    Return kappa = 1 / (smallest eigenvalue above zero_tol).

    Raises:
        ValidationError: If no eigenvalue exceeds zero_tol
    """
    support = rho.eigenvalues[rho.support]
    if support.size == 0:
        raise ValidationError(
            f"Validation failed: Positivity: no eigenvalue above zero_tol={rho.zero_tol:g}"
        )
    return float(1.0 / np.min(support))


def density_from_state(state: PureState, zero_tol: float = DEFAULT_ZERO_TOL) -> DensityMatrix:
    psi = state.amplitudes
    return validate_density(np.outer(psi, psi.conj()), zero_tol, state.subsystem_dims)


def purify(rho: DensityMatrix) -> PureState:
    """
    Canonical purification sum_i sqrt(lambda_i) |i>_A |i>_B on d x d.

    The amplitude matrix is V diag(sqrt(lambda)), so Psi Psi^dagger = rho.
    """
    weights = np.sqrt(np.clip(rho.eigenvalues, 0.0, None))
    psi = rho.spectral.eigenvectors * weights
    amplitudes = psi.reshape(-1)
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return PureState(amplitudes, (rho.dim, rho.dim))


def schmidt_coefficients(state: PureState) -> np.ndarray:
    """Schmidt coefficients across the first subsystem cut, descending."""
    return np.linalg.svd(state.as_bipartite(), compute_uv=False)


def _check_keep(keep: Sequence[int], dims: Tuple[int, ...]) -> Tuple[int, ...]:
    kept = tuple(sorted(set(int(k) for k in keep)))
    if not kept:
        raise ShapeError("keep must name at least one subsystem")
    if kept[0] < 0 or kept[-1] >= len(dims):
        raise ShapeError(f"keep {list(keep)} is out of range for subsystem dims {list(dims)}")
    return kept


def reduced_density(
    state: Union[PureState, DensityMatrix], keep: Sequence[int], zero_tol: Optional[float] = None
) -> DensityMatrix:
    """
    Partial trace over every subsystem not in keep.

    Args:
        state: Pure state or density matrix with declared subsystem_dims
        keep: Indices of the subsystems to keep, in tensor order
        zero_tol: Zero threshold of the result, inherited by default

    Returns:
        DensityMatrix on the kept subsystems

    Raises:
        ShapeError: If keep does not fit the declared dims
    """
    dims = tuple(state.subsystem_dims)
    kept = _check_keep(keep, dims)
    traced = [i for i in range(len(dims)) if i not in kept]
    kept_dims = tuple(dims[i] for i in kept)
    size = int(np.prod(kept_dims))

    if isinstance(state, PureState):
        tensor = state.amplitudes.reshape(dims)
        matrix = np.moveaxis(tensor, kept, list(range(len(kept)))).reshape(size, -1)
        result = matrix @ matrix.conj().T
        tol = DEFAULT_ZERO_TOL if zero_tol is None else zero_tol
    else:
        n = len(dims)
        tensor = state.matrix.reshape(dims + dims)
        for offset, axis in enumerate(traced):
            current = n - offset
            position = axis - offset
            tensor = np.trace(tensor, axis1=position, axis2=position + current)
        result = tensor.reshape(size, size)
        tol = state.zero_tol if zero_tol is None else zero_tol

    return validate_density(0.5 * (result + result.conj().T), tol, kept_dims)


def block_encode(rho: DensityMatrix) -> BlockEncoding:
    """
    Direct dilation U = [[rho, S], [S, -rho]] with S = sqrt(I - rho^2).

    rho and S commute, so U is Hermitian and U^2 = I.
    """
    s = apply_function_spectral(
        rho.matrix,
        lambda x: np.sqrt(np.clip(1.0 - x * x, 0.0, None)),
        spectral=rho.spectral,
    )
    unitary = np.block([[rho.matrix, s], [s, -rho.matrix]])
    return BlockEncoding(unitary=unitary, encoded_dim=rho.dim)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Exact -sum lambda ln lambda over the support, in nats."""
    support = rho.eigenvalues[rho.support]
    return float(-np.sum(support * np.log(support)))


def modular_unitary(rho: DensityMatrix, t: float) -> np.ndarray:
    """rho^(it) on the support, identity on the kernel."""
    support = rho.support

    def phase(x: np.ndarray) -> np.ndarray:
        safe = np.where(support, x, 1.0)
        return np.where(support, np.exp(1j * t * np.log(safe)), 1.0)

    return apply_function_spectral(rho.matrix, phase, spectral=rho.spectral)


def random_density(
    dim: int,
    rng: np.random.Generator,
    kappa: Optional[float] = None,
    rank: Optional[int] = None,
    zero_tol: float = DEFAULT_ZERO_TOL,
) -> DensityMatrix:
    """
    Seeded density matrix G G^dagger / Tr(G G^dagger) with complex Gaussian G.

    Args:
        dim: Dimension
        rng: numpy Generator
        kappa: If given, mix with I/dim until the smallest eigenvalue is 1/kappa
        rank: Columns of G; below dim gives exact zero eigenvalues

    Raises:
        DomainError: If kappa < dim, which no dim x dim state can reach
    """
    columns = dim if rank is None else rank
    if not 1 <= columns <= dim:
        raise DomainError(f"rank must be between 1 and {dim}, got {rank}")
    g = rng.standard_normal((dim, columns)) + 1j * rng.standard_normal((dim, columns))
    w = g @ g.conj().T
    w /= np.trace(w).real

    if kappa is not None:
        if kappa < dim:
            raise DomainError(f"kappa must be at least the dimension {dim}, got {kappa}")
        smallest = float(np.linalg.eigvalsh(w)[0])
        floor = 1.0 / kappa
        if smallest < floor:
            mix = (floor - smallest) / (1.0 / dim - smallest)
            w = (1.0 - mix) * w + mix * np.eye(dim) / dim

    return validate_density(0.5 * (w + w.conj().T), zero_tol)


def random_pure_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    """Haar-random pure state on the given subsystems."""
    size = int(np.prod(dims))
    psi = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return PureState(psi / np.linalg.norm(psi), tuple(dims))
