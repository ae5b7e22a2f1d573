"""
Quantities derived from the modular flow.

The mixed-state phase-estimation model, two von Neumann entropy
estimators, the two-sided correlator W(s, t) and entropy under the flow
of a tripartite state with the chiral slope read off two times.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, special

from modular.encoding import (
    DensityMatrix,
    modular_unitary,
    reduced_density,
    spectral_floor,
    validate_density,
    von_neumann_entropy,
)
from modular.errors import DomainError, ParameterError, ShapeError
from modular.flow import DEFAULT_DEGREE_CAP, KAPPA_FLOOR, approx_flow, exact_flow
from modular.matfun import as_matrix, check_same_dim, operator_norm
from modular.mh_poly import modular_hamiltonian_poly

METHOD_QPE = "qpe_sampled"
METHOD_FUNCTIONAL = "deterministic_functional"
PHASE_SOURCES = ("exact", "polynomial")
CORRELATOR_MODES = ("exact", "polynomial")


@dataclass(frozen=True)
class EntropyEstimate:
    """An entropy estimate in nats with its confidence parameters."""

    value: float
    epsilon: float
    delta: float
    shots: int
    method: str
    kappa_used: float
    note: str = ""


@dataclass(frozen=True)
class CorrelatorPoint:
    s: float
    t: float
    value: complex


def _check_unit(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must be in (0, 1), got {value}")


def _descending(rho: DensityMatrix) -> np.ndarray:
    return rho.eigenvalues[::-1]


def qpe_sample(
    rho: DensityMatrix,
    phases: Sequence[float],
    shots: int,
    seed: int,
    bits: Optional[int] = None,
) -> np.ndarray:
    """
    Idealized phase estimation on a mixed state.

    Each shot returns phases[k] with probability lambda_k, where the phases
    are listed for the eigenvectors of rho in descending eigenvalue order.

    Args:
        rho: Density matrix
        phases: One phase per eigenvector, largest eigenvalue first
        shots: Number of independent samples, at least 1
        seed: Seed of the numpy Generator
        bits: If given, round every sample to a multiple of 2 pi / 2^bits

    Returns:
        Array of sampled phases

    Raises:
        ParameterError: If shots < 1
        ShapeError: If phases does not have one entry per eigenvalue
    """
    if shots < 1:
        raise ParameterError(f"shots must be at least 1, got {shots}")
    values = np.asarray(phases, dtype=float)
    if values.shape != (rho.dim,):
        raise ShapeError(f"expected {rho.dim} phases, got shape {values.shape}")

    weights = np.where(rho.support, rho.eigenvalues, 0.0)[::-1]
    weights = weights / weights.sum()
    rng = np.random.default_rng(seed)
    samples = values[rng.choice(rho.dim, size=shots, p=weights)]
    if bits is not None:
        step = 2.0 * math.pi / 2 ** bits
        samples = np.round(samples / step) * step
    return samples


def shots_required(kappa: float, epsilon: float, delta: float) -> int:
    """N = ceil((ln kappa)^2 / (delta epsilon^2)), at least 1."""
    if not kappa > 0.0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return max(1, math.ceil(math.log(kappa) ** 2 / (delta * epsilon * epsilon)))


@lru_cache(maxsize=16)
def _hamiltonian_poly(kappa: float, epsilon: float, degree_cap: Optional[int]):
    return modular_hamiltonian_poly(kappa, epsilon, degree_cap)


def qpe_phases(
    rho: DensityMatrix,
    kappa: float,
    phase_source: str = "exact",
    epsilon: float = 0.1,
    degree_cap: Optional[int] = DEFAULT_DEGREE_CAP,
) -> np.ndarray:
    """
    Phases -pi ln(lambda) / ln(kappa), clipped to [0, pi], largest eigenvalue first.

    With phase_source="polynomial" the phases come from P^MH evaluated on the
    spectrum, the eigenphases of the unitary built from H~ = P^MH(rho).
    """
    if phase_source not in PHASE_SOURCES:
        raise ParameterError(f"phase_source must be one of {PHASE_SOURCES}, got {phase_source!r}")
    eigenvalues = _descending(rho)
    if phase_source == "exact":
        safe = np.maximum(eigenvalues, np.finfo(float).tiny)
        phases = -math.pi * np.log(safe) / math.log(kappa)
    else:
        poly, info = _hamiltonian_poly(float(max(kappa, KAPPA_FLOOR)), epsilon / 4.0, degree_cap)
        values = poly.evaluate(np.clip(eigenvalues, 0.0, 1.0))
        phases = math.pi * 2.0 * info.beta * values / math.log(kappa)
    return np.clip(phases, 0.0, math.pi)


def entropy_qpe(
    rho: DensityMatrix,
    epsilon: float,
    delta: float,
    seed: int,
    bits: Optional[int] = None,
    phase_source: str = "exact",
    degree_cap: Optional[int] = DEFAULT_DEGREE_CAP,
) -> EntropyEstimate:
    """
    Entropy from phase estimation of exp(i pi ln(rho) / ln(kappa)) on rho.

    The estimate (ln kappa / pi) * mean(theta) is unbiased for S(rho) and
    fails to be within epsilon with probability at most delta at
    N = shots_required(kappa, epsilon, delta).

    Args:
        rho: Density matrix
        epsilon: Accuracy in nats
        delta: Failure probability
        seed: Sampling seed
        bits: Optional phase readout precision
        phase_source: "exact" spectrum or "polynomial" P^MH phases
        degree_cap: Limit on the P^MH degree for polynomial phases

    Returns:
        EntropyEstimate with method qpe_sampled
    """
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    if int(np.count_nonzero(rho.support)) <= 1:
        return EntropyEstimate(
            value=0.0,
            epsilon=epsilon,
            delta=delta,
            shots=1,
            method=METHOD_QPE,
            kappa_used=1.0,
            note="rank-one state: kappa = 1 and the entropy is 0",
        )

    kappa = spectral_floor(rho)
    phases = qpe_phases(rho, kappa, phase_source, epsilon, degree_cap)
    shots = shots_required(kappa, epsilon, delta)
    samples = qpe_sample(rho, phases, shots, seed, bits)
    value = math.log(kappa) / math.pi * float(np.mean(samples))
    # S(rho) lies in [0, ln n]
    value = min(max(value, 0.0), math.log(rho.dim))
    note = f"phases from {phase_source} spectrum"
    if bits is not None:
        note += f", rounded to {bits} bits"
    return EntropyEstimate(
        value=value,
        epsilon=epsilon,
        delta=delta,
        shots=shots,
        method=METHOD_QPE,
        kappa_used=kappa,
        note=note,
    )


def functional_kappa(dim: int, epsilon: float) -> int:
    """
    kappa' for the trace functional.

    The larger of ceil(n ln n / epsilon) + 1 and the point where a single
    eigenvalue at 1/kappa' has -lambda ln lambda = epsilon/2 (the lower
    branch of Lambert W), and at least 2.
    """
    _check_unit("epsilon", epsilon)
    by_dimension = math.ceil(dim * math.log(dim) / epsilon) + 1 if dim > 1 else 2
    a = epsilon / 2.0
    by_weight = math.ceil(-special.lambertw(-a, k=-1).real / a)
    return max(by_dimension, by_weight, 2)


def entropy_functional(
    rho: DensityMatrix, epsilon: float, degree_cap: Optional[int] = DEFAULT_DEGREE_CAP
) -> float:
    """
    Deterministic entropy Tr(rho (2 beta) P^MH(rho)) at kappa' from functional_kappa.

    P^MH is close to -ln(x) / (2 beta) above 1/kappa', so each supported
    eigenvalue contributes lambda * 2 beta * P^MH(lambda); kernel
    eigenvalues contribute nothing.

    Args:
        rho: Density matrix of dimension n
        epsilon: Target accuracy in nats
        degree_cap: Limit on the P^MH degree

    Returns:
        Entropy estimate in nats

    Raises:
        ResourceError: If P^MH at kappa' exceeds degree_cap
    """
    if rho.dim == 1:
        return 0.0
    kappa = functional_kappa(rho.dim, epsilon)
    poly, info = _hamiltonian_poly(float(kappa), epsilon / 4.0, degree_cap)
    support = np.clip(rho.eigenvalues[rho.support], 0.0, 1.0)
    values = poly.evaluate(support)
    return float(np.sum(support * 2.0 * info.beta * values))


def heisenberg(operator: np.ndarray, hamiltonian: Optional[np.ndarray], t: float) -> np.ndarray:
    """e^(iHt) O e^(-iHt), or O unchanged without a Hamiltonian."""
    if hamiltonian is None:
        return operator
    evolve = linalg.expm(1j * t * hamiltonian)
    return evolve @ operator @ evolve.conj().T


def correlator(
    rho: DensityMatrix,
    psi_r,
    psi_l,
    s: float,
    t: float,
    hamiltonian_l=None,
    mode: str = "exact",
    epsilon: float = 1e-2,
    degree_cap: Optional[int] = DEFAULT_DEGREE_CAP,
) -> CorrelatorPoint:
    """
    W(s, t) = Tr(rho {rho^(-is) psi_r rho^(is), psi_l(t)}).

    Args:
        rho: Density matrix
        psi_r: Operator flowed in modular time s
        psi_l: Operator evolved in coordinate time t
        s: Modular time
        t: Coordinate time
        hamiltonian_l: If given, psi_l(t) = e^(iHt) psi_l e^(-iHt); else psi_l is used as is
        mode: "exact" flow or the "polynomial" pipeline
        epsilon: Accuracy of W in polynomial mode
        degree_cap: Limit on the P^MH degree in polynomial mode

    Returns:
        CorrelatorPoint

    Raises:
        ShapeError: On any dimension mismatch
    """
    if mode not in CORRELATOR_MODES:
        raise ParameterError(f"mode must be one of {CORRELATOR_MODES}, got {mode!r}")
    right = as_matrix(psi_r)
    left = as_matrix(psi_l)
    check_same_dim(rho.matrix, right, "state and psi_r")
    check_same_dim(rho.matrix, left, "state and psi_l")
    hamiltonian = None
    if hamiltonian_l is not None:
        hamiltonian = as_matrix(hamiltonian_l)
        check_same_dim(rho.matrix, hamiltonian, "state and hamiltonian")
    left_t = heisenberg(left, hamiltonian, t)

    if mode == "exact":
        flowed = exact_flow(rho, right, s)
    else:
        _check_unit("epsilon", epsilon)
        # |Tr(rho {A, B})| <= 2 ||A|| ||B||
        scale = 2.0 * max(1.0, operator_norm(right)) * max(1.0, operator_norm(left_t))
        flowed = approx_flow(rho, right, s, epsilon / scale, degree_cap=degree_cap).approx_operator

    value = complex(np.trace(rho.matrix @ (flowed @ left_t + left_t @ flowed)))
    return CorrelatorPoint(s=s, t=t, value=value)


def _check_tripartite(sigma: DensityMatrix, dims: Sequence[int]) -> Tuple[int, int, int]:
    if len(dims) != 3:
        raise ShapeError(f"expected three subsystem dims (A, B, C), got {list(dims)}")
    d_a, d_b, d_c = (int(d) for d in dims)
    if d_a * d_b * d_c != sigma.dim:
        raise ShapeError(f"dims {list(dims)} multiply to {d_a * d_b * d_c}, state has dimension {sigma.dim}")
    return d_a, d_b, d_c


def flow_state(sigma: DensityMatrix, dims: Sequence[int], t: float) -> DensityMatrix:
    """
    sigma(t) = (rho_AB^(-it) x I_C) sigma (rho_AB^(it) x I_C).

    Raises:
        ShapeError: If dims do not factor the dimension of sigma
    """
    d_a, d_b, d_c = _check_tripartite(sigma, dims)
    layout = (d_a, d_b, d_c)
    tripartite = validate_density(sigma.matrix, sigma.zero_tol, layout)
    rho_ab = reduced_density(tripartite, [0, 1])
    local = np.kron(modular_unitary(rho_ab, -t), np.eye(d_c))
    flowed = local @ sigma.matrix @ local.conj().T
    return validate_density(0.5 * (flowed + flowed.conj().T), sigma.zero_tol, layout)


def entropy_under_flow(sigma: DensityMatrix, dims: Sequence[int], t: float) -> float:
    """S(rho_BC(t)) with rho_BC(t) = Tr_A sigma(t), exact spectral entropy."""
    return von_neumann_entropy(reduced_density(flow_state(sigma, dims, t), [1, 2]))


def chiral_slope(sigma: DensityMatrix, dims: Sequence[int], t1: float, t2: float) -> float:
    """
    3 (S(t2) - S(t1)) / (pi (t2 - t1)).

    Raises:
        ParameterError: If t1 == t2
    """
    if t1 == t2:
        raise ParameterError(f"t1 and t2 must differ, both are {t1}")
    first = entropy_under_flow(sigma, dims, t1)
    second = entropy_under_flow(sigma, dims, t2)
    return 3.0 * (second - first) / (math.pi * (t2 - t1))
