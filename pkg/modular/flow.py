"""
Modular flow of operators and states.

The exact flow O(t) = rho^(-it) O rho^(it), the simulated polynomial
pipeline that approximates it with a block-encoded rho (modular-Hamiltonian
polynomial, then cosine and sine polynomials), the query ledger and the
flow of one half of a purified state.

The approximate unitary is U~ = cos_part(H~) - i sin_part(H~) with
H~ = P^MH(rho) close to -ln(rho) / (2 beta), so U~ approximates rho^(it)
and U~^dagger O U~ approximates rho^(-it) O rho^(it).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Tuple

import numpy as np

from modular.encoding import (
    DensityMatrix,
    PureState,
    modular_unitary,
    reduced_density,
    spectral_floor,
)
from modular.errors import DomainError, ShapeError
from modular.matfun import as_matrix, check_same_dim, hermitize, operator_norm
from modular.mh_poly import NormalizationInfo, PolySpec, modular_hamiltonian_poly, trig_polys

C_SPLIT = 2
DEFAULT_DEGREE_CAP = 1_000_000

# Polynomials need kappa > 1; pure and one-dimensional states use this floor
KAPPA_FLOOR = 2.0

# Purified flow: epsilon = PURIFIED_CONSTANT * delta^3 / (d^2 |t|)
PURIFIED_CONSTANT = 1.0 / 32.0


@dataclass(frozen=True)
class QueryLedger:
    """
    Degrees of the built polynomials and the closed-form query bound.

    total_queries = (log_poly_degree + rect_poly_degree) * trig_degree;
    bound_constant is total_queries / predicted_bound.
    """

    log_poly_degree: int
    rect_poly_degree: int
    trig_degree: int
    total_queries: int
    predicted_bound: int
    bound_constant: float

    @property
    def hamiltonian_degree(self) -> int:
        return self.log_poly_degree + self.rect_poly_degree


@dataclass(frozen=True, eq=False)
class FlowPolynomials:
    """Everything the approximate flow applies, built once per (kappa, budget, t)."""

    hamiltonian: PolySpec
    normalization: NormalizationInfo
    cos_part: PolySpec
    sin_part: PolySpec
    t_eff: float
    budget: float

    @property
    def trig_degree(self) -> int:
        return max(self.cos_part.degree, self.sin_part.degree)


@dataclass(frozen=True, eq=False)
class FlowResult:
    """Approximate and exact flowed operator with the measured error."""

    approx_operator: np.ndarray
    exact_operator: np.ndarray
    error_norm: float
    query_ledger: QueryLedger
    kappa: float
    epsilon: float
    t: float
    error_budget: float
    rescale_factor: float = 1.0
    warnings: Tuple[str, ...] = ()

    @property
    def parameters(self) -> Tuple[float, float, float]:
        return self.kappa, self.epsilon, self.t

    @property
    def within_epsilon(self) -> bool:
        return self.error_norm < self.epsilon * self.rescale_factor


@dataclass(frozen=True, eq=False)
class PurifiedFlowResult:
    """Flowed purification, the a-priori bound and the measured distance."""

    state: PureState
    bound: float
    distance: float
    kappa: Optional[float]
    epsilon: float
    query_ledger: Optional[QueryLedger]

    def __iter__(self) -> Iterator:
        yield self.state
        yield self.bound


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must be in (0, 1), got {epsilon}")


def unitary_budget(epsilon: float) -> float:
    """Largest unitary error d with d (2 + d) < epsilon, taken as epsilon / (2 + epsilon)."""
    return epsilon / (2.0 + epsilon)


@lru_cache(maxsize=64)
def build_flow_polynomials(
    kappa: float, budget: float, t: float, degree_cap: Optional[int] = DEFAULT_DEGREE_CAP
) -> FlowPolynomials:
    """
    Build P^MH and the trig pair so that ||U~ - rho^(it)|| <= budget on |x| >= 1/kappa.

    Half the budget goes to the cosine and sine truncation; the other half
    bounds |t_eff| times the P^MH error, so P^MH gets budget / (2 max(|t|, 1)).

    Raises:
        ResourceError: If P^MH would exceed degree_cap
    """
    if not 0.0 < budget < 1.0:
        raise DomainError(f"unitary error budget must be in (0, 1), got {budget}")
    epsilon_hs = budget / C_SPLIT
    epsilon_mh = budget / (C_SPLIT * max(abs(t), 1.0))
    hamiltonian, normalization = modular_hamiltonian_poly(kappa, epsilon_mh, degree_cap)
    t_eff = 2.0 * normalization.beta * t
    cos_part, sin_part = trig_polys(t_eff, epsilon_hs)
    return FlowPolynomials(
        hamiltonian=hamiltonian,
        normalization=normalization,
        cos_part=cos_part,
        sin_part=sin_part,
        t_eff=t_eff,
        budget=budget,
    )


def predicted_queries(kappa: float, epsilon: float, t: float) -> int:
    """
    Closed-form query bound with unit constants.

    kappa^2 ln(kappa^2/epsilon) (|t| ln kappa + L / ln(e + L / (|t| ln kappa))),
    L = ln(1/epsilon); the second factor is taken as 1 at t = 0.
    """
    first = kappa * kappa * math.log(kappa * kappa / epsilon)
    rotation = abs(t) * math.log(kappa)
    if rotation == 0.0:
        second = 1.0
    else:
        accuracy = math.log(1.0 / epsilon)
        second = rotation + accuracy / math.log(math.e + accuracy / rotation)
    return int(math.ceil(first * second))


def _ledger(polys: FlowPolynomials, kappa: float, epsilon: float, t: float) -> QueryLedger:
    log_degree, rect_degree = (factor.degree for factor in polys.hamiltonian.factors)
    trig_degree = polys.trig_degree
    total = (log_degree + rect_degree) * trig_degree
    predicted = predicted_queries(kappa, epsilon, t)
    return QueryLedger(
        log_poly_degree=log_degree,
        rect_poly_degree=rect_degree,
        trig_degree=trig_degree,
        total_queries=total,
        predicted_bound=predicted,
        bound_constant=total / predicted,
    )


def query_count(
    kappa: float, epsilon: float, t: float, degree_cap: Optional[int] = DEFAULT_DEGREE_CAP
) -> QueryLedger:
    """
    Query ledger of the flow at (kappa, epsilon, t) without touching matrices.

    Args:
        kappa: Inverse spectral floor, greater than 1
        epsilon: Operator-norm accuracy of the flowed operator
        t: Modular time
        degree_cap: Limit on the P^MH degree

    Returns:
        QueryLedger
    """
    if not kappa > 1.0:
        raise DomainError(f"kappa must be greater than 1, got {kappa}")
    _check_epsilon(epsilon)
    polys = build_flow_polynomials(float(kappa), unitary_budget(epsilon), float(t), degree_cap)
    return _ledger(polys, kappa, epsilon, t)


def approx_modular_unitary(matrix: np.ndarray, polys: FlowPolynomials) -> np.ndarray:
    """U~ = cos_part(H~) - i sin_part(H~) with H~ = P^MH(matrix), by matrix Clenshaw."""
    h = hermitize(polys.hamiltonian.apply(matrix))
    return polys.cos_part.apply(h) - 1j * polys.sin_part.apply(h)


def exact_flow(rho: DensityMatrix, operator, t: float) -> np.ndarray:
    """
    rho^(-it) O rho^(it), with the phase taken on the support of rho only.

    Raises:
        ShapeError: If O and rho differ in dimension
    """
    o = as_matrix(operator)
    check_same_dim(rho.matrix, o, "state and operator")
    u = modular_unitary(rho, t)
    return u.conj().T @ o @ u


def _resolve_kappa(rho: DensityMatrix, kappa_override: Optional[float]) -> Tuple[float, list]:
    warnings = []
    if kappa_override is None:
        kappa = spectral_floor(rho)
    else:
        if not kappa_override > 1.0:
            raise DomainError(f"kappa must be greater than 1, got {kappa_override}")
        kappa = float(kappa_override)
        eigenvalues = rho.eigenvalues
        below = eigenvalues[(eigenvalues > rho.zero_tol) & (eigenvalues < 1.0 / kappa)]
        if below.size:
            warnings.append(
                f"{below.size} eigenvalue(s) of rho lie in ({rho.zero_tol:g}, 1/kappa); "
                f"smallest {float(below.min()):.3e}, the flow guarantee does not cover them"
            )
    if kappa < KAPPA_FLOOR:
        kappa = KAPPA_FLOOR
    return kappa, warnings


def approx_flow(
    rho: DensityMatrix,
    operator,
    t: float,
    epsilon: float,
    kappa_override: Optional[float] = None,
    degree_cap: Optional[int] = DEFAULT_DEGREE_CAP,
) -> FlowResult:
    """
    Approximate the modular flow through the polynomial pipeline.

    Args:
        rho: Validated density matrix
        operator: Square matrix of the same dimension
        t: Modular time
        epsilon: Target operator-norm error for ||O|| <= 1
        kappa_override: Use this kappa instead of the spectral floor of rho
        degree_cap: Limit on the P^MH degree

    Returns:
        FlowResult with the approximate and exact operators and the ledger

    Raises:
        ShapeError: If O and rho differ in dimension
        ResourceError: If the polynomial degree exceeds degree_cap
    """
    _check_epsilon(epsilon)
    o = as_matrix(operator)
    check_same_dim(rho.matrix, o, "state and operator")

    kappa, warnings = _resolve_kappa(rho, kappa_override)

    norm = operator_norm(o)
    rescale = 1.0
    if norm > 1.0:
        rescale = norm
        warnings.append(f"operator norm {norm:.6g} exceeds 1; flowed O/{norm:.6g} and rescaled the result")

    budget = unitary_budget(epsilon)
    polys = build_flow_polynomials(float(kappa), budget, float(t), degree_cap)
    u = approx_modular_unitary(rho.matrix, polys)
    approx = rescale * (u.conj().T @ (o / rescale) @ u)
    exact = exact_flow(rho, o, t)

    return FlowResult(
        approx_operator=approx,
        exact_operator=exact,
        error_norm=operator_norm(approx - exact),
        query_ledger=_ledger(polys, kappa, epsilon, t),
        kappa=kappa,
        epsilon=epsilon,
        t=t,
        error_budget=rescale * budget * (2.0 + budget),
        rescale_factor=rescale,
        warnings=tuple(warnings),
    )


def purified_bound(dim: int, t: float, delta: float) -> Tuple[float, float, float]:
    """
    Accuracy, kappa and distance bound for the purified flow.

    epsilon = delta^3 / (32 d^2 |t|), kappa = (d / (|t| epsilon))^(2/3) and the
    bound 3 d^(2/3) (|t| epsilon)^(1/3), which equals 3 delta / 32^(1/3) < delta.

    Returns:
        Tuple of (epsilon, kappa, bound)
    """
    scale = abs(t)
    epsilon = PURIFIED_CONSTANT * delta ** 3 / (dim * dim * scale)
    kappa = (dim / (scale * epsilon)) ** (2.0 / 3.0)
    bound = 3.0 * dim ** (2.0 / 3.0) * (scale * epsilon) ** (1.0 / 3.0)
    return epsilon, kappa, bound


def purified_flow(
    psi: PureState, t: float, delta: float, degree_cap: Optional[int] = DEFAULT_DEGREE_CAP
) -> PurifiedFlowResult:
    """
    Prepare (rho_A^(it) x I)|psi> with the polynomial pipeline on the A factor.

    kappa is the smaller of the chosen (d/(|t| epsilon))^(2/3) and the spectral
    floor of rho_A. Eigenvalues of rho_A below 1/kappa carry total weight at
    most d/kappa, which is what the distance bound charges for them; the
    support gets a sixth of the bound as its unitary error budget.

    Args:
        psi: Bipartite pure state, A first
        t: Modular time
        delta: Target distance in (0, 1)
        degree_cap: Limit on the P^MH degree

    Returns:
        PurifiedFlowResult, unpacking as (state, bound)

    Raises:
        ShapeError: If psi is not bipartite
        ResourceError: If the required degree exceeds degree_cap
    """
    if len(psi.subsystem_dims) != 2:
        raise ShapeError(f"purified flow needs a bipartite state, got dims {list(psi.subsystem_dims)}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0, 1), got {delta}")

    if t == 0:
        return PurifiedFlowResult(
            state=psi, bound=0.0, distance=0.0, kappa=None, epsilon=0.0, query_ledger=None
        )

    dim = psi.subsystem_dims[0]
    epsilon, kappa_chosen, bound = purified_bound(dim, t, delta)
    rho_a = reduced_density(psi, [0])
    kappa = max(min(kappa_chosen, spectral_floor(rho_a)), KAPPA_FLOOR)

    support_budget = bound / 6.0
    polys = build_flow_polynomials(float(kappa), support_budget, float(t), degree_cap)
    u = approx_modular_unitary(rho_a.matrix, polys)

    amplitudes = psi.as_bipartite()
    flowed = (u @ amplitudes).reshape(-1)
    flowed = flowed / np.linalg.norm(flowed)
    exact = (modular_unitary(rho_a, t) @ amplitudes).reshape(-1)

    return PurifiedFlowResult(
        state=PureState(flowed, psi.subsystem_dims),
        bound=bound,
        distance=float(np.linalg.norm(flowed - exact)),
        kappa=kappa,
        epsilon=epsilon,
        query_ledger=_ledger(polys, kappa, epsilon, t),
    )
