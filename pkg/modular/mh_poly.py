"""
Builders for bounded, parity-definite polynomials.

The sign and rectangle polynomials, the certified log factor, the
normalized modular-Hamiltonian polynomial and the Jacobi-Anger
truncations used for time evolution.
"""

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import fft, special

from modular.chebyshev import (
    ChebyshevSeries,
    certified_log_order,
    damped_log_series,
    evaluate,
    product_parity,
)
from modular.errors import DomainError, ResourceError
from modular.matfun import apply_poly_clenshaw

ADMISSIBILITY_TOL = 1e-9

# Upper limit on DCT sample counts for the rectangle polynomial
MAX_SAMPLES = 1 << 24

# Coefficients past half the sample count must be below this for the DCT to be resolved
ALIAS_TOL = 1e-13

# Largest rectangle accuracy used inside the modular-Hamiltonian polynomial
EPSILON_PRIME_MAX = 0.1

Region = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True, eq=False)
class PolySpec:
    """
    A polynomial given as a scaled product of Chebyshev factors.

    Attributes:
        factors: Chebyshev series whose product (times scale) is the polynomial
        sup_norm_bound: Certified bound on max |P| over [-1, 1]
        target: Description of the approximated function
        valid_region: Intervals where the guarantee holds
        guarantee_epsilon: Certified max error against the target on valid_region
        scale: Constant prefactor
    """

    factors: Tuple[ChebyshevSeries, ...]
    sup_norm_bound: float
    target: str
    valid_region: Region
    guarantee_epsilon: float
    scale: float = 1.0

    @property
    def degree(self) -> int:
        return sum(factor.degree for factor in self.factors)

    @property
    def parity(self) -> str:
        return reduce(product_parity, (factor.parity for factor in self.factors))

    @cached_property
    def series(self) -> ChebyshevSeries:
        """The factors multiplied out; costly for large degrees."""
        product = reduce(lambda left, right: left * right, self.factors)
        return product.scale(self.scale)

    def evaluate(self, x):
        values = self.scale
        for factor in self.factors:
            values = values * evaluate(factor, x)
        return values

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        """Apply to a Hermitian matrix factor by factor with matrix Clenshaw."""
        result = None
        for factor in self.factors:
            applied = apply_poly_clenshaw(matrix, factor)
            result = applied if result is None else result @ applied
        return self.scale * result


@dataclass(frozen=True)
class NormalizationInfo:
    """Rescaling data of the modular-Hamiltonian polynomial."""

    beta: float
    kappa: float
    epsilon_prime: float
    well_bound: float = 0.0

    def __post_init__(self):
        if not math.isclose(self.beta, math.log(2.0 * self.kappa), rel_tol=1e-12):
            raise DomainError(f"beta must equal ln(2 kappa), got {self.beta} for kappa {self.kappa}")
        if not self.epsilon_prime > 0.0:
            raise DomainError(f"epsilon_prime must be positive, got {self.epsilon_prime}")


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of a dense-grid admissibility audit."""

    grid_max: float
    points: int
    parity: str
    passed: bool


def _check_epsilon(epsilon: float, name: str = "epsilon") -> None:
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"{name} must be in (0, 1), got {epsilon}")


def chebyshev_grid(points: int) -> np.ndarray:
    """Chebyshev points of the first kind plus both endpoints, ascending."""
    nodes = np.cos(np.pi * (np.arange(points) + 0.5) / points)
    return np.concatenate(([-1.0], nodes[::-1], [1.0]))


def audit_admissibility(poly: PolySpec, points: Optional[int] = None) -> AdmissibilityReport:
    """
    Check max |P| <= 1 + 1e-9 on a Chebyshev-spaced grid and definite parity.

    Args:
        poly: Polynomial to audit
        points: Grid size, default max(4 * degree, 64)

    Returns:
        AdmissibilityReport
    """
    count = points if points is not None else max(4 * poly.degree, 64)
    grid = chebyshev_grid(count)
    grid_max = float(np.max(np.abs(poly.evaluate(grid))))
    parity = poly.parity
    passed = grid_max <= 1.0 + ADMISSIBILITY_TOL and parity in ("even", "odd")
    return AdmissibilityReport(grid_max=grid_max, points=grid.size, parity=parity, passed=passed)


def _erf_sharpness(half_gap: float, epsilon: float) -> float:
    # erfc(k * half_gap) = epsilon
    return float(special.erfcinv(epsilon)) / half_gap


def _truncate_by_tail(coeffs: np.ndarray, tolerance: float) -> Tuple[int, float]:
    """Smallest cut index whose dropped absolute coefficient mass is within tolerance."""
    magnitudes = np.abs(coeffs)
    # tails[n] = sum of |c_j| for j > n
    tails = np.concatenate((np.cumsum(magnitudes[::-1])[::-1][1:], [0.0]))
    cut = int(np.argmax(tails <= tolerance))
    return cut, float(tails[cut])


def sign_poly(gap: float, epsilon: float) -> PolySpec:
    """
    Odd polynomial approximating sign(x) away from a gap around 0.

    Built from the Chebyshev expansion of erf(k x), whose coefficients are
    2k/sqrt(pi) (-1)^j (I_j + I_j+1)(k^2/2) e^(-k^2/2) / (2j+1) on T_2j+1.

    Args:
        gap: Width of the excluded interval around 0, in (0, 2)
        epsilon: Accuracy for |x| >= gap/2

    Returns:
        PolySpec with |P| <= 1 on [-1, 1]
    """
    if not 0.0 < gap < 2.0:
        raise DomainError(f"gap must be in (0, 2), got {gap}")
    _check_epsilon(epsilon)

    k = _erf_sharpness(gap / 2.0, epsilon / 2.0)
    z = k * k / 2.0
    tolerance = epsilon / 4.0
    j_max = int(math.ceil(k * math.sqrt(math.log(1e3 / tolerance)))) + 8
    j = np.arange(j_max + 2)
    bessel = special.ive(j, z)
    signs = np.where(j[:-1] % 2 == 0, 1.0, -1.0)
    odd = 2.0 * k / math.sqrt(math.pi) * signs * (bessel[:-1] + bessel[1:]) / (2 * j[:-1] + 1)

    cut, tail = _truncate_by_tail(odd, tolerance)
    coeffs = np.zeros(2 * cut + 2)
    coeffs[1::2] = odd[:cut + 1] / (1.0 + tail)
    series = ChebyshevSeries(coeffs, "odd")

    half = gap / 2.0
    error = float(special.erfc(k * half)) + 2.0 * tail
    return PolySpec(
        factors=(series,),
        sup_norm_bound=1.0,
        target="sign(x)",
        valid_region=((-1.0, -half), (half, 1.0)),
        guarantee_epsilon=error,
    )


def chebyshev_coefficients(func: Callable[[np.ndarray], np.ndarray], samples: int) -> np.ndarray:
    """Chebyshev coefficients of func from samples at first-kind nodes (type-II DCT)."""
    nodes = np.cos(np.pi * (np.arange(samples) + 0.5) / samples)
    coeffs = fft.dct(func(nodes), type=2) / samples
    coeffs[0] /= 2.0
    return coeffs


def rect_poly(kappa: float, epsilon_prime: float) -> PolySpec:
    """
    Even polynomial close to 1 for |x| >= 1/kappa and to 0 for |x| <= 1/(2 kappa).

    The target is 1 - (erf(k(x + c)) - erf(k(x - c)))/2 with center
    c = 3/(4 kappa) and transition half-width 1/(4 kappa): two shifted
    error-function steps.

    Args:
        kappa: Inverse spectral floor, greater than 1
        epsilon_prime: Accuracy on the plateau and in the well

    Returns:
        PolySpec with |P| <= 1 on [-1, 1]
    """
    if not kappa > 1.0:
        raise DomainError(f"kappa must be greater than 1, got {kappa}")
    _check_epsilon(epsilon_prime, "epsilon_prime")

    width = 1.0 / (4.0 * kappa)
    center = 3.0 / (4.0 * kappa)
    k = _erf_sharpness(width, epsilon_prime / 2.0)
    tolerance = epsilon_prime / 4.0

    def step(x: np.ndarray) -> np.ndarray:
        return 1.0 - 0.5 * (special.erfc(k * (x - center)) - special.erfc(k * (x + center)))

    estimate = 2.0 * k * math.sqrt(math.log(4.0 / epsilon_prime)) + 16.0
    samples = 1 << int(math.ceil(math.log2(4.0 * estimate + 64.0)))
    while True:
        if samples > MAX_SAMPLES:
            raise ResourceError(
                f"rectangle polynomial for kappa={kappa} needs more than {MAX_SAMPLES} samples",
                degree=samples // 2,
            )
        coeffs = chebyshev_coefficients(step, samples)
        if np.max(np.abs(coeffs[samples // 2:])) <= ALIAS_TOL:
            break
        samples *= 2

    coeffs[1::2] = 0.0
    even_cut, tail = _truncate_by_tail(coeffs[0::2], tolerance)
    trimmed = np.zeros(2 * even_cut + 1)
    trimmed[0::2] = coeffs[0::2][:even_cut + 1] / (1.0 + tail)
    series = ChebyshevSeries(trimmed, "even")

    error = float(special.erfc(k * width)) + 2.0 * tail
    plateau = 1.0 / kappa
    well = 1.0 / (2.0 * kappa)
    return PolySpec(
        factors=(series,),
        sup_norm_bound=1.0,
        target=f"rect: 1 for |x| >= {plateau:.6g}, 0 for |x| <= {well:.6g}",
        valid_region=((-1.0, -plateau), (-well, well), (plateau, 1.0)),
        guarantee_epsilon=error,
    )


def log_poly(kappa: float, epsilon: float) -> PolySpec:
    """Certified even approximation of ln|x| on 1/kappa <= |x| <= 1."""
    plan = certified_log_order(kappa, epsilon)
    series = damped_log_series(plan.order, plan.damping)
    # 0.5 ln(x^2 + eta^2) lies in [ln eta, 0.5 ln(1 + eta^2)] on [-1, 1]
    eta = plan.eta
    sup = max(abs(math.log(eta)), 0.5 * math.log1p(eta * eta)) + plan.tail_bound
    plateau = 1.0 / kappa
    return PolySpec(
        factors=(series,),
        sup_norm_bound=sup,
        target="ln|x|",
        valid_region=((-1.0, -plateau), (plateau, 1.0)),
        guarantee_epsilon=plan.error_bound,
    )


def modular_hamiltonian_poly(
    kappa: float, epsilon: float, degree_cap: Optional[int] = None
) -> Tuple[PolySpec, NormalizationInfo]:
    """
    Normalized modular-Hamiltonian polynomial P^MH = -P^log P^rect / (2 beta).

    Args:
        kappa: Inverse spectral floor, greater than 1
        epsilon: Log-scale accuracy; the guarantee is epsilon/(2 beta)
        degree_cap: Optional limit on the total degree

    Returns:
        Tuple of (PolySpec, NormalizationInfo)

    Raises:
        ResourceError: If the projected degree exceeds degree_cap
    """
    if not kappa > 1.0:
        raise DomainError(f"kappa must be greater than 1, got {kappa}")
    _check_epsilon(epsilon)

    beta = math.log(2.0 * kappa)
    log_epsilon = epsilon / 2.0
    plan = certified_log_order(kappa, log_epsilon)
    projected = 2 * plan.order
    if degree_cap is not None and projected > degree_cap:
        raise ResourceError(
            f"log polynomial degree {projected} for kappa={kappa:.6g}, epsilon={epsilon:.3g} "
            f"exceeds degree cap {degree_cap}",
            degree=projected,
            cap=degree_cap,
        )

    log_part = log_poly(kappa, log_epsilon)
    epsilon_prime = 2.0 * epsilon / (5.0 * math.log(kappa))
    if plan.order > 0:
        epsilon_prime = min(epsilon_prime, beta / plan.order)
    epsilon_prime = min(epsilon_prime, EPSILON_PRIME_MAX)
    rect = rect_poly(kappa, epsilon_prime)

    degree = log_part.degree + rect.degree
    if degree_cap is not None and degree > degree_cap:
        raise ResourceError(
            f"modular Hamiltonian degree {degree} exceeds degree cap {degree_cap}",
            degree=degree,
            cap=degree_cap,
        )

    rect_error = rect.guarantee_epsilon
    log_error = log_part.guarantee_epsilon
    # |P^log P^rect - ln x| <= log_error + |P^log| |1 - P^rect| on the plateau
    plateau_error = log_error + (math.log(kappa) + log_error) * rect_error
    # |x| >= 1/(2 kappa): |P^log| <= beta + tail; inside the well |P^rect| <= rect_error
    outer = max(beta, 0.5 * math.log1p(plan.eta ** 2)) + plan.tail_bound
    well = log_part.sup_norm_bound * rect_error
    sup = max(outer, well) / (2.0 * beta)

    poly = PolySpec(
        factors=(log_part.factors[0], rect.factors[0]),
        sup_norm_bound=sup,
        target=f"-ln|x| / (2 ln(2 kappa)), kappa={kappa:.6g}",
        valid_region=((-1.0, -1.0 / kappa), (1.0 / kappa, 1.0)),
        guarantee_epsilon=plateau_error / (2.0 * beta),
        scale=-1.0 / (2.0 * beta),
    )
    info = NormalizationInfo(
        beta=beta, kappa=kappa, epsilon_prime=epsilon_prime, well_bound=well / (2.0 * beta)
    )
    return poly, info


def bessel_tail_bound(order: int, t_eff: float) -> float:
    """Bound 2 sum_{k > R} (|t|/2)^k / k! on the dropped Jacobi-Anger terms."""
    tau = abs(t_eff) / 2.0
    if tau == 0.0:
        return 0.0
    if tau >= order + 2:
        return math.inf
    log_term = (order + 1) * math.log(tau) - math.lgamma(order + 2)
    return 2.0 * math.exp(log_term) / (1.0 - tau / (order + 2))


def trig_polys(t_eff: float, epsilon: float) -> Tuple[PolySpec, PolySpec]:
    """
    Jacobi-Anger truncations of cos(t_eff x) and sin(t_eff x).

    cos(t x) = J_0(t) + 2 sum (-1)^k J_2k(t) T_2k(x) and
    sin(t x) = 2 sum (-1)^k J_2k+1(t) T_2k+1(x), cut at the smallest order R
    whose Bessel tail bound is at most epsilon/4 and rescaled by the tail so
    both stay within [-1, 1]. Each component is then within epsilon/2.

    Args:
        t_eff: Rescaled evolution time
        epsilon: Accuracy budget for the pair

    Returns:
        Tuple of (cos_part, sin_part)
    """
    _check_epsilon(epsilon)
    tolerance = epsilon / 4.0
    order = 0
    while bessel_tail_bound(order, t_eff) > tolerance:
        order += 1
    tail = bessel_tail_bound(order, t_eff)

    k = np.arange(order + 1)
    bessel = special.jv(k, t_eff)
    # (-1)^(k//2) for both the even and the odd orders
    signs = np.where((k // 2) % 2 == 0, 1.0, -1.0)
    weights = 2.0 * signs * bessel / (1.0 + tail)

    cos_coeffs = np.zeros(order + 1)
    cos_coeffs[0::2] = weights[0::2]
    cos_coeffs[0] = bessel[0] / (1.0 + tail)
    sin_coeffs = np.zeros(order + 1)
    sin_coeffs[1::2] = weights[1::2]

    error = 2.0 * tail
    region = ((-1.0, 1.0),)
    cos_part = PolySpec(
        factors=(ChebyshevSeries(cos_coeffs, "even"),),
        sup_norm_bound=1.0,
        target=f"cos({t_eff:.6g} x)",
        valid_region=region,
        guarantee_epsilon=error,
    )
    sin_part = PolySpec(
        factors=(ChebyshevSeries(sin_coeffs, "odd"),),
        sup_norm_bound=1.0,
        target=f"sin({t_eff:.6g} x)",
        valid_region=region,
        guarantee_epsilon=error,
    )
    return cos_part, sin_part
