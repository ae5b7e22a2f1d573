"""
Chebyshev-T series machinery.

Series representation, stable evaluation (Clenshaw and term-by-term),
the logarithm expansion ln|x| = -ln 2 + sum (-1)^(n-1) T_2n(x) / n and its
truncation bounds.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from modular.errors import DomainError, ParameterError

PARITIES = ("even", "odd", "none")

# Evaluation points may overshoot [-1, 1] by rounding
DOMAIN_TOL = 1e-12

# Above this degree, small point sets are summed term by term
DIRECT_SUM_DEGREE = 20_000
DIRECT_SUM_POINTS = 256
DIRECT_BLOCK_ELEMENTS = 1 << 22

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class ChebyshevSeries:
    """Coefficients of sum c_n T_n(x) with a declared parity."""

    coefficients: np.ndarray
    parity: str = "none"

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float).ravel()
        if self.parity not in PARITIES:
            raise ParameterError(f"parity must be one of {PARITIES}, got {self.parity!r}")
        if not np.all(np.isfinite(coeffs)):
            raise ParameterError("Chebyshev coefficients must be finite")
        if self.parity == "even" and np.any(coeffs[1::2] != 0.0):
            raise ParameterError("even series has a nonzero odd-index coefficient")
        if self.parity == "odd" and np.any(coeffs[0::2] != 0.0):
            raise ParameterError("odd series has a nonzero even-index coefficient")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        """Highest index with a nonzero coefficient (0 for the zero polynomial)."""
        nonzero = np.flatnonzero(self.coefficients)
        return int(nonzero[-1]) if nonzero.size else 0

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return evaluate(self, x)

    def scale(self, factor: float) -> "ChebyshevSeries":
        return ChebyshevSeries(self.coefficients * factor, self.parity)

    def __mul__(self, other: "ChebyshevSeries") -> "ChebyshevSeries":
        product = npcheb.chebmul(self.coefficients, other.coefficients)
        parity = product_parity(self.parity, other.parity)
        if parity == "even":
            product[1::2] = 0.0
        elif parity == "odd":
            product[0::2] = 0.0
        return ChebyshevSeries(product, parity)


class LogOrder(NamedTuple):
    """Order and damping of a certified logarithm expansion."""

    order: int
    damping: float
    bias_bound: float
    tail_bound: float

    @property
    def error_bound(self) -> float:
        return self.bias_bound + self.tail_bound

    @property
    def eta(self) -> float:
        """Smoothing length: the damped series sums to 0.5 ln(x^2 + eta^2)."""
        return (1.0 - self.damping) / (2.0 * math.sqrt(self.damping))


def product_parity(first: str, second: str) -> str:
    """Parity of a product of two series."""
    if first == "none" or second == "none":
        return "none"
    return "even" if first == second else "odd"


def _check_domain(x: np.ndarray) -> np.ndarray:
    if x.size and float(np.max(np.abs(x))) > 1.0 + DOMAIN_TOL:
        raise DomainError(
            f"Chebyshev evaluation requires |x| <= 1, got max |x| = {float(np.max(np.abs(x))):.17g}"
        )
    return np.clip(x, -1.0, 1.0)


def _clenshaw(coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    if coeffs.size == 0:
        return np.zeros_like(y)
    b1 = np.zeros_like(y)
    b2 = np.zeros_like(y)
    two_y = 2.0 * y
    for c_k in coeffs[:0:-1]:
        b1, b2 = two_y * b1 - b2 + c_k, b1
    return y * b1 - b2 + coeffs[0]


def clenshaw_eval(series: ChebyshevSeries, x: ArrayLike) -> ArrayLike:
    """
    Evaluate a series by the backward Clenshaw recurrence.

    Even series run the recurrence in y = T_2(x) over half the coefficients,
    using T_2n(x) = T_n(T_2(x)).

    Args:
        series: Series to evaluate
        x: Point or array of points in [-1, 1]

    Returns:
        Value(s) with the shape of x

    Raises:
        DomainError: If any |x| > 1
    """
    points = _check_domain(np.asarray(x, dtype=float))
    if series.parity == "even":
        values = _clenshaw(series.coefficients[0::2], 2.0 * points * points - 1.0)
    else:
        values = _clenshaw(series.coefficients, points)
    return float(values) if np.ndim(x) == 0 else values


def direct_eval(series: ChebyshevSeries, x: ArrayLike) -> ArrayLike:
    """Term-by-term summation of c_n cos(n arccos x), in blocks."""
    points = _check_domain(np.asarray(x, dtype=float))
    theta = np.arccos(points).ravel()
    coeffs = series.coefficients
    indices = np.flatnonzero(coeffs)
    values = np.zeros_like(theta)
    block = max(1, DIRECT_BLOCK_ELEMENTS // max(theta.size, 1))
    for start in range(0, indices.size, block):
        chunk = indices[start:start + block]
        values += np.cos(np.outer(theta, chunk)) @ coeffs[chunk]
    values = values.reshape(points.shape)
    return float(values) if np.ndim(x) == 0 else values


def evaluate(series: ChebyshevSeries, x: ArrayLike) -> ArrayLike:
    """Evaluate with Clenshaw, or term by term for huge degree at few points."""
    if series.degree > DIRECT_SUM_DEGREE and np.size(x) <= DIRECT_SUM_POINTS:
        return direct_eval(series, x)
    return clenshaw_eval(series, x)


def log_series_coefficients(N: int) -> ChebyshevSeries:
    """
    Partial sum f_N of the Chebyshev expansion of ln|x|.

    Args:
        N: Number of T_2n terms

    Returns:
        Even series with c_0 = -ln 2 and c_2n = (-1)^(n-1)/n for 1 <= n <= N
    """
    if N < 0:
        raise ParameterError(f"N must be non-negative, got {N}")
    coeffs = np.zeros(2 * N + 1)
    coeffs[0] = -math.log(2.0)
    n = np.arange(1, N + 1)
    coeffs[2::2] = np.where(n % 2 == 1, 1.0, -1.0) / n
    return ChebyshevSeries(coeffs, "even")


def damped_log_series(N: int, damping: float) -> ChebyshevSeries:
    """
    Abel-damped log expansion truncated after N terms.

    The c_2n are multiplied by r^n and the constant becomes -ln 2 - ln(r)/2,
    so the untruncated sum is exactly 0.5 ln(x^2 + eta^2) with
    eta = (1 - r) / (2 sqrt(r)).

    Args:
        N: Number of T_2n terms
        damping: Abel factor r in (0, 1]

    Returns:
        Even ChebyshevSeries of degree 2N
    """
    if N < 0:
        raise ParameterError(f"N must be non-negative, got {N}")
    if not 0.0 < damping <= 1.0:
        raise DomainError(f"damping must be in (0, 1], got {damping}")
    coeffs = np.zeros(2 * N + 1)
    coeffs[0] = -math.log(2.0) - 0.5 * math.log(damping)
    n = np.arange(1, N + 1)
    signs = np.where(n % 2 == 1, 1.0, -1.0)
    coeffs[2::2] = signs * np.exp(n * math.log(damping)) / n
    return ChebyshevSeries(coeffs, "even")


def _check_kappa(kappa: float) -> None:
    if not kappa > 1.0:
        raise DomainError(f"kappa must be greater than 1, got {kappa}")


def _contraction(kappa: float) -> float:
    # |1 - 2/kappa^2|; below sqrt(2) the base is negative
    return abs(1.0 - 2.0 / (kappa * kappa))


def degree_for_log(kappa: float, epsilon: float) -> int:
    """
    Smallest N with kappa^2 (1 - 2/kappa^2)^(N+1) / 2 <= epsilon.

    Args:
        kappa: Inverse spectral floor, greater than 1
        epsilon: Target accuracy, positive

    Returns:
        N = ceil(ln(kappa^2 / (2 epsilon)) / -ln(1 - 2/kappa^2)) - 1, floored at 0
    """
    _check_kappa(kappa)
    if not epsilon > 0.0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    q = _contraction(kappa)
    if q == 0.0:
        return 0
    ratio = math.log(kappa * kappa / (2.0 * epsilon)) / -math.log(q)
    return max(0, math.ceil(ratio) - 1)


def truncation_error_bound(kappa: float, N: int) -> float:
    """Closed-form bound kappa^2 (1 - 2/kappa^2)^(N+1) / 2."""
    _check_kappa(kappa)
    return kappa * kappa * _contraction(kappa) ** (N + 1) / 2.0


def partial_sum_error_bound(kappa: float, N: int) -> float:
    """
    Bound on |f_N(x) - ln|x|| for |x| >= 1/kappa.

    Summation by parts against the Dirichlet kernel gives
    1 / ((N + 1) |x|), hence kappa / (N + 1) on the plateau.
    """
    _check_kappa(kappa)
    return kappa / (N + 1.0)


def damped_tail_bound(N: int, damping: float) -> float:
    """Uniform bound r^(N+1) / ((N+1)(1-r)) on the dropped terms of the damped series."""
    shortfall = 1.0 - damping
    return math.exp((N + 1) * math.log(damping)) / ((N + 1) * shortfall)


def certified_log_order(kappa: float, epsilon: float) -> LogOrder:
    """
    Order and damping of a log expansion accurate to epsilon on |x| >= 1/kappa.

    The damping is r = 1 - 2/kappa^2, under which the dropped terms obey the
    closed-form bound of truncation_error_bound divided by N + 1. It is
    raised towards 1 when its smoothing bias 0.5 ln(1 + eta^2 kappa^2) would
    exceed epsilon/2. N is the smallest order whose tail bound is at most
    epsilon/2.

    Args:
        kappa: Inverse spectral floor, greater than 1
        epsilon: Target accuracy in (0, 1)

    Returns:
        LogOrder with the order, damping and both error components
    """
    _check_kappa(kappa)
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must be in (0, 1), got {epsilon}")

    # Largest eta with 0.5 ln(1 + eta^2 kappa^2) <= epsilon / 2
    eta = math.sqrt(math.expm1(epsilon)) / kappa
    # r = u^2 with u = sqrt(eta^2 + 1) - eta; 1 - u written to avoid cancellation
    one_minus_u = eta - eta * eta / (math.sqrt(eta * eta + 1.0) + 1.0)
    shortfall = min(2.0 / (kappa * kappa), one_minus_u * (2.0 - one_minus_u))
    damping = 1.0 - shortfall
    log_r = math.log1p(-shortfall)

    # Smallest M = N + 1 >= 1 with M ln r - ln M - ln(1-r) <= ln(epsilon/2)
    target = math.log(epsilon / 2.0)

    def excess(m: int) -> float:
        return m * log_r - math.log(m) - math.log(shortfall) - target

    high = max(1, math.ceil((target + math.log(shortfall)) / log_r))
    while excess(high) > 0.0:
        high *= 2
    low = 1
    if excess(low) > 0.0:
        while high - low > 1:
            middle = (low + high) // 2
            if excess(middle) > 0.0:
                low = middle
            else:
                high = middle
    else:
        high = low
    order = high - 1

    eta_sq = shortfall * shortfall / (4.0 * damping)
    bias = 0.5 * math.log1p(eta_sq * kappa * kappa)
    tail = damped_tail_bound(order, damping)
    return LogOrder(order=order, damping=damping, bias_bound=bias, tail_bound=tail)
