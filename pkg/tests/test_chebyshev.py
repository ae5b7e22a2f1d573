import math

import numpy as np
import pytest
from numpy.polynomial import chebyshev as npcheb

from modular.chebyshev import (
    ChebyshevSeries,
    LogOrder,
    certified_log_order,
    clenshaw_eval,
    damped_log_series,
    damped_tail_bound,
    degree_for_log,
    direct_eval,
    evaluate,
    log_series_coefficients,
    partial_sum_error_bound,
    product_parity,
    truncation_error_bound,
)
from modular.errors import DomainError, ParameterError


class TestChebyshevSeries:
    def test_rejects_parity_mismatch(self):
        with pytest.raises(ParameterError):
            ChebyshevSeries([0.0, 1.0], "even")
        with pytest.raises(ParameterError):
            ChebyshevSeries([1.0, 1.0], "odd")

    def test_rejects_non_finite(self):
        with pytest.raises(ParameterError):
            ChebyshevSeries([1.0, float("nan")])

    def test_degree_ignores_trailing_zeros(self):
        assert ChebyshevSeries([1.0, 0.0, 2.0, 0.0, 0.0]).degree == 2
        assert ChebyshevSeries([0.0, 0.0]).degree == 0

    def test_coefficients_are_read_only(self):
        series = ChebyshevSeries([1.0, 2.0])
        with pytest.raises(ValueError):
            series.coefficients[0] = 5.0

    def test_product_parity(self):
        assert product_parity("even", "odd") == "odd"
        assert product_parity("odd", "odd") == "even"
        assert product_parity("even", "even") == "even"
        assert product_parity("none", "even") == "none"

    def test_product_matches_pointwise(self):
        a = ChebyshevSeries([0.5, 0.0, -0.25], "even")
        b = ChebyshevSeries([0.0, 0.3, 0.0, 0.1], "odd")
        x = np.linspace(-1.0, 1.0, 21)
        product = a * b
        assert product.parity == "odd"
        np.testing.assert_allclose(product(x), a(x) * b(x), atol=1e-14)


class TestEvaluation:
    def test_clenshaw_matches_numpy(self, rng):
        coeffs = rng.standard_normal(31)
        x = np.linspace(-1.0, 1.0, 101)
        np.testing.assert_allclose(
            clenshaw_eval(ChebyshevSeries(coeffs), x), npcheb.chebval(x, coeffs), atol=1e-12
        )

    def test_even_path_matches_numpy(self, rng):
        coeffs = rng.standard_normal(41)
        coeffs[1::2] = 0.0
        x = np.linspace(-1.0, 1.0, 101)
        np.testing.assert_allclose(
            clenshaw_eval(ChebyshevSeries(coeffs, "even"), x), npcheb.chebval(x, coeffs), atol=1e-12
        )

    def test_direct_sum_matches_clenshaw(self, rng):
        coeffs = rng.standard_normal(200) / np.arange(1, 201)
        series = ChebyshevSeries(coeffs)
        x = np.linspace(-1.0, 1.0, 33)
        np.testing.assert_allclose(direct_eval(series, x), clenshaw_eval(series, x), atol=1e-11)

    def test_scalar_in_scalar_out(self):
        value = evaluate(ChebyshevSeries([1.0, 2.0]), 0.5)
        assert isinstance(value, float)
        assert value == pytest.approx(2.0)

    def test_outside_domain_raises(self):
        with pytest.raises(DomainError):
            evaluate(ChebyshevSeries([1.0, 2.0]), np.array([0.0, 1.1]))

    def test_rounding_overshoot_is_clamped(self):
        series = ChebyshevSeries([0.0, 1.0], "odd")
        assert evaluate(series, 1.0 + 1e-13) == pytest.approx(1.0)


class TestLogExpansion:
    def test_partial_sum_coefficients(self):
        coeffs = log_series_coefficients(3).coefficients
        expected = [-math.log(2.0), 0.0, 1.0, 0.0, -0.5, 0.0, 1.0 / 3.0]
        np.testing.assert_allclose(coeffs, expected)

    def test_degree_for_log_known_value(self):
        # 4 * 0.5^(N+1) / 2 <= 0.01 first holds at N = 7
        assert degree_for_log(2.0, 0.01) == 7

    @pytest.mark.parametrize("kappa", [2.0, 4.0, 8.0])
    @pytest.mark.parametrize("epsilon", [1e-2, 1e-3])
    def test_degree_for_log_is_smallest(self, kappa, epsilon):
        order = degree_for_log(kappa, epsilon)
        assert truncation_error_bound(kappa, order) <= epsilon
        if order > 0:
            assert truncation_error_bound(kappa, order - 1) > epsilon

    def test_kappa_must_exceed_one(self):
        with pytest.raises(DomainError):
            degree_for_log(1.0, 0.1)
        with pytest.raises(DomainError):
            certified_log_order(0.5, 0.1)

    @pytest.mark.parametrize("kappa", [4.0, 16.0])
    @pytest.mark.parametrize("order", [10, 50, 200])
    def test_partial_sum_within_its_bound(self, kappa, order):
        x = np.linspace(1.0 / kappa, 1.0, 2001)
        error = np.abs(evaluate(log_series_coefficients(order), x) - np.log(x))
        assert error.max() <= partial_sum_error_bound(kappa, order)

    def test_damped_series_is_smoothed_log(self):
        damping = 0.5
        eta = LogOrder(order=80, damping=damping, bias_bound=0.0, tail_bound=0.0).eta
        x = np.linspace(-1.0, 1.0, 41)
        np.testing.assert_allclose(
            evaluate(damped_log_series(80, damping), x), 0.5 * np.log(x * x + eta * eta), atol=1e-12
        )

    def test_damping_out_of_range(self):
        with pytest.raises(DomainError):
            damped_log_series(5, 0.0)
        with pytest.raises(DomainError):
            damped_log_series(5, 1.5)

    @pytest.mark.parametrize("kappa, epsilon", [(4.0, 1e-2), (8.0, 1e-2), (16.0, 1e-3)])
    def test_certified_order_meets_epsilon(self, kappa, epsilon):
        plan = certified_log_order(kappa, epsilon)
        assert plan.bias_bound <= epsilon / 2.0 * (1.0 + 1e-9)
        assert plan.tail_bound <= epsilon / 2.0
        assert plan.tail_bound == pytest.approx(damped_tail_bound(plan.order, plan.damping))

        series = damped_log_series(plan.order, plan.damping)
        assert series.degree == 2 * plan.order
        x = np.linspace(1.0 / kappa, 1.0, 4001)
        for points in (x, -x):
            error = np.abs(evaluate(series, points) - np.log(np.abs(points)))
            assert error.max() <= plan.error_bound
        assert plan.error_bound <= epsilon * (1.0 + 1e-9)

    def test_certified_order_is_minimal(self):
        plan = certified_log_order(8.0, 1e-2)
        assert plan.order > 0
        assert damped_tail_bound(plan.order - 1, plan.damping) > 1e-2 / 2.0

    def test_certified_order_grows_with_kappa_squared(self):
        orders = [certified_log_order(k, 1e-2).order for k in (32.0, 64.0, 128.0)]
        slope = np.polyfit(np.log([32.0, 64.0, 128.0]), np.log(orders), 1)[0]
        assert 1.7 <= slope <= 2.3
