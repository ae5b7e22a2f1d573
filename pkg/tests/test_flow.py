import numpy as np
import pytest

from modular.encoding import (
    purify,
    random_density,
    random_pure_state,
    reduced_density,
    spectral_floor,
    validate_density,
)
from modular.errors import DomainError, ResourceError, ShapeError
from modular.flow import (
    approx_flow,
    exact_flow,
    predicted_queries,
    purified_bound,
    purified_flow,
    query_count,
    unitary_budget,
)
from modular.matfun import random_hermitian


class TestBudget:
    @pytest.mark.parametrize("epsilon", [0.5, 1e-2, 1e-6])
    def test_unitary_budget(self, epsilon):
        budget = unitary_budget(epsilon)
        assert budget * (2.0 + budget) < epsilon


class TestExactFlow:
    def test_fixed_points(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        np.testing.assert_allclose(exact_flow(rho, np.eye(3), 1.3), np.eye(3), atol=1e-12)
        np.testing.assert_allclose(exact_flow(rho, rho.matrix, 1.3), rho.matrix, atol=1e-12)

    def test_preserves_spectrum(self, rng):
        rho = random_density(4, rng, kappa=8.0)
        o = random_hermitian(4, rng)
        flowed = exact_flow(rho, o, 2.5)
        np.testing.assert_allclose(np.linalg.eigvalsh(flowed), np.linalg.eigvalsh(o), atol=1e-10)

    def test_group_law(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        o = random_hermitian(3, rng)
        np.testing.assert_allclose(
            exact_flow(rho, exact_flow(rho, o, 0.4), 0.9), exact_flow(rho, o, 1.3), atol=1e-10
        )

    def test_dimension_mismatch(self, rng):
        rho = random_density(3, rng)
        with pytest.raises(ShapeError):
            exact_flow(rho, np.eye(2), 1.0)


class TestApproxFlow:
    @pytest.mark.parametrize("t", [0.5, 2.0, -1.0])
    def test_within_epsilon(self, rng, t):
        rho = random_density(3, rng, kappa=6.0)
        o = random_hermitian(3, rng, norm=1.0)
        result = approx_flow(rho, o, t, 1e-2)
        assert result.within_epsilon
        assert result.error_norm < 1e-2
        assert result.kappa == pytest.approx(spectral_floor(rho))
        assert result.parameters == (result.kappa, 1e-2, t)
        ledger = result.query_ledger
        assert ledger.total_queries == ledger.hamiltonian_degree * ledger.trig_degree
        assert not result.warnings

    @pytest.mark.parametrize("t", [-5.0, 0.5, 3.0, 5.0])
    @pytest.mark.parametrize("dim", [2, 4, 8])
    def test_tight_epsilon_up_to_dimension_eight(self, dim, t):
        rng = np.random.default_rng(100 * dim + int(t))
        kappa = max(8.0, 2.0 * dim)
        rho = random_density(dim, rng, kappa=kappa)
        o = random_hermitian(dim, rng, norm=1.0)
        result = approx_flow(rho, o, t, 1e-3)
        assert result.kappa <= kappa * (1.0 + 1e-9)
        assert result.within_epsilon
        assert result.error_norm < 1e-3
        np.testing.assert_allclose(result.exact_operator, exact_flow(rho, o, t), atol=1e-12)

    def test_rank_deficient_state(self):
        rho = validate_density(np.diag([0.6, 0.4, 0.0]))
        o = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        result = approx_flow(rho, o, 1.0, 1e-2)
        assert result.error_norm < 1e-2

    def test_large_operator_is_rescaled(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        o = random_hermitian(3, rng, norm=3.0)
        result = approx_flow(rho, o, 1.0, 1e-2)
        assert result.rescale_factor == pytest.approx(3.0)
        assert any("exceeds 1" in w for w in result.warnings)
        assert result.error_norm < 3e-2

    def test_kappa_override_below_floor_warns(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        result = approx_flow(rho, np.eye(3), 1.0, 1e-2, kappa_override=2.5)
        assert result.kappa == 2.5
        assert any("1/kappa" in w for w in result.warnings)

    def test_pure_state_uses_kappa_floor(self):
        rho = validate_density(np.diag([1.0, 0.0]))
        result = approx_flow(rho, np.array([[0.0, 1.0], [1.0, 0.0]]), 1.0, 1e-2)
        assert result.kappa == 2.0
        assert result.error_norm < 1e-2

    def test_epsilon_out_of_range(self, rng):
        rho = random_density(2, rng)
        with pytest.raises(DomainError):
            approx_flow(rho, np.eye(2), 1.0, 1.5)


class TestQueryCount:
    def test_zero_time(self):
        ledger = query_count(8.0, 1e-2, 0.0)
        assert ledger.trig_degree == 0
        assert ledger.total_queries == 0
        assert ledger.bound_constant == 0.0

    def test_degree_cap(self):
        with pytest.raises(ResourceError):
            query_count(64.0, 1e-2, 1.0, degree_cap=100)

    def test_predicted_queries_grow(self):
        assert predicted_queries(8.0, 1e-2, 1.0) < predicted_queries(16.0, 1e-2, 1.0)
        assert predicted_queries(8.0, 1e-2, 1.0) < predicted_queries(8.0, 1e-2, 4.0)

    def test_kappa_slope(self):
        kappas = [32.0, 64.0, 128.0, 256.0]
        totals = [query_count(k, 1e-2, 1.0).total_queries for k in kappas]
        slope = np.polyfit(np.log(kappas), np.log(totals), 1)[0]
        assert 1.7 <= slope <= 2.3

    def test_time_slope(self):
        times = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
        totals = [query_count(256.0, 1e-2, t).total_queries for t in times]
        slope = np.polyfit(np.log(times), np.log(totals), 1)[0]
        assert 0.8 <= slope <= 1.2


class TestPurifiedFlow:
    @pytest.mark.parametrize("dim", [2, 3, 4])
    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_distance_within_bound(self, rng, dim, t):
        psi = purify(random_density(dim, rng, kappa=2.0 * dim))
        result = purified_flow(psi, t, 0.1)
        assert result.distance <= result.bound <= 0.1
        assert np.linalg.norm(result.state.amplitudes) == pytest.approx(1.0)
        assert result.kappa <= spectral_floor(reduced_density(psi, [0])) * (1.0 + 1e-9)

    def test_rank_deficient_reduced_state(self):
        psi = purify(validate_density(np.diag([0.6, 0.4, 0.0])))
        result = purified_flow(psi, 1.0, 0.1)
        assert result.distance <= result.bound

    def test_unpacks_as_state_and_bound(self, rng):
        psi = purify(random_density(2, rng, kappa=4.0))
        state, bound = purified_flow(psi, 1.0, 0.2)
        assert state.subsystem_dims == (2, 2)
        assert 0.0 < bound < 0.2

    def test_zero_time_returns_input(self, rng):
        psi = purify(random_density(2, rng, kappa=4.0))
        result = purified_flow(psi, 0.0, 0.1)
        assert result.state is psi
        assert result.bound == 0.0
        assert result.kappa is None
        assert result.query_ledger is None

    def test_requires_bipartite_state(self, rng):
        with pytest.raises(ShapeError):
            purified_flow(random_pure_state((2, 2, 2), rng), 1.0, 0.1)

    def test_delta_out_of_range(self, rng):
        psi = purify(random_density(2, rng, kappa=4.0))
        with pytest.raises(DomainError):
            purified_flow(psi, 1.0, 1.0)

    def test_bound_is_below_delta(self):
        epsilon, kappa, bound = purified_bound(4, 2.0, 0.1)
        assert bound == pytest.approx(3.0 * 0.1 / 32.0 ** (1.0 / 3.0))
        assert bound < 0.1
        assert kappa == pytest.approx((4.0 / (2.0 * epsilon)) ** (2.0 / 3.0))
