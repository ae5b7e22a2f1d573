import math

import numpy as np
import pytest
from scipy import linalg, stats

from modular.encoding import (
    random_density,
    reduced_density,
    validate_density,
    von_neumann_entropy,
)
from modular.errors import ParameterError, ShapeError
from modular.estimators import (
    METHOD_QPE,
    chiral_slope,
    correlator,
    entropy_functional,
    entropy_qpe,
    entropy_under_flow,
    flow_state,
    functional_kappa,
    heisenberg,
    qpe_phases,
    qpe_sample,
    shots_required,
)
from modular.matfun import random_hermitian


class TestQpeSampling:
    def test_pure_basis_state_returns_its_phase(self):
        rho = validate_density(np.diag([1.0, 0.0]))
        samples = qpe_sample(rho, [0.3, 2.0], shots=50, seed=1)
        np.testing.assert_allclose(samples, 0.3)

    def test_seed_reproducible(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        first = qpe_sample(rho, [0.1, 0.2, 0.3], shots=100, seed=5)
        second = qpe_sample(rho, [0.1, 0.2, 0.3], shots=100, seed=5)
        np.testing.assert_array_equal(first, second)

    def test_bits_round_to_grid(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        samples = qpe_sample(rho, [0.1, 1.234, 2.5], shots=20, seed=0, bits=4)
        steps = samples / (2.0 * math.pi / 16)
        np.testing.assert_allclose(steps, np.round(steps), atol=1e-12)

    def test_rejects_bad_arguments(self, rng):
        rho = random_density(2, rng)
        with pytest.raises(ParameterError):
            qpe_sample(rho, [0.0, 1.0], shots=0, seed=0)
        with pytest.raises(ShapeError):
            qpe_sample(rho, [0.0, 1.0, 2.0], shots=10, seed=0)

    @pytest.mark.parametrize("seed", range(5))
    def test_two_phase_statistics(self, seed):
        rho = validate_density(np.diag([0.5, 0.5]))
        shots = 10_000
        samples = qpe_sample(rho, [0.0, math.pi], shots=shots, seed=seed)
        sigma = (math.pi / 2.0) / math.sqrt(shots)
        assert abs(samples.mean() - math.pi / 2.0) <= 3.0 * sigma
        counts = np.array([np.sum(samples == 0.0), np.sum(samples == math.pi)])
        assert counts.sum() == shots
        _, p_value = stats.chisquare(counts)
        assert p_value > 1e-3

    def test_shots_required(self):
        expected = math.ceil(math.log(math.e) ** 2 / (0.5 * 0.1 * 0.1))
        assert shots_required(math.e, 0.1, 0.5) == expected

    def test_exact_phases_largest_eigenvalue_first(self):
        rho = validate_density(np.diag([0.25, 0.75]))
        phases = qpe_phases(rho, 4.0)
        np.testing.assert_allclose(phases, [-math.pi * math.log(0.75) / math.log(4.0), math.pi])


class TestEntropyQpe:
    @pytest.mark.parametrize("phase_source", ["exact", "polynomial"])
    def test_within_epsilon(self, rng, phase_source):
        rho = random_density(3, rng, kappa=6.0)
        estimate = entropy_qpe(rho, 0.05, 0.1, seed=3, phase_source=phase_source)
        assert estimate.method == METHOD_QPE
        assert estimate.shots == shots_required(estimate.kappa_used, 0.05, 0.1)
        assert abs(estimate.value - von_neumann_entropy(rho)) <= 0.05

    def test_bits(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        estimate = entropy_qpe(rho, 0.05, 0.1, seed=3, bits=12)
        assert abs(estimate.value - von_neumann_entropy(rho)) <= 0.05
        assert "12 bits" in estimate.note

    def test_deterministic_for_a_seed(self, rng):
        rho = random_density(2, rng, kappa=4.0)
        assert entropy_qpe(rho, 0.1, 0.2, seed=9).value == entropy_qpe(rho, 0.1, 0.2, seed=9).value

    @pytest.mark.parametrize("spectrum", [[0.75, 0.25], [0.25, 0.25, 0.25, 0.25]])
    def test_failure_rate_below_delta(self, spectrum):
        rho = validate_density(np.diag(spectrum))
        exact = von_neumann_entropy(rho)
        epsilon, delta, runs = 0.1, 0.1, 200
        failures = sum(
            abs(entropy_qpe(rho, epsilon, delta, seed=seed).value - exact) > epsilon
            for seed in range(runs)
        )
        assert failures <= delta * runs

    def test_maximally_mixed_is_exact(self):
        rho = validate_density(np.eye(4) / 4.0)
        estimate = entropy_qpe(rho, 0.1, 0.1, seed=0)
        assert estimate.value == pytest.approx(math.log(4.0))
        assert estimate.kappa_used == pytest.approx(4.0)

    @pytest.mark.parametrize("seed", range(50))
    def test_value_stays_in_entropy_range(self, seed):
        # Three shots leave the sample mean free to overshoot ln 2
        rho = validate_density(np.diag([0.75, 0.25]))
        estimate = entropy_qpe(rho, 0.9, 0.9, seed=seed)
        assert estimate.shots == 3
        assert 0.0 <= estimate.value <= math.log(2.0)

    def test_rank_one(self):
        estimate = entropy_qpe(validate_density(np.diag([0.0, 1.0])), 0.1, 0.1, seed=0)
        assert estimate.value == 0.0
        assert estimate.shots == 1
        assert estimate.kappa_used == 1.0
        assert estimate.note


class TestEntropyFunctional:
    def test_functional_kappa(self):
        assert functional_kappa(16, 0.1) == 445
        kappa = functional_kappa(2, 0.05)
        assert kappa >= math.ceil(2 * math.log(2) / 0.05) + 1
        floor = 1.0 / kappa
        assert -floor * math.log(floor) <= 0.05 / 2.0

    def test_within_epsilon(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        assert abs(entropy_functional(rho, 0.1) - von_neumann_entropy(rho)) <= 0.1

    def test_kernel_contributes_nothing(self):
        rho = validate_density(np.diag([0.7, 0.3, 0.0]))
        assert abs(entropy_functional(rho, 0.1) - von_neumann_entropy(rho)) <= 0.1

    def test_small_eigenvalue(self):
        rho = validate_density(np.diag([0.995, 0.005]))
        assert abs(entropy_functional(rho, 0.05) - von_neumann_entropy(rho)) <= 0.05

    @pytest.mark.parametrize("epsilon", [0.2, 0.1])
    @pytest.mark.parametrize("dim", [2, 4, 8, 16])
    def test_within_epsilon_over_random_states(self, dim, epsilon):
        rng = np.random.default_rng(dim)
        for index in range(50):
            # Every other state has exact zero eigenvalues
            rank = dim if index % 2 == 0 else max(1, dim // 2)
            rho = random_density(dim, rng, rank=rank)
            error = abs(entropy_functional(rho, epsilon) - von_neumann_entropy(rho))
            assert error <= epsilon, f"state {index} (rank {rank}) off by {error:.3g}"

    def test_one_dimensional(self):
        assert entropy_functional(validate_density(np.eye(1)), 0.1) == 0.0


class TestCorrelator:
    def test_hermitian_inputs_give_real_value(self, rng):
        rho = random_density(4, rng, kappa=8.0)
        psi_r = random_hermitian(4, rng, norm=1.0)
        psi_l = random_hermitian(4, rng, norm=1.0)
        h = random_hermitian(4, rng)
        point = correlator(rho, psi_r, psi_l, 0.7, 1.2, h)
        assert abs(point.value.imag) <= 1e-9
        assert (point.s, point.t) == (0.7, 1.2)

    def test_identity_right_operator(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        psi_l = random_hermitian(3, rng)
        point = correlator(rho, np.eye(3), psi_l, 2.0, 0.0)
        assert point.value == pytest.approx(2.0 * np.trace(rho.matrix @ psi_l))

    @pytest.mark.parametrize("s, t", [(0.0, 0.0), (0.5, 1.0), (-1.5, 2.0)])
    def test_matches_dense_evaluation(self, rng, s, t):
        rho = random_density(8, rng, kappa=16.0)
        psi_r = random_hermitian(8, rng, norm=1.0)
        psi_l = random_hermitian(8, rng, norm=1.0)
        h = random_hermitian(8, rng)
        log_rho = linalg.logm(rho.matrix)
        forward = linalg.expm(1j * s * log_rho)
        flowed = forward.conj().T @ psi_r @ forward
        evolve = linalg.expm(1j * t * h)
        left_t = evolve @ psi_l @ evolve.conj().T
        expected = np.trace(rho.matrix @ (flowed @ left_t + left_t @ flowed))
        point = correlator(rho, psi_r, psi_l, s, t, h)
        assert point.value == pytest.approx(complex(expected), abs=1e-9)

    @pytest.mark.parametrize("s, t", [(0.0, 0.0), (1.3, -0.7)])
    def test_identity_operators_give_two(self, rng, s, t):
        rho = random_density(8, rng, kappa=16.0)
        point = correlator(rho, np.eye(8), np.eye(8), s, t, random_hermitian(8, rng))
        assert point.value == pytest.approx(2.0, abs=1e-10)

    def test_symmetric_in_the_two_operators_at_zero_times(self, rng):
        rho = random_density(4, rng, kappa=8.0)
        a = random_hermitian(4, rng)
        b = random_hermitian(4, rng)
        forward = correlator(rho, a, b, 0.0, 0.0)
        swapped = correlator(rho, b, a, 0.0, 0.0)
        assert forward.value == pytest.approx(swapped.value, abs=1e-12)

    def test_polynomial_mode_matches_exact(self, rng):
        rho = random_density(4, rng, kappa=8.0)
        psi_r = random_hermitian(4, rng, norm=1.0)
        psi_l = random_hermitian(4, rng, norm=1.0)
        exact = correlator(rho, psi_r, psi_l, 1.0, 0.0)
        approx = correlator(rho, psi_r, psi_l, 1.0, 0.0, mode="polynomial", epsilon=1e-2)
        assert abs(approx.value - exact.value) <= 1e-2

    def test_dimension_mismatch(self, rng):
        rho = random_density(3, rng)
        with pytest.raises(ShapeError):
            correlator(rho, np.eye(2), np.eye(3), 0.0, 0.0)

    def test_unknown_mode(self, rng):
        rho = random_density(2, rng)
        with pytest.raises(ParameterError):
            correlator(rho, np.eye(2), np.eye(2), 0.0, 0.0, mode="fast")

    def test_heisenberg_without_hamiltonian(self, rng):
        o = random_hermitian(3, rng)
        assert heisenberg(o, None, 5.0) is o


class TestFlowedEntropy:
    def test_spectrum_preserved(self, rng):
        sigma = random_density(8, rng, kappa=16.0)
        flowed = flow_state(sigma, (2, 2, 2), 1.5)
        np.testing.assert_allclose(flowed.eigenvalues, sigma.eigenvalues, atol=1e-10)

    def test_zero_time(self, rng):
        sigma = random_density(8, rng, kappa=16.0)
        layout = validate_density(sigma.matrix, subsystem_dims=(2, 2, 2))
        expected = von_neumann_entropy(reduced_density(layout, [1, 2]))
        assert entropy_under_flow(sigma, (2, 2, 2), 0.0) == pytest.approx(expected)

    def test_product_state_has_no_slope(self):
        a = np.diag([0.8, 0.2])
        b = np.diag([0.7, 0.3])
        c = np.diag([0.6, 0.4])
        sigma = validate_density(np.kron(np.kron(a, b), c))
        assert chiral_slope(sigma, (2, 2, 2), 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("t1, t2", [(0.0, 1.0), (0.5, 2.5), (-1.0, 0.25)])
    def test_slope_from_two_flowed_entropies(self, rng, t1, t2):
        sigma = random_density(8, rng, kappa=16.0)
        first = entropy_under_flow(sigma, (2, 2, 2), t1)
        second = entropy_under_flow(sigma, (2, 2, 2), t2)
        expected = 3.0 * (second - first) / (math.pi * (t2 - t1))
        assert chiral_slope(sigma, (2, 2, 2), t1, t2) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_equal_times_rejected(self, rng):
        sigma = random_density(8, rng, kappa=16.0)
        with pytest.raises(ParameterError):
            chiral_slope(sigma, (2, 2, 2), 1.0, 1.0)

    @pytest.mark.parametrize("dims", [(2, 4), (2, 2, 3)])
    def test_bad_layout(self, rng, dims):
        sigma = random_density(8, rng, kappa=16.0)
        with pytest.raises(ShapeError):
            flow_state(sigma, dims, 1.0)
