import math

import numpy as np
import pytest
from scipy import linalg

from modular.encoding import (
    PureState,
    block_encode,
    density_from_state,
    modular_unitary,
    purify,
    random_density,
    random_pure_state,
    reduced_density,
    schmidt_coefficients,
    spectral_floor,
    validate_density,
    von_neumann_entropy,
)
from modular.errors import DomainError, ShapeError, ValidationError
from modular.matfun import random_unitary


class TestValidateDensity:
    def test_accepts_valid_state(self):
        rho = validate_density(np.diag([0.75, 0.25]))
        assert rho.dim == 2
        np.testing.assert_allclose(rho.eigenvalues, [0.25, 0.75])

    @pytest.mark.parametrize("matrix, invariant", [
        (np.array([[0.5, 0.1], [0.0, 0.5]]), "Hermiticity"),
        (np.diag([0.5, 0.6]), "Trace"),
        (np.diag([1.2, -0.2]), "Positivity"),
        (np.ones((2, 3)) / 3.0, "Shape"),
    ])
    def test_names_violated_invariant(self, matrix, invariant):
        with pytest.raises(ValidationError, match=f"Validation failed: {invariant}"):
            validate_density(matrix)

    def test_subsystem_dims_must_factor(self):
        with pytest.raises(ValidationError, match="Shape"):
            validate_density(np.eye(4) / 4.0, subsystem_dims=(3, 2))

    def test_spectral_floor(self):
        assert spectral_floor(validate_density(np.diag([0.75, 0.25]))) == pytest.approx(4.0)
        # Exact zeros are outside the support
        assert spectral_floor(validate_density(np.diag([1.0, 0.0]))) == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("rank", [None, 2])
    def test_spectral_floor_is_unitarily_invariant(self, seed, rank):
        rng = np.random.default_rng(seed)
        rho = random_density(4, rng, kappa=None if rank else 12.0, rank=rank)
        u = random_unitary(4, rng)
        rotated = u @ rho.matrix @ u.conj().T
        moved = validate_density(0.5 * (rotated + rotated.conj().T))
        assert spectral_floor(moved) == pytest.approx(spectral_floor(rho), rel=1e-9)


class TestPureStates:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValidationError, match="Normalization"):
            PureState(np.array([1.0, 1.0]))

    def test_rejects_bad_dims(self):
        with pytest.raises(ValidationError, match="Shape"):
            PureState(np.array([1.0, 0.0, 0.0, 0.0]), (3, 2))

    def test_purification_reduces_to_rho(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        psi = purify(rho)
        assert psi.subsystem_dims == (3, 3)
        np.testing.assert_allclose(reduced_density(psi, [0]).matrix, rho.matrix, atol=1e-12)
        np.testing.assert_allclose(
            schmidt_coefficients(psi) ** 2, np.sort(rho.eigenvalues)[::-1], atol=1e-12
        )

    @pytest.mark.parametrize("seed", range(20))
    def test_purification_round_trip_over_seeds(self, seed):
        rng = np.random.default_rng(seed)
        dim = 2 + seed % 4
        rank = dim if seed % 2 == 0 else max(1, dim // 2)
        rho = random_density(dim, rng, rank=rank)
        psi = purify(rho)
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0)
        np.testing.assert_allclose(reduced_density(psi, [0]).matrix, rho.matrix, atol=1e-12)
        np.testing.assert_allclose(reduced_density(psi, [1]).eigenvalues, rho.eigenvalues, atol=1e-12)


class TestReducedDensity:
    def test_pure_and_mixed_paths_agree(self, rng):
        psi = random_pure_state((2, 3, 2), rng)
        from_pure = reduced_density(psi, [0, 2])
        from_mixed = reduced_density(density_from_state(psi), [0, 2])
        np.testing.assert_allclose(from_pure.matrix, from_mixed.matrix, atol=1e-12)
        assert from_pure.subsystem_dims == (2, 2)

    def test_matches_einsum(self, rng):
        psi = random_pure_state((2, 3), rng)
        tensor = psi.amplitudes.reshape(2, 3)
        expected = np.einsum("ab,cb->ac", tensor, tensor.conj())
        np.testing.assert_allclose(reduced_density(psi, [0]).matrix, expected, atol=1e-12)

    def test_product_state(self):
        a = np.diag([0.9, 0.1])
        b = np.diag([0.6, 0.3, 0.1])
        rho = validate_density(np.kron(a, b), subsystem_dims=(2, 3))
        np.testing.assert_allclose(reduced_density(rho, [1]).matrix, b, atol=1e-12)
        np.testing.assert_allclose(reduced_density(rho, [0]).matrix, a, atol=1e-12)

    def test_keep_out_of_range(self, rng):
        with pytest.raises(ShapeError):
            reduced_density(random_pure_state((2, 2), rng), [2])


class TestBlockEncoding:
    def test_dilation_is_hermitian_unitary(self, rng):
        rho = random_density(3, rng)
        encoding = block_encode(rho)
        u = encoding.unitary
        np.testing.assert_allclose(u @ u, np.eye(6), atol=1e-10)
        np.testing.assert_allclose(u, u.conj().T, atol=1e-12)
        np.testing.assert_allclose(encoding.block, rho.matrix)


class TestSpectralQuantities:
    def test_entropy(self):
        assert von_neumann_entropy(validate_density(np.eye(4) / 4.0)) == pytest.approx(math.log(4.0))
        assert von_neumann_entropy(validate_density(np.diag([1.0, 0.0]))) == pytest.approx(0.0)

    def test_modular_unitary_matches_expm_logm(self, rng):
        rho = random_density(3, rng, kappa=6.0)
        expected = linalg.expm(1j * 0.7 * linalg.logm(rho.matrix))
        np.testing.assert_allclose(modular_unitary(rho, 0.7), expected, atol=1e-9)

    def test_modular_unitary_is_identity_on_kernel(self):
        rho = validate_density(np.diag([0.5, 0.5, 0.0]))
        u = modular_unitary(rho, 2.0)
        np.testing.assert_allclose(np.abs(np.diag(u)), 1.0, atol=1e-12)
        assert u[2, 2] == pytest.approx(1.0)

    def test_zero_time_is_identity(self, rng):
        rho = random_density(4, rng, kappa=8.0)
        np.testing.assert_allclose(modular_unitary(rho, 0.0), np.eye(4), atol=1e-12)


class TestRandomStates:
    def test_kappa_controls_the_floor(self, rng):
        rho = random_density(4, rng, kappa=8.0)
        assert spectral_floor(rho) <= 8.0 * (1.0 + 1e-9)
        assert np.trace(rho.matrix).real == pytest.approx(1.0)

    def test_kappa_below_dimension(self, rng):
        with pytest.raises(DomainError):
            random_density(4, rng, kappa=3.0)

    def test_rank_deficient(self, rng):
        rho = random_density(3, rng, rank=1)
        assert int(np.count_nonzero(rho.support)) == 1

    def test_seeded(self):
        first = random_density(3, np.random.default_rng(7))
        second = random_density(3, np.random.default_rng(7))
        np.testing.assert_array_equal(first.matrix, second.matrix)
