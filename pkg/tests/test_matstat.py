"""Tests for the linear algebra and sampling kernel."""

import numpy as np
import pytest

from fairbot.errors import (
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
    TooFewMembers,
)
from fairbot.matstat import (
    RngStream,
    augmented_moments,
    cholesky,
    ensemble_moments,
    mahalanobis_sq,
    mvn_sample,
    solve_spd,
    sym_eigen,
)


def random_spd(rng, p):
    a = rng.standard_normal((p, 2 * p))
    return a @ a.T / (2 * p) + 0.05 * np.eye(p)


def ar1(p, sigma_sq, rho):
    idx = np.arange(p)
    return sigma_sq * rho ** np.abs(idx[:, None] - idx[None, :])


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cholesky(np.eye(3)).lower, np.eye(3))

    def test_hand_example(self):
        factor = cholesky([[4.0, 2.0], [2.0, 5.0]])
        assert np.allclose(factor.lower, [[2.0, 0.0], [1.0, 2.0]])
        # reconstruction oracle
        assert np.allclose(factor.lower @ factor.lower.T, [[4.0, 2.0], [2.0, 5.0]])

    def test_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky([[1.0, 2.0], [2.0, 1.0]])

    def test_numerically_semidefinite(self):
        v = np.array([1.0, 2.0, 3.0])
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.outer(v, v))

    def test_reconstruction_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            p = int(rng.integers(1, 31))
            a = random_spd(rng, p)
            lower = cholesky(a).lower
            err = np.linalg.norm(lower @ lower.T - a) / np.linalg.norm(a)
            assert err < 1e-10

    def test_asymmetric_rejected(self):
        with pytest.raises(DomainError):
            cholesky([[1.0, 0.5], [0.2, 1.0]])


class TestSolveSpd:
    def test_identity(self):
        assert np.allclose(solve_spd(cholesky(np.eye(2)), [3.0, 4.0]), [3.0, 4.0])

    def test_diagonal(self):
        assert np.allclose(solve_spd(cholesky([[4.0, 0.0], [0.0, 9.0]]), [4.0, 9.0]), [1.0, 1.0])

    def test_residual(self):
        a = np.array([[4.0, 2.0], [2.0, 5.0]])
        b = np.array([6.0, 7.0])
        y = solve_spd(cholesky(a), b)
        assert np.linalg.norm(a @ y - b) <= 1e-10 * np.linalg.norm(b)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_spd(cholesky(np.eye(2)), [1.0, 2.0, 3.0])


class TestSymEigen:
    def test_identity(self):
        decomp = sym_eigen(np.eye(2))
        assert np.allclose(decomp.eigenvalues, [1.0, 1.0])

    def test_two_by_two(self):
        decomp = sym_eigen([[1.0, 0.6], [0.6, 1.0]])
        assert np.allclose(decomp.eigenvalues, [1.6, 0.4])
        s = 1 / np.sqrt(2)
        assert np.allclose(decomp.eigenvectors[:, 0], [s, s])
        assert np.allclose(decomp.eigenvectors[:, 1], [s, -s])

    def test_residual_oracle(self):
        a = ar1(3, 1.0, 0.6)
        decomp = sym_eigen(a)
        for i in range(3):
            e = decomp.eigenvectors[:, i]
            assert np.linalg.norm(a @ e - decomp.eigenvalues[i] * e) < 1e-10
            assert abs(np.linalg.norm(e) - 1.0) < 1e-10
        assert np.all(np.diff(decomp.eigenvalues) <= 0)

    def test_orthonormal(self):
        rng = np.random.default_rng(5)
        a = random_spd(rng, 8)
        decomp = sym_eigen(a)
        assert np.allclose(decomp.eigenvectors.T @ decomp.eigenvectors, np.eye(8), atol=1e-10)

    def test_sign_convention(self):
        rng = np.random.default_rng(6)
        a = random_spd(rng, 6)
        decomp = sym_eigen(a)
        for i in range(6):
            col = decomp.eigenvectors[:, i]
            assert col[np.argmax(np.abs(col))] > 0


class TestMahalanobis:
    def test_zero(self):
        factor = cholesky(np.eye(3))
        assert mahalanobis_sq([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], factor) == 0.0

    def test_identity_unit_vector(self):
        factor = cholesky(np.eye(3))
        assert mahalanobis_sq([1.0, 0.0, 0.0], [0.0, 0.0, 0.0], factor) == pytest.approx(1.0)

    def test_diagonal(self):
        factor = cholesky([[4.0, 0.0], [0.0, 1.0]])
        assert mahalanobis_sq([2.0, 1.0], [0.0, 0.0], factor) == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mahalanobis_sq([1.0], [1.0, 2.0], cholesky(np.eye(2)))

    def test_affine_invariance(self):
        # d(x, c; A) is unchanged by x -> Tx, c -> Tc, A -> T A T'
        rng = np.random.default_rng(21)
        for _ in range(25):
            p = int(rng.integers(1, 11))
            a = random_spd(rng, p)
            x = rng.standard_normal(p)
            c = rng.standard_normal(p)
            t = rng.standard_normal((p, p)) + 2 * np.eye(p)
            d1 = mahalanobis_sq(x, c, cholesky(a))
            d2 = mahalanobis_sq(t @ x, t @ c, cholesky(t @ a @ t.T))
            assert d1 == pytest.approx(d2, rel=1e-8)


class _ZeroSource:
    """Test hook standing in for a NormalSource that always yields zeros."""

    def normals(self, shape):
        return np.zeros(shape)


class TestSampling:
    def test_zero_noise_hook(self):
        mean = np.array([3.0, -1.0])
        draw = mvn_sample(mean, cholesky(np.eye(2)), _ZeroSource())
        assert np.array_equal(draw, mean)

    def test_determinism(self):
        a = RngStream(1234, 5).source()
        b = RngStream(1234, 5).source()
        assert np.array_equal(a.normals((100,)), b.normals((100,)))

    def test_distinct_streams_differ(self):
        a = RngStream(1234, 0).source().normals((50,))
        b = RngStream(1234, 1).source().normals((50,))
        assert not np.array_equal(a, b)

    def test_stream_independent_of_request_slicing(self):
        whole = RngStream(99).source().normals((60,))
        src = RngStream(99).source()
        pieces = np.concatenate([src.normals((7,)), src.normals((33,)), src.normals((20,))])
        assert np.array_equal(whole, pieces)

    def test_negative_stream_index_rejected(self):
        with pytest.raises(DomainError):
            RngStream(1, -1)

    def test_sample_covariance(self):
        cov = np.array([[1.0, 0.6], [0.6, 1.0]])
        factor = cholesky(cov)
        source = RngStream(7).source()
        draws = np.empty((100_000, 2))
        for i in range(draws.shape[0]):
            draws[i] = mvn_sample(np.zeros(2), factor, source)
        sample_cov = np.cov(draws.T)
        assert np.max(np.abs(sample_cov - cov)) < 0.02
        assert np.max(np.abs(draws.mean(axis=0))) < 0.02

    def test_matches_ar1_recursion(self):
        # sampling through the Cholesky factor of the analytic covariance must
        # agree in distribution with iterating the AR(1) recursion itself
        p, sigma_sq, rho = 4, 1.0, 0.6
        n = 100_000
        factor = cholesky(ar1(p, sigma_sq, rho))
        z = RngStream(3).source().normals((n, p))
        chol_draws = z @ factor.lower.T

        rng = np.random.default_rng(303)
        rec = np.empty((n, p))
        rec[:, 0] = rng.standard_normal(n) * np.sqrt(sigma_sq)
        noise_sd = np.sqrt(sigma_sq * (1 - rho**2))
        for t in range(1, p):
            rec[:, t] = rho * rec[:, t - 1] + noise_sd * rng.standard_normal(n)

        diff = np.abs(np.cov(chol_draws.T) - np.cov(rec.T))
        assert np.max(diff) < 0.02


class TestMoments:
    def test_two_point(self):
        mean, cov = ensemble_moments([[0.0, 0.0], [2.0, 2.0]])
        assert np.array_equal(mean, [1.0, 1.0])
        assert np.array_equal(cov, [[2.0, 2.0], [2.0, 2.0]])

    def test_scalar_members(self):
        mean, cov = ensemble_moments([[-1.0], [0.0], [1.0]])
        assert mean[0] == 0.0
        assert cov[0, 0] == pytest.approx(1.0)

    def test_identical_members(self):
        mean, cov = ensemble_moments([[3.0, 1.0]] * 5)
        assert np.array_equal(mean, [3.0, 1.0])
        assert np.array_equal(cov, np.zeros((2, 2)))

    def test_too_few(self):
        with pytest.raises(TooFewMembers):
            ensemble_moments([[1.0, 2.0]])

    def test_unbiased_covariance(self):
        # Monte Carlo oracle: averaged over replications, E[S] = Sigma
        p, n, reps = 3, 10, 10_000
        cov = ar1(p, 1.0, 0.6)
        lower = np.linalg.cholesky(cov)
        rng = np.random.default_rng(17)
        draws = rng.standard_normal((reps, n, p)) @ lower.T
        centered = draws - draws.mean(axis=1, keepdims=True)
        covs = centered.transpose(0, 2, 1) @ centered / (n - 1)
        mean_cov = covs.mean(axis=0)
        se = covs.std(axis=0, ddof=1) / np.sqrt(reps)
        assert np.all(np.abs(mean_cov - cov) <= 3 * se)
        # spot check one replication against the module implementation
        m0, s0 = ensemble_moments(draws[0])
        assert np.allclose(s0, covs[0])
        assert np.allclose(m0, draws[0].mean(axis=0))


class TestAugmentedMoments:
    def test_hand_sum(self):
        mean, cov = augmented_moments([[-1.0], [0.0], [1.0]], [2.0])
        assert mean[0] == pytest.approx(0.5)
        assert cov[0, 0] == pytest.approx((2.25 + 0.25 + 0.25 + 2.25) / 3)

    def test_degenerate(self):
        mean, cov = augmented_moments([[1.0, 1.0]] * 4, [1.0, 1.0])
        assert np.array_equal(cov, np.zeros((2, 2)))

    def test_single_member(self):
        mean, cov = augmented_moments([[0.0, 0.0]], [2.0, 0.0])
        assert np.array_equal(mean, [1.0, 0.0])
        assert np.allclose(cov, [[2.0, 0.0], [0.0, 0.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            augmented_moments([[1.0, 2.0]], [1.0, 2.0, 3.0])
