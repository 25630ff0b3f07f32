import warnings

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from conftest import random_spd, random_sym
from frfilter import matfun as mf
from frfilter.errors import DimensionError, NotSPDError

E = np.e


def _scipy_logm(X):
    # independent oracle; scipy warns about its own error estimate at ~1e-13
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return sla.logm(X).real


class TestConstruction:
    def test_as_spd_symmetrizes(self):
        X = np.array([[2.0, 1.0], [1.0 + 1e-14, 2.0]])
        Y = mf.as_spd(X)
        assert np.array_equal(Y, Y.T)

    def test_as_spd_rejects_indefinite(self):
        with pytest.raises(NotSPDError):
            mf.as_spd([[1.0, 2.0], [2.0, 1.0]])

    def test_as_spd_rejects_near_singular(self):
        with pytest.raises(NotSPDError):
            mf.as_spd(np.diag([1.0, 1e-14]))

    def test_as_sym_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            mf.as_sym([[1.0, 2.0], [0.0, 1.0]])

    def test_non_square(self):
        with pytest.raises(DimensionError):
            mf.as_spd(np.ones((2, 3)))

    def test_scalar_promoted(self):
        assert mf.as_spd(4.0).shape == (1, 1)


class TestSymEig:
    def test_identity(self):
        lam, V = mf.sym_eig(np.eye(2))
        assert np.allclose(lam, [1, 1])
        assert np.allclose(np.abs(V), np.eye(2))

    def test_diagonal(self):
        lam, V = mf.sym_eig(np.diag([4.0, 1.0]))
        assert np.allclose(lam, [4, 1])
        assert np.allclose(np.abs(V), np.eye(2))

    def test_two_by_two(self):
        lam, V = mf.sym_eig([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(lam, [3, 1])
        s = 1 / np.sqrt(2)
        assert np.allclose(np.abs(V), [[s, s], [s, s]])
        assert np.isclose(V[0, 0] * V[1, 0], 0.5)
        assert np.isclose(V[0, 1] * V[1, 1], -0.5)

    def test_reconstruct_and_orthonormal(self, rng):
        X = random_spd(rng, 5, 100.0)
        d = mf.sym_eig(X)
        assert np.linalg.norm(d.reconstruct() - X) <= 1e-10 * np.linalg.norm(X)
        assert np.allclose(d.eigenvectors.T @ d.eigenvectors, np.eye(5), atol=1e-10)


class TestSpectralMaps:
    def test_log_identity(self):
        assert np.allclose(mf.spd_log(np.eye(3)), 0)

    def test_log_diagonal(self):
        assert np.allclose(mf.spd_log(np.diag([E, E**2])), np.diag([1, 2]))

    def test_log_two_by_two(self):
        expected = np.log(3) / 2 * np.ones((2, 2))
        assert np.allclose(mf.spd_log([[2.0, 1.0], [1.0, 2.0]]), expected, atol=1e-14)

    def test_exp_zero(self):
        assert np.allclose(mf.spd_exp(np.zeros((2, 2))), np.eye(2))

    def test_exp_diagonal(self):
        assert np.allclose(mf.spd_exp(np.diag([1.0, 2.0])), np.diag([E, E**2]))

    def test_exp_nilpotent(self):
        assert np.allclose(mf.spd_exp([[0.0, 1.0], [0.0, 0.0]]), [[1, 1], [0, 1]], atol=1e-15)

    def test_expm_general_matches_scipy(self, rng):
        A = 3 * rng.standard_normal((4, 4))
        assert np.allclose(mf.expm_general(A), sla.expm(A), rtol=1e-11)

    def test_sqrt_cases(self):
        assert np.allclose(mf.spd_sqrt(np.eye(2)), np.eye(2))
        assert np.allclose(mf.spd_sqrt(np.diag([4.0, 9.0])), np.diag([2, 3]))
        a, b = (np.sqrt(3) + 1) / 2, (np.sqrt(3) - 1) / 2
        assert np.allclose(mf.spd_sqrt([[2.0, 1.0], [1.0, 2.0]]), [[a, b], [b, a]])

    def test_exp_log_roundtrip(self, rng):
        X = random_spd(rng, 4, 50.0)
        assert np.allclose(mf.spd_exp(mf.spd_log(X)), X, rtol=1e-12)

    def test_inverse_sqrt(self, rng):
        X = random_spd(rng, 3, 20.0)
        W = mf.spd_inv_sqrt(X)
        assert np.allclose(W @ X @ W, np.eye(3), atol=1e-12)

    def test_log_matches_scipy(self, rng):
        X = random_spd(rng, 4, 30.0)
        assert np.allclose(mf.spd_log(X), _scipy_logm(X), atol=1e-12)

    def test_pow(self, rng):
        X = random_spd(rng, 3, 10.0)
        assert np.allclose(mf.spd_pow(X, 2.0), X @ X)
        assert np.allclose(mf.spd_pow(X, -1.0), np.linalg.inv(X))


class TestKronecker:
    def test_vec_column_stacking(self):
        assert np.array_equal(mf.vec([[1, 3], [2, 4]]), [1, 2, 3, 4])

    def test_unvec_inverse(self, rng):
        A = rng.standard_normal((3, 2))
        assert np.array_equal(mf.unvec(mf.vec(A), 3, 2), A)

    def test_kron_identity(self):
        assert np.array_equal(mf.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_kron_sum_diag(self):
        K = mf.kron_sum(np.diag([1.0, 2.0]), np.diag([10.0, 20.0]))
        assert np.allclose(K, np.diag([11, 21, 12, 22]))

    def test_vec_identity(self, rng):
        A, B, C = (rng.standard_normal((3, 3)) for _ in range(3))
        lhs = mf.vec(A @ B @ C)
        rhs = mf.kron(C.T, A) @ mf.vec(B)
        assert np.allclose(lhs, rhs, atol=1e-13)

    def test_mixed_product(self, rng):
        A, B, C, D = (rng.standard_normal((2, 2)) for _ in range(4))
        assert np.allclose(mf.kron(A, B) @ mf.kron(C, D), mf.kron(A @ C, B @ D), atol=1e-13)

    def test_jacobian_square_cases(self):
        assert np.allclose(mf.jacobian_square(np.eye(2)), 2 * np.eye(4))
        assert np.allclose(mf.jacobian_square(np.diag([1.0, 2.0])), np.diag([2, 3, 3, 4]))
        assert np.allclose(mf.jacobian_square(np.zeros((2, 2))), 0)

    def test_jacobian_square_product_rule(self, rng):
        X = rng.standard_normal((3, 3))
        dX = rng.standard_normal((3, 3))
        J = mf.jacobian_square(X)
        assert np.allclose(J @ mf.vec(dX), mf.vec(X @ dX + dX @ X), atol=1e-12)


class TestGeneralLog:
    def test_similarity(self, rng):
        for n in (2, 3, 4):
            A = rng.standard_normal((n, n)) + 2 * np.eye(n)
            B = random_spd(rng, n, 20.0)
            lhs = A @ mf.spd_log(B) @ np.linalg.inv(A)
            rhs = mf.logm_general(A @ B @ np.linalg.inv(A))
            assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(mf.spd_log(B))

    def test_rejects_negative_spectrum(self):
        with pytest.raises(ValueError):
            mf.logm_general(np.diag([-1.0, 2.0]))

    def test_rejects_defective(self):
        with pytest.raises(ValueError):
            mf.logm_general([[1.0, 1.0], [0.0, 1.0]])


class TestFrechetLog:
    def test_identity_base(self, rng):
        Z = random_sym(rng, 3)
        assert np.allclose(mf.frechet_log(np.eye(3), Z), Z)

    def test_commuting(self):
        a, b = 2.0, 5.0
        assert np.allclose(mf.frechet_log(np.diag([a, b]), np.eye(2)), np.diag([1 / a, 1 / b]))

    def test_off_diagonal(self):
        c = 2 / (E**2 - 1)
        L = mf.frechet_log(np.diag([1.0, E**2]), [[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(L, [[0, c], [c, 0]], atol=1e-14)

    def test_repeated_eigenvalues_limit(self):
        a = 3.0
        X = np.diag([a, a + 1e-9])
        L = mf.frechet_log(X, [[0.0, 1.0], [1.0, 0.0]])
        assert np.isclose(L[0, 1], 1 / a, rtol=1e-8)

    def test_linearity(self, rng):
        X = random_spd(rng, 4, 30.0)
        Z1, Z2 = random_sym(rng, 4), random_sym(rng, 4)
        lhs = mf.frechet_log(X, 2.5 * Z1 - 0.7 * Z2)
        rhs = 2.5 * mf.frechet_log(X, Z1) - 0.7 * mf.frechet_log(X, Z2)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(lhs))

    def test_finite_differences(self, rng):
        eps = 1e-5
        for _ in range(5):
            X = random_spd(rng, 3, rng.uniform(2, 50))
            Z = random_sym(rng, 3)
            fd = (mf.spd_log(X + eps * Z) - mf.spd_log(X - eps * Z)) / (2 * eps)
            L = mf.frechet_log(X, Z)
            assert np.linalg.norm(L - fd) <= 1e-6 * np.linalg.norm(L)

    def test_matches_integral_by_quadrature(self, rng):
        X = random_spd(rng, 3, 10.0)
        Z = random_sym(rng, 3)
        s, w = mf.gauss_legendre_01(200)
        I = np.eye(3)
        acc = np.zeros((3, 3))
        for si, wi in zip(s, w):
            tau = si / (1 - si)
            Ri = np.linalg.inv(X + tau * I)
            acc += wi * Ri @ Z @ Ri / (1 - si) ** 2
        assert np.allclose(acc, mf.frechet_log(X, Z), atol=1e-8)


def _loginv_by_quadrature(X, order=64):
    # int_0^inf (X + tI)^-1 log X (X + tI)^-1 dt with t = s / (1 - s)
    s, w = mf.gauss_legendre_01(order)
    L = _scipy_logm(X)
    I = np.eye(X.shape[0])
    acc = np.zeros_like(X)
    for si, wi in zip(s, w):
        Ri = np.linalg.solve(X + si / (1 - si) * I, I)
        acc += wi * Ri @ L @ Ri / (1 - si) ** 2
    return acc


class TestIntegralIdentities:
    def test_loginv_cases(self):
        assert np.allclose(mf.loginv_integral(np.eye(2)), 0)
        assert np.allclose(mf.loginv_integral([[E]]), [[1 / E]])
        assert np.allclose(mf.loginv_integral(np.diag([E, E**2])), np.diag([1 / E, 2 / E**2]))

    def test_loginv_quadrature(self, rng):
        for n in (1, 2, 3):
            X = random_spd(rng, n, rng.uniform(1, 50))
            assert np.linalg.norm(_loginv_by_quadrature(X) - mf.loginv_integral(X)) <= 1e-6

    def test_log_mean_residual_cases(self):
        assert np.allclose(mf.log_mean_residual(np.eye(2), np.zeros((2, 2))), 0)
        assert np.allclose(mf.log_mean_residual([[E]], [[1 / E]]), 0, atol=1e-14)
        H = np.diag([1.0, 4.0])
        assert np.linalg.norm(mf.log_mean_residual(H, mf.loginv_integral(H), 32)) <= 1e-8

    def test_log_mean_residual_nonzero_for_wrong_M(self):
        H = np.diag([1.0, 4.0])
        assert np.linalg.norm(mf.log_mean_residual(H, np.eye(2))) > 0.1

    def test_quad_order_validation(self):
        with pytest.raises(ValueError):
            mf.log_mean_residual(np.eye(2), np.eye(2), quad_order=1)

    def test_gauss_legendre_exact_for_polynomials(self):
        x, w = mf.gauss_legendre_01(5)
        assert np.isclose(np.sum(w * x**9), 0.1)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 5),
    st.floats(1.0, 1e3),
    st.integers(0, 2**32 - 1),
)
def test_log_exp_inverse_property(n, cond, seed):
    X = random_spd(np.random.default_rng(seed), n, cond)
    L = mf.spd_log(X)
    assert np.linalg.norm(mf.spd_exp(L) - X) <= 1e-10 * np.linalg.norm(X)
    assert np.linalg.norm(mf.spd_log(mf.spd_exp(L)) - L) <= 1e-10 * max(1.0, np.linalg.norm(L))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.floats(1.0, 100.0), st.integers(0, 2**32 - 1))
def test_sqrt_squares_back_property(n, cond, seed):
    X = random_spd(np.random.default_rng(seed), n, cond)
    R = mf.spd_sqrt(X)
    assert np.allclose(R, R.T)
    assert np.linalg.norm(R @ R - X) <= 1e-11 * np.linalg.norm(X)
