import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simowiener.numerics import (
    GevProblem,
    NotPSDError,
    SingularPencilError,
    incomplete_cholesky,
    nearest_kronecker_rank1,
    sign_normalize,
    solve_gev,
)


def _residual_ok(problem, sol, tol=1e-8):
    a, b, v, rho = problem.a, problem.b, sol.eigenvector, sol.eigenvalue
    lhs = np.linalg.norm(a @ v - rho * b @ v)
    return lhs <= tol * (np.linalg.norm(a) + abs(rho) * np.linalg.norm(b)) * np.linalg.norm(v)


def _random_pencil(rng, n):
    a = rng.standard_normal((n, n))
    a = a + a.T
    m = rng.standard_normal((n, n))
    return GevProblem(a, m @ m.T + n * np.eye(n))


class TestSolveGev:
    def test_diagonal_pencil(self):
        sol = solve_gev(GevProblem(np.diag([1.0, 3.0]), np.eye(2), "largest"))
        assert sol.eigenvalue == pytest.approx(3.0)
        np.testing.assert_allclose(sol.eigenvector, [0.0, 1.0], atol=1e-14)

    def test_degenerate_pencil_a_equals_b(self):
        problem = GevProblem(np.diag([1.0, 3.0]), np.diag([1.0, 3.0]), "largest")
        sol = solve_gev(problem)
        assert sol.eigenvalue == pytest.approx(1.0)
        assert np.linalg.norm(sol.eigenvector) == pytest.approx(1.0)
        assert _residual_ok(problem, sol)

    def test_smallest_of_exchange_matrix(self):
        # eigenpairs of [[0,1],[1,0]] by hand: -1 with (1,-1)/sqrt2, +1 with (1,1)/sqrt2
        sol = solve_gev(GevProblem(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(2), "smallest"))
        assert sol.eigenvalue == pytest.approx(-1.0)
        np.testing.assert_allclose(sol.eigenvector, np.array([1.0, -1.0]) / np.sqrt(2), atol=1e-14)

    def test_matches_scipy_generalized_eigh(self, rng):
        from scipy.linalg import eigh

        problem = _random_pencil(rng, 7)
        w, v = eigh(problem.a, problem.b)
        for select, k in (("largest", -1), ("smallest", 0)):
            sol = solve_gev(GevProblem(problem.a, problem.b, select))
            assert sol.eigenvalue == pytest.approx(w[k], rel=1e-10)
            ref = sign_normalize(v[:, k] / np.linalg.norm(v[:, k]))
            np.testing.assert_allclose(sol.eigenvector, ref, atol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 9), st.integers(0, 2**32 - 1), st.sampled_from(["largest", "smallest"]))
    def test_residual_contract(self, n, seed, select):
        p = _random_pencil(np.random.default_rng(seed), n)
        problem = GevProblem(p.a, p.b, select)
        sol = solve_gev(problem)
        assert _residual_ok(problem, sol)
        assert np.linalg.norm(sol.eigenvector) == pytest.approx(1.0)
        first = sol.eigenvector[np.abs(sol.eigenvector) > 1e-12][0]
        assert first > 0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, seed, c):
        p = _random_pencil(np.random.default_rng(seed), 5)
        ref = solve_gev(p)
        scaled = solve_gev(GevProblem(c * p.a, c * p.b))
        assert scaled.eigenvalue == pytest.approx(ref.eigenvalue, rel=1e-9, abs=1e-12)
        np.testing.assert_allclose(scaled.eigenvector, ref.eigenvector, atol=1e-8)

    def test_singular_b_gets_jitter(self):
        a = np.diag([1.0, 2.0, 3.0])
        b = np.diag([1.0, 1.0, 0.0])
        sol = solve_gev(GevProblem(a, b, "smallest"))
        assert sol.eigenvalue == pytest.approx(1.0)

    def test_indefinite_b_is_singular_pencil(self):
        with pytest.raises(SingularPencilError, match="singular pencil"):
            solve_gev(GevProblem(np.eye(2), np.diag([1.0, -1.0])))

    def test_zero_b_is_singular_pencil(self):
        with pytest.raises(SingularPencilError):
            solve_gev(GevProblem(np.eye(2), np.zeros((2, 2))))

    @pytest.mark.parametrize(
        "a, b, message",
        [
            (np.eye(2), np.eye(3), "dimension mismatch"),
            (np.ones((2, 3)), np.ones((2, 3)), "square"),
            (np.array([[0.0, np.nan], [np.nan, 0.0]]), np.eye(2), "non-finite"),
            (np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2), "not symmetric"),
        ],
    )
    def test_invalid_problems(self, a, b, message):
        with pytest.raises(ValueError, match=message):
            GevProblem(a, b)

    def test_bad_select(self):
        with pytest.raises(ValueError, match="select"):
            GevProblem(np.eye(2), np.eye(2), "middle")


class TestNearestKronecker:
    def test_exact_kronecker_input(self):
        h = np.array([1.0, 2.0]) / np.sqrt(5)
        alpha = np.array([3.0, 0.0, 4.0])
        h_hat, a_hat = nearest_kronecker_rank1(np.kron(h, alpha), 2, 3)
        np.testing.assert_allclose(h_hat, h, atol=1e-14)
        np.testing.assert_allclose(a_hat, alpha, atol=1e-13)
        assert np.linalg.norm(h_hat) == pytest.approx(1.0)

    def test_elementary_matrix(self):
        h, alpha = nearest_kronecker_rank1(np.array([1.0, 0.0, 0.0, 0.0]), 2, 2)
        np.testing.assert_allclose(np.abs(h), [1.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(np.abs(alpha), [1.0, 0.0], atol=1e-14)

    def test_error_is_second_singular_value(self, rng):
        v = rng.standard_normal(6)
        h, alpha = nearest_kronecker_rank1(v, 2, 3)
        sv = np.linalg.svd(v.reshape(2, 3), compute_uv=False)
        assert np.linalg.norm(v.reshape(2, 3) - np.outer(h, alpha)) == pytest.approx(sv[1], rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_idempotent(self, rows, cols, seed):
        rng = np.random.default_rng(seed)
        h, alpha = nearest_kronecker_rank1(rng.standard_normal(rows * cols), rows, cols)
        h2, alpha2 = nearest_kronecker_rank1(np.kron(h, alpha), rows, cols)
        s = np.sign(h2 @ h)
        np.testing.assert_allclose(s * h2, h, atol=1e-10)
        np.testing.assert_allclose(s * alpha2, alpha, atol=1e-10 * max(1.0, np.abs(alpha).max()))

    def test_zero_input(self):
        with pytest.raises(ValueError, match="degenerate rank-1 factorization"):
            nearest_kronecker_rank1(np.zeros(4), 2, 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            nearest_kronecker_rank1(np.ones(5), 2, 3)


def _dense(k):
    return lambda i, j: k[i, j]


def _gauss(points, width):
    return np.exp(-np.subtract.outer(points, points) ** 2 / (2 * width**2))


class TestIncompleteCholesky:
    def test_rank_one(self):
        icd = incomplete_cholesky(_dense(np.ones((4, 4))), 4, 1e-8)
        assert icd.g.shape == (4, 1)
        np.testing.assert_allclose(np.abs(icd.g[:, 0]), 1.0)

    def test_identity(self):
        icd = incomplete_cholesky(_dense(np.eye(3)), 3, 1e-8)
        assert icd.g.shape[1] == 3
        np.testing.assert_allclose(icd.g @ icd.g.T, np.eye(3), atol=1e-12)

    def test_three_points_against_dense_oracle(self):
        k = _gauss(np.array([0.0, 0.1, 5.0]), 1.0)
        icd = incomplete_cholesky(_dense(k), 3, 1e-8)
        assert 0 <= np.trace(k - icd.g @ icd.g.T) <= 1e-8
        assert icd.residual_trace == pytest.approx(np.trace(k - icd.g @ icd.g.T), abs=1e-12)
        # two clusters: the dense spectrum says rank 2 carries all but ~1e-3
        eig = np.linalg.eigvalsh(k)
        assert np.sum(eig) - np.sum(eig[-icd.g.shape[1]:]) <= 1e-8 + 1e-12

    def test_entrywise_bound_random_gaussian(self, rng):
        precision = 1e-6
        k = _gauss(rng.standard_normal(10), 0.7)
        icd = incomplete_cholesky(_dense(k), 10, precision)
        resid = k - icd.g @ icd.g.T
        assert 0 <= np.trace(resid) <= precision
        assert np.abs(resid).max() <= np.sqrt(precision * np.diag(k).max())

    def test_pivot_rows_are_lower_triangular(self, rng):
        k = _gauss(rng.uniform(-3, 3, 30), 0.5)
        icd = incomplete_cholesky(_dense(k), 30, 1e-10)
        rows = icd.g[icd.pivots]
        np.testing.assert_array_equal(np.triu(rows, 1), 0.0)
        assert np.all(np.diag(rows) > 0)

    def test_max_rank(self, rng):
        k = _gauss(rng.uniform(-3, 3, 30), 0.5)
        assert incomplete_cholesky(_dense(k), 30, 1e-12, max_rank=4).g.shape == (30, 4)

    def test_not_psd(self):
        with pytest.raises(NotPSDError, match="not PSD"):
            incomplete_cholesky(_dense(np.array([[1.0, 2.0], [2.0, 1.0]])), 2, 1e-8)

    def test_negative_diagonal(self):
        with pytest.raises(NotPSDError):
            incomplete_cholesky(_dense(np.diag([1.0, -1.0])), 2, 1e-8)

    def test_bad_precision(self):
        with pytest.raises(ValueError):
            incomplete_cholesky(_dense(np.eye(2)), 2, 0.0)
