import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aksvd import linalg
from aksvd.errors import (
    NonFiniteError,
    RankTooLargeError,
    ShapeMismatchError,
    ZeroMatrixError,
)
from conftest import eta_oracle, make_matrix


class TestSvdExact:
    def test_diagonal(self):
        res = linalg.svd_exact(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(res.s, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(res.u), np.eye(2), atol=1e-12)
        np.testing.assert_allclose(np.abs(res.v), np.eye(2), atol=1e-12)

    def test_nilpotent_shift(self):
        res = linalg.svd_exact(np.array([[0.0, 1.0], [0.0, 0.0]]))
        np.testing.assert_allclose(res.s, [1.0])
        np.testing.assert_allclose(res.u[:, 0], [1.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(res.v[:, 0], [0.0, 1.0], atol=1e-14)

    def test_against_gram_eigen_oracle(self):
        # independent route: eigenvalues of A^T A via LAPACK eigh
        a = make_matrix(8, 5, seed=7)
        res = linalg.svd_exact(a)
        evals = np.linalg.eigvalsh(a.T @ a)[::-1]
        np.testing.assert_allclose(res.s, np.sqrt(np.clip(evals, 0, None)),
                                   rtol=0, atol=1e-10 * res.s[0])

    def test_reconstruction_and_orthonormality(self):
        a = make_matrix(40, 25, seed=3)
        res = linalg.svd_exact(a, tol=1e-10)
        recon = res.u @ np.diag(res.s) @ res.v.T
        assert np.linalg.norm(a - recon) <= 10 * 1e-10 * np.linalg.norm(a)
        np.testing.assert_allclose(res.u.T @ res.u, np.eye(res.rank), atol=1e-9)
        np.testing.assert_allclose(res.v.T @ res.v, np.eye(res.rank), atol=1e-9)

    def test_transpose_swaps_factors(self):
        a = make_matrix(9, 6, seed=11)
        res = linalg.svd_exact(a)
        res_t = linalg.svd_exact(a.T)
        np.testing.assert_allclose(res_t.s, res.s, rtol=1e-12)
        # canonical signs are set from the left factor, so compare up to signs
        for k in range(res.rank):
            du = min(np.linalg.norm(res_t.u[:, k] - res.v[:, k]),
                     np.linalg.norm(res_t.u[:, k] + res.v[:, k]))
            dv = min(np.linalg.norm(res_t.v[:, k] - res.u[:, k]),
                     np.linalg.norm(res_t.v[:, k] + res.u[:, k]))
            assert du < 1e-9 and dv < 1e-9

    def test_rank_cutoff(self):
        a = np.outer([1.0, 2.0, 3.0], [1.0, 0.5, 2.0, -1.0])
        a = a + np.outer([0.0, 1.0, -1.0], [2.0, 1.0, 0.0, 1.0])
        res = linalg.svd_exact(a)
        assert res.rank == 2

    def test_sign_canonicalization(self):
        a = make_matrix(12, 7, seed=5)
        res = linalg.svd_exact(a)
        for s in range(res.rank):
            k = np.argmax(np.abs(res.u[:, s]))
            assert res.u[k, s] > 0

    def test_errors(self):
        with pytest.raises(NonFiniteError):
            linalg.svd_exact(np.array([[1.0, np.nan], [0.0, 1.0]]))
        with pytest.raises(ZeroMatrixError):
            linalg.svd_exact(np.zeros((3, 3)))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 10_000))
    def test_shifted_eigenvalue_property(self, n, m, seed):
        """A v_s = s_s u_s and A^T u_s = s_s v_s for every returned triplet."""
        a = np.random.default_rng(seed).standard_normal((n, m))
        res = linalg.svd_exact(a)
        scale = np.linalg.norm(a)
        assert np.linalg.norm(a @ res.v - res.u * res.s) <= 1e-8 * scale
        assert np.linalg.norm(a.T @ res.u - res.v * res.s) <= 1e-8 * scale

    def test_gram_form_property(self):
        for seed in range(5):
            a = make_matrix(15, 9, seed=seed)
            res = linalg.svd_exact(a)
            sq = np.linalg.norm(a) ** 2
            lhs1 = a.T @ a @ res.v - a.T @ res.u @ np.diag(res.s)
            lhs2 = a @ a.T @ res.u - a @ res.v @ np.diag(res.s)
            assert np.linalg.norm(lhs1) <= 1e-7 * sq
            assert np.linalg.norm(lhs2) <= 1e-7 * sq


class TestSvdRandomized:
    def test_full_oversampling_exact(self):
        res = linalg.svd_randomized(np.diag([5.0, 4.0, 3.0, 2.0, 1.0]),
                                    r=2, oversample=10, power_iters=2, seed=0)
        np.testing.assert_allclose(res.s, [5.0, 4.0], atol=1e-12)

    def test_small_sketch_accuracy(self):
        a = np.diag([5.0, 4.0, 3.0, 2.0, 1.0])
        ref = linalg.svd_exact(a)
        res = linalg.svd_randomized(a, r=2, oversample=2, power_iters=2, seed=0)
        assert eta_oracle(ref.u, ref.s, ref.v, res.u, res.v, 2) <= 1e-6

    def test_oversampling_helps_on_flat_spectrum(self):
        rng = np.random.default_rng(7)
        q1, _ = np.linalg.qr(rng.standard_normal((20, 20)))
        q2, _ = np.linalg.qr(rng.standard_normal((20, 20)))
        svals = np.concatenate([[1.0, 0.99], np.linspace(0.9, 0.05, 18)])
        a = q1 @ np.diag(svals) @ q2.T
        ref = linalg.svd_exact(a)
        eta0 = eta_oracle(ref.u, ref.s, ref.v,
                          *(lambda r: (r.u, r.v))(
                              linalg.svd_randomized(a, 1, oversample=0, seed=3)), 1)
        eta10 = eta_oracle(ref.u, ref.s, ref.v,
                           *(lambda r: (r.u, r.v))(
                               linalg.svd_randomized(a, 1, oversample=10, seed=3)), 1)
        assert eta0 > eta10

    def test_matches_exact_under_full_sketch(self):
        a = make_matrix(12, 8, seed=2)
        ref = linalg.svd_exact(a)
        res = linalg.svd_randomized(a, r=3, oversample=8, power_iters=1, seed=4)
        np.testing.assert_allclose(res.s, ref.s[:3], atol=1e-8)
        for k in range(3):
            assert min(np.linalg.norm(res.u[:, k] - ref.u[:, k]),
                       np.linalg.norm(res.u[:, k] + ref.u[:, k])) < 1e-8

    def test_deterministic(self):
        a = make_matrix(30, 20, seed=9)
        r1 = linalg.svd_randomized(a, 4, seed=13)
        r2 = linalg.svd_randomized(a, 4, seed=13)
        assert np.array_equal(r1.u, r2.u) and np.array_equal(r1.v, r2.v)

    def test_rank_too_large(self):
        with pytest.raises(RankTooLargeError):
            linalg.svd_randomized(np.eye(4), r=5)


class TestSvdTruncated:
    def test_diagonal_top3(self):
        res = linalg.svd_truncated(np.diag([5.0, 4.0, 3.0, 2.0, 1.0]), r=3)
        np.testing.assert_allclose(res.s, [5.0, 4.0, 3.0], atol=1e-10)

    def test_oracle_comparison(self):
        a = make_matrix(50, 30, seed=21)
        ref = linalg.svd_exact(a)
        res = linalg.svd_truncated(a, r=5)
        assert eta_oracle(ref.u, ref.s, ref.v, res.u, res.v, 5) <= 1e-8

    def test_rank_deflation(self):
        rng = np.random.default_rng(6)
        a = np.outer(rng.standard_normal(10), rng.standard_normal(7))
        a += np.outer(rng.standard_normal(10), rng.standard_normal(7))
        res = linalg.svd_truncated(a, r=2, tol=1e-10)
        assert res.rank == 2
        ref = linalg.svd_exact(a)
        np.testing.assert_allclose(res.s, ref.s[:2], rtol=1e-9)

    def test_deterministic(self):
        a = make_matrix(25, 18, seed=3)
        r1 = linalg.svd_truncated(a, 4)
        r2 = linalg.svd_truncated(a, 4)
        assert np.array_equal(r1.u, r2.u) and np.array_equal(r1.s, r2.s)

    def test_rank_too_large(self):
        with pytest.raises(RankTooLargeError):
            linalg.svd_truncated(np.eye(3), r=4)


class TestPlumbing:
    def test_identity_matmul(self):
        x = make_matrix(3, 4, seed=0)
        np.testing.assert_array_equal(linalg.matmul(np.eye(3), x), x)

    def test_matmul_shape_error(self):
        with pytest.raises(ShapeMismatchError):
            linalg.matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_transpose_product_rule(self):
        a = make_matrix(4, 3, seed=1)
        b = make_matrix(3, 2, seed=2)
        np.testing.assert_allclose(linalg.transpose(linalg.matmul(a, b)),
                                   linalg.matmul(linalg.transpose(b),
                                                 linalg.transpose(a)))

    def test_qr_thin_of_orthonormal(self):
        a = np.linalg.qr(make_matrix(6, 4, seed=8))[0]
        q, r = linalg.qr_thin(a)
        np.testing.assert_allclose(np.abs(np.diag(r)), np.ones(4), atol=1e-12)
        np.testing.assert_allclose(q @ r, a, atol=1e-12)

    def test_qr_reconstruction(self):
        a = make_matrix(10, 6, seed=4)
        q, r = linalg.qr_thin(a)
        assert np.linalg.norm(q @ r - a) <= 1e-12 * np.linalg.norm(a)
        assert np.allclose(np.triu(r), r)

    def test_gaussian_matrix_deterministic(self):
        g1 = linalg.gaussian_matrix(5, 3, seed=99)
        g2 = linalg.gaussian_matrix(5, 3, seed=99)
        assert np.array_equal(g1, g2)
        assert not np.array_equal(g1, linalg.gaussian_matrix(5, 3, seed=100))

    def test_csv_round_trip(self, tmp_path):
        a = make_matrix(7, 5, seed=17) * 1e3
        path = tmp_path / "m.csv"
        linalg.write_matrix_csv(path, a)
        back = linalg.read_matrix_csv(path)
        np.testing.assert_allclose(back, a, rtol=1e-15)

    def test_validation(self):
        with pytest.raises(NonFiniteError):
            linalg.as_matrix([[np.inf, 0.0]])
        with pytest.raises(ShapeMismatchError):
            linalg.as_matrix(np.zeros((2, 2, 2)))
