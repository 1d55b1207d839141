import numpy as np
import pytest

from aksvd import kernels, nystrom
from aksvd.errors import (
    ConfigError,
    RankTooLargeError,
    SampleTooLargeError,
    SubproblemRankDeficientWarning,
    ToleranceUnreachableError,
    ZeroColumnError,
)
from aksvd.linalg import SvdResult, svd_exact
from conftest import eta_oracle, make_matrix


def exact_cfg(r, **kw):
    return nystrom.NystromConfig(r=r, subproblem="exact", **kw)


class TestSubsample:
    def test_full_sampling_is_identity(self):
        g = make_matrix(10, 8, seed=0)
        cfg = exact_cfg(2, n=10, m=8)
        g_nm, g_big_m, g_n_big = nystrom.subsample(g, cfg)
        np.testing.assert_array_equal(g_nm, g)
        np.testing.assert_array_equal(g_big_m, g)
        np.testing.assert_array_equal(g_n_big, g)

    def test_deterministic_indices(self):
        g = make_matrix(30, 20, seed=1)
        cfg = exact_cfg(3, n=10, m=8, seed=7)
        r1 = nystrom.sample_indices(g.shape, cfg)
        r2 = nystrom.sample_indices(g.shape, cfg)
        np.testing.assert_array_equal(r1[0], r2[0])
        np.testing.assert_array_equal(r1[1], r2[1])

    def test_blocks_are_consistent_slices(self):
        g = make_matrix(15, 12, seed=2)
        cfg = exact_cfg(2, n=6, m=5, seed=3)
        rows, cols = nystrom.sample_indices(g.shape, cfg)
        g_nm, g_big_m, g_n_big = nystrom.subsample(g, cfg)
        np.testing.assert_array_equal(g_nm, g_big_m[rows])
        np.testing.assert_array_equal(g_nm, g_n_big[:, cols])
        np.testing.assert_array_equal(g_big_m, g[:, cols])

    def test_sample_too_large(self):
        g = make_matrix(5, 5, seed=3)
        with pytest.raises(SampleTooLargeError):
            nystrom.subsample(g, exact_cfg(2, n=9, m=3))
        with pytest.raises(SampleTooLargeError):
            nystrom.subsample(g, exact_cfg(4, n=3, m=3))

    def test_growth_factor_validated(self):
        with pytest.raises(ConfigError):
            nystrom.NystromConfig(r=2, m_growth=1.0)
        with pytest.raises(ConfigError):
            nystrom.NystromConfig(r=2, m_growth=5.0)

    def test_rectangular_coupling(self):
        # row budget tracks the aspect ratio
        n, m = nystrom.resolve_sample_sizes((200, 100), exact_cfg(4, m=30))
        assert n == 60


class TestAsym:
    def test_full_sampling_exact(self):
        g = make_matrix(25, 18, seed=4)
        ref = svd_exact(g)
        res = nystrom.asym_nystrom(g, exact_cfg(4, n=25, m=18), reference=ref)
        assert res.eta <= 1e-8
        np.testing.assert_allclose(res.lambda_tilde, ref.s[:4], rtol=1e-10)

    def test_symmetric_reduction(self):
        # shared index sets on a symmetric PSD matrix: the asymmetric lift
        # coincides with the classical eigen-approximation
        b = make_matrix(20, 6, seed=5)
        g = b @ b.T + 1e-3 * np.eye(20)
        cfg = exact_cfg(3, n=8, m=8, seed=11)
        sym = nystrom.sym_nystrom(g, cfg)
        rows = sym.row_indices
        src = kernels.MatrixSource(g)
        g_nm, g_big_m, g_n_big = src.sample_blocks(rows, rows)
        u_t, v_t, lam = nystrom.lift_blocks(g_nm, g_big_m, g_n_big, 3, cfg)
        for s in range(3):
            d = min(np.linalg.norm(u_t[:, s] - sym.u_tilde[:, s]),
                    np.linalg.norm(u_t[:, s] + sym.u_tilde[:, s]))
            assert d <= 1e-8

    def test_exact_on_low_rank(self):
        # per-vector recovery from r+2 samples needs the sampled factor rows
        # to stay orthonormal, so pin the factor support onto the index draw
        cfg = exact_cfg(3, n=5, m=5, seed=0)
        rows, cols = nystrom.sample_indices((40, 25), cfg)
        u0 = np.zeros((40, 3))
        u0[rows[:3], [0, 1, 2]] = 1.0
        v0 = np.zeros((25, 3))
        v0[cols[:3], [0, 1, 2]] = 1.0
        g = u0 @ np.diag([5.0, 3.0, 1.0]) @ v0.T
        ref = svd_exact(g)
        res = nystrom.asym_nystrom(g, cfg, reference=ref)
        assert res.eta <= 1e-6

    def test_low_rank_subspace_exact(self):
        # with dense factors the lift mixes directions inside the target
        # subspaces, but the spanned subspaces themselves are still exact
        rng = np.random.default_rng(6)
        u0 = np.linalg.qr(rng.standard_normal((40, 3)))[0]
        v0 = np.linalg.qr(rng.standard_normal((25, 3)))[0]
        g = u0 @ np.diag([5.0, 3.0, 1.0]) @ v0.T
        res = nystrom.asym_nystrom(g, exact_cfg(3, n=5, m=5, seed=0))
        from scipy.linalg import subspace_angles
        assert np.max(subspace_angles(res.u_tilde, u0)) <= 1e-8
        assert np.max(subspace_angles(res.v_tilde, v0)) <= 1e-8

    def test_scaling_law(self):
        g = make_matrix(20, 15, seed=7)
        cfg = exact_cfg(3, n=10, m=8, seed=2)
        base = nystrom.asym_nystrom(g, cfg)
        scaled = nystrom.asym_nystrom(10.0 * g, cfg)
        np.testing.assert_allclose(scaled.lambda_tilde, 10.0 * base.lambda_tilde,
                                   rtol=1e-10)
        np.testing.assert_allclose(np.abs(scaled.u_tilde), np.abs(base.u_tilde),
                                   atol=1e-10)
        np.testing.assert_allclose(np.abs(scaled.v_tilde), np.abs(base.v_tilde),
                                   atol=1e-10)

    def test_deterministic(self):
        g = make_matrix(30, 30, seed=8)
        cfg = exact_cfg(3, m=12, seed=5)
        r1 = nystrom.asym_nystrom(g, cfg)
        r2 = nystrom.asym_nystrom(g, cfg)
        np.testing.assert_array_equal(r1.row_indices, r2.row_indices)
        np.testing.assert_array_equal(r1.u_tilde, r2.u_tilde)

    def test_rank_deficient_warns(self):
        rng = np.random.default_rng(9)
        g = np.outer(rng.standard_normal(20), rng.standard_normal(15))
        with pytest.warns(SubproblemRankDeficientWarning):
            res = nystrom.asym_nystrom(g, exact_cfg(3, n=6, m=6))
        assert res.lambda_tilde.size == 1

    def test_lazy_source_never_materializes(self):
        a = make_matrix(60, 60, seed=10)
        spec = kernels.KernelSpec(family="rbf", gamma=kernels.default_gamma(a))
        src = kernels.LazyKernelSource(spec, kernels.build_sources(a))
        res = nystrom.asym_nystrom(src, exact_cfg(3, n=12, m=12, seed=1))
        assert res.u_tilde.shape == (60, 3)
        assert src.entries_evaluated <= 60 * 12 + 12 * 60 + 12 * 12


class TestSym:
    def test_full_sampling_exact(self):
        b = make_matrix(15, 15, seed=11)
        k = b @ b.T
        res = nystrom.sym_nystrom(k, exact_cfg(4, n=15, m=15))
        vals, vecs = np.linalg.eigh(k)
        np.testing.assert_allclose(res.lambda_tilde, vals[::-1][:4], rtol=1e-8)
        for s in range(4):
            d = min(np.linalg.norm(res.u_tilde[:, s] - vecs[:, ::-1][:, s]),
                    np.linalg.norm(res.u_tilde[:, s] + vecs[:, ::-1][:, s]))
            assert d <= 1e-7

    def test_two_by_two(self):
        res = nystrom.sym_nystrom(np.diag([4.0, 1.0]),
                                  nystrom.NystromConfig(r=2, n=2, m=2))
        np.testing.assert_allclose(np.sort(res.lambda_tilde), [1.0, 4.0],
                                   atol=1e-10)

    def test_more_samples_help(self):
        angles_half = []
        angles_quarter = []
        for seed in range(10):
            b = make_matrix(48, 12, seed=100 + seed)
            k = b @ b.T
            top = np.linalg.eigh(k)[1][:, -1]
            for n, out in ((24, angles_half), (12, angles_quarter)):
                res = nystrom.sym_nystrom(
                    k, nystrom.NystromConfig(r=1, n=n, m=n, seed=seed,
                                             subproblem="exact"))
                cos = abs(float(top @ res.u_tilde[:, 0]))
                out.append(np.arccos(min(cos, 1.0)))
        assert np.median(angles_half) < np.median(angles_quarter)

    def test_needs_square(self):
        with pytest.raises(SampleTooLargeError):
            nystrom.sym_nystrom(make_matrix(4, 5, seed=0), exact_cfg(2, n=2, m=2))


class TestEta:
    def setup_method(self):
        g = make_matrix(12, 10, seed=12)
        self.ref = svd_exact(g)

    def test_reference_matches_itself(self):
        eta = nystrom.eta_accuracy(self.ref.u, self.ref.v, self.ref, 4)
        assert 0.0 <= eta <= 1e-12

    def test_sign_flips_ignored(self):
        flip = np.ones(4)
        flip[1] = -1.0
        eta = nystrom.eta_accuracy(self.ref.u[:, :4] * flip,
                                   self.ref.v[:, :4] * flip, self.ref, 4)
        assert 0.0 <= eta <= 1e-12

    def test_rescaling_ignored(self):
        eta = nystrom.eta_accuracy(3.0 * self.ref.u, 0.2 * self.ref.v,
                                   self.ref, 3)
        assert eta <= 1e-14

    def test_sixty_degree_hand_case(self):
        ref = SvdResult(u=np.array([[1.0], [0.0]]), s=np.array([2.0]),
                        v=np.array([[1.0], [0.0]]))
        u_t = np.array([[0.5], [np.sqrt(3) / 2]])
        eta = nystrom.eta_accuracy(u_t, ref.v, ref, 1)
        assert abs(eta - 1.0) <= 1e-12

    def test_non_negative(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            u_t = self.ref.u[:, :3] + 1e-8 * rng.standard_normal((12, 3))
            eta = nystrom.eta_accuracy(u_t, self.ref.v, self.ref, 3)
            assert eta >= 0.0

    def test_matches_independent_transcription(self):
        rng = np.random.default_rng(13)
        u_t = self.ref.u[:, :4] + 0.1 * rng.standard_normal((12, 4))
        v_t = self.ref.v[:, :4] + 0.1 * rng.standard_normal((10, 4))
        mine = nystrom.eta_accuracy(u_t, v_t, self.ref, 4)
        oracle = eta_oracle(self.ref.u, self.ref.s, self.ref.v, u_t, v_t, 4)
        assert abs(mine - oracle) <= 1e-12

    def test_zero_column(self):
        bad = self.ref.u.copy()
        bad[:, 0] = 0.0
        with pytest.raises(ZeroColumnError):
            nystrom.eta_accuracy(bad, self.ref.v, self.ref, 2)

    def test_rank_guard(self):
        with pytest.raises(RankTooLargeError):
            nystrom.eta_accuracy(self.ref.u, self.ref.v, self.ref,
                                 self.ref.rank + 1)


class TestSolveToTolerance:
    def setup_method(self):
        self.g = make_matrix(40, 32, seed=14)
        self.ref = svd_exact(self.g)

    def test_loose_tolerance_first_try(self):
        cfg = exact_cfg(3, seed=0)
        rep = nystrom.solve_to_tolerance(self.g, "asym_nystrom", 1.0,
                                         self.ref, cfg)
        assert rep.status == "ok"
        assert rep.m_used == 32  # start budget capped at min(N, M)

    def test_tsvd_machine_precision(self):
        rep = nystrom.solve_to_tolerance(self.g, "tsvd", 1e-8, self.ref,
                                         exact_cfg(3))
        assert rep.status == "ok" and rep.eta <= 1e-10

    def test_rsvd_growth(self):
        rep = nystrom.solve_to_tolerance(self.g, "rsvd", 1e-6, self.ref,
                                         nystrom.NystromConfig(r=3, seed=0))
        assert rep.status == "ok" and rep.eta <= 1e-6

    def test_sym_path(self):
        # needs a clear gap after the first two singular values: the one-shot
        # gram subsample cannot split a near-degenerate leading pair
        rng = np.random.default_rng(3)
        u = np.linalg.qr(rng.standard_normal((60, 48)))[0]
        v = np.linalg.qr(rng.standard_normal((48, 48)))[0]
        s = np.concatenate([[12.0, 8.0], 0.8 * rng.random(46) + 0.2])
        g = u @ np.diag(s) @ v.T
        rep = nystrom.solve_to_tolerance(g, "sym_nystrom", 1.0, svd_exact(g),
                                         exact_cfg(2, seed=1))
        assert rep.status == "ok"
        assert rep.eta <= 1.0

    def test_full_column_budget_hits_any_epsilon(self):
        g = make_matrix(30, 24, seed=15)
        ref = svd_exact(g)
        rep = nystrom.solve_to_tolerance(
            g, "asym_nystrom", 1e-8, ref, exact_cfg(3, n=30, m=24))
        assert rep.eta <= 1e-8

    def test_unreachable_carries_report(self):
        cfg = exact_cfg(3, seed=0)
        with pytest.raises(ToleranceUnreachableError) as exc:
            nystrom.solve_to_tolerance(self.g, "asym_nystrom", 1e-15,
                                       self.ref, cfg)
        rep = exc.value.report
        assert rep.status == "tolerance_unreachable"
        assert rep.m_used == 32
        assert rep.eta > 1e-15

    def test_unknown_solver(self):
        with pytest.raises(ConfigError):
            nystrom.solve_to_tolerance(self.g, "magic", 1.0, self.ref,
                                       exact_cfg(2))

    def test_sharper_spectrum_needs_fewer_samples(self):
        # wide bandwidths flatten the row-normalized kernel toward rank one,
        # so its spectrum decays fast and a small sample budget suffices;
        # narrow bandwidths keep the spectrum flat and need far more columns
        pts = make_matrix(80, 6, seed=16)
        zs = make_matrix(90, 6, seed=17)
        src = kernels.DataSources(x=pts, z=zs)
        base = kernels.default_gamma(pts)
        used = {}
        for label, gamma in (("wide", 4.0 * base), ("narrow", 0.25 * base)):
            spec = kernels.KernelSpec(family="sne", gamma=gamma)
            g = kernels.kernel_matrix(spec, src)
            ref = svd_exact(g)
            budgets = []
            for seed in range(5):
                try:
                    rep = nystrom.solve_to_tolerance(
                        g, "asym_nystrom", 1e-1, ref,
                        exact_cfg(3, seed=seed, m=8))
                except ToleranceUnreachableError as err:
                    rep = err.report
                budgets.append(rep.m_used)
            used[label] = np.median(budgets)
        assert used["wide"] < used["narrow"]
