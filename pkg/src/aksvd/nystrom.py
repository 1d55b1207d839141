"""Nystrom approximation of singular triplets from subsampled kernel blocks.

The asymmetric path samples n rows and m columns of the kernel matrix,
solves a small rank-r SVD on the intersection block, and lifts the factors
back to full length with the sampled cross blocks. It never needs the
full matrix, which is where the speedup over direct solvers comes from.

A symmetric baseline (the classical Nystrom eigen-approximation, applied
to the two Gram matrices) and the eta alignment metric used to compare
solvers are also provided, together with a budget-growth driver that
raises the sample count until a target eta is met.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ConfigError,
    RankTooLargeError,
    SampleTooLargeError,
    SubproblemRankDeficientWarning,
    ToleranceUnreachableError,
    ZeroColumnError,
)
from .kernels import as_kernel_source
from .linalg import (
    SvdResult,
    as_matrix,
    canonicalize_signs,
    eigh_lanczos,
    svd_exact,
    svd_randomized,
    svd_truncated,
)


@dataclass(frozen=True)
class NystromConfig:
    """Sampling and subproblem knobs for the Nystrom solvers."""

    r: int
    n: int | None = None        # row samples; None derives it from m
    m: int | None = None        # column samples; None -> max(4r, 32), capped
    seed: int = 0
    epsilon: float | None = None
    m_growth: float = 2.0
    m_max: int | None = None
    subproblem: str = "rsvd"    # "rsvd" (default) or "exact"
    oversample: int = 10
    power_iters: int = 2

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError(f"rank must be >= 1, got {self.r}")
        if not 1.0 < self.m_growth <= 4.0:
            raise ConfigError(
                f"m_growth must lie in (1, 4], got {self.m_growth}")
        if self.subproblem not in ("rsvd", "exact"):
            raise ConfigError(f"unknown subproblem solver {self.subproblem!r}")


@dataclass(frozen=True)
class NystromResult:
    u_tilde: np.ndarray
    v_tilde: np.ndarray
    lambda_tilde: np.ndarray
    row_indices: np.ndarray
    col_indices: np.ndarray
    eta: float | None = None
    wall_time: float = 0.0


def resolve_sample_sizes(shape, cfg: NystromConfig) -> tuple[int, int]:
    """Concrete (n, m) for a matrix shape: coupled so n/m tracks N/M."""
    big_n, big_m = shape
    m = cfg.m
    if m is None:
        m = min(max(4 * cfg.r, 32), big_m)
    n = cfg.n
    if n is None:
        if big_n == big_m:
            n = m
        else:
            n = int(round(m * big_n / big_m))
        n = min(max(n, cfg.r), big_n)
    if n > big_n or m > big_m:
        raise SampleTooLargeError(
            f"requested n={n}, m={m} from a {big_n} x {big_m} matrix")
    if cfg.r > min(n, m):
        raise SampleTooLargeError(
            f"rank {cfg.r} exceeds sample budget min(n={n}, m={m})")
    return n, m


def sample_indices(shape, cfg: NystromConfig):
    """Sorted row/column index sets, uniform without replacement, seeded."""
    n, m = resolve_sample_sizes(shape, cfg)
    rng = np.random.default_rng(cfg.seed)
    rows = np.sort(rng.choice(shape[0], size=n, replace=False))
    cols = np.sort(rng.choice(shape[1], size=m, replace=False))
    return rows, cols


def subsample(g_source, cfg: NystromConfig):
    """Extract (G_nm, G_Nm, G_nM) for the config's sampled index sets."""
    source = as_kernel_source(g_source)
    rows, cols = sample_indices(source.shape, cfg)
    return source.sample_blocks(rows, cols)


def _small_svd(g_nm: np.ndarray, cfg: NystromConfig) -> SvdResult:
    if cfg.subproblem == "exact":
        res = svd_exact(g_nm)
        take = min(cfg.r, res.rank)
        return SvdResult(u=res.u[:, :take], s=res.s[:take], v=res.v[:, :take])
    return svd_randomized(g_nm, cfg.r, oversample=cfg.oversample,
                          power_iters=cfg.power_iters, seed=cfg.seed)


def _unit_columns(a: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0.0):
        raise ZeroColumnError(f"{what} produced an all-zero column")
    return a / norms[None, :]


def lift_blocks(g_nm, g_big_m, g_n_big, r: int, cfg: NystromConfig):
    """Core reconstruction from pre-extracted blocks.

    Returns unit-normalized (U_tilde, V_tilde) with canonical signs and the
    rescaled singular value estimates. The estimate multiplies the
    subproblem values by sqrt(N*M / (n*m)), which reproduces the exact
    values at full sampling.
    """
    g_nm = as_matrix(g_nm, "G_nm")
    g_big_m = as_matrix(g_big_m, "G_Nm")
    g_n_big = as_matrix(g_n_big, "G_nM")
    n, m = g_nm.shape
    big_n = g_big_m.shape[0]
    big_m = g_n_big.shape[1]
    small = _small_svd(g_nm, cfg)
    if small.rank < r:
        warnings.warn(
            f"sampled block has numerical rank {small.rank} < requested {r}; "
            "result truncated", SubproblemRankDeficientWarning, stacklevel=3)
    u_t = _unit_columns(g_big_m @ (small.v / small.s[None, :]), "U_tilde")
    v_t = _unit_columns(g_n_big.T @ (small.u / small.s[None, :]), "V_tilde")
    u_t, v_t = canonicalize_signs(u_t, v_t)
    lam = small.s * np.sqrt(big_n * big_m / (n * m))
    return u_t, v_t, lam


def asym_nystrom(g_source, cfg: NystromConfig,
                 reference: SvdResult | None = None) -> NystromResult:
    """Approximate the top-r singular triplets from sampled blocks."""
    source = as_kernel_source(g_source)
    t0 = time.perf_counter()
    rows, cols = sample_indices(source.shape, cfg)
    g_nm, g_big_m, g_n_big = source.sample_blocks(rows, cols)
    u_t, v_t, lam = lift_blocks(g_nm, g_big_m, g_n_big, cfg.r, cfg)
    wall = time.perf_counter() - t0
    eta = None
    if reference is not None:
        eta = eta_accuracy(u_t, v_t, reference, min(cfg.r, lam.size))
    return NystromResult(u_tilde=u_t, v_tilde=v_t, lambda_tilde=lam,
                         row_indices=rows, col_indices=cols,
                         eta=eta, wall_time=wall)


def sym_nystrom(k_source, cfg: NystromConfig,
                reference_vals: np.ndarray | None = None):
    """Classical Nystrom eigen-approximation of a symmetric matrix.

    Samples n of the N landmarks, solves the small eigenproblem with a
    Lanczos method at rank r, and lifts: the eigenvalue estimate scales by
    N/n and the lifted vectors are unit-normalized so they can be compared
    directly with singular vectors from the asymmetric path.
    """
    source = as_kernel_source(k_source)
    big_n, big_m = source.shape
    if big_n != big_m:
        raise SampleTooLargeError("sym_nystrom needs a square symmetric source")
    sq_cfg = replace(cfg, n=cfg.n if cfg.n is not None else cfg.m,
                     m=cfg.m if cfg.m is not None else cfg.n)
    t0 = time.perf_counter()
    rows, _ = sample_indices((big_n, big_n), sq_cfg)
    k_nn, k_big_n, _ = source.sample_blocks(rows, rows)
    k_nn = 0.5 * (k_nn + k_nn.T)  # symmetrize against sampling round-off
    n = rows.size
    if cfg.subproblem == "exact":
        vals_all, vecs_all = np.linalg.eigh(k_nn)
        order = np.argsort(-vals_all)[: cfg.r]
        vals, vecs = vals_all[order], canonicalize_signs(vecs_all[:, order])
    else:
        vals, vecs = eigh_lanczos(k_nn, cfg.r, start_seed=cfg.seed)
    positive = vals > 1e-12 * max(vals.max(), 1e-300)
    if positive.sum() < cfg.r:
        warnings.warn(
            f"sampled block has {int(positive.sum())} positive eigenvalues "
            f"< requested {cfg.r}; result truncated",
            SubproblemRankDeficientWarning, stacklevel=2)
    vals = vals[positive]
    vecs = vecs[:, positive]
    u_t = _unit_columns(k_big_n @ (vecs / vals[None, :]), "U_tilde")
    u_t = canonicalize_signs(u_t)
    lam = vals * (big_n / n)
    wall = time.perf_counter() - t0
    return NystromResult(u_tilde=u_t, v_tilde=u_t, lambda_tilde=lam,
                         row_indices=rows, col_indices=rows,
                         eta=None, wall_time=wall)


def eta_accuracy(u_tilde, v_tilde, reference: SvdResult, r: int) -> float:
    """Weighted misalignment of approximate singular vectors vs a reference.

    For each of the top r pairs the cosine between the approximation and
    the reference vector (both sides) is folded into
    sum_i w_i (1 - |cos_i|) / r with w_i the reference singular values.
    Sign flips and column rescalings of the approximation do not matter.
    """
    u_tilde = as_matrix(u_tilde, "U_tilde")
    v_tilde = as_matrix(v_tilde, "V_tilde")
    if r > reference.rank:
        raise RankTooLargeError(
            f"r={r} exceeds reference rank {reference.rank}")
    if r > u_tilde.shape[1] or r > v_tilde.shape[1]:
        raise RankTooLargeError(f"approximation has fewer than r={r} columns")
    u_norms = np.linalg.norm(u_tilde[:, :r], axis=0)
    v_norms = np.linalg.norm(v_tilde[:, :r], axis=0)
    if np.any(u_norms == 0.0) or np.any(v_norms == 0.0):
        raise ZeroColumnError("approximation contains an all-zero column")
    w = reference.s[:r]
    cu = np.abs(np.einsum("ij,ij->j", reference.u[:, :r], u_tilde[:, :r])) / u_norms
    cv = np.abs(np.einsum("ij,ij->j", reference.v[:, :r], v_tilde[:, :r])) / v_norms
    # rounding can push a perfect cosine a hair above 1
    cu = np.minimum(cu, 1.0)
    cv = np.minimum(cv, 1.0)
    return float((w * (1.0 - cu)).sum() / r + (w * (1.0 - cv)).sum() / r)


@dataclass(frozen=True)
class SolveReport:
    solver: str
    result: object
    m_used: int
    eta: float
    wall_time: float
    status: str  # "ok" or "tolerance_unreachable"


SOLVERS = ("tsvd", "rsvd", "sym_nystrom", "asym_nystrom")


def solve_to_tolerance(g_source, solver: str, epsilon: float,
                       reference: SvdResult, cfg: NystromConfig) -> SolveReport:
    """Run one solver until its eta against the reference drops below epsilon.

    Sampled solvers grow their budget multiplicatively; rsvd grows its
    oversampling; tsvd runs once at machine precision. Wall time counts the
    solver work only, not reference or eta evaluation. If the budget cap is
    reached with eta still above epsilon a ToleranceUnreachableError is
    raised, carrying the last report in its ``report`` attribute.
    """
    if solver not in SOLVERS:
        raise ConfigError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    source = as_kernel_source(g_source)
    big_n, big_m = source.shape
    r = cfg.r

    if solver == "tsvd":
        g = source.full()
        t0 = time.perf_counter()
        res = svd_truncated(g, r, tol=1e-14)
        wall = time.perf_counter() - t0
        eta = eta_accuracy(res.u, res.v, reference, min(r, res.rank))
        report = SolveReport(solver, res, 0, eta, wall,
                             "ok" if eta <= epsilon else "tolerance_unreachable")
        if eta > epsilon:
            raise _unreachable(report, epsilon)
        return report

    if solver == "rsvd":
        g = source.full()
        oversample = 10
        cap = max(min(big_n, big_m) - r, 1)
        wall = 0.0
        while True:
            t0 = time.perf_counter()
            res = svd_randomized(g, r, oversample=oversample,
                                 power_iters=cfg.power_iters, seed=cfg.seed)
            wall += time.perf_counter() - t0
            eta = eta_accuracy(res.u, res.v, reference, min(r, res.rank))
            if eta <= epsilon:
                return SolveReport(solver, res, oversample, eta, wall, "ok")
            if oversample >= cap:
                raise _unreachable(
                    SolveReport(solver, res, oversample, eta, wall,
                                "tolerance_unreachable"), epsilon)
            oversample = min(int(np.ceil(oversample * cfg.m_growth)), cap)

    # sampled solvers: grow m until the tolerance or the cap
    cap = min(big_n, big_m) if cfg.m_max is None else min(cfg.m_max, big_m)
    m = cfg.m if cfg.m is not None else min(max(4 * r, 32), cap)
    g = source.full() if solver == "sym_nystrom" else None
    wall = 0.0
    attempt = 0
    while True:
        step_cfg = replace(cfg, m=m, n=None, seed=cfg.seed + attempt,
                           epsilon=epsilon)
        if solver == "asym_nystrom":
            t0 = time.perf_counter()
            res = asym_nystrom(source, step_cfg)
            wall += time.perf_counter() - t0
            eta = eta_accuracy(res.u_tilde, res.v_tilde, reference,
                               min(r, res.lambda_tilde.size))
        else:
            t0 = time.perf_counter()
            res_u = sym_nystrom(g @ g.T, replace(step_cfg, n=min(m, big_n),
                                                 m=min(m, big_n)))
            res_v = sym_nystrom(g.T @ g, replace(step_cfg, n=min(m, big_m),
                                                 m=min(m, big_m)))
            wall += time.perf_counter() - t0
            res = NystromResult(
                u_tilde=res_u.u_tilde, v_tilde=res_v.u_tilde,
                lambda_tilde=np.sqrt(np.maximum(res_u.lambda_tilde, 0.0)),
                row_indices=res_u.row_indices, col_indices=res_v.row_indices,
                eta=None, wall_time=res_u.wall_time + res_v.wall_time)
            eta = eta_accuracy(res.u_tilde, res.v_tilde, reference,
                               min(r, res.lambda_tilde.size))
        if eta <= epsilon:
            return SolveReport(solver, res, m, eta, wall, "ok")
        if m >= cap:
            raise _unreachable(
                SolveReport(solver, res, m, eta, wall,
                            "tolerance_unreachable"), epsilon)
        m = min(int(np.ceil(m * cfg.m_growth)), cap)
        attempt += 1


def _unreachable(report: SolveReport, epsilon: float) -> ToleranceUnreachableError:
    err = ToleranceUnreachableError(
        f"{report.solver} reached its budget cap with eta={report.eta:.3e} "
        f"> epsilon={epsilon:.3e}")
    err.report = report
    return err
