"""Dense real linear algebra: the SVD solver family and matrix plumbing.

Three solvers share the ``SvdResult`` contract:

* ``svd_exact``: one-sided Jacobi, the desk-scale reference oracle;
* ``svd_randomized``: Gaussian sketch with block-Krylov power iterations;
* ``svd_truncated``: Golub-Kahan-Lanczos bidiagonalization with full
  reorthogonalization, extended until the leading triplets converge.

All solvers emit singular values in descending order, drop values at or
below ``tol * sigma_1``, and canonicalize signs so the largest-magnitude
entry of each left vector is positive.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonFiniteError,
    RankTooLargeError,
    ShapeMismatchError,
    ZeroMatrixError,
)

_SWEEP_TOL = 1e-12
_MAX_SWEEPS = 30


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a 2-D float64 C-ordered array with finite entries."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ShapeMismatchError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(arr)


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size == 0:
        raise ShapeMismatchError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SvdResult:
    """Compact SVD factors: ``u`` (rows x r), ``s`` (descending), ``v`` (cols x r)."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.s.size)


def canonicalize_signs(u: np.ndarray, v: np.ndarray | None = None):
    """Flip vector pairs so each u column's largest-magnitude entry is positive.

    Flips are applied jointly to (u_s, v_s) so any product u s v^T is preserved.
    """
    u = u.copy()
    v = None if v is None else v.copy()
    for s in range(u.shape[1]):
        k = int(np.argmax(np.abs(u[:, s])))
        if u[k, s] < 0:
            u[:, s] = -u[:, s]
            if v is not None:
                v[:, s] = -v[:, s]
    return u if v is None else (u, v)


def _round_robin_rounds(n: int):
    """Disjoint column-pair schedule covering all pairs once per sweep."""
    m = n if n % 2 == 0 else n + 1
    idx = list(range(m))
    rounds = []
    for _ in range(m - 1):
        top = idx[: m // 2]
        bot = idx[m // 2:][::-1]
        left = np.array([a for a, b in zip(top, bot) if a < n and b < n])
        right = np.array([b for a, b in zip(top, bot) if a < n and b < n])
        rounds.append((left, right))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def _jacobi(w: np.ndarray):
    """One-sided Jacobi on the columns of ``w`` (modified in place).

    Returns the accumulated right rotations and the final column sq-norms.
    Rotations within a round touch disjoint columns, so each round is applied
    as one vectorized update; the schedule is fixed, keeping runs bit-stable.
    """
    n = w.shape[1]
    v = np.eye(n)
    rounds = _round_robin_rounds(n)
    for sweep in range(_MAX_SWEEPS):
        sq = np.einsum("ij,ij->j", w, w)
        worst = 0.0
        for li, ri in rounds:
            wi = w[:, li]
            wj = w[:, ri]
            g = np.einsum("ij,ij->j", wi, wj)
            al = sq[li]
            be = sq[ri]
            denom = np.sqrt(al * be)
            ratio = np.divide(np.abs(g), denom, out=np.zeros_like(g), where=denom > 0)
            if ratio.size:
                worst = max(worst, float(ratio.max()))
            rot = ratio > _SWEEP_TOL
            if not rot.any():
                continue
            zeta = np.zeros_like(g)
            np.divide(be - al, 2.0 * g, out=zeta, where=rot)
            t = np.where(rot, np.sign(zeta) / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0)
            t = np.where(rot & (zeta == 0), 1.0, t)  # 45-degree case
            c = 1.0 / np.hypot(1.0, t)
            s = c * t
            w[:, li] = c * wi - s * wj
            w[:, ri] = s * wi + c * wj
            vi = v[:, li]
            vj = v[:, ri]
            v[:, li] = c * vi - s * vj
            v[:, ri] = s * vi + c * vj
            # closed-form norm updates can drift below zero for dead columns
            sq[li] = np.maximum(c * c * al - 2 * c * s * g + s * s * be, 0.0)
            sq[ri] = np.maximum(s * s * al + 2 * c * s * g + c * c * be, 0.0)
        if worst <= _SWEEP_TOL:
            break
    else:
        warnings.warn("Jacobi sweeps hit the cap before reaching sweep tolerance",
                      RuntimeWarning, stacklevel=3)
    return v, np.sqrt(np.einsum("ij,ij->j", w, w))


def svd_exact(a, tol: float = 1e-10) -> SvdResult:
    """Compact SVD by one-sided Jacobi; singular values <= tol*s1 are dropped."""
    a = as_matrix(a, "A")
    if np.linalg.norm(a) == 0.0:
        raise ZeroMatrixError("svd_exact requires a non-zero matrix")
    if min(a.shape) > 2000:
        raise ShapeMismatchError("svd_exact is a desk-scale oracle: min dim <= 2000")
    transposed = a.shape[0] < a.shape[1]
    w = (a.T if transposed else a).copy()
    v, norms = _jacobi(w)
    order = np.argsort(-norms, kind="stable")
    s = norms[order]
    keep = s > tol * s[0]
    s = s[keep]
    cols = order[keep]
    u = w[:, cols] / s[None, :]
    vv = v[:, cols]
    if transposed:
        u, vv = vv, u
    u, vv = canonicalize_signs(u, vv)
    return SvdResult(u=u, s=s, v=vv)


def svd_randomized(a, r: int, oversample: int = 10, power_iters: int = 2,
                   seed: int = 0, tol: float = 1e-10) -> SvdResult:
    """Rank-r randomized SVD: Gaussian sketch plus a block-Krylov subspace.

    The projection basis stacks A*Omega with ``power_iters`` repeated
    applications of (A A^T); the stacked basis gives noticeably better
    alignment per pass than plain subspace iteration at the same parameters.
    Deterministic for a fixed seed.
    """
    a = as_matrix(a, "A")
    n, m = a.shape
    if r > min(n, m):
        raise RankTooLargeError(f"r={r} exceeds min(rows, cols)={min(n, m)}")
    if np.linalg.norm(a) == 0.0:
        raise ZeroMatrixError("svd_randomized requires a non-zero matrix")
    rng = np.random.default_rng(seed)
    k = min(r + max(int(oversample), 0), min(n, m))
    omega = rng.standard_normal((m, k))
    y, _ = np.linalg.qr(a @ omega)
    blocks = [y]
    for _ in range(int(power_iters)):
        y, _ = np.linalg.qr(a.T @ y)
        y, _ = np.linalg.qr(a @ y)
        blocks.append(y)
    q, _ = np.linalg.qr(np.hstack(blocks))
    b = q.T @ a
    ub, s, vt = np.linalg.svd(b, full_matrices=False)
    keep = s > tol * s[0]
    keep[r:] = False
    u = (q @ ub)[:, keep]
    v = vt[keep].T
    u, v = canonicalize_signs(u, v)
    return SvdResult(u=u, s=s[keep], v=v)


def svd_truncated(a, r: int, tol: float = 1e-10, max_iters: int | None = None,
                  start_seed: int = 0) -> SvdResult:
    """Top-r SVD by Golub-Kahan-Lanczos bidiagonalization.

    The Krylov basis is extended in blocks with full reorthogonalization
    until every requested triplet has residual below ``tol * sigma_1`` (or
    the basis exhausts min(N, M), at which point the factorization is
    complete and exact). Deterministic: the start vector comes from a
    seeded generator.
    """
    a = as_matrix(a, "A")
    n, m = a.shape
    kdim = min(n, m)
    if r > kdim:
        raise RankTooLargeError(f"r={r} exceeds min(rows, cols)={kdim}")
    if np.linalg.norm(a) == 0.0:
        raise ZeroMatrixError("svd_truncated requires a non-zero matrix")
    cap = kdim if max_iters is None else min(int(max_iters), kdim)
    rng = np.random.default_rng(start_seed)

    big_u = np.zeros((n, cap))
    big_v = np.zeros((m, cap))
    alphas = np.zeros(cap)
    betas = np.zeros(cap)

    vec = rng.standard_normal(m)
    vec /= np.linalg.norm(vec)
    big_v[:, 0] = vec
    k = 0
    left_break = False  # A v_k fell inside span(U_k): invariant pair found
    scale = np.linalg.norm(a)
    while k < cap:
        u_new = a @ big_v[:, k]
        if k > 0:
            u_new -= betas[k - 1] * big_u[:, k - 1]
        # full reorthogonalization, twice for safety
        for _ in range(2):
            u_new -= big_u[:, :k] @ (big_u[:, :k].T @ u_new)
        alpha = np.linalg.norm(u_new)
        if alpha <= 1e-13 * scale:
            if k == 0:
                # start vector landed in the null space; redraw
                vec = rng.standard_normal(m)
                big_v[:, 0] = vec / np.linalg.norm(vec)
                continue
            left_break = True
            break
        u_new /= alpha
        big_u[:, k] = u_new
        alphas[k] = alpha

        v_new = a.T @ u_new - alpha * big_v[:, k]
        for _ in range(2):
            v_new -= big_v[:, : k + 1] @ (big_v[:, : k + 1].T @ v_new)
        beta = np.linalg.norm(v_new)
        k += 1
        if beta <= 1e-13 * scale:
            betas[k - 1] = 0.0
            break
        betas[k - 1] = beta
        if k < cap:
            big_v[:, k] = v_new / beta

        if k >= r:
            bid = np.diag(alphas[:k]) + np.diag(betas[: k - 1], 1)
            p, sig, qt = np.linalg.svd(bid)
            # A^T u~_i - s_i v~_i = beta_{k-1} p[k-1, i] v_k
            resid = betas[k - 1] * np.abs(p[-1, : min(r, k)])
            if np.all(resid <= max(tol, 1e-15) * sig[0]):
                break
    if left_break:
        # exact relation A V_{k+1} = U_k B with B rectangular k x (k+1)
        bid = np.zeros((k, k + 1))
        bid[np.arange(k), np.arange(k)] = alphas[:k]
        bid[np.arange(k), np.arange(1, k + 1)] = betas[:k]
        p, sig, qt = np.linalg.svd(bid, full_matrices=False)
        nv = k + 1
    else:
        bid = np.diag(alphas[:k]) + np.diag(betas[: k - 1], 1)
        p, sig, qt = np.linalg.svd(bid)
        nv = k
    take = min(r, k)
    s = sig[:take]
    keep = s > tol * sig[0]
    s = s[keep]
    u = big_u[:, :k] @ p[:, :take][:, keep]
    v = big_v[:, :nv] @ qt[:take].T[:, keep]
    u, v = canonicalize_signs(u, v)
    return SvdResult(u=u, s=s, v=v)


def eigh_lanczos(a, r: int, tol: float = 1e-10, max_iters: int | None = None,
                 start_seed: int = 0):
    """Top-r eigenpairs of a symmetric matrix by Lanczos tridiagonalization.

    Full reorthogonalization, seeded start vector, basis grown until the
    requested Ritz pairs converge (or the basis is complete, which makes
    the answer exact). Returns (values descending, vectors as columns).
    """
    a = as_matrix(a, "A")
    n = a.shape[0]
    if a.shape[1] != n:
        raise ShapeMismatchError("eigh_lanczos needs a square matrix")
    if not np.allclose(a, a.T, atol=1e-10 * max(1.0, float(np.abs(a).max()))):
        raise ShapeMismatchError("eigh_lanczos needs a symmetric matrix")
    if r > n:
        raise RankTooLargeError(f"r={r} exceeds matrix size {n}")
    if np.linalg.norm(a) == 0.0:
        raise ZeroMatrixError("eigh_lanczos requires a non-zero matrix")
    cap = n if max_iters is None else min(int(max_iters), n)
    rng = np.random.default_rng(start_seed)
    q = np.zeros((n, cap))
    alphas = np.zeros(cap)
    betas = np.zeros(cap)
    vec = rng.standard_normal(n)
    q[:, 0] = vec / np.linalg.norm(vec)
    scale = np.linalg.norm(a)
    k = 0
    while k < cap:
        w = a @ q[:, k]
        alphas[k] = float(q[:, k] @ w)
        w -= alphas[k] * q[:, k]
        if k > 0:
            w -= betas[k - 1] * q[:, k - 1]
        for _ in range(2):
            w -= q[:, : k + 1] @ (q[:, : k + 1].T @ w)
        beta = np.linalg.norm(w)
        k += 1
        if beta <= 1e-13 * scale:
            betas[k - 1] = 0.0
            break
        betas[k - 1] = beta
        if k < cap:
            q[:, k] = w / beta

        if k >= r:
            tri = np.diag(alphas[:k]) + np.diag(betas[: k - 1], 1) \
                + np.diag(betas[: k - 1], -1)
            vals, vecs = np.linalg.eigh(tri)
            order = np.argsort(-vals)
            # Ritz residual: |beta_k| * |last basis coefficient|
            resid = betas[k - 1] * np.abs(vecs[-1, order[:r]])
            if np.all(resid <= max(tol, 1e-15) * max(abs(vals[order[0]]), 1e-300)):
                break
    tri = np.diag(alphas[:k]) + np.diag(betas[: k - 1], 1) \
        + np.diag(betas[: k - 1], -1)
    vals, vecs = np.linalg.eigh(tri)
    order = np.argsort(-vals)[: min(r, k)]
    out_vals = vals[order]
    out_vecs = canonicalize_signs(q[:, :k] @ vecs[:, order])
    return out_vals, out_vecs


# --- plumbing ---------------------------------------------------------------

def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def transpose(a) -> np.ndarray:
    return np.ascontiguousarray(as_matrix(a, "A").T)


def qr_thin(a):
    """Thin QR: column-orthonormal Q and upper-triangular R with QR = A."""
    a = as_matrix(a, "A")
    if a.shape[0] < a.shape[1]:
        raise ShapeMismatchError("qr_thin expects rows >= cols")
    q, r = np.linalg.qr(a)
    return q, r


def gaussian_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    """Seeded standard-normal matrix (deterministic per seed)."""
    if rows <= 0 or cols <= 0:
        raise ShapeMismatchError("gaussian_matrix needs positive dimensions")
    return np.random.default_rng(seed).standard_normal((rows, cols))


def write_matrix_csv(path, a) -> None:
    """Plain CSV, no header, 17 significant digits (lossless round-trip)."""
    a = as_matrix(a, "matrix")
    np.savetxt(path, a, fmt="%.17g", delimiter=",")


def read_matrix_csv(path) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return as_matrix(arr, str(path))
