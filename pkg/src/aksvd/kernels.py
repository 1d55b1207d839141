"""Asymmetric kernel matrices from paired row/column data.

A data matrix ``A`` is read twice: its rows ``x_i`` form the row data set,
its columns ``z_j`` form the column data set. The kernel matrix is
``G[i, j] = kappa(x_i, z_j)`` (after an optional compatibility transform
when the two sides have different feature lengths). Three families are
supported:

* ``rbf``      exp(-||x - z||^2 / gamma^2)
* ``sne``      the rbf numerator normalized over the column data set, so
               every row of G sums to one
* ``linear``   plain inner product

``LazyKernelSource`` evaluates sampled blocks of G without ever storing
the full matrix; the Nystrom solver relies on this.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    CompatibilityMissingError,
    ConfigError,
    DimensionMismatchError,
    EmptyDenominatorWarning,
    LengthMismatchError,
)
from .linalg import as_matrix, as_vector

FAMILIES = ("rbf", "sne", "linear")

# row-block size for streaming assembly; results do not depend on it
_BLOCK = 512


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth, with an optional compatibility transform."""

    family: str
    gamma: float | None = None
    compat: object | None = None  # CompatMatrix, kept untyped to avoid a cycle

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}; "
                              f"expected one of {FAMILIES}")
        if self.family in ("rbf", "sne"):
            if self.gamma is None or not self.gamma > 0:
                raise ConfigError(f"{self.family} kernel needs gamma > 0, "
                                  f"got {self.gamma!r}")


@dataclass(frozen=True)
class DataSources:
    """Row data set (rows of A) and column data set (columns of A, as rows)."""

    x: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class CenteringStats:
    row_means: np.ndarray
    col_means: np.ndarray
    grand_mean: float


def build_sources(a) -> DataSources:
    a = as_matrix(a, "A")
    return DataSources(x=a.copy(), z=np.ascontiguousarray(a.T))


def default_gamma(data, k: float = 1.0) -> float:
    """Data-dependent bandwidth: k * sqrt(feature_dim * var(data))."""
    data = as_matrix(data, "data")
    if not k > 0:
        raise ConfigError(f"gamma scale k must be positive, got {k!r}")
    var = float(data.var())
    if var == 0.0:
        raise ConfigError("cannot derive a bandwidth from constant data")
    return k * float(np.sqrt(data.shape[1] * var))


def _sqdist(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows of x and rows of z."""
    d = (x * x).sum(1)[:, None] - 2.0 * (x @ z.T) + (z * z).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _rbf_block(x, z, gamma):
    return np.exp(-_sqdist(x, z) / (gamma * gamma))


def kernel_value(spec: KernelSpec, x, z, z_set=None) -> float:
    """Single kernel evaluation.

    The sne family is only defined relative to a column data set, so it
    requires ``z_set`` (one z per row) for the normalizing sum.
    """
    x = as_vector(x, "x")
    z = as_vector(z, "z")
    if x.size != z.size:
        raise DimensionMismatchError(
            f"x has length {x.size} but z has length {z.size}")
    if spec.family == "linear":
        return float(x @ z)
    d = float(np.sum((x - z) ** 2))
    num = float(np.exp(-d / (spec.gamma ** 2)))
    if spec.family == "rbf":
        return num
    if z_set is None:
        raise DimensionMismatchError(
            "sne kernel_value needs the column data set (z_set=...)")
    z_set = as_matrix(z_set, "z_set")
    denom = float(_rbf_block(x[None, :], z_set, spec.gamma).sum())
    if denom == 0.0:
        warnings.warn("sne numerators underflowed; returning the uniform value",
                      EmptyDenominatorWarning, stacklevel=2)
        return 1.0 / z_set.shape[0]
    return num / denom


def _sne_normalize(numerators: np.ndarray, denom: np.ndarray, width: int):
    """Divide rows by their normalizer; dead rows become uniform, with a warning."""
    dead = denom == 0.0
    if dead.any():
        warnings.warn(
            f"{int(dead.sum())} sne row(s) underflowed to zero; "
            "substituting uniform rows", EmptyDenominatorWarning, stacklevel=3)
    safe = np.where(dead, 1.0, denom)
    out = numerators / safe[:, None]
    out[dead] = 1.0 / width
    return out


def kernel_matrix(spec: KernelSpec, sources: DataSources) -> np.ndarray:
    """Assemble the full kernel matrix G (rows of x against rows of z)."""
    if spec.compat is not None:
        from .compat import apply_compat
        sources = apply_compat(spec.compat, sources)
    x, z = sources.x, sources.z
    if x.shape[1] != z.shape[1]:
        raise CompatibilityMissingError(
            f"row data has feature length {x.shape[1]} but column data has "
            f"{z.shape[1]}; a compatibility transform is required")
    if spec.family == "linear":
        return x @ z.T
    if spec.family == "rbf":
        return _rbf_block(x, z, spec.gamma)
    num = _rbf_block(x, z, spec.gamma)
    return _sne_normalize(num, num.sum(1), z.shape[0])


def center(g) -> tuple[np.ndarray, CenteringStats]:
    """Double-center G so all row and column sums become zero."""
    g = as_matrix(g, "G")
    row_means = g.mean(axis=1)
    col_means = g.mean(axis=0)
    grand = float(g.mean())
    gc = g - row_means[:, None] - col_means[None, :] + grand
    return gc, CenteringStats(row_means=row_means, col_means=col_means,
                              grand_mean=grand)


def center_oos(values, stats: CenteringStats, side: str) -> np.ndarray:
    """Center a fresh kernel row or column consistently with training stats.

    A new row (kernel values of one out-of-sample x against all training z)
    is centered with the training column means and its own mean; a new
    column mirrors this with the training row means. Replaying a training
    row reproduces the corresponding row of the centered G exactly.
    """
    v = as_vector(values, "values")
    if side == "row":
        expected = stats.col_means.size
        against = stats.col_means
    elif side == "column":
        expected = stats.row_means.size
        against = stats.row_means
    else:
        raise ConfigError(f"side must be 'row' or 'column', got {side!r}")
    if v.size != expected:
        raise LengthMismatchError(
            f"{side} vector has length {v.size}, expected {expected}")
    return v - v.mean() - against + stats.grand_mean


# --- block sources for subsampled evaluation ---------------------------------

class MatrixSource:
    """Block access to an already materialized kernel matrix."""

    def __init__(self, g):
        self._g = as_matrix(g, "G")
        self.entries_evaluated = 0

    @property
    def shape(self):
        return self._g.shape

    def sample_blocks(self, row_idx, col_idx):
        g_nm = self._g[np.ix_(row_idx, col_idx)]
        g_big_m = self._g[:, col_idx]
        g_n_big = self._g[row_idx, :]
        self.entries_evaluated += g_big_m.size + g_n_big.size
        return g_nm, g_big_m, g_n_big

    def full(self) -> np.ndarray:
        self.entries_evaluated += self._g.size
        return self._g


class LazyKernelSource:
    """Evaluate sampled kernel blocks on demand; the full G is never stored.

    For the sne family the normalizing sum is, by default, taken over the
    sampled column set only (so a sampled run touches N*m + n*M entries).
    Set ``full_denominator=True`` to normalize over all M columns instead:
    this costs a streaming pass over the full row (still O(N) extra memory)
    and makes sampled blocks agree with the materialized matrix.
    """

    def __init__(self, spec: KernelSpec, sources: DataSources,
                 full_denominator: bool = False):
        if spec.compat is not None:
            from .compat import apply_compat
            sources = apply_compat(spec.compat, sources)
        if sources.x.shape[1] != sources.z.shape[1]:
            raise CompatibilityMissingError(
                f"row data has feature length {sources.x.shape[1]} but column "
                f"data has {sources.z.shape[1]}; a compatibility transform is "
                "required")
        self._spec = spec
        self._x = sources.x
        self._z = sources.z
        self.full_denominator = bool(full_denominator)
        self.entries_evaluated = 0
        self.last_row_denoms = None  # sne normalizers from the latest sampling

    @property
    def shape(self):
        return self._x.shape[0], self._z.shape[0]

    def _raw_block(self, x, z):
        if self._spec.family == "linear":
            return x @ z.T
        return _rbf_block(x, z, self._spec.gamma)

    def _streaming_row_sums(self, x) -> np.ndarray:
        """Full sne normalizers for the given x rows, never holding > _BLOCK cols."""
        total = np.zeros(x.shape[0])
        for start in range(0, self._z.shape[0], _BLOCK):
            total += _rbf_block(x, self._z[start:start + _BLOCK], self._spec.gamma).sum(1)
        return total

    def sample_blocks(self, row_idx, col_idx):
        """Return (G_nm, G_Nm, G_nM) for the given sampled index sets.

        G_nm is sliced out of G_Nm, so the three blocks are mutually
        consistent by construction.
        """
        row_idx = np.asarray(row_idx, dtype=int)
        col_idx = np.asarray(col_idx, dtype=int)
        g_big_m = self._raw_block(self._x, self._z[col_idx])       # N x m
        g_n_big = self._raw_block(self._x[row_idx], self._z)       # n x M
        if self._spec.family == "sne":
            if self.full_denominator:
                denom = self._streaming_row_sums(self._x)
            else:
                denom = g_big_m.sum(1)
            self.last_row_denoms = denom
            g_big_m = _sne_normalize(g_big_m, denom, col_idx.size)
            g_n_big = _sne_normalize(g_n_big, denom[row_idx], col_idx.size)
        g_nm = g_big_m[row_idx, :]
        self.entries_evaluated += g_big_m.size + g_n_big.size
        return g_nm, g_big_m, g_n_big

    def full(self) -> np.ndarray:
        """Materialize the exact kernel matrix (full sne normalization)."""
        g = self._raw_block(self._x, self._z)
        if self._spec.family == "sne":
            g = _sne_normalize(g, g.sum(1), self._z.shape[0])
        self.entries_evaluated += g.size
        return g

    def streaming_stats(self) -> CenteringStats:
        """Exact centering stats of the full matrix in O(N + M) memory.

        One pass over column blocks (two for sne, whose normalizers must be
        known first). Nothing larger than a block is ever held.
        """
        n_rows = self._x.shape[0]
        n_cols = self._z.shape[0]
        row_sums = np.zeros(n_rows)
        col_sums = np.zeros(n_cols)
        if self._spec.family == "sne":
            denom = self._streaming_row_sums(self._x)
            dead = denom == 0.0
            safe = np.where(dead, 1.0, denom)
            for start in range(0, n_cols, _BLOCK):
                zb = self._z[start:start + _BLOCK]
                num = _rbf_block(self._x, zb, self._spec.gamma) / safe[:, None]
                num[dead] = 1.0 / n_cols  # dead rows are defined as uniform
                col_sums[start:start + zb.shape[0]] = num.sum(0)
            row_sums[:] = 1.0  # rows of a normalized kernel sum to one
            if dead.any():
                warnings.warn(
                    f"{int(dead.sum())} sne row(s) underflowed to zero; "
                    "substituting uniform rows", EmptyDenominatorWarning,
                    stacklevel=2)
        else:
            for start in range(0, n_cols, _BLOCK):
                zb = self._z[start:start + _BLOCK]
                block = self._raw_block(self._x, zb)
                row_sums += block.sum(1)
                col_sums[start:start + zb.shape[0]] = block.sum(0)
        grand = float(row_sums.sum() / (n_rows * n_cols))
        return CenteringStats(row_means=row_sums / n_cols,
                              col_means=col_sums / n_rows,
                              grand_mean=grand)


def as_kernel_source(obj):
    """Wrap a plain matrix in a MatrixSource; pass sources through unchanged."""
    if isinstance(obj, (MatrixSource, LazyKernelSource)):
        return obj
    return MatrixSource(obj)
