"""Two-sample U-statistic process, max statistic and change-point estimate.

With R_i = sum_j h(X_i, X_j) the antisymmetry of h gives

    U_{n,k+1} - U_{n,k} = R_{k+1},   so   U_{n,k} = R_1 + ... + R_k,

which replaces the O(n^3 d) double sum by O(n^2 d) work and O(n d) memory.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .core import FunctionalSample
from .kernels import KernelKind, KernelSpec, evaluate, kernel_row, pairwise, pairwise_nbytes

__all__ = [
    "KernelTable",
    "UStatProcess",
    "HoeffdingPlugin",
    "compute_row_sums",
    "ustat_process",
    "brute_force_trajectory",
    "hoeffding_plugin",
    "hoeffding_decomposition",
    "cusum_identity_check",
]

DEFAULT_CACHE_BUDGET_MB = 256.0


def cache_budget_bytes(budget_mb: float | None = None) -> float:
    """Memory allowed for the full pairwise kernel table.

    Falls back to ``$FUNCPD_CACHE_BUDGET_MB`` and then to 256 MB.
    """
    if budget_mb is None:
        env = os.environ.get("FUNCPD_CACHE_BUDGET_MB")
        budget_mb = float(env) if env else DEFAULT_CACHE_BUDGET_MB
    return budget_mb * 2**20


def _weighted_norms(arr: np.ndarray, spec: KernelSpec) -> np.ndarray:
    d = arr.shape[-1]
    return np.sqrt(np.einsum("...i,...i->...", arr, arr) * spec.weighting.factor(d))


class KernelTable:
    """Access to the pairwise kernel values h(X_i, X_j).

    The full ``(n, n, d)`` table is materialized only when it fits in the
    cache budget; otherwise rows are recomputed on demand.  Both paths give
    the same numbers, since a row is computed by the same expression either way.
    """

    def __init__(self, sample: FunctionalSample, spec: KernelSpec, cache_budget_mb: float | None = None):
        self.sample = sample
        self.spec = spec
        self.n, self.d = sample.n, sample.d
        self.cached = pairwise_nbytes(self.n, self.d) <= cache_budget_bytes(cache_budget_mb)
        self._table = pairwise(spec, sample.data) if self.cached else None
        self._row_sums = None

    def row(self, i: int) -> np.ndarray:
        if self._table is not None:
            return self._table[i]
        return kernel_row(self.spec, self.sample.data, i)

    @property
    def row_sums(self) -> np.ndarray:
        if self._row_sums is None:
            if self._table is not None:
                self._row_sums = self._table.sum(axis=1)
            else:
                self._row_sums = np.stack([self.row(i).sum(axis=0) for i in range(self.n)])
        return self._row_sums

    def weighted_row_sums(self, eps: np.ndarray) -> np.ndarray:
        """B[t, i] = sum_j h(X_i, X_j) eps[t, j] for a block of multiplier vectors.

        ``eps`` has shape ``(m, n)``; the result has shape ``(m, n, d)``.
        """
        eps = np.atleast_2d(eps)
        m = eps.shape[0]
        if self._table is not None:
            # (n_j, n_i * d) so that a single GEMM contracts over j
            flat = self._table.transpose(1, 0, 2).reshape(self.n, self.n * self.d)
            return (eps @ flat).reshape(m, self.n, self.d)
        out = np.empty((m, self.n, self.d))
        for i in range(self.n):
            out[:, i, :] = eps @ self.row(i)
        return out


def compute_row_sums(sample: FunctionalSample, spec: KernelSpec, cache_budget_mb: float | None = 0.0) -> np.ndarray:
    """R_i = sum_{j=1..n} h(X_i, X_j), shape ``(n, d)``.

    Streams rows by default (no n^2 d table).
    """
    return KernelTable(sample, spec, cache_budget_mb).row_sums


@dataclass(frozen=True)
class UStatProcess:
    """Trajectory k -> U_{n,k} together with the max statistic.

    Attributes
    ----------
    row_sums : ndarray, shape (n, d)
    trajectory : ndarray, shape (n - 1, d)
        U_{n,k} for k = 1..n-1.
    traj_norms : ndarray, shape (n - 1,)
    statistic : float
        max_k n^{-3/2} ||U_{n,k}||.
    raw_max : float
        max_k ||U_{n,k}|| without the scaling.
    argmax_k : int
        Smallest maximizing k (1-based), the change-point estimate.
    """

    row_sums: np.ndarray
    trajectory: np.ndarray
    traj_norms: np.ndarray
    statistic: float
    raw_max: float
    argmax_k: int
    n: int = field(default=0)


def _process_from_trajectory(row_sums, trajectory, spec, n) -> UStatProcess:
    norms = _weighted_norms(trajectory, spec)
    k = int(np.argmax(norms))  # first occurrence -> smallest k
    raw = float(norms[k])
    return UStatProcess(
        row_sums=row_sums,
        trajectory=trajectory,
        traj_norms=norms,
        statistic=raw / n**1.5,
        raw_max=raw,
        argmax_k=k + 1,
        n=n,
    )


def ustat_process(
    sample: FunctionalSample,
    spec: KernelSpec,
    *,
    brute_force: bool = False,
    table: KernelTable | None = None,
) -> UStatProcess:
    """Compute the U-statistic process of ``sample`` under kernel ``spec``.

    ``brute_force=True`` evaluates every U_{n,k} by the direct double sum
    (O(n^3 d)); it exists for verification only.
    """
    n = sample.n
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if brute_force:
        traj = brute_force_trajectory(sample, spec)
        rs = np.stack([
            sum(evaluate(spec, sample.data[i], sample.data[j]) for j in range(n))
            for i in range(n)
        ])
        return _process_from_trajectory(rs, traj, spec, n)
    if table is None:
        rs = compute_row_sums(sample, spec)
    else:
        rs = table.row_sums
    traj = np.cumsum(rs[:-1], axis=0)
    return _process_from_trajectory(rs, traj, spec, n)


def pair_table_direct(sample: FunctionalSample, spec: KernelSpec) -> np.ndarray:
    """(n, n, d) table built pair by pair from the scalar kernel."""
    X = sample.data
    n = sample.n
    H = np.zeros((n, n, sample.d))
    for i in range(n):
        for j in range(i + 1, n):
            H[i, j] = evaluate(spec, X[i], X[j])
            H[j, i] = evaluate(spec, X[j], X[i])
    return H


def brute_force_trajectory(sample: FunctionalSample, spec: KernelSpec) -> np.ndarray:
    """U_{n,k} = sum_{i<=k} sum_{j>k} h(X_i, X_j) by direct summation, k = 1..n-1."""
    H = pair_table_direct(sample, spec)
    n = sample.n
    return np.stack([H[:k, k:].sum(axis=(0, 1)) for k in range(1, n)])


@dataclass(frozen=True)
class HoeffdingPlugin:
    h1_hat: np.ndarray
    mean_h1: np.ndarray


def hoeffding_plugin(sample: FunctionalSample, spec: KernelSpec, row_sums: np.ndarray | None = None) -> HoeffdingPlugin:
    """Plug-in linear part: h1_hat(X_i) = (1/(n-1)) sum_{j != i} h(X_i, X_j)."""
    n = sample.n
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rs = compute_row_sums(sample, spec) if row_sums is None else row_sums
    h1 = rs / (n - 1)
    return HoeffdingPlugin(h1_hat=h1, mean_h1=h1.mean(axis=0))


def hoeffding_decomposition(sample: FunctionalSample, spec: KernelSpec):
    """Split each U_{n,k} into its plug-in linear and degenerate parts.

    Returns ``(linear, degenerate)``, each of shape ``(n - 1, d)``:

        linear_k     = n * sum_{i<=k} (h1_hat(X_i) - mean_h1)
        degenerate_k = sum_{i<=k} sum_{j>k} h2_hat(X_i, X_j),
        h2_hat(x, y) = h(x, y) - h1_hat(x) + h1_hat(y).

    The degenerate part is summed by a direct double loop.
    """
    n = sample.n
    plug = hoeffding_plugin(sample, spec)
    h1 = plug.h1_hat
    linear = n * np.cumsum(h1 - plug.mean_h1, axis=0)[:-1]
    X = sample.data
    degenerate = np.zeros((n - 1, sample.d))
    for k in range(1, n):
        acc = np.zeros(sample.d)
        for i in range(k):
            for j in range(k, n):
                acc += evaluate(spec, X[i], X[j]) - h1[i] + h1[j]
        degenerate[k - 1] = acc
    return linear, degenerate


def cusum_identity_check(sample: FunctionalSample, weighting="euclidean") -> float:
    """Largest gap between the U-statistic form and the centered partial-sum form of CUSUM.

    Compares n^{-3/2} ||U_{n,k}|| (kernel x - y) with
    n^{-1/2} ||sum_{i<=k} (X_i - mean)|| over all k.
    """
    spec = KernelSpec(KernelKind.CUSUM, weighting=weighting)
    n = sample.n
    proc = ustat_process(sample, spec)
    centered = sample.data - sample.data.mean(axis=0)
    partial = np.cumsum(centered, axis=0)[:-1]
    other = _weighted_norms(partial, spec) / np.sqrt(n)
    return float(np.max(np.abs(proc.traj_norms / n**1.5 - other)))
