"""Dependent Gaussian multipliers with quadratic-spectral covariance.

The multipliers eps = A eta, eta ~ N(0, I), have covariance B = A A^T with
Toeplitz entries B_ij = w(|i - j|, q), where w is the quadratic spectral
kernel.  The bandwidth q is either fixed or chosen from the data by a
plug-in rule built on the sample linear part h1_hat.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import FunctionalSample
from .kernels import KernelSpec
from .ustat import compute_row_sums

__all__ = [
    "LagConvention",
    "MultiplierConfig",
    "CovarianceFactor",
    "BandwidthReport",
    "qs_weight",
    "build_covariance",
    "sqrt_psd",
    "covariance_factor",
    "draw_multipliers",
    "replicate_rng",
    "adaptive_bandwidth",
]


class LagConvention(str, enum.Enum):
    STANDARD = "standard"
    PAPER_OFFSET = "paper_offset"

    @classmethod
    def parse(cls, value) -> "LagConvention":
        if isinstance(value, LagConvention):
            return value
        if str(value).lower() in ("paper", "paper_offset", "offset"):
            return cls.PAPER_OFFSET
        return cls(str(value).lower())


def qs_weight(k, q: float):
    """Quadratic spectral weight w(k, q) = 3 (sin x - x cos x) / x^3, x = 6 pi k / (5 q).

    Accepts scalars or arrays of lags; even in ``k`` with w(0, q) = 1.
    """
    if not q > 0:
        raise ValueError(f"bandwidth q must be positive, got {q}")
    k = np.abs(np.asarray(k, dtype=float))
    x = 6.0 * np.pi * k / (5.0 * q)
    small = x < 0.2
    xs = np.where(small, 1.0, x)
    exact = 3.0 * (np.sin(xs) / xs - np.cos(xs)) / xs**2
    # Taylor series near 0 avoids the cancellation in sin(x)/x - cos(x);
    # terms 3 (-1)^(m+1) 2m x^(2m-2) / (2m+1)!, m = 1..6
    x2 = x * x
    series = 1.0 + x2 * (-1 / 10 + x2 * (1 / 280 + x2 * (-1 / 15120 + x2 * (1 / 1330560 + x2 * (-36 / 6227020800)))))
    out = np.where(small, series, exact)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MultiplierConfig:
    """Bandwidth and lag convention of the multiplier covariance.

    ``q=None`` requests the data-adaptive bandwidth.
    """

    q: float | None = None
    lag_convention: LagConvention = LagConvention.STANDARD

    def __post_init__(self):
        object.__setattr__(self, "lag_convention", LagConvention.parse(self.lag_convention))
        if self.q is not None and not self.q >= 1:
            raise ValueError(f"bandwidth q must be >= 1, got {self.q}")


def lag_weights(n: int, q: float, lag_convention=LagConvention.STANDARD) -> np.ndarray:
    """Autocovariances v_0..v_{n-1} of the multiplier sequence."""
    conv = LagConvention.parse(lag_convention)
    lags = np.arange(n, dtype=float)
    if conv is LagConvention.PAPER_OFFSET:
        # lag l >= 1 uses w(l - 1, q), hence v_1 = 1
        lags = np.maximum(lags - 1.0, 0.0)
    v = qs_weight(lags, q)
    v = np.atleast_1d(v).astype(float)
    v[0] = 1.0
    return v


def build_covariance(n: int, q: float, lag_convention=LagConvention.STANDARD) -> np.ndarray:
    """n x n Toeplitz matrix B_ij = v_{|i-j|}."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not q >= 1:
        raise ValueError(f"bandwidth q must be >= 1, got {q}")
    v = lag_weights(n, q, lag_convention)
    idx = np.arange(n)
    return v[np.abs(idx[:, None] - idx[None, :])]


@dataclass(frozen=True)
class CovarianceFactor:
    B: np.ndarray
    A: np.ndarray
    clamped_eigs: int

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def residual(self) -> float:
        return float(np.max(np.abs(self.A @ self.A.T - self.B)))


def sqrt_psd(B: np.ndarray) -> CovarianceFactor:
    """Symmetric square root A = V diag(sqrt(max(lam, 0))) V^T of a symmetric matrix."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    scale = max(1.0, float(np.max(np.abs(B)))) if B.size else 1.0
    if not np.allclose(B, B.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("matrix is not symmetric")
    lam, V = np.linalg.eigh((B + B.T) / 2.0)
    neg = lam < 0
    lam = np.where(neg, 0.0, lam)
    A = (V * np.sqrt(lam)) @ V.T
    A.setflags(write=False)
    return CovarianceFactor(B=B, A=A, clamped_eigs=int(neg.sum()))


@lru_cache(maxsize=64)
def _cached_factor(n: int, q: float, conv: LagConvention) -> CovarianceFactor:
    return sqrt_psd(build_covariance(n, q, conv))


def covariance_factor(n: int, q: float, lag_convention=LagConvention.STANDARD) -> CovarianceFactor:
    """B and its square root for (n, q); memoized since Monte Carlo reuses a few q values."""
    return _cached_factor(int(n), float(q), LagConvention.parse(lag_convention))


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for bootstrap replicate ``index`` under master ``seed``.

    Depends only on (seed, index), never on scheduling.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def draw_multipliers(factor: CovarianceFactor, rng: np.random.Generator) -> np.ndarray:
    """One multiplier vector eps = A eta with eta i.i.d. N(0, 1)."""
    eta = rng.standard_normal(factor.n)
    return factor.A @ eta


def draw_multiplier_block(factor: CovarianceFactor, seed: int, indices) -> np.ndarray:
    """Multiplier vectors for the given replicate indices, shape ``(len(indices), n)``."""
    eta = np.stack([replicate_rng(seed, int(t)).standard_normal(factor.n) for t in indices])
    # row t equals A @ eta_t, A symmetric
    return eta @ factor.A.T


@dataclass(frozen=True)
class BandwidthReport:
    q_adpt: int
    q0: float
    cp0_sum: float
    cp1_sum: float
    cp0_diag_sq_sum: float
    ratio: float
    clamped: bool

    def to_dict(self) -> dict:
        return {
            "q_adpt": self.q_adpt,
            "q0": self.q0,
            "cp0_sum": self.cp0_sum,
            "cp1_sum": self.cp1_sum,
            "cp0_diag_sq_sum": self.cp0_diag_sq_sum,
            "ratio": self.ratio,
            "clamped": self.clamped,
        }


def bandwidth_from_linear_part(h1: np.ndarray) -> BandwidthReport:
    """Data-adaptive bandwidth from the plug-in linear part (rows h1_hat(X_i)).

    V_k is the lag-(k-1) autocovariance (1/n) sum_i h1_i h1_{i+k-1}^T.  Only the
    total sum and the diagonal of CP_0 and CP_1 enter the rule, so V_k is never
    formed as a d x d matrix: its entry sum is (1/n) sum_i s_i s_{i+k-1}
    with s_i the entry sum of h1_i.
    """
    n, _ = h1.shape
    q0 = n ** 0.2
    nlags = math.ceil(q0) - 1
    s = h1.sum(axis=1)

    def v_sum(lag):
        return float(np.dot(s[: n - lag], s[lag:])) / n

    def v_diag(lag):
        return np.einsum("ij,ij->j", h1[: n - lag], h1[lag:]) / n

    cp0_sum = v_sum(0)
    cp0_diag = v_diag(0)
    cp1_sum = 0.0
    for k in range(1, nlags + 1):
        w = qs_weight(k, q0)
        cp0_sum += 2.0 * w * v_sum(k)
        cp0_diag = cp0_diag + 2.0 * w * v_diag(k)
        cp1_sum += 2.0 * k * w * v_sum(k)
    # huge-magnitude data can overflow to inf here; _finish_bandwidth clamps that to q = 1
    with np.errstate(over="ignore", invalid="ignore"):
        diag_sq = float(np.sum(cp0_diag**2))
    return _finish_bandwidth(n, q0, cp0_sum, cp1_sum, diag_sq)


def _finish_bandwidth(n, q0, cp0_sum, cp1_sum, diag_sq) -> BandwidthReport:
    denom = cp0_sum + diag_sq
    clamped = False
    if denom > 0 and np.isfinite(denom) and np.isfinite(cp1_sum):
        ratio = 3.0 * n * cp1_sum / denom
    else:
        ratio = 0.0
        clamped = True
    if not np.isfinite(ratio):
        ratio, clamped = 0.0, True
    if ratio < 0:
        ratio, clamped = 0.0, True
    q = math.ceil(ratio ** 0.2) if ratio > 0 else 0
    if q < 1:
        q, clamped = 1, True
    q = min(q, n - 1)
    return BandwidthReport(
        q_adpt=int(max(q, 1)),
        q0=q0,
        cp0_sum=cp0_sum,
        cp1_sum=cp1_sum,
        cp0_diag_sq_sum=diag_sq,
        ratio=ratio,
        clamped=clamped,
    )


def adaptive_bandwidth(sample: FunctionalSample, spec: KernelSpec, row_sums: np.ndarray | None = None) -> BandwidthReport:
    """Choose the multiplier bandwidth from the data.

    Parameters
    ----------
    sample : FunctionalSample
    spec : KernelSpec
        Kernel whose linear part drives the selection.
    row_sums : ndarray, optional
        Precomputed R_i; saves one pass over all pairs.

    Returns
    -------
    BandwidthReport
        ``q_adpt`` is an integer in [1, n - 1].  ``clamped`` is set when the
        ratio was negative, zero or undefined and q fell back to 1.
    """
    n = sample.n
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rs = compute_row_sums(sample, spec) if row_sums is None else row_sums
    return bandwidth_from_linear_part(rs / (n - 1))
