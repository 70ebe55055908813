"""Antisymmetric kernels h: H x H -> H.

Three kinds are supported::

    cusum         h(x, y) = x - y
    spatial_sign  h(x, y) = (x - y) / ||x - y||      (0/0 := 0)
    clipped       h(x, y) = (x - y) / (c + ||x - y||),  c > 0

All of them depend on ``x - y`` only through a scalar factor of ``||x - y||``,
which makes antisymmetry exact in floating point: ``x - y`` and ``y - x``
differ only in sign and share the same norm.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import GridWeighting, _as_curve, _check_dims, scaled_norms

__all__ = ["KernelKind", "KernelSpec", "evaluate", "kernel_row", "pairwise"]

# norms below this are treated as ties (0/0 := 0)
TINY_NORM = 1e-300


class KernelKind(str, enum.Enum):
    CUSUM = "cusum"
    SPATIAL_SIGN = "spatial_sign"
    CLIPPED = "clipped"

    @classmethod
    def parse(cls, value: "str | KernelKind") -> "KernelKind":
        if isinstance(value, KernelKind):
            return value
        aliases = {"sign": cls.SPATIAL_SIGN, "spatial": cls.SPATIAL_SIGN, "wilcoxon": cls.SPATIAL_SIGN}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.SPATIAL_SIGN
    c: float = 1.0
    weighting: GridWeighting = GridWeighting.EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind.parse(self.kind))
        object.__setattr__(self, "weighting", GridWeighting(self.weighting))
        if self.kind is KernelKind.CLIPPED and not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError(f"clipped kernel requires c > 0, got c={self.c}")

    @classmethod
    def cusum(cls, weighting=GridWeighting.EUCLIDEAN) -> "KernelSpec":
        return cls(KernelKind.CUSUM, weighting=weighting)

    @classmethod
    def spatial_sign(cls, weighting=GridWeighting.EUCLIDEAN) -> "KernelSpec":
        return cls(KernelKind.SPATIAL_SIGN, weighting=weighting)

    @classmethod
    def clipped(cls, c: float, weighting=GridWeighting.EUCLIDEAN) -> "KernelSpec":
        return cls(KernelKind.CLIPPED, c=c, weighting=weighting)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "weighting": self.weighting.value}
        if self.kind is KernelKind.CLIPPED:
            out["c"] = self.c
        return out


def _scale(spec: KernelSpec, diff: np.ndarray) -> np.ndarray:
    """Apply the kernel's norm-dependent scaling to differences along the last axis."""
    if spec.kind is KernelKind.CUSUM:
        return diff
    nrm = scaled_norms(diff, spec.weighting.factor(diff.shape[-1]))
    if spec.kind is KernelKind.SPATIAL_SIGN:
        tie = nrm < TINY_NORM
        denom = np.where(tie, 1.0, nrm)
        out = diff / denom[..., None]
        if np.any(tie):
            out[tie] = 0.0
        return out
    return diff / (spec.c + nrm)[..., None]


def evaluate(spec: KernelSpec, x, y) -> np.ndarray:
    """Evaluate h(x, y) for two single curves."""
    x, y = _as_curve(x), _as_curve(y)
    _check_dims(x, y)
    diff = x - y
    if spec.kind is KernelKind.CUSUM:
        return diff
    nrm = float(scaled_norms(diff, spec.weighting.factor(diff.size)))
    if spec.kind is KernelKind.SPATIAL_SIGN:
        if nrm < TINY_NORM:
            return np.zeros_like(diff)
        return diff / nrm
    return diff / (spec.c + nrm)


def kernel_row(spec: KernelSpec, data: np.ndarray, i: int) -> np.ndarray:
    """Return ``(n, d)`` array with rows h(X_i, X_j), j = 1..n."""
    return _scale(spec, data[i] - data)


def pairwise(spec: KernelSpec, data: np.ndarray) -> np.ndarray:
    """Full ``(n, n, d)`` table H[i, j] = h(X_i, X_j).  Costs n^2 d memory."""
    return _scale(spec, data[:, None, :] - data[None, :, :])


def pairwise_nbytes(n: int, d: int) -> int:
    return 8 * n * n * d
