"""Synthetic functional time series and change scenarios for size/power studies."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bootstrap import BootstrapConfig, critical_value, run_test
from .core import FunctionalSample
from .kernels import KernelSpec

__all__ = [
    "Innovation",
    "SimConfig",
    "ScenarioId",
    "ScenarioSpec",
    "far1",
    "ar_operator",
    "apply_scenario",
    "affected_rows",
    "generate",
    "Study",
    "StudyResult",
    "monte_carlo",
    "ALPHA_GRID",
    "null_companion",
]

ALPHA_GRID = (0.1, 0.05, 0.025, 0.01)


class Innovation(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class SimConfig:
    n: int = 200
    d: int = 100
    a: float = 1.0
    burn_in: int = 100
    innovation: Innovation = Innovation.GAUSSIAN
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "innovation", Innovation(self.innovation))
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")


def ar_operator(d: int) -> np.ndarray:
    """Phi_ij = min(i, j) / d^2 with 1-based grid indices."""
    idx = np.arange(1, d + 1, dtype=float)
    return np.minimum(idx[:, None], idx[None, :]) / d**2


def far1(config: SimConfig) -> FunctionalSample:
    """Functional AR(1) with Brownian-motion innovations on a d-point grid.

    X_{-BI} is a discretized Brownian motion, X_t = a Phi X_{t-1} + W_t for
    -BI < t <= n, and the first BI + 1 curves are discarded.
    """
    rng = np.random.default_rng(config.seed)
    steps = config.burn_in + config.n + 1
    shape = (steps, config.d)
    if config.innovation is Innovation.GAUSSIAN:
        xi = rng.standard_normal(shape)
    else:
        xi = rng.standard_t(1, size=shape)
    W = np.cumsum(xi, axis=1) / math.sqrt(config.d)
    phi_t = (config.a * ar_operator(config.d)).T
    X = np.empty(shape)
    X[0] = W[0]
    for t in range(1, steps):
        X[t] = X[t - 1] @ phi_t + W[t]
    return FunctionalSample(X[config.burn_in + 1:])


class ScenarioId(str, enum.Enum):
    NULL = "null"
    S1 = "s1_uniform_jump"
    S2 = "s2_sinus_jump"
    S3 = "s3_jump_with_outliers"
    S4 = "s4_heavy_jump"
    S5 = "s5_early_jump"
    S6 = "s6_large_d"
    NULL_OUTLIERS = "null_outliers"
    NULL_HEAVY = "null_heavy"

    @classmethod
    def parse(cls, value) -> "ScenarioId":
        if isinstance(value, ScenarioId):
            return value
        key = str(value).lower()
        for member in cls:
            if key == member.value or key == member.value.split("_")[0] and key.startswith("s"):
                return member
        raise ValueError(
            f"unknown scenario {value!r}; valid ids: "
            + ", ".join(m.value for m in cls)
            + " (or the short forms s1..s6)"
        )


SCENARIO_IDS = tuple(m.value for m in ScenarioId)


@dataclass(frozen=True)
class ScenarioSpec:
    id: ScenarioId = ScenarioId.NULL
    gamma: float = 0.3
    n: int | None = None
    d: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "id", ScenarioId.parse(self.id))
        if self.id is ScenarioId.S5 and not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.id is ScenarioId.S6:
            if self.n is None:
                object.__setattr__(self, "n", 150)
            if self.d is None:
                object.__setattr__(self, "d", 350)

    @property
    def innovation(self) -> Innovation:
        if self.id in (ScenarioId.S4, ScenarioId.NULL_HEAVY):
            return Innovation.CAUCHY
        return Innovation.GAUSSIAN

    @property
    def is_null(self) -> bool:
        return self.id in (ScenarioId.NULL, ScenarioId.NULL_OUTLIERS, ScenarioId.NULL_HEAVY)

    def to_dict(self) -> dict:
        out = {"id": self.id.value}
        if self.id is ScenarioId.S5:
            out["gamma"] = self.gamma
        if self.n is not None:
            out["n"] = self.n
        if self.d is not None:
            out["d"] = self.d
        return out


def null_companion(scenario: ScenarioSpec) -> ScenarioSpec:
    """Null scenario sharing the data-generating process of ``scenario``."""
    if scenario.id is ScenarioId.S3:
        return ScenarioSpec(ScenarioId.NULL_OUTLIERS)
    if scenario.id is ScenarioId.S4:
        return ScenarioSpec(ScenarioId.NULL_HEAVY)
    if scenario.id is ScenarioId.S6:
        return ScenarioSpec(ScenarioId.NULL, n=scenario.n, d=scenario.d)
    if scenario.is_null:
        return scenario
    return ScenarioSpec(ScenarioId.NULL)


def _outlier_rows(n: int, fractions=(0.2, 0.4, 0.6, 0.8)) -> list[int]:
    """1-based outlier positions round(f n), clipped to [1, n]."""
    rows = sorted({min(max(int(round(f * n)), 1), n) for f in fractions})
    return rows


def _start(n: int, frac: float) -> int:
    """First 1-based index i with i >= frac * n."""
    return max(1, math.ceil(round(frac * n, 9)))


def affected_rows(scenario: ScenarioSpec, n: int) -> list[int]:
    """1-based rows that the scenario modifies."""
    sid = scenario.id
    rows: set[int] = set()
    if sid in (ScenarioId.S1, ScenarioId.S2, ScenarioId.S3, ScenarioId.S4, ScenarioId.S6):
        rows |= set(range(_start(n, 0.5), n + 1))
    if sid is ScenarioId.S5:
        rows |= set(range(_start(n, scenario.gamma), n + 1))
    if sid in (ScenarioId.S3, ScenarioId.NULL_OUTLIERS):
        rows |= set(_outlier_rows(n))
    return sorted(rows)


def apply_scenario(sample: FunctionalSample, scenario: ScenarioSpec) -> FunctionalSample:
    """Apply the mean shift and/or outlier inflation of ``scenario``.

    Rows are 1-based: the jump applies to i >= ceil(n/2) (ceil(gamma n) for s5),
    outliers sit at round(0.2n), round(0.4n), round(0.6n), round(0.8n) and
    are multiplied by 10 before the shift is added.
    """
    n, d = sample.n, sample.d
    sid = scenario.id
    if scenario.n is not None and scenario.n != n or scenario.d is not None and scenario.d != d:
        raise ValueError(
            f"scenario {sid.value} requires n={scenario.n}, d={scenario.d}; sample has n={n}, d={d}"
        )
    Y = np.array(sample.data, copy=True)
    if sid in (ScenarioId.S3, ScenarioId.NULL_OUTLIERS):
        rows = _outlier_rows(n)
        Y[np.array(rows) - 1] *= 10.0

    shift = None
    start = _start(n, 0.5)
    if sid in (ScenarioId.S1, ScenarioId.S3, ScenarioId.S6):
        shift = np.full(d, 0.3)
    elif sid is ScenarioId.S2:
        D = np.arange(1, d + 1)
        shift = np.sin(np.pi * D / d) / (2.0 * math.sqrt(2.0))
    elif sid is ScenarioId.S4:
        shift = np.full(d, 5.0)
    elif sid is ScenarioId.S5:
        shift = np.full(d, 0.3)
        start = _start(n, scenario.gamma)
    if shift is not None:
        Y[start - 1:] += shift
    return FunctionalSample(Y, labels=sample.labels)


def generate(scenario: ScenarioSpec, config: SimConfig) -> FunctionalSample:
    """Simulate fAR(1) data for ``scenario`` (innovations and s6 dimensions included)."""
    n = scenario.n if scenario.n is not None else config.n
    d = scenario.d if scenario.d is not None else config.d
    cfg = replace(config, n=n, d=d, innovation=scenario.innovation)
    return apply_scenario(far1(cfg), scenario)


@dataclass(frozen=True)
class Study:
    scenario: ScenarioSpec
    sim: SimConfig
    bootstrap: BootstrapConfig
    S: int
    kernels: Sequence[KernelSpec] = field(
        default_factory=lambda: (KernelSpec.cusum(), KernelSpec.spatial_sign())
    )
    alphas: Sequence[float] = ALPHA_GRID
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.S < 1:
            raise ValueError(f"study count S must be >= 1, got {self.S}")


@dataclass(frozen=True)
class StudyResult:
    scenario: ScenarioSpec
    kernels: tuple[KernelSpec, ...]
    alphas: tuple[float, ...]
    rejections: np.ndarray  # (S, kernels, alphas) booleans
    p_values: np.ndarray  # (S, kernels)
    q_used: np.ndarray  # (S, kernels)
    study_seeds: tuple[int, ...]

    @property
    def S(self) -> int:
        return self.rejections.shape[0]

    def rate(self, kernel: int | str, alpha: float) -> float:
        ki = self._kernel_index(kernel)
        ai = self.alphas.index(alpha)
        return float(self.rejections[:, ki, ai].mean())

    def _kernel_index(self, kernel) -> int:
        if isinstance(kernel, int):
            return kernel
        names = [k.kind.value for k in self.kernels]
        from .kernels import KernelKind
        return names.index(KernelKind.parse(kernel).value)

    def table(self) -> list[dict]:
        """Rows with scenario, kernel, alpha, rejection_rate, mc_stderr."""
        out = []
        for ki, k in enumerate(self.kernels):
            for ai, a in enumerate(self.alphas):
                p = float(self.rejections[:, ki, ai].mean())
                out.append({
                    "scenario": self.scenario.id.value,
                    "kernel": k.kind.value,
                    "alpha": a,
                    "rejection_rate": p,
                    "mc_stderr": math.sqrt(p * (1.0 - p) / self.S),
                })
        return out


def study_seeds(seed: int, S: int) -> list[tuple[int, int]]:
    """(data seed, bootstrap seed) per study, all distinct."""
    state = np.random.SeedSequence(seed).generate_state(2 * S, dtype=np.uint64)
    vals = [int(x) for x in state]
    if len(set(vals)) != len(vals):  # pragma: no cover - 64-bit collision
        raise RuntimeError("seed collision; choose another master seed")
    return [(vals[2 * s], vals[2 * s + 1]) for s in range(S)]


def _one_study(study: Study, seeds: tuple[int, int]):
    data_seed, boot_seed = seeds
    sample = generate(study.scenario, replace(study.sim, seed=data_seed))
    cfg = replace(study.bootstrap, seed=boot_seed, workers=1)
    rej = np.zeros((len(study.kernels), len(study.alphas)), dtype=bool)
    pv = np.zeros(len(study.kernels))
    qs = np.zeros(len(study.kernels))
    for ki, spec in enumerate(study.kernels):
        rep = run_test(sample, spec, cfg)
        pv[ki] = rep.p_value
        qs[ki] = rep.q_used
        for ai, a in enumerate(study.alphas):
            rej[ki, ai] = rep.statistic > critical_value(rep.replicates, a)
    return rej, pv, qs


def monte_carlo(study: Study, progress=None) -> StudyResult:
    """Run S independent simulate-then-test pipelines.

    Each study draws its data and multipliers from its own seed pair, so the
    result is independent of ``workers``.  All kernels are applied to the same
    simulated sample.
    """
    seeds = study_seeds(study.seed, study.S)
    if study.workers > 1:
        with ThreadPoolExecutor(max_workers=study.workers) as pool:
            results = list(pool.map(lambda s: _one_study(study, s), seeds))
    else:
        results = []
        for i, s in enumerate(seeds):
            results.append(_one_study(study, s))
            if progress is not None:
                progress(i + 1, study.S)
    return StudyResult(
        scenario=study.scenario,
        kernels=tuple(study.kernels),
        alphas=tuple(study.alphas),
        rejections=np.stack([r[0] for r in results]),
        p_values=np.stack([r[1] for r in results]),
        q_used=np.stack([r[2] for r in results]),
        study_seeds=tuple(s[0] for s in seeds),
    )
