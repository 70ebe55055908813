"""Robust change-point detection for functional time series.

Two-sample U-statistics with antisymmetric kernels (CUSUM, spatial sign,
clipped) and a dependent wild bootstrap for their critical values.
"""
__version__ = "0.1.0"

from .bootstrap import BootstrapConfig, TestReport, bootstrap_statistic, run_test
from .core import FunctionalSample, GridWeighting, inner, norm, read_csv, write_csv
from .kernels import KernelKind, KernelSpec, evaluate
from .multiplier import (
    LagConvention,
    MultiplierConfig,
    adaptive_bandwidth,
    build_covariance,
    draw_multipliers,
    qs_weight,
    sqrt_psd,
)
from .simulate import ScenarioSpec, SimConfig, Study, apply_scenario, far1, generate, monte_carlo
from .ustat import compute_row_sums, cusum_identity_check, hoeffding_plugin, ustat_process

__all__ = [
    "BootstrapConfig",
    "FunctionalSample",
    "GridWeighting",
    "KernelKind",
    "KernelSpec",
    "LagConvention",
    "MultiplierConfig",
    "ScenarioSpec",
    "SimConfig",
    "Study",
    "TestReport",
    "adaptive_bandwidth",
    "apply_scenario",
    "bootstrap_statistic",
    "build_covariance",
    "compute_row_sums",
    "cusum_identity_check",
    "draw_multipliers",
    "evaluate",
    "far1",
    "generate",
    "hoeffding_plugin",
    "inner",
    "monte_carlo",
    "norm",
    "qs_weight",
    "read_csv",
    "run_test",
    "sqrt_psd",
    "ustat_process",
    "write_csv",
]
