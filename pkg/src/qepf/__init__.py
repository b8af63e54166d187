"""Quantile-based persistence functions: model curves, empirical estimation
and a two-sample equality test."""
__version__ = "0.1.0"

from ._accel import backend
from .distributions import Family, QuantileModel, make_model, parse_model_spec
from .empirical import (
    PersistenceCurve,
    SampleArm,
    bootstrap_pointwise_ci,
    empirical_curve,
    empirical_qepf,
    empirical_quantile,
    empirical_vitality,
    read_values_csv,
)
from .eqtest import EquivalenceResult, TestConfig, run_test, sensitivity_scan, sup_statistic
from .errors import ConvergenceError, DomainError, InfeasibleError, InfiniteMeanError, QEPFError, TailEmptyError
from .persistence import (
    Quadrature,
    hazard_quantile,
    lmoment_tail_check,
    lorenz,
    model_curve,
    mrq,
    qepf,
    qepf_quadrature,
    qepf_via_lorenz,
    qepf_via_ttt,
    ttt,
    vitality,
)
from .simulate import run_bias_mse, run_power_size, run_power_size_table
from .stationarity import find_stationary_points, solve_shift_for_stationarity

__all__ = [
    "backend",
    "Family", "QuantileModel", "make_model", "parse_model_spec",
    "PersistenceCurve", "SampleArm", "bootstrap_pointwise_ci", "empirical_curve",
    "empirical_qepf", "empirical_quantile", "empirical_vitality", "read_values_csv",
    "EquivalenceResult", "TestConfig", "run_test", "sensitivity_scan", "sup_statistic",
    "ConvergenceError", "DomainError", "InfeasibleError", "InfiniteMeanError", "QEPFError",
    "TailEmptyError",
    "Quadrature", "hazard_quantile", "lmoment_tail_check", "lorenz", "model_curve", "mrq",
    "qepf", "qepf_quadrature", "qepf_via_lorenz", "qepf_via_ttt", "ttt", "vitality",
    "run_bias_mse", "run_power_size", "run_power_size_table",
    "find_stationary_points", "solve_shift_for_stationarity",
]
