"""Soil-structure interaction analysis with frequency-dependent foundation
impedances: time, frequency and hybrid solvers."""

from .model import (GroundMotion, InvalidParameterError, NonConvergenceError, Story,
                    SystemModel, build_base_model, build_physical_model, period_lengthening,
                    table41_fixture, table52_fixture, table63_building)
from .newmark import NewmarkParams, TimeHistory, integrate, run_ground_motion, stability_map
from .freq_solver import solve_frequency_domain
from .impedance import ImpedanceFunction, singular_decompose
from .fir_nakamura import FirFilter, fit_fir, fir_newmark_solve
from .iir_filters import IirFilter, RecursiveDftEvaluator, fit_iir_least_squares
from .hybrid import HtfdConfig, ReferenceSubstructure, hftd_solve, htfd_solve

__all__ = [
    "GroundMotion", "InvalidParameterError", "NonConvergenceError", "Story", "SystemModel",
    "build_base_model", "build_physical_model", "period_lengthening", "table41_fixture",
    "table52_fixture", "table63_building", "NewmarkParams", "TimeHistory", "integrate",
    "run_ground_motion", "stability_map", "solve_frequency_domain", "ImpedanceFunction",
    "singular_decompose", "FirFilter", "fit_fir", "fir_newmark_solve", "IirFilter",
    "RecursiveDftEvaluator", "fit_iir_least_squares", "HtfdConfig", "ReferenceSubstructure",
    "hftd_solve", "htfd_solve",
]

__version__ = "0.1.0"
