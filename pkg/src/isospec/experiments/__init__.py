"""Reproducible scenario runners."""

from .checks import verify_moment_oracles, verify_stein_conditions
from .config import SCENARIOS, ExperimentConfig, apply_override
from .gaussianity import (run_entry_marginals, run_induced_state, run_invariant_ensemble,
                          run_marginal_gaussianity)
from .report import ExperimentReport, PassFlag, write_outputs
from .runners import RUNNERS, evaluate_bound, run_scenario
from .spectra import run_schur_horn, run_submatrix_semicircle

__all__ = [
    "SCENARIOS", "RUNNERS", "ExperimentConfig", "ExperimentReport", "PassFlag", "apply_override",
    "evaluate_bound", "run_entry_marginals", "run_induced_state", "run_invariant_ensemble",
    "run_marginal_gaussianity", "run_scenario", "run_schur_horn", "run_submatrix_semicircle",
    "verify_moment_oracles", "verify_stein_conditions", "write_outputs",
]
