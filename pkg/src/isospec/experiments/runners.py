"""Scenario dispatch and the bound-evaluation scenario."""

from __future__ import annotations

import time

from ..bounds import (bound_affine, bound_entries, bound_submatrix_semicircle, bound_t0,
                      bound_t0_tv, statistic_quartic)
from ..errors import ConfigError
from .checks import verify_moment_oracles, verify_stein_conditions
from .config import ExperimentConfig
from .gaussianity import (run_entry_marginals, run_induced_state, run_invariant_ensemble,
                          run_marginal_gaussianity)
from .report import ExperimentReport
from .spectra import run_schur_horn, run_submatrix_semicircle

BOUND_THEOREMS = ("entries", "t0", "t0_tv", "affine", "quartic", "induced", "submatrix")


def evaluate_bound(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Evaluate one bound from the configured spectrum/frame; nothing is sampled."""
    thm = cfg.theorem
    if thm not in BOUND_THEOREMS:
        raise ConfigError(f"unknown theorem {thm!r}; expected one of {BOUND_THEOREMS}")
    constants = cfg.constants_config()
    spectrum = cfg.resolve_spectrum() if thm not in ("quartic", "induced") else None
    if thm == "entries":
        d = cfg.d if cfg.d is not None else int(cfg.frame.get("d", 1))
        bound = bound_entries(spectrum, d)
    elif thm == "submatrix":
        if cfg.k is None:
            raise ConfigError("the submatrix bound needs k")
        bound = bound_submatrix_semicircle(spectrum, cfg.k, cfg.t, constants)
    else:
        frame = cfg.resolve_frame()
        if thm == "t0":
            bound = bound_t0(spectrum, frame, cfg.field_tag)
        elif thm == "t0_tv":
            bound = bound_t0_tv(spectrum, frame, cfg.field_tag)
        elif thm == "affine":
            bound = bound_affine(spectrum, frame.matrices)
        elif thm == "quartic":
            bound = statistic_quartic(frame, cfg.n, constants=constants)
        else:
            if cfg.s is None:
                raise ConfigError("the induced-state statistic needs s")
            bound = statistic_quartic(frame, cfg.n, cfg.s, constants)
    report = ExperimentReport(cfg.scenario, cfg.to_dict(), headline="bound", bound=bound)
    report.measured["bound"] = bound.value
    report.report_only("bound_value", "bound")
    if bound.vacuous:
        report.notes.append("bound exceeds 1: vacuous at this scale")
    return report


RUNNERS = {
    "oracles": verify_moment_oracles,
    "stein": verify_stein_conditions,
    "marginals": run_marginal_gaussianity,
    "entries": run_entry_marginals,
    "submatrix": run_submatrix_semicircle,
    "schurhorn": run_schur_horn,
    "induced": run_induced_state,
    "invariant": run_invariant_ensemble,
    "bounds": evaluate_bound,
}


def run_scenario(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    start = time.perf_counter()
    report = RUNNERS[cfg.scenario](cfg, workers)
    report.runtime_seconds = time.perf_counter() - start
    return report
