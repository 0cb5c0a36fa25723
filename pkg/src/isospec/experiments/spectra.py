"""Spectral runners: semicircle behaviour of small truncations and the
Schur-Horn diagonal."""

from __future__ import annotations

import math

import numpy as np

from ..bounds import bound_submatrix_semicircle
from ..errors import ConfigError
from ..linalg import FieldTag, Spectrum
from ..metrics import w1_1d, w1_1d_vs_gaussian, w1_spectral_semicircle
from ..samplers import _conjugate_diag, gaussian_ensemble, haar_matrix, haar_rows
from .config import ExperimentConfig
from .mc import parallel_map
from .report import ExperimentReport

# property thresholds for the truncation experiment
POOLED_GUE_W1_MAX = 0.1
MEAN_SEMICIRCLE_W1_MAX = 0.2
# per-replica Gaussianity of the diagonal and the max-diagonal band
SCHUR_HORN_W1_MAX = 0.1
SCHUR_HORN_PASS_FRACTION = 0.9
MAX_DIAG_BAND = (0.5, 3.0)


def low_srank_spectrum(n: int) -> Spectrum:
    """Trace-zero spectrum with only ``max(2, n // 64)`` nonzero eigenvalues."""
    r = max(2, (n // 64) // 2 * 2)
    vals = np.zeros(n)
    vals[: r // 2] = math.sqrt(n)
    vals[r // 2: r] = -math.sqrt(n)
    return Spectrum(vals)


def _truncation_eigs(spectrum: Spectrum, k: int, field, rng, scaling: float) -> np.ndarray:
    u = haar_rows(spectrum.n, k, field, rng)
    block = _conjugate_diag(u, spectrum.values)
    return np.linalg.eigvalsh(scaling * block) / math.sqrt(k)


def run_submatrix_semicircle(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    n, k = cfg.n, cfg.k
    spectrum = cfg.resolve_spectrum()
    if abs(spectrum.trace) > 1e-10 * max(1.0, spectrum.hs_norm()):
        raise ConfigError("submatrix truncation needs tr(Lambda) = 0")
    field = cfg.field_tag
    bound = bound_submatrix_semicircle(spectrum, k, cfg.t, cfg.constants_config())
    scaling = bound.ingredients["scaling"]
    rng = cfg.rng()

    def replica(i):
        sub = rng.substream("replica", i)
        eig = _truncation_eigs(spectrum, k, field, sub.substream("truncation"), scaling)
        gue = np.linalg.eigvalsh(gaussian_ensemble(k, field, sub.substream("gue")).entries) / math.sqrt(k)
        return eig, gue

    results = parallel_map(replica, range(cfg.replicas), workers)
    report = ExperimentReport(cfg.scenario, cfg.to_dict(), headline="mean_w1_semicircle", bound=bound)
    rows = []
    for i, (eig, gue) in enumerate(results):
        rows.append({"replica": i, "w1_semicircle": w1_spectral_semicircle(eig),
                     "w1_semicircle_gue": w1_spectral_semicircle(gue), "w1_vs_gue": w1_1d(eig, gue),
                     "max_eig": float(eig.max()), "min_eig": float(eig.min())})
    report.replicas = rows
    pooled = np.concatenate([e for e, _ in results])
    pooled_gue = np.concatenate([g for _, g in results])
    report.measured["pooled_w1_vs_gue"] = w1_1d(pooled, pooled_gue)
    report.measured["mean_w1_semicircle"] = float(np.mean([r["w1_semicircle"] for r in rows]))
    report.measured["mean_w1_semicircle_gue"] = float(np.mean([r["w1_semicircle_gue"] for r in rows]))
    report.measured["bound"] = bound.value
    report.measured["expectation_bound"] = bound.extra["expectation_bound"]
    if bound.vacuous:
        report.notes.append(f"bound {bound.symbolic} is vacuous at this scale; property checks substitute")
    report.details["bound_status"] = "vacuous at this scale" if bound.vacuous else "informative"
    if k == 1:
        report.notes.append("k = 1 is degenerate: distances are reported only")
        report.report_only("pooled_vs_gue", "pooled_w1_vs_gue", POOLED_GUE_W1_MAX)
        report.report_only("mean_semicircle", "mean_w1_semicircle", MEAN_SEMICIRCLE_W1_MAX)
    else:
        report.check("pooled_vs_gue", "pooled_w1_vs_gue", POOLED_GUE_W1_MAX, "control-calibrated")
        report.check("mean_semicircle", "mean_w1_semicircle", MEAN_SEMICIRCLE_W1_MAX, "control-calibrated")
    if not bound.vacuous:
        report.report_only("mean_semicircle_vs_expectation_bound", "mean_w1_semicircle",
                           bound.extra["expectation_bound"])

    if cfg.compare_low_srank:
        low = low_srank_spectrum(n)
        low_scaling = math.sqrt(n * n - 1) / low.hs_norm()

        def low_replica(i):
            eig = _truncation_eigs(low, k, field, rng.substream("low-srank", i), low_scaling)
            return w1_spectral_semicircle(eig)

        vals = parallel_map(low_replica, range(cfg.replicas), workers)
        report.measured["low_srank_mean_w1_semicircle"] = float(np.mean(vals))
        report.measured["low_srank_stable_rank"] = low.stable_rank()
        report.details["low_srank_larger"] = bool(np.mean(vals) > report.measured["mean_w1_semicircle"])
        report.report_only("low_srank_comparison", "low_srank_mean_w1_semicircle")
    report.samples["eigenvalues"] = pooled
    return report


# -- Schur-Horn ---------------------------------------------------------------

def schur_horn_diagonal(spectrum: Spectrum, field, rng) -> np.ndarray:
    """Diagonal of ``U L U*``: ``a_ii = sum_j |u_ij|^2 l_j``."""
    u = haar_matrix(spectrum.n, field, rng)
    return (np.abs(u) ** 2) @ spectrum.values


def _schur_horn_stats(diag: np.ndarray, spectrum: Spectrum) -> dict:
    n = spectrum.n
    mean = spectrum.trace / n
    sigma = spectrum.hs_norm(recenter=True) / n
    return {"w1": w1_1d_vs_gaussian(diag, mean, sigma),
            "max_stat": float((diag.max() - mean) / math.sqrt(math.log(n)))}


def run_schur_horn(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    n = cfg.n
    if n < 2:
        raise ConfigError("Schur-Horn needs n >= 2")
    spectrum = cfg.resolve_spectrum()
    if spectrum.is_scalar():
        raise ConfigError("scalar spectrum: the diagonal is constant")
    field = cfg.field_tag
    rng = cfg.rng()
    sigma = spectrum.hs_norm(recenter=True) / n
    # hypothesis ||L~||_op <= K sqrt(n) sigma_n, i.e. srank(L~) >= n / K^2
    op_ratio = spectrum.op_norm(recenter=True) / (math.sqrt(n) * sigma)
    hypothesis = op_ratio <= cfg.schur_horn_k

    def replica(i):
        diag = schur_horn_diagonal(spectrum, field, rng.substream("replica", i))
        return diag, _schur_horn_stats(diag, spectrum)

    results = parallel_map(replica, range(cfg.replicas), workers)
    report = ExperimentReport(cfg.scenario, cfg.to_dict(), headline="median_w1")
    report.replicas = [{"replica": i, "w1": st["w1"], "max_stat": st["max_stat"]}
                       for i, (_, st) in enumerate(results)]
    w1s = np.array([st["w1"] for _, st in results])
    maxes = np.array([st["max_stat"] for _, st in results])
    report.measured.update({
        "mean": spectrum.trace / n, "sigma_n": sigma, "op_ratio": op_ratio,
        "median_w1": float(np.median(w1s)), "max_w1": float(w1s.max()),
        "replicas_w1_ok": int(np.sum(w1s <= SCHUR_HORN_W1_MAX)),
        "min_max_stat": float(maxes.min()), "max_max_stat": float(maxes.max()),
        "mean_max_stat": float(maxes.mean()),
    })
    needed = math.ceil(SCHUR_HORN_PASS_FRACTION * cfg.replicas)
    if hypothesis:
        report.check("w1_per_replica", "replicas_w1_ok", needed, "control-calibrated", ">=")
        report.check("max_stat_lo", "min_max_stat", MAX_DIAG_BAND[0], "control-calibrated", ">=")
        report.check("max_stat_hi", "max_max_stat", MAX_DIAG_BAND[1], "control-calibrated", "<=")
    else:
        report.notes.append(f"operator-norm hypothesis fails (ratio {op_ratio:.3g} > K = {cfg.schur_horn_k}); "
                            "Gaussian behaviour is reported, not asserted")
        report.report_only("w1_per_replica", "replicas_w1_ok", needed)
        report.report_only("max_stat_lo", "min_max_stat", MAX_DIAG_BAND[0])
        report.report_only("max_stat_hi", "max_max_stat", MAX_DIAG_BAND[1])
    report.details["hypothesis_holds"] = hypothesis

    ladder = []
    for n_l in cfg.n_ladder:
        sub_cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "n": int(n_l), "n_ladder": []}, cfg.scenario)
        spec_l = sub_cfg.resolve_spectrum()

        def rung(i, spec_l=spec_l, n_l=n_l):
            diag = schur_horn_diagonal(spec_l, field, rng.substream("ladder", int(n_l), i))
            return _schur_horn_stats(diag, spec_l)

        stats = parallel_map(rung, range(cfg.ladder_replicas), workers)
        ladder.append({"n": int(n_l), "mean_w1": float(np.mean([s["w1"] for s in stats])),
                       "mean_max_stat": float(np.mean([s["max_stat"] for s in stats]))})
    ladder.append({"n": n, "mean_w1": float(w1s.mean()), "mean_max_stat": float(maxes.mean())})
    report.details["ladder"] = sorted(ladder, key=lambda r: r["n"])
    report.samples["diagonal"] = (results[0][0] - spectrum.trace / n) / sigma
    return report
