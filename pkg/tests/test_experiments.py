import json

import numpy as np
import pytest

from isospec import ConfigError, RngStream, Spectrum
from isospec.experiments import ExperimentConfig, apply_override, run_scenario, write_outputs
from isospec.experiments.checks import haar_mean_covariance, stein_targets
from isospec.experiments.mc import (MomentAccumulator, chunk_plan, parallel_map, worker_count,
                                    z_scores)
from isospec.experiments.report import ExperimentReport, PassFlag
from isospec.samplers import haar_matrix


def cfg(scenario, **kw):
    return ExperimentConfig.from_dict(kw, scenario)


def flags(report):
    return {f.name: f.passed for f in report.pass_flags}


# -- config ---------------------------------------------------------------

def test_defaults_and_overrides():
    c = cfg("marginals")
    assert (c.n, c.m) == (4096, 10_000)
    data = {}
    apply_override(data, "spectrum.magnitude=2.5", "marginals")
    apply_override(data, "n=64", "marginals")
    c = ExperimentConfig.from_dict(data, "marginals")
    assert c.n == 64 and c.spectrum == {"kind": "pm_sqrt_n", "magnitude": 2.5}


@pytest.mark.parametrize("bad", [
    {"n": -1}, {"n": "x"}, {"bogus": 1}, {"epsilon": 2.0}, {"spectrum": {"kind": "nope"}},
    {"replicas": 0}, {"field": "quaternion"},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        c = cfg("marginals", **bad)
        c.resolve_spectrum()


def test_scenario_specific_validation():
    with pytest.raises(ConfigError):
        cfg("oracles", n=65)
    with pytest.raises(ConfigError):
        cfg("stein", epsilon=0.5)
    with pytest.raises(ConfigError):
        cfg("submatrix", n=128, k=65)
    with pytest.raises(ConfigError):
        cfg("induced", n=8, s=2**20)
    with pytest.raises(ConfigError):
        apply_override({}, "noequals")
    with pytest.raises(ConfigError):
        apply_override({}, "unknown.key=1")


# -- mc helpers -----------------------------------------------------------

def test_chunk_plan_and_parallel_map():
    assert chunk_plan(10, 4) == [(0, 4), (1, 4), (2, 2)]
    assert parallel_map(lambda x: x * x, range(7), 3) == [x * x for x in range(7)]
    assert worker_count(2) == 2


def test_accumulator_and_z():
    acc = MomentAccumulator()
    g = np.random.default_rng(0)
    x = g.standard_normal(1000) + 1j * g.standard_normal(1000)
    acc.merge(MomentAccumulator.chunk_sums({"v": x[:400]}))
    acc.merge(MomentAccumulator.chunk_sums({"v": x[400:]}))
    assert acc.count == 1000
    assert acc.mean_complex("v") == pytest.approx(x.mean())
    assert acc.se("v.re") == pytest.approx(x.real.std(ddof=1) / np.sqrt(1000))
    assert z_scores(0.0, 0.0, 1e-15)[()] == pytest.approx(-1e-3)


def test_pass_flag_provenance():
    with pytest.raises(ValueError):
        PassFlag("x", "y", 1.0, "vibes")
    r = ExperimentReport("bounds", {})
    r.measured["a"] = 0.5
    r.report_only("a_only", "a")
    assert r.status == "reported"
    r.check("a_small", "a", 1.0, "paper bound")
    assert r.status == "pass"
    r.check("a_tiny", "a", 0.1, "control-calibrated")
    assert r.status == "fail"


# -- oracles / stein -------------------------------------------------------

def test_oracles_two_streams_both_pass():
    a = run_scenario(cfg("oracles", n=3, m=200_000, seed=1))
    b = run_scenario(cfg("oracles", n=3, m=200_000, seed=2))
    assert a.status == b.status == "pass"
    za = [r["z"] for r in a.replicas]
    zb = [r["z"] for r in b.replicas]
    assert za != zb
    assert a.measured["n_tests"] > 50


def test_oracles_scalar_spectrum():
    r = run_scenario(cfg("oracles", n=3, m=50_000, spectrum={"kind": "explicit", "values": [2, 2, 2]}))
    assert flags(r)["scalar_tr_ABAC_consistent"] is True
    assert r.status == "pass"


def test_oracles_real_field_rejected():
    with pytest.raises(ConfigError):
        run_scenario(cfg("oracles", n=3, m=1000, field="real"))


def test_stein_small_passes():
    r = run_scenario(cfg("stein", n=6, m=100_000, epsilon=5e-3))
    assert r.status == "pass", r.measured
    assert r.measured["alpha"] == pytest.approx(12 / 35)


def test_stein_scalar_is_exactly_zero():
    r = run_scenario(cfg("stein", n=5, m=1000, spectrum={"kind": "explicit", "values": [1.5] * 5}))
    assert r.measured["drift_abs_max"] == 0 and r.measured["cov_abs_max"] == 0
    assert r.status == "pass"


def test_stein_covariance_haar_average():
    # averaging the fixed-U covariance target over U reproduces the closed form
    spec = Spectrum(np.array([2.0, -1.0, 0.5, -1.5, 0.0]))
    n = spec.n
    b = np.diag(spec.recentered()) / spec.hs_norm(recenter=True)
    mats = b[None].astype(complex)
    us = haar_matrix(n, "complex", RngStream(3), size=20_000)
    vals = np.array([stein_targets(spec, u, mats)[1][0, 0] for u in us])
    exact = haar_mean_covariance(spec, mats)[0, 0]
    assert abs(vals.mean() - exact) <= 5 * vals.std(ddof=1) / np.sqrt(vals.size)


# -- gaussianity -----------------------------------------------------------

def test_marginals_small():
    r = run_scenario(cfg("marginals", n=256, m=2000))
    assert r.status == "pass"
    assert r.details["sampling_path"] == "rows"
    assert r.bound.value == pytest.approx(4 / 16)
    assert len(r.samples["marginal"]) == 2000


def test_marginals_empty_frame():
    r = run_scenario(cfg("marginals", n=16, m=100, frame={"kind": "random", "d": 0}))
    assert r.status == "pass" and r.measured["d"] == 0


def test_marginals_rank_one_reports_quartic():
    r = run_scenario(cfg("marginals", n=32, m=1000, spectrum={"kind": "rank_one"},
                         frame={"kind": "diag_pm", "d": 2}))
    assert "quartic_statistic" in r.measured
    assert r.measured["quartic_statistic"] == pytest.approx(2 / np.sqrt(32))
    assert r.flag("fitted_c_r1").passed is None


def test_marginals_need_traceless_frame():
    with pytest.raises(ConfigError):
        run_scenario(cfg("marginals", n=16, m=100, frame={"kind": "entries", "picks": ["D1"]}))


def test_entries_small():
    r = run_scenario(cfg("entries", n=400, m=1000, frame={"kind": "entries", "picks": ["D1", "R1,2", "I2,3"]}))
    assert r.status == "pass", r.measured
    assert r.bound.value == pytest.approx(9 * 3 / 20)


def test_entries_diagonal_variance():
    r = run_scenario(cfg("entries", n=400, m=2000, frame={"kind": "entries", "picks": ["D5"]}))
    assert r.measured["diag_var_max_abs_z"] <= 5
    with pytest.raises(ConfigError):
        run_scenario(cfg("entries", n=4, m=100, spectrum={"kind": "explicit", "values": [1, 2, 3, 4]}))


def test_induced_small_mean():
    r = run_scenario(cfg("induced", n=4, s=4, m=1000))
    assert r.measured["mean_rho_max_abs_z"] <= 5
    assert "fitted_constant" in r.measured


def test_induced_s1_matches_rank_one_marginals():
    # s = 1 is the pure-state case: same law as a rank-one isospectral matrix
    ind = run_scenario(cfg("induced", n=8, s=1, m=2000, seed=3))
    mar = run_scenario(cfg("marginals", n=8, m=2000, seed=4, spectrum={"kind": "rank_one"},
                           frame={"kind": "local"}))
    a = np.asarray(ind.samples["marginal"])
    b = np.asarray(mar.samples["marginal"])
    # both are scaled by sqrt(n(n+1)) for rank one / s = 1
    for k in (2, 4):
        sa, sb = a**k, b**k
        se = np.hypot(sa.std(ddof=1), sb.std(ddof=1)) / np.sqrt(a.size)
        assert abs(sa.mean() - sb.mean()) <= 5 * se


def test_invariant_gue_small():
    r = run_scenario(cfg("invariant", n=4, m=800, exact_gue=True, bootstrap=50))
    assert r.status == "pass", r.measured
    assert r.bound.ingredients["samples"] == 800


def test_invariant_mcmc_small():
    r = run_scenario(cfg("invariant", n=4, m=400, burn_in=800, bootstrap=50))
    assert "mcmc_vs_gue_max_z" in r.measured
    assert r.status == "pass", r.measured


# -- spectra ---------------------------------------------------------------

def test_submatrix_small():
    r = run_scenario(cfg("submatrix", n=1024, k=8, replicas=10, compare_low_srank=True))
    assert r.details["bound_status"] == "vacuous at this scale"
    assert r.status == "pass", r.measured
    assert len(r.replicas) == 10
    assert r.details["low_srank_larger"] is True


def test_submatrix_k1_reported_only():
    r = run_scenario(cfg("submatrix", n=256, k=1, replicas=5))
    assert r.status == "reported"


def test_schurhorn_small():
    r = run_scenario(cfg("schurhorn", n=256, replicas=4, n_ladder=[64], ladder_replicas=2))
    assert r.details["hypothesis_holds"] is True
    assert [row["n"] for row in r.details["ladder"]] == [64, 256]
    assert r.measured["sigma_n"] == pytest.approx(1 / np.sqrt(256) * np.sqrt(256))


def test_schurhorn_spike_reports_only():
    r = run_scenario(cfg("schurhorn", n=128, replicas=2, spectrum={"kind": "spike"}, n_ladder=[]))
    assert r.details["hypothesis_holds"] is False
    assert r.status == "reported"


# -- bounds scenario and outputs -------------------------------------------

@pytest.mark.parametrize("theorem, extra, value", [
    ("entries", {"frame": {"kind": "random", "d": 4}}, 3.6),
    ("t0", {"n": 4, "spectrum": {"kind": "explicit", "values": [1, 1, -1, -1]},
            "frame": {"kind": "explicit", "matrices": [{"n": 4, "re": (np.diag([1, -1, 0, 0]) / np.sqrt(2)).tolist()}]}}, 2.0),
    ("submatrix", {"n": 10**6, "k": 4}, 0.288),
])
def test_bounds_scenario(theorem, extra, value):
    r = run_scenario(cfg("bounds", theorem=theorem, **extra))
    assert r.measured["bound"] == pytest.approx(value)
    assert r.status == "reported"


def test_bounds_unknown_theorem():
    with pytest.raises(ConfigError):
        run_scenario(cfg("bounds", theorem="riemann"))


def test_outputs_and_worker_independence(tmp_path):
    c = cfg("oracles", n=2, m=30_000, seed=7)
    reports = [run_scenario(c, w) for w in (1, 3)]
    assert reports[0].to_json() == reports[1].to_json()
    paths = write_outputs(reports[0], tmp_path)
    data = json.loads(paths["report"].read_text())
    assert data["rng"] == {"seed": 7, "stream_id": 0}
    assert "runtime_seconds" not in paths["report"].read_text()
    assert "runtime_seconds" in paths["timing"].read_text()
    lines = paths["replicas"].read_text().splitlines()
    assert lines[0].startswith("# scenario: oracles")
    for f in data["pass_flags"]:
        assert f["measured"] in data["measured"] and f["provenance"] in (
            "paper bound", "control-calibrated", "reported-only")
