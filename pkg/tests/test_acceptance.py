"""Acceptance suite.  Each test prints one line, ``criterion N: PASS|FAIL``,
with the measured values next to the pinned thresholds.

Run alone with ``pytest tests/test_acceptance.py -v`` (about 10 minutes on one
core).
"""

import math
import time

import numpy as np
import pytest

from isospec.experiments import ExperimentConfig, run_scenario, write_outputs
from isospec.metrics import (semicircle_cdf, semicircle_quantile, w1_1d, w1_multi,
                             w1_spectral_semicircle)
from isospec.rng import RngStream

pytestmark = pytest.mark.slow

# tolerances, one block per criterion
C1_Z_MAX, C1_M, C1_SECONDS = 5.0, 1_000_000, 600
C2_EPS, C2_M, C2_SECONDS = 1e-3, 1_000_000, 300
C3_W1_MAX, C3_BOUND, C3_SECONDS = 0.1, 4 / math.sqrt(4096), 120
C4_BOUND, C4_SECONDS = 0.27, 300
C5_POOLED_MAX, C5_MEAN_MAX, C5_SECONDS = 0.1, 0.2, 900
C6_W1_MAX, C6_MIN_OK, C6_BAND, C6_SECONDS = 0.1, 18, (0.5, 3.0), 600
C7_SPREAD, C7_Z_MAX, C7_SECONDS = 0.5, 5.0, 300
C8_TOL, C8_ATOM, C8_ATOM_TOL, C8_SECONDS = 1e-10, 8 / (3 * math.pi), 1e-3, 60
C9_WORKERS = (1, 4, 16)


@pytest.fixture
def say(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def run(scenario, **kw):
    cfg = ExperimentConfig.from_dict(kw, scenario)
    t0 = time.perf_counter()
    rep = run_scenario(cfg)
    return rep, time.perf_counter() - t0


def test_c1_oracle_suite(say):
    worst, total, lines = 0.0, 0.0, []
    for n in (2, 3, 5):
        rep, secs = run("oracles", n=n, m=C1_M)
        worst = max(worst, rep.measured["max_abs_z"])
        total += secs
        lines.append(f"n={n}: max|z|={rep.measured['max_abs_z']:.2f} over {rep.measured['n_tests']}")
    ok = worst <= C1_Z_MAX and total <= C1_SECONDS
    say(1, ok, f"{'; '.join(lines)}; limit {C1_Z_MAX}; {total:.0f}s <= {C1_SECONDS}s")
    assert worst <= C1_Z_MAX
    assert total <= C1_SECONDS


def test_c2_stein_conditions(say):
    rep, secs = run("stein", n=10, epsilon=C2_EPS, m=C2_M)
    m = rep.measured
    drift_ok = m["drift_rel_err"] <= 5 * C2_EPS + 5 * m["drift_rel_se"]
    cov_ok = m["cov_excess"] <= 5 * C2_EPS
    ok = drift_ok and cov_ok and secs <= C2_SECONDS
    say(2, ok, f"drift rel err {m['drift_rel_err']:.2e} (<= 5eps + 5SE = {5 * C2_EPS + 5 * m['drift_rel_se']:.2e}); "
               f"cov rel err {m['cov_rel_err']:.2e}, excess over 5SE {m['cov_excess']:.2e} (<= {5 * C2_EPS:.0e}); "
               f"{secs:.0f}s")
    assert drift_ok and cov_ok
    assert secs <= C2_SECONDS


def test_c3_marginal_gaussianity(say):
    rep, secs = run("marginals")
    w1 = rep.measured["w1"]
    ok = w1 <= C3_W1_MAX and secs <= C3_SECONDS and rep.passed
    say(3, ok, f"W1={w1:.4f} <= {C3_W1_MAX}; bound={rep.bound.value:.4f} (expected {C3_BOUND:.4f}); "
               f"path={rep.details['sampling_path']}; {secs:.0f}s")
    assert rep.bound.value == pytest.approx(C3_BOUND)
    assert w1 <= C3_W1_MAX
    assert rep.passed
    assert secs <= C3_SECONDS


def test_c4_entry_marginals(say):
    rep, secs = run("entries")
    m = rep.measured
    thr = C4_BOUND + m["allowance"]
    ok = m["w1"] <= thr and secs <= C4_SECONDS
    say(4, ok, f"W1={m['w1']:.4f} <= bound {rep.bound.value:.3f} + 3*control allowance "
               f"{m['allowance']:.4f} = {thr:.4f}; {secs:.0f}s")
    assert rep.bound.value == pytest.approx(C4_BOUND)
    assert m["w1"] <= thr
    assert secs <= C4_SECONDS


def test_c5_submatrix_semicircle(say):
    rep, secs = run("submatrix", n=65536, k=32, replicas=200)
    m = rep.measured
    ok = (m["pooled_w1_vs_gue"] <= C5_POOLED_MAX and m["mean_w1_semicircle"] <= C5_MEAN_MAX
          and rep.bound.vacuous and secs <= C5_SECONDS)
    say(5, ok, f"pooled W1 vs GUE={m['pooled_w1_vs_gue']:.4f} <= {C5_POOLED_MAX}; "
               f"mean W1 semicircle={m['mean_w1_semicircle']:.4f} <= {C5_MEAN_MAX}; "
               f"bound {rep.bound.value:.1f} ({rep.details['bound_status']}); {secs:.0f}s")
    assert rep.details["bound_status"] == "vacuous at this scale"
    assert m["pooled_w1_vs_gue"] <= C5_POOLED_MAX
    assert m["mean_w1_semicircle"] <= C5_MEAN_MAX
    assert secs <= C5_SECONDS


def test_c6_schur_horn(say):
    rep, secs = run("schurhorn", n=2048, replicas=20)
    w1s = np.array([r["w1"] for r in rep.replicas])
    maxes = np.array([r["max_stat"] for r in rep.replicas])
    n_ok = int(np.sum(w1s <= C6_W1_MAX))
    band_ok = bool(np.all((maxes >= C6_BAND[0]) & (maxes <= C6_BAND[1])))
    ok = n_ok >= C6_MIN_OK and band_ok and secs <= C6_SECONDS
    say(6, ok, f"{n_ok}/20 replicas with W1 <= {C6_W1_MAX} (need {C6_MIN_OK}); "
               f"max stat in [{maxes.min():.3f}, {maxes.max():.3f}] within {list(C6_BAND)}; {secs:.0f}s")
    assert n_ok >= C6_MIN_OK
    assert band_ok
    assert secs <= C6_SECONDS


def test_c7_induced_states(say):
    consts, zs, total = [], [], 0.0
    for seed in (0, 1, 2):
        rep, secs = run("induced", n=8, s=4096, seed=seed)
        consts.append(rep.measured["fitted_constant"])
        zs.append(rep.measured["mean_rho_max_abs_z"])
        total += secs
    consts = np.array(consts)
    mid = float(np.median(consts))
    spread = float(np.max(np.abs(consts - mid)) / mid)
    ok = spread <= C7_SPREAD and max(zs) <= C7_Z_MAX and total <= C7_SECONDS
    say(7, ok, f"fitted constants {np.round(consts, 3).tolist()} (max deviation from median "
               f"{spread:.1%} <= {C7_SPREAD:.0%}); E rho max|z|={max(zs):.2f} <= {C7_Z_MAX}; {total:.0f}s")
    assert spread <= C7_SPREAD
    assert max(zs) <= C7_Z_MAX
    assert total <= C7_SECONDS


def test_c8_metric_layer(say):
    t0 = time.perf_counter()
    g = RngStream(8).generator()
    gaps = []
    for _ in range(100):
        m = int(g.integers(1, 200))
        x, y = g.standard_normal(m), g.standard_normal(m) + g.uniform(-1, 1)
        gaps.append(abs(w1_multi(x[:, None], y[:, None]) - w1_1d(x, y)))
    u = (np.arange(1000) + 0.5) / 1000
    inv = float(np.max(np.abs(semicircle_cdf(semicircle_quantile(u)) - u)))
    atom = w1_spectral_semicircle([0.0])
    secs = time.perf_counter() - t0
    ok = max(gaps) <= C8_TOL and inv <= C8_TOL and abs(atom - C8_ATOM) <= C8_ATOM_TOL and secs <= C8_SECONDS
    say(8, ok, f"max |w1_multi - w1_1d|={max(gaps):.1e}; inverse error={inv:.1e} (<= {C8_TOL}); "
               f"single atom {atom:.5f} vs 8/(3pi)={C8_ATOM:.5f} (+-{C8_ATOM_TOL}); {secs:.1f}s")
    assert max(gaps) <= C8_TOL
    assert inv <= C8_TOL
    assert abs(atom - C8_ATOM) <= C8_ATOM_TOL
    assert secs <= C8_SECONDS


CONFIGS_C9 = [
    ("oracles", {"n": 3, "m": 200_000, "seed": 9}),
    ("marginals", {"n": 512, "m": 2000, "seed": 9}),
    ("submatrix", {"n": 2048, "k": 8, "replicas": 12, "seed": 9}),
    ("induced", {"n": 4, "s": 64, "m": 600, "seed": 9}),
]


def test_c9_determinism(say, tmp_path):
    same = []
    for scenario, kw in CONFIGS_C9:
        cfg = ExperimentConfig.from_dict(kw, scenario)
        blobs = []
        for w in C9_WORKERS:
            paths = write_outputs(run_scenario(cfg, w), tmp_path / f"{scenario}-{w}")
            blobs.append(paths["report"].read_bytes())
        same.append(all(b == blobs[0] for b in blobs))
    ok = all(same)
    say(9, ok, "report.json byte-identical under workers "
               f"{list(C9_WORKERS)} for {[s for s, _ in CONFIGS_C9]}: {same}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
