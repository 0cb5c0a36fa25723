"""Monte Carlo checks of the exact moment identities and of the exchangeable-pair
drift/covariance conditions."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..linalg import FieldTag, Spectrum
from ..oracles import (expected_A_squared, expected_QFQ, expected_tr_ABAC, expected_trQF_trQG,
                       quad_form_cov, quad_form_deg4, sphere_abs_moment, unitary_degree4_moment)
from ..samplers import haar_matrix, haar_rows, perturbation_factor, sphere_uniform
from .config import ExperimentConfig
from .mc import MomentAccumulator, chunk_plan, parallel_map, z_scores
from .report import ExperimentReport

# (i, j, k, l) index patterns for E[u_ij u_kl conj(u_il) conj(u_kj)], 1-based
DEGREE4_PATTERNS = ((1, 1, 1, 1), (1, 1, 1, 2), (1, 1, 2, 1), (1, 1, 2, 2), (1, 2, 2, 1))
Z_LIMIT = 5.0


def _hermitian(g, n, traceless=False):
    x = g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))
    h = (x + x.conj().T) / 2
    if traceless:
        h = h - np.trace(h) / n * np.eye(n)
    return h / np.linalg.norm(h)


def _oracle_inputs(cfg: ExperimentConfig, n: int):
    g = cfg.rng().substream("oracle-inputs").generator()
    return {
        "B": _hermitian(g, n, traceless=True),
        "C": _hermitian(g, n, traceless=True),
        "F": g.standard_normal((n, n)) + 1j * g.standard_normal((n, n)),
        "G": g.standard_normal((n, n)) + 1j * g.standard_normal((n, n)),
        "H": _hermitian(g, n) + np.eye(n) / n,
    }


def _oracle_exact(spectrum: Spectrum, inp: dict) -> dict:
    n = spectrum.n
    b, c = inp["B"], inp["C"]
    lam_t = np.diag(spectrum.recentered())
    sphere = [sphere_abs_moment([2] + [0] * (n - 1)), sphere_abs_moment([4] + [0] * (n - 1)),
              sphere_abs_moment([2, 2] + [0] * (n - 2)), sphere_abs_moment([4, 2] + [0] * (n - 2))]
    out = {f"deg4_{''.join(map(str, p))}": np.array([unitary_degree4_moment(*p, n)], dtype=complex)
           for p in DEGREE4_PATTERNS}
    out.update({
        "A_squared": expected_A_squared(spectrum).reshape(-1).astype(complex),
        "tr_ABAC": np.array([expected_tr_ABAC(spectrum, b, c)]),
        "trQF_trQG": np.array([expected_trQF_trQG(inp["F"], inp["G"])]),
        "QFQ": expected_QFQ(inp["H"]).reshape(-1).astype(complex),
        "QLQ_traceless": expected_QFQ(lam_t).reshape(-1).astype(complex),
        "sphere_abs": np.array(sphere),
        "sphere_mixed": np.zeros(1, dtype=complex),
        "quad_cov": np.array([quad_form_cov(b, c)], dtype=complex),
    })
    for which in ("sq", "abs_sq", "cross", "full"):
        out[f"quad_{which}"] = np.array([quad_form_deg4(b, c, which)])
    return out


def _oracle_chunk(cfg, spectrum, inp, item):
    idx, c = item
    n = spectrum.n
    g = cfg.rng().substream("oracles", idx).generator()
    lam = spectrum.values
    b, cc, h = inp["B"], inp["C"], inp["H"]
    u = haar_matrix(n, FieldTag.COMPLEX, g, size=c)
    uh = np.conj(np.swapaxes(u, 1, 2))
    a = (u * lam) @ uh
    v1, v2 = u[:, :, 0], u[:, :, 1]
    q = v1[:, :, None] * v2.conj()[:, None, :] - v2[:, :, None] * v1.conj()[:, None, :]
    stats = {}
    for p in DEGREE4_PATTERNS:
        i, j, k, l = (x - 1 for x in p)
        stats[f"deg4_{''.join(map(str, p))}"] = (u[:, i, j] * u[:, k, l] * u[:, i, l].conj()
                                                 * u[:, k, j].conj())[:, None]
    stats["A_squared"] = (a @ a).reshape(c, -1)
    stats["tr_ABAC"] = np.real(np.einsum("xab,bc,xcd,da->x", a, b, a, cc))[:, None]
    stats["trQF_trQG"] = (np.einsum("xab,ba->x", q, inp["F"]) * np.einsum("xab,ba->x", q, inp["G"]))[:, None]
    stats["QFQ"] = (q @ h @ q).reshape(c, -1)
    stats["QLQ_traceless"] = ((q * spectrum.recentered()) @ q).reshape(c, -1)

    z = sphere_uniform(n, FieldTag.COMPLEX, g, size=c)
    a2 = np.abs(z) ** 2
    stats["sphere_abs"] = np.stack([a2[:, 0], a2[:, 0] ** 2, a2[:, 0] * a2[:, 1],
                                    a2[:, 0] ** 2 * a2[:, 1]], axis=1)
    stats["sphere_mixed"] = (z[:, 0] * z[:, 1].conj())[:, None]
    bz, cz = z @ b.T, z @ cc.T
    # <Bz,z> and <Cz,z> are real for Hermitian B, C
    bzz = np.sum(bz * z.conj(), axis=1).real
    czz = np.sum(cz * z.conj(), axis=1).real
    bzcz = np.sum(bz * cz.conj(), axis=1)
    stats["quad_cov"] = (bzz * czz)[:, None]
    stats["quad_sq"] = (bzcz**2)[:, None]
    stats["quad_abs_sq"] = (np.abs(bzcz) ** 2)[:, None]
    stats["quad_cross"] = (bzcz * bzz * czz)[:, None]
    stats["quad_full"] = (bzz**2 * czz**2)[:, None]
    return MomentAccumulator.chunk_sums(stats)


def verify_moment_oracles(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    n = cfg.n
    if n < 2:
        raise ConfigError("oracle checks need n >= 2")
    if cfg.field_tag is not FieldTag.COMPLEX:
        raise ConfigError("moment oracles exist for the complex field only")
    spectrum = cfg.resolve_spectrum()
    if spectrum.n != n:
        raise ConfigError("spectrum size does not match n")
    inp = _oracle_inputs(cfg, n)
    exact = _oracle_exact(spectrum, inp)
    size = int(min(100_000, max(1000, 2_000_000 // (n * n))))
    plan = chunk_plan(cfg.m, size)
    acc = MomentAccumulator()
    for part in parallel_map(lambda it: _oracle_chunk(cfg, spectrum, inp, it), plan, workers):
        acc.merge(part)

    report = ExperimentReport(cfg.scenario, cfg.to_dict(), headline="max_abs_z")
    rows, worst = [], {}
    for name, ex in exact.items():
        parts = [("re", ex.real), ("im", ex.imag)] if name + ".re" in acc.sums else [("", ex.real)]
        zmax = 0.0
        for part, target in parts:
            key = f"{name}.{part}" if part else name
            mean, se = acc.mean(key), acc.se(key)
            z = z_scores(mean, se, target)
            zmax = max(zmax, float(np.max(np.abs(z))))
            for comp in range(mean.size):
                rows.append({"check": name, "part": part or "re", "component": comp,
                             "mc": float(mean[comp]), "se": float(se[comp]),
                             "exact": float(target[comp]), "z": float(z[comp])})
        worst[name] = zmax
    report.replicas = rows
    report.details["max_abs_z_by_check"] = worst
    report.details["samples_per_check"] = acc.count
    report.measured["max_abs_z"] = max(worst.values())
    report.measured["n_tests"] = len(rows)
    report.check("all_within_5se", "max_abs_z", Z_LIMIT, "paper bound")
    if spectrum.is_scalar():
        c0 = spectrum.values[0]
        direct = c0 * c0 * float(np.real(np.trace(inp["B"] @ inp["C"])))
        report.measured["scalar_tr_ABAC_gap"] = abs(direct - exact["tr_ABAC"][0].real)
        report.check("scalar_tr_ABAC_consistent", "scalar_tr_ABAC_gap", 1e-10 * max(1.0, abs(direct)),
                     "paper bound")
    return report


# -- exchangeable pair ------------------------------------------------------

def stein_targets(spectrum: Spectrum, u: np.ndarray, frame_mats: np.ndarray):
    """Drift and conditional-covariance limits at fixed ``U``.

    drift = -(2n/(n^2-1)) U L~ U*; covariance_ij = 2/(n^2-1) tr[A^2 B_i B_j +
    A^2 B_j B_i - 2 A B_i A B_j].
    """
    n = spectrum.n
    alpha = 2.0 * n / (n * n - 1)
    a = (u * spectrum.values) @ u.conj().T
    a_t = (u * spectrum.recentered()) @ u.conj().T
    drift = -alpha * a_t
    a2 = a @ a
    d = frame_mats.shape[0]
    cov = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            bi, bj = frame_mats[i], frame_mats[j]
            val = np.trace(a2 @ bi @ bj + a2 @ bj @ bi - 2 * a @ bi @ a @ bj)
            cov[i, j] = 2.0 / (n * n - 1) * float(np.real(val))
    return drift, cov


def haar_mean_covariance(spectrum: Spectrum, frame_mats: np.ndarray) -> np.ndarray:
    """Average of the covariance target over Haar ``U``, from the exact moments."""
    n = spectrum.n
    hs2 = spectrum.hs_norm() ** 2
    d = frame_mats.shape[0]
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            bi, bj = frame_mats[i], frame_mats[j]
            t = hs2 / n * 2 * np.real(np.trace(bi @ bj)) - 2 * expected_tr_ABAC(spectrum, bi, bj)
            out[i, j] = 2.0 / (n * n - 1) * t
    return out


def _stein_chunk(cfg, spectrum, u, cmats, item):
    idx, c = item
    n, eps = spectrum.n, cfg.epsilon
    g = cfg.rng().substream("stein", idx).generator()
    k = np.swapaxes(haar_rows(n, 2, cfg.field_tag, g, size=c), 1, 2)
    lam = spectrum.values
    diffs = []
    for sign in (1.0, -1.0):
        p = perturbation_factor(k, sign * eps)
        diffs.append((p * lam) @ np.conj(np.swapaxes(p, 1, 2)) - np.diag(lam))
    mid = (diffs[0] + diffs[1]) / (2 * eps * eps)
    drift = u @ mid @ u.conj().T
    dl = [np.real(np.einsum("xab,iba->xi", dd, cmats)) for dd in diffs]
    cov = (dl[0][:, :, None] * dl[0][:, None, :] + dl[1][:, :, None] * dl[1][:, None, :]) / (2 * eps * eps)
    return MomentAccumulator.chunk_sums({"drift": drift.reshape(c, -1), "cov": cov.reshape(c, -1)})


def verify_stein_conditions(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Antithetic (+eps, -eps) estimate of the exchangeable-pair conditions at a fixed U.

    ``R_{-eps}`` is ``R_eps`` conjugated by a coordinate reflection, so pairing
    the two signs with the same ``V`` keeps the law of each term while the
    first-order noise in the drift cancels exactly.
    """
    n, eps = cfg.n, cfg.epsilon
    spectrum = cfg.resolve_spectrum()
    frame = cfg.resolve_frame()
    if frame.n != n:
        raise ConfigError("frame dimension does not match n")
    field = cfg.field_tag
    if field is not FieldTag.COMPLEX:
        raise ConfigError("the drift and covariance limits are for the complex field")
    report = ExperimentReport(cfg.scenario, cfg.to_dict(), headline="drift_rel_err")
    report.measured["alpha"] = 2.0 * n / (n * n - 1)
    report.measured["sigma_sq"] = spectrum.hs_norm(recenter=True) ** 2 / (n * n - 1)
    if spectrum.is_scalar():
        # A = cI commutes with every perturbation, so A_eps = A exactly.
        report.notes.append("scalar spectrum: the pair is constant, drift and covariance are exactly 0")
        report.measured["drift_abs_max"] = 0.0
        report.measured["cov_abs_max"] = 0.0
        report.check("drift_zero", "drift_abs_max", 0.0, "paper bound")
        report.check("cov_zero", "cov_abs_max", 0.0, "paper bound")
        return report

    u = haar_matrix(n, field, cfg.rng().substream("fixed-U"))
    mats = frame.stack()
    cmats = np.conj(np.swapaxes(u, 0, 1))[None] @ mats @ u[None]
    drift_t, cov_t = stein_targets(spectrum, u, mats)

    plan = chunk_plan(cfg.m, 10_000)
    acc = MomentAccumulator()
    for part in parallel_map(lambda it: _stein_chunk(cfg, spectrum, u, cmats, it), plan, workers):
        acc.merge(part)

    drift_mc = acc.mean_complex("drift").reshape(n, n)
    if field is FieldTag.COMPLEX:
        se_d = np.sqrt(acc.se("drift.re") ** 2 + acc.se("drift.im") ** 2).reshape(n, n)
    else:
        se_d = acc.se("drift").reshape(n, n)
    top = float(np.linalg.norm(drift_t, 2))
    rel = float(np.linalg.norm(drift_mc - drift_t, 2)) / top
    rel_se = float(np.linalg.norm(se_d)) / top
    report.measured["drift_rel_err"] = rel
    report.measured["drift_rel_se"] = rel_se
    report.measured["drift_excess"] = rel - 5 * rel_se
    report.check("drift_matches", "drift_excess", 5 * eps, "paper bound")

    d = frame.d
    cov_mc = acc.mean("cov").reshape(d, d)
    cov_se = acc.se("cov").reshape(d, d)
    scale = float(np.max(np.abs(cov_t)))
    report.measured["cov_rel_err"] = float(np.max(np.abs(cov_mc - cov_t))) / scale
    report.measured["cov_rel_se"] = float(np.max(cov_se)) / scale
    report.measured["cov_excess"] = float(np.max(np.abs(cov_mc - cov_t) - 5 * cov_se)) / scale
    report.check("cov_matches", "cov_excess", 5 * eps, "paper bound")

    report.details.update({
        "drift_target": {"re": drift_t.real, "im": drift_t.imag},
        "drift_mc": {"re": drift_mc.real, "im": drift_mc.imag},
        "cov_target": cov_t, "cov_mc": cov_mc, "cov_se": cov_se,
        "cov_haar_mean": haar_mean_covariance(spectrum, mats),
    })
    report.replicas = [{"i": i, "j": j, "cov_mc": float(cov_mc[i, j]), "cov_se": float(cov_se[i, j]),
                        "cov_target": float(cov_t[i, j])} for i in range(d) for j in range(d)]
    return report
