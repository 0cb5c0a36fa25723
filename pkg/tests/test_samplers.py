import numpy as np
import pytest

from isospec import CapExceededError, IsospecError, RngStream, Spectrum
from isospec.samplers import (InvariantEnsembleSpec, exchangeable_perturbation, gaussian_ensemble,
                              haar_matrix, haar_rows, induced_state, invariant_ensemble_eigs,
                              invariant_ensemble_sample, isospectral, isospectral_entry_marginal,
                              sphere_uniform)

from mc_util import mc_mean_se


def within(x, target, k=4.0):
    mean, se = mc_mean_se(x)
    assert np.all(np.abs(mean - target) <= k * se + 1e-15), (mean, se, target)


@pytest.mark.parametrize("field", ["complex", "real"])
def test_haar_unitary(field):
    u = haar_matrix(7, field, RngStream(1))
    assert np.linalg.norm(u @ u.conj().T - np.eye(7)) <= 1e-10
    with pytest.raises(IsospecError):
        haar_matrix(0, field, 1)


def test_haar_n1_phase_uniform():
    u = haar_matrix(1, "complex", RngStream(2), size=1_000_000)[:, 0, 0]
    assert np.allclose(np.abs(u), 1)
    arg = np.mod(np.angle(u), 2 * np.pi) / (2 * np.pi) - 0.5
    within(arg, 0.0)


def test_haar_column_moment():
    u = haar_matrix(5, "complex", RngStream(3), size=1_000_000)
    within(np.abs(u[:, 0, 0]) ** 2, 1 / 5)


def test_haar_left_invariance_degree4():
    # |(W U)_11|^4 has the same mean as |u_11|^4, namely 2/(n(n+1))
    n = 4
    w = haar_matrix(n, "complex", RngStream(99))
    u = haar_matrix(n, "complex", RngStream(4), size=200_000)
    within(np.abs((w @ u)[:, 0, 0]) ** 4, 2 / (n * (n + 1)))


def test_phase_fix_makes_triangular_factor_positive():
    # same Ginibre draw as the sampler; U* Z must be upper triangular with positive diagonal
    z = np.random.default_rng(0).standard_normal((5, 5, 2))
    z = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
    u = haar_matrix(5, "complex", np.random.default_rng(0))
    r = u.conj().T @ z
    assert np.allclose(np.tril(r, -1), 0, atol=1e-10)
    assert np.allclose(np.diag(r).imag, 0, atol=1e-10)
    assert np.all(np.diag(r).real > 0)


def test_haar_rows_properties():
    rows = haar_rows(50, 3, "complex", RngStream(5))
    assert np.linalg.norm(rows @ rows.conj().T - np.eye(3)) <= 1e-10
    z = haar_rows(6, 1, "complex", RngStream(6), size=400_000)[:, 0, 0]
    within(np.abs(z) ** 2, 1 / 6)
    with pytest.raises(IsospecError):
        haar_rows(3, 4, "complex", 0)


def test_haar_rows_match_full_matrix():
    m = 200_000
    rows = haar_rows(4, 2, "complex", RngStream(7), size=m)
    full = haar_matrix(4, "complex", RngStream(8), size=m)[:, :2, :]
    stat = lambda u: np.abs(u[:, 0, 0] * u[:, 1, 0]) ** 2
    a_mean, a_se = mc_mean_se(stat(rows))
    b_mean, b_se = mc_mean_se(stat(full))
    assert abs(a_mean - b_mean) <= 5 * np.hypot(a_se, b_se)
    # exact value 1/(n(n+1)) from the sphere moments
    assert abs(a_mean - 1 / 20) <= 5 * a_se


def test_full_haar_cap():
    with pytest.raises(CapExceededError):
        haar_matrix(20, "complex", 0, cap=10)


def test_sphere_moments():
    n = 5
    z = sphere_uniform(n, "complex", RngStream(9), size=1_000_000)
    assert np.allclose(np.linalg.norm(z, axis=1), 1, atol=1e-12)
    within(np.abs(z[:, 0]) ** 2, 1 / n)
    within(np.abs(z[:, 0]) ** 4, 2 / (n * (n + 1)))
    c = z[:, 0] * z[:, 1].conj()
    within(c.real, 0.0)
    within(c.imag, 0.0)


def test_gaussian_ensemble_variances():
    gue = gaussian_ensemble(3, "complex", RngStream(10), size=200_000)
    goe = gaussian_ensemble(3, "real", RngStream(11), size=200_000)
    m = 200_000

    def var_within(x, target):
        v = np.mean(x**2)
        se = np.std(x**2, ddof=1) / np.sqrt(m)
        assert abs(v - target) <= 4 * se

    var_within(gue[:, 0, 0].real, 1.0)
    var_within(gue[:, 0, 1].real, 0.5)
    var_within(goe[:, 0, 0], 2.0)
    var_within(goe[:, 0, 1], 1.0)


def test_isospectral_scalar_and_eigs():
    a = isospectral(Spectrum(np.full(5, 2.5)), "complex", RngStream(12))
    assert np.allclose(a.entries, 2.5 * np.eye(5))
    vals = np.random.default_rng(0).standard_normal(8)
    a = isospectral(Spectrum(vals), "real", RngStream(13))
    assert np.allclose(a.eigenvalues(), np.sort(vals), atol=1e-9 * np.abs(vals).max())


def test_isospectral_mean():
    spec = Spectrum(np.array([3.0, -1.0, 0.5, 2.0]))
    a = isospectral(spec, "complex", RngStream(14), size=100_000)
    target = spec.trace / 4 * np.eye(4)
    within(a.real.reshape(len(a), -1), target.ravel())
    within(a.imag.reshape(len(a), -1), 0.0)


def test_entry_marginal_a11_mean():
    spec = Spectrum(np.array([1.0, 2.0, -4.0, 7.0, 0.0]))
    a = isospectral_entry_marginal(spec, [1], "complex", RngStream(15), size=200_000)
    within(a[:, 0, 0].real, spec.trace / 5)


def test_entry_marginal_matches_full_degree4():
    spec = Spectrum(np.array([2.0, -1.0, 0.5, -1.5]))
    m = 200_000
    blk = isospectral_entry_marginal(spec, [1, 3], "complex", RngStream(16), size=m)
    full = isospectral(spec, "complex", RngStream(17), size=m)[:, :2, :2]
    for stat in (lambda a: np.abs(a[:, 0, 1]) ** 2, lambda a: a[:, 0, 0].real ** 2 * a[:, 1, 1].real,
                 lambda a: np.abs(a[:, 0, 1]) ** 4):
        x_mean, x_se = mc_mean_se(stat(blk))
        y_mean, y_se = mc_mean_se(stat(full))
        assert abs(x_mean - y_mean) <= 5 * np.hypot(x_se, y_se)


def test_entry_marginal_offdiag_variance():
    n = 1024
    spec = Spectrum.pm_split(n)
    a = isospectral_entry_marginal(spec, [1, 2], "complex", RngStream(18), size=20_000)
    y = np.sqrt(2) * a[:, 0, 1].real * np.sqrt(n * n - 1) / spec.hs_norm()
    sq = y**2
    assert abs(sq.mean() - 1) <= 5 * sq.std(ddof=1) / np.sqrt(sq.size)
    with pytest.raises(IsospecError):
        isospectral_entry_marginal(spec, [1, 1], "complex", 0)


def test_induced_state_properties():
    rho = induced_state(3, 5, RngStream(19))
    assert np.trace(rho.entries).real == pytest.approx(1, abs=1e-12)
    assert rho.eigenvalues().min() >= -1e-12
    pure = induced_state(4, 1, RngStream(20)).entries
    assert np.allclose(pure @ pure, pure, atol=1e-12)
    assert np.linalg.matrix_rank(pure, tol=1e-9) == 1


def test_induced_state_mean():
    rho = induced_state(2, 2, RngStream(21), size=200_000)
    within(rho.real.reshape(len(rho), -1), (np.eye(2) / 2).ravel())


def test_exchangeable_perturbation():
    eps = 1e-3
    u = haar_matrix(6, "complex", RngStream(22))
    v = exchangeable_perturbation(u, eps, RngStream(23))
    assert np.linalg.norm(v @ v.conj().T - np.eye(6)) <= 1e-10
    assert np.linalg.norm(v - u) <= 3 * eps
    ur = haar_matrix(6, "real", RngStream(24))
    vr = exchangeable_perturbation(ur, eps, RngStream(25))
    assert np.isrealobj(vr)
    with pytest.raises(IsospecError):
        exchangeable_perturbation(u, 1.5, 0)


def test_stein_drift_small():
    # E (A_eps - A) / eps^2 = -(2n/(n^2-1)) (A - tr A/n) + O(eps^2)
    n, eps, m = 6, 1e-2, 200_000
    lam = np.array([2.0, -1.0, 0.3, 0.0, 1.1, -2.4])
    u = haar_matrix(n, "complex", RngStream(26))
    a = (u * lam) @ u.conj().T
    v = exchangeable_perturbation(u, eps, RngStream(27), size=m)
    d = ((v * lam) @ np.swapaxes(v, -1, -2).conj() - a) / eps**2
    target = -(2 * n / (n * n - 1)) * (a - lam.mean() * np.eye(n))
    mean, se = mc_mean_se(d.real.reshape(m, -1))
    assert np.all(np.abs(mean - target.real.ravel()) <= 5 * se + 10 * eps**2 * np.abs(target).max())


def test_mcmc_n1_variance():
    spec = InvariantEnsembleSpec.named("quadratic", 1, burn_in=200, mcmc_steps=400, mcmc_step_size=1.0)
    x = invariant_ensemble_sample(spec, RngStream(28), 40_000)[:, 0]
    sq = x**2
    assert abs(sq.mean() - 0.5) <= 4 * sq.std(ddof=1) / np.sqrt(sq.size)


def test_mcmc_two_streams_agree():
    spec = InvariantEnsembleSpec.named("quartic", 4, burn_in=1000)
    a = invariant_ensemble_sample(spec, RngStream(29), 3000)
    b = invariant_ensemble_sample(spec, RngStream(30), 3000)
    for k in (1, 2):
        x, y = np.mean(a**k, axis=1), np.mean(b**k, axis=1)
        xm, xs = mc_mean_se(x)
        ym, ys = mc_mean_se(y)
        assert abs(xm - ym) <= 5 * np.hypot(xs, ys)


def test_mcmc_single_draw_and_errors():
    spec = InvariantEnsembleSpec.named("quadratic", 3, burn_in=100)
    s = invariant_ensemble_eigs(spec, RngStream(31))
    assert isinstance(s, Spectrum) and s.n == 3
    with pytest.raises(IsospecError):
        InvariantEnsembleSpec.named("cubic", 3)
    with pytest.raises(IsospecError):
        invariant_ensemble_sample(InvariantEnsembleSpec(2, potential=lambda x: x * np.inf, burn_in=5),
                                  RngStream(0), 3)
