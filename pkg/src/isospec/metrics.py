"""Wasserstein-1 and total-variation estimates against empirical and reference laws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import ndtr, ndtri

from .errors import CapExceededError, DimensionError, IsospecError
from .linalg import _arr
from .rng import RngStream

ASSIGNMENT_CAP = 4096


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure1D:
    atoms: np.ndarray

    def __post_init__(self):
        a = np.sort(np.asarray(self.atoms, dtype=np.float64).reshape(-1))
        if not np.all(np.isfinite(a)):
            raise IsospecError("atoms must be finite")
        object.__setattr__(self, "atoms", a)

    @property
    def m(self) -> int:
        return self.atoms.size


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    data: np.ndarray
    rng_provenance: RngStream | None = None

    def __post_init__(self):
        x = np.asarray(self.data, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1:
            raise IsospecError("sample must be an m x d array with m >= 1")
        if not np.all(np.isfinite(x)):
            raise IsospecError("sample entries must be finite")
        object.__setattr__(self, "data", x)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def _atoms(x) -> np.ndarray:
    if isinstance(x, EmpiricalMeasure1D):
        return x.atoms
    return np.sort(np.asarray(x, dtype=np.float64).reshape(-1))


def _points(x) -> np.ndarray:
    if isinstance(x, EmpiricalSample):
        return x.data
    return EmpiricalSample(x).data


def w1_1d(x, y) -> float:
    """Exact W1 between equal-size empirical measures (sorted matching)."""
    a, b = _atoms(x), _atoms(y)
    if a.size != b.size:
        raise DimensionError(f"unequal atom counts {a.size} and {b.size}")
    return float(np.mean(np.abs(a - b)))


def midpoint_normal_quantiles(m: int, mean: float = 0.0, sd: float = 1.0) -> np.ndarray:
    u = (np.arange(m) + 0.5) / m
    return mean + sd * ndtri(u)


def _partial_abs_moment(x, z1, z2):
    """``int_{z1}^{z2} (x - z) phi(z) dz`` elementwise."""
    phi = lambda z: np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    return x * (ndtr(z2) - ndtr(z1)) + phi(z2) - phi(z1)


def w1_1d_vs_gaussian(x, mean: float = 0.0, sd: float = 1.0, exact: bool = False) -> float:
    """Quantile-coupling W1 to N(mean, sd^2).

    Default: midpoint rule at ``(i - 1/2)/m``.  With ``exact=True`` the integral
    over each atom's quantile cell is done in closed form instead, which is the
    true W1 between the empirical law and the Gaussian.
    """
    if sd <= 0:
        raise IsospecError("sd must be positive")
    a = _atoms(x)
    if not exact:
        return float(np.mean(np.abs(a - midpoint_normal_quantiles(a.size, mean, sd))))
    m = a.size
    y = (a - mean) / sd
    edges = ndtri(np.arange(m + 1) / m)
    lo, hi = edges[:-1], edges[1:]
    mid = np.clip(y, lo, hi)
    # split each cell at the atom: positive part below it, negative part above
    total = _partial_abs_moment(y, lo, mid) - _partial_abs_moment(y, mid, hi)
    return float(sd * np.sum(total))


def w1_multi(x, y, cap: int = ASSIGNMENT_CAP) -> float:
    """Exact W1 between equal-size point clouds via optimal assignment on
    Euclidean costs."""
    p, q = _points(x), _points(y)
    if p.shape != q.shape:
        raise DimensionError(f"sample shapes differ: {p.shape} vs {q.shape}")
    if p.shape[0] > cap:
        raise CapExceededError(f"sample size {p.shape[0]} exceeds assignment cap {cap}")
    cost = cdist(p, q)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / p.shape[0])


def default_tv_bins(m: int) -> int:
    return max(2, math.ceil(m ** (1.0 / 3.0)))


def tv_1d(x, mean: float = 0.0, sd: float = 1.0, bins: int | None = None) -> float:
    """Histogram estimate of d_TV(x, N(mean, sd^2)).

    ``bins`` equal-width cells cover ``mean +/- 6 sd``; two extra cells hold the
    tails.  Default bin count is ``ceil(m^(1/3))``.
    """
    a = _atoms(x)
    if bins is None:
        bins = default_tv_bins(a.size)
    if bins < 2:
        raise IsospecError("need at least two bins")
    if sd <= 0:
        raise IsospecError("sd must be positive")
    inner = np.linspace(mean - 6 * sd, mean + 6 * sd, bins + 1)
    edges = np.concatenate([[-np.inf], inner, [np.inf]])
    counts = np.histogram(a, bins=edges)[0]
    p_hat = counts / a.size
    cdf = ndtr((edges - mean) / sd)
    p_ref = np.diff(cdf)
    return float(min(1.0, 0.5 * np.sum(np.abs(p_hat - p_ref))))


# -- semicircle --------------------------------------------------------------

def semicircle_density(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return np.where(np.abs(t) < 2, np.sqrt(np.clip(4 - t * t, 0, None)) / (2 * np.pi), 0.0)


def semicircle_cdf(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(np.abs(t) > 2):
        raise IsospecError("semicircle cdf argument must lie in [-2, 2]")
    val = 0.5 + t * np.sqrt(np.clip(4 - t * t, 0, None)) / (4 * np.pi) + np.arcsin(t / 2) / np.pi
    val = np.clip(val, 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def semicircle_quantile(u, tol: float = 1e-12):
    """Inverse of :func:`semicircle_cdf` by vectorized bisection on [-2, 2]."""
    u = np.asarray(u, dtype=np.float64)
    if np.any((u < 0) | (u > 1)):
        raise IsospecError("quantile level must lie in [0, 1]")
    lo = np.full(u.shape, -2.0)
    hi = np.full(u.shape, 2.0)
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        below = semicircle_cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    q = 0.5 * (lo + hi)
    return float(q) if q.ndim == 0 else q


def semicircle_cdf_quantile(value, direction: str):
    if direction == "cdf":
        return semicircle_cdf(value)
    if direction == "quantile":
        return semicircle_quantile(value)
    raise IsospecError("direction must be 'cdf' or 'quantile'")


def w1_spectral_semicircle(eigs, sub_nodes: int = 64) -> float:
    """W1 between an empirical spectral measure and the unit-variance semicircle.

    Integrates ``|F^-1(u) - Q_sc(u)|`` over [0, 1] with ``sub_nodes`` midpoints
    in each atom's quantile interval.
    """
    a = _atoms(eigs)
    if a.size == 0:
        raise IsospecError("need at least one eigenvalue")
    k = a.size
    u = (np.arange(k)[:, None] + (np.arange(sub_nodes)[None, :] + 0.5) / sub_nodes) / k
    q = semicircle_quantile(u)
    return float(np.mean(np.abs(a[:, None] - q)))


def spectral_measure(a, scale: float = 1.0) -> EmpiricalMeasure1D:
    return EmpiricalMeasure1D(scale * np.linalg.eigvalsh(_arr(a)))
