"""Random matrices and vectors.

Every sampler takes an ``rng`` argument that may be an :class:`RngStream`
(fresh generator, so the call is a pure function of the stream) or a live
``numpy.random.Generator`` (for loops that keep drawing).  Most samplers take
an optional ``size`` for batched draws, returning arrays with a leading batch
axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapExceededError, IsospecError
from .linalg import FieldTag, HermitianMatrix, Spectrum
from .rng import RngStream, as_generator

FULL_HAAR_CAP = 16384


def _gaussian(g: np.random.Generator, shape, field: FieldTag) -> np.ndarray:
    """Standard Gaussian entries; complex entries have E|z|^2 = 1."""
    if field is FieldTag.REAL:
        return g.standard_normal(shape)
    z = g.standard_normal(shape + (2,) if isinstance(shape, tuple) else (shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def _phase_fix(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = np.diagonal(r, axis1=-2, axis2=-1)
    absd = np.abs(d)
    ph = np.where(absd > 0, d / np.where(absd > 0, absd, 1.0), 1.0)
    # Q diag(ph) makes the triangular factor's diagonal positive, which makes
    # the QR factorization unique and hence the Q factor Haar distributed.
    return q * ph[..., None, :]


def haar_matrix(n: int, field: FieldTag | str, rng, size: int | None = None,
                cap: int = FULL_HAAR_CAP) -> np.ndarray:
    """Haar-distributed orthogonal/unitary matrix (QR of a Ginibre matrix with phase fix)."""
    if n < 1:
        raise IsospecError("n must be >= 1")
    if n > cap:
        raise CapExceededError(f"full Haar matrix n={n} exceeds cap {cap}; use haar_rows")
    field = FieldTag.parse(field)
    g = as_generator(rng)
    shape = (n, n) if size is None else (size, n, n)
    z = _gaussian(g, shape, field)
    q, r = np.linalg.qr(z)
    return _phase_fix(q, r)


def haar_rows(n: int, r: int, field: FieldTag | str, rng, size: int | None = None) -> np.ndarray:
    """First ``r`` rows of a Haar matrix, at cost O(n r^2).

    The first ``r`` columns of a Haar matrix come from QR of the first ``r``
    Gaussian columns alone, and transposition preserves Haar measure, so the
    transposed thin-QR factor is an exact draw.
    """
    if not 1 <= r <= n:
        raise IsospecError(f"need 1 <= r <= n, got r={r}, n={n}")
    field = FieldTag.parse(field)
    g = as_generator(rng)
    shape = (n, r) if size is None else (size, n, r)
    z = _gaussian(g, shape, field)
    q, rr = np.linalg.qr(z, mode="reduced")
    return np.swapaxes(_phase_fix(q, rr), -1, -2)


def sphere_uniform(n: int, field: FieldTag | str, rng, size: int | None = None) -> np.ndarray:
    if n < 1:
        raise IsospecError("n must be >= 1")
    field = FieldTag.parse(field)
    g = as_generator(rng)
    shape = (n,) if size is None else (size, n)
    z = _gaussian(g, shape, field)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def gaussian_ensemble(n: int, field: FieldTag | str, rng, size: int | None = None):
    """GUE (diagonal N(0,1), off-diagonal real/imag parts N(0,1/2)) or GOE
    (diagonal N(0,2), off-diagonal N(0,1)).  Returns a HermitianMatrix for a
    single draw and a raw stacked array for batches."""
    field = FieldTag.parse(field)
    g = as_generator(rng)
    shape = (n, n) if size is None else (size, n, n)
    if field is FieldTag.COMPLEX:
        x = g.standard_normal(shape) + 1j * g.standard_normal(shape)
        h = (x + np.swapaxes(x, -1, -2).conj()) / 2
        idx = np.arange(n)
        h[..., idx, idx] = h[..., idx, idx].real
    else:
        x = g.standard_normal(shape)
        h = (x + np.swapaxes(x, -1, -2)) / np.sqrt(2.0)
    if size is None:
        return HermitianMatrix.from_array(h, field)
    return h


def _conjugate_diag(u: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """``U diag(lam) U*`` for stacked or single ``U``."""
    a = (u * lam) @ np.swapaxes(u, -1, -2).conj()
    return (a + np.swapaxes(a, -1, -2).conj()) / 2


def isospectral(spectrum: Spectrum, field: FieldTag | str, rng, size: int | None = None):
    """``U L U*`` with Haar ``U``.  HermitianMatrix for one draw, stacked array for batches."""
    field = FieldTag.parse(field)
    u = haar_matrix(spectrum.n, field, rng, size=size)
    a = _conjugate_diag(u, spectrum.values)
    if size is None:
        return HermitianMatrix.from_array(a, field)
    return a


def isospectral_entry_marginal(spectrum: Spectrum, rows: Sequence[int], field: FieldTag | str,
                               rng, size: int | None = None) -> np.ndarray:
    """The ``rows x rows`` block of ``U L U*`` without forming ``U``.

    Entry ``a_jk = sum_i u_ji l_i conj(u_ki)`` needs only rows j and k of U.
    The joint law of any r rows of a Haar matrix is that of the first r rows,
    so the block is returned in the order of ``rows`` (1-based labels).
    """
    rows = list(rows)
    if len(set(rows)) != len(rows):
        raise IsospecError("row indices must be distinct")
    r = len(rows)
    if r > spectrum.n or any(not 1 <= i <= spectrum.n for i in rows):
        raise IsospecError("row index out of range")
    u = haar_rows(spectrum.n, r, field, rng, size=size)
    return _conjugate_diag(u, spectrum.values)


def induced_state(n: int, s: int, rng, size: int | None = None):
    """Partial trace over ``C^s`` of a uniform pure state on ``C^n (x) C^s``.

    With row-major tensor indexing the state vector reshapes to an n x s
    matrix ``Psi`` and ``tr_2(Z Z*) = Psi Psi*``.
    """
    if n < 1 or s < 1:
        raise IsospecError("n and s must be >= 1")
    z = sphere_uniform(n * s, FieldTag.COMPLEX, rng, size=size)
    psi = z.reshape(z.shape[:-1] + (n, s))
    rho = psi @ np.swapaxes(psi, -1, -2).conj()
    rho = (rho + np.swapaxes(rho, -1, -2).conj()) / 2
    if size is None:
        return HermitianMatrix.from_array(rho, FieldTag.COMPLEX)
    return rho


def rotation_block(epsilon: float) -> np.ndarray:
    c = np.sqrt(1.0 - epsilon * epsilon)
    return np.array([[c, epsilon], [-epsilon, c]])


def perturbation_factor(k: np.ndarray, epsilon: float) -> np.ndarray:
    """``V R_eps V*`` given ``K`` = the first two columns of ``V`` (shape ``(..., n, 2)``).

    ``R_eps`` acts as the identity off the first two coordinates, so
    ``V R_eps V* = I + K (R2 - I2) K*``.
    """
    n = k.shape[-2]
    m = rotation_block(epsilon) - np.eye(2)
    return np.eye(n) + k @ m @ np.swapaxes(k, -1, -2).conj()


def exchangeable_perturbation(u: np.ndarray, epsilon: float, rng, size: int | None = None) -> np.ndarray:
    """Return ``U V R_eps V*`` for a fresh Haar ``V`` of the same field as ``U``."""
    if not 0.0 < epsilon < 1.0:
        raise IsospecError("epsilon must lie in (0, 1)")
    u = np.asarray(u)
    n = u.shape[-1]
    if n < 2:
        raise IsospecError("the exchangeable pair needs n >= 2")
    field = FieldTag.COMPLEX if np.iscomplexobj(u) else FieldTag.REAL
    k = np.swapaxes(haar_rows(n, 2, field, rng, size=size), -1, -2)
    return u @ perturbation_factor(k, epsilon)


# -- invariant ensembles ---------------------------------------------------

def _quadratic(x):
    return x * x


def _quadratic_d(x):
    return 2.0 * x


def _quartic(x):
    return 0.25 * x**4 + 0.5 * x * x


def _quartic_d(x):
    return x**3 + x


POTENTIALS: dict[str, tuple[Callable, Callable]] = {
    "quadratic": (_quadratic, _quadratic_d),
    "quartic": (_quartic, _quartic_d),
}


@dataclass(frozen=True)
class InvariantEnsembleSpec:
    """Eigenvalue law with density proportional to
    ``prod_{i<j} |l_i - l_j|^2 exp(-n sum V(l_i))`` (complex field).

    ``mcmc_steps`` and ``burn_in`` count single-coordinate Metropolis updates.
    """

    n: int
    potential: Callable = _quadratic
    dpotential: Callable | None = _quadratic_d
    name: str = "quadratic"
    mcmc_steps: int | None = None
    mcmc_step_size: float | None = None
    burn_in: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise IsospecError("n must be >= 1")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", 10_000 * self.n)
        if self.mcmc_steps is None:
            object.__setattr__(self, "mcmc_steps", self.burn_in + self.n)
        if self.mcmc_step_size is None:
            object.__setattr__(self, "mcmc_step_size", 1.0 / np.sqrt(self.n))
        if not self.mcmc_steps > self.burn_in >= 0:
            raise IsospecError("need mcmc_steps > burn_in >= 0")
        if not self.mcmc_step_size > 0:
            raise IsospecError("step size must be positive")

    @classmethod
    def named(cls, name: str, n: int, **kw) -> "InvariantEnsembleSpec":
        if name not in POTENTIALS:
            raise IsospecError(f"unknown potential {name!r}; known: {sorted(POTENTIALS)}")
        v, dv = POTENTIALS[name]
        return cls(n=n, potential=v, dpotential=dv, name=name, **kw)

    def to_dict(self) -> dict:
        return {"potential": self.name, "n": self.n, "mcmc_steps": self.mcmc_steps,
                "mcmc_step_size": self.mcmc_step_size, "burn_in": self.burn_in}


def invariant_ensemble_sample(spec: InvariantEnsembleSpec, rng, count: int) -> np.ndarray:
    """``count`` independent chains run side by side; returns shape (count, n).

    Componentwise random-walk Metropolis on the log joint eigenvalue density.
    Coordinates are visited cyclically; each chain's final state is one draw.
    """
    g = as_generator(rng)
    n = spec.n
    v = spec.potential
    x = np.sort(g.standard_normal((count, n)) * 0.5, axis=1)
    pot = n * v(x)
    if not np.all(np.isfinite(pot)):
        raise IsospecError("potential is not finite at the starting point")
    steps = int(spec.mcmc_steps)
    block = 4096
    done = 0
    while done < steps:
        todo = min(block, steps - done)
        props = g.standard_normal((todo, count)) * spec.mcmc_step_size
        logu = np.log(g.random((todo, count)))
        for t in range(todo):
            i = (done + t) % n
            xi = x[:, i]
            new = xi + props[t]
            new_pot = n * v(new)
            if not np.all(np.isfinite(new_pot)):
                raise IsospecError("potential evaluated to a non-finite value")
            if n > 1:
                others = np.delete(x, i, axis=1)
                with np.errstate(divide="ignore"):
                    dlog = 2.0 * np.sum(np.log(np.abs(new[:, None] - others))
                                        - np.log(np.abs(xi[:, None] - others)), axis=1)
            else:
                dlog = 0.0
            accept = logu[t] < dlog - (new_pot - pot[:, i])
            x[accept, i] = new[accept]
            pot[accept, i] = new_pot[accept]
        done += todo
    return np.sort(x, axis=1)


def invariant_ensemble_eigs(spec: InvariantEnsembleSpec, rng) -> Spectrum:
    """One MCMC draw of the eigenvalue vector (ascending)."""
    return Spectrum(invariant_ensemble_sample(spec, rng, 1)[0])
