"""Closed-form moments of Haar unitaries and of the uniform complex sphere.

These are the exact values the Monte Carlo layer is checked against.  All
formulas are for the unitary group / complex sphere; orthogonal-group
analogues are not provided.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import IsospecError
from .linalg import STRUCT_TOL, Spectrum, _arr


def _need_n2(n: int):
    if n < 2:
        raise IsospecError("formula needs n >= 2")


def _cubic(n: int) -> float:
    return (n - 1) * n * (n + 1)


def unitary_degree4_moment(i: int, j: int, k: int, l: int, n: int) -> float:
    """``E[u_ij u_kl conj(u_il) conj(u_kj)]`` for Haar ``U`` in U(n)."""
    _need_n2(n)
    dik = 1.0 if i == k else 0.0
    djl = 1.0 if j == l else 0.0
    return (n * dik + n * djl - dik * djl - 1.0) / _cubic(n)


def expected_A_squared(spectrum: Spectrum) -> np.ndarray:
    """``E A^2 = (||L||_HS^2 / n) I``."""
    n = spectrum.n
    return spectrum.hs_norm() ** 2 / n * np.eye(n)


def expected_tr_ABAC(spectrum: Spectrum, b, c) -> float:
    """``E tr(A B A C)`` for ``A = U L U*``.

    With ``p1 = (tr L)^2`` and ``p2 = tr L^2`` this is
    ``[(n p2 - p1) tr B tr C + (n p1 - p2) tr BC] / ((n-1) n (n+1))``, which
    for ``tr L = 0`` is ``||L||_HS^2 (n tr B tr C - tr BC) / ((n-1) n (n+1))``.
    """
    n = spectrum.n
    _need_n2(n)
    bb, cc = _arr(b), _arr(c)
    if bb.shape != (n, n) or cc.shape != (n, n):
        raise IsospecError("B and C must be n x n")
    p1, p2 = spectrum.trace**2, spectrum.hs_norm() ** 2
    val = (n * p2 - p1) * np.trace(bb) * np.trace(cc) + (n * p1 - p2) * np.trace(bb @ cc)
    return float(np.real(val / _cubic(n)))


def expected_trQF_trQG(f, g, n: int | None = None) -> complex:
    """``E[tr(QF) tr(QG)]`` with ``Q = v1 v2* - v2 v1*``, ``v`` columns of Haar ``V``."""
    ff, gg = np.asarray(_arr(f)), np.asarray(_arr(g))
    n = ff.shape[0] if n is None else n
    _need_n2(n)
    if ff.shape != (n, n) or gg.shape != (n, n):
        raise IsospecError("F and G must be n x n")
    val = 2.0 / _cubic(n) * (np.trace(ff) * np.trace(gg) - n * np.trace(ff @ gg))
    return complex(val)


def expected_QFQ(f) -> np.ndarray:
    """``E[Q F Q] = 2/((n-1)n(n+1)) (F - n (tr F) I)``.

    For traceless ``F`` this is ``2/((n-1)n(n+1)) F``; the trace term matters
    otherwise (``F = I`` gives ``E Q^2 = -(2/n) I``).
    """
    ff = np.asarray(_arr(f))
    n = ff.shape[0]
    _need_n2(n)
    return 2.0 / _cubic(n) * (ff - n * np.trace(ff) * np.eye(n))


def sphere_abs_moment(alphas: Sequence[int]) -> float:
    """``E prod |Z_j|^{alpha_j}`` for Z uniform on the complex unit sphere in C^n.

    Equals ``Gamma(b_1)...Gamma(b_n) Gamma(n) / Gamma(b)`` with
    ``b_j = alpha_j/2 + 1`` and ``b = sum b_j``; evaluated in log space.
    """
    a = np.asarray(alphas, dtype=np.int64)
    if a.ndim != 1 or a.size < 1:
        raise IsospecError("need a nonempty exponent vector")
    if np.any(a < 0) or np.any(a % 2):
        raise IsospecError("exponents must be even and nonnegative")
    n = a.size
    beta = a / 2.0 + 1.0
    logv = np.sum(gammaln(beta)) + gammaln(n) - gammaln(beta.sum())
    return float(np.exp(logv))


@dataclass(frozen=True)
class MomentQuery:
    """``E[Z_{i1}..Z_{ik} conj(Z_{j1})..conj(Z_{jk})]``; indices are 1-based."""

    top_indices: tuple
    bottom_indices: tuple
    n: int

    def __post_init__(self):
        top, bot = tuple(self.top_indices), tuple(self.bottom_indices)
        if len(top) != len(bot):
            raise IsospecError("top and bottom index lists must have equal length")
        if any(not 1 <= i <= self.n for i in top + bot):
            raise IsospecError("index out of range")
        object.__setattr__(self, "top_indices", top)
        object.__setattr__(self, "bottom_indices", bot)


def sphere_mixed_moment(q: MomentQuery) -> float:
    """Zero unless the multisets agree; otherwise
    ``(prod multiplicity!) / (n (n+1) ... (n+k-1))``."""
    top, bot = Counter(q.top_indices), Counter(q.bottom_indices)
    if top != bot:
        return 0.0
    k = len(q.top_indices)
    log_match = sum(math.lgamma(m + 1) for m in top.values())
    log_den = sum(math.log(q.n + t) for t in range(k))
    return math.exp(log_match - log_den)


def _check_traceless(*mats):
    for m in mats:
        a = _arr(m)
        if abs(np.trace(a)) > STRUCT_TOL * max(1.0, np.linalg.norm(a)):
            raise IsospecError("input must be traceless")


def quad_form_cov(b, c) -> float:
    """``E[<BZ,Z><CZ,Z>] = tr(BC) / (n(n+1))`` for traceless Hermitian B, C."""
    _check_traceless(b, c)
    bb, cc = _arr(b), _arr(c)
    n = bb.shape[0]
    return float(np.real(np.trace(bb @ cc))) / (n * (n + 1))


QUAD_FORM_VARIANTS = ("sq", "abs_sq", "cross", "full")


def quad_form_deg4(b, c, which: str) -> complex:
    """Degree-4/6/8 sphere moments of the quadratic forms ``<Bz,Cz>``, ``<Bz,z>``, ``<Cz,z>``.

    ``<x, y> = sum x_i conj(y_i)``.  Variants:

    ``sq``      E <Bz,Cz>^2
    ``abs_sq``  E |<Bz,Cz>|^2
    ``cross``   E <Bz,Cz> <Bz,z> <Cz,z>      (traceless B, C)
    ``full``    E <Bz,z>^2 <Cz,z>^2          (traceless B, C)

    ``sq`` can be complex for Hermitian inputs that do not commute; the value
    is returned as a complex number throughout.  ``cross`` is
    ``[tr(BC)^2 + tr(B^2 C^2) + tr((BC)^2)] / (n(n+1)(n+2))``; with transposes
    in place of the Hermitian structure that form is only right for real
    symmetric inputs.
    """
    bb, cc = np.asarray(_arr(b)), np.asarray(_arr(c))
    n = bb.shape[0]
    bc_star = bb @ cc.conj().T
    if which == "sq":
        val = (np.trace(bc_star) ** 2 + np.trace(bc_star @ bc_star)) / (n * (n + 1))
    elif which == "abs_sq":
        val = (np.trace(bb @ bb.conj().T @ cc @ cc.conj().T) + np.trace(bc_star) ** 2) / (n * (n + 1))
    elif which == "cross":
        _check_traceless(bb, cc)
        bc = bb @ cc
        val = (np.trace(bc_star) ** 2 + np.trace(bb @ bb @ cc @ cc)
               + np.trace(bc @ bc)) / (n * (n + 1) * (n + 2))
    elif which == "full":
        _check_traceless(bb, cc)
        b2, c2, bc = bb @ bb, cc @ cc, bb @ cc
        val = (np.trace(b2) * np.trace(c2) + 4 * np.trace(b2 @ c2) + 2 * np.trace(bc) ** 2
               + 2 * np.trace(bc @ bc)) / (n * (n + 1) * (n + 2) * (n + 3))
    else:
        raise IsospecError(f"unknown variant {which!r}; expected one of {QUAD_FORM_VARIANTS}")
    return complex(val)


def sphere_polynomial_expectation(coeffs: dict, n: int) -> complex:
    """Expectation of ``sum coeff * prod Z_top * prod conj(Z_bottom)`` by summing
    :func:`sphere_mixed_moment` term by term.  Keys are ``(top, bottom)`` tuples
    of 1-based indices.  Brute force; used to cross-check the closed forms."""
    total = 0j
    for (top, bot), w in coeffs.items():
        if w == 0:
            continue
        total += w * sphere_mixed_moment(MomentQuery(tuple(top), tuple(bot), n))
    return total
