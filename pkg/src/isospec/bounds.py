"""Right-hand sides of the normal-approximation and semicircle estimates.

Unspecified universal constants are carried in :class:`ConstantsConfig`
(default 1) and every report names the constant its value is a multiple of,
so a printed value like ``C*0.112`` never pretends to be sharp.
Spectra are passed raw; recentring to trace zero happens here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import IsospecError
from .linalg import CoefficientFrame, FieldTag, Spectrum, _arr, gram_and_shift, schatten_norm, stable_rank

TRACE_TOL = 1e-10


class TheoremId(str, enum.Enum):
    T0_REAL = "t0_real"
    T0_COMPLEX = "t0_complex"
    T0_TV_REAL = "t0_tv_real"
    T0_TV_COMPLEX = "t0_tv_complex"
    AFFINE = "affine"
    QUARTIC = "quartic"
    INDUCED = "induced"
    ENTRIES = "entries"
    SUBMATRIX = "submatrix"
    INVARIANT = "invariant"


@dataclass(frozen=True)
class ConstantsConfig:
    c_r1: float = 1.0
    c_dallaporta: float = 1.0
    kappa_invariant: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise IsospecError(f"constant {k} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BoundReport:
    theorem_id: TheoremId
    value: float
    ingredients: dict = field(default_factory=dict)
    # Name of the unspecified constant ``value`` is proportional to, if any.
    constant: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise IsospecError(f"bound value must be finite and nonnegative, got {self.value}")
        for k, v in self.ingredients.items():
            if not math.isfinite(v):
                raise IsospecError(f"ingredient {k} is not finite")

    @property
    def symbolic(self) -> str:
        return f"{self.constant}*{self.value:.6g}" if self.constant else f"{self.value:.6g}"

    @property
    def vacuous(self) -> bool:
        """True when the bound exceeds 1 (uninformative at this scale)."""
        return self.value > 1.0

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id.value,
            "value": float(self.value),
            "symbolic": self.symbolic,
            "constant": self.constant,
            "ingredients": {k: float(v) for k, v in self.ingredients.items()},
            "extra": _jsonable(self.extra),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _spectral_ingredients(spectrum: Spectrum) -> dict:
    if spectrum.is_scalar():
        raise IsospecError("spectrum is scalar; the recentred matrix vanishes")
    hs = spectrum.hs_norm(recenter=True)
    op = spectrum.op_norm(recenter=True)
    return {"n": spectrum.n, "lambda_tilde_hs": hs, "lambda_tilde_op": op,
            "srank_lambda_tilde": hs * hs / (op * op)}


def _frame_op_sq(frame: CoefficientFrame) -> list[float]:
    return [schatten_norm(b, np.inf) ** 2 for b in frame.matrices]


def bound_t0(spectrum: Spectrum, frame: CoefficientFrame, field: FieldTag | str) -> BoundReport:
    """W1 bound for the scaled marginal vector of an isospectral matrix."""
    field = FieldTag.parse(field)
    if not (frame.orthonormal and frame.traceless):
        raise IsospecError("bound_t0 needs an orthonormal traceless frame")
    ing = _spectral_ingredients(spectrum)
    n = spectrum.n
    ratio = ing["lambda_tilde_op"] ** 2 / ing["lambda_tilde_hs"] ** 2
    op_sq = _frame_op_sq(frame)
    sum_op = float(sum(op_sq))
    if field is FieldTag.REAL:
        prefactor = 8 * math.sqrt(2) * math.sqrt(n - 1) * (n + 2) / n
        scaling = math.sqrt((n - 1) * (n + 2)) / (math.sqrt(2) * ing["lambda_tilde_hs"])
        tid = TheoremId.T0_REAL
    else:
        prefactor = 8 * math.sqrt(n)
        scaling = math.sqrt(n * n - 1) / ing["lambda_tilde_hs"]
        tid = TheoremId.T0_COMPLEX
    value = prefactor * ratio * sum_op
    # Stable-rank form: prefactor / srank(L~) * sum 1/srank(B_i); equal when ||B_i||_HS = 1.
    srank_form = prefactor / ing["srank_lambda_tilde"] * sum(1.0 / stable_rank(b) for b in frame.matrices)
    ing.update({"d": frame.d, "sum_op_sq": sum_op, "scaling": scaling})
    return BoundReport(tid, value, ing, extra={"srank_form": srank_form})


def bound_t0_tv(spectrum: Spectrum, b, field: FieldTag | str) -> BoundReport:
    """Total-variation bound for a single coefficient: twice the W1 bound."""
    frame = b if isinstance(b, CoefficientFrame) else CoefficientFrame.build([b])
    if frame.d != 1:
        raise IsospecError("the TV bound is for a single coefficient matrix")
    w = bound_t0(spectrum, frame, field)
    tid = TheoremId.T0_TV_REAL if w.theorem_id is TheoremId.T0_REAL else TheoremId.T0_TV_COMPLEX
    return BoundReport(tid, 2 * w.value, dict(w.ingredients), extra={"w1_bound": w.value})


def bound_affine(spectrum: Spectrum, raw: Sequence) -> BoundReport:
    """W1 between X and ``(||L~||_HS / sqrt(n^2-1)) Sigma^(1/2) g + v`` for arbitrary
    Hermitian coefficients (complex field)."""
    ing = _spectral_ingredients(spectrum)
    aff = gram_and_shift(raw, spectrum)
    n, d = spectrum.n, len(raw)
    sqrt_sigma = aff.sqrt_sigma()
    sqrt_op = float(np.linalg.norm(sqrt_sigma, 2)) if d else 0.0
    value = 8 * d / math.sqrt(n - 1) * sqrt_op * ing["lambda_tilde_op"] ** 2 / ing["lambda_tilde_hs"]
    target_scale = ing["lambda_tilde_hs"] / math.sqrt(n * n - 1)
    ing.update({"d": d, "sqrt_sigma_op": sqrt_op, "target_scale": target_scale})
    return BoundReport(TheoremId.AFFINE, value, ing, extra={
        "target_matrix": (target_scale * sqrt_sigma).tolist(),
        "shift": aff.shift.tolist(),
        "sigma": aff.sigma.tolist(),
    })


def statistic_quartic(frame: CoefficientFrame, n: int | None = None, s: int | None = None,
                      constants: ConstantsConfig = ConstantsConfig()) -> BoundReport:
    """``C sum ||B_j||_4^2`` (rank-one spectra), or ``(C / sqrt s) sum ||B_j||_4^2``
    for induced states on ``C^n (x) C^s``."""
    if not (frame.orthonormal and frame.traceless):
        raise IsospecError("statistic_quartic needs an orthonormal traceless frame")
    n = frame.n if n is None else n
    q4 = [schatten_norm(b, 4) ** 2 for b in frame.matrices]
    sranks = [1.0 / schatten_norm(b, np.inf) ** 2 for b in frame.matrices]
    total = float(sum(q4))
    weak = float(sum(1 / math.sqrt(r) for r in sranks))
    if s is None:
        value = constants.c_r1 * total
        weak_value = constants.c_r1 * weak
        scaling = math.sqrt(n * (n + 1))
        tid = TheoremId.QUARTIC
    else:
        if s < 1:
            raise IsospecError("s must be >= 1")
        value = constants.c_r1 * total / math.sqrt(s)
        weak_value = constants.c_r1 * weak / math.sqrt(s)
        scaling = math.sqrt(n * (n * s + 1))
        tid = TheoremId.INDUCED
    ing = {"n": n, "d": frame.d, "sum_schatten4_sq": total, "sum_inv_sqrt_srank": weak,
           "scaling": scaling, "c_r1": constants.c_r1}
    if s is not None:
        ing["s"] = s
    return BoundReport(tid, value, ing, constant="C_r1", extra={"weak_form": weak_value})


def _require_traceless(spectrum: Spectrum):
    if abs(spectrum.trace) > TRACE_TOL * max(1.0, spectrum.hs_norm()):
        raise IsospecError("this bound requires tr L = 0")
    if spectrum.op_norm() == 0:
        raise IsospecError("spectrum must be nonzero")


def bound_entries(spectrum: Spectrum, d: int) -> BoundReport:
    """``9 d sqrt(n) / srank(L)`` for d distinct (scaled) entries."""
    _require_traceless(spectrum)
    n = spectrum.n
    sr = spectrum.stable_rank()
    value = 9 * d * math.sqrt(n) / sr
    ing = {"n": n, "d": d, "srank_lambda": sr, "lambda_hs": spectrum.hs_norm(),
           "scaling": math.sqrt(n * n - 1) / spectrum.hs_norm()}
    return BoundReport(TheoremId.ENTRIES, value, ing)


def _turning_point(a: float, c: float, iters: int = 200) -> float:
    """Solve ``k^3 = c sqrt(log k) / (2a)`` by fixed-point iteration (k >= 1)."""
    k = max(1.0, (c / (2 * a)) ** (1 / 3))
    for _ in range(iters):
        nk = (c * math.sqrt(max(math.log(max(k, 1.0)), 0.0)) / (2 * a)) ** (1 / 3)
        nk = max(nk, 1.0)
        if abs(nk - k) < 1e-12 * k:
            break
        k = nk
    return k


def bound_submatrix_semicircle(spectrum: Spectrum, k: int, t: float = 0.0,
                               constants: ConstantsConfig = ConstantsConfig()) -> BoundReport:
    """Upper-left k x k truncation: GUE comparison term, semicircle expectation
    bound and concentration tail at level ``t``."""
    _require_traceless(spectrum)
    n = spectrum.n
    if not 1 <= k <= n:
        raise IsospecError("need 1 <= k <= n")
    if t < 0:
        raise IsospecError("t must be nonnegative")
    sr = spectrum.stable_rank()
    hs, op = spectrum.hs_norm(), spectrum.op_norm()
    sub = 18 * k * k * math.sqrt(n) / sr
    rate = math.sqrt(math.log(k)) / k
    expectation = sub + constants.c_dallaporta * rate
    lip = 2 * math.sqrt(n * n - 1) / k * op / hs
    tail_sharp = math.exp(-n * t * t / 12 / lip**2)
    tail = math.exp(-k * k * sr * t * t / (48 * n))
    a = 18 * math.sqrt(n) / sr
    ing = {"n": n, "k": k, "t": t, "srank_lambda": sr, "c_dallaporta": constants.c_dallaporta,
           "scaling": math.sqrt(n * n - 1) / hs}
    return BoundReport(TheoremId.SUBMATRIX, sub, ing, extra={
        "expectation_bound": expectation,
        "expectation_bound_symbolic": f"{sub:.6g} + C_dl*{rate:.6g}",
        "tail_probability": tail,
        "tail_probability_sharp": tail_sharp,
        "turning_point_k": _turning_point(a, constants.c_dallaporta * 1.0),
    })


def bound_invariant(lambda_samples: Sequence, frame: CoefficientFrame,
                    constants: ConstantsConfig = ConstantsConfig()) -> BoundReport:
    """Plug-in evaluation of the unitarily-invariant-ensemble bounds.

    The spectral expectations ``E||A~||_HS``, ``E(||A~||_op^2/||A~||_HS)`` and
    ``E| ||A~||_HS - E||A~||_HS |`` are replaced by sample means over
    ``lambda_samples``.  ``value`` is the bound for X scaled by
    ``sqrt(n^2-1)/E||A~||_HS``.
    """
    specs = [s if isinstance(s, Spectrum) else Spectrum(np.asarray(s)) for s in lambda_samples]
    if len(specs) < 2:
        raise IsospecError("need at least two spectrum samples")
    if not (frame.orthonormal and frame.traceless):
        raise IsospecError("bound_invariant needs an orthonormal traceless frame")
    vals = np.stack([s.values for s in specs])
    n = vals.shape[1]
    centred = vals - vals.mean(axis=1, keepdims=True)
    hs = np.sqrt(np.sum(centred**2, axis=1))
    op = np.max(np.abs(centred), axis=1)
    if np.any(hs == 0):
        raise IsospecError("a scalar spectrum sample has vanishing recentred norm")
    e_hs = float(hs.mean())
    e_ratio = float(np.mean(op**2 / hs))
    fluct = float(np.mean(np.abs(hs - e_hs)))
    inv_srank = float(sum(_frame_op_sq(frame)))
    d = frame.d
    first = 8 / math.sqrt(n) * e_ratio * inv_srank
    main = 8 * math.sqrt(n) / e_hs * e_ratio * inv_srank
    fluct_term = math.sqrt(d) * fluct / e_hs
    value = main + fluct_term
    cor = constants.kappa_invariant / math.sqrt(n) * inv_srank
    ing = {"n": n, "d": d, "samples": len(specs), "e_hs": e_hs, "e_op_sq_over_hs": e_ratio,
           "e_abs_dev_hs": fluct, "sum_inv_srank_b": inv_srank,
           "scaling": math.sqrt(n * n - 1) / e_hs}
    return BoundReport(TheoremId.INVARIANT, value, ing, extra={
        "conditional_bound": first,
        "main_term": main,
        "fluctuation_term": fluct_term,
        "corollary_bound": cor,
        "corollary_symbolic": f"kappa*{inv_srank / math.sqrt(n):.6g}",
    })
