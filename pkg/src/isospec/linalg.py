"""Self-adjoint matrices, norms, coefficient frames and partial traces.

Everything here is a pure function of its inputs.  Functions taking a
``HermitianMatrix`` also accept a plain square ndarray, which is treated as
already self-adjoint; hot loops elsewhere in the package work on raw arrays.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, IsospecError, RankDeficiencyError

STRUCT_TOL = 1e-10
SYMMETRIZE_TOL = 1e-8


class FieldTag(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @classmethod
    def parse(cls, value: "FieldTag | str") -> "FieldTag":
        if isinstance(value, cls):
            return value
        v = str(value).lower()
        if v in ("r", "real", "orthogonal", "goe"):
            return cls.REAL
        if v in ("c", "complex", "unitary", "gue"):
            return cls.COMPLEX
        raise IsospecError(f"unknown field {value!r}")

    @property
    def dtype(self):
        return np.float64 if self is FieldTag.REAL else np.complex128


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size < 1:
            raise IsospecError("spectrum must have at least one value")
        if not np.all(np.isfinite(v)):
            raise IsospecError("spectrum values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def trace(self) -> float:
        return float(self.values.sum())

    def is_scalar(self) -> bool:
        v = self.values
        return bool(np.all(v == v[0]))

    def recentered(self) -> np.ndarray:
        return self.values - self.values.mean()

    def hs_norm(self, recenter: bool = False) -> float:
        v = self.recentered() if recenter else self.values
        return float(np.sqrt(np.sum(v * v)))

    def op_norm(self, recenter: bool = False) -> float:
        v = self.recentered() if recenter else self.values
        return float(np.max(np.abs(v)))

    def stable_rank(self, recenter: bool = False) -> float:
        op = self.op_norm(recenter)
        if op == 0.0:
            raise IsospecError("stable rank of the zero matrix is undefined")
        return self.hs_norm(recenter) ** 2 / op**2

    def as_matrix(self) -> "HermitianMatrix":
        return HermitianMatrix.from_array(np.diag(self.values), FieldTag.REAL)

    def to_json(self) -> list:
        return [float(x) for x in self.values]

    @classmethod
    def from_json(cls, data: Sequence[float]) -> "Spectrum":
        return cls(np.asarray(data, dtype=np.float64))

    @classmethod
    def pm_split(cls, n: int, magnitude: float | None = None) -> "Spectrum":
        """Half the eigenvalues at +magnitude, half at -magnitude (default sqrt(n))."""
        if n < 2 or n % 2:
            raise IsospecError("a +/- split needs an even n >= 2")
        c = np.sqrt(n) if magnitude is None else float(magnitude)
        return cls(np.concatenate([np.full(n // 2, c), np.full(n // 2, -c)]))


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    entries: np.ndarray
    field: FieldTag = FieldTag.COMPLEX
    # False when construction had to remove more than SYMMETRIZE_TOL of asymmetry.
    valid: bool = True

    @classmethod
    def from_array(cls, a, field: FieldTag | str | None = None) -> "HermitianMatrix":
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        if field is None:
            field = FieldTag.COMPLEX if np.iscomplexobj(a) and np.any(a.imag) else FieldTag.REAL
        field = FieldTag.parse(field)
        if field is FieldTag.REAL:
            if np.iscomplexobj(a) and np.any(np.abs(a.imag) > 0):
                raise IsospecError("real field requested for a matrix with imaginary entries")
            a = np.real(a).astype(np.float64)
        else:
            a = a.astype(np.complex128)
        sym = (a + a.conj().T) / 2
        scale = np.linalg.norm(a)
        drift = np.linalg.norm(a - sym)
        valid = bool(drift <= SYMMETRIZE_TOL * max(scale, 1.0))
        if field is FieldTag.COMPLEX:
            sym[np.diag_indices_from(sym)] = sym.diagonal().real
        sym.setflags(write=False)
        return cls(sym, field, valid)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def to_json(self) -> dict:
        out = {"n": self.dim, "field": self.field.value,
               "re": np.real(self.entries).tolist()}
        if self.field is FieldTag.COMPLEX:
            out["im"] = np.imag(self.entries).tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "HermitianMatrix":
        n = int(data["n"])
        re_part = np.asarray(data["re"], dtype=np.float64).reshape(n, n)
        field = FieldTag.parse(data.get("field", "complex"))
        if "im" in data and field is FieldTag.COMPLEX:
            a = re_part + 1j * np.asarray(data["im"], dtype=np.float64).reshape(n, n)
        else:
            a = re_part
        return cls.from_array(a, field)


def _arr(a) -> np.ndarray:
    return a.entries if isinstance(a, HermitianMatrix) else np.asarray(a)


def _field_of(a) -> FieldTag:
    if isinstance(a, HermitianMatrix):
        return a.field
    return FieldTag.COMPLEX if np.iscomplexobj(a) else FieldTag.REAL


def _wrap(a: np.ndarray, like) -> HermitianMatrix:
    field = _field_of(like)
    return HermitianMatrix.from_array(a, field)


def traceless(b) -> HermitianMatrix:
    """Return ``B - (tr B / n) I``."""
    a = _arr(b)
    n = a.shape[0]
    return _wrap(a - (np.trace(a) / n) * np.eye(n), b)


def hs_inner(a, b) -> float:
    x, y = _arr(a), _arr(b)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    # tr(A B*) = sum_ij A_ij conj(B_ij)
    return float(np.real(np.vdot(y, x)))


def schatten_norm(a, p: float = 2.0) -> float:
    if p < 1:
        raise IsospecError("Schatten norms need p >= 1")
    ev = np.abs(np.linalg.eigvalsh(_arr(a)))
    if np.isinf(p):
        return float(ev.max())
    if p == 2:
        return float(np.linalg.norm(_arr(a)))
    return float(np.sum(ev**p) ** (1.0 / p))


def stable_rank(a) -> float:
    ev = np.linalg.eigvalsh(_arr(a))
    op = np.max(np.abs(ev))
    if op == 0.0:
        raise IsospecError("stable rank of the zero matrix is undefined")
    return float(np.sum(ev * ev) / op**2)


@dataclass(frozen=True, eq=False)
class CoefficientFrame:
    matrices: tuple
    orthonormal: bool = False
    traceless: bool = False

    def __post_init__(self):
        mats = tuple(m if isinstance(m, HermitianMatrix) else HermitianMatrix.from_array(m)
                     for m in self.matrices)
        dims = {m.dim for m in mats}
        if len(dims) > 1:
            raise DimensionError(f"frame matrices have differing dimensions {sorted(dims)}")
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def build(cls, matrices: Iterable) -> "CoefficientFrame":
        """Wrap matrices, computing the orthonormal/traceless flags."""
        mats = tuple(m if isinstance(m, HermitianMatrix) else HermitianMatrix.from_array(m)
                     for m in matrices)
        frame = cls(mats)
        return cls(mats, orthonormal=frame.check_orthonormal(), traceless=frame.check_traceless())

    @property
    def d(self) -> int:
        return len(self.matrices)

    @property
    def n(self) -> int:
        if not self.matrices:
            raise IsospecError("empty frame has no dimension")
        return self.matrices[0].dim

    @property
    def field(self) -> FieldTag:
        if any(m.field is FieldTag.COMPLEX for m in self.matrices):
            return FieldTag.COMPLEX
        return FieldTag.REAL

    def stack(self) -> np.ndarray:
        if not self.matrices:
            return np.zeros((0, 0, 0))
        dtype = np.result_type(*(m.entries.dtype for m in self.matrices))
        return np.stack([m.entries for m in self.matrices]).astype(dtype)

    def gram(self) -> np.ndarray:
        s = self.stack()
        return np.real(np.einsum("iab,jba->ij", s, s))

    def check_orthonormal(self, tol: float = STRUCT_TOL) -> bool:
        if not self.matrices:
            return True
        return bool(np.max(np.abs(self.gram() - np.eye(self.d))) <= tol)

    def check_traceless(self, tol: float = STRUCT_TOL) -> bool:
        if not self.matrices:
            return True
        tr = np.abs(np.trace(self.stack(), axis1=1, axis2=2))
        return bool(np.max(tr) <= tol * self.n)

    def to_json(self) -> list:
        return [m.to_json() for m in self.matrices]


@dataclass(frozen=True, eq=False)
class AffineData:
    sigma: np.ndarray
    shift: np.ndarray = field(default=None)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.sigma, dtype=np.float64))
        if s.shape[0] != s.shape[1]:
            raise DimensionError("sigma must be square")
        if np.max(np.abs(s - s.T), initial=0.0) > 1e-12 * max(1.0, np.abs(s).max(initial=0.0)):
            raise IsospecError("sigma must be symmetric")
        s = (s + s.T) / 2
        if s.size and np.linalg.eigvalsh(s).min() < -STRUCT_TOL:
            raise IsospecError("sigma must be nonnegative definite")
        shift = np.zeros(s.shape[0]) if self.shift is None else np.asarray(self.shift, dtype=np.float64)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "shift", shift)

    def sqrt_sigma(self) -> np.ndarray:
        w, v = np.linalg.eigh(self.sigma)
        return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def marginal_vector(a, frame: CoefficientFrame) -> np.ndarray:
    """``X_i = tr(A B_i)`` for every frame element."""
    x = _arr(a)
    if frame.d == 0:
        return np.zeros(0)
    if frame.n != x.shape[0]:
        raise DimensionError(f"matrix dim {x.shape[0]} vs frame dim {frame.n}")
    return np.real(np.einsum("ab,iba->i", x, frame.stack()))


@dataclass(frozen=True)
class EntrySelector:
    """Pick one real coordinate of a matrix: a diagonal entry (``D``), or the
    real (``R``) or imaginary (``I``) part of an above-diagonal entry.
    Indices are 1-based."""

    kind: str
    j: int
    k: int | None = None

    _PATTERN = re.compile(r"^\s*([DRI])\s*[:(\[]?\s*(\d+)\s*(?:[,:\s]\s*(\d+))?\s*[)\]]?\s*$", re.I)

    @classmethod
    def parse(cls, text: "str | EntrySelector") -> "EntrySelector":
        if isinstance(text, EntrySelector):
            return text
        m = cls._PATTERN.match(str(text))
        if not m:
            raise IsospecError(f"cannot parse entry selector {text!r}")
        kind, j, k = m.group(1).upper(), int(m.group(2)), m.group(3)
        return cls(kind, j, None if k is None else int(k))

    def __str__(self) -> str:
        return f"{self.kind}{self.j}" if self.kind == "D" else f"{self.kind}{self.j},{self.k}"

    def rows(self) -> tuple:
        return (self.j,) if self.kind == "D" else (self.j, self.k)


def entry_frame(n: int, picks: Sequence, field: FieldTag | str = FieldTag.COMPLEX,
                spectrum: Spectrum | None = None) -> tuple[CoefficientFrame, AffineData]:
    """Coefficient matrices reading off the selected entries of a matrix.

    ``D j`` gives ``E_jj``; ``R j k`` gives ``(E_jk + E_kj)/sqrt 2`` and ``I j k``
    gives ``i (E_jk - E_kj)/sqrt 2`` (so ``tr(A B) = sqrt 2 Im a_jk``).  The
    returned covariance is ``I - J_r / n`` where ``J_r`` is the all-ones block
    on the diagonal picks.  The shift is ``(tr L / n) tr B_i`` when a spectrum
    is given and zero otherwise.
    """
    field = FieldTag.parse(field)
    sels = [EntrySelector.parse(p) for p in picks]
    if len(set(sels)) != len(sels):
        raise IsospecError("duplicate entry selector")
    mats = []
    diag_idx = []
    r2 = 1.0 / np.sqrt(2.0)
    for idx, s in enumerate(sels):
        m = np.zeros((n, n), dtype=field.dtype)
        if s.kind == "D":
            if s.k is not None:
                raise IsospecError(f"diagonal selector takes one index: {s}")
            if not 1 <= s.j <= n:
                raise IsospecError(f"index out of range in {s}")
            m[s.j - 1, s.j - 1] = 1.0
            diag_idx.append(idx)
        else:
            if s.k is None:
                raise IsospecError(f"off-diagonal selector needs two indices: {s}")
            if not s.j < s.k:
                raise IsospecError(f"off-diagonal selector needs j < k: {s}")
            if not (1 <= s.j <= n and 1 <= s.k <= n):
                raise IsospecError(f"index out of range in {s}")
            a, b = s.j - 1, s.k - 1
            if s.kind == "R":
                m[a, b] = m[b, a] = r2
            else:
                if field is FieldTag.REAL:
                    raise IsospecError("imaginary-part selectors need the complex field")
                # tr(A B) = A_ab B_ba + A_ba B_ab = sqrt2 * Im A_ab with these entries
                m[a, b] = 1j * r2
                m[b, a] = -1j * r2
        mats.append(HermitianMatrix.from_array(m, field))
    d = len(sels)
    sigma = np.eye(d)
    for i in diag_idx:
        for j in diag_idx:
            sigma[i, j] -= 1.0 / n
    traces = np.array([1.0 if s.kind == "D" else 0.0 for s in sels])
    shift = np.zeros(d) if spectrum is None else spectrum.trace / n * traces
    frame = CoefficientFrame(tuple(mats), orthonormal=True, traceless=not diag_idx)
    return frame, AffineData(sigma, shift)


def compact_entry_frame(n: int, picks: Sequence, field: FieldTag | str = FieldTag.COMPLEX,
                        spectrum: Spectrum | None = None) -> tuple[CoefficientFrame, list, AffineData]:
    """:func:`entry_frame` restricted to the rows it touches.

    Returns the frame on those ``r`` coordinates, the 1-based row labels, and
    the affine data of the full ``n``-dimensional problem.  Avoids building
    ``n x n`` matrices when only a handful of entries are read.
    """
    sels = [EntrySelector.parse(p) for p in picks]
    for s in sels:
        if any(not 1 <= i <= n for i in s.rows() if i is not None):
            raise IsospecError(f"index out of range in {s}")
    rows = sorted({i for s in sels for i in s.rows() if i is not None})
    pos = {r: i + 1 for i, r in enumerate(rows)}
    local = [EntrySelector(s.kind, pos[s.j], None if s.k is None else pos[s.k]) for s in sels]
    frame, _ = entry_frame(len(rows), local, field)
    d = len(sels)
    diag = [i for i, s in enumerate(sels) if s.kind == "D"]
    sigma = np.eye(d)
    for i in diag:
        for j in diag:
            sigma[i, j] -= 1.0 / n
    traces = np.array([1.0 if s.kind == "D" else 0.0 for s in sels])
    shift = np.zeros(d) if spectrum is None else spectrum.trace / n * traces
    return frame, rows, AffineData(sigma, shift)


def gram_and_shift(raw: Sequence, spectrum: Spectrum) -> AffineData:
    """Covariance ``tr(B~_i B~_j)`` of recentred inputs and shift ``(tr L/n) tr B_i``."""
    mats = [_arr(b) for b in raw]
    if not mats:
        return AffineData(np.zeros((0, 0)), np.zeros(0))
    n = mats[0].shape[0]
    if any(m.shape != (n, n) for m in mats) or n != spectrum.n:
        raise DimensionError("raw matrices and spectrum must share one dimension")
    centred = np.stack([m - np.trace(m) / n * np.eye(n) for m in mats])
    sigma = np.real(np.einsum("iab,jba->ij", centred, centred))
    shift = spectrum.trace / n * np.real(np.array([np.trace(m) for m in mats]))
    return AffineData((sigma + sigma.T) / 2, shift)


def orthonormalize_traceless(raw: Sequence, pivot_tol: float = STRUCT_TOL) -> CoefficientFrame:
    """Recentre to trace zero, then modified Gram-Schmidt in the HS inner product."""
    out = []
    for idx, b in enumerate(raw):
        v = _arr(traceless(b)).astype(np.complex128)
        for q in out:
            v = v - np.vdot(q, v) * q
        norm = np.linalg.norm(v)
        if norm < pivot_tol:
            raise RankDeficiencyError(idx, float(norm))
        out.append(v / norm)
    field = FieldTag.COMPLEX if any(_field_of(b) is FieldTag.COMPLEX for b in raw) else FieldTag.REAL
    mats = tuple(HermitianMatrix.from_array(v if field is FieldTag.COMPLEX else v.real, field)
                 for v in out)
    return CoefficientFrame(mats, orthonormal=True, traceless=True)


def random_traceless_frame(n: int, d: int, field: FieldTag | str, rng) -> CoefficientFrame:
    """Orthonormal traceless frame spanned by ``d`` random Gaussian matrices."""
    from .rng import as_generator

    field = FieldTag.parse(field)
    g = as_generator(rng)
    raw = []
    for _ in range(d):
        x = g.standard_normal((n, n))
        if field is FieldTag.COMPLEX:
            x = x + 1j * g.standard_normal((n, n))
        raw.append(HermitianMatrix.from_array((x + x.conj().T) / 2, field))
    return orthonormalize_traceless(raw)


def local_observable_frame(n: int, observable=None) -> CoefficientFrame:
    """Frame of ``I x .. x C x .. x I`` on each qubit of ``C^n``, ``n = 2**q``.

    ``C`` defaults to Pauli Z.  Each element is scaled to unit HS norm; traceless
    local terms on distinct factors are automatically orthogonal.
    """
    q = int(round(np.log2(n)))
    if 2**q != n or q < 1:
        raise IsospecError("local observable frames need n to be a power of two")
    c = np.diag([1.0, -1.0]) if observable is None else np.asarray(observable)
    mats = []
    for site in range(q):
        m = np.ones((1, 1))
        for j in range(q):
            m = np.kron(m, c if j == site else np.eye(2))
        mats.append(m / np.linalg.norm(m))
    return CoefficientFrame.build(mats)


def partial_trace_second(m, n: int, s: int) -> HermitianMatrix:
    """Trace out the second factor of ``C^n (x) C^s``; index ``(a, c)`` maps to ``a*s + c``."""
    x = _arr(m)
    if x.shape != (n * s, n * s):
        raise DimensionError(f"matrix of shape {x.shape} is not ({n}*{s}) square")
    out = np.einsum("acbc->ab", x.reshape(n, s, n, s))
    return HermitianMatrix.from_array(out, _field_of(m))
