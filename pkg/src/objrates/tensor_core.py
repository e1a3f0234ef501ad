"""Variance-tagged 3x3 tensors and symmetric matrix-function kernels.

Components are always stored as plain 3x3 float arrays. A :class:`Tensor2`
adds a runtime tag recording, for each of its two slots, whether the index
is up or down and which frame (material or spatial) it lives in. Two-point
tensors such as the deformation gradient simply carry different frames on
their two slots.

The numerical kernels (``spd_sqrt``, ``sym_exp``, ``sym_log``,
``polar_decompose``, ``sylvester_spd_solve``) accept either raw arrays or
tagged tensors. Symmetric endomorphisms with respect to a metric ``g`` are
whitened with the Cholesky factor of ``g`` and then handled by ``eigh``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Union

import numpy as np

from .errors import (
    AsymmetricInput,
    NonSpdInput,
    NonSpdMetric,
    SingularF,
    VarianceMismatch,
)

SPD_RTOL = 1e-12
SYM_RTOL = 1e-8


class Variance(Enum):
    COV_COV = ("down", "down")
    CON_CON = ("up", "up")
    MIX_UP_DOWN = ("up", "down")
    MIX_DOWN_UP = ("down", "up")

    @classmethod
    def from_positions(cls, a: str, b: str) -> "Variance":
        for v in cls:
            if v.value == (a, b):
                return v
        raise VarianceMismatch(f"no variance for slots {(a, b)}")


class Frame(Enum):
    MATERIAL = "material"
    SPATIAL = "spatial"


def _flip(pos: str) -> str:
    return "up" if pos == "down" else "down"


@dataclass(frozen=True, eq=False)
class Tensor2:
    """A 3x3 second-order tensor with variance and per-slot frame tags.

    ``frame`` may be a single :class:`Frame` (both slots) or a pair, which is
    how two-point tensors like ``F`` (spatial, material) are represented.
    """

    data: np.ndarray
    variance: Variance
    frame: Union[Frame, tuple] = Frame.SPATIAL

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.shape != (3, 3):
            raise ValueError(f"Tensor2 needs 3x3 components, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Tensor2 components must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        fr = self.frame
        if isinstance(fr, Frame):
            fr = (fr, fr)
        fr = (Frame(fr[0]), Frame(fr[1]))
        object.__setattr__(self, "frame", fr[0] if fr[0] == fr[1] else fr)

    # -- tags --------------------------------------------------------------
    @property
    def frames(self) -> tuple:
        fr = self.frame
        return (fr, fr) if isinstance(fr, Frame) else fr

    @property
    def slots(self) -> tuple:
        return tuple(zip(self.variance.value, self.frames))

    @property
    def is_two_point(self) -> bool:
        return self.frames[0] != self.frames[1]

    def _with(self, data, slots) -> "Tensor2":
        (p1, f1), (p2, f2) = slots
        return Tensor2(data, Variance.from_positions(p1, p2), (f1, f2))

    def same_type(self, other: "Tensor2") -> bool:
        return self.slots == other.slots

    def _require_same(self, other: "Tensor2", op: str):
        if not isinstance(other, Tensor2):
            raise TypeError(f"cannot {op} Tensor2 and {type(other).__name__}")
        if not self.same_type(other):
            raise VarianceMismatch(f"cannot {op} {self.slots} and {other.slots}")

    # -- algebra -----------------------------------------------------------
    def __add__(self, other):
        self._require_same(other, "add")
        return self._with(self.data + other.data, self.slots)

    def __sub__(self, other):
        self._require_same(other, "subtract")
        return self._with(self.data - other.data, self.slots)

    def __neg__(self):
        return self._with(-self.data, self.slots)

    def __mul__(self, c):
        if isinstance(c, Tensor2):
            raise TypeError("use @ for composition or ddot for contraction")
        return self._with(float(c) * self.data, self.slots)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._with(self.data / float(c), self.slots)

    def __matmul__(self, other: "Tensor2") -> "Tensor2":
        """Contract the second slot of ``self`` with the first of ``other``."""
        if not isinstance(other, Tensor2):
            return NotImplemented
        (pa, fa), (pb, fb) = self.slots[1], other.slots[0]
        if pa == pb or fa != fb:
            raise VarianceMismatch(
                f"cannot contract slot {self.slots[1]} with {other.slots[0]}"
            )
        return self._with(self.data @ other.data, (self.slots[0], other.slots[1]))

    def ddot(self, other: "Tensor2") -> float:
        """Full contraction ``t^{ij} s_{ij}`` (slots paired in order)."""
        for (pa, fa), (pb, fb) in zip(self.slots, other.slots):
            if pa == pb or fa != fb:
                raise VarianceMismatch(f"cannot pair {self.slots} with {other.slots}")
        return float(np.sum(self.data * other.data))

    def trace(self) -> float:
        (p1, f1), (p2, f2) = self.slots
        if p1 == p2 or f1 != f2:
            raise VarianceMismatch(f"trace needs a mixed endomorphism, got {self.slots}")
        return float(np.trace(self.data))

    def inv(self) -> "Tensor2":
        det = np.linalg.det(self.data)
        if abs(det) <= 1e-300:
            raise SingularF("tensor is singular")
        (p1, f1), (p2, f2) = self.slots
        return self._with(np.linalg.inv(self.data), ((_flip(p2), f2), (_flip(p1), f1)))

    def is_symmetric(self, rtol: float = SYM_RTOL) -> bool:
        """Symmetry predicate; only meaningful for CovCov/ConCon in one frame."""
        if self.variance not in (Variance.COV_COV, Variance.CON_CON) or self.is_two_point:
            raise VarianceMismatch("symmetry is defined for CovCov/ConCon tensors only")
        return _asym(self.data) <= rtol

    def __repr__(self):
        fr = self.frame.value if isinstance(self.frame, Frame) else tuple(f.value for f in self.frame)
        return f"Tensor2({self.variance.name}, {fr}, {self.data.tolist()})"


def adjoint(t: Tensor2) -> Tensor2:
    """Dual map: components transposed, slots swapped (mixed variances flip)."""
    s1, s2 = t.slots
    return t._with(t.data.T, (s2, s1))


def identity(variance: Variance = Variance.MIX_UP_DOWN, frame=Frame.SPATIAL) -> Tensor2:
    return Tensor2(np.eye(3), variance, frame)


def transpose_metric(t: Tensor2, gE: Tensor2, gF: Tensor2) -> Tensor2:
    """Metric transpose ``L^t = gE^{-1} L* gF`` of ``L: E -> F``."""
    for g, name in ((gE, "gE"), (gF, "gF")):
        if g.variance is not Variance.COV_COV:
            raise VarianceMismatch(f"{name} must be CovCov")
        if not is_spd(g.data):
            raise NonSpdMetric(f"{name} is not SPD")
    return gE.inv() @ adjoint(t) @ gF


# -- array helpers ------------------------------------------------------------

def sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def skew(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - np.swapaxes(a, -1, -2))


def _asym(a: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), 1e-300)
    return float(np.linalg.norm(a - a.T) / scale) if np.any(a) else 0.0


def ddot(a: np.ndarray, b: np.ndarray) -> float:
    """``a:b = sum_ij a_ij b_ij``."""
    return float(np.sum(a * b))


def _arr(x) -> np.ndarray:
    if isinstance(x, SpdTensor):
        return x.underlying.data
    if isinstance(x, Tensor2):
        return x.data
    return np.asarray(x, dtype=float)


def is_spd(a: np.ndarray, metric: np.ndarray | None = None, rtol: float = SPD_RTOL) -> bool:
    """SPD predicate: symmetric (w.r.t. ``metric``) with lmin > rtol * lmax."""
    a = _arr(a)
    if not np.all(np.isfinite(a)):
        return False
    try:
        s = _whiten(a, metric)
    except (NonSpdMetric, AsymmetricInput):
        return False
    w = np.linalg.eigvalsh(s)
    return bool(w[-1] > 0 and w[0] > rtol * w[-1])


def _chol(metric: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sym(metric))
    except np.linalg.LinAlgError as exc:
        raise NonSpdMetric("metric is not positive definite") from exc


def _whiten(a: np.ndarray, metric: np.ndarray | None, tol: float = SYM_RTOL) -> np.ndarray:
    """Symmetric matrix similar to ``a`` (``a`` must be metric-symmetric)."""
    if metric is None:
        s = a
    else:
        lo = _chol(metric)
        # S = L^T a L^{-T}
        s = lo.T @ a @ np.linalg.inv(lo).T
    if _asym(s) > tol:
        raise AsymmetricInput("input is not symmetric w.r.t. the given metric")
    return sym(s)


def _unwhiten(s: np.ndarray, metric: np.ndarray | None) -> np.ndarray:
    if metric is None:
        return s
    lo = _chol(metric)
    return np.linalg.inv(lo).T @ s @ lo.T


def sym_function(a, f: Callable[[np.ndarray], np.ndarray], metric=None, require_spd=False):
    """Apply a scalar function spectrally to a (metric-)symmetric 3x3 matrix."""
    arr = _arr(a)
    g = None if metric is None else _arr(metric)
    s = _whiten(arr, g)
    w, v = np.linalg.eigh(s)
    if require_spd and not (w[-1] > 0 and w[0] > SPD_RTOL * w[-1]):
        raise NonSpdInput(f"matrix is not SPD (eigenvalues {w})")
    out = (v * f(w)) @ v.T
    return _unwhiten(out, g)


def _retag(out: np.ndarray, like):
    if isinstance(like, SpdTensor):
        return SpdTensor(Tensor2(out, like.underlying.variance, like.underlying.frame), like.metric)
    if isinstance(like, Tensor2):
        return Tensor2(out, like.variance, like.frame)
    return out


def _metric_of(a, metric):
    if metric is None and isinstance(a, SpdTensor):
        return a.metric
    return metric


@dataclass(frozen=True, eq=False)
class SpdTensor:
    """A CovCov or MixUpDown tensor certified positive definite.

    For mixed variance ``metric`` is the metric the endomorphism is
    symmetric with respect to (identity when omitted).
    """

    underlying: Tensor2
    metric: np.ndarray | None = None

    def __post_init__(self):
        if self.underlying.variance not in (Variance.COV_COV, Variance.MIX_UP_DOWN):
            raise VarianceMismatch("SpdTensor must be CovCov or MixUpDown")
        g = self.metric if self.underlying.variance is Variance.MIX_UP_DOWN else None
        if g is not None:
            g = np.asarray(g, dtype=float)
            object.__setattr__(self, "metric", g)
        if not is_spd(self.underlying.data, g):
            raise NonSpdInput("tensor is not symmetric positive definite")

    @property
    def data(self) -> np.ndarray:
        return self.underlying.data


def spd_sqrt(a, metric=None):
    """Unique SPD square root; whitened by ``metric`` for mixed input."""
    metric = _metric_of(a, metric)
    out = sym_function(a, np.sqrt, metric, require_spd=True)
    return _retag(out, a)


def spd_inv_sqrt(a, metric=None):
    metric = _metric_of(a, metric)
    out = sym_function(a, lambda w: 1.0 / np.sqrt(w), metric, require_spd=True)
    return _retag(out, a)


def sym_exp(s, metric=None):
    """Exponential of a (metric-)symmetric endomorphism; always SPD."""
    metric = _metric_of(s, metric)
    out = sym_function(s, np.exp, metric)
    if isinstance(s, Tensor2) and not isinstance(s, SpdTensor):
        return SpdTensor(Tensor2(out, s.variance, s.frame), metric)
    return _retag(out, s)


def sym_log(a, metric=None):
    """Principal logarithm of an SPD (metric-symmetric) matrix."""
    metric = _metric_of(a, metric)
    out = sym_function(a, np.log, metric, require_spd=True)
    if isinstance(a, SpdTensor):
        return Tensor2(out, a.underlying.variance, a.underlying.frame)
    return _retag(out, a)


def polar_decompose(F):
    """Right polar decomposition ``F = R U`` with ``U = sqrt(F^T F)``."""
    arr = _arr(F)
    if np.linalg.det(arr) <= 0:
        raise SingularF("polar decomposition needs det F > 0")
    u = sym_function(arr.T @ arr, np.sqrt, require_spd=True)
    r = arr @ np.linalg.inv(u)
    if isinstance(F, Tensor2):
        f_sp, f_mat = F.frames
        r = Tensor2(r, Variance.MIX_UP_DOWN, (f_sp, f_mat))
        u = SpdTensor(Tensor2(u, Variance.MIX_UP_DOWN, f_mat))
    return r, u


def sylvester_spd_solve(P, B, metric=None):
    """Solve ``P S + S P = B`` for ``S`` with ``P`` SPD.

    With a metric, ``P`` and ``B`` are endomorphisms symmetric w.r.t. it and
    the solve happens in the whitened frame, where it is diagonal.
    """
    metric = _metric_of(P, metric)
    p, b = _arr(P), _arr(B)
    g = None if metric is None else _arr(metric)
    ps = _whiten(p, g)
    bs = _whiten(b, g)
    w, v = np.linalg.eigh(ps)
    if not (w[-1] > 0 and w[0] > SPD_RTOL * w[-1]):
        raise NonSpdInput("Sylvester operator needs SPD P")
    bt = v.T @ bs @ v
    st = bt / (w[:, None] + w[None, :])
    out = _unwhiten(v @ st @ v.T, g)
    return _retag(out, B)
