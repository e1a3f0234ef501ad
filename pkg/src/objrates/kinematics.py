"""Motions, kinematic snapshots, pull-backs and Lie derivatives.

Spatial components are Cartesian, so the ambient metric ``q`` is the
identity and spatial index raising/lowering is a no-op on components. Each
material point carries a chart in which the reference placement has
gradient ``F0``; the reference metric is ``gamma0 = F0^T F0``. A motion
returns the two-point gradient ``F(t) = F_phi(t) F0`` where ``F_phi`` maps
the reference configuration to the current one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError, OutOfRange, SingularF, VarianceMismatch, ZeroDensity
from .tensor_core import (
    Frame,
    Tensor2,
    Variance,
    sym,
    skew,
    sym_function,
)

EYE = np.eye(3)


def skew_from_axis(w) -> np.ndarray:
    """Skew matrix ``W`` with ``W x = w cross x``."""
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


# -----------------------------------------------------------------------------
# superposed rigid / affine paths
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineMotionPath:
    """``x -> P(t) x + c(t)`` with ``P(t) = P0 expm(t M)``, ``c(t) = c0 + t c1``.

    With ``M`` skew and ``P0`` a rotation this is a rigid path.
    """

    name: str = "identity"
    P0: np.ndarray = field(default_factory=lambda: np.eye(3))
    M: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    c0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c1: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def matrix(self, t: float) -> np.ndarray:
        return np.asarray(self.P0) @ expm(t * np.asarray(self.M))

    def matrix_t(self, t: float) -> np.ndarray:
        return self.matrix(t) @ np.asarray(self.M)

    def shift(self, t: float) -> np.ndarray:
        return np.asarray(self.c0) + t * np.asarray(self.c1)

    def shift_t(self, t: float) -> np.ndarray:
        return np.asarray(self.c1, dtype=float)

    def spin(self, t: float) -> np.ndarray:
        """``Omega = P_t P^{-1}`` (``M`` conjugated into the current frame)."""
        return self.matrix_t(t) @ np.linalg.inv(self.matrix(t))


@dataclass(frozen=True)
class RigidMotionPath(AffineMotionPath):
    """Rigid path ``g(t) x = Q(t) x + c(t)``, ``Q(t) = Q0 expm(t skew(w))``."""

    def __post_init__(self):
        q0 = np.asarray(self.P0, dtype=float)
        if np.linalg.norm(q0.T @ q0 - EYE) > 1e-12 or np.linalg.det(q0) <= 0:
            raise ValueError("rigid path needs Q0 in SO(3)")
        m = np.asarray(self.M, dtype=float)
        if np.linalg.norm(m + m.T) > 1e-14:
            raise ValueError("rigid path generator must be skew")

    @classmethod
    def spinning(cls, axis_rate, q0=None, c0=(0, 0, 0), c1=(0, 0, 0), name="spin"):
        q0 = EYE if q0 is None else np.asarray(q0, dtype=float)
        return cls(name, q0, skew_from_axis(axis_rate), np.asarray(c0, float), np.asarray(c1, float))


def rotation(axis_angle) -> np.ndarray:
    return expm(skew_from_axis(axis_angle))


# -----------------------------------------------------------------------------
# motions
# -----------------------------------------------------------------------------

class MotionPath:
    """Homogeneous motion ``p(t, X) = F(t) X + c(t)``.

    Subclasses provide ``deformation(t) -> (F_phi, F_phi_t)``.
    """

    F0: np.ndarray
    mu_density: float
    name: str

    def deformation(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def translation(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(3), np.zeros(3)

    @property
    def gamma0(self) -> np.ndarray:
        return self.F0.T @ self.F0

    def gradient(self, t: float, X=None) -> tuple[np.ndarray, np.ndarray]:
        """``(F, F_t)`` at ``(t, X)``."""
        fp, fp_t = self.deformation(t)
        return fp @ self.F0, fp_t @ self.F0

    def position(self, t: float, X) -> np.ndarray:
        F, _ = self.gradient(t, X)
        c, _ = self.translation(t)
        return F @ np.asarray(X, dtype=float) + c

    def velocity(self, t: float, X) -> np.ndarray:
        _, F_t = self.gradient(t, X)
        _, c_t = self.translation(t)
        return F_t @ np.asarray(X, dtype=float) + c_t


def _family_rigid(p):
    W = skew_from_axis(p.get("axis_rate", [0.0, 0.0, 1.0]))
    return lambda t: (expm(t * W), W @ expm(t * W))


def _family_identity(p):
    return lambda t: (EYE.copy(), np.zeros((3, 3)))


def _family_dilation(p):
    a = float(p.get("alpha", 0.5))
    return lambda t: (np.exp(a * t) * EYE, a * np.exp(a * t) * EYE)


def _family_uniaxial(p):
    r = float(p.get("rate", 0.5))
    nu = float(p.get("nu", 0.3))
    g = np.array([r, -nu * r, -nu * r])
    return lambda t: (np.diag(np.exp(g * t)), np.diag(g * np.exp(g * t)))


def _family_shear(p):
    k = float(p.get("rate", 1.0))
    i, j = p.get("plane", [0, 1])
    N = np.zeros((3, 3))
    N[i, j] = 1.0
    return lambda t: (EYE + k * t * N, k * N)


def _family_rotation_stretch(p):
    W = skew_from_axis(p.get("axis_rate", [0.3, -0.2, 0.9]))
    S = sym(np.asarray(p.get("stretch_rate", [[0.4, 0.1, 0.0], [0.1, -0.2, 0.15], [0.0, 0.15, 0.1]]), float))

    def f(t):
        R, U = expm(t * W), expm(t * S)
        return R @ U, W @ R @ U + R @ S @ U

    return f


def _family_affine(p):
    G = np.asarray(p["generator"], dtype=float)
    return lambda t: (expm(t * G), G @ expm(t * G))


def _family_extension(p):
    U = np.asarray(p["U"], dtype=float)
    A = np.asarray(p["A"], dtype=float)
    return lambda t: (U @ expm(t * A), U @ A @ expm(t * A))


FAMILIES: dict[str, Callable] = {
    "identity": _family_identity,
    "rigid": _family_rigid,
    "dilation": _family_dilation,
    "uniaxial": _family_uniaxial,
    "simple_shear": _family_shear,
    "rotation_stretch": _family_rotation_stretch,
    "affine": _family_affine,
    "extension": _family_extension,
}


class ClosedFormMotion(MotionPath):
    """Named analytic family with exact time derivatives."""

    def __init__(self, family: str, params: dict | None = None, F0=None,
                 mu_density: float = 1.0, c0=(0, 0, 0), c1=(0, 0, 0), name: str | None = None):
        if family not in FAMILIES:
            raise ConfigError(f"unknown motion family {family!r}")
        self.family = family
        self.params = dict(params or {})
        self._f = FAMILIES[family](self.params)
        self.F0 = EYE.copy() if F0 is None else np.asarray(F0, dtype=float)
        if np.linalg.det(self.F0) <= 0:
            raise SingularF("reference gradient F0 must have det > 0")
        self.mu_density = float(mu_density)
        self.c0 = np.asarray(c0, dtype=float)
        self.c1 = np.asarray(c1, dtype=float)
        self.name = name or family

    def deformation(self, t):
        return self._f(float(t))

    def translation(self, t):
        return self.c0 + t * self.c1, self.c1.copy()

    def __repr__(self):
        return f"ClosedFormMotion({self.name!r})"


class SampledMotion(MotionPath):
    """Motion known through a time series of ``F_phi``; ``F_t`` by centered differences.

    Interior nodes use second-order centered differences and the two ends
    use second-order one-sided stencils. Between nodes ``F`` and ``F_t`` are
    interpolated linearly.
    """

    def __init__(self, times, Fs, F0=None, mu_density: float = 1.0, name: str = "sampled"):
        self.times = np.asarray(times, dtype=float)
        self.Fs = np.asarray(Fs, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 3 or self.Fs.shape != (len(self.times), 3, 3):
            raise ConfigError("sampled motion needs >= 3 times and matching (n,3,3) gradients")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigError("sampled times must be strictly increasing")
        self.Fts = np.gradient(self.Fs, self.times, axis=0, edge_order=2)
        self.F0 = EYE.copy() if F0 is None else np.asarray(F0, dtype=float)
        self.mu_density = float(mu_density)
        self.name = name

    def deformation(self, t):
        t0, t1 = self.times[0], self.times[-1]
        eps = 1e-12 * max(1.0, abs(t1 - t0))
        if t < t0 - eps or t > t1 + eps:
            raise OutOfRange(f"t={t} outside sampled window [{t0}, {t1}]")
        i = int(np.clip(np.searchsorted(self.times, t) - 1, 0, len(self.times) - 2))
        h = self.times[i + 1] - self.times[i]
        s = float(np.clip((t - self.times[i]) / h, 0.0, 1.0))
        F = (1 - s) * self.Fs[i] + s * self.Fs[i + 1]
        Ft = (1 - s) * self.Fts[i] + s * self.Fts[i + 1]
        return F, Ft


def sample_motion(motion: MotionPath, times) -> SampledMotion:
    """Sample ``F_phi`` of any motion on a grid (no derivative data kept)."""
    times = np.asarray(times, dtype=float)
    Fs = np.array([motion.deformation(t)[0] for t in times])
    return SampledMotion(times, Fs, motion.F0, motion.mu_density, name=f"{motion.name}@sampled")


class SuperposedMotion(MotionPath):
    """``g(t) o p(t)`` for a rigid or affine path ``g``."""

    def __init__(self, base: MotionPath, path: AffineMotionPath):
        self.base = base
        self.path = path
        self.F0 = base.F0
        self.mu_density = base.mu_density
        self.name = f"{path.name}*{base.name}"

    def deformation(self, t):
        fp, fp_t = self.base.deformation(t)
        P, P_t = self.path.matrix(t), self.path.matrix_t(t)
        return P @ fp, P_t @ fp + P @ fp_t

    def translation(self, t):
        c, c_t = self.base.translation(t)
        P, P_t = self.path.matrix(t), self.path.matrix_t(t)
        return P @ c + self.path.shift(t), P_t @ c + P @ c_t + self.path.shift_t(t)


def superpose(motion: MotionPath, path: AffineMotionPath) -> MotionPath:
    return SuperposedMotion(motion, path)


# -----------------------------------------------------------------------------
# snapshots
# -----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MotionState:
    """Kinematic snapshot at one material point and time (plain arrays).

    Variances: ``F`` two-point (spatial, material); ``grad_u``, ``d_hat``,
    ``w_hat``, ``b_hat`` mixed spatial; ``d`` CovCov spatial; ``C`` mixed on
    the reference (``F_phi^T F_phi``); ``b`` ConCon spatial; ``gamma``,
    ``gamma_t``, ``gamma0`` CovCov material.
    """

    t: float
    F: np.ndarray
    F_t: np.ndarray
    F0: np.ndarray
    grad_u: np.ndarray
    d_hat: np.ndarray
    w_hat: np.ndarray
    d: np.ndarray
    C: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    gamma_t: np.ndarray
    gamma0: np.ndarray
    J: float
    rho: float

    @property
    def F_phi(self) -> np.ndarray:
        return self.F @ np.linalg.inv(self.F0)

    @property
    def b_hat(self) -> np.ndarray:
        """``F gamma0^{-1} F^T`` (equals ``b`` because ``q`` is the identity)."""
        return self.b

    def tensor(self, name: str) -> Tensor2:
        """Tagged view of a field."""
        S, M = Frame.SPATIAL, Frame.MATERIAL
        tags = {
            "F": (Variance.MIX_UP_DOWN, (S, M)),
            "F_t": (Variance.MIX_UP_DOWN, (S, M)),
            "F0": (Variance.MIX_UP_DOWN, (S, M)),
            "grad_u": (Variance.MIX_UP_DOWN, S),
            "d_hat": (Variance.MIX_UP_DOWN, S),
            "w_hat": (Variance.MIX_UP_DOWN, S),
            "d": (Variance.COV_COV, S),
            "b": (Variance.CON_CON, S),
            "gamma": (Variance.COV_COV, M),
            "gamma_t": (Variance.COV_COV, M),
            "gamma0": (Variance.COV_COV, M),
            "C": (Variance.MIX_UP_DOWN, M),
        }
        v, f = tags[name]
        return Tensor2(getattr(self, name), v, f)


def state_from_gradient(F, F_t, F0=None, mu_density: float = 1.0, t: float = 0.0) -> MotionState:
    F = np.asarray(F, dtype=float)
    F_t = np.asarray(F_t, dtype=float)
    F0 = EYE if F0 is None else np.asarray(F0, dtype=float)
    J = float(np.linalg.det(F))
    if J <= 0:
        raise SingularF(f"det F = {J} <= 0")
    Finv = np.linalg.inv(F)
    L = F_t @ Finv
    d_hat = sym(L)
    w_hat = skew(L)
    gamma = F.T @ F
    gamma_t = F_t.T @ F + F.T @ F_t
    F_phi = F @ np.linalg.inv(F0)
    return MotionState(
        t=float(t), F=F, F_t=F_t, F0=F0, grad_u=L, d_hat=d_hat, w_hat=w_hat, d=d_hat.copy(),
        C=F_phi.T @ F_phi, b=F_phi @ F_phi.T, gamma=gamma, gamma_t=gamma_t,
        gamma0=F0.T @ F0, J=J, rho=float(mu_density) / J,
    )


def motion_state(m: MotionPath, X=None, t: float = 0.0) -> MotionState:
    """Snapshot of motion ``m`` at material point ``X`` and time ``t``."""
    F, F_t = m.gradient(t, X)
    return state_from_gradient(F, F_t, m.F0, m.mu_density, t)


def mass_density(state: MotionState, mu_density: float) -> float:
    """``rho = mu_density / det F`` with ``mu_density`` mass per unit chart volume."""
    J = float(np.linalg.det(state.F))
    if J <= 0:
        raise SingularF(f"det F = {J} <= 0")
    return float(mu_density) / J


# -----------------------------------------------------------------------------
# pull-back / push-forward
# -----------------------------------------------------------------------------

def _grad(p) -> np.ndarray:
    F = p.F if isinstance(p, MotionState) else np.asarray(p, dtype=float)
    if np.linalg.det(F) <= 0:
        raise SingularF("pull-back needs det F > 0")
    return F


def _pull_arr(F, a, variance):
    Fi = np.linalg.inv(F)
    if variance is Variance.COV_COV:
        return F.T @ a @ F
    if variance is Variance.CON_CON:
        return Fi @ a @ Fi.T
    if variance is Variance.MIX_UP_DOWN:
        return Fi @ a @ F
    return F.T @ a @ Fi.T


def _push_arr(F, a, variance):
    Fi = np.linalg.inv(F)
    if variance is Variance.COV_COV:
        return Fi.T @ a @ Fi
    if variance is Variance.CON_CON:
        return F @ a @ F.T
    if variance is Variance.MIX_UP_DOWN:
        return F @ a @ Fi
    return Fi.T @ a @ F.T


def pull_back(p, t: Tensor2) -> Tensor2:
    """``p* t`` for a spatial order-2 tensor; the variance tag picks the formula."""
    F = _grad(p)
    if t.frames != (Frame.SPATIAL, Frame.SPATIAL):
        raise VarianceMismatch("pull_back expects a spatial tensor")
    return Tensor2(_pull_arr(F, t.data, t.variance), t.variance, Frame.MATERIAL)


def push_forward(p, T: Tensor2) -> Tensor2:
    """``p_* T`` for a material order-2 tensor."""
    F = _grad(p)
    if T.frames != (Frame.MATERIAL, Frame.MATERIAL):
        raise VarianceMismatch("push_forward expects a material tensor")
    return Tensor2(_push_arr(F, T.data, T.variance), T.variance, Frame.SPATIAL)


def pull_back_vector(p, w) -> np.ndarray:
    return np.linalg.solve(_grad(p), np.asarray(w, dtype=float))


def push_forward_vector(p, W) -> np.ndarray:
    return _grad(p) @ np.asarray(W, dtype=float)


def pull_back_covector(p, beta) -> np.ndarray:
    return _grad(p).T @ np.asarray(beta, dtype=float)


def push_forward_covector(p, B) -> np.ndarray:
    return np.linalg.solve(_grad(p).T, np.asarray(B, dtype=float))


# -----------------------------------------------------------------------------
# Lie derivatives (algebraic part + caller-supplied transport)
# -----------------------------------------------------------------------------

def lie_derivative(u_grad, t, transport=None):
    """Lie derivative ``L_u t`` at a point for a field with gradient data ``u_grad``.

    ``t`` is a spatial :class:`Tensor2` or a covector (length-3 array).
    ``transport`` is ``nabla_u t`` (zero for homogeneous fields).
    """
    if isinstance(u_grad, Tensor2):
        if u_grad.variance is not Variance.MIX_UP_DOWN or u_grad.frames != (Frame.SPATIAL,) * 2:
            raise VarianceMismatch("velocity gradient must be mixed up-down spatial")
        L = u_grad.data
    else:
        L = np.asarray(u_grad, dtype=float)
    if not isinstance(t, Tensor2):
        a = np.asarray(t, dtype=float)
        if a.shape != (3,):
            raise VarianceMismatch("untagged input must be a covector of length 3")
        tr = np.zeros(3) if transport is None else np.asarray(transport, dtype=float)
        return tr + L.T @ a
    if t.frames != (Frame.SPATIAL, Frame.SPATIAL):
        raise VarianceMismatch("Lie derivative acts on spatial tensors")
    if transport is None:
        tr = np.zeros((3, 3))
    elif isinstance(transport, Tensor2):
        if not transport.same_type(t):
            raise VarianceMismatch("transport term must match the field's variance")
        tr = transport.data
    else:
        tr = np.asarray(transport, dtype=float)
    a = t.data
    v = t.variance
    if v is Variance.COV_COV:
        out = tr + L.T @ a + a @ L
    elif v is Variance.CON_CON:
        out = tr - L @ a - a @ L.T
    elif v is Variance.MIX_UP_DOWN:
        out = tr - L @ a + a @ L
    else:
        out = tr + L.T @ a - a @ L.T
    return Tensor2(out, v, Frame.SPATIAL)


# -----------------------------------------------------------------------------
# strain and stress measures
# -----------------------------------------------------------------------------

def hencky_strain(state: MotionState, gamma0=None) -> np.ndarray:
    """``E = 1/2 gamma0 log(gamma0^{-1} gamma)`` (CovCov material)."""
    g0 = state.gamma0 if gamma0 is None else _as_array(gamma0)
    M = np.linalg.solve(g0, state.gamma)
    return 0.5 * g0 @ sym_function(M, np.log, metric=g0, require_spd=True)


def _as_array(x) -> np.ndarray:
    if hasattr(x, "underlying"):
        return x.underlying.data
    if isinstance(x, Tensor2):
        return x.data
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class StressSet:
    tau: np.ndarray
    theta: np.ndarray
    noll_sigma: np.ndarray
    S: np.ndarray


def stresses(state: MotionState, sigma) -> StressSet:
    """Kirchhoff-per-mass ``tau``, Rougee ``theta``, Noll ``p* sigma`` and second Piola ``S``."""
    sig = _as_array(sigma)
    if not state.rho > 0:
        raise ZeroDensity("density must be positive")
    tau = sig / state.rho
    Fi = np.linalg.inv(state.F)
    theta = Fi @ tau @ Fi.T
    noll = Fi @ sig @ Fi.T
    S = state.F0 @ theta @ state.F0.T
    return StressSet(tau, theta, noll, S)


# -----------------------------------------------------------------------------
# motion-spec files
# -----------------------------------------------------------------------------

@dataclass
class MotionSpec:
    motion: MotionPath
    points: np.ndarray
    mu: np.ndarray
    tgrid: np.ndarray
    gamma0: np.ndarray | None


def tgrid_from(spec: dict | None) -> np.ndarray:
    spec = spec or {}
    t0 = float(spec.get("t0", 0.0))
    t1 = float(spec.get("t1", 1.0))
    n = int(spec.get("n", 64))
    if n < 1 or t1 < t0:
        raise ConfigError("tgrid needs n >= 1 and t1 >= t0")
    return np.linspace(t0, t1, n + 1)


def motion_from_spec(spec: dict) -> MotionSpec:
    """Build a motion from the parsed motion-spec JSON object."""
    from .schemas import validate

    validate(spec, "motion_spec")
    F0 = np.asarray(spec["F0"], dtype=float) if "F0" in spec else None
    rho0 = float(spec.get("mu_density", 1.0))
    motion = ClosedFormMotion(spec["family"], spec.get("params", {}), F0=F0, mu_density=rho0)
    points = np.asarray(spec.get("points", [[0.0, 0.0, 0.0]]), dtype=float)
    mu = np.asarray(spec.get("mu", [1.0] * len(points)), dtype=float)
    if len(mu) != len(points):
        raise ConfigError("mu: needs one weight per point")
    if np.any(mu <= 0):
        raise ConfigError("mu: weights must be positive")
    ref = spec.get("reference")
    if ref is None or ref is False:
        gamma0 = None
    elif ref is True:
        gamma0 = motion.gamma0
    else:
        gamma0 = np.asarray(ref, dtype=float)
    return MotionSpec(motion, points, mu, tgrid_from(spec.get("tgrid")), gamma0)


def load_motion_spec(path) -> MotionSpec:
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"motion_spec: cannot read {path}: {exc}") from exc
    return motion_from_spec(spec)
