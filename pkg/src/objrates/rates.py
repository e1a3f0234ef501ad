"""Registry of objective rates in spatial and Christoffel form.

Each rate is available three ways:

* ``spatial_rate_con``: contravariant fields (``tau``), spatial formula;
* ``spatial_rate_cov``: covariant fields (``k``), spatial formula;
* ``christoffel_of``: the bilinear ``Gamma_gamma(gamma_t, eps)`` on the
  manifold of metrics, used by ``rate_via_met`` which pulls the field back,
  applies ``d_t + Gamma`` (or its dual) and pushes forward.

The spatial formulas and the Christoffel operators are coded separately so
that agreement between them is a real check. Spatial components are
Cartesian (``q`` is the identity).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AsymmetricInput, ConfigError, MissingReference, VarianceMismatch
from .kinematics import MotionState
from .met_geometry import ChristoffelOp, EBIN, ROUGEE, ZERO, ebin_gamma, ebin_gamma_adjoint
from .tensor_core import Frame, Tensor2, Variance, skew, sylvester_spd_solve, sym_function

EYE = np.eye(3)
NuFunc = Callable[[float, float, float], float]


def _zero(i1, i2, i3):
    return 0.0


# Smooth spin coefficients of the same template as the logarithmic spin.
# This is a demonstration preset, not the logarithmic spin itself.
def _ls_nu1(i1, i2, i3):
    return 1.0 / (1.0 + i1)


def _ls_nu2(i1, i2, i3):
    return -0.1 / (1.0 + i2)


def _ls_nu3(i1, i2, i3):
    return 0.01 / (1.0 + i3)


XBM_PRESETS: dict[str, tuple[NuFunc, NuFunc, NuFunc]] = {
    "zero": (_zero, _zero, _zero),
    "logspin-like": (_ls_nu1, _ls_nu2, _ls_nu3),
}

FAMILIES = (
    "oldroyd", "truesdell", "jaumann", "hill", "fiala", "fiala-truesdell",
    "mh", "green-naghdi", "xbm", "particle",
)


@dataclass(frozen=True)
class RateKind:
    """One objective rate with its parameters.

    ``particle`` is the plain particle derivative, kept as a non-objective
    negative control.
    """

    family: str
    m1: float = 0.0
    m2: float = 0.0
    which: int = 0
    preset: str = ""
    nu: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown rate family {self.family!r}")
        if self.family == "mh" and self.which not in (1, 2, 3, 4):
            raise ConfigError("mh rate needs which in 1..4")
        if self.family == "xbm" and len(self.nu) != 3:
            raise ConfigError("xbm rate needs three spin functions")

    @classmethod
    def hill(cls, m1: float, m2: float) -> "RateKind":
        return cls("hill", m1=float(m1), m2=float(m2))

    @classmethod
    def marsden_hughes(cls, which: int) -> "RateKind":
        return cls("mh", which=int(which))

    @classmethod
    def xbm(cls, preset: str = "zero", nu=None) -> "RateKind":
        if nu is None:
            if preset not in XBM_PRESETS:
                raise ConfigError(f"unknown xbm preset {preset!r}")
            nu = XBM_PRESETS[preset]
        return cls("xbm", preset=preset, nu=tuple(nu))

    @property
    def name(self) -> str:
        if self.family == "hill":
            return f"hill:{self.m1:g},{self.m2:g}"
        if self.family == "mh":
            return f"mh:{self.which}"
        if self.family == "xbm":
            return f"xbm:{self.preset}"
        return self.family

    @property
    def needs_reference(self) -> bool:
        return self.family in ("green-naghdi", "xbm")

    @property
    def objective(self) -> bool:
        return self.family != "particle"

    @property
    def general_covariant(self) -> bool:
        """True exactly when the Christoffel operator vanishes identically."""
        return (
            self.family == "oldroyd"
            or (self.family == "mh" and self.which == 1)
            or (self.family == "hill" and self.m1 == 1.0 and self.m2 == 0.0)
        )

    def __str__(self):
        return self.name


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_rate(text: str) -> RateKind:
    """Parse a rate name such as ``"hill:1,-0.5"``, ``"mh:3"`` or ``"xbm:zero"``."""
    s = text.strip().lower()
    simple = {
        "oldroyd": "oldroyd", "truesdell": "truesdell", "jaumann": "jaumann",
        "zaremba-jaumann": "jaumann", "fiala": "fiala", "fiala-truesdell": "fiala-truesdell",
        "green-naghdi": "green-naghdi", "gn": "green-naghdi", "particle": "particle",
    }
    if s in simple:
        return RateKind(simple[s])
    m = re.fullmatch(rf"hill:\s*({_NUM})\s*,\s*({_NUM})", s)
    if m:
        return RateKind.hill(float(m.group(1)), float(m.group(2)))
    m = re.fullmatch(r"mh:\s*([1-4])", s)
    if m:
        return RateKind.marsden_hughes(int(m.group(1)))
    m = re.fullmatch(r"xbm(?::\s*([\w-]+))?", s)
    if m:
        return RateKind.xbm(m.group(1) or "zero")
    raise ConfigError(f"cannot parse rate name {text!r}")


OBJECTIVE_KINDS = (
    "oldroyd", "truesdell", "jaumann", "hill:0.5,0.25", "fiala", "fiala-truesdell",
    "mh:1", "mh:2", "mh:3", "mh:4", "green-naghdi", "xbm:zero", "xbm:logspin-like",
)


def default_kinds() -> list[RateKind]:
    return [parse_rate(s) for s in OBJECTIVE_KINDS]


@dataclass(frozen=True, eq=False)
class RateContext:
    """Kinematic state plus the optional reference metric ``gamma0``."""

    state: MotionState
    gamma0: np.ndarray | None = None

    @property
    def reference(self) -> bool:
        return self.gamma0 is not None

    @classmethod
    def with_reference(cls, state: MotionState) -> "RateContext":
        return cls(state, state.gamma0)

    def require_gamma0(self) -> np.ndarray:
        if self.gamma0 is None:
            raise MissingReference()
        g0 = self.gamma0
        return g0.underlying.data if hasattr(g0, "underlying") else np.asarray(getattr(g0, "data", g0), dtype=float)


# -----------------------------------------------------------------------------
# spins built from the reference configuration
# -----------------------------------------------------------------------------

def _reference_gradient(ctx: RateContext) -> np.ndarray:
    g0 = ctx.require_gamma0()
    st = ctx.state
    if np.allclose(st.gamma0, g0, rtol=1e-14, atol=0.0):
        return st.F0
    # any F0 with F0^T F0 = gamma0 gives the same spins; take the SPD root
    return sym_function(g0, np.sqrt, require_spd=True)


def green_naghdi_spin(ctx: RateContext) -> np.ndarray:
    """``omega = R_t R^{-1}`` from the polar factor of ``F F0^{-1}``."""
    st = ctx.state
    F0i = np.linalg.inv(_reference_gradient(ctx))
    Fp, Fp_t = st.F @ F0i, st.F_t @ F0i
    C = Fp.T @ Fp
    C_t = Fp_t.T @ Fp + Fp.T @ Fp_t
    U = sym_function(C, np.sqrt, require_spd=True)
    U_t = sylvester_spd_solve(U, C_t)
    Ui = np.linalg.inv(U)
    R = Fp @ Ui
    R_t = (Fp_t - R @ U_t) @ Ui
    return R_t @ R.T


def _invariants(B: np.ndarray) -> tuple[float, float, float]:
    B2 = B @ B
    return float(np.trace(B)), float(np.trace(B2)), float(np.trace(B2 @ B))


def xbm_spin(kind: RateKind, ctx: RateContext) -> np.ndarray:
    """``Omega = w + nu1 (b d)^a + nu2 (b^2 d)^a + nu3 (b d b^2)^a``."""
    st = ctx.state
    g0 = ctx.require_gamma0()
    b = st.F @ np.linalg.solve(g0, st.F.T)
    d = st.d_hat
    b2 = b @ b
    n1, n2, n3 = (f(*_invariants(b)) for f in kind.nu)
    return st.w_hat + n1 * skew(b @ d) + n2 * skew(b2 @ d) + n3 * skew(b @ d @ b2)


# -----------------------------------------------------------------------------
# spatial forms
# -----------------------------------------------------------------------------

def _unwrap(x, variance: Variance, what: str):
    if isinstance(x, Tensor2):
        if x.variance is not variance or x.frames != (Frame.SPATIAL, Frame.SPATIAL):
            raise VarianceMismatch(f"{what} must be {variance.name} spatial")
        return x.data, True
    return np.asarray(x, dtype=float), False


def _check_sym(a: np.ndarray, what: str):
    n = np.linalg.norm(a)
    if n > 0 and np.linalg.norm(a - a.T) > 1e-8 * n:
        raise AsymmetricInput(f"{what} must be symmetric")


def _con_array(kind: RateKind, ctx: RateContext, tau: np.ndarray, tau_dot: np.ndarray) -> np.ndarray:
    st = ctx.state
    L, d, w = st.grad_u, st.d_hat, st.w_hat
    fam = kind.family
    if fam == "particle":
        return tau_dot.copy()
    if fam == "green-naghdi":
        om = green_naghdi_spin(ctx)
        return tau_dot - om @ tau - tau @ om.T
    if fam == "xbm":
        om = xbm_spin(kind, ctx)
        return tau_dot - om @ tau - tau @ om.T
    if fam == "mh":
        if kind.which == 2:
            return tau_dot - w @ tau - tau @ w.T
        if kind.which == 3:
            return tau_dot + L.T @ tau + tau @ L
        old = tau_dot - L @ tau - tau @ L.T
        return old if kind.which == 1 else old + np.trace(d) * tau
    old = tau_dot - L @ tau - tau @ L.T
    if fam == "oldroyd":
        return old
    if fam == "truesdell":
        return old + np.trace(d) * tau
    if fam == "jaumann":
        return old + d @ tau + tau @ d.T
    if fam == "hill":
        N = (kind.m1 - 1.0) * d + kind.m2 * np.trace(d) * EYE
        return old - N @ tau - tau @ N.T
    # Fiala family
    jau = tau_dot - w @ tau - tau @ w.T
    trd = np.trace(d)
    corr = 0.5 * (np.trace(tau) * d - trd * tau - float(np.sum(tau * d)) * EYE)
    if fam == "fiala":
        return jau + corr
    return jau + corr + trd * tau


def _cov_array(kind: RateKind, ctx: RateContext, k: np.ndarray, k_dot: np.ndarray) -> np.ndarray:
    st = ctx.state
    L, d, w = st.grad_u, st.d_hat, st.w_hat
    fam = kind.family
    if fam == "particle":
        return k_dot.copy()
    if fam == "green-naghdi":
        om = green_naghdi_spin(ctx)
        return k_dot + om.T @ k + k @ om
    if fam == "xbm":
        om = xbm_spin(kind, ctx)
        return k_dot + k @ om + om.T @ k
    if fam == "mh":
        if kind.which == 2:
            return k_dot + k @ w + w.T @ k
        if kind.which == 3:
            return k_dot - L @ k - k @ L.T
        old = k_dot + L.T @ k + k @ L
        return old if kind.which == 1 else old - np.trace(d) * k
    old = k_dot + L.T @ k + k @ L
    if fam == "oldroyd":
        return old
    if fam == "truesdell":
        return old - np.trace(d) * k
    if fam == "jaumann":
        return old - d.T @ k - k @ d
    if fam == "hill":
        N = (kind.m1 - 1.0) * d + kind.m2 * np.trace(d) * EYE
        return old + N.T @ k + k @ N
    jau = k_dot + k @ w + w.T @ k
    trd = np.trace(d)
    corr = 0.5 * (trd * k + np.trace(k) * d - float(np.sum(d * k)) * EYE)
    if fam == "fiala":
        return jau + corr
    return jau + corr - trd * k


def spatial_rate_con(kind: RateKind, ctx: RateContext, tau, tau_dot):
    """Rate of a contravariant field ``tau`` given its particle derivative."""
    t, tagged = _unwrap(tau, Variance.CON_CON, "tau")
    td, _ = _unwrap(tau_dot, Variance.CON_CON, "tau_dot")
    _check_sym(t, "tau")
    out = _con_array(kind, ctx, t, td)
    return Tensor2(out, Variance.CON_CON, Frame.SPATIAL) if tagged else out


def spatial_rate_cov(kind: RateKind, ctx: RateContext, k, k_dot):
    """Rate of a covariant field ``k`` given its particle derivative."""
    a, tagged = _unwrap(k, Variance.COV_COV, "k")
    ad, _ = _unwrap(k_dot, Variance.COV_COV, "k_dot")
    _check_sym(a, "k")
    out = _cov_array(kind, ctx, a, ad)
    return Tensor2(out, Variance.COV_COV, Frame.SPATIAL) if tagged else out


# -----------------------------------------------------------------------------
# Christoffel operators
# -----------------------------------------------------------------------------

def _hill_type(a: float, b: float, name: str) -> ChristoffelOp:
    """``a (gamma_t gamma^-1 eps + eps gamma^-1 gamma_t) + b tr(gamma^-1 gamma_t) eps``."""

    def apply(g, gt, e):
        M = gt @ np.linalg.inv(g)
        return a * (M @ e + e @ M.T) + b * np.trace(M) * e

    def adj(g, gt, th):
        N = np.linalg.solve(g, gt)
        return a * (th @ N.T + N @ th) + b * np.trace(N) * th

    return ChristoffelOp(name, apply, adj)


def _gn_generator(g0: np.ndarray, g: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """``A = U0^{-1} U0_t`` with ``U0 = sqrt(gamma0^{-1} gamma)`` in the gamma0 metric."""
    U0 = sym_function(np.linalg.solve(g0, g), np.sqrt, metric=g0, require_spd=True)
    U0t = sylvester_spd_solve(U0, np.linalg.solve(g0, gt), metric=g0)
    return np.linalg.solve(U0, U0t)


def _skew_metric(M: np.ndarray, g: np.ndarray) -> np.ndarray:
    return 0.5 * (M - np.linalg.solve(g, M.T @ g))


def _xbm_generator(nu, g0: np.ndarray, g: np.ndarray, gt: np.ndarray) -> np.ndarray:
    B = np.linalg.solve(g0, g)
    D = 0.5 * np.linalg.solve(g, gt)
    B2 = B @ B
    n1, n2, n3 = (f(*_invariants(B)) for f in nu)
    return n1 * _skew_metric(B @ D, g) + n2 * _skew_metric(B2 @ D, g) + n3 * _skew_metric(B @ D @ B2, g)


def christoffel_of(kind: RateKind, gamma0=None) -> ChristoffelOp:
    """Christoffel operator of ``kind`` on the manifold of metrics."""
    fam = kind.family
    if fam == "particle":
        raise ConfigError("the particle derivative has no Christoffel operator")
    if fam == "oldroyd" or (fam == "mh" and kind.which == 1):
        return ZERO
    if fam == "jaumann" or (fam == "mh" and kind.which == 2):
        return ROUGEE
    if fam == "truesdell" or (fam == "mh" and kind.which == 4):
        return _hill_type(0.0, -0.5, "truesdell")
    if fam == "mh":
        return _hill_type(-1.0, 0.0, "mh3")
    if fam == "hill":
        return _hill_type(0.5 * (kind.m1 - 1.0), kind.m2, kind.name)
    if fam == "fiala":
        return EBIN
    if fam == "fiala-truesdell":
        return ChristoffelOp(
            "fiala-truesdell",
            lambda g, gt, e: ebin_gamma(g, gt, e) - 0.5 * np.trace(np.linalg.solve(g, gt)) * e,
            lambda g, gt, th: ebin_gamma_adjoint(g, gt, th) - 0.5 * np.trace(np.linalg.solve(g, gt)) * th,
        )
    if gamma0 is None:
        raise MissingReference()
    g0 = np.asarray(getattr(gamma0, "data", gamma0), dtype=float)
    if fam == "green-naghdi":
        def gn(g, gt, e):
            A = _gn_generator(g0, g, gt)
            return -e @ A - A.T @ e

        def gn_adj(g, gt, th):
            A = _gn_generator(g0, g, gt)
            return -(A @ th + th @ A.T)

        return ChristoffelOp("green-naghdi", gn, gn_adj)

    nu = kind.nu

    def xb(g, gt, e):
        Lam = _xbm_generator(nu, g0, g, gt)
        return ROUGEE(g, gt, e) + e @ Lam + Lam.T @ e

    def xb_adj(g, gt, th):
        Lam = _xbm_generator(nu, g0, g, gt)
        return ROUGEE.adjoint(g, gt, th) + Lam @ th + th @ Lam.T

    return ChristoffelOp(kind.name, xb, xb_adj)


def rate_via_met(kind: RateKind, ctx: RateContext, field, field_dot, variance: Variance):
    """Rate computed by pull-back, covariant derivative on metrics, push-forward."""
    fam_gamma0 = ctx.gamma0 if kind.needs_reference else None
    if kind.needs_reference:
        ctx.require_gamma0()
    Gam = christoffel_of(kind, fam_gamma0)
    a, tagged = _unwrap(field, variance, "field")
    ad, _ = _unwrap(field_dot, variance, "field_dot")
    st = ctx.state
    F, Ft = st.F, st.F_t
    Fi = np.linalg.inv(F)
    g, gt = st.gamma, st.gamma_t
    if variance is Variance.COV_COV:
        eps = F.T @ a @ F
        eps_t = Ft.T @ a @ F + F.T @ ad @ F + F.T @ a @ Ft
        D = eps_t + Gam(g, gt, eps)
        out = Fi.T @ D @ Fi
    elif variance is Variance.CON_CON:
        theta = Fi @ a @ Fi.T
        Fi_t = -Fi @ Ft @ Fi
        theta_t = Fi_t @ a @ Fi.T + Fi @ ad @ Fi.T + Fi @ a @ Fi_t.T
        D = theta_t - Gam.adjoint(g, gt, theta)
        out = F @ D @ F.T
    else:
        raise VarianceMismatch("rates are defined for CovCov and ConCon fields only")
    return Tensor2(out, variance, Frame.SPATIAL) if tagged else out
