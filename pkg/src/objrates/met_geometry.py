"""Pointwise and discrete-body geometry of the manifold of metrics.

Points are SPD CovCov material tensors ``gamma``; tangent vectors are
symmetric CovCov tensors ``eps``; cotangent densities are symmetric ConCon
tensors ``theta`` paired through ``theta:eps``. Everything here works on
plain 3x3 arrays (or stacks of them for bodies).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonSpdMetric
from .tensor_core import is_spd, sym, sym_function

Bilinear = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

# basis of symmetric 3x3 matrices with the pairing weights used by the
# basis-contraction adjoint (off-diagonal elements appear twice in a:b)
_SYM_BASIS = []
for _i in range(3):
    for _j in range(_i, 3):
        _e = np.zeros((3, 3))
        _e[_i, _j] = _e[_j, _i] = 1.0
        _SYM_BASIS.append((_i, _j, _e))


@dataclass(frozen=True)
class DiscreteBody:
    """Finite set of material points with mass weights and reference metrics."""

    points: np.ndarray
    mu: np.ndarray
    gamma0: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        g0 = np.asarray(self.gamma0, dtype=float)
        if g0.shape == (3, 3):
            g0 = np.broadcast_to(g0, (len(pts), 3, 3)).copy()
        if len(mu) != len(pts) or g0.shape != (len(pts), 3, 3):
            raise ValueError("points, mu and gamma0 must have matching lengths")
        if np.any(mu <= 0):
            raise ValueError("mass weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma0", g0)

    def __len__(self):
        return len(self.points)

    @classmethod
    def grid(cls, n_side: int = 2, spacing: float = 1.0, gamma0=None, mu=None):
        """Regular ``n_side**3`` lattice with unit weights by default."""
        ax = spacing * np.arange(n_side, dtype=float)
        pts = np.array(np.meshgrid(ax, ax, ax, indexing="ij")).reshape(3, -1).T
        mu = np.ones(len(pts)) if mu is None else mu
        return cls(pts, mu, np.eye(3) if gamma0 is None else gamma0)


# -----------------------------------------------------------------------------
# inner products
# -----------------------------------------------------------------------------

def _stack(a, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.broadcast_to(a, (n, 3, 3)) if a.shape == (3, 3) else a


def _check_metrics(gam: np.ndarray):
    for g in gam:
        if not is_spd(g):
            raise NonSpdMetric("metric is not SPD at some point")


def pointwise_rougee(gamma, eps1, eps2) -> np.ndarray:
    """``tr(gamma^{-1} eps1 gamma^{-1} eps2)`` for stacks of matrices."""
    gi = np.linalg.inv(gamma)
    return np.einsum("...ij,...jk,...kl,...li->...", gi, eps1, gi, eps2)


def ebin_weights(body: DiscreteBody, gamma) -> np.ndarray:
    """``mu_i sqrt(det gamma / det gamma0)``: Riemannian volume weights in the chart."""
    gam = _stack(gamma, len(body))
    return body.mu * np.sqrt(np.linalg.det(gam) / np.linalg.det(body.gamma0))


def rougee_inner(body: DiscreteBody, gamma, eps1, eps2) -> float:
    n = len(body)
    gam = _stack(gamma, n)
    _check_metrics(gam)
    vals = pointwise_rougee(gam, _stack(eps1, n), _stack(eps2, n))
    return float(np.sum(vals * body.mu))


def ebin_inner(body: DiscreteBody, gamma, eps1, eps2) -> float:
    n = len(body)
    gam = _stack(gamma, n)
    _check_metrics(gam)
    vals = pointwise_rougee(gam, _stack(eps1, n), _stack(eps2, n))
    return float(np.sum(vals * ebin_weights(body, gam)))


# -----------------------------------------------------------------------------
# Christoffel operators
# -----------------------------------------------------------------------------

def christoffel_adjoint_basis(Gamma: Bilinear, gamma, gamma_t, theta) -> np.ndarray:
    """``Gamma*`` from ``theta:Gamma(eps) = Gamma*(theta):eps`` on the symmetric basis."""
    out = np.zeros((3, 3))
    for i, j, e in _SYM_BASIS:
        v = float(np.sum(theta * Gamma(gamma, gamma_t, e)))
        out[i, j] = out[j, i] = v if i == j else 0.5 * v
    return out


@dataclass(frozen=True)
class ChristoffelOp:
    """Bilinear ``Gamma_gamma(gamma_t, eps)`` and its adjoint on densities.

    ``adjoint_fn`` is the closed form when known; otherwise the adjoint is
    obtained by contracting against the symmetric basis.
    """

    name: str
    apply: Bilinear
    adjoint_fn: Bilinear | None = None

    def __call__(self, gamma, gamma_t, eps):
        return self.apply(gamma, gamma_t, eps)

    def adjoint(self, gamma, gamma_t, theta):
        if self.adjoint_fn is not None:
            return self.adjoint_fn(gamma, gamma_t, theta)
        return christoffel_adjoint_basis(self.apply, gamma, gamma_t, theta)


def rougee_gamma(gamma, gamma_t, eps):
    M = gamma_t @ np.linalg.inv(gamma)
    return -0.5 * (M @ eps + eps @ M.T)


def rougee_gamma_adjoint(gamma, gamma_t, theta):
    N = np.linalg.solve(gamma, gamma_t)
    return -0.5 * (theta @ N.T + N @ theta)


def ebin_gamma(gamma, gamma_t, eps):
    gi = np.linalg.inv(gamma)
    M = gamma_t @ gi
    return -0.5 * (
        M @ eps + eps @ M.T
        + 0.5 * np.trace(gi @ gamma_t @ gi @ eps) * gamma
        - 0.5 * np.trace(gi @ gamma_t) * eps
        - 0.5 * np.trace(gi @ eps) * gamma_t
    )


def ebin_gamma_adjoint(gamma, gamma_t, theta):
    gi = np.linalg.inv(gamma)
    N = gi @ gamma_t
    return (
        -0.5 * (theta @ N.T + N @ theta)
        - 0.25 * float(np.sum(theta * gamma)) * N @ gi
        + 0.25 * np.trace(N) * theta
        + 0.25 * float(np.sum(theta * gamma_t)) * gi
    )


ROUGEE = ChristoffelOp("rougee", rougee_gamma, rougee_gamma_adjoint)
EBIN = ChristoffelOp("ebin", ebin_gamma, ebin_gamma_adjoint)
ZERO = ChristoffelOp("zero", lambda g, gt, e: np.zeros((3, 3)), lambda g, gt, th: np.zeros((3, 3)))


def christoffel_adjoint(gamma, gamma_t, theta, Gamma: ChristoffelOp) -> np.ndarray:
    return Gamma.adjoint(gamma, gamma_t, theta)


def cov_deriv(gamma, gamma_t, eps, eps_t, Gamma: ChristoffelOp) -> np.ndarray:
    """``D_t eps = d_t eps + Gamma(gamma_t, eps)``."""
    return np.asarray(eps_t) + Gamma(gamma, gamma_t, eps)


def cov_deriv_rougee(gamma, gamma_t, eps, eps_t) -> np.ndarray:
    _require_spd(gamma)
    return cov_deriv(gamma, gamma_t, eps, eps_t, ROUGEE)


def cov_deriv_ebin(gamma, gamma_t, eps, eps_t) -> np.ndarray:
    _require_spd(gamma)
    return cov_deriv(gamma, gamma_t, eps, eps_t, EBIN)


def dual_cov_deriv(gamma, gamma_t, theta, theta_t, Gamma: ChristoffelOp) -> np.ndarray:
    """``D_t theta = d_t theta - Gamma*(gamma_t, theta)``."""
    return np.asarray(theta_t) - Gamma.adjoint(gamma, gamma_t, theta)


def volume_variant(gamma, gamma_t, sigma_body, D_t_sigma) -> np.ndarray:
    """Derivative for densities relative to the volume measure."""
    return np.asarray(D_t_sigma) + 0.5 * np.trace(np.linalg.solve(gamma, gamma_t)) * np.asarray(sigma_body)


def _require_spd(gamma):
    if not is_spd(gamma):
        raise NonSpdMetric("gamma is not SPD")


# -----------------------------------------------------------------------------
# geodesics, Exp, Log, curvature
# -----------------------------------------------------------------------------

def exp_map(gamma0, eps) -> np.ndarray:
    """``Exp_{gamma0}(eps) = gamma0 exp(gamma0^{-1} eps)``."""
    g0 = np.asarray(gamma0, dtype=float)
    M = np.linalg.solve(g0, np.asarray(eps, dtype=float))
    return sym(g0 @ sym_function(M, np.exp, metric=g0))


def geodesic(gamma0, eps0, t: float) -> np.ndarray:
    return exp_map(gamma0, t * np.asarray(eps0, dtype=float))


def log_map(gamma0, gamma) -> np.ndarray:
    """``Log_{gamma0}(gamma) = gamma0 log(gamma0^{-1} gamma)``."""
    g0 = np.asarray(gamma0, dtype=float)
    M = np.linalg.solve(g0, np.asarray(gamma, dtype=float))
    return sym(g0 @ sym_function(M, np.log, metric=g0, require_spd=True))


def curvature_rougee(gamma, eps_s, eps_t, eps) -> np.ndarray:
    """``R(d_s, d_t) eps = 1/4 gamma [[gamma^-1 eps_t, gamma^-1 eps_s], gamma^-1 eps]``."""
    A = np.linalg.solve(gamma, eps_t)
    B = np.linalg.solve(gamma, eps_s)
    E = np.linalg.solve(gamma, eps)
    C = A @ B - B @ A
    return 0.25 * gamma @ (C @ E - E @ C)


# -----------------------------------------------------------------------------
# volumetric / isochoric product structure
# -----------------------------------------------------------------------------

def product_split(gamma, eps) -> tuple[np.ndarray, np.ndarray]:
    """Split ``eps`` into a part along ``gamma`` and a ``gamma``-traceless part."""
    gamma = np.asarray(gamma, dtype=float)
    eps = np.asarray(eps, dtype=float)
    sph = np.trace(np.linalg.solve(gamma, eps)) / 3.0 * gamma
    return sph, eps - sph


def psi_mu(nu_ratio, gamma_iso) -> np.ndarray:
    """``Psi_mu(nu, gamma) = (nu/mu)^{2/3} gamma`` (``nu_ratio`` is ``nu/mu``)."""
    r = np.asarray(nu_ratio, dtype=float)
    if np.any(r <= 0):
        raise ValueError("volume ratio must be positive")
    g = np.asarray(gamma_iso, dtype=float)
    return r[..., None, None] ** (2.0 / 3.0) * g if r.ndim else r ** (2.0 / 3.0) * g


def vol_inner(body: DiscreteBody, nu, omega1, omega2) -> float:
    """``4/3 sum (omega1/nu)(omega2/nu) mu`` on scalar density fields."""
    nu = np.asarray(nu, dtype=float)
    return float(4.0 / 3.0 * np.sum((np.asarray(omega1) / nu) * (np.asarray(omega2) / nu) * body.mu))
