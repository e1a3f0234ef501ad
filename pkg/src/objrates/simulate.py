"""Material-point integration of rate-form constitutive laws.

Every rate has the form ``rate(tau, tau_dot) = tau_dot + rate(tau, 0)``,
so a law ``rate(tau) = rhs`` is advanced with ``tau_dot = rhs - rate(tau, 0)``
by classical fixed-step RK4. The stress is symmetrized after each step and
the step is rejected if the asymmetry it removed exceeds ``SYM_DRIFT_MAX``.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import AsymmetricInput, ConfigError, StepRejected
from .kinematics import AffineMotionPath, MotionPath, MotionState, motion_state, superpose
from .rates import RateContext, RateKind, spatial_rate_con
from .tensor_core import sym

SYM_DRIFT_MAX = 1e-8
VOIGT = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
VOIGT_LABELS = ("11", "22", "33", "12", "13", "23")


def to_voigt(a: np.ndarray) -> np.ndarray:
    return np.array([a[i, j] for i, j in VOIGT])


@dataclass(frozen=True)
class HypoLaw:
    """Isotropic hypo-elastic law ``rate(tau) = lam tr(d - dp) I + 2 mu (d - dp)``.

    ``dp`` optionally prescribes a plastic stretching history ``t -> dp(t)``.
    """

    lam: float
    mu: float
    dp: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        # positive semidefinite as a 6x6 map on symmetric tensors
        if self.mu < 0 or 3 * self.lam + 2 * self.mu < 0:
            raise ConfigError("hypo-elastic moduli must give a positive semidefinite H")

    def rhs(self, state: MotionState) -> np.ndarray:
        d = state.d_hat
        if self.dp is not None:
            d = d - np.asarray(self.dp(state.t))
        return self.lam * np.trace(d) * np.eye(3) + 2.0 * self.mu * d


@dataclass(frozen=True)
class MaxwellLaw:
    """``sigma + lambda_relax rate(sigma) = 2 eta d``."""

    eta: float
    lambda_relax: float

    def __post_init__(self):
        if self.eta <= 0 or self.lambda_relax < 0:
            raise ConfigError("Maxwell law needs eta > 0 and lambda_relax >= 0")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    stress: np.ndarray
    kind: str
    stats: dict = field(default_factory=dict)

    def component(self, i: int, j: int) -> np.ndarray:
        return self.stress[:, i, j]

    def write_csv(self, path, metadata: dict | None = None) -> tuple[Path, Path]:
        """Write ``t, F(9), tau(6 Voigt)`` rows plus a JSON sidecar."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = ["t [T]"] + [f"F_{i + 1}{j + 1} [1]" for i in range(3) for j in range(3)]
        header += [f"tau_{v} [S]" for v in VOIGT_LABELS]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t, st, s in zip(self.times, self.states, self.stress):
                row = [t, *st.F.ravel(), *to_voigt(s)]
                w.writerow([fmt(x) for x in row])
        meta = {"kind": self.kind, "stats": self.stats, "version": __version__}
        meta.update(metadata or {})
        side = path.with_suffix(".json")
        side.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
        return path, side


def fmt(x: float) -> str:
    """Fixed 17-significant-digit text; ``-0.0`` normalized to ``0.0``."""
    return f"{float(x) + 0.0:.16e}"


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON config, ignoring the output location."""
    body = {k: v for k, v in config.items() if k != "out"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def _step_count(t_end: float, dt: float) -> int:
    if dt <= 0 or t_end < 0:
        raise ConfigError("dt must be positive and t_end non-negative")
    n = round(t_end / dt)
    if abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigError("t_end must be an integer multiple of dt")
    return int(n)


def _integrate(f: Callable[[MotionState, np.ndarray], np.ndarray], motion: MotionPath, y0: np.ndarray,
               t_end: float, dt: float, X, kind: str, closed: Callable | None = None) -> Trajectory:
    n = _step_count(t_end, dt)
    times = dt * np.arange(n + 1)
    st = motion_state(motion, X, 0.0)
    states = [st]
    y = sym(np.asarray(y0, dtype=float)) if closed is None else closed(st)
    out = [y]
    drift = 0.0
    for i in range(n):
        t = times[i]
        mid = motion_state(motion, X, t + 0.5 * dt)
        end = motion_state(motion, X, times[i + 1])
        if closed is not None:
            y = closed(end)
        else:
            try:
                k1 = f(st, y)
                k2 = f(mid, y + 0.5 * dt * k1)
                k3 = f(mid, y + 0.5 * dt * k2)
                k4 = f(end, y + dt * k3)
            except AsymmetricInput:
                raise StepRejected(f"asymmetric RK4 stage at t={times[i]:.6g}") from None
            y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            asym = float(np.linalg.norm(y - y.T) / (1.0 + np.linalg.norm(y)))
            if asym > SYM_DRIFT_MAX:
                raise StepRejected(f"symmetry drift {asym:.3e} at t={times[i + 1]:.6g}")
            drift = max(drift, asym)
            y = sym(y)
        st = end
        states.append(st)
        out.append(y)
    stats = {"integrator": "rk4" if closed is None else "closed-form", "steps": n, "dt": dt,
             "t_end": t_end, "max_symmetry_drift": drift}
    return Trajectory(times, states, np.array(out), kind, stats)


def _ctx_factory(kind: RateKind, motion: MotionPath, gamma0):
    if kind.needs_reference:
        g0 = motion.gamma0 if gamma0 is None else np.asarray(gamma0, dtype=float)
    else:
        g0 = None
    return lambda st: RateContext(st, g0)


def integrate_hypo(law: HypoLaw, kind: RateKind, motion: MotionPath, t_end: float, dt: float,
                   tau0=None, gamma0=None, X=None) -> Trajectory:
    """Advance ``rate(tau) = H:(d - dp)`` along ``motion`` with RK4."""
    ctx = _ctx_factory(kind, motion, gamma0)
    zero = np.zeros((3, 3))

    def f(st, tau):
        return law.rhs(st) - spatial_rate_con(kind, ctx(st), tau, zero)

    tau0 = np.zeros((3, 3)) if tau0 is None else tau0
    return _integrate(f, motion, tau0, t_end, dt, X, kind.name)


def integrate_maxwell(law: MaxwellLaw, kind: RateKind, motion: MotionPath, t_end: float, dt: float,
                      sigma0=None, gamma0=None, X=None) -> Trajectory:
    """Advance ``sigma + lambda rate(sigma) = 2 eta d``; ``lambda = 0`` is Newtonian."""
    if law.lambda_relax == 0.0:
        return _integrate(None, motion, np.zeros((3, 3)), t_end, dt, X, kind.name,
                          closed=lambda st: 2.0 * law.eta * st.d_hat)
    ctx = _ctx_factory(kind, motion, gamma0)
    zero = np.zeros((3, 3))
    lam = law.lambda_relax

    def f(st, sig):
        return (2.0 * law.eta * st.d_hat - sig) / lam - spatial_rate_con(kind, ctx(st), sig, zero)

    sigma0 = np.zeros((3, 3)) if sigma0 is None else sigma0
    return _integrate(f, motion, sigma0, t_end, dt, X, kind.name)


def frame_indifference_residual(integrate: Callable[[MotionPath, np.ndarray], Trajectory],
                                motion: MotionPath, rigid: AffineMotionPath, tau0: np.ndarray) -> float:
    """Max residual between the run under ``g*p`` and the push-forward of the run under ``p``."""
    base = integrate(motion, tau0)
    Q0 = rigid.matrix(0.0)
    moved = integrate(superpose(motion, rigid), Q0 @ tau0 @ Q0.T)
    worst = 0.0
    for t, a, b in zip(base.times, base.stress, moved.stress):
        Q = rigid.matrix(t)
        rhs = Q @ a @ Q.T
        worst = max(worst, float(np.linalg.norm(b - rhs) / (1.0 + np.linalg.norm(rhs))))
    return worst


@dataclass
class ConvergenceResult:
    dts: list
    orders: list

    @property
    def order(self) -> float:
        return float(np.mean(self.orders))


def convergence_study(op: Callable[[float], np.ndarray], dts: Sequence[float]) -> ConvergenceResult:
    """Richardson order estimate from results at geometrically refined steps."""
    dts = [float(d) for d in dts]
    if len(dts) < 3:
        raise ConfigError("convergence study needs at least three step sizes")
    ratios = [dts[i] / dts[i + 1] for i in range(len(dts) - 1)]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios) or ratios[0] <= 1:
        raise ConfigError("step sizes must decrease in geometric progression")
    ys = [np.asarray(op(d), dtype=float) for d in dts]
    orders = []
    for i in range(len(ys) - 2):
        e1 = np.linalg.norm(ys[i] - ys[i + 1])
        e2 = np.linalg.norm(ys[i + 1] - ys[i + 2])
        orders.append(math.log(e1 / e2) / math.log(ratios[0]) if e2 > 0 and e1 > 0 else math.inf)
    return ConvergenceResult(dts, orders)


def is_monotone(x: np.ndarray, tol: float = 0.0) -> bool:
    dx = np.diff(np.asarray(x, dtype=float))
    return bool(np.all(dx >= -tol) or np.all(dx <= tol))
