import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from objrates.errors import ConfigError, OutOfRange, SingularF, VarianceMismatch, ZeroDensity
from objrates.kinematics import (
    ClosedFormMotion,
    RigidMotionPath,
    hencky_strain,
    lie_derivative,
    mass_density,
    motion_from_spec,
    motion_state,
    pull_back,
    pull_back_covector,
    pull_back_vector,
    push_forward,
    push_forward_covector,
    push_forward_vector,
    sample_motion,
    state_from_gradient,
    stresses,
    superpose,
)
from objrates.tensor_core import Frame, Tensor2, Variance, sym

from conftest import gl3, mat3, spd3, sym3

S, M = Frame.SPATIAL, Frame.MATERIAL
ALL_VARIANCES = list(Variance)

MOTIONS = [
    ClosedFormMotion("simple_shear", {"rate": 1.3}),
    ClosedFormMotion("dilation", {"alpha": 0.4}),
    ClosedFormMotion("uniaxial", {"rate": 0.7, "nu": 0.25}),
    ClosedFormMotion("rotation_stretch", F0=expm(sym(np.arange(9.0).reshape(3, 3)) / 20)),
    ClosedFormMotion("affine", {"generator": [[0.1, 0.4, -0.2], [0.0, -0.3, 0.5], [0.2, 0.1, 0.2]]}),
    ClosedFormMotion("rigid", {"axis_rate": [0.2, -0.7, 1.1]}),
]


def st_at(m, t=0.37):
    return motion_state(m, np.array([0.2, -0.4, 0.9]), t)


# -- pull-back / push-forward ------------------------------------------------------

@pytest.mark.parametrize("v", ALL_VARIANCES)
def test_pull_back_identity_gradient(v, rng):
    a = rng.standard_normal((3, 3))
    out = pull_back(np.eye(3), Tensor2(a, v, S))
    assert out.frame is M and out.variance is v
    assert np.array_equal(out.data, a)


def test_pull_back_of_q_with_scaling():
    q = Tensor2(np.eye(3), Variance.COV_COV, S)
    assert np.allclose(pull_back(2 * np.eye(3), q).data, 4 * np.eye(3))


def test_pull_back_formulas_explicit(rng):
    F = expm(0.3 * rng.standard_normal((3, 3)))
    Fi = np.linalg.inv(F)
    a = rng.standard_normal((3, 3))
    expect = {
        Variance.COV_COV: F.T @ a @ F,
        Variance.CON_CON: Fi @ a @ Fi.T,
        Variance.MIX_UP_DOWN: Fi @ a @ F,
        Variance.MIX_DOWN_UP: F.T @ a @ Fi.T,
    }
    for v, e in expect.items():
        assert np.allclose(pull_back(F, Tensor2(a, v, S)).data, e, rtol=0, atol=1e-13)


@given(gl3(), mat3, st.sampled_from(ALL_VARIANCES))
def test_push_pull_roundtrip(F, a, v):
    t = Tensor2(a, v, S)
    back = push_forward(F, pull_back(F, t))
    assert np.linalg.norm(back.data - a) <= 1e-13 * max(1.0, np.linalg.norm(a)) * np.linalg.cond(F) ** 2


@given(gl3(), sym3(), sym3())
def test_contraction_commutes_with_pull_back(F, tau, k):
    T = Tensor2(tau, Variance.CON_CON, S)
    K = Tensor2(k, Variance.COV_COV, S)
    lhs = pull_back(F, T).ddot(pull_back(F, K))
    assert abs(lhs - T.ddot(K)) <= 1e-11 * (1 + abs(T.ddot(K))) * np.linalg.cond(F)


def test_vector_and_covector_transfer(rng):
    F = expm(0.4 * rng.standard_normal((3, 3)))
    w, beta = rng.standard_normal(3), rng.standard_normal(3)
    W, B = pull_back_vector(F, w), pull_back_covector(F, beta)
    assert np.allclose(push_forward_vector(F, W), w)
    assert np.allclose(push_forward_covector(F, B), beta)
    # pairing is invariant
    assert np.isclose(B @ W, beta @ w)


def test_transfer_rejects_bad_inputs():
    t = Tensor2(np.eye(3), Variance.COV_COV, M)
    with pytest.raises(VarianceMismatch):
        pull_back(np.eye(3), t)
    with pytest.raises(VarianceMismatch):
        push_forward(np.eye(3), Tensor2(np.eye(3), Variance.COV_COV, S))
    with pytest.raises(SingularF):
        pull_back(np.diag([1.0, 1.0, -1.0]), Tensor2(np.eye(3), Variance.COV_COV, S))


# -- Lie derivative ------------------------------------------------------------------

def test_lie_derivative_of_metric_is_twice_stretching(rng):
    L = rng.standard_normal((3, 3))
    q = Tensor2(np.eye(3), Variance.COV_COV, S)
    assert np.allclose(lie_derivative(L, q).data, 2 * sym(L))


def test_lie_derivative_zero_gradient_is_transport(rng):
    a, tr = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    for v in ALL_VARIANCES:
        out = lie_derivative(np.zeros((3, 3)), Tensor2(a, v, S), Tensor2(tr, v, S))
        assert np.array_equal(out.data, tr)


@pytest.mark.parametrize("v", ALL_VARIANCES)
def test_lie_derivative_matches_flow_derivative(v, rng):
    # homogeneous field frozen along the flow x -> expm(sL) x: L_u t = d/ds (phi_s)^* t at s=0
    L = rng.standard_normal((3, 3))
    a = rng.standard_normal((3, 3))
    t = Tensor2(a, v, S)
    h = 1e-4
    fd = (pull_back(expm(h * L), t).data - pull_back(expm(-h * L), t).data) / (2 * h)
    assert np.linalg.norm(lie_derivative(L, t).data - fd) <= 1e-7 * (1 + np.linalg.norm(fd))


def test_lie_derivative_covector(rng):
    L, beta = rng.standard_normal((3, 3)), rng.standard_normal(3)
    h = 1e-4
    fd = (pull_back_covector(expm(h * L), beta) - pull_back_covector(expm(-h * L), beta)) / (2 * h)
    assert np.allclose(lie_derivative(L, beta), fd, atol=1e-7)


def test_lie_derivative_product_rule(rng):
    L = rng.standard_normal((3, 3))
    tau = Tensor2(sym(rng.standard_normal((3, 3))), Variance.CON_CON, S)
    k = Tensor2(sym(rng.standard_normal((3, 3))), Variance.COV_COV, S)
    # scalar tau:k is a function; for a homogeneous field its Lie derivative is zero transport
    lhs = lie_derivative(L, tau).ddot(k) + tau.ddot(lie_derivative(L, k))
    h = 1e-4
    fd = (pull_back(expm(h * L), tau).ddot(pull_back(expm(h * L), k))
          - pull_back(expm(-h * L), tau).ddot(pull_back(expm(-h * L), k))) / (2 * h)
    assert abs(lhs) <= 1e-12 * (1 + np.linalg.norm(L) ** 2)
    assert abs(fd) <= 1e-8


def test_lie_derivative_rejects_wrong_tags():
    with pytest.raises(VarianceMismatch):
        lie_derivative(Tensor2(np.eye(3), Variance.COV_COV, S), Tensor2(np.eye(3), Variance.COV_COV, S))
    with pytest.raises(VarianceMismatch):
        lie_derivative(np.eye(3), np.ones(4))


# -- motion states --------------------------------------------------------------------

def test_rigid_motion_does_not_strain():
    m = ClosedFormMotion("rigid", {"axis_rate": [0.3, 0.1, -0.8]})
    for t in (0.0, 0.5, 2.0):
        s = st_at(m, t)
        Q = expm(t * np.array([[0, 0.8, 0.1], [-0.8, 0, -0.3], [-0.1, 0.3, 0]]))
        assert np.allclose(s.F, Q)
        assert np.abs(s.d_hat).max() <= 1e-14
        assert np.abs(s.gamma_t).max() <= 1e-14
        assert np.allclose(s.w_hat, s.F_t @ np.linalg.inv(s.F), atol=1e-14)


def test_dilation_closed_form():
    a = 0.4
    s = st_at(ClosedFormMotion("dilation", {"alpha": a}), 0.9)
    assert np.allclose(s.d_hat, a * np.eye(3), atol=1e-14)
    assert np.allclose(s.gamma_t, 2 * a * s.gamma, atol=1e-13)


@pytest.mark.parametrize("m", MOTIONS, ids=lambda m: m.name)
def test_gamma_t_is_twice_pulled_back_stretching(m):
    s = st_at(m)
    pd = pull_back(s.F, Tensor2(s.d, Variance.COV_COV, S)).data
    assert np.linalg.norm(s.gamma_t - 2 * pd) <= 1e-12 * (1 + np.linalg.norm(s.gamma_t))
    h = 1e-5
    fd = (st_at(m, s.t + h).gamma - st_at(m, s.t - h).gamma) / (2 * h)
    assert np.linalg.norm(fd - s.gamma_t) <= 1e-8 * (1 + np.linalg.norm(s.gamma))


@pytest.mark.parametrize("m", MOTIONS, ids=lambda m: m.name)
def test_cauchy_green_relations(m):
    s = st_at(m)
    pb = pull_back(s.F, Tensor2(s.b, Variance.CON_CON, S)).data
    assert np.linalg.norm(pb - np.linalg.inv(s.gamma0)) <= 1e-12 * np.linalg.norm(pb)
    assert np.linalg.norm(s.F0.T @ s.C @ s.F0 - s.gamma) <= 1e-12 * np.linalg.norm(s.gamma)


@pytest.mark.parametrize("m", MOTIONS, ids=lambda m: m.name)
def test_rigid_superposition_preserves_metric_and_transforms_gradient(m):
    g = RigidMotionPath.spinning([0.5, -1.0, 0.3], q0=expm(np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]])),
                                 c1=(1.0, 2.0, 0.0))
    for t in (0.0, 0.61):
        a, b = st_at(m, t), st_at(superpose(m, g), t)
        assert np.linalg.norm(b.gamma - a.gamma) <= 1e-13 * np.linalg.norm(a.gamma)
        Q, Om = g.matrix(t), g.spin(t)
        assert np.allclose(b.grad_u, Q @ a.grad_u @ Q.T + Om, atol=1e-12)
        assert np.allclose(Om, -Om.T, atol=1e-14)
        assert np.allclose(b.d_hat, Q @ a.d_hat @ Q.T, atol=1e-12)


def test_spin_is_not_objective():
    m = MOTIONS[0]
    g = RigidMotionPath.spinning([0.0, 0.0, 1.0])
    a, b = st_at(m), st_at(superpose(m, g))
    Q = g.matrix(a.t)
    assert np.linalg.norm(b.w_hat - Q @ a.w_hat @ Q.T) > 0.5


def test_rigid_path_validation():
    with pytest.raises(ValueError):
        RigidMotionPath("bad", 2 * np.eye(3))
    with pytest.raises(ValueError):
        RigidMotionPath("bad", np.eye(3), np.diag([1.0, 0.0, 0.0]))


def test_velocity_matches_position_derivative():
    g = RigidMotionPath.spinning([0.1, 0.2, 0.3], c0=(1.0, 0.0, 0.0), c1=(0.0, 1.0, 0.5))
    m = superpose(ClosedFormMotion("simple_shear", c1=(0.2, 0, 0)), g)
    X, t, h = np.array([0.3, 0.2, -1.0]), 0.8, 1e-5
    fd = (m.position(t + h, X) - m.position(t - h, X)) / (2 * h)
    assert np.allclose(m.velocity(t, X), fd, atol=1e-9)


# -- density --------------------------------------------------------------------------

def test_density_examples():
    assert mass_density(state_from_gradient(np.eye(3), np.zeros((3, 3))), 2.5) == 2.5
    assert mass_density(state_from_gradient(2 * np.eye(3), np.zeros((3, 3))), 2.0) == pytest.approx(0.25, rel=1e-15)


@pytest.mark.parametrize("m", MOTIONS, ids=lambda m: m.name)
def test_mass_conservation(m):
    # homogeneous motion: grad rho = 0, so rho_t + rho div u = 0
    t, h = 0.45, 1e-5
    s = st_at(m, t)
    rho_t = (st_at(m, t + h).rho - st_at(m, t - h).rho) / (2 * h)
    assert abs(rho_t + s.rho * np.trace(s.grad_u)) <= 1e-8


def test_singular_state_rejected():
    with pytest.raises(SingularF):
        state_from_gradient(np.diag([1.0, 0.0, 1.0]), np.zeros((3, 3)))


# -- Hencky strain --------------------------------------------------------------------

def test_hencky_at_reference_is_zero():
    m = MOTIONS[3]
    s = st_at(m, 0.0)
    assert np.abs(hencky_strain(s)).max() <= 1e-13


def test_hencky_dilation():
    a, t = 0.4, 1.25
    g0 = spd_like = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 1.5]])
    F0 = np.linalg.cholesky(spd_like).T
    s = st_at(ClosedFormMotion("dilation", {"alpha": a}, F0=F0), t)
    assert np.allclose(hencky_strain(s), a * t * g0, atol=1e-13)


def test_hencky_uniaxial_principal_value():
    lam = 1.7
    F = np.diag([lam, 1.0, 1.0])
    s = state_from_gradient(F, np.zeros((3, 3)))
    E = hencky_strain(s)
    w = np.linalg.eigvalsh(E)
    assert np.allclose(sorted(w), sorted([np.log(lam), 0.0, 0.0]), atol=1e-14)


@given(gl3(), spd3())
def test_hencky_is_reference_pull_back_of_spatial_log(Fphi, g0):
    F0 = np.linalg.cholesky(g0).T
    s = state_from_gradient(Fphi @ F0, np.zeros((3, 3)), F0)
    Cv, Q = np.linalg.eigh(s.C)
    E_ref = 0.5 * Q @ np.diag(np.log(Cv)) @ Q.T
    assert np.linalg.norm(hencky_strain(s) - F0.T @ E_ref @ F0) <= 1e-10 * (1 + np.linalg.norm(E_ref))


# -- stress measures --------------------------------------------------------------------

def test_stress_at_reference():
    s = state_from_gradient(np.eye(3), np.zeros((3, 3)), mu_density=2.0)
    sig = np.diag([1.0, 2.0, 3.0])
    assert np.allclose(stresses(s, sig).theta, sig / 2.0)


def test_hydrostatic_theta_under_rigid_motion():
    pi, rho0 = 3.0, 1.5
    m = ClosedFormMotion("rigid", {"axis_rate": [1.0, 0.2, 0.0]}, mu_density=rho0)
    s = st_at(m, 0.7)
    th = stresses(s, -pi * np.eye(3)).theta
    assert np.allclose(th, -(pi / s.rho) * np.linalg.inv(s.gamma), atol=1e-14)


def test_virtual_work_pairing(rng):
    F = expm(0.4 * rng.standard_normal((3, 3)))
    if np.linalg.det(F) <= 0:
        F[:, 0] *= -1
    s = state_from_gradient(F, np.zeros((3, 3)), mu_density=1.7)
    sig = sym(rng.standard_normal((3, 3)))
    k = sym(rng.standard_normal((3, 3)))
    ss = stresses(s, sig)
    pk = pull_back(F, Tensor2(k, Variance.COV_COV, S)).data
    # integrand per unit reference chart volume: theta:(p*k) mu = (sigma/rho):k mu
    assert np.isclose(np.tensordot(ss.theta, pk) * 1.7, np.tensordot(sig / s.rho, k) * 1.7, rtol=1e-12)
    assert np.allclose(ss.noll_sigma, s.rho * ss.theta)
    assert np.allclose(ss.S, s.F0 @ ss.theta @ s.F0.T)


def test_zero_density_rejected():
    s = state_from_gradient(np.eye(3), np.zeros((3, 3)), mu_density=0.0)
    with pytest.raises(ZeroDensity):
        stresses(s, np.eye(3))


# -- sampled motions and specs ---------------------------------------------------------

def test_sampled_motion_accuracy_and_range():
    m = ClosedFormMotion("rotation_stretch")
    times = np.linspace(0.0, 1.0, 257)
    sm = sample_motion(m, times)
    for t in (times[0], times[100], times[-1]):
        F, Ft = sm.deformation(t)
        F_ref, Ft_ref = m.deformation(t)
        assert np.allclose(F, F_ref, atol=1e-14)
        assert np.linalg.norm(Ft - Ft_ref) <= 1e-4
    with pytest.raises(OutOfRange):
        sm.deformation(1.01)
    with pytest.raises(OutOfRange):
        sm.deformation(-0.5)


def test_sampled_derivative_is_second_order():
    m = ClosedFormMotion("rotation_stretch")
    errs = []
    for n in (64, 128):
        sm = sample_motion(m, np.linspace(0.0, 1.0, n + 1))
        errs.append(max(np.linalg.norm(sm.deformation(t)[1] - m.deformation(t)[1]) for t in sm.times))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_motion_spec_parsing():
    spec = motion_from_spec({"family": "simple_shear", "params": {"rate": 2.0}, "reference": True,
                             "tgrid": {"t0": 0, "t1": 2, "n": 4}})
    assert np.allclose(spec.gamma0, np.eye(3))
    assert np.allclose(spec.tgrid, [0, 0.5, 1, 1.5, 2])
    assert motion_from_spec({"family": "identity"}).gamma0 is None
    with pytest.raises(ConfigError):
        motion_from_spec({"family": "warp"})
    with pytest.raises(ConfigError):
        motion_from_spec({"family": "identity", "points": [[0, 0, 0]], "mu": [1, 2]})
