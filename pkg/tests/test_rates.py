import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from objrates.errors import AsymmetricInput, ConfigError, MissingReference, VarianceMismatch
from objrates.kinematics import ClosedFormMotion, motion_state, state_from_gradient
from objrates.met_geometry import ROUGEE, ZERO, rougee_gamma
from objrates.rates import (
    OBJECTIVE_KINDS,
    RateContext,
    RateKind,
    christoffel_of,
    default_kinds,
    green_naghdi_spin,
    parse_rate,
    rate_via_met,
    spatial_rate_con,
    spatial_rate_cov,
    xbm_spin,
)
from objrates.tensor_core import Frame, Tensor2, Variance, polar_decompose, sym
from objrates.verify import random_extension_states

from conftest import gl3, mat3, spd3, sym3

KINDS = default_kinds()


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def random_ctx(rng, with_ref=True):
    F0 = expm(sym(0.3 * rng.standard_normal((3, 3))))
    Fp = expm(0.4 * rng.standard_normal((3, 3)))
    G = 0.7 * rng.standard_normal((3, 3))
    F = Fp @ F0
    st_ = state_from_gradient(F, G @ F, F0)
    return RateContext(st_, st_.gamma0 if with_ref else None)


# -- naming and parsing ----------------------------------------------------------

@pytest.mark.parametrize("name", OBJECTIVE_KINDS + ("particle",))
def test_parse_roundtrip(name):
    assert parse_rate(name).name == name
    assert parse_rate(parse_rate(name).name) == parse_rate(name)


def test_parse_aliases_and_numbers():
    assert parse_rate("Zaremba-Jaumann") == RateKind("jaumann")
    assert parse_rate("gn") == RateKind("green-naghdi")
    assert parse_rate("hill: 1 , -0.5") == RateKind.hill(1, -0.5)
    assert parse_rate("hill:1e0,-5e-1").name == "hill:1,-0.5"
    assert parse_rate("xbm").preset == "zero"


@pytest.mark.parametrize("bad", ["", "oldroid", "mh:5", "hill:1", "xbm:nope", "hill:a,b"])
def test_parse_rejects(bad):
    with pytest.raises(ConfigError):
        parse_rate(bad)


def test_kind_flags():
    assert len(KINDS) >= 9
    assert all(k.objective for k in KINDS)
    assert not parse_rate("particle").objective
    cov = {k.name for k in KINDS if k.general_covariant}
    assert cov == {"oldroyd", "mh:1"}
    assert RateKind.hill(1, 0).general_covariant
    assert {k.name for k in KINDS if k.needs_reference} == {"green-naghdi", "xbm:zero", "xbm:logspin-like"}
    with pytest.raises(ConfigError):
        RateKind("mh", which=7)


# -- explicit formulas -----------------------------------------------------------

def test_oldroyd_and_jaumann_formulas(rng):
    ctx = random_ctx(rng)
    L, w = ctx.state.grad_u, ctx.state.w_hat
    tau, td = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
    assert np.allclose(spatial_rate_con(RateKind("oldroyd"), ctx, tau, td), td - L @ tau - tau @ L.T, atol=1e-14)
    assert np.allclose(spatial_rate_con(RateKind("jaumann"), ctx, tau, td), td - w @ tau - tau @ w.T, atol=1e-14)
    k, kd = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
    assert np.allclose(spatial_rate_cov(RateKind("oldroyd"), ctx, k, kd), kd + L.T @ k + k @ L, atol=1e-14)


def test_jaumann_cov_kills_euclidean_metric(rng):
    ctx = random_ctx(rng)
    out = spatial_rate_cov(RateKind("jaumann"), ctx, np.eye(3), np.zeros((3, 3)))
    assert np.abs(out).max() <= 1e-14


def test_hill_family_collapses_to_jaumann_on_rigid_motion(rng):
    m = ClosedFormMotion("rigid", {"axis_rate": [0.3, -1.1, 0.4]})
    ctx = RateContext(motion_state(m, None, 0.8))
    tau, td = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
    jau = spatial_rate_con(RateKind("jaumann"), ctx, tau, td)
    for m1, m2 in [(0, 0), (1, 0), (1, -0.5), (0.3, 2.0), (-2.0, 0.7)]:
        assert np.allclose(spatial_rate_con(RateKind.hill(m1, m2), ctx, tau, td), jau, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_family_coincidences(seed):
    rng = np.random.default_rng(seed)
    ctx = random_ctx(rng)
    tau, td = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
    pairs = [
        (RateKind.hill(0, 0), RateKind("jaumann")),
        (RateKind.hill(1, 0), RateKind("oldroyd")),
        (RateKind.hill(1, -0.5), RateKind("truesdell")),
        (RateKind.marsden_hughes(1), RateKind("oldroyd")),
        (RateKind.marsden_hughes(2), RateKind("jaumann")),
        (RateKind.marsden_hughes(4), RateKind("truesdell")),
        (RateKind.xbm("zero"), RateKind("jaumann")),
    ]
    for a, b in pairs:
        for f in (spatial_rate_con, spatial_rate_cov):
            ra, rb = f(a, ctx, tau, td), f(b, ctx, tau, td)
            assert rel(ra, rb) <= 1e-14, (a.name, b.name, f.__name__)


def test_pure_rotation_green_naghdi_equals_jaumann(rng):
    m = ClosedFormMotion("rigid", {"axis_rate": [0.5, 0.2, -0.9]})
    tau, td = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
    for t in (0.0, 0.3, 1.7):
        ctx = RateContext.with_reference(motion_state(m, None, t))
        assert np.allclose(green_naghdi_spin(ctx), ctx.state.w_hat, atol=1e-13)
        gn = spatial_rate_con(RateKind("green-naghdi"), ctx, tau, td)
        assert np.allclose(gn, spatial_rate_con(RateKind("jaumann"), ctx, tau, td), atol=1e-13)


def test_green_naghdi_spin_matches_polar_difference(rng):
    ctx = random_ctx(rng)
    st_ = ctx.state
    h = 1e-6
    Fp, Fp_t = st_.F_phi, st_.F_t @ np.linalg.inv(st_.F0)
    Rp, _ = polar_decompose(Fp + h * Fp_t)
    Rm, _ = polar_decompose(Fp - h * Fp_t)
    R, _ = polar_decompose(Fp)
    om = (Rp - Rm) / (2 * h) @ R.T
    assert np.allclose(green_naghdi_spin(ctx), om, atol=1e-8)


def test_xbm_spin_is_skew_and_reduces_to_w(rng):
    ctx = random_ctx(rng)
    om = xbm_spin(RateKind.xbm("logspin-like"), ctx)
    assert np.allclose(om, -om.T, atol=1e-14)
    assert np.allclose(xbm_spin(RateKind.xbm("zero"), ctx), ctx.state.w_hat, atol=1e-15)


@given(gl3(), mat3, sym3(), sym3(), st.sampled_from(KINDS))
def test_outputs_are_symmetric(F, G, tau, td, kind):
    st_ = state_from_gradient(F, G @ F)
    ctx = RateContext(st_, st_.gamma0)
    for f in (spatial_rate_con, spatial_rate_cov):
        out = f(kind, ctx, tau, td)
        assert np.linalg.norm(out - out.T) <= 1e-12 * (1 + np.linalg.norm(out))


# -- pseudo-Leibniz ----------------------------------------------------------------

@pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.name)
def test_pseudo_leibniz(kind, rng):
    for _ in range(10):
        ctx = random_ctx(rng)
        tau, td, k, kd = (sym(rng.standard_normal((3, 3))) for _ in range(4))
        lhs = np.sum(spatial_rate_con(kind, ctx, tau, td) * k) + np.sum(tau * spatial_rate_cov(kind, ctx, k, kd))
        rhs = np.sum(td * k) + np.sum(tau * kd)
        assert abs(lhs - rhs) <= 1e-12 * (1 + np.linalg.norm(tau) * np.linalg.norm(k) * 10)


# -- tagging and errors --------------------------------------------------------------

def test_tagged_io(rng):
    ctx = random_ctx(rng)
    a = sym(rng.standard_normal((3, 3)))
    t = Tensor2(a, Variance.CON_CON, Frame.SPATIAL)
    out = spatial_rate_con(RateKind("truesdell"), ctx, t, t)
    assert isinstance(out, Tensor2) and out.variance is Variance.CON_CON
    with pytest.raises(VarianceMismatch):
        spatial_rate_cov(RateKind("truesdell"), ctx, t, t)
    with pytest.raises(VarianceMismatch):
        rate_via_met(RateKind("oldroyd"), ctx, a, a, Variance.MIX_UP_DOWN)


def test_asymmetric_input_rejected(rng):
    ctx = random_ctx(rng)
    with pytest.raises(AsymmetricInput):
        spatial_rate_con(RateKind("jaumann"), ctx, rng.standard_normal((3, 3)), np.zeros((3, 3)))


def test_reference_kinds_require_gamma0(rng):
    ctx = random_ctx(rng, with_ref=False)
    a = np.eye(3)
    for name in ("green-naghdi", "xbm:zero"):
        with pytest.raises(MissingReference, match="reference configuration required"):
            spatial_rate_con(parse_rate(name), ctx, a, a)
        with pytest.raises(MissingReference):
            rate_via_met(parse_rate(name), ctx, a, a, Variance.CON_CON)
        with pytest.raises(MissingReference):
            christoffel_of(parse_rate(name))
    with pytest.raises(ConfigError):
        christoffel_of(parse_rate("particle"))


# -- Christoffel operators ------------------------------------------------------------

def test_oldroyd_christoffel_is_zero():
    assert christoffel_of(RateKind("oldroyd")) is ZERO
    assert christoffel_of(RateKind("jaumann")) is ROUGEE


def test_jaumann_christoffel_at_identity(rng):
    A, e = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
    out = christoffel_of(RateKind("jaumann"))(np.eye(3), 2 * A, e)
    assert np.allclose(out, -(A @ e + e @ A), atol=1e-14)


@given(spd3(), sym3(), sym3())
def test_green_naghdi_christoffel_at_reference_is_jaumann(g0, gt, e):
    gn = christoffel_of(RateKind("green-naghdi"), g0)
    N = np.linalg.solve(g0, gt)
    expect = -0.5 * (e @ N + N.T @ e)
    assert np.linalg.norm(gn(g0, gt, e) - expect) <= 1e-10 * (1 + np.linalg.norm(expect))
    assert np.linalg.norm(gn(g0, gt, e) - rougee_gamma(g0, gt, e)) <= 1e-10 * (1 + np.linalg.norm(expect))


# -- cross-form equivalence -----------------------------------------------------------

def test_jaumann_cross_form_on_shear(rng):
    m = ClosedFormMotion("simple_shear", {"rate": 1.7})
    kind = RateKind("jaumann")
    for t in (0.2, 0.9):
        ctx = RateContext(motion_state(m, None, t))
        tau, td = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
        a = spatial_rate_con(kind, ctx, tau, td)
        assert rel(rate_via_met(kind, ctx, tau, td, Variance.CON_CON), a) <= 1e-10


def test_green_naghdi_cross_form_on_rotation_stretch(rng):
    m = ClosedFormMotion("rotation_stretch", F0=expm(sym(0.2 * rng.standard_normal((3, 3)))))
    kind = RateKind("green-naghdi")
    for t in (0.3, 1.1):
        ctx = RateContext.with_reference(motion_state(m, None, t))
        tau, td = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
        for var, f in ((Variance.CON_CON, spatial_rate_con), (Variance.COV_COV, spatial_rate_cov)):
            assert rel(rate_via_met(kind, ctx, tau, td, var), f(kind, ctx, tau, td)) <= 1e-9


@pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.name)
def test_cross_form_on_extension_states(kind, rng):
    tol = 1e-9 if kind.family == "green-naghdi" else 1e-10
    for st_ in random_extension_states(20, seed=11):
        ctx = RateContext(st_, st_.gamma0)
        tau, td = sym(rng.standard_normal((3, 3))), sym(rng.standard_normal((3, 3)))
        for var, f in ((Variance.CON_CON, spatial_rate_con), (Variance.COV_COV, spatial_rate_cov)):
            assert rel(rate_via_met(kind, ctx, tau, td, var), f(kind, ctx, tau, td)) <= tol
