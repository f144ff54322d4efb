"""Density pipeline tests: both routes, transforms, mass, tails, rescaling.

Oracles used here, all independent of the code under test:

* the exact closed density at mu = 1/2 (elementary one-sided stable
  form) and its erf survival function,
* closed densities for mu = 3/2 (scaled complementary error function)
  and mu = 5/2 (scipy quadrature of the explicit damped-oscillation
  kernel against the twice-subtracted exponential),
* scipy's scaled Bessel ratio for the Laplace transform,
* scipy.stats.invgamma for the unstopped limit law,
* tail constants from the finite kappa-moment identities at
  half-integer drift, and high-precision extrapolation limits frozen
  from an mpmath study for the rest.

The two internal evaluation routes (closed error-function dot products
for moderate t, the order-one substituted integral for large t) share
no code past the kernel representation, so their pointwise agreement
checked below is itself a strong oracle.
"""

import math

import numpy as np
import pytest
from scipy import integrate as sint
from scipy import special as sp
from scipy import stats as sstats

from gbm_hitfun.density import (
    TailConstant,
    _q_direct_with_loss,
    _q_substituted,
    _subtracted_exp,
    build_evaluator,
    dufresne_density,
    laplace_of_density,
    laplace_ratio,
    normalization_check,
    q_density,
    q_density_basic,
    rescale,
    survival,
    tail_constant,
    total_mass,
)
from gbm_hitfun.errors import DomainError
from gbm_hitfun.weight import ModelParams

SQRT_PI = math.sqrt(math.pi)

_EVALUATORS = {}


def ev_for(mu: float, x: float):
    key = (mu, x)
    if key not in _EVALUATORS:
        _EVALUATORS[key] = build_evaluator(ModelParams(mu, x))
    return _EVALUATORS[key]


def q_half_closed(lam: float, t):
    # exact density at mu = 1/2: one-sided 1/2-stable at scale lam
    t = np.asarray(t, dtype=float)
    return lam * np.exp(-lam * lam / (4.0 * t)) / (2.0 * SQRT_PI * t ** 1.5)


def q_three_halves_oracle(lam: float, t: float) -> float:
    # w = e^{-v} makes the kernel integral elementary:
    # J = sqrt(pi t) e^{z^2} erfc(z) - 1 + (lam + 1)/(2t) with
    # z = (lam + 2t)/(2 sqrt t); the pieces cancel to O(t^{-2}) as t
    # grows, so evaluate in extended precision
    import mpmath as mp
    with mp.workdps(40):
        tt = mp.mpf(t)
        lm = mp.mpf(lam)
        z = (lm + 2.0 * tt) / (2.0 * mp.sqrt(tt))
        j = (mp.sqrt(mp.pi * tt) * mp.exp(z * z) * mp.erfc(z)
             - 1.0 + (lm + 1.0) / (2.0 * tt))
        pref = lm * mp.exp(-lm * lm / (4.0 * tt)) / mp.sqrt(mp.pi * tt)
        return float(pref * j)


def q_five_halves_oracle(lam: float, t: float) -> float:
    # extended-precision quadrature of the explicit damped-oscillation
    # kernel against the twice-subtracted exponential of kappa/4t
    import mpmath as mp
    with mp.workdps(30):
        tt = mp.mpf(t)
        lm = mp.mpf(lam)
        r3 = mp.sqrt(3)

        def f(v):
            w = (3.0 * mp.exp(-1.5 * v)
                 * ((2.0 * lm + 1.0) * mp.cos(r3 * v / 2.0)
                    + r3 * mp.sin(r3 * v / 2.0)))
            s = v * (2.0 * lm + v) / (4.0 * tt)
            e2 = mp.exp(-s) - 1.0 + s - s * s / 2.0
            return w * e2

        nodes = [0, 2, 4, 6, 9, 12, 16, 22, 30, 45, 80]
        j = mp.quad(f, nodes, maxdegree=8)
        pref = lm * mp.exp(-lm * lm / (4.0 * tt)) / mp.sqrt(mp.pi * tt)
        return float(pref * j)


# ---------------------------------------------------------------------
# evaluator assembly

@pytest.mark.parametrize("mu,l_expected", [
    (0.0, 0), (0.3, 0), (0.5, 0), (0.9, 1), (1.0, 1),
    (1.5, 1), (2.2, 2), (2.5, 2), (3.7, 4),
])
def test_subtraction_depth(mu, l_expected):
    assert ev_for(mu, 2.0).l_terms == l_expected


def test_switch_time_default_and_override():
    assert ev_for(1.0, 2.0).t_switch == 1e3
    assert ev_for(1.0, 5.0).t_switch == 1e3 * 16.0
    custom = build_evaluator(ModelParams(1.0, 2.0), t_switch=50.0)
    assert custom.t_switch == 50.0
    with pytest.raises(DomainError):
        build_evaluator(ModelParams(1.0, 2.0), t_switch=0.0)


# ---------------------------------------------------------------------
# subtracted exponential helper

@pytest.mark.parametrize("l", [0, 1, 2, 4])
def test_subtracted_exp_matches_mpmath_reference(l):
    # 50-digit reference on both sides of the series/difference branch
    import mpmath as mp
    s = np.array([1e-8, 1e-3, 0.1, 0.4 * (l + 1), 0.6 * (l + 1),
                  3.0, 10.0, 40.0])
    got = _subtracted_exp(s, l)
    # the reference cancels ~8(l+1) digits at the smallest s, so give
    # it plenty of headroom
    with mp.workdps(100):
        ref = np.array([float(mp.exp(-mp.mpf(sv))
                              - sum(mp.mpf(-sv) ** j / mp.factorial(j)
                                    for j in range(l + 1)))
                        for sv in s])
    assert np.allclose(got, ref, rtol=5e-14, atol=1e-300)


def test_subtracted_exp_sign_alternation():
    # E_l(s) has the sign of (-1)^{l+1} for all s > 0
    s = np.geomspace(1e-6, 60.0, 40)
    for l in range(0, 5):
        vals = _subtracted_exp(s, l)
        assert np.all(vals * (-1.0) ** (l + 1) > 0.0)


# ---------------------------------------------------------------------
# domain validation and shape handling

def test_density_domain_errors():
    ev = ev_for(1.0, 2.0)
    for bad in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(DomainError):
            q_density(ev, bad)
    with pytest.raises(DomainError):
        q_density(ev, np.array([1.0, -2.0]))
    with pytest.raises(DomainError):
        q_density_basic(ev, 0.0)


def test_density_shape_passthrough():
    ev = ev_for(1.0, 2.0)
    scalar = q_density(ev, 1.5)
    assert isinstance(scalar, float)
    grid = np.array([[0.5, 1.5, 4.0], [2.0, 8.0, 30.0]])
    out = q_density(ev, grid)
    assert out.shape == grid.shape
    assert out[0, 1] == pytest.approx(scalar, rel=1e-14)
    basic = q_density_basic(ev, grid)
    assert basic.shape == grid.shape


def test_transform_domain_errors():
    ev = ev_for(1.0, 2.0)
    with pytest.raises(DomainError):
        laplace_ratio(-0.5, 2.0, 1.0)
    with pytest.raises(DomainError):
        laplace_ratio(1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        laplace_ratio(1.0, 2.0, 0.0)
    with pytest.raises(DomainError):
        laplace_of_density(ev, 0.0)
    with pytest.raises(DomainError):
        survival(ev, -1.0)
    with pytest.raises(DomainError):
        survival(ev, np.inf)
    with pytest.raises(DomainError):
        dufresne_density(0.0, 1.0)
    with pytest.raises(DomainError):
        dufresne_density(1.0, -1.0)
    with pytest.raises(DomainError):
        rescale(1.0, 0.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        rescale(1.0, 3.0, 2.0, 1.0)


# ---------------------------------------------------------------------
# exact closed form at mu = 1/2

@pytest.mark.parametrize("x", [1.2, 2.0, 5.0])
def test_half_drift_closed_form(x):
    ev = ev_for(0.5, x)
    ts = np.geomspace(1e-3, 1e6, 60)
    got = q_density(ev, ts)
    want = q_half_closed(x - 1.0, ts)
    assert np.allclose(got, want, rtol=5e-15, atol=0.0)


def test_half_drift_reference_value():
    # lam = 1, t = 1: e^{-1/4} / (2 sqrt(pi)), frozen from mpmath
    val = q_density(ev_for(0.5, 2.0), 1.0)
    assert val == pytest.approx(0.21969564473386119852, rel=1e-15)


# ---------------------------------------------------------------------
# unstopped limit law

def test_dufresne_reference_point():
    # mu = 1, t = 1/4: 2^{-2} e^{-1} / (1/4)^2 = 4/e
    assert dufresne_density(1.0, 0.25) == pytest.approx(4.0 / math.e,
                                                        rel=1e-15)


@pytest.mark.parametrize("mu", [0.3, 0.5, 1.0, 2.2])
def test_dufresne_matches_inverse_gamma(mu):
    # the limit law is inverse-gamma with shape mu and scale 1/4
    ts = np.geomspace(1e-2, 1e3, 25)
    want = sstats.invgamma.pdf(ts, mu, scale=0.25)
    got = dufresne_density(mu, ts)
    assert np.allclose(got, want, rtol=1e-12)


def test_dufresne_normalizes():
    val, _ = sint.quad(lambda t: dufresne_density(1.3, t), 0.0, np.inf)
    assert val == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------
# Laplace transform closed form

def test_laplace_ratio_basic_shape():
    rs = np.geomspace(1e-3, 50.0, 40)
    for mu, x in [(0.0, 2.0), (0.3, 1.2), (1.0, 2.0), (2.5, 5.0)]:
        vals = laplace_ratio(mu, x, rs)
        assert np.all(vals > 0.0) and np.all(vals < 1.0)
        assert np.all(np.diff(vals) < 0.0)


def test_laplace_ratio_small_r_limit():
    for mu, x in [(0.7, 2.0), (1.5, 3.0), (3.0, 1.5)]:
        assert laplace_ratio(mu, x, 1e-8) > 1.0 - 1e-6


def test_laplace_ratio_half_drift_exponential():
    rs = np.geomspace(1e-3, 100.0, 30)
    got = laplace_ratio(0.5, 3.0, rs)
    assert np.allclose(got, np.exp(-2.0 * rs), rtol=5e-15)


def test_laplace_ratio_driftless_reference():
    # K_0(2)/K_0(1), frozen from mpmath
    assert laplace_ratio(0.0, 2.0, 1.0) == pytest.approx(
        0.270516061313329193, rel=1e-13)
    # and against scipy's unscaled Bessel quotient directly
    assert laplace_ratio(0.0, 2.0, 1.0) == pytest.approx(
        sp.kv(0, 2.0) / sp.kv(0, 1.0), rel=1e-13)


def test_laplace_ratio_scalar_and_array():
    out = laplace_ratio(1.0, 2.0, np.array([0.5, 1.0]))
    assert out.shape == (2,)
    assert isinstance(laplace_ratio(1.0, 2.0, 1.0), float)


# ---------------------------------------------------------------------
# internal route agreement

@pytest.mark.parametrize("mu,x", [
    (0.0, 2.0), (0.3, 1.2), (0.3, 5.0), (1.0, 2.0),
    (1.5, 2.0), (2.2, 1.2), (2.5, 2.0),
])
def test_direct_vs_substituted_routes(mu, x):
    ev = ev_for(mu, x)
    ts = np.geomspace(0.3, 0.5 * ev.t_switch, 12)
    direct, loss = _q_direct_with_loss(ev, ts)
    keep = loss <= 1e-11
    assert keep.sum() >= 6
    for tv, dv in zip(ts[keep], direct[keep]):
        sv = _q_substituted(ev, float(tv))
        assert sv == pytest.approx(dv, rel=5e-10)


@pytest.mark.parametrize("mu,x", [(0.3, 2.0), (0.6, 2.0), (1.0, 2.0),
                                  (1.4, 5.0), (2.2, 2.0)])
def test_generic_vs_numeric_moment_route(mu, x):
    # q_density_basic recomputes the kernel moments numerically instead
    # of using the closed identities, so agreement validates those
    # identities inside the full pipeline
    ev = ev_for(mu, x)
    ts = np.geomspace(0.05, 50.0, 20)
    a = q_density(ev, ts)
    b = q_density_basic(ev, ts)
    assert np.allclose(a, b, rtol=1e-8)


@pytest.mark.parametrize("mu,x", [
    (0.0, 2.0), (0.3, 2.0), (0.5, 2.0), (1.0, 1.2), (1.0, 5.0),
    (1.5, 2.0), (2.2, 2.0), (2.5, 2.0),
])
def test_density_positive_on_wide_grid(mu, x):
    ev = ev_for(mu, x)
    ts = np.geomspace(1e-2, 1e6, 33)
    assert np.all(q_density(ev, ts) > 0.0)


def test_cancellation_fallback_engages():
    # at mu = 5 the direct route loses more than the loss budget well
    # below t_switch; the dispatcher must hand those points to the
    # substituted route, bit-for-bit
    ev = build_evaluator(ModelParams(5.0, 3.0))
    t_probe = 800.0
    assert t_probe < ev.t_switch
    _, loss = _q_direct_with_loss(ev, np.array([t_probe]))
    assert loss[0] > 2e-10
    assert q_density(ev, t_probe) == _q_substituted(ev, t_probe)


# ---------------------------------------------------------------------
# master consistency: transform of the density vs the closed ratio

@pytest.mark.parametrize("mu,x,r", [
    (0.0, 2.0, 1.0),
    (0.3, 1.2, 0.25),
    (0.5, 2.0, 1.0),
    (1.0, 1.2, 0.5),
    (1.5, 5.0, 4.0),
    (2.2, 5.0, 2.0),
    (2.5, 2.0, 0.5),
])
def test_laplace_spot_checks(mu, x, r):
    ev = ev_for(mu, x)
    got = laplace_of_density(ev, r)
    want = laplace_ratio(mu, x, r)
    assert got == pytest.approx(want, abs=1e-8, rel=1e-8)


# ---------------------------------------------------------------------
# mass and survival

@pytest.mark.parametrize("mu", [0.0, 0.3, 0.5, 1.0, 1.5, 2.2, 2.5, 3.7, 5.0])
@pytest.mark.parametrize("x", [1.2, 2.0, 5.0])
def test_total_mass_is_one(mu, x):
    assert total_mass(ev_for(mu, x)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("mu,x", [(0.3, 1.2), (1.0, 2.0), (2.5, 2.0)])
def test_normalization_through_density(mu, x):
    assert normalization_check(ev_for(mu, x)) == pytest.approx(1.0, abs=5e-9)


def test_survival_half_drift_is_erf():
    ev = ev_for(0.5, 3.0)
    for big_t in (0.1, 1.0, 25.0, 1e4):
        want = math.erf(2.0 / (2.0 * math.sqrt(big_t)))
        assert survival(ev, big_t) == pytest.approx(want, rel=1e-13)


def test_survival_at_zero_is_total_mass():
    ev = ev_for(1.0, 2.0)
    assert survival(ev, 0.0) == total_mass(ev)


@pytest.mark.parametrize("mu,x", [(0.3, 2.0), (1.0, 2.0), (2.2, 1.2)])
def test_survival_decreasing(mu, x):
    ev = ev_for(mu, x)
    vals = [survival(ev, t) for t in (0.0, 0.5, 2.0, 10.0, 1e2, 1e4, 1e6)]
    assert all(a > b > 0.0 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("mu,x", [(0.3, 2.0), (1.0, 2.0), (2.2, 2.0)])
def test_survival_consistent_with_density_integral(mu, x):
    ev = ev_for(mu, x)
    t_lo, t_hi = 5.0, 50.0
    res = sint.quad(lambda t: q_density(ev, t), t_lo, t_hi,
                    epsabs=1e-13, epsrel=1e-12, limit=200)
    diff = survival(ev, t_lo) - survival(ev, t_hi)
    assert diff == pytest.approx(res[0], rel=1e-9)


@pytest.mark.parametrize("mu", [0.3, 1.0, 1.5, 2.2])
def test_survival_tail_power_law(mu):
    # P(T) ~ const T^{-mu}: the compensated value stays within a tight
    # band across three decades once T is large
    ev = ev_for(mu, 2.0)
    ts = np.array([1e5, 1e6, 1e7, 1e8])
    comp = np.array([survival(ev, t) * t ** mu for t in ts])
    assert np.all(comp > 0.0)
    assert comp.max() / comp.min() < 1.5


def test_survival_log_decay_driftless():
    # driftless survival decays like 2 log x / log T
    ev = ev_for(0.0, 2.0)
    for big_t in (1e6, 1e8):
        val = survival(ev, big_t) * math.log(big_t)
        assert 0.5 * 2.0 * math.log(2.0) < val < 1.5 * 2.0 * math.log(2.0)


# ---------------------------------------------------------------------
# tail constants

def test_tail_constant_half_drift():
    for x in (1.2, 5.0):
        tc = tail_constant(ev_for(0.5, x))
        assert tc.regime == "power"
        assert tc.value == pytest.approx((x - 1.0) / (2.0 * SQRT_PI),
                                         rel=1e-14)


def test_tail_constant_three_halves_closed():
    # lam = 1: second kappa moment of e^{-v} is 56, so the constant is
    # 56/(32 sqrt(pi)) = 7/(4 sqrt(pi))
    tc = tail_constant(ev_for(1.5, 2.0))
    assert tc.regime == "power"
    assert tc.value == pytest.approx(7.0 / (4.0 * SQRT_PI), rel=1e-12)


@pytest.mark.parametrize("mu,x,rel", [
    (0.3, 2.0, 1e-4),
    (1.0, 2.0, 1e-6),
    (2.2, 2.0, 1e-6),
])
def test_tail_constant_extrapolated_matches_limit(mu, x, rel):
    # frozen high-precision limits: the tail constant equals
    # (x^{2 mu} - 1)/(4^mu Gamma(mu)), verified independently by an
    # mpmath Mellin study and by domination against the unstopped law
    want = (x ** (2.0 * mu) - 1.0) / (4.0 ** mu * sp.gamma(mu))
    tc = tail_constant(ev_for(mu, x))
    assert tc.regime == "power"
    assert tc.value == pytest.approx(want, rel=rel)


def test_tail_constant_driftless():
    for x in (2.0, 5.0):
        tc = tail_constant(ev_for(0.0, x))
        assert tc.regime == "log"
        assert tc.value == pytest.approx(2.0 * math.log(x), rel=5e-3)


def test_tail_constant_is_frozen_record():
    tc = TailConstant(mu=1.0, value=0.75, regime="power")
    with pytest.raises(Exception):
        tc.value = 1.0


# ---------------------------------------------------------------------
# closed-form pipelines at half-integer drift

@pytest.mark.parametrize("x", [1.2, 2.0, 5.0])
def test_three_halves_closed_form(x):
    ev = ev_for(1.5, x)
    ts = np.geomspace(1e-2, 1e4, 49)
    got = q_density(ev, ts)
    want = np.array([q_three_halves_oracle(x - 1.0, float(t)) for t in ts])
    # worst case sits just before the cancellation handoff, where the
    # direct route's contract allows ~1e-9 relative
    assert np.allclose(got, want, rtol=2e-9, atol=1e-300)


@pytest.mark.parametrize("x", [1.2, 2.0])
def test_five_halves_quadrature_oracle(x):
    ev = ev_for(2.5, x)
    for t in np.geomspace(0.05, 2e3, 9):
        want = q_five_halves_oracle(x - 1.0, float(t))
        got = q_density(ev, float(t))
        assert got == pytest.approx(want, rel=1e-8)


# ---------------------------------------------------------------------
# rescaling to a general stopping level

def test_rescale_unit_level_matches_density():
    ev = ev_for(1.0, 2.0)
    ts = np.geomspace(0.1, 100.0, 9)
    assert np.allclose(rescale(1.0, 1.0, 2.0, ts), q_density(ev, ts),
                       rtol=1e-14)


def test_rescale_half_drift_closed_form():
    # stop at level a from x: lam' = x/a - 1 and t' = t/a^2
    a, x = 0.5, 2.0
    ts = np.geomspace(0.05, 20.0, 15)
    got = rescale(0.5, a, x, ts)
    want = q_half_closed(x / a - 1.0, ts / a ** 2) / a ** 2
    assert np.allclose(got, want, rtol=5e-15)


def test_rescale_scaling_identity():
    # same law two ways: stop at 2 from 4 vs normalized stop at 1 from
    # 2 with time and density rescaled
    ts = np.geomspace(0.1, 50.0, 9)
    direct = rescale(1.3, 2.0, 4.0, ts)
    normalized = q_density(ev_for(1.3, 2.0), ts / 4.0) / 4.0
    assert np.allclose(direct, normalized, rtol=1e-13)


def test_rescale_preserves_mass():
    val, _ = sint.quad(lambda t: rescale(1.0, 2.0, 5.0, t), 0.0, np.inf,
                       limit=400)
    assert val == pytest.approx(1.0, abs=1e-7)
