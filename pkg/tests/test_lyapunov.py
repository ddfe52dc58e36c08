import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewfront import env as envmod
from skewfront import lyapunov
from skewfront.errors import DomainError

# mu(-1), mu(0), mu'(0), eta_c per constant tree; mu values from the renewal
# quadratic J_+ w^2 - w + J_- = 0 in 40-digit arithmetic
CONSTANT_ORACLE = {
    (3, 1.0): (-1.8265836066116768, -0.69314718055994531, 3.0, 0.057744562513664536),
    (4, 1.0): (-2.122693537124255, -1.0986122886681097, 2.0, 0.13707783890401887),
    (3, 2.0): (-1.6171407656026274, -0.34657359027997265, 6.0, 0.014436140628416134),
    (10, 1.0): (-3.0615432842427633, -2.1972245773362194, 1.25, 0.42993821066432878),
}


def renewal_mu(d, ell, lam):
    p = (d - 1) / d
    C = math.cosh(math.sqrt(2 * lam) * ell)
    # smaller root of p w^2 - C w + (1 - p) = 0, rationalized
    return math.log(2 * (1 - p) / (C + math.sqrt(C * C - 4 * p * (1 - p)))) / ell


@pytest.mark.parametrize("key", sorted(CONSTANT_ORACLE))
def test_constant_closed_forms(key):
    d, ell = key
    m1, m0, mp, ec = CONSTANT_ORACLE[key]
    assert lyapunov.mu_constant(d, ell, 1.0) == pytest.approx(m1, rel=1e-13)
    assert lyapunov.mu0_constant(d, ell) == pytest.approx(m0, rel=1e-14)
    assert lyapunov.mu_prime0_constant(d, ell) == pytest.approx(mp, rel=1e-14)
    assert lyapunov.eta_c_constant(d, ell) == pytest.approx(ec, rel=1e-13)


@pytest.mark.parametrize("key", sorted(CONSTANT_ORACLE))
def test_ergodic_estimator_matches_closed_form(key):
    d, ell = key
    e = envmod.constant_env(d, ell, 3000)
    m = lyapunov.LyapunovModel(e, "ergodic")
    m1, m0, mp, _ = CONSTANT_ORACLE[key]
    assert m.mu_negative(1.0) == pytest.approx(m1, rel=1e-12)
    assert m.mu0() == pytest.approx(m0, rel=1e-12)
    assert m.mu_prime0() == pytest.approx(mp, rel=1e-7)


@given(st.integers(3, 30), st.floats(0.2, 3.0), st.floats(1e-4, 50.0))
@settings(max_examples=80)
def test_stable_closed_form_matches_renewal(d, ell, lam):
    assert lyapunov.mu_constant(d, ell, lam) == pytest.approx(renewal_mu(d, ell, lam), rel=1e-10, abs=1e-12)


def test_line_exponent():
    m = lyapunov.LyapunovModel(envmod.constant_env(2, 1.0, 100), "ergodic")
    assert m.mu_negative(2.0) == -2.0
    assert m.mu0() == 0.0


def test_two_estimators_shared_samples():
    cfg = envmod.EnvConfig.constant(3, 1.0, 4000)
    e = envmod.generate(cfg)
    a = lyapunov.mu_negative(e, 1.0, estimator="ergodic")
    b = lyapunov.mu_negative_quadrature(cfg, 1.0, e)
    assert a == pytest.approx(b, abs=1e-12)


def test_two_estimators_random_lengths(random_env):
    lam = 1.0
    a = lyapunov.mu_negative(random_env, lam, estimator="ergodic")
    b = lyapunov.mu_negative_quadrature(random_env.config, lam, random_env)
    # the ergodic average also carries length-sampling noise, ~ 1/sqrt(N)
    assert abs(a - b) < 5e-3


def test_w_laplace_constant(tree31):
    for lam, ref in ((0.25, 0.31785792686618216), (1.0, 0.16096254084754863)):
        assert lyapunov.w_laplace(tree31, lam) == pytest.approx(ref, rel=1e-12)


def test_mu_shape_random(random_env):
    m = lyapunov.LyapunovModel(random_env)
    grid = np.linspace(0.02, 5, 25)
    vals = np.array([m.mu_negative(x) for x in grid])
    assert np.all(vals < 0)
    assert np.all(np.diff(vals) < 0)
    assert np.all(np.diff(vals, 2) > -1e-10)
    assert m.mu0() > vals[0]


def test_eta_c_constant(tree31):
    est = lyapunov.eta_c(tree31)
    assert est.estimate == pytest.approx(CONSTANT_ORACLE[(3, 1.0)][3], abs=1e-4)
    assert est.bracket[0] <= est.estimate <= est.bracket[1]


def test_theta_partition_diagnostic(tree31):
    # the path-sum root approaches the spectral one from below as k grows
    ec = CONSTANT_ORACLE[(3, 1.0)][3]
    t_small = lyapunov.theta_partition(tree31, ec, 50)
    t_big = lyapunov.theta_partition(tree31, ec, 400)
    assert t_small < t_big < 1.0 + 1e-9
    assert lyapunov.theta_spectral(tree31, 0.5 * ec, 400) < 1.0


def test_eta_c_line():
    assert lyapunov.eta_c(envmod.constant_env(2, 1.0, 100)).estimate == 0.0


def test_rate_function_constant(tree31):
    I = lyapunov.RateFunction(lyapunov.LyapunovModel(tree31))
    mp = I.mu_prime0
    grid = np.linspace(0.05 * mp, mp, 30)
    vals = np.array([I(a)[0] for a in grid])
    assert np.all(np.diff(vals) < 0)
    assert np.all(np.diff(vals, 2) > -1e-9)
    assert vals[-1] == pytest.approx(-CONSTANT_ORACLE[(3, 1.0)][1], rel=1e-8)
    with pytest.raises(DomainError):
        I(1.5 * mp)


def test_build_curve(tree31):
    c = lyapunov.build_curve(tree31, [0.5, 1.0, 2.0])
    assert c.mu_values[1] == pytest.approx(CONSTANT_ORACLE[(3, 1.0)][0], rel=1e-13)
    assert c.env_digest == tree31.digest()
    with pytest.raises(DomainError):
        lyapunov.build_curve(tree31, [1.0, 0.5])
