import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from skewfront import env as envmod
from skewfront import kernel, mcsim
from skewfront.errors import DomainError

ps = st.floats(0.05, 0.95)
gaps = st.floats(0.1, 5.0)


def bvp_exit_laplace(p, a, b, lam):
    """E[exp(-lam tau); exit right] from a 4x4 linear solve of the transmission problem.

    u = A1 e^{kx} + B1 e^{-kx} on (-a, 0), A2 e^{kx} + B2 e^{-kx} on (0, b).
    """
    k = math.sqrt(2 * lam)
    M = np.array([
        [math.exp(-k * a), math.exp(k * a), 0, 0],  # u(-a) = 0
        [0, 0, math.exp(k * b), math.exp(-k * b)],  # u(b) = 1
        [1, 1, -1, -1],  # continuity
        [-(1 - p) * k, (1 - p) * k, p * k, -p * k],  # p u'(0+) = (1-p) u'(0-)
    ])
    A1, B1, _, _ = np.linalg.solve(M, [0, 1, 0, 0])
    return A1 + B1


@given(ps, gaps, gaps, st.floats(0.01, 4.0))
@settings(max_examples=80)
def test_laplace_matches_linear_solve(p, a, b, lam):
    jp, jm = kernel.exit_laplace(kernel.SkewExitKernel(p, a, b), -lam)
    assert jp == pytest.approx(bvp_exit_laplace(p, a, b, lam), rel=1e-9)
    # the left transform is the right one of the mirrored kernel
    jm_m, _ = kernel.exit_laplace(kernel.SkewExitKernel(1 - p, b, a), -lam)
    assert jm == pytest.approx(jm_m, rel=1e-12)


@given(gaps, gaps, st.floats(0.01, 4.0))
def test_symmetric_kernel_is_brownian(a, b, lam):
    k = math.sqrt(2 * lam)
    jp, _ = kernel.exit_laplace(kernel.SkewExitKernel(0.5, a, b), -lam)
    assert jp == pytest.approx(math.sinh(k * a) / math.sinh(k * (a + b)), rel=1e-10)


@given(ps, gaps, gaps)
def test_probabilities_sum_and_limit(p, a, b):
    k = kernel.SkewExitKernel(p, a, b)
    up, down = kernel.exit_probabilities(k)
    assert up + down == pytest.approx(1.0, abs=1e-15)
    jp, jm = kernel.exit_laplace(k, -1e-12)
    assert jp == pytest.approx(up, abs=1e-6) and jm == pytest.approx(down, abs=1e-6)


@given(ps, gaps, gaps, st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_laplace_monotone_in_eta(p, a, b, l1, l2):
    k = kernel.SkewExitKernel(p, a, b)
    lo, hi = sorted((l1, l2))
    assert sum(kernel.exit_laplace(k, -hi)) <= sum(kernel.exit_laplace(k, -lo)) + 1e-15


def test_divergence_threshold_symmetric():
    k = kernel.SkewExitKernel(0.5, 1.3, 1.3)
    assert kernel.divergence_threshold(k) == pytest.approx(math.pi ** 2 / (8 * 1.3 ** 2), rel=1e-12)


@given(ps, gaps, gaps)
@settings(max_examples=50)
def test_divergence_threshold_bracket(p, a, b):
    k = kernel.SkewExitKernel(p, a, b)
    eta = kernel.divergence_threshold(k)
    assert math.pi ** 2 / (8 * max(a, b) ** 2) <= eta * (1 + 1e-12)
    assert eta <= math.pi ** 2 / (8 * min(a, b) ** 2) * (1 + 1e-12)
    jp, jm = kernel.exit_laplace(k, eta * (1 - 1e-6))
    assert jp + jm > 10
    assert kernel.exit_laplace(k, eta * 1.01)[0] == math.inf


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_bad_skewness(p):
    with pytest.raises(DomainError):
        kernel.SkewExitKernel(p, 1.0, 1.0)


def test_exit_time_distribution():
    t = mcsim.exit_time_samples(50000, seed=4)

    def cdf(x):
        x = np.atleast_1d(x)
        n = np.arange(0, 60)[:, None]
        s = ((-1.0) ** n / (2 * n + 1) * np.exp(-((2 * n + 1) ** 2) * math.pi ** 2 * x / 8)).sum(axis=0)
        return 1 - 4 / math.pi * s

    assert stats.kstest(t, cdf).pvalue > 1e-3
    assert t.mean() == pytest.approx(1.0, abs=4 * math.sqrt(2 / 3 / len(t)))
    assert np.exp(-t).mean() == pytest.approx(1 / math.cosh(math.sqrt(2)), abs=0.004)


def test_kernel_mc_cross_check_20_kernels():
    g = np.random.default_rng(2024)
    n = 20000
    fails = 0
    for j in range(20):
        k = kernel.SkewExitKernel(g.uniform(0.5, 0.95), g.uniform(0.3, 2.5), g.uniform(0.3, 2.5))
        side, tau = mcsim.skew_exit_samples(k, n, seed=j, label="test.kernel")
        up, _ = kernel.exit_probabilities(k)
        frac = (side > 0).mean()
        if abs(frac - up) > 4 * math.sqrt(up * (1 - up) / n):
            fails += 1
        for lam in (0.3, 1.5):
            jp, jm = kernel.exit_laplace(k, -lam)
            for sgn, exact in ((1, jp), (-1, jm)):
                w = np.where(side == sgn, np.exp(-lam * tau), 0.0)
                if abs(w.mean() - exact) > 4 * w.std() / math.sqrt(n):
                    fails += 1
    assert fails == 0


def test_hit_probability_constant_tree():
    for d in (3, 4, 7):
        e = envmod.constant_env(d, 1.0, 400)
        rho = 1.0 / (d - 1)
        for i in (1, 2, 5):
            r = kernel.hit_probability_details(e, i)
            assert r.status == "certified"
            assert r.value == pytest.approx(rho ** i, rel=1e-10)


def test_hit_probability_random_env_mc():
    e = envmod.generate(envmod.EnvConfig(((3, 0.5), (4, 0.5)), None, (0.5, 2.0), 600, 5))
    for i in (1, 2, 3):
        exact = kernel.hit_probability_series(e, i)
        r = mcsim.hitting_time_laplace_mc(e, i, 0, 0.0, 40000, seed=i, label="test.hitprob")
        se = math.sqrt(exact * (1 - exact) / r.n_paths)
        assert abs(r.p_hit - exact) < 4 * se + 1e-6


def test_hit_probability_line_divergent():
    r = kernel.hit_probability_details(envmod.constant_env(2, 1.0, 200), 1)
    assert r.value == 1.0
