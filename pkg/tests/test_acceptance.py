"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

Run alone with `pytest tests/test_acceptance.py -v -s`; the lines are also
collected into the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from skewfront import env as envmod
from skewfront import lyapunov, mcsim, mobius, pde, speed

from .conftest import ACCEPTANCE_LINES


def report(n, ok, detail, started):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail} ({time.perf_counter() - started:.1f} s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def random_envs(horizon=20000):
    return [envmod.generate(envmod.EnvConfig(((3, 0.5), (4, 0.5)), None, (0.5, 2.0), horizon, s))
            for s in range(1, 6)]


def test_1_line_exactness():
    t0 = time.perf_counter()
    e = envmod.constant_env(2, 1.0, 200)
    worst = 0.0
    for beta in (0.5, 2.0, 8.0):
        r = speed.speed_variational(e, beta)
        # the generic minimizer on the line exponent as well
        m = lyapunov.LyapunovModel(e, "ergodic")
        _, c2, _ = speed.minimize_halfline(lambda x: (x + beta) / -m.mu_negative(x) if x > 0 else math.inf,
                                           100.0)
        for c in (r.c_star, c2):
            worst = max(worst, abs(c / math.sqrt(2 * beta) - 1))
    dt = time.perf_counter() - t0
    report(1, worst < 1e-6 and dt < 1.0, f"max rel err {worst:.2e}", t0)


def test_2_closed_form_agreement():
    t0 = time.perf_counter()
    worst = 0.0
    for d, ell in ((3, 1.0), (4, 1.0), (3, 2.0), (10, 1.0)):
        e = envmod.constant_env(d, ell, 3000)
        a = speed.speed_variational(e, 5.0, estimator="ergodic").c_star
        b = speed.speed_constant_closed_form(d, ell, 5.0).c_star
        worst = max(worst, abs(a - b) / b)
    dt = time.perf_counter() - t0
    report(2, worst < 1e-5 and dt < 10, f"max rel gap {worst:.2e}", t0)


def test_3_beta_c_and_eta_c():
    t0 = time.perf_counter()
    worst_b = 0.0
    # the stated closed form carries 1/l, which matches -mu(0)/mu'(0) only at l = 1
    for d in (3, 4, 10):
        ref = (d - 2) / d * math.log(d - 1)
        worst_b = max(worst_b, abs(speed.beta_c_constant(d, 1.0) - ref))
        m = lyapunov.LyapunovModel(envmod.constant_env(d, 1.0, 3000), "ergodic")
        worst_b = max(worst_b, abs(speed.beta_c(m) - ref))
    worst_e = 0.0
    for d in (3, 4):
        p = (d - 1) / d
        ref = math.acos(2 * math.sqrt(p * (1 - p))) ** 2 / 2
        est = lyapunov.eta_c(envmod.constant_env(d, 1.0, 3000)).estimate
        worst_e = max(worst_e, abs(est - ref))
    dt = time.perf_counter() - t0
    ok = worst_b < 1e-6 and worst_e < 1e-3 and dt < 30
    report(3, ok, f"beta_c err {worst_b:.1e}, eta_c err {worst_e:.1e}", t0)


def test_4_strict_slowdown():
    t0 = time.perf_counter()
    beta = 5.0
    margins, within = [], True
    for e in random_envs():
        c = speed.speed_variational(e, beta).c_star
        gap = math.sqrt(2 * beta) - c
        margins.append(gap)
        within &= gap <= speed.slowdown_bound((4, 0.5, 2.0), beta)
    dt = time.perf_counter() - t0
    ok = min(margins) > 1e-4 and within and dt < 30
    report(4, ok, f"min margin {min(margins):.4f}, bound respected {within}", t0)


def test_5_xi_validation():
    t0 = time.perf_counter()
    g = np.random.default_rng(5)
    bad = 0
    for j in range(100):
        cfg = envmod.EnvConfig(((3, 0.4), (4, 0.3), (7, 0.3)), None, (0.5, 2.0), 2000, int(g.integers(2 ** 32)))
        e = envmod.generate(cfg)
        lam = float(g.uniform(0.05, 5.0))
        est = mobius.xi(e, lam)
        _, _, r = mobius.matrix_product_ratio(e, lam, min(4 * est.iterations + 50, e.horizon))
        if abs(r - est.inv_xi) > est.contraction_bound + 1e-13:
            bad += 1
    worst = 0.0
    for d, ell, lam in ((3, 1.0, 0.5), (4, 2.0, 1.0), (10, 0.5, 3.0)):
        est = mobius.xi(envmod.constant_env(d, ell, 400), lam)
        worst = max(worst, abs(est.xi - mobius.xi_constant(d, ell, lam)))
    dt = time.perf_counter() - t0
    report(5, bad == 0 and worst < 1e-10 and dt < 10, f"{bad}/100 outside bound, constant err {worst:.1e}", t0)


def test_6_mc_hitting_oracle():
    t0 = time.perf_counter()
    e = envmod.constant_env(3, 1.0, 2000)
    zs = []
    for lam in (0.25, 1.0):
        exact = lyapunov.w_laplace(e, lam)
        r = mcsim.hitting_time_laplace_mc(e, 1, 0, lam, 10 ** 6, seed=1, threads=4)
        zs.append((r.estimate - exact) / r.std_error)
    dt = time.perf_counter() - t0
    report(6, max(abs(z) for z in zs) < 3 and dt < 120, "z-scores " + ", ".join(f"{z:+.2f}" for z in zs), t0)


def test_7_lyapunov_identity_trend():
    t0 = time.perf_counter()
    e = envmod.constant_env(3, 1.0, 2000)
    target = lyapunov.mu_constant(3, 1.0, 1.0)
    rows = mcsim.ldp_trend(e, 0.5, 1.5, 1.0, [10, 20, 40], 10 ** 4, seed=3, threads=4)
    dist = [abs(r.value - target) for r in rows]
    monotone = all(a >= b for a, b in zip(dist, dist[1:]))
    close = dist[-1] <= 0.05 * abs(target)
    dt = time.perf_counter() - t0
    vals = ", ".join(f"{r.value:.5f}" for r in rows)
    report(7, monotone and close and dt < 300, f"t=10,20,40 -> {vals} vs {target:.5f}", t0)


def test_8_pde_end_to_end():
    t0 = time.perf_counter()
    tree = envmod.constant_env(3, 1.0, 400)
    c_pred = speed.speed_constant_closed_form(3, 1.0, 5.0).c_star
    tr = pde.solve(pde.auto_config(tree, 5.0, c_pred, 40.0))
    err_tree = abs(tr.fitted_speed / c_pred - 1)
    line = envmod.constant_env(2, 1.0, 400)
    tr_line = pde.solve(pde.PdeConfig(line, half_width=200, t_max=60, beta=2.0))
    err_line = abs(tr_line.fitted_speed / 2.0 - 1)
    fitted = []
    for d in (2, 4, 10):
        c = speed.speed_constant_closed_form(d, 1.0, 5.0).c_star
        fitted.append(pde.solve(pde.auto_config(envmod.constant_env(d, 1.0, 400), 5.0, c, 30.0)).fitted_speed)
    ordered = fitted[0] > fitted[1] > fitted[2]
    dt = time.perf_counter() - t0
    ok = err_tree < 0.07 and err_line < 0.05 and ordered and dt < 600
    report(8, ok, f"tree err {err_tree:.2%}, line err {err_line:.2%}, d=2,4,10 -> "
           + ", ".join(f"{c:.3f}" for c in fitted), t0)


def test_9_rate_function():
    t0 = time.perf_counter()
    problems = []
    for e in (envmod.constant_env(3, 1.0, 3000), random_envs()[0]):
        m = lyapunov.LyapunovModel(e, "ergodic")
        grid = np.linspace(0.02, 10.0, 50)
        mu = np.array([m.mu_negative(x) for x in grid])
        if not (np.all(mu < 0) and np.all(np.diff(mu) < 0) and np.all(np.diff(mu, 2) > -1e-10)):
            problems.append("mu shape")
        I = lyapunov.RateFunction(m)
        mp = I.mu_prime0
        a = np.linspace(0.02 * mp, mp, 50)
        vals = np.array([I(x)[0] for x in a])
        if not (np.all(np.diff(vals) < 0) and np.all(np.diff(vals, 2) > -1e-8)):
            problems.append("I shape")
        if abs(vals[-1] + m.mu0()) > 1e-6 * abs(m.mu0()):
            problems.append("I(mu'(0))")
        for beta in (2.0, 5.0, 20.0):
            c = speed.speed_variational(m, beta).c_star
            if abs(c * I(1.0 / c)[0] / beta - 1) > 1e-6:
                problems.append(f"speed identity beta={beta}")
    dt = time.perf_counter() - t0
    report(9, not problems and dt < 30, "all properties hold" if not problems else "; ".join(problems), t0)


def test_10_limits():
    t0 = time.perf_counter()
    ratio = speed.speed_constant_closed_form(3, 1.0, 1e4).c_star / math.sqrt(2e4)
    cs = []
    for d in (10, 100, 1000):
        bc = speed.beta_c_constant(d, 1.0)
        cs.append(speed.speed_constant_closed_form(d, 1.0, bc + 1e-3).c_star)
    gaps = [abs(1 - c) for c in cs]
    trend = all(a > b for a, b in zip(gaps, gaps[1:]))
    dt = time.perf_counter() - t0
    ok = ratio > 0.9 and trend and dt < 60
    report(10, ok, f"c*/sqrt(2 beta) at 1e4 = {ratio:.5f}; c*(beta_c+1e-3) = "
           + ", ".join(f"{c:.5f}" for c in cs), t0)
