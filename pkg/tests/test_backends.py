"""The compiled core and the pure-Python fallback must agree bit for bit on streams."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewfront import _fallback, env as envmod, mcsim, mobius, rng

_core = pytest.importorskip("skewfront._core")

keys = st.integers(0, 2 ** 64 - 1)


@given(keys, st.integers(0, 10 ** 9), st.integers(1, 64))
@settings(max_examples=50)
def test_uniforms_identical(key, start, n):
    assert np.array_equal(_core.uniforms(key, start, n), _fallback.uniforms(key, start, n))
    assert np.array_equal(_core.uniforms(key, start, n), rng.uniforms(key, start, n))


@given(keys, st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_exit_times_identical(key, start):
    assert np.array_equal(_core.exit_times(key, start, 50), _fallback.exit_times(key, start, 50))


@given(keys, st.floats(0.5, 0.95), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
@settings(max_examples=25, deadline=None)
def test_skew_exits_identical(key, p, a, b):
    s1, t1 = _core.skew_exits(key, 0, 40, p, a, b)
    s2, t2 = _fallback.skew_exits(key, 0, 40, p, a, b)
    assert np.array_equal(s1, s2) and np.allclose(t1, t2, rtol=1e-13, atol=0)


def test_hit_paths_identical():
    e = envmod.generate(envmod.EnvConfig(((3, 0.5), (4, 0.5)), None, (0.5, 2.0), 400, 1))
    pr, gl, gr, M = mcsim.walk_arrays(e)
    out = []
    for mod in (_core, _fallback):
        times = np.empty(300)
        status = np.empty(300, dtype=np.int8)
        mod.hit_paths(123, 0, times, status, pr, gl, gr, M, 2, 0, M + 10 ** 9, 0.7, 27.6, 10 ** 6)
        out.append((times, status))
    assert np.array_equal(out[0][1], out[1][1])
    assert np.allclose(out[0][0], out[1][0], rtol=1e-12)


def test_lattice_paths_identical(tree31):
    lat = mcsim.build_lattice(tree31, 0.125, 6)
    res = []
    for mod in (_core, _fallback):
        final = np.empty(200, dtype=np.int64)
        times = np.empty(200)
        mod.lattice_paths(77, 0, final, times, lat.right_prob, lat.dt_right, lat.dt_left,
                          lat.node(1), 0, len(lat.x) - 1, 5.0)
        res.append((final, times))
    assert np.array_equal(res[0][0], res[1][0])
    assert np.allclose(res[0][1], res[1][1], rtol=1e-12)


def test_sweeps_identical(random_env):
    gm1, zeta = mobius.sweep_params(random_env, 0.9, 2000)
    for x_end in (0.0, 1.0):
        a = _core.backward_sweep(gm1, zeta, x_end)
        b = _fallback.backward_sweep(gm1, zeta, x_end)
        assert np.allclose(a[0], b[0], rtol=1e-14) and np.allclose(a[1], b[1], rtol=1e-13)
    rho = np.linspace(0.2, 0.6, 500)
    assert np.allclose(_core.sigma_sweep(rho, 0.3), _fallback.sigma_sweep(rho, 0.3), rtol=1e-14)


def test_log_partition_identical():
    g = np.random.default_rng(0)
    jp, jm = g.uniform(0.1, 0.6, 40), g.uniform(0.1, 0.6, 40)
    assert np.allclose(_core.log_partition(jp, jm, 30), _fallback.log_partition(jp, jm, 30), rtol=1e-13)


def test_tridiag_identical():
    g = np.random.default_rng(1)
    n = 300
    lo, up = -g.uniform(0.1, 1, n), -g.uniform(0.1, 1, n)
    dg = 1.0 - lo - up
    rhs = g.uniform(size=n)
    x1 = _core.TridiagSolver(lo, dg, up).solve(rhs)
    x2 = _fallback.TridiagSolver(lo, dg, up).solve(rhs)
    assert np.allclose(x1, x2, rtol=1e-12)
    A = np.diag(dg) + np.diag(lo[1:], -1) + np.diag(up[:-1], 1)
    assert np.allclose(A @ x1, rhs, atol=1e-12)


def test_fallback_selected_by_env_var():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-c", "from skewfront._backend import BACKEND; print(BACKEND)"],
                         env={"SKEWFRONT_BACKEND": "python", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
