"""Pure-Python implementations of the compiled kernels in `_core.pyx`.

Same signatures, same random streams, same results up to floating-point
summation order.
"""

import math

import numpy as np
from scipy.linalg import solve_banded

from . import rng

BACKEND = "python"

J_T = 0.64
J_K = math.pi ** 2 / 8.0
_p = (4.0 / math.pi) * math.exp(-J_K * J_T)
J_RATIO = _p / (_p + 2.0 * math.erfc(1.25 / math.sqrt(2.0)))


def uniforms(key, start, n):
    return rng.uniforms(key, start, n)


def backward_sweep(gm1, zeta, x_end):
    n = len(gm1)
    x = np.empty(n)
    y = np.empty(n)
    xc, yc = x_end, 1.0 - x_end
    for i in range(n - 1, -1, -1):
        g = gm1[i]
        z = zeta[i]
        xc = (z * (1.0 + g) + xc) / (1.0 + g + z * xc)
        yc = (1.0 - z) * (g + yc) / (1.0 + g + z * (1.0 - yc))
        x[i] = xc
        y[i] = yc
    return x, y


def sigma_sweep(rho, s_end):
    n = len(rho)
    s = np.empty(n)
    c = s_end
    for i in range(n - 1, -1, -1):
        c = rho[i] * (1.0 + c)
        s[i] = c
    return s


def log_partition(jp, jm, k):
    jp = np.asarray(jp, dtype=float)
    jm = np.asarray(jm, dtype=float)
    H = jp.size
    Z = np.zeros(H)
    Z[0] = 1.0
    out = np.empty(k)
    logscale = 0.0
    for m in range(k):
        for _ in range(2):
            N = np.zeros(H)
            N[1:] += Z[:-1] * jp[:-1]
            N[:-1] += Z[1:] * jm[1:]
            tot = N.sum()
            Z = N / tot
            logscale += math.log(tot)
        out[m] = math.log(Z[0]) + logscale if Z[0] > 0 else -math.inf
    return out


def _a_n(n, x):
    c = math.pi * (n + 0.5)
    if x > J_T:
        return c * math.exp(-(n + 0.5) ** 2 * math.pi ** 2 * x / 2.0)
    return c * (2.0 / (math.pi * x)) ** 1.5 * math.exp(-2.0 * (n + 0.5) ** 2 / x)


def sample_j1(s: rng.Stream) -> float:
    while True:
        if s.uniform() < J_RATIO:
            X = J_T - math.log(s.uniform()) / J_K
        else:
            while True:
                z = math.sqrt(1.5625 - 2.0 * math.log(s.uniform()))
                if s.uniform() * z < 1.25:
                    break
            X = 1.0 / (z * z)
        S = _a_n(0, X)
        Y = s.uniform() * S
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                S -= _a_n(n, X)
                if Y <= S:
                    return X
            else:
                S += _a_n(n, X)
                if Y > S:
                    break


def skew_exit(p, a, b, s: rng.Stream):
    pos = 0.0
    t = 0.0
    while True:
        if pos == 0.0:
            r = a if a < b else b
            t += r * r * sample_j1(s)
            if s.uniform() < p:
                if r == b:
                    return 1, t
                pos = r
            else:
                if r == a:
                    return -1, t
                pos = -r
        elif pos > 0.0:
            d1, d2 = pos, b - pos
            r = d1 if d1 < d2 else d2
            t += r * r * sample_j1(s)
            if s.uniform() < 0.5:
                if r == d2:
                    return 1, t
                pos = pos + r
            else:
                pos = 0.0 if r == d1 else pos - r
        else:
            d1, d2 = -pos, a + pos
            r = d1 if d1 < d2 else d2
            t += r * r * sample_j1(s)
            if s.uniform() < 0.5:
                if r == d2:
                    return -1, t
                pos = pos - r
            else:
                pos = 0.0 if r == d1 else pos + r


def exit_times(key, start, n):
    return np.array([sample_j1(rng.Stream(rng.substream(key, start + k))) for k in range(n)])


def skew_exits(key, start, n, p, a, b):
    sides = np.empty(n, dtype=np.int8)
    times = np.empty(n)
    for k in range(n):
        sides[k], times[k] = skew_exit(p, a, b, rng.Stream(rng.substream(key, start + k)))
    return sides, times


def hit_paths(key, start, times, status, pr, gl, gr, offset, i0, target, escape, lam, kill_log, max_steps):
    m = len(pr)
    for k in range(len(times)):
        s = rng.Stream(rng.substream(key, start + k))
        i = i0
        T = 0.0
        steps = 0
        st = 3
        while steps < max_steps:
            j = i + offset
            if j < 0 or j >= m:
                break
            side, dt = skew_exit(pr[j], gl[j], gr[j], s)
            T += dt
            i += side
            steps += 1
            if i == target:
                st = 0
                break
            if lam > 0.0 and lam * T > kill_log:
                st = 1
                break
            if i == escape:
                st = 2
                break
        status[k] = st
        times[k] = T if st == 0 else math.inf


def lattice_paths(key, start, final, times, right_prob, dt_right, dt_left, start_node, lo, hi, t_max):
    # vectorized across paths; path k always consumes its own counter sequence
    n = len(final)
    keys = rng.substream_keys(key, start, n)
    node = np.full(n, start_node, dtype=np.int64)
    T = np.zeros(n)
    active = np.arange(n)
    counter = 0
    right_prob = np.asarray(right_prob)
    dt_right = np.asarray(dt_right)
    dt_left = np.asarray(dt_left)
    while True:
        a = active[(T[active] < t_max) & (node[active] != lo) & (node[active] != hi)]
        if a.size == 0:
            break
        u = rng.uniforms_at(keys[a], counter)
        nd = node[a]
        go = u < right_prob[nd]
        T[a] += np.where(go, dt_right[nd], dt_left[nd])
        node[a] = nd + np.where(go, 1, -1)
        active = a
        counter += 1
    final[:] = node
    times[:] = T


class TridiagSolver:
    def __init__(self, lower, diag, upper):
        n = len(diag)
        ab = np.zeros((3, n))
        ab[0, 1:] = np.asarray(upper, dtype=float)[:-1]
        ab[1] = diag
        ab[2, :-1] = np.asarray(lower, dtype=float)[1:]
        self.ab = ab

    def solve(self, rhs):
        return solve_banded((1, 1), self.ab, rhs, check_finite=False)
