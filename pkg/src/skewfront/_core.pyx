# cython: language_level=3
"""Compiled hot loops. `_fallback.py` mirrors every function here."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs, INFINITY, M_PI
from libc.stdint cimport uint64_t, int64_t, int8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0
cdef double J_T = 0.64
cdef double J_K = M_PI * M_PI / 8.0
# mixture weight of the right-hand proposal, p / (p + q) with
# p = (4/pi) exp(-K t) and q = 4 (1 - Phi(1/sqrt(t)))
cdef double J_RATIO
J_RATIO = (4.0 / M_PI) * exp(-J_K * J_T)
from math import erfc as _erfc
J_RATIO = J_RATIO / (J_RATIO + 2.0 * _erfc(1.25 / 2.0 ** 0.5))

BACKEND = "compiled"


cdef inline uint64_t mix64(uint64_t x) noexcept nogil:
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef inline uint64_t substream(uint64_t key, uint64_t index) noexcept nogil:
    return mix64(key ^ mix64((index + 1) * GOLDEN))


cdef inline double uni(uint64_t key, uint64_t* ctr) noexcept nogil:
    ctr[0] += 1
    return (<double>(mix64(key + ctr[0] * GOLDEN) >> 11) + 0.5) * INV53


def uniforms(uint64_t key, uint64_t start, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef uint64_t ctr = start
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = uni(key, &ctr)
    return out


# ---------------------------------------------------------------- Moebius

def backward_sweep(double[::1] gm1, double[::1] zeta, double x_end):
    """x[i] = Phi_i(x[i+1]) from x[n] = x_end; y = 1 - x tracked separately."""
    cdef Py_ssize_t n = gm1.shape[0], i
    x_arr = np.empty(n)
    y_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef double[::1] y = y_arr
    cdef double xc = x_end, yc = 1.0 - x_end, g, z
    with nogil:
        for i in range(n - 1, -1, -1):
            g = gm1[i]
            z = zeta[i]
            xc = (z * (1.0 + g) + xc) / (1.0 + g + z * xc)
            yc = (1.0 - z) * (g + yc) / (1.0 + g + z * (1.0 - yc))
            x[i] = xc
            y[i] = yc
    return x_arr, y_arr


def sigma_sweep(double[::1] rho, double s_end):
    """s[i] = rho[i] * (1 + s[i+1]) from s[n] = s_end."""
    cdef Py_ssize_t n = rho.shape[0], i
    out = np.empty(n)
    cdef double[::1] s = out
    cdef double c = s_end
    with nogil:
        for i in range(n - 1, -1, -1):
            c = rho[i] * (1.0 + c)
            s[i] = c
    return out


def log_partition(double[::1] jp, double[::1] jm, Py_ssize_t k):
    """log of the weight of 2m-step paths 1 -> 1 staying in heights 1..H, m = 1..k."""
    cdef Py_ssize_t H = jp.shape[0], h, m, s
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zs = np.zeros(H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] nz = np.zeros(H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(k)
    cdef double[::1] Z = zs
    cdef double[::1] N = nz
    cdef double logscale = 0.0, tot
    Z[0] = 1.0
    with nogil:
        for m in range(k):
            for s in range(2):
                tot = 0.0
                for h in range(H):
                    N[h] = 0.0
                    if h > 0:
                        N[h] += Z[h - 1] * jp[h - 1]
                    if h < H - 1:
                        N[h] += Z[h + 1] * jm[h + 1]
                    tot += N[h]
                for h in range(H):
                    Z[h] = N[h] / tot
                logscale += log(tot)
            out[m] = log(Z[0]) + logscale if Z[0] > 0 else -INFINITY
    return out


# ---------------------------------------------------------------- exit times

cdef inline double _a_n(int n, double x) noexcept nogil:
    cdef double c = M_PI * (n + 0.5)
    if x > J_T:
        return c * exp(-(n + 0.5) * (n + 0.5) * M_PI * M_PI * x / 2.0)
    return c * (2.0 / (M_PI * x)) ** 1.5 * exp(-2.0 * (n + 0.5) * (n + 0.5) / x)


cdef double sample_j1(uint64_t key, uint64_t* ctr) noexcept nogil:
    """Exit time of standard BM from (-1, 1) started at 0 (alternating series)."""
    cdef double X, S, Y, z
    cdef int n
    while True:
        if uni(key, ctr) < J_RATIO:
            X = J_T - log(uni(key, ctr)) / J_K
        else:
            while True:
                z = sqrt(1.5625 - 2.0 * log(uni(key, ctr)))
                if uni(key, ctr) * z < 1.25:
                    break
            X = 1.0 / (z * z)
        S = _a_n(0, X)
        Y = uni(key, ctr) * S
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


cdef double skew_exit(double p, double a, double b, uint64_t key, uint64_t* ctr, int* side) noexcept nogil:
    """Joint (side, time) of skew BM leaving (-a, b) from the skew point 0."""
    cdef double pos = 0.0, t = 0.0, r, d1, d2
    while True:
        if pos == 0.0:
            r = a if a < b else b
            t += r * r * sample_j1(key, ctr)
            if uni(key, ctr) < p:
                if r == b:
                    side[0] = 1
                    return t
                pos = r
            else:
                if r == a:
                    side[0] = -1
                    return t
                pos = -r
        elif pos > 0.0:
            d1 = pos
            d2 = b - pos
            r = d1 if d1 < d2 else d2
            t += r * r * sample_j1(key, ctr)
            if uni(key, ctr) < 0.5:
                if r == d2:
                    side[0] = 1
                    return t
                pos = pos + r
            else:
                pos = 0.0 if r == d1 else pos - r
        else:
            d1 = -pos
            d2 = a + pos
            r = d1 if d1 < d2 else d2
            t += r * r * sample_j1(key, ctr)
            if uni(key, ctr) < 0.5:
                if r == d2:
                    side[0] = -1
                    return t
                pos = pos - r
            else:
                pos = 0.0 if r == d1 else pos + r


def exit_times(uint64_t key, uint64_t start, Py_ssize_t n):
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t k
    cdef uint64_t ctr
    with nogil:
        for k in range(n):
            ctr = 0
            o[k] = sample_j1(substream(key, start + k), &ctr)
    return out


def skew_exits(uint64_t key, uint64_t start, Py_ssize_t n, double p, double a, double b):
    sides = np.empty(n, dtype=np.int8)
    times = np.empty(n)
    cdef int8_t[::1] s = sides
    cdef double[::1] t = times
    cdef Py_ssize_t k
    cdef uint64_t ctr
    cdef int side = 0
    with nogil:
        for k in range(n):
            ctr = 0
            t[k] = skew_exit(p, a, b, substream(key, start + k), &ctr, &side)
            s[k] = side
    return sides, times


def hit_paths(uint64_t key, uint64_t start, double[::1] times, int8_t[::1] status,
              double[::1] pr, double[::1] gl, double[::1] gr, Py_ssize_t offset,
              Py_ssize_t i0, Py_ssize_t target, Py_ssize_t escape, double lam,
              double kill_log, long max_steps):
    """Embedded walk from i0 until it reaches `target`.

    status: 0 hit, 1 killed by weight, 2 escaped past `escape`, 3 capped or left the window.
    times[k] holds the hitting time (inf unless hit).
    """
    cdef Py_ssize_t n = times.shape[0], m = pr.shape[0], k, i, j
    cdef uint64_t ctr, pkey
    cdef double T
    cdef long steps
    cdef int side = 0
    with nogil:
        for k in range(n):
            pkey = substream(key, start + k)
            ctr = 0
            i = i0
            T = 0.0
            steps = 0
            status[k] = 3
            while steps < max_steps:
                j = i + offset
                if j < 0 or j >= m:
                    break
                T += skew_exit(pr[j], gl[j], gr[j], pkey, &ctr, &side)
                i += side
                steps += 1
                if i == target:
                    status[k] = 0
                    break
                if lam > 0.0 and lam * T > kill_log:
                    status[k] = 1
                    break
                if i == escape:
                    status[k] = 2
                    break
            times[k] = T if status[k] == 0 else INFINITY
    return None


def lattice_paths(uint64_t key, uint64_t start, int64_t[::1] final, double[::1] times,
                  double[::1] right_prob, double[::1] dt_right, double[::1] dt_left,
                  Py_ssize_t start_node, Py_ssize_t lo, Py_ssize_t hi, double t_max):
    """Nearest-neighbour lattice walk absorbed at nodes lo/hi or stopped at t_max."""
    cdef Py_ssize_t n = final.shape[0], k, node
    cdef uint64_t ctr, pkey
    cdef double T
    with nogil:
        for k in range(n):
            pkey = substream(key, start + k)
            ctr = 0
            node = start_node
            T = 0.0
            while T < t_max and node != lo and node != hi:
                if uni(pkey, &ctr) < right_prob[node]:
                    T += dt_right[node]
                    node += 1
                else:
                    T += dt_left[node]
                    node -= 1
            final[k] = node
            times[k] = T
    return None


# ---------------------------------------------------------------- tridiagonal

cdef class TridiagSolver:
    """Thomas algorithm with the elimination factors computed once."""

    cdef double[::1] lower
    cdef double[::1] cp
    cdef double[::1] inv
    cdef Py_ssize_t n

    def __init__(self, lower, diag, upper):
        cdef double[::1] a = np.ascontiguousarray(lower, dtype=float)
        cdef double[::1] b = np.ascontiguousarray(diag, dtype=float)
        cdef double[::1] c = np.ascontiguousarray(upper, dtype=float)
        cdef Py_ssize_t i, n = b.shape[0]
        cdef double den
        self.n = n
        self.lower = a
        self.cp = np.zeros(n)
        self.inv = np.zeros(n)
        for i in range(n):
            den = b[i] - (a[i] * self.cp[i - 1] if i > 0 else 0.0)
            self.inv[i] = 1.0 / den
            self.cp[i] = c[i] / den if i < n - 1 else 0.0

    def solve(self, rhs):
        cdef double[::1] d = np.ascontiguousarray(rhs, dtype=float)
        out = np.empty(self.n)
        cdef double[::1] x = out
        cdef Py_ssize_t i, n = self.n
        with nogil:
            x[0] = d[0] * self.inv[0]
            for i in range(1, n):
                x[i] = (d[i] - self.lower[i] * x[i - 1]) * self.inv[i]
            for i in range(n - 2, -1, -1):
                x[i] -= self.cp[i] * x[i + 1]
        return out
