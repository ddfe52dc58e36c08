"""Interface quantities of the embedded walk.

At an interface with skewness p, left gap a and right gap b, the process
started at the interface leaves (-a, b) to the right with probability
a p / (b (1-p) + a p). Its exponential moments E[exp(eta sigma); side]
solve 1/2 u'' + eta u = 0 on both sides with the flux condition
p u'(0+) = (1-p) u'(0-). With k = sqrt(2|eta|) this gives

    D     = p s(ka) c(kb) + (1-p) c(ka) s(kb)
    J_+   = p s(ka) / D,      J_- = (1-p) s(kb) / D

where (s, c) = (sinh, cosh) for eta < 0 and (sin, cos) for eta > 0. For
eta > 0 the moments blow up at the first zero of D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .env import TreeEnvironment
from .errors import DomainError, InsufficientHorizonError


@dataclass(frozen=True)
class SkewExitKernel:
    p: float
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"skewness {self.p} not in (0, 1)")
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("gaps must be positive and finite")


def kernel_at(env: TreeEnvironment, i: int) -> SkewExitKernel:
    """Kernel at signed interface i; needs l_{|i|} materialized."""
    n = abs(i)
    if n >= env.horizon:
        raise InsufficientHorizonError(f"kernel at interface {i}", n + 1)
    if i == 0:
        return SkewExitKernel(0.5, env.gap(0), env.gap(0))
    if i > 0:
        return SkewExitKernel(env.p(i), env.gap(i - 1), env.gap(i))
    return SkewExitKernel(env.p(i), env.gap(n), env.gap(n - 1))


def exit_probabilities(k: SkewExitKernel) -> tuple[float, float]:
    up = k.a * k.p / (k.b * (1.0 - k.p) + k.a * k.p)
    return up, 1.0 - up


def _first_root_k(p: float, a: float, b: float) -> float:
    lo_k, hi_k = math.pi / (2 * max(a, b)), math.pi / (2 * min(a, b))
    if hi_k - lo_k <= 1e-15 * hi_k:
        return lo_k

    def D(k):
        return p * math.sin(k * a) * math.cos(k * b) + (1 - p) * math.cos(k * a) * math.sin(k * b)

    # D > 0 below pi/(2 max) and D <= 0 at pi/(2 min); scan for the first sign change
    grid = np.linspace(lo_k, hi_k, 65)
    prev = grid[0]
    for kk in grid[1:]:
        if D(kk) <= 0:
            if D(kk) == 0:
                return float(kk)
            return brentq(D, prev, kk, xtol=1e-15)
        prev = kk
    return hi_k


def divergence_threshold(k: SkewExitKernel) -> float:
    """Smallest eta > 0 at which the exponential moments become infinite."""
    kk = _first_root_k(k.p, k.a, k.b)
    return 0.5 * kk * kk


def exit_laplace(k: SkewExitKernel, eta: float) -> tuple[float, float]:
    jp, jm = exit_laplace_arrays(np.array([k.p]), np.array([k.a]), np.array([k.b]), eta)
    return float(jp[0]), float(jm[0])


def exit_laplace_arrays(p, a, b, eta: float, thresholds=None):
    """Vectorized J_+, J_- for arrays of kernels at one eta."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if eta == 0.0:
        up = a * p / (b * (1.0 - p) + a * p)
        return up, 1.0 - up
    if eta < 0.0:
        kk = math.sqrt(-2.0 * eta)
        ta, tb = np.tanh(kk * a), np.tanh(kk * b)
        den = p * ta + (1.0 - p) * tb
        with np.errstate(over="ignore"):
            return p * ta / (np.cosh(kk * b) * den), (1.0 - p) * tb / (np.cosh(kk * a) * den)
    kk = math.sqrt(2.0 * eta)
    if thresholds is None:
        thresholds = np.array([divergence_threshold(SkewExitKernel(pi, ai, bi)) for pi, ai, bi in zip(p, a, b)])
    sa, sb = np.sin(kk * a), np.sin(kk * b)
    D = p * sa * np.cos(kk * b) + (1.0 - p) * np.cos(kk * a) * sb
    ok = eta < thresholds
    with np.errstate(divide="ignore", invalid="ignore"):
        jp = np.where(ok, p * sa / D, np.inf)
        jm = np.where(ok, (1.0 - p) * sb / D, np.inf)
    return jp, jm


def interface_arrays(env: TreeEnvironment, n: int | None = None):
    """(p_i, l_{i-1}, l_i) for i = 1..n, default n = N - 1."""
    n = env.horizon - 1 if n is None else n
    if n > env.horizon - 1:
        raise InsufficientHorizonError("interface kernels", n + 1)
    return env.skewness[:n], env.lengths[:n], env.lengths[1 : n + 1]


def step_probabilities(env: TreeEnvironment, n: int | None = None):
    p, a, b = interface_arrays(env, n)
    up = a * p / (b * (1.0 - p) + a * p)
    return up, 1.0 - up


def _min_skewness(env: TreeEnvironment) -> float:
    if env.config is not None:
        dmin = min(d for d, w in env.config.degree_support if w > 0)
    else:
        dmin = int(env.degrees.min())
    return (dmin - 1) / dmin


def ratio_bound(env: TreeEnvironment) -> float:
    """Uniform bound on the one-step ratios l_j (1-p_j) / (l_{j-1} p_j)."""
    _, lo, hi = env.bounds()
    p_lo = _min_skewness(env)
    return hi * (1.0 - p_lo) / (lo * p_lo)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    sigma_i: float
    sigma_1: float
    terms: int
    status: str  # certified | estimated | divergent


def hit_probability_details(env: TreeEnvironment, i: int = 1, tol: float = 1e-12, cap: int | None = None) -> SeriesResult:
    """Probability that the walk started at z_i ever reaches 0."""
    if i < 1:
        raise DomainError("index must be >= 1")
    p, a, b = interface_arrays(env)
    if cap is not None:
        p, a, b = p[:cap], a[:cap], b[:cap]
    n = p.size
    if n < i:
        raise InsufficientHorizonError("hit probability", i + 1)
    logrho = np.log(b) + np.log1p(-p) - np.log(a) - np.log(p)
    logt = np.cumsum(logrho)  # log of prod_{j<=k} rho_j, k = 1..n
    rb = ratio_bound(env)
    if rb < 1.0:
        tail = logt + math.log(rb / (1.0 - rb))
        ok = np.flatnonzero(tail <= math.log(tol))
        if ok.size == 0:
            extra = math.ceil((math.log(tol) - tail[-1]) / math.log(rb))
            raise InsufficientHorizonError("hit probability tail not certified", env.horizon + max(extra, 1))
        K = max(int(ok[0]) + 1, i)
        status = "certified"
    else:
        small = np.flatnonzero(logt < math.log(1e-14))
        if small.size:
            K = max(int(small[0]) + 1, i)
            status = "estimated"
        elif np.mean(logrho) >= 0.0:
            return SeriesResult(1.0, math.inf, math.inf, n, "divergent")
        else:
            need = math.ceil(math.log(1e-14) / np.mean(logrho))
            raise InsufficientHorizonError("hit probability series not settled", need + 1)
    terms = np.exp(logt[:K])
    s1 = float(terms.sum())
    si = float(terms[i - 1 :].sum())
    return SeriesResult(si / (1.0 + s1), si, s1, K, status)


def hit_probability_series(env: TreeEnvironment, i: int = 1) -> float:
    return hit_probability_details(env, i).value


def eta_c_sufficient_condition(env: TreeEnvironment) -> bool:
    """max_i p^i_up p^(i+1)_down < 1/4, which guarantees eta_c > 0."""
    up, down = step_probabilities(env)
    if up.size < 2:
        return False
    return bool(np.max(up[:-1] * down[1:]) < 0.25)
