"""Lyapunov exponent mu(eta), its data at 0, eta_c, and the rate function I(a).

For lambda > 0,

    mu(-lambda) = -sqrt(2 lambda) + E[ln((xi - 1) / (xi - exp(-2 sqrt(2 lambda) l_0)))] / E[l],

estimated by an ergodic average over the interfaces of one environment:
a backward Moebius sweep gives 1/xi seen from every interface at once.
Sweeps started from 0 and from 1 bracket each value, and only interfaces
whose bracket has closed are used.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import kernel, mobius
from ._backend import impl
from ._golden import golden_max
from .env import EnvConfig, TreeEnvironment
from .errors import DomainError, InsufficientHorizonError

BRACKET_TOL = 1e-12
MIN_SAMPLES = 16


def mu_constant(d: int, ell: float, lam: float) -> float:
    """Closed form mu(-lambda) for the constant (d, l) tree."""
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    a = math.sqrt(2.0 * lam)
    if d == 2:
        return -a
    p = (d - 1) / d
    z = 2.0 * p - 1.0
    q = math.exp(-2.0 * a * ell)
    # ln(4p / (1 + g^2 - sqrt((g^2-1)^2 + 4 z^2 g^2))) rewritten without cancellation
    s = math.sqrt((1.0 - q) ** 2 + 4.0 * z * z * q)
    return -a - math.log(p * (1.0 + q + s) / (1.0 - z * z)) / ell


def mu0_constant(d: int, ell: float) -> float:
    p = (d - 1) / d
    return math.log((1.0 - p) / p) / ell


def mu_prime0_constant(d: int, ell: float) -> float:
    if d == 2:
        return math.inf
    return ell / (2.0 * (d - 1) / d - 1.0)


def eta_c_constant(d: int, ell: float) -> float:
    p = (d - 1) / d
    return math.acos(2.0 * math.sqrt(p * (1.0 - p))) ** 2 / (2.0 * ell * ell)


class LyapunovModel:
    """mu(eta) for eta <= 0 on one environment, with per-interface terms exposed.

    estimator: 'ergodic' (sweep average), 'closed_form' (constant trees only)
    or 'auto' (closed form when the environment is constant).
    """

    def __init__(self, env: TreeEnvironment, estimator: str = "auto", xi_tol: float = BRACKET_TOL):
        if estimator not in ("auto", "ergodic", "closed_form"):
            raise ValueError(f"unknown estimator {estimator!r}")
        self.env = env
        self.line = env.is_line()
        const = env.is_constant()
        if estimator == "closed_form" and not const:
            raise DomainError("closed-form estimator needs a constant environment")
        self.closed = const and estimator != "ergodic"
        self.xi_tol = xi_tol
        self.n = env.horizon - 1
        if self.n < MIN_SAMPLES and not self.closed:
            raise InsufficientHorizonError("ergodic average", MIN_SAMPLES + 1)
        self.ell_prev = env.lengths[: self.n]  # l_{i-1}, i = 1..n
        self._d = int(env.degrees[0])
        self._l = float(env.lengths[0])

    # per-interface terms ------------------------------------------------
    def terms(self, lam: float):
        """(ln w_i, valid) for i = 1..n, w_i the hitting transform from z_i to z_{i-1}."""
        a = math.sqrt(2.0 * lam)
        lnw = -a * self.ell_prev
        if self.line:
            return lnw, np.ones(self.n, dtype=bool)
        gm1, zeta = mobius.sweep_params(self.env, lam, self.n)
        x_hi, y = impl.backward_sweep(gm1, zeta, 1.0)
        x_lo, _ = impl.backward_sweep(gm1, zeta, 0.0)
        valid = (x_hi - x_lo) <= self.xi_tol
        one_minus_e = -np.expm1(-2.0 * a * self.ell_prev)
        e = 1.0 - one_minus_e
        with np.errstate(divide="ignore"):
            lnw = lnw + np.log(y) - np.log(one_minus_e + e * y)
        return lnw, valid

    def terms0(self):
        """(ln w0_i, valid) at lambda = 0 from the hitting-probability recursion."""
        if self.line:
            return np.zeros(self.n), np.ones(self.n, dtype=bool)
        p, a, b = kernel.interface_arrays(self.env, self.n)
        rho = b * (1.0 - p) / (a * p)
        lo = impl.sigma_sweep(rho, 0.0)
        rb = kernel.ratio_bound(self.env)
        if rb < 1.0:
            hi = impl.sigma_sweep(rho, rb / (1.0 - rb))
            valid = (hi - lo) <= self.xi_tol * (1.0 + lo)
        else:
            suffix = np.cumsum(np.log(rho)[::-1])[::-1]
            valid = suffix < math.log(1e-14)
        return -np.log1p(1.0 / lo), valid

    def _average(self, lnw, valid) -> float:
        if valid.sum() < MIN_SAMPLES:
            raise InsufficientHorizonError("too few converged interfaces", 2 * self.env.horizon)
        return float(lnw[valid].sum() / self.ell_prev[valid].sum())

    # mu -----------------------------------------------------------------
    def mu_negative(self, lam: float) -> float:
        if not lam > 0:
            raise DomainError("mu_negative needs lambda > 0")
        if self.line:
            return -math.sqrt(2.0 * lam)
        if self.closed:
            return mu_constant(self._d, self._l, lam)
        return self._average(*self.terms(lam))

    def mu0(self) -> float:
        if self.line:
            return 0.0
        if self.closed:
            return mu0_constant(self._d, self._l)
        return self._average(*self.terms0())

    def mu(self, eta: float) -> float:
        if eta > 0:
            raise DomainError("mu(eta) for eta > 0 is not supported")
        return self.mu0() if eta == 0 else self.mu_negative(-eta)

    def mu_prime0(self, h0: float | None = None, rel_tol: float = 1e-8, max_halvings: int = 6) -> float:
        """Right derivative at 0 by Richardson-extrapolated one-sided differences."""
        if self.line:
            return math.inf
        if self.closed:
            return mu_prime0_constant(self._d, self._l)
        if h0 is None:
            h0 = 1e-3 / self.env.mean_length() ** 2  # lambda l^2 is the natural scale
        l0, v0 = self.terms0()
        hs = [h0 / 2 ** j for j in range(max_halvings + 3)]
        cache = {}

        def D(h):
            if h not in cache:
                cache[h] = self.terms(h)
            return cache[h]

        prev = None
        for j in range(max_halvings + 1):
            h = hs[j : j + 3]
            tl = [D(x) for x in h]
            mask = v0 & tl[0][1] & tl[1][1] & tl[2][1]
            if mask.sum() < MIN_SAMPLES:
                raise InsufficientHorizonError("mu'(0) needs more converged interfaces", 2 * self.env.horizon)
            L = self.ell_prev[mask].sum()
            m0 = l0[mask].sum() / L
            d = [(m0 - t[0][mask].sum() / L) / x for t, x in zip(tl, h)]
            r1, r2 = 2 * d[1] - d[0], 2 * d[2] - d[1]
            est = (4 * r2 - r1) / 3
            if prev is not None and abs(est - prev) <= rel_tol * abs(est):
                return est
            prev = est
        return prev


def _model(env, estimator="auto"):
    return env if isinstance(env, LyapunovModel) else LyapunovModel(env, estimator)


def mu_negative(env, lam: float, xi_tol: float = BRACKET_TOL, estimator: str = "auto") -> float:
    if isinstance(env, LyapunovModel):
        return env.mu_negative(lam)
    return LyapunovModel(env, estimator, xi_tol).mu_negative(lam)


def mu_negative_quadrature(config: EnvConfig, lam: float, xi_source: TreeEnvironment, nodes: int = 32) -> float:
    """Second estimator: integrate l_0 against its law, xi sampled from a sweep.

    l_0 is independent of the xi seen from z_1, so the expectation factorizes
    into an exact sum (or Gauss-Legendre rule) over lengths and an average
    over stationary xi samples.
    """
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    a = math.sqrt(2.0 * lam)
    if xi_source.is_line():
        return -a
    m = LyapunovModel(xi_source, "ergodic")
    gm1, zeta = mobius.sweep_params(xi_source, lam, m.n)
    x_hi, y = impl.backward_sweep(gm1, zeta, 1.0)
    x_lo, _ = impl.backward_sweep(gm1, zeta, 0.0)
    y = y[(x_hi - x_lo) <= m.xi_tol]
    if config.length_range is not None:
        lo, hi = config.length_range
        t, w = np.polynomial.legendre.leggauss(nodes)
        ells = lo + (hi - lo) * (t + 1) / 2
        wts = w / 2
    else:
        ells = np.array([l for l, _ in config.length_support])
        wts = np.array([w for _, w in config.length_support])
    total = 0.0
    for ell, wt in zip(ells, wts):
        ome = -math.expm1(-2.0 * a * ell)
        total += wt * float(np.mean(np.log(y) - np.log(ome + (1.0 - ome) * y)))
    return -a + total / config.mean_length()


def w_laplace(env: TreeEnvironment, lam: float, tol: float = 1e-14) -> float:
    """E[exp(-lambda T); T < inf] for T the hitting time of 0 from z_1."""
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    a = math.sqrt(2.0 * lam)
    l0 = env.gap(0)
    if env.is_line():
        return math.exp(-a * l0)
    est = mobius.xi(env, lam, tol)
    n = est.iterations
    gm1, zeta = mobius.sweep_params(env.extend(n + 1) if n + 1 > env.horizon else env, lam, n)
    _, y = impl.backward_sweep(gm1, zeta, 1.0)
    y1 = float(y[0])
    ome = -math.expm1(-2.0 * a * l0)
    return math.exp(-a * l0) * y1 / (ome + (1.0 - ome) * y1)


def mu_zero_and_prime(env, estimator: str = "auto") -> tuple[float, float]:
    m = _model(env, estimator)
    return m.mu0(), m.mu_prime0()


# ---------------------------------------------------------------- eta_c

def _kernel_thresholds(p, a, b):
    rows = np.stack([p, a, b], axis=1)
    uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    th = np.array([kernel.divergence_threshold(kernel.SkewExitKernel(*r)) for r in uniq])
    return th[np.asarray(inv).reshape(-1)]


class _ThetaContext:
    def __init__(self, env: TreeEnvironment, H: int):
        if H + 1 > env.horizon - 1:
            raise InsufficientHorizonError("eta_c height cap", H + 2)
        self.p, self.a, self.b = kernel.interface_arrays(env, H + 1)
        self.th = _kernel_thresholds(self.p, self.a, self.b)
        self.div = float(self.th[:H].min())
        self.H = H

    def theta(self, eta: float) -> float:
        if eta >= self.div:
            return math.inf
        jp, jm = kernel.exit_laplace_arrays(self.p, self.a, self.b, eta, self.th)
        off = np.sqrt(jp[: self.H - 1] * jm[1 : self.H])
        top = eigh_tridiagonal(np.zeros(self.H), off, eigvals_only=True,
                               select="i", select_range=(self.H - 1, self.H - 1))[0]
        return float(top) ** 2


def theta_spectral(env: TreeEnvironment, eta: float, H: int) -> float:
    """Squared top eigenvalue of the height-capped transfer operator (heights 1..H)."""
    return _ThetaContext(env, H).theta(eta)


def theta_partition(env: TreeEnvironment, eta: float, k: int, H: int | None = None) -> float:
    """(Z_k)^(1/k) with Z_k the weight of 2k-step paths from height 1 back to 1."""
    H = k + 1 if H is None else H
    p, a, b = kernel.interface_arrays(env, H)
    jp, jm = kernel.exit_laplace_arrays(p, a, b, eta)
    if not (np.all(np.isfinite(jp)) and np.all(np.isfinite(jm))):
        return math.inf
    return math.exp(impl.log_partition(jp, jm, k)[-1] / k)


def _root_eta(ctx: _ThetaContext, tol: float) -> tuple[float, float, float]:
    if ctx.theta(0.0) >= 1.0:
        return 0.0, 0.0, 0.0
    lo, hi = 0.0, ctx.div
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ctx.theta(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), lo, hi


@dataclass(frozen=True)
class EtaCEstimate:
    estimate: float
    bracket: tuple
    k_used: int
    sufficient_condition: bool


def eta_c(env: TreeEnvironment, tol: float = 1e-4, H0: int = 64, H_max: int | None = None) -> EtaCEstimate:
    """Critical exponent from the growth rate of the interface path sum.

    The growth rate of path weights confined to heights 1..H is the squared
    top eigenvalue of a symmetrized tridiagonal operator, which increases to
    the unconfined rate as H grows (error ~ 1/H^2). Roots for H/2 and H are
    extrapolated in H and H is doubled until they settle.
    """
    cond = kernel.eta_c_sufficient_condition(env)
    if env.is_line():
        return EtaCEstimate(0.0, (0.0, 0.0), 0, cond)
    H_max = env.horizon - 2 if H_max is None else min(H_max, env.horizon - 2)
    H = min(H0, H_max)
    prev = None
    while True:
        ctx = _ThetaContext(env, H)
        est, lo, hi = _root_eta(ctx, tol * 1e-3)
        if prev is not None:
            Hp, ep = prev
            w1, w0 = (H + 1) ** 2, (Hp + 1) ** 2
            extrap = max((est * w1 - ep * w0) / (w1 - w0), 0.0)
            err = abs(est - extrap)
            if err < tol or H >= H_max:
                return EtaCEstimate(extrap, (max(extrap - err, 0.0), hi), H, cond)
        if H >= H_max:
            return EtaCEstimate(est, (0.0, hi), H, cond)
        prev = (H, est)
        H = min(2 * H, H_max)


# ---------------------------------------------------------------- rate function

@dataclass
class RateFunction:
    """I(a) = sup_{eta <= 0} (a eta - mu(eta)) on a in (0, mu'(0)]."""

    model: LyapunovModel
    lambda_max: float = 100.0
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self._mp0 = self.model.mu_prime0()
        self._mu0 = self.model.mu0()

    @property
    def mu_prime0(self) -> float:
        return self._mp0

    def objective(self, a: float, lam: float) -> float:
        return -a * lam - (self._mu0 if lam == 0 else self.model.mu_negative(lam))

    def __call__(self, a: float) -> tuple[float, float]:
        if a in self._cache:
            return self._cache[a]
        if not a > 0:
            raise DomainError("rate function needs a > 0")
        if a > self._mp0 * (1 + 1e-12):
            raise DomainError(f"a = {a} exceeds mu'(0) = {self._mp0}; I(a) there needs mu on (0, eta_c)")
        hi = self.lambda_max
        while True:
            r = golden_max(lambda lam: self.objective(a, lam), 0.0, hi, xtol=1e-12 * max(1.0, hi))
            if r["argmax"] < 0.9 * hi:
                break
            hi *= 4.0
        val, lam = r["maximum"], r["argmax"]
        at0 = self.objective(a, 0.0)
        if at0 >= val:
            val, lam = at0, 0.0
        out = (val, -lam)
        with self._lock:
            self._cache[a] = out
        return out


def rate(I_ctx: RateFunction, a: float) -> tuple[float, float]:
    return I_ctx(a)


# ---------------------------------------------------------------- curve

@dataclass(frozen=True)
class LyapunovCurve:
    lambda_grid: np.ndarray
    mu_values: np.ndarray
    mu0: float
    mu_prime_0: float
    eta_c: float
    eta_c_bracket: tuple
    env_digest: str


def build_curve(env: TreeEnvironment, lambda_grid, estimator: str = "auto", with_eta_c: bool = True) -> LyapunovCurve:
    m = LyapunovModel(env, estimator)
    grid = np.asarray(lambda_grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("lambda grid must be positive and increasing")
    vals = np.array([m.mu_negative(x) for x in grid])
    if with_eta_c:
        if m.closed:
            ec = eta_c_constant(m._d, m._l)
            et = EtaCEstimate(ec, (ec, ec), 0, kernel.eta_c_sufficient_condition(env))
        else:
            et = eta_c(env)
    else:
        et = EtaCEstimate(math.nan, (math.nan, math.nan), 0, False)
    return LyapunovCurve(grid, vals, m.mu0(), m.mu_prime0(), et.estimate, et.bracket, env.digest())
