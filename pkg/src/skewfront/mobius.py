"""The limit ratio xi_lambda via interface matrices and Moebius maps.

Interface j contributes M_j = (1 / (2 p_j gamma_j)) [[gamma^2, zeta gamma^2], [zeta, 1]]
with gamma_j = exp(sqrt(2 lambda) l_j), zeta_j = 2 p_j - 1. Column sums of
(1 1) M_{k-1} ... M_1 have ratio R_k / L_k = Phi_1 o ... o Phi_{k-1}(1), where
Phi(x) = (zeta gamma^2 + x) / (gamma^2 + zeta x), and 1/xi is the limit.
Every Phi is increasing on [0, 1], so compositions started from 0 and
from 1 bracket the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import impl
from .env import TreeEnvironment
from .errors import DomainError, InsufficientHorizonError

TINY = 1e-300


@dataclass(frozen=True)
class InterfaceMatrixParams:
    gamma: float
    zeta: float

    @classmethod
    def at(cls, lam: float, ell: float, p: float) -> "InterfaceMatrixParams":
        return cls(math.exp(math.sqrt(2.0 * lam) * ell), 2.0 * p - 1.0)


def mobius_step(x: float, params: InterfaceMatrixParams) -> float:
    g2 = params.gamma ** 2
    return (params.zeta * g2 + x) / (g2 + params.zeta * x)


def contraction_constants(zeta, gm1):
    """Lipschitz constant of Phi in the angle metric, per interface; gm1 = gamma^2 - 1."""
    zeta = np.asarray(zeta, dtype=float)
    g2 = 1.0 + np.asarray(gm1, dtype=float)
    z2 = zeta * zeta
    k1 = (1.0 - z2) / ((1.0 + z2) * g2)
    k2 = 2.0 * (1.0 - z2) / ((1.0 + z2) * (g2 + 1.0 / g2) + 4.0 * zeta)
    return np.maximum(k1, k2)


def contraction_constant(params: InterfaceMatrixParams) -> float:
    return float(contraction_constants(params.zeta, params.gamma ** 2 - 1.0))


@dataclass(frozen=True)
class XiEstimate:
    lam: float
    inv_xi: float
    iterations: int
    contraction_bound: float
    residual: float
    bracket_width: float
    status: str  # certified | bracketed | residual | degenerate

    @property
    def xi(self) -> float:
        return math.inf if self.inv_xi < TINY else 1.0 / self.inv_xi

    @property
    def infinite(self) -> bool:
        return self.inv_xi < TINY


def xi_constant(d: int, ell: float, lam: float) -> float:
    """Closed-form xi for the constant (d, l) tree."""
    if lam <= 0:
        raise DomainError("lambda must be > 0")
    zeta = 1.0 - 2.0 / d
    if zeta == 0.0:
        return math.inf
    g2 = math.exp(2.0 * math.sqrt(2.0 * lam) * ell)
    gm1 = math.expm1(2.0 * math.sqrt(2.0 * lam) * ell)
    return (math.sqrt(gm1 * gm1 + 4.0 * zeta * zeta * g2) + gm1) / (2.0 * zeta * g2)


def xi_lower_bound(dbar: int, l_lo: float, l_hi: float, lam: float) -> float:
    a = math.sqrt(2.0 * lam)
    return 1.0 + (2.0 / dbar) * math.expm1(2.0 * l_lo * a) / (math.exp(2.0 * l_hi * a) + 1.0)


def sweep_params(env: TreeEnvironment, lam: float, n: int | None = None):
    """(gamma^2 - 1, zeta) for interfaces 1..n."""
    n = env.horizon - 1 if n is None else n
    a = math.sqrt(2.0 * lam)
    return np.expm1(2.0 * a * env.lengths[1 : n + 1]), 2.0 * env.skewness[:n] - 1.0


def _compose(gm1, zeta, start: float) -> float:
    if len(gm1) == 0:
        return start
    x, _ = impl.backward_sweep(gm1, zeta, start)
    return float(x[0])


def xi(env: TreeEnvironment, lam: float, tol: float = 1e-12, max_horizon: int = 1 << 20) -> XiEstimate:
    if not lam > 0:
        raise DomainError("xi is defined for lambda > 0 only")
    if env.is_line():
        return XiEstimate(lam, 0.0, 0, 0.0, 0.0, 0.0, "degenerate")
    log_target = math.log(tol) - math.log(math.pi / 2.0)  # angle-metric diameter pi/4, tan' <= 2
    while True:
        gm1, zeta = sweep_params(env, lam)
        logk = np.cumsum(np.log(contraction_constants(zeta, gm1)))
        hits = np.flatnonzero(logk < log_target)
        if hits.size:
            k = int(hits[0]) + 1
            upper = _compose(gm1[:k], zeta[:k], 1.0)
            lower = _compose(gm1[:k], zeta[:k], 0.0)
            prev = _compose(gm1[: k - 1], zeta[: k - 1], 1.0)
            return XiEstimate(lam, upper, k, math.pi / 2.0 * math.exp(logk[k - 1]), abs(upper - prev),
                              upper - lower, "certified")
        # weak contraction (d = 2 heavy): monotone bracket, then residual stagnation
        result = _xi_fallback(gm1, zeta, lam, tol, logk)
        if result is not None:
            return result
        if env.config is None or env.horizon >= max_horizon:
            raise InsufficientHorizonError("xi did not converge", 2 * env.horizon)
        env = env.extend(2 * env.horizon)


def _xi_fallback(gm1, zeta, lam, tol, logk):
    n = len(gm1)
    k = min(64, n)
    while True:
        upper = _compose(gm1[:k], zeta[:k], 1.0)
        lower = _compose(gm1[:k], zeta[:k], 0.0)
        bound = math.pi / 2.0 * math.exp(logk[k - 1])
        if upper - lower < tol:
            prev = _compose(gm1[: k - 1], zeta[: k - 1], 1.0)
            return XiEstimate(lam, upper, k, bound, abs(upper - prev), upper - lower, "bracketed")
        if k + 10 <= n:
            vals = [_compose(gm1[:j], zeta[:j], 1.0) for j in range(k, k + 11)]
            res = np.abs(np.diff(vals))
            if np.all(res < tol):
                return XiEstimate(lam, vals[-1], k + 10, bound, float(res[-1]), upper - lower, "residual")
        if k == n:
            return None
        k = min(2 * k, n)


def matrix_product_ratio(env: TreeEnvironment, lam: float, k: int) -> tuple[float, float, float]:
    """(log L_k, log R_k, R_k / L_k) for (L_k R_k) = (1 1) M_{k-1} ... M_1."""
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    if k < 1:
        raise DomainError("k must be >= 1")
    if k > env.horizon:
        raise InsufficientHorizonError("matrix product", k)
    a = math.sqrt(2.0 * lam)
    v0, v1, logscale = 1.0, 1.0, 0.0
    for j in range(k - 1, 0, -1):
        p = env.p(j)
        z = 2.0 * p - 1.0
        al = a * env.gap(j)
        ig2 = math.exp(-2.0 * al)
        # M_j = (gamma / (2p)) [[1, zeta], [zeta / gamma^2, 1 / gamma^2]]
        v0, v1 = v0 + v1 * z * ig2, v0 * z + v1 * ig2
        s = v0 + v1
        v0, v1 = v0 / s, v1 / s
        logscale += al - math.log(2.0 * p) + math.log(s)
    return logscale + math.log(v0), (logscale + math.log(v1)) if v1 > 0 else -math.inf, v1 / v0
