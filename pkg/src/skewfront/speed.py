"""Wave speed c* = inf_{lambda >= 0} (lambda + beta) / |mu(-lambda)| and related bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lyapunov
from ._golden import golden_min
from .env import TreeEnvironment
from .errors import DomainError


@dataclass(frozen=True)
class SpeedResult:
    beta: float
    c_star: float
    lambda_star: float
    beta_c: float
    assumption_ok: bool
    method: str  # variational | constant_closed_form | degenerate_line
    status: str = "unimodal"
    assumption: str = ""  # true | false | uncertain (beta inside the eta_c bracket)

    def __post_init__(self):
        if not self.assumption:
            object.__setattr__(self, "assumption", "true" if self.assumption_ok else "false")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def minimize_halfline(F, lam_max: float, n_grid: int = 48) -> tuple[float, float, str]:
    """Minimize F on [0, lam_max]: coarse log grid, unimodality check, golden refine."""
    grid = np.concatenate(([0.0], np.geomspace(lam_max * 1e-8, lam_max, n_grid)))
    vals = np.array([F(x) for x in grid])
    interior = [i for i in range(1, len(grid) - 1) if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]]
    if vals[0] <= vals[1]:
        interior.insert(0, 0)
    if vals[-1] <= vals[-2]:
        interior.append(len(grid) - 1)
    status = "unimodal" if len(interior) <= 1 else "multimodal"
    best = (math.inf, math.nan)
    for i in interior or [int(np.argmin(vals))]:
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        r = golden_min(F, lo, hi, xtol=1e-13 * max(hi, 1e-300))
        cands = [(r["minimum"], r["argmin"]), (vals[i], grid[i])]
        best = min([best] + cands)
    return best[1], best[0], status


def _check_beta(beta):
    if not beta > 0:
        raise DomainError("beta must be > 0")


def beta_c_constant(d: int, ell: float) -> float:
    """max(eta_c, -mu(0)/mu'(0)) for the constant tree; the second term dominates."""
    if d == 2:
        return 0.0
    p = (d - 1) / d
    ratio = (2.0 * p - 1.0) * math.log(p / (1.0 - p)) / (ell * ell)
    return max(ratio, lyapunov.eta_c_constant(d, ell))


def beta_c_details(env, curve: lyapunov.LyapunovCurve | None = None) -> tuple[float, float]:
    """(beta_c, upper end of its uncertainty from the eta_c bracket)."""
    model = env if isinstance(env, lyapunov.LyapunovModel) else None
    env = model.env if model else env
    if env.is_line():
        return 0.0, 0.0
    if curve is not None:
        mu0, mp0, ec, ec_hi = curve.mu0, curve.mu_prime_0, curve.eta_c, curve.eta_c_bracket[1]
    else:
        model = model or lyapunov.LyapunovModel(env)
        mu0, mp0 = model.mu0(), model.mu_prime0()
        if model.closed:
            ec = ec_hi = lyapunov.eta_c_constant(model._d, model._l)
        else:
            est = lyapunov.eta_c(env)
            ec, ec_hi = est.estimate, est.bracket[1]
    ratio = 0.0 if not math.isfinite(mp0) else -mu0 / mp0
    return max(ec, ratio), max(ec_hi, ratio)


def beta_c(env, curve: lyapunov.LyapunovCurve | None = None) -> float:
    return beta_c_details(env, curve)[0]


def _assumption(beta, bc, bc_hi) -> str:
    if beta > bc_hi:
        return "true"
    return "uncertain" if beta > bc else "false"


def speed_variational(env, beta: float, curve: lyapunov.LyapunovCurve | None = None,
                      estimator: str = "auto", beta_c_value: float | tuple | None = None) -> SpeedResult:
    _check_beta(beta)
    model = env if isinstance(env, lyapunov.LyapunovModel) else lyapunov.LyapunovModel(env, estimator)
    if model.line:
        return SpeedResult(beta, math.sqrt(2.0 * beta), beta, 0.0, True, "degenerate_line")
    mu0 = model.mu0()

    def F(lam):
        m = -mu0 if lam == 0 else -model.mu_negative(lam)
        return (lam + beta) / m if m > 0 else math.inf

    lam, c, status = minimize_halfline(F, max(10.0 * beta, 100.0))
    if beta_c_value is None:
        bc, bc_hi = beta_c_details(model, curve)
    elif isinstance(beta_c_value, tuple):
        bc, bc_hi = beta_c_value
    else:
        bc = bc_hi = beta_c_value
    return SpeedResult(beta, c, lam, bc, beta > bc, "variational", status, _assumption(beta, bc, bc_hi))


def speed_constant_closed_form(d: int, ell: float, beta: float) -> SpeedResult:
    _check_beta(beta)
    if d < 2 or ell <= 0:
        raise DomainError("need d >= 2 and l > 0")
    if d == 2:
        return SpeedResult(beta, math.sqrt(2.0 * beta), beta, 0.0, True, "degenerate_line")

    def F(lam):
        return (lam + beta) / -lyapunov.mu_constant(d, ell, lam)

    lam, c, status = minimize_halfline(F, max(10.0 * beta, 100.0))
    bc = beta_c_constant(d, ell)
    return SpeedResult(beta, c, lam, bc, beta > bc, "constant_closed_form", status)


def slowdown_bound(env_bounds: tuple, beta: float) -> float:
    """Upper bound on sqrt(2 beta) - c* from (dbar, l_lo, l_hi) alone."""
    _check_beta(beta)
    dbar, lo, hi = env_bounds
    if not (dbar >= 2 and 0 < lo <= hi):
        raise DomainError("bounds must satisfy dbar >= 2 and 0 < l_lo <= l_hi")
    c0 = math.log(dbar / 2.0) + 2.0 * math.sqrt(2.0 * math.sqrt(2.0 * beta)) * hi

    def log_expm1(x):
        return x + math.log(-math.expm1(-x)) if x > 0 else -math.inf

    def F(lam):
        a = math.sqrt(2.0 * lam)
        if a == 0.0:
            ratio = math.log(2.0 * hi / lo)  # limit of (e^{4 a hi} - 1)/(e^{2 a lo} - 1)
        else:
            ratio = log_expm1(4.0 * a * hi) - log_expm1(2.0 * a * lo)
        return (lam + beta) / (a + np.logaddexp(0.0, c0 + ratio) / lo)

    _, inf_val, _ = minimize_halfline(F, max(10.0 * beta, 100.0))
    return max(math.sqrt(2.0 * beta) - inf_val, 0.0)
