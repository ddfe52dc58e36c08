"""Front tracking for v_t = 1/2 v_xx + beta v (1 - v) with skew interface conditions.

Discretization. Every node j has spacings hL, hR and weights wL = 1 - p,
wR = p (p = 1/2 away from interfaces, p = p_i at z_i, 1 - p_i at -z_i).
Balancing fluxes over the weighted control volume m_j = (wL hL + wR hR)/2,

    m_j dv_j/dt = 1/2 [wR (v_{j+1} - v_j)/hR - wL (v_j - v_{j-1})/hL] + m_j f(v_j),

which is the usual 3-point Laplacian in the bulk and, as m_j -> 0, the
flux condition p v'(z+) = (1-p) v'(z-) at an interface (defect O(dx)).
The matrix is an M-matrix, so backward Euler keeps 0 <= v <= 1.

Time stepping is Strang splitting: exact logistic half step, implicit
diffusion step, exact logistic half step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import impl
from .env import TreeEnvironment
from .errors import DomainError, DomainTooSmallError, InsufficientHorizonError, StabilityError


@dataclass(frozen=True)
class PdeConfig:
    env: TreeEnvironment
    half_width: float = 200.0
    dx: float = 0.05
    dt: float = 0.005
    t_max: float = 60.0
    beta: float = 2.0
    delta: float | None = None
    front_level: float = 0.5
    fit_window: float = 0.4
    record_every: float = 0.1
    snapshot_times: tuple = ()
    half: bool = False

    def __post_init__(self):
        _, lo, _ = self.env.bounds()
        if not self.beta > 0:
            raise DomainError("beta must be > 0")
        if not (self.dx > 0 and self.dt > 0 and self.t_max > 0):
            raise DomainError("dx, dt and t_max must be positive")
        if self.dx > lo / 2:
            raise DomainError(f"dx = {self.dx} too coarse for l_lo = {lo}")
        d = self.delta_value
        if not (0 < d < lo or (self.env.is_line() and d > 0)):
            raise DomainError(f"delta must lie in (0, l_lo) = (0, {lo})")
        if not (0 < self.front_level < 1 and 0 < self.fit_window <= 1):
            raise DomainError("front_level in (0,1) and fit_window in (0,1] required")
        if self.dt * self.beta > 1:
            raise DomainError("dt * beta must be <= 1")

    @property
    def delta_value(self) -> float:
        if self.delta is not None:
            return self.delta
        return 0.5 * self.env.bounds()[1]


@dataclass(frozen=True)
class Grid:
    x: np.ndarray  # all nodes including the two Dirichlet ends
    lower: np.ndarray
    diag: np.ndarray  # of the operator A acting on interior nodes
    upper: np.ndarray
    interfaces: list  # (node index, p, hL, hR)


def build_grid(env: TreeEnvironment, L: float, dx: float) -> Grid:
    z = env.interfaces
    m = int(np.searchsorted(z, L, side="left"))  # z_m >= L
    if m > env.horizon or z[min(m, env.horizon)] < L - 1e-12:
        raise InsufficientHorizonError(f"environment ends before x = {L}", m + 1)
    breaks = list(z[: m]) + [L]
    pos, pvals = [0.0], [0.5]
    for s in range(len(breaks) - 1):
        a, b = breaks[s], breaks[s + 1]
        if b - a <= 1e-12:
            continue
        n = max(1, round((b - a) / dx))
        h = (b - a) / n
        pos.extend(a + h * np.arange(1, n))
        pvals.extend([0.5] * (n - 1))
        pos.append(b)
        idx = s + 1
        pvals.append(env.p(idx) if idx < m or abs(b - z[min(idx, env.horizon)]) < 1e-12 else 0.5)
    pos = np.array(pos)
    pvals = np.array(pvals)
    x = np.concatenate((-pos[:0:-1], pos))
    p = np.concatenate((1.0 - pvals[:0:-1], pvals))
    h = np.diff(x)
    hL, hR = h[:-1], h[1:]
    pi = p[1:-1]
    wL, wR = 1.0 - pi, pi
    mass = 0.5 * (wL * hL + wR * hR)
    lo = wL / (2.0 * hL * mass)
    up = wR / (2.0 * hR * mass)
    ifaces = [(j + 1, pi[j], hL[j], hR[j]) for j in range(pi.size) if pi[j] != 0.5]
    return Grid(x, lo, -(lo + up), up, ifaces)


def _half_grid(g: Grid):
    """Restriction to x >= 0 with reflection at the root node."""
    k0 = (g.x.size - 1) // 2
    lo, dg, up = g.lower[k0 - 1 :].copy(), g.diag[k0 - 1 :].copy(), g.upper[k0 - 1 :].copy()
    # ghost v_{-1} = v_1 doubles the coupling of the root to its right neighbour
    up[0] = 2.0 * up[0]
    dg[0] = -up[0]
    lo[0] = 0.0
    return lo, dg, up, k0


@dataclass
class FrontTrace:
    times: np.ndarray
    front_right: np.ndarray
    front_left: np.ndarray
    fitted_speed: float
    fit_residual: float
    left_speed: float
    symmetry_error: float
    interface_defect: float
    snapshots: dict = field(default_factory=dict)
    x: np.ndarray | None = None

    @property
    def front_positions(self):
        return self.front_right

    @property
    def right_speed(self):
        return self.fitted_speed

    def monotone_in_window(self, frac: float = 0.4) -> bool:
        n = max(2, int(len(self.times) * frac))
        tail = self.front_right[-n:]
        return bool(np.all(np.isfinite(tail)) and np.all(np.diff(tail) >= -1e-12))

    def rows(self):
        return [(float(t), float(r), float(l)) for t, r, l in zip(self.times, self.front_right, self.front_left)]


def _front(x, v, level):
    """sup{x >= 0 : v >= level} with linear interpolation; nan if none."""
    above = np.flatnonzero(v >= level)
    if above.size == 0:
        return math.nan
    j = above[-1]
    if j + 1 >= v.size:
        return float(x[j])
    v0, v1 = v[j], v[j + 1]
    return float(x[j] + (x[j + 1] - x[j]) * (v0 - level) / (v0 - v1))


def _logistic(v, r):
    """Exact flow of v' = beta v (1 - v) for time with exp(beta t) = r."""
    return v * r / (1.0 + v * (r - 1.0))


def interface_defect(grid: Grid, v_full: np.ndarray) -> float:
    worst = 0.0
    for j, p, hL, hR in grid.interfaces:
        gp = (v_full[j + 1] - v_full[j]) / hR
        gm = (v_full[j] - v_full[j - 1]) / hL
        worst = max(worst, abs(p * gp - (1.0 - p) * gm))
    return worst


def _fit(times, xs, frac, clear):
    ok = np.isfinite(xs) & (xs >= clear)
    if ok.sum() < 3:
        return math.nan, math.nan
    t0 = times[ok][0]
    w = ok & (times >= t0 + (1.0 - frac) * (times[-1] - t0))
    if w.sum() < 3:
        return math.nan, math.nan
    A = np.vstack([times[w], np.ones(w.sum())]).T
    coef, *_ = np.linalg.lstsq(A, xs[w], rcond=None)
    res = xs[w] - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res ** 2)))


def solve(config: PdeConfig) -> FrontTrace:
    env = config.env
    _, _, hi_l = env.bounds()
    L = config.half_width
    grid = build_grid(env, L, config.dx)
    x = grid.x
    if config.half:
        lo, dg, up, k0 = _half_grid(grid)
        xs = x[k0:-1]
    else:
        lo, dg, up = grid.lower, grid.diag, grid.upper
        xs = x[1:-1]
    dt = config.dt
    solver = impl.TridiagSolver(-dt * lo, 1.0 - dt * dg, -dt * up)
    v = (np.abs(xs) < config.delta_value).astype(float)
    r_half = math.exp(0.5 * config.beta * dt)
    nsteps = int(round(config.t_max / dt))
    rec = max(1, int(round(config.record_every / dt)))
    snaps_at = {int(round(t / dt)): t for t in config.snapshot_times}
    times, fr, fl = [], [], []
    sym_err, defect = 0.0, 0.0
    snapshots = {}
    margin = 5.0 * hi_l
    x_pos = x[(x.size - 1) // 2 : -1]

    def full_field(v):
        if config.half:
            return np.concatenate(([0.0], v[:0:-1], v, [0.0]))
        return np.concatenate(([0.0], v, [0.0]))

    for step in range(1, nsteps + 1):
        v = _logistic(v, r_half)
        v = solver.solve(v)
        v = _logistic(v, r_half)
        if step % rec == 0 or step == nsteps or step in snaps_at:
            if v.min() < -1e-9 or v.max() > 1 + 1e-9 or not np.all(np.isfinite(v)):
                raise StabilityError(f"solution left [0, 1] at t = {step * dt:.4g}")
            vf = full_field(v)
            k0 = (vf.size - 1) // 2
            right = _front(x_pos, vf[k0:-1], config.front_level)
            left = -_front(x_pos, vf[k0:0:-1], config.front_level)
            t = step * dt
            times.append(t)
            fr.append(right)
            fl.append(left)
            if not config.half:
                sym_err = max(sym_err, float(np.max(np.abs(vf - vf[::-1]))))
            defect = max(defect, interface_defect(grid, vf))
            if step in snaps_at:
                snapshots[snaps_at[step]] = vf.copy()
            if math.isfinite(right) and right > L - margin:
                c_guess = right / t
                raise DomainTooSmallError(f"front at {right:.1f} reached the boundary zone by t = {t:.3g}",
                                          c_guess * config.t_max + 20 * hi_l)
    times = np.array(times)
    fr, fl = np.array(fr), np.array(fl)
    clear = 10.0 * hi_l
    speed, resid = _fit(times, fr, config.fit_window, clear)
    lspeed, _ = _fit(times, -fl, config.fit_window, clear)
    return FrontTrace(times, fr, fl, speed, resid, lspeed, sym_err, defect, snapshots, x)


def auto_config(env: TreeEnvironment, beta: float, c_pred: float, t_max: float = 40.0, **kw) -> PdeConfig:
    _, _, hi = env.bounds()
    L = c_pred * t_max + 20.0 * hi + 10.0
    return PdeConfig(env, half_width=L, t_max=t_max, beta=beta, **kw)


def empirical_speed_sweep(env: TreeEnvironment, betas, base_config: dict | None = None, predicted=None):
    """Rows (beta, fitted c, predicted c*) with L scaled to the predicted speed."""
    from . import speed as speed_mod

    base = dict(base_config or {})
    t_max = base.pop("t_max", 40.0)
    rows = []
    for b in betas:
        if predicted is not None:
            c = predicted(b)
        elif env.is_constant():
            c = speed_mod.speed_constant_closed_form(int(env.degrees[0]), float(env.lengths[0]), b).c_star
        else:
            c = speed_mod.speed_variational(env, b).c_star
        need_L = c * t_max + 20.0 * env.bounds()[2] + 10.0
        if env.interfaces[-1] < need_L:
            env = env.extend(int(need_L / env.bounds()[1]) + 2)
        cfg = auto_config(env, b, c, t_max, **base)
        tr = solve(cfg)
        rows.append((b, tr.fitted_speed, c))
    return rows
