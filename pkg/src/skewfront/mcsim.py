"""Monte Carlo for the multi-skewed Brownian motion.

Two simulators:

* the embedded walk on interfaces, with exact joint (side, time) exits:
  at a skew point the process first runs to distance min(a, b) (time from
  the series sampler for BM exit from a symmetric interval), picks a side
  with probability p, and away from the skew point walks on spheres whose
  radius is the distance to the nearest of {skew point, endpoint};
* a lattice walk with the skew rule only at interface nodes.

Every trajectory owns a substream keyed by its index, so results do not
depend on the thread count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernel, rng
from ._backend import impl
from ._fallback import skew_exit as _skew_exit_scalar
from .env import TreeEnvironment
from .errors import DomainError, InsufficientHorizonError

KILL_WEIGHT = 1e-12
CHUNK = 8192


def _chunks(n: int):
    return [(s, min(CHUNK, n - s)) for s in range(0, n, CHUNK)]


def _run_chunks(fn, n: int, threads: int):
    jobs = _chunks(n)
    if threads <= 1 or len(jobs) == 1:
        for s, m in jobs:
            fn(s, m)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda job: fn(*job), jobs))


# ---------------------------------------------------------------- embedded walk

def walk_arrays(env: TreeEnvironment, M: int | None = None):
    """(p, left gap, right gap) at signed indices -M..M, stored at position i + M."""
    M = env.horizon - 1 if M is None else M
    if M > env.horizon - 1:
        raise InsufficientHorizonError("walk window", M + 1)
    l = env.lengths
    pos = env.skewness[:M]
    pr = np.concatenate((1.0 - pos[::-1], [0.5], pos))
    gl = np.concatenate((l[1 : M + 1][::-1], [l[0]], l[:M]))
    gr = np.concatenate((l[:M][::-1], [l[0]], l[1 : M + 1]))
    return pr, gl, gr, M


@dataclass(frozen=True)
class WalkState:
    interface_index: int
    clock: float
    rng_stream: int
    counter: int = 0


def embedded_walk_step(state: WalkState, env: TreeEnvironment) -> WalkState:
    k = kernel.kernel_at(env, state.interface_index)
    s = rng.Stream(state.rng_stream, state.counter)
    side, dt = _skew_exit_scalar(k.p, k.a, k.b, s)
    return WalkState(state.interface_index + side, state.clock + dt, state.rng_stream, s.counter)


def skew_exit_samples(k: kernel.SkewExitKernel, n: int, seed: int = 0, label: str = "mcsim.exit"):
    """n independent (side, time) exits of one interface kernel."""
    return impl.skew_exits(rng.stream_key(seed, label), 0, n, k.p, k.a, k.b)


def exit_time_samples(n: int, seed: int = 0, label: str = "mcsim.j1") -> np.ndarray:
    """Exit times of standard BM from (-1, 1) started at 0."""
    return impl.exit_times(rng.stream_key(seed, label), 0, n)


@dataclass(frozen=True)
class HitResult:
    estimate: float
    std_error: float
    p_hit: float
    n_paths: int
    n_hit: int
    n_killed: int
    n_escaped: int
    n_capped: int
    status: str
    times: np.ndarray | None = None  # hitting times of the paths that hit, if kept


def _escape_index(env: TreeEnvironment, i0: int, target: int, M: int, bound: float = 1e-6) -> int:
    """Level above i0 from which returning to `target` has probability < bound."""
    if target < 0 or target >= i0:
        return M + 10 ** 9
    p, a, b = kernel.interface_arrays(env, M)
    logrho = np.log(b) + np.log1p(-p) - np.log(a) - np.log(p)
    lt = np.cumsum(logrho[target:])  # partial products starting at index target+1
    if lt[-1] > math.log(1e-16):
        return M + 10 ** 9
    t = np.exp(lt)
    tail = np.cumsum(t[::-1])[::-1]
    h = tail / (1.0 + tail[0])  # return probability from level target+1+k
    ok = np.flatnonzero(h < bound)
    ok = ok[target + 1 + ok > i0]
    return int(target + 1 + ok[0]) if ok.size else M + 10 ** 9


def hitting_time_laplace_mc(env: TreeEnvironment, start: int, target: int, lam: float, n_paths: int,
                            seed: int = 0, threads: int = 1, max_steps: int = 10 ** 6,
                            window: int | None = None, keep_times: bool = False,
                            label: str = "mcsim.hit") -> HitResult:
    """Estimate E[exp(-lambda T); T < inf] for T the first time at z_target from z_start."""
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    if start == target:
        raise DomainError("start and target coincide")
    pr, gl, gr, M = walk_arrays(env, window)
    if abs(start) > M or abs(target) > M:
        raise InsufficientHorizonError("start/target outside walk window", max(abs(start), abs(target)) + 2)
    escape = _escape_index(env, start, target, M) if lam == 0 else M + 10 ** 9
    times = np.empty(n_paths)
    status = np.empty(n_paths, dtype=np.int8)
    key = rng.stream_key(seed, label)
    kill_log = -math.log(KILL_WEIGHT)

    def run(s, m):
        impl.hit_paths(key, s, times[s : s + m], status[s : s + m], pr, gl, gr, M,
                       start, target, escape, float(lam), kill_log, max_steps)

    _run_chunks(run, n_paths, threads)
    hit = status == 0
    w = np.where(hit, np.exp(-lam * np.where(hit, times, 0.0)), 0.0)
    est = float(w.mean())
    se = float(w.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.inf
    n_capped = int((status == 3).sum())
    st = "ok"
    if n_capped:
        # a capped path could still have contributed up to weight 1
        se = se + n_capped / n_paths
        st = "capped"
    return HitResult(est, se, float(hit.mean()), n_paths, int(hit.sum()), int((status == 1).sum()),
                     int((status == 2).sum()), n_capped, st, times[hit] if keep_times else None)


# ---------------------------------------------------------------- lattice walk

@dataclass(frozen=True)
class LatticeSimConfig:
    step: float = 0.125
    t_max: float = 100.0
    n_paths: int = 2000
    seed: int = 0

    def check(self, env: TreeEnvironment):
        _, lo, _ = env.bounds()
        if self.step > lo / 8 + 1e-15:
            raise DomainError(f"lattice step {self.step} exceeds l_lo/8 = {lo / 8}")


@dataclass(frozen=True)
class Lattice:
    x: np.ndarray
    right_prob: np.ndarray
    dt_right: np.ndarray
    dt_left: np.ndarray
    node_of: dict  # signed interface index -> node

    def node(self, i: int) -> int:
        return self.node_of[i]


def build_lattice(env: TreeEnvironment, h: float, M: int) -> Lattice:
    """Lattice on [z_{-M}, z_M], each segment split evenly so interfaces are nodes.

    At an interface with spacings hL, hR the walk steps right with probability
    p hL / (p hL + (1-p) hR), which reproduces the exit probabilities of the
    embedded walk exactly.
    """
    if M > env.horizon:
        raise InsufficientHorizonError("lattice window", M)
    zs = [env.z(i) for i in range(-M, M + 1)]
    xs, rp, dtr, dtl = [], [], [], []
    node_of = {}
    hs = []
    for s in range(2 * M):
        seg = zs[s + 1] - zs[s]
        hs.append(seg / max(1, round(seg / h)))
    for s in range(2 * M + 1):
        i = s - M
        node_of[i] = len(xs)
        hl = hs[s - 1] if s > 0 else hs[0]
        hr = hs[s] if s < 2 * M else hs[-1]
        p = env.p(i)
        xs.append(zs[s])
        rp.append(p * hl / (p * hl + (1 - p) * hr))
        dtr.append(hr * hr)
        dtl.append(hl * hl)
        if s < 2 * M:
            n = round((zs[s + 1] - zs[s]) / hs[s])
            for m in range(1, n):
                xs.append(zs[s] + m * hs[s])
                rp.append(0.5)
                dtr.append(hs[s] ** 2)
                dtl.append(hs[s] ** 2)
    return Lattice(np.array(xs), np.array(rp), np.array(dtr), np.array(dtl), node_of)


def lattice_run(lat: Lattice, start_node: int, lo: int, hi: int, t_max: float, n: int, seed: int,
                label: str, threads: int = 1):
    final = np.empty(n, dtype=np.int64)
    times = np.empty(n)
    key = rng.stream_key(seed, label)

    def run(s, m):
        impl.lattice_paths(key, s, final[s : s + m], times[s : s + m], lat.right_prob, lat.dt_right,
                           lat.dt_left, start_node, lo, hi, float(t_max))

    _run_chunks(run, n, threads)
    return final, times


@dataclass(frozen=True)
class DriftResult:
    speed_estimate: float
    ci: tuple
    n_paths: int
    boundary_hits: int
    radial_speed: float
    radial_ci: tuple


def mean_rho(env: TreeEnvironment) -> float:
    up, down = kernel.step_probabilities(env)
    return float(np.mean(down / up))


def lln_drift(env: TreeEnvironment, sim: LatticeSimConfig, start: int = 1, threads: int = 1) -> DriftResult:
    """Average of (Y_t - Y_0) / t at t = t_max over lattice paths started at z_start.

    From the root the process escapes to either side with equal probability,
    so the signed average is only informative from an off-root start; the
    radial average of |Y_t| / t is reported alongside.
    """
    sim.check(env)
    if not env.is_line() and mean_rho(env) >= 1.0:
        warnings.warn("mean step-probability ratio >= 1: no positive drift expected", stacklevel=2)
    _, lo, _ = env.bounds()
    span = sim.t_max + 10.0 * math.sqrt(sim.t_max)
    M = min(env.horizon - 1, abs(start) + int(math.ceil(span / lo)) + 2)
    lat = build_lattice(env, sim.step, M)
    s0 = lat.node(start)
    final, _ = lattice_run(lat, s0, 0, len(lat.x) - 1, sim.t_max, sim.n_paths, sim.seed, "mcsim.drift", threads)
    y = (lat.x[final] - lat.x[s0]) / sim.t_max
    m = float(y.mean())
    se = float(y.std(ddof=1) / math.sqrt(sim.n_paths))
    ay = np.abs(lat.x[final]) / sim.t_max
    r = float(ay.mean())
    rse = float(ay.std(ddof=1) / math.sqrt(sim.n_paths))
    edge = int(((final == 0) | (final == len(lat.x) - 1)).sum())
    return DriftResult(m, (m - 3 * se, m + 3 * se), sim.n_paths, edge, r, (r - 3 * rse, r + 3 * rse))


def lattice_first_hits(env: TreeEnvironment, i: int, sim: LatticeSimConfig, threads: int = 1):
    """Side (+1/-1) and time of the first neighbouring interface hit from z_i."""
    sim.check(env)
    lat = build_lattice(env, sim.step, abs(i) + 1)
    final, times = lattice_run(lat, lat.node(i), lat.node(i - 1), lat.node(i + 1), math.inf,
                               sim.n_paths, sim.seed, "mcsim.firsthit", threads)
    return np.where(final == lat.node(i + 1), 1, -1), times


def lattice_hitting_laplace(env: TreeEnvironment, start: int, target: int, lam: float, sim: LatticeSimConfig,
                            window: int | None = None, threads: int = 1) -> tuple[float, float]:
    """Lattice analogue of hitting_time_laplace_mc (lambda > 0)."""
    if not lam > 0:
        raise DomainError("lattice Laplace estimate needs lambda > 0")
    sim.check(env)
    M = min(env.horizon - 1, window or (abs(start) + abs(target) + 40))
    lat = build_lattice(env, sim.step, M)
    t_kill = -math.log(KILL_WEIGHT) / lam
    other = len(lat.x) - 1 if target < start else 0
    final, times = lattice_run(lat, lat.node(start), lat.node(target), other, t_kill, sim.n_paths,
                               sim.seed, "mcsim.lathit", threads)
    w = np.where(final == lat.node(target), np.exp(-lam * times), 0.0)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(sim.n_paths))


# ---------------------------------------------------------------- LDP trend

@dataclass(frozen=True)
class TrendRow:
    t: float
    value: float
    std_error: float
    levels: int
    flagged: bool


def _level_of(env: TreeEnvironment, x: float) -> int:
    return int(np.searchsorted(env.interfaces, x + 1e-9 * max(1.0, abs(x)), side="right")) - 1


def ldp_trend(env: TreeEnvironment, c: float, v: float, lam: float, t_grid, n_paths: int,
              seed: int = 0, threads: int = 1) -> list[TrendRow]:
    """(1/((v-c)t)) ln E[exp(-lambda T)], T the passage time from vt down to ct.

    The expectation factorizes over the interfaces crossed (strong Markov),
    so it is estimated as a product of independent one-level Monte Carlo
    estimates. Endpoints are snapped to the interface at or below them.
    """
    if not (0 < c < v):
        raise DomainError("need 0 < c < v")
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    top = _level_of(env, v * max(t_grid))
    if top + 1 > env.horizon - 1:
        raise InsufficientHorizonError("ldp trend", top + 2)
    cache = {}

    def level(k):
        if k not in cache:
            r = hitting_time_laplace_mc(env, k, k - 1, lam, n_paths, seed=seed, threads=threads,
                                        label=f"mcsim.ldp.{k}")
            cache[k] = r
        return cache[k]

    rows = []
    for t in t_grid:
        r, s = _level_of(env, c * t), _level_of(env, v * t)
        logq, var, flagged = 0.0, 0.0, False
        for k in range(r + 1, s + 1):
            res = level(k)
            if res.n_hit == 0:
                flagged = True
                break
            logq += math.log(res.estimate)
            var += (res.std_error / res.estimate) ** 2
        scale = (v - c) * t
        if flagged:
            rows.append(TrendRow(t, -math.inf, math.inf, s - r, True))
        else:
            rows.append(TrendRow(t, logq / scale, math.sqrt(var) / scale, s - r, False))
    return rows
