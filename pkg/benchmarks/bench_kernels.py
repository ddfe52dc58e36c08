"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Both backends consume identical random streams, so each row also checks
that the two produce the same numbers.
"""

import argparse
import time

import numpy as np

from skewfront import _fallback, env, mcsim, mobius, rng

try:
    from skewfront import _core
except ImportError:  # extension not built
    _core = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(scale):
    e = env.constant_env(3, 1.0, 4000)
    rand = env.generate(env.EnvConfig(((3, 0.5), (4, 0.5)), None, (0.5, 2.0), 200000, 1))
    gm1, zeta = mobius.sweep_params(rand, 1.0, rand.horizon - 1)
    pr, gl, gr, M = mcsim.walk_arrays(e)
    key = rng.stream_key(0, "bench")
    n_exit = int(20000 * scale)
    n_hit = int(2000 * scale)
    n_tri = int(200000 * scale)
    lo = np.full(n_tri, -1.0)
    dg = np.full(n_tri, 3.0)
    up = np.full(n_tri, -1.0)
    rhs = np.linspace(0.0, 1.0, n_tri)

    def hit(mod):
        times = np.empty(n_hit)
        status = np.empty(n_hit, dtype=np.int8)
        mod.hit_paths(key, 0, times, status, pr, gl, gr, M, 1, 0, M + 10 ** 9, 1.0, -np.log(1e-12), 10 ** 6)
        return times[status == 0]

    return [
        ("exit_times", lambda m: m.exit_times(key, 0, n_exit)),
        ("skew_exits", lambda m: m.skew_exits(key, 0, n_exit, 2 / 3, 1.0, 0.5)[1]),
        ("hit_paths", hit),
        ("backward_sweep", lambda m: m.backward_sweep(gm1, zeta, 1.0)[0]),
        ("tridiag_solve", lambda m: m.TridiagSolver(lo, dg, up).solve(rhs)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    if _core is None:
        print("compiled backend not available; build with pip install -e . --no-build-isolation")
        return
    print(f"{'kernel':<16}{'compiled s':>12}{'python s':>12}{'speedup':>10}  match")
    for name, fn in cases(args.scale):
        tc, oc = best_of(lambda: fn(_core), args.repeat)
        tp, op = best_of(lambda: fn(_fallback), args.repeat)
        same = np.allclose(np.asarray(oc), np.asarray(op), rtol=1e-12, atol=1e-14)
        print(f"{name:<16}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {same}")


if __name__ == "__main__":
    main()
