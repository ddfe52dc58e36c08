"""Command-line entry point: `skewfront <subcommand> [flags]`.

Settings resolve as flags > SKEWFRONT_* environment variables > config
file (--config, JSON) > built-in defaults. `--show-config` prints the
resolved settings and exits.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import env as envmod
from . import kernel, lyapunov, mcsim, mobius, pde, speed
from ._backend import BACKEND
from .errors import ConfigError, SkewfrontError

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION, EXIT_USAGE = 0, 1, 2, 64

COMMON = {"output": "json", "threads": 1, "out": None}
ENV_SOURCE = {"env": None, "constant": None, "horizon": 2000}

DEFAULTS = {
    "gen-env": {"degrees": "3:1.0", "lengths": "1:1.0", "length_range": None, "horizon": 1000, "seed": 0},
    "xi": {**ENV_SOURCE, "lam": 1.0, "tol": 1e-12},
    "mu": {**ENV_SOURCE, "lam": "0.25,0.5,1,2,4", "estimator": "auto"},
    "eta-c": {**ENV_SOURCE, "tol": 1e-4},
    "speed": {**ENV_SOURCE, "beta": 5.0, "closed_form": None, "estimator": "auto", "strict": False},
    "speed-sweep": {**ENV_SOURCE, "betas": "1,2,5,10,20", "closed_form": None, "estimator": "auto",
                    "strict": False},
    "mc-hit": {**ENV_SOURCE, "lam": 1.0, "paths": 100000, "seed": 0, "start": 1, "target": 0},
    "mc-drift": {**ENV_SOURCE, "step": 0.125, "t_max": 100.0, "paths": 2000, "seed": 0, "start": 1},
    "mc-ldp": {**ENV_SOURCE, "c": 0.5, "v": 1.5, "lam": 1.0, "t_grid": "10,20,40", "paths": 10000, "seed": 0},
    "pde": {**ENV_SOURCE, "beta": 2.0, "L": 200.0, "t_max": 60.0, "dx": 0.05, "dt": 0.005,
            "front_level": 0.5, "snapshots": None, "snapshot_times": "", "half": False},
    "validate": {**ENV_SOURCE, "paths": 20000, "seed": 0, "lam": 1.0, "strict": False},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------- serialization

def clean(obj):
    """Recursively make obj strict-JSON friendly; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2, allow_nan=False)


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in clean(r).items()})
    return buf.getvalue()


# ---------------------------------------------------------------- config

def _floats(s) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).split(",") if x.strip()]


def _pairs(s, name):
    out = []
    for item in str(s).split(","):
        try:
            v, w = item.split(":")
            out.append((float(v), float(w)))
        except ValueError:
            raise ConfigError(name, f"expected value:weight list, got {s!r}") from None
    return tuple(out)


def _coerce(key, value, default):
    if value is None or default is None:
        return value
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot interpret {value!r}") from None
    return value


def resolve(command: str, flags: dict, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    defaults = {**COMMON, **DEFAULTS[command]}
    cfg = dict(defaults)
    cfg_file = flags.get("config") or environ.get("SKEWFRONT_CONFIG")
    if cfg_file:
        try:
            data = json.loads(Path(cfg_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"{cfg_file}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "config file must hold a JSON object")
        section = {k: v for k, v in data.items() if not isinstance(v, dict)}
        section.update(data.get(command, {}) if isinstance(data.get(command), dict) else {})
        for k, v in section.items():
            k = k.replace("-", "_")
            if k in defaults:
                cfg[k] = _coerce(k, v, defaults[k])
    for k in defaults:
        name = "SKEWFRONT_" + k.upper()
        if name in environ:
            cfg[k] = _coerce(k, environ[name], defaults[k])
    for k, v in flags.items():
        if k in defaults and v is not None:
            cfg[k] = _coerce(k, v, defaults[k])
    if cfg["output"] not in ("json", "csv"):
        raise ConfigError("output", "must be json or csv")
    if int(cfg["threads"]) < 1:
        raise ConfigError("threads", "must be >= 1")
    return cfg


def load_env(cfg) -> envmod.TreeEnvironment:
    if cfg.get("env"):
        return envmod.load(cfg["env"])
    if cfg.get("constant"):
        d, ell = str(cfg["constant"]).split(",")
        return envmod.constant_env(int(d), float(ell), int(cfg["horizon"]))
    raise ConfigError("env", "give --env FILE or --constant d,l")


# ---------------------------------------------------------------- commands

def cmd_gen_env(cfg):
    degrees = tuple((int(d), w) for d, w in _pairs(cfg["degrees"], "degrees"))
    if cfg["length_range"]:
        lo, hi = _floats(cfg["length_range"])
        conf = envmod.EnvConfig(degrees, None, (lo, hi), int(cfg["horizon"]), int(cfg["seed"]))
    else:
        conf = envmod.EnvConfig(degrees, _pairs(cfg["lengths"], "lengths"), None, int(cfg["horizon"]), int(cfg["seed"]))
    e = envmod.generate(conf)
    return {"summary": {"digest": e.digest(), "horizon": e.horizon}, "env": e}, EXIT_OK


def cmd_xi(cfg):
    e = load_env(cfg)
    r = mobius.xi(e, float(cfg["lam"]), tol=float(cfg["tol"]))
    s = {"lam": r.lam, "xi": r.xi, "inv_xi": r.inv_xi, "iterations": r.iterations,
         "contraction_bound": r.contraction_bound, "residual": r.residual,
         "bracket_width": r.bracket_width, "status": r.status, "env_digest": e.digest()}
    return {"summary": s, "rows": [s]}, EXIT_OK


def cmd_mu(cfg):
    e = load_env(cfg)
    model = lyapunov.LyapunovModel(e, cfg["estimator"])
    rows = [{"lam": lam, "mu": model.mu_negative(lam)} for lam in _floats(cfg["lam"])]
    s = {"mu0": model.mu0(), "mu_prime0": model.mu_prime0(), "estimator": cfg["estimator"], "env_digest": e.digest()}
    return {"summary": s, "rows": rows}, EXIT_OK


def cmd_eta_c(cfg):
    e = load_env(cfg)
    r = lyapunov.eta_c(e, tol=float(cfg["tol"]))
    s = {"eta_c": r.estimate, "bracket_lo": r.bracket[0], "bracket_hi": r.bracket[1], "height_cap": r.k_used,
         "positive_eta_c_condition": r.sufficient_condition, "env_digest": e.digest()}
    return {"summary": s, "rows": [s]}, EXIT_OK


def _speed_at(cfg, beta, model=None, bc=None):
    if cfg.get("closed_form"):
        d, ell = str(cfg["closed_form"]).split(",")
        return speed.speed_constant_closed_form(int(d), float(ell), beta)
    return speed.speed_variational(model, beta, estimator=cfg["estimator"], beta_c_value=bc)


def cmd_speed(cfg):
    model = None if cfg.get("closed_form") else lyapunov.LyapunovModel(load_env(cfg), cfg["estimator"])
    r = _speed_at(cfg, float(cfg["beta"]), model)
    s = r.to_dict()
    s["sqrt_2beta"] = math.sqrt(2.0 * r.beta)
    code = EXIT_VALIDATION if cfg["strict"] and not r.assumption_ok else EXIT_OK
    return {"summary": s, "rows": [s]}, code


def cmd_speed_sweep(cfg):
    model = None if cfg.get("closed_form") else lyapunov.LyapunovModel(load_env(cfg), cfg["estimator"])
    bc = None if model is None else speed.beta_c_details(model)
    rows = []
    for b in _floats(cfg["betas"]):
        r = _speed_at(cfg, b, model, bc)
        rows.append({"beta": b, "c_star": r.c_star, "lambda_star": r.lambda_star, "beta_c": r.beta_c,
                     "assumption_ok": r.assumption_ok, "assumption": r.assumption, "sqrt_2beta": math.sqrt(2.0 * b)})
    bad = any(not r["assumption_ok"] for r in rows)
    code = EXIT_VALIDATION if cfg["strict"] and bad else EXIT_OK
    return {"summary": {"n": len(rows)}, "rows": rows}, code


def cmd_mc_hit(cfg):
    e = load_env(cfg)
    lam = float(cfg["lam"])
    r = mcsim.hitting_time_laplace_mc(e, int(cfg["start"]), int(cfg["target"]), lam, int(cfg["paths"]),
                                      seed=int(cfg["seed"]), threads=int(cfg["threads"]))
    s = {"estimate": r.estimate, "std_error": r.std_error, "p_hit": r.p_hit, "n_paths": r.n_paths,
         "n_hit": r.n_hit, "n_killed": r.n_killed, "n_escaped": r.n_escaped, "n_capped": r.n_capped,
         "status": r.status, "env_digest": e.digest()}
    if int(cfg["start"]) == 1 and int(cfg["target"]) == 0 and lam > 0:
        s["oracle"] = lyapunov.w_laplace(e, lam)
    return {"summary": s, "rows": [s]}, EXIT_OK


def cmd_mc_drift(cfg):
    e = load_env(cfg)
    sim = mcsim.LatticeSimConfig(float(cfg["step"]), float(cfg["t_max"]), int(cfg["paths"]), int(cfg["seed"]))
    r = mcsim.lln_drift(e, sim, start=int(cfg["start"]), threads=int(cfg["threads"]))
    s = {"speed_estimate": r.speed_estimate, "ci_lo": r.ci[0], "ci_hi": r.ci[1], "radial_speed": r.radial_speed,
         "radial_ci_lo": r.radial_ci[0], "radial_ci_hi": r.radial_ci[1], "n_paths": r.n_paths,
         "boundary_hits": r.boundary_hits, "mean_log_rho": mcsim.mean_rho(e), "env_digest": e.digest()}
    return {"summary": s, "rows": [s]}, EXIT_OK


def cmd_mc_ldp(cfg):
    e = load_env(cfg)
    lam = float(cfg["lam"])
    rows = mcsim.ldp_trend(e, float(cfg["c"]), float(cfg["v"]), lam, _floats(cfg["t_grid"]), int(cfg["paths"]),
                           seed=int(cfg["seed"]), threads=int(cfg["threads"]))
    target = lyapunov.mu_negative(e, lam)
    out = [{"t": r.t, "value": r.value, "std_error": r.std_error, "levels": r.levels, "flagged": r.flagged}
           for r in rows]
    return {"summary": {"mu_target": target, "env_digest": e.digest()}, "rows": out}, EXIT_OK


def cmd_pde(cfg):
    e = load_env(cfg)
    times = tuple(_floats(cfg["snapshot_times"])) if cfg["snapshot_times"] else ()
    conf = pde.PdeConfig(e, half_width=float(cfg["L"]), dx=float(cfg["dx"]), dt=float(cfg["dt"]),
                         t_max=float(cfg["t_max"]), beta=float(cfg["beta"]), front_level=float(cfg["front_level"]),
                         snapshot_times=times, half=bool(cfg["half"]))
    tr = pde.solve(conf)
    if cfg["snapshots"]:
        d = Path(cfg["snapshots"])
        d.mkdir(parents=True, exist_ok=True)
        for t, v in tr.snapshots.items():
            (d / f"snapshot_t{t:g}.csv").write_text(to_csv([{"x": x, "v": y} for x, y in zip(tr.x, v)]))
    rows = [{"t": t, "x_front_right": r, "x_front_left": l} for t, r, l in tr.rows()]
    s = {"fitted_speed": tr.fitted_speed, "fit_residual": tr.fit_residual, "left_speed": tr.left_speed,
         "symmetry_error": tr.symmetry_error, "interface_defect": tr.interface_defect,
         "sqrt_2beta": math.sqrt(2.0 * conf.beta), "env_digest": e.digest()}
    return {"summary": s, "rows": rows}, EXIT_OK


def validation_checks(e: envmod.TreeEnvironment, paths: int, seed: int, lam: float, threads: int = 1):
    """Cross-oracle checks on one environment; list of (name, passed, detail)."""
    out = []
    # kernel vs Monte Carlo exit sides and exponential moments
    k = kernel.kernel_at(e, 1)
    side, tau = mcsim.skew_exit_samples(k, paths, seed)
    up, _ = kernel.exit_probabilities(k)
    se = math.sqrt(up * (1 - up) / paths)
    frac = float((side > 0).mean())
    out.append(("kernel_exit_probability", abs(frac - up) < 4 * se + 1e-12, {"mc": frac, "exact": up, "se": se}))
    jp, _ = kernel.exit_laplace(k, -lam)
    w = np.where(side > 0, np.exp(-lam * tau), 0.0)
    se = float(w.std(ddof=1) / math.sqrt(paths))
    out.append(("kernel_laplace", abs(w.mean() - jp) < 4 * se, {"mc": float(w.mean()), "exact": jp, "se": se}))
    # xi vs explicit matrix products
    r = mobius.xi(e, lam)
    if not r.infinite:
        _, _, ratio = mobius.matrix_product_ratio(e, lam, min(e.horizon - 2, 400))
        gap = abs(ratio - r.inv_xi)
        out.append(("xi_vs_matrix_products", gap < max(1e-8, 10 * r.contraction_bound),
                    {"mobius": r.xi, "products": 1.0 / ratio, "inv_gap": gap}))
    # hitting transform vs Monte Carlo
    w_exact = lyapunov.w_laplace(e, lam)
    h = mcsim.hitting_time_laplace_mc(e, 1, 0, lam, paths, seed=seed, threads=threads)
    out.append(("hitting_laplace_mc", abs(h.estimate - w_exact) < 4 * h.std_error,
                {"mc": h.estimate, "exact": w_exact, "se": h.std_error}))
    # variational speed vs closed form
    if e.is_constant():
        d, ell = int(e.degrees[0]), float(e.lengths[0])
        a = speed.speed_variational(e, 5.0).c_star
        b = speed.speed_constant_closed_form(d, ell, 5.0).c_star
        out.append(("speed_vs_closed_form", abs(a - b) <= 1e-5 * b, {"variational": a, "closed_form": b}))
    return out


def cmd_validate(cfg):
    e = load_env(cfg)
    checks = validation_checks(e, int(cfg["paths"]), int(cfg["seed"]), float(cfg["lam"]), int(cfg["threads"]))
    rows = [{"check": n, "passed": ok, "detail": d} for n, ok, d in checks]
    for n, ok, _ in checks:
        print(f"{'PASS' if ok else 'FAIL'} {n}", file=sys.stderr)
    failed = [r["check"] for r in rows if not r["passed"]]
    code = EXIT_VALIDATION if failed else EXIT_OK
    return {"summary": {"passed": not failed, "failed": failed, "env_digest": e.digest()}, "rows": rows}, code


COMMANDS = {
    "gen-env": cmd_gen_env, "xi": cmd_xi, "mu": cmd_mu, "eta-c": cmd_eta_c, "speed": cmd_speed,
    "speed-sweep": cmd_speed_sweep, "mc-hit": cmd_mc_hit, "mc-drift": cmd_mc_drift, "mc-ldp": cmd_mc_ldp,
    "pde": cmd_pde, "validate": cmd_validate,
}


# ---------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--output", choices=["json", "csv"])
    p.add_argument("--threads", type=int)
    p.add_argument("--config")
    p.add_argument("--out", help="write the result here plus a .manifest.json next to it")
    p.add_argument("--show-config", action="store_true", default=None)


def _add_env(p):
    p.add_argument("--env", help="environment JSON file")
    p.add_argument("--constant", help="constant tree as d,l")
    p.add_argument("--horizon", type=int)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="skewfront", description="Wave speeds of FKPP fronts on symmetric random trees.")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name != "gen-env":
            _add_env(p)
        return p

    p = add("gen-env", "draw an environment and write it as JSON")
    p.add_argument("--degrees", help="d:weight,...")
    p.add_argument("--lengths", help="l:weight,...")
    p.add_argument("--length-range", help="lo,hi (uniform)")
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)

    p = add("xi", "limit ratio xi_lambda")
    p.add_argument("--lam", type=float)
    p.add_argument("--tol", type=float)

    p = add("mu", "Lyapunov exponent mu(-lambda) on a grid")
    p.add_argument("--lam", help="comma list")
    p.add_argument("--estimator", choices=["auto", "ergodic", "closed_form"])

    p = add("eta-c", "critical exponent eta_c")
    p.add_argument("--tol", type=float)

    for name in ("speed", "speed-sweep"):
        p = add(name, "variational wave speed" if name == "speed" else "wave speed over a beta grid")
        if name == "speed":
            p.add_argument("--beta", type=float)
        else:
            p.add_argument("--betas", help="comma list")
        p.add_argument("--closed-form", help="d,l for the constant-tree formula")
        p.add_argument("--estimator", choices=["auto", "ergodic", "closed_form"])
        p.add_argument("--strict", action="store_true", default=None)

    p = add("mc-hit", "Monte Carlo hitting-time transform")
    p.add_argument("--lam", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--start", type=int)
    p.add_argument("--target", type=int)

    p = add("mc-drift", "lattice random walk drift")
    p.add_argument("--step", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--start", type=int)

    p = add("mc-ldp", "Lyapunov identity trend")
    p.add_argument("--c", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--t-grid", help="comma list")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)

    p = add("pde", "solve the projected FKPP equation and fit the front speed")
    p.add_argument("--beta", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--dx", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--front-level", type=float)
    p.add_argument("--snapshots", help="directory for field snapshots")
    p.add_argument("--snapshot-times", help="comma list")
    p.add_argument("--half", action="store_true", default=None)

    p = add("validate", "cross-oracle checks")
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--strict", action="store_true", default=None)
    return top


# ---------------------------------------------------------------- output

def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def render(result: dict, fmt: str) -> str:
    if "env" in result:
        return json.dumps(result["env"].to_dict(), indent=1) + "\n"
    if fmt == "csv":
        return to_csv(result.get("rows") or [result["summary"]])
    return dumps({k: v for k, v in result.items() if k in ("summary", "rows")}) + "\n"


def write_manifest(path: Path, command, cfg, text, result, wall):
    seeds = {k: cfg[k] for k in ("seed",) if k in cfg}
    digest = result.get("summary", {}).get("env_digest") or result.get("summary", {}).get("digest")
    m = {"subcommand": command, "config": cfg, "seeds": seeds, "env_digest": digest,
         "output_sha256": _sha(text), "tool_version": __version__, "backend": BACKEND,
         "python": platform.python_version(), "wall_clock_s": wall,
         "created": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    path.with_name(path.name + ".manifest.json").write_text(dumps(m) + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    flags = {k: v for k, v in vars(ns).items() if k != "command"}
    command = ns.command
    try:
        cfg = resolve(command, flags)
        if flags.get("show_config"):
            print(dumps({"command": command, "config": cfg}))
            return EXIT_OK
        if command == "gen-env" and not cfg["out"]:
            raise ConfigError("out", "gen-env needs --out FILE")
        t0 = time.perf_counter()
        result, code = COMMANDS[command](cfg)
        wall = time.perf_counter() - t0
        text = render(result, cfg["output"])
        if cfg["out"]:
            path = Path(cfg["out"])
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            write_manifest(path, command, cfg, text, result, wall)
        else:
            sys.stdout.write(text)
        return code
    except SkewfrontError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
