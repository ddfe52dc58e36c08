"""Random symmetric tree environments (degrees, edge lengths) and derived data."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .errors import ConfigError, InsufficientHorizonError, ParseError, ValidationError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EnvConfig:
    """Law of the environment.

    Lengths come either from a finite weighted list (`length_support`) or
    uniformly from a closed range (`length_range`).
    """

    degree_support: tuple = ((3, 1.0),)
    length_support: tuple | None = ((1.0, 1.0),)
    length_range: tuple | None = None
    horizon: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.length_range is not None and self.length_support == ((1.0, 1.0),):
            object.__setattr__(self, "length_support", None)
        object.__setattr__(self, "degree_support", tuple((int(d), float(w)) for d, w in self.degree_support))
        if self.length_support is not None:
            object.__setattr__(self, "length_support", tuple((float(l), float(w)) for l, w in self.length_support))
        if self.length_range is not None:
            object.__setattr__(self, "length_range", tuple(float(v) for v in self.length_range))
        self.validate()

    def validate(self) -> None:
        if not self.degree_support:
            raise ConfigError("degree_support", "empty")
        for d, w in self.degree_support:
            if d < 2:
                raise ConfigError("degree_support", f"degree {d} < 2")
            if not w >= 0:
                raise ConfigError("degree_support", f"negative weight {w}")
        if abs(sum(w for _, w in self.degree_support) - 1.0) > 1e-12:
            raise ConfigError("degree_support", "weights do not sum to 1")
        if (self.length_support is None) == (self.length_range is None):
            raise ConfigError("length_support", "give exactly one of length_support or length_range")
        if self.length_support is not None:
            if not self.length_support:
                raise ConfigError("length_support", "empty")
            for l, w in self.length_support:
                if not (0 < l < math.inf):
                    raise ConfigError("length_support", f"length {l} not in (0, inf)")
                if not w >= 0:
                    raise ConfigError("length_support", f"negative weight {w}")
            if abs(sum(w for _, w in self.length_support) - 1.0) > 1e-12:
                raise ConfigError("length_support", "weights do not sum to 1")
        else:
            if len(self.length_range) != 2:
                raise ConfigError("length_range", "expected (lo, hi)")
            lo, hi = self.length_range
            if not (0 < lo <= hi < math.inf):
                raise ConfigError("length_range", f"need 0 < lo <= hi < inf, got ({lo}, {hi})")
        if self.horizon < 1:
            raise ConfigError("horizon", "must be >= 1")
        if not (0 <= self.seed <= rng.MASK):
            raise ConfigError("seed", "must be an unsigned 64-bit integer")

    @classmethod
    def constant(cls, d: int, ell: float, horizon: int = 1000, seed: int = 0) -> "EnvConfig":
        return cls(((d, 1.0),), ((ell, 1.0),), None, horizon, seed)

    def support_bounds(self) -> tuple[int, float, float]:
        dbar = max(d for d, w in self.degree_support if w > 0)
        if self.length_range is not None:
            lo, hi = self.length_range
        else:
            ls = [l for l, w in self.length_support if w > 0]
            lo, hi = min(ls), max(ls)
        return dbar, lo, hi

    def mean_length(self) -> float:
        if self.length_range is not None:
            return 0.5 * (self.length_range[0] + self.length_range[1])
        return sum(l * w for l, w in self.length_support)

    def with_horizon(self, horizon: int) -> "EnvConfig":
        return EnvConfig(self.degree_support, self.length_support, self.length_range, horizon, self.seed)

    def to_dict(self) -> dict:
        return {
            "degree_support": [list(x) for x in self.degree_support],
            "length_support": None if self.length_support is None else [list(x) for x in self.length_support],
            "length_range": None if self.length_range is None else list(self.length_range),
            "horizon": self.horizon,
            "seed": self.seed,
        }


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TreeEnvironment:
    """Materialized environment d_1..d_N and l_0..l_{N-1}.

    d_0 = 2 is implicit. Negative-side values are derived on demand.
    """

    degrees: np.ndarray
    lengths: np.ndarray
    seed: int = 0
    config: EnvConfig | None = field(default=None, repr=False)

    def __post_init__(self):
        d = np.array(self.degrees, dtype=np.int64)
        l = np.array(self.lengths, dtype=np.float64)
        if d.ndim != 1 or l.ndim != 1 or d.size == 0:
            raise ValidationError("degrees and lengths must be non-empty 1-D sequences")
        if d.size != l.size:
            raise ValidationError(f"{d.size} degrees but {l.size} lengths")
        bad = np.flatnonzero(d < 2)
        if bad.size:
            i = int(bad[0]) + 1
            raise ValidationError(f"d_{i} = {d[i - 1]} gives p_{i} = {(d[i - 1] - 1) / d[i - 1]:.4g} < 1/2")
        if not np.all(np.isfinite(l) & (l > 0)):
            raise ValidationError("lengths must be finite and positive")
        object.__setattr__(self, "degrees", _readonly(d))
        object.__setattr__(self, "lengths", _readonly(l))
        object.__setattr__(self, "skewness", _readonly((d - 1) / d))
        z = np.empty(d.size + 1)
        z[0] = 0.0
        np.cumsum(l, out=z[1:])
        object.__setattr__(self, "interfaces", _readonly(z))

    @property
    def horizon(self) -> int:
        return int(self.degrees.size)

    def p(self, i: int) -> float:
        """Skewness at signed interface index i."""
        if i == 0:
            return 0.5
        if i > 0:
            return float(self.skewness[i - 1])
        return 1.0 - float(self.skewness[-i - 1])

    def z(self, i: int) -> float:
        return float(self.interfaces[i]) if i >= 0 else -float(self.interfaces[-i])

    def degree(self, i: int) -> int:
        return 2 if i == 0 else int(self.degrees[abs(i) - 1])

    def gap(self, i: int) -> float:
        """Edge length l_i = z_{i+1} - z_i for i >= 0."""
        return float(self.lengths[i])

    def bounds(self) -> tuple[int, float, float]:
        """(dbar, l_lo, l_hi), from the config law when known."""
        if self.config is not None:
            return self.config.support_bounds()
        return int(max(2, self.degrees.max())), float(self.lengths.min()), float(self.lengths.max())

    def is_line(self) -> bool:
        return bool(np.all(self.degrees == 2))

    def is_constant(self) -> bool:
        return bool(np.all(self.degrees == self.degrees[0]) and np.all(self.lengths == self.lengths[0]))

    def mean_length(self) -> float:
        if self.config is not None:
            return self.config.mean_length()
        return float(self.lengths.mean())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": int(self.seed),
            "degrees": [int(x) for x in self.degrees],
            "lengths": [float(x) for x in self.lengths],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, TreeEnvironment):
            return NotImplemented
        return (
            self.seed == other.seed
            and np.array_equal(self.degrees, other.degrees)
            and self.lengths.tobytes() == other.lengths.tobytes()
        )

    def __hash__(self):
        return hash(self.digest())

    def extend(self, horizon: int) -> "TreeEnvironment":
        """Same environment with more generations drawn from the same streams."""
        if horizon <= self.horizon:
            return self
        if self.config is None:
            raise InsufficientHorizonError("environment has no generating config to extend", horizon)
        return generate(self.config.with_horizon(horizon))

    def truncated(self, horizon: int) -> "TreeEnvironment":
        return TreeEnvironment(self.degrees[:horizon], self.lengths[:horizon], self.seed,
                               None if self.config is None else self.config.with_horizon(horizon))


def _pick(support, u: np.ndarray) -> np.ndarray:
    values = np.array([v for v, _ in support])
    cum = np.cumsum([w for _, w in support])
    idx = np.searchsorted(cum, u * cum[-1], side="right")
    return values[np.minimum(idx, len(values) - 1)]


def generate(config: EnvConfig) -> TreeEnvironment:
    config.validate()
    n = config.horizon
    ud = rng.uniforms(rng.stream_key(config.seed, "env.degrees"), 0, n)
    ul = rng.uniforms(rng.stream_key(config.seed, "env.lengths"), 0, n)
    degrees = _pick(config.degree_support, ud).astype(np.int64)
    if config.length_range is not None:
        lo, hi = config.length_range
        lengths = lo + (hi - lo) * ul
    else:
        lengths = _pick(config.length_support, ul).astype(np.float64)
    return TreeEnvironment(degrees, lengths, config.seed, config)


def constant_env(d: int, ell: float, horizon: int = 1000) -> TreeEnvironment:
    return generate(EnvConfig.constant(d, ell, horizon))


def save(env: TreeEnvironment, path) -> None:
    Path(path).write_text(json.dumps(env.to_dict(), indent=1) + "\n")


def from_dict(obj) -> TreeEnvironment:
    if not isinstance(obj, dict):
        raise ParseError("environment file must hold a JSON object")
    for key in ("schema_version", "seed", "degrees", "lengths"):
        if key not in obj:
            raise ParseError(f"missing field '{key}'")
    if obj["schema_version"] != SCHEMA_VERSION:
        raise ParseError(f"field 'schema_version': unsupported value {obj['schema_version']!r}")
    seed = obj["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not (0 <= seed <= rng.MASK):
        raise ParseError("field 'seed': expected unsigned 64-bit integer")
    degrees, lengths = obj["degrees"], obj["lengths"]
    if not isinstance(degrees, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in degrees):
        raise ParseError("field 'degrees': expected a list of integers")
    if not isinstance(lengths, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in lengths):
        raise ParseError("field 'lengths': expected a list of numbers")
    env = TreeEnvironment(degrees, lengths, seed)
    # derived fields are never trusted, but a stored copy must at least be consistent
    if "skewness" in obj:
        p = np.asarray(obj["skewness"], dtype=float)
        if np.any(p < 0.5) or np.any(p >= 1):
            i = int(np.flatnonzero((p < 0.5) | (p >= 1))[0]) + 1
            raise ValidationError(f"p_{i} = {p[i - 1]} outside [1/2, 1)")
        if p.shape != env.skewness.shape or np.max(np.abs(p - env.skewness)) > 1e-15:
            raise ValidationError("stored skewness disagrees with degrees")
    return env


def load(path) -> TreeEnvironment:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_dict(obj)
