"""Counter-based, splittable random streams.

Every draw is a pure function of (key, counter), so any trajectory can be
regenerated in isolation and results do not depend on how work is split
across threads. The compiled core implements the same mixer bit for bit.
"""

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53


def mix64(x: int) -> int:
    x &= MASK
    x = ((x ^ (x >> 30)) * _M1) & MASK
    x = ((x ^ (x >> 27)) * _M2) & MASK
    return x ^ (x >> 31)


def _label_hash(label: str) -> int:
    # FNV-1a, fixed so that keys never depend on Python's hash seed
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK
    return h


def stream_key(seed: int, label: str) -> int:
    """Key of the substream named `label` under a master seed."""
    if seed < 0 or seed > MASK:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return mix64(mix64(seed) ^ _label_hash(label))


def substream(key: int, index: int) -> int:
    """Key of the index-th child stream, e.g. one per trajectory."""
    return mix64(key ^ mix64(((index + 1) * GOLDEN) & MASK))


def draw_u64(key: int, counter: int) -> int:
    return mix64((key + (counter + 1) * GOLDEN) & MASK)


def draw_uniform(key: int, counter: int) -> float:
    return ((draw_u64(key, counter) >> 11) + 0.5) * _INV53


def _mix64_array(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_M1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def uniforms(key: int, start: int, n: int) -> np.ndarray:
    """Uniforms in (0, 1) for counters start .. start+n-1 of one stream."""
    ctr = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = np.uint64(key) + ctr * np.uint64(GOLDEN)
        u = _mix64_array(x)
    return ((u >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


def substream_keys(key: int, start: int, n: int) -> np.ndarray:
    """Vectorized `substream` for indices start .. start+n-1."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(np.uint64(key) ^ _mix64_array(idx * np.uint64(GOLDEN)))


def uniforms_at(keys: np.ndarray, counter: int) -> np.ndarray:
    """One uniform per key at a shared counter value."""
    with np.errstate(over="ignore"):
        x = keys + np.uint64(((counter + 1) * GOLDEN) & MASK)
        u = _mix64_array(x)
    return ((u >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


class Stream:
    """Sequential cursor over a counter-based stream (scalar use)."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key
        self.counter = counter

    def uniform(self) -> float:
        u = draw_uniform(self.key, self.counter)
        self.counter += 1
        return u
