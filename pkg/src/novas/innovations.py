"""Seeded generation of future innovation draws.

Two sources: a standard normal truncated to the transform's bound (via
rejection sampling, exact and cheap at any admissible bound), and i.i.d.
resampling from a pool of calibrated residuals. Every stream is a PCG64
generator derived through ``numpy``'s SeedSequence, so sub-streams keyed by
(window, method, path) indices are reproducible regardless of the parallel
schedule and never collide.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Seed:
    """A 64-bit master seed; default 0 gives reproducible runs."""

    value: int = 0

    def __post_init__(self):
        if not 0 <= int(self.value) < 2**64:
            raise DataError(f"seed {self.value} outside [0, 2**64)")
        object.__setattr__(self, "value", int(self.value))

    @classmethod
    def of(cls, seed) -> "Seed":
        return seed if isinstance(seed, Seed) else cls(int(seed))


def substream(seed, *key: int) -> np.random.Generator:
    """Independent generator for ``seed`` split at an integer key path.

    Distinct key paths map to distinct SeedSequence spawn keys, so streams
    for different (window, method, path) indices are independent and a
    parallel schedule cannot change what any task draws.
    """
    seed = Seed.of(seed)
    ss = np.random.SeedSequence(entropy=seed.value, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


class SourceKind(str, enum.Enum):
    TRIMMED_NORMAL = "TRIMMED_NORMAL"
    EMPIRICAL = "EMPIRICAL"


@dataclass(frozen=True)
class InnovationSource:
    """Where future innovations come from: truncated Monte Carlo or bootstrap."""

    kind: SourceKind
    bound: float = math.inf
    residual_pool: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is SourceKind.EMPIRICAL:
            pool = np.asarray(self.residual_pool, dtype=float)
            if pool.size == 0:
                raise DataError("empirical innovation source needs a nonempty pool")
            object.__setattr__(self, "residual_pool", pool)
        else:
            if not self.bound > 0.0:
                raise DataError(f"truncation bound {self.bound} must be positive")
            if math.isfinite(self.bound) and self.bound < 3.0:
                raise DataError(
                    f"truncation bound {self.bound:.4f} < 3 leaves too little "
                    "normal mass (inadmissible weights upstream)"
                )

    def draw(self, gen: np.random.Generator, shape) -> np.ndarray:
        """Draw an array of innovations from an already-derived generator."""
        count = int(np.prod(shape))
        if self.kind is SourceKind.EMPIRICAL:
            flat = gen.choice(self.residual_pool, size=count, replace=True)
        else:
            flat, _ = _rejection_normal(gen, self.bound, count)
        return flat.reshape(shape)


def _rejection_normal(
    gen: np.random.Generator, bound: float, count: int
) -> tuple[np.ndarray, int]:
    """``count`` draws of N(0,1) conditioned on ``|w| <= bound``.

    Returns the draws plus the number of raw attempts (for acceptance-rate
    checks). Chunk sizes depend only on how many draws are still missing, so
    the output is a pure function of the generator state.
    """
    if not math.isfinite(bound):
        return gen.standard_normal(count), count
    out = np.empty(count)
    filled = 0
    attempts = 0
    while filled < count:
        chunk = max(count - filled, 128)
        raw = gen.standard_normal(chunk)
        attempts += chunk
        kept = raw[np.abs(raw) <= bound]
        take = min(kept.size, count - filled)
        out[filled : filled + take] = kept[:take]
        filled += take
    return out, attempts


def sample_trimmed_normal(bound: float, count: int, seed) -> np.ndarray:
    """i.i.d. standard normal draws conditioned on ``|w| <= bound``.

    ``bound = inf`` gives the plain standard normal. Deterministic given the
    seed.
    """
    if count < 1:
        raise DataError(f"count={count} must be positive")
    if not bound > 0.0:
        raise DataError(f"bound={bound} must be positive")
    draws, _ = _rejection_normal(substream(seed), bound, count)
    return draws


def sample_empirical(pool, count: int, seed) -> np.ndarray:
    """i.i.d. uniform draws with replacement from ``pool``; deterministic given seed."""
    if count < 1:
        raise DataError(f"count={count} must be positive")
    pool = np.asarray(pool, dtype=float)
    if pool.size == 0:
        raise DataError("cannot resample from an empty pool")
    return substream(seed).choice(pool, size=count, replace=True)
