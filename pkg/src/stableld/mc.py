"""Sharded Monte Carlo helpers: seeding, merging and Wilson intervals."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import InsufficientSamples

__all__ = ["Z99", "wilson_interval", "TailEstimate", "shard_sizes", "run_sharded", "check_gate"]

# two-sided 99% standard normal quantile
Z99 = 2.5758293035489004


def wilson_interval(hits: int, samples: int, z: float = Z99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if samples <= 0:
        return (0.0, 1.0)
    ph = hits / samples
    z2 = z * z
    denom = 1.0 + z2 / samples
    centre = (ph + z2 / (2 * samples)) / denom
    half = z * math.sqrt(ph * (1 - ph) / samples + z2 / (4 * samples * samples)) / denom
    # the endpoints are exactly 0 and 1 at hits = 0 and hits = samples
    lo = 0.0 if hits == 0 else max(0.0, min(ph, centre - half))
    hi = 1.0 if hits == samples else min(1.0, max(ph, centre + half))
    return (lo, hi)


@dataclass(frozen=True)
class TailEstimate:
    """Monte Carlo tail estimate with a 99% Wilson interval."""

    p_hat: float
    ci_lo: float
    ci_hi: float
    hits: int
    samples: int
    expected_hits: float = math.nan

    @classmethod
    def from_counts(cls, hits: int, samples: int, expected_hits: float = math.nan) -> "TailEstimate":
        lo, hi = wilson_interval(hits, samples)
        return cls(hits / samples if samples else math.nan, lo, hi, hits, samples, expected_hits)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_hi - self.ci_lo)

    def to_dict(self) -> dict:
        return asdict(self)


def shard_sizes(samples: int, shards: int) -> list[int]:
    """Split ``samples`` into ``shards`` nearly equal parts."""
    if shards < 1:
        raise ValueError("shards must be >= 1")
    base, extra = divmod(samples, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def check_gate(samples: int, p_pred: float, gate: int = 100) -> float:
    """Raise unless ``samples * p_pred >= gate``; return the expected hits."""
    expected = samples * p_pred
    if not expected >= gate:
        need = math.inf if p_pred <= 0 else math.ceil(gate / p_pred)
        raise InsufficientSamples(expected, int(need) if math.isfinite(need) else -1, gate)
    return expected


def run_sharded(
    seed: int,
    samples: int,
    shards: int,
    shard_fn: Callable[[np.random.Generator, int], tuple[int, int]],
    workers: int | None = None,
) -> tuple[int, int]:
    """Run ``shard_fn(rng, k) -> (hits, used)`` over independent seeded shards.

    Shard streams come from ``SeedSequence(seed).spawn(shards)``; counts are
    summed, so the result does not depend on ``workers``.
    """
    children = np.random.SeedSequence(seed).spawn(shards)
    sizes = shard_sizes(samples, shards)
    jobs = [(np.random.default_rng(c), k) for c, k in zip(children, sizes)]
    if workers is not None and workers > 1 and shards > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda job: shard_fn(*job), jobs))
    else:
        results = [shard_fn(*job) for job in jobs]
    hits = sum(r[0] for r in results)
    used = sum(r[1] for r in results)
    return hits, used
