"""Chunked Monte-Carlo acceptance estimation.

Trials are split into fixed-size chunks, each seeded by a child of one
``SeedSequence``. Counts therefore depend only on ``(seed, trials, chunk)``,
never on how many workers ran the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

Trial = Callable[[np.random.Generator], bool]

THREADS_ENV = "QMANIZK_THREADS"
DEFAULT_CHUNK = 2000


def worker_count() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Estimate:
    trials: int
    accepts: int

    @property
    def rate(self) -> float:
        return self.accepts / self.trials

    @property
    def sigma(self) -> float:
        p = self.rate
        return math.sqrt(p * (1 - p) / self.trials)

    def within(self, expected: float, k: float = 4.0) -> bool:
        return abs(self.rate - expected) <= k * self.sigma


def _run_chunk(trial: Trial, size: int, seed: np.random.SeedSequence) -> int:
    rng = np.random.default_rng(seed)
    return sum(bool(trial(rng)) for _ in range(size))


def estimate_acceptance(
    trial: Trial, trials: int, seed: int, *, chunk: int = DEFAULT_CHUNK, workers: int | None = None
) -> Estimate:
    """Run ``trial`` ``trials`` times; with several workers ``trial`` must pickle."""
    if trials < 1:
        raise ValueError("need at least one trial")
    sizes = [chunk] * (trials // chunk)
    if trials % chunk:
        sizes.append(trials % chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(sizes) == 1:
        accepts = sum(_run_chunk(trial, n, s) for n, s in zip(sizes, seeds))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            accepts = sum(pool.map(_run_chunk, [trial] * len(sizes), sizes, seeds))
    return Estimate(trials, accepts)
