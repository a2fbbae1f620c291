"""Ranking and sampling of the admissible qubit subsets.

A subset is admissible for an ``n``-qubit instance when it is nonempty and
has at most ``min(5, n)`` elements. Subsets are ordered first by size, then
lexicographically, so ranks ``0 .. n - 1`` are the singletons.
"""

from __future__ import annotations

import functools
import math

import numpy as np

MAX_LOCALITY = 5


@functools.lru_cache(maxsize=None)
def admissible_subset_count(n: int, max_size: int = MAX_LOCALITY) -> int:
    if n < 1:
        raise ValueError("need at least one qubit")
    return sum(math.comb(n, k) for k in range(1, min(max_size, n) + 1))


def dilution_factor(n: int) -> int:
    """Inverse probability that a committed subset and bases match a sampled term
    and the thinning coin lands tails: ``3**5 * sum_{k=1..5} C(n, k)``."""
    return 3**MAX_LOCALITY * admissible_subset_count(n)


@functools.lru_cache(maxsize=4096)
def unrank_subset(n: int, rank: int, max_size: int = MAX_LOCALITY) -> tuple[int, ...]:
    total = admissible_subset_count(n, max_size)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} outside [0, {total})")
    for size in range(1, min(max_size, n) + 1):
        block = math.comb(n, size)
        if rank < block:
            return _unrank_combination(n, size, rank)
        rank -= block
    raise AssertionError("unreachable")


def rank_subset(n: int, subset, max_size: int = MAX_LOCALITY) -> int:
    items = sorted(set(int(j) for j in subset))
    size = len(items)
    if not 1 <= size <= min(max_size, n) or items[0] < 0 or items[-1] >= n:
        raise ValueError(f"subset {items} is not admissible for n={n}")
    rank = sum(math.comb(n, k) for k in range(1, size))
    previous = -1
    remaining = size
    for item in items:
        for skipped in range(previous + 1, item):
            rank += math.comb(n - skipped - 1, remaining - 1)
        previous = item
        remaining -= 1
    return rank


def _unrank_combination(n: int, size: int, rank: int) -> tuple[int, ...]:
    chosen = []
    candidate = 0
    while size:
        block = math.comb(n - candidate - 1, size - 1)
        if rank < block:
            chosen.append(candidate)
            size -= 1
        else:
            rank -= block
        candidate += 1
    return tuple(chosen)


_WORD = 1 << 64


@functools.lru_cache(maxsize=256)
def _digits_per_word(base: int) -> int:
    per = 1
    while base ** (per + 1) <= _WORD:
        per += 1
    return per


def uniform_digits(rng: np.random.Generator, base: int, count: int) -> list[int]:
    """``count`` independent uniform integers in ``[0, base)``.

    Each raw 64-bit word is read as base-``base`` digits after rejecting
    words at or above the largest multiple of ``base**digits``, so the law is
    exact. Much cheaper than ``Generator.integers`` for a handful of values.
    """
    if not 1 <= base <= _WORD:
        raise ValueError(f"base must lie in [1, 2**64], got {base}")
    if base == 1:
        return [0] * count
    out: list[int] = []
    per = _digits_per_word(base)
    while len(out) < count:
        digits = min(per, count - len(out))
        span = base**digits
        raw = int(rng.bit_generator.random_raw())
        if raw >= _WORD - _WORD % span:
            continue
        for _ in range(digits):
            raw, d = divmod(raw, base)
            out.append(d)
    return out


def sample_subset(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    return unrank_subset(n, uniform_digits(rng, admissible_subset_count(n), 1)[0])
