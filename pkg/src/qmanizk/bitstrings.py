"""Bit-vector helpers shared by the protocol modules.

Bit vectors are ``numpy.uint8`` arrays holding 0/1. Position ``j`` of a vector
refers to qubit ``j``; packing to an integer is little-endian (position 0 is
the least significant bit), matching the simulator's basis indexing.
"""

from __future__ import annotations

import math

import numpy as np


def as_bits(values, length: int | None = None) -> np.ndarray:
    bits = np.asarray(values, dtype=np.uint8).reshape(-1)
    if np.any(bits > 1):
        raise ValueError("bit vector entries must be 0 or 1")
    if length is not None and bits.size != length:
        raise ValueError(f"expected {length} bits, got {bits.size}")
    return bits


def bits_to_int(bits) -> int:
    value = 0
    for j, b in enumerate(np.asarray(bits).reshape(-1)):
        if b:
            value |= 1 << j
    return value


def int_to_bits(value: int, length: int) -> np.ndarray:
    if value < 0 or value >> length:
        raise ValueError(f"{value} does not fit in {length} bits")
    return np.array([(value >> j) & 1 for j in range(length)], dtype=np.uint8)


def bits_to_hex(bits) -> str:
    bits = np.asarray(bits).reshape(-1)
    width = max(1, math.ceil(bits.size / 4))
    return format(bits_to_int(bits), f"0{width}x")


def hex_to_bits(text: str, length: int) -> np.ndarray:
    try:
        value = int(text, 16)
    except ValueError as exc:
        raise ValueError(f"not a hex string: {text!r}") from exc
    return int_to_bits(value, length)


def parity(bits) -> int:
    return int(np.bitwise_xor.reduce(np.asarray(bits, dtype=np.uint8).reshape(-1), initial=0))
