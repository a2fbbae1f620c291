"""Toy Regev public-key encryption with injective and lossy key modes.

Messages are two bits, each carried by its own coordinate scaled by
``floor(q/2)``. Encryption randomness is a binary vector ``R`` of length
``SAMPLES``, and the ciphertext is ``(R A, R B + floor(q/2) mu) mod q``.
Injective keys have ``B = A S + E``. They are resampled until, in every column
of ``E``, the positive entries and the negative entries each sum to at most
``MARGIN``, so ``|R E| <= MARGIN < q/4`` for every binary ``R`` and
decryption never fails. Lossy keys replace ``B`` with uniform noise.

These parameters are far too small to hide anything from a determined
adversary; hiding in lossy mode is only demonstrated statistically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIMENSION = 16
MODULUS = 257
ERROR_BOUND = 4
SAMPLES = 48
MESSAGE_BITS = 2
HALF = MODULUS // 2
MARGIN = MODULUS // 4 - 1
_WORD = np.dtype("<u2")

PK_BYTES = SAMPLES * (DIMENSION + MESSAGE_BITS) * _WORD.itemsize
SK_BYTES = DIMENSION * MESSAGE_BITS * _WORD.itemsize
CT_BYTES = (DIMENSION + MESSAGE_BITS) * _WORD.itemsize
RANDOMNESS_BYTES = SAMPLES * _WORD.itemsize

INJECTIVE = "injective"
LOSSY = "lossy"


class DecryptionError(ValueError):
    pass


@dataclass(frozen=True)
class LossyKeypair:
    mode: str
    pk: bytes
    sk: bytes | None = None


def _pack(*arrays: np.ndarray) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype=_WORD).tobytes() for a in arrays)


def _unpack(data: bytes, size: int, what: str) -> np.ndarray:
    if len(data) != size:
        raise ValueError(f"{what} must be {size} bytes, got {len(data)}")
    return np.frombuffer(data, dtype=_WORD).astype(np.int64)


def _public_matrices(pk: bytes) -> tuple[np.ndarray, np.ndarray]:
    words = _unpack(pk, PK_BYTES, "public key")
    a = words[: SAMPLES * DIMENSION].reshape(SAMPLES, DIMENSION)
    b = words[SAMPLES * DIMENSION :].reshape(SAMPLES, MESSAGE_BITS)
    return a, b


def _margin_ok(errors: np.ndarray) -> bool:
    positive = np.where(errors > 0, errors, 0).sum(axis=0)
    negative = np.where(errors < 0, -errors, 0).sum(axis=0)
    return bool(np.all(positive <= MARGIN) and np.all(negative <= MARGIN))


def le_inj_gen(rng: np.random.Generator) -> LossyKeypair:
    a = rng.integers(MODULUS, size=(SAMPLES, DIMENSION))
    s = rng.integers(MODULUS, size=(DIMENSION, MESSAGE_BITS))
    while True:
        errors = rng.integers(-ERROR_BOUND, ERROR_BOUND + 1, size=(SAMPLES, MESSAGE_BITS))
        if _margin_ok(errors):
            break
    b = (a @ s + errors) % MODULUS
    return LossyKeypair(INJECTIVE, _pack(a, b), _pack(s))


def le_lossy_gen(rng: np.random.Generator) -> LossyKeypair:
    a = rng.integers(MODULUS, size=(SAMPLES, DIMENSION))
    b = rng.integers(MODULUS, size=(SAMPLES, MESSAGE_BITS))
    return LossyKeypair(LOSSY, _pack(a, b))


def le_sample_randomness(rng: np.random.Generator) -> bytes:
    return _pack(rng.integers(2, size=SAMPLES))


def _randomness_vector(randomness: bytes) -> np.ndarray:
    r = _unpack(randomness, RANDOMNESS_BYTES, "randomness")
    if r.max() > 1:
        raise ValueError("encryption randomness must be a binary vector")
    return r


def le_enc(pk: bytes, message: tuple[int, int], randomness: bytes) -> bytes:
    """Deterministic given ``randomness``, which is what makes re-encryption checks possible."""
    bits = np.asarray(message, dtype=np.int64)
    if bits.shape != (MESSAGE_BITS,) or bits.min() < 0 or bits.max() > 1:
        raise ValueError(f"message must be {MESSAGE_BITS} bits, got {message!r}")
    a, b = _public_matrices(pk)
    r = _randomness_vector(randomness)
    return _pack((r @ a) % MODULUS, (r @ b + HALF * bits) % MODULUS)


def le_dec(sk: bytes, ct: bytes) -> tuple[int, int]:
    s = _unpack(sk, SK_BYTES, "secret key").reshape(DIMENSION, MESSAGE_BITS)
    words = _unpack(ct, CT_BYTES, "ciphertext")
    noisy = (words[DIMENSION:] - words[:DIMENSION] @ s) % MODULUS
    out = []
    for v in noisy.tolist():
        if v <= MARGIN or v >= MODULUS - MARGIN:
            out.append(0)
        elif abs(v - HALF) <= MARGIN:
            out.append(1)
        else:
            raise DecryptionError(f"coordinate {v} lies outside both decoding windows")
    return out[0], out[1]
