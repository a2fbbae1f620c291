"""Ideal dual-mode encryption backed by an in-process trusted table.

Public keys, secret keys and ciphertexts are random byte strings, so their
distribution never depends on the branch or the message. The table remembers
which branch each key was made for and what each decryptable ciphertext
holds. In messy mode, encrypting on a key's messy branch stores nothing, so
the ciphertext is independent of the message. In decryption mode every
ciphertext is stored, and keys from :func:`dm_enc_trapkeygen` open both
branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MESSY = "messy"
DECRYPTION = "dec"
KEY_BYTES = 32
HANDLE_BYTES = 16
UNREGISTERED_MESSY_BRANCH = 0


class MessyCiphertextError(ValueError):
    pass


class DmeError(ValueError):
    pass


@dataclass
class _Table:
    keys: dict[bytes, frozenset[int]] = field(default_factory=dict)
    secrets: dict[bytes, tuple[bytes, frozenset[int]]] = field(default_factory=dict)
    ciphertexts: dict[bytes, tuple[bytes, int, bytes]] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class DmeCrs:
    """Public setup value. The mode is kept inside the functionality, not exposed."""

    _mode: str
    _table: _Table
    tag: bytes


@dataclass(frozen=True, eq=False)
class DmeTrapdoor:
    mode: str
    crs: DmeCrs


@dataclass(frozen=True)
class DmeSecretKey:
    pk: bytes
    token: bytes


def dm_enc_setup(mode: str, rng: np.random.Generator) -> tuple[DmeCrs, DmeTrapdoor]:
    if mode not in (MESSY, DECRYPTION):
        raise ValueError(f"mode must be {MESSY!r} or {DECRYPTION!r}")
    crs = DmeCrs(mode, _Table(), rng.bytes(KEY_BYTES))
    return crs, DmeTrapdoor(mode, crs)


def _fresh(rng: np.random.Generator, used: dict, size: int) -> bytes:
    while True:
        value = rng.bytes(size)
        if value not in used:
            return value


def _register(crs: DmeCrs, branches: frozenset[int], rng: np.random.Generator) -> tuple[bytes, DmeSecretKey]:
    pk = _fresh(rng, crs._table.keys, KEY_BYTES)
    token = _fresh(rng, crs._table.secrets, KEY_BYTES)
    crs._table.keys[pk] = branches
    crs._table.secrets[token] = (pk, branches)
    return pk, DmeSecretKey(pk, token)


def dm_enc_keygen(crs: DmeCrs, branch: int, rng: np.random.Generator) -> tuple[bytes, DmeSecretKey]:
    if branch not in (0, 1):
        raise ValueError("branch must be 0 or 1")
    return _register(crs, frozenset({branch}), rng)


def dm_enc_trapkeygen(
    crs: DmeCrs, td: DmeTrapdoor, rng: np.random.Generator
) -> tuple[bytes, DmeSecretKey, DmeSecretKey]:
    """One public key with secret keys for both branches; decryption mode only."""
    if td.mode != DECRYPTION or td.crs is not crs:
        raise DmeError("trapdoor key generation needs the decryption-mode trapdoor of this setup")
    pk, sk = _register(crs, frozenset({0, 1}), rng)
    return pk, sk, sk


def dm_enc_find_messy(crs: DmeCrs, td: DmeTrapdoor, pk: bytes) -> int:
    """The branch on which ``pk`` hides messages; messy mode only."""
    if td.mode != MESSY or td.crs is not crs:
        raise DmeError("finding the messy branch needs the messy-mode trapdoor of this setup")
    branches = crs._table.keys.get(bytes(pk))
    if branches is None or len(branches) != 1:
        return UNREGISTERED_MESSY_BRANCH
    (branch,) = branches
    return 1 - branch


def _is_messy(crs: DmeCrs, pk: bytes, branch: int) -> bool:
    if crs._mode != MESSY:
        return False
    branches = crs._table.keys.get(pk)
    if branches is None:
        return branch == UNREGISTERED_MESSY_BRANCH
    return branch not in branches


def dm_enc_enc(crs: DmeCrs, pk: bytes, branch: int, message: bytes, rng: np.random.Generator) -> bytes:
    if branch not in (0, 1):
        raise ValueError("branch must be 0 or 1")
    pk = bytes(pk)
    handle = _fresh(rng, crs._table.ciphertexts, HANDLE_BYTES)
    if not _is_messy(crs, pk, branch):
        crs._table.ciphertexts[handle] = (pk, branch, bytes(message))
    return handle


def dm_enc_dec(crs: DmeCrs, sk: DmeSecretKey, ct: bytes) -> bytes:
    record = crs._table.ciphertexts.get(bytes(ct))
    if record is None:
        raise MessyCiphertextError("ciphertext is on a messy branch and carries no message")
    registered = crs._table.secrets.get(sk.token)
    if registered is None or registered[0] != sk.pk:
        raise DmeError("unknown secret key")
    pk, branch, message = record
    if pk != sk.pk:
        raise DmeError("ciphertext was made for a different public key")
    if branch not in registered[1]:
        raise DmeError(f"secret key cannot open branch {branch}")
    return message

