"""Dual-mode 1-out-of-n and k-out-of-n oblivious transfer from dual-mode encryption.

Slot ``i`` carries two ciphertexts, and the payloads form a masked chain:
branch 0 holds ``mu_i ^ r_{i-1}`` and branch 1 holds ``r_i ^ r_{i-1}``, with
``r_{-1} = 0``. A receiver choosing ``j`` takes branch 1 on every slot before
``j`` and branch 0 on slot ``j``, so its shares telescope to ``mu_j``. On
slots after ``j`` it takes branch 0, which reveals only messages masked by
chain values it never sees.

The ``literal`` convention takes branch 1 on slot ``j`` and branch 0
everywhere else. It does not telescope, and is kept only so tests can confirm
that it breaks correctness.

Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import dme
from .dme import DmeCrs, DmeSecretKey, DmeTrapdoor

BINDING = "binding"
HIDING = "hiding"
CORRECTED = "corrected"
LITERAL = "literal"
DEFAULT_CONVENTION = CORRECTED


class OtError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OtCrs:
    mode: str
    dme: DmeCrs


@dataclass(frozen=True, eq=False)
class OtTrapdoor:
    mode: str
    dme: DmeTrapdoor


@dataclass(frozen=True)
class OtReceiverState:
    choice: int
    branches: tuple[int, ...]
    secret_keys: tuple[DmeSecretKey, ...]
    convention: str


@dataclass(frozen=True)
class Extraction:
    """Indices recovered from a first message, one per copy; ``fallback[i]`` marks
    copies where no index matched and the last slot was returned instead."""

    indices: tuple[int, ...]
    fallback: tuple[bool, ...]


def ot_crsgen(mode: str, rng: np.random.Generator) -> tuple[OtCrs, OtTrapdoor]:
    if mode not in (BINDING, HIDING):
        raise ValueError(f"mode must be {BINDING!r} or {HIDING!r}")
    crs, td = dme.dm_enc_setup(dme.DECRYPTION if mode == BINDING else dme.MESSY, rng)
    return OtCrs(mode, crs), OtTrapdoor(mode, td)


def _convention(convention: str | None) -> str:
    convention = DEFAULT_CONVENTION if convention is None else convention
    if convention not in (CORRECTED, LITERAL):
        raise ValueError(f"unknown branch convention {convention!r}")
    return convention


def receiver_branches(n: int, j: int, convention: str | None = None) -> tuple[int, ...]:
    if _convention(convention) == CORRECTED:
        return tuple(1 if i < j else 0 for i in range(n))
    return tuple(1 if i == j else 0 for i in range(n))


def ot1n_receiver(
    crs: OtCrs, j: int, n: int, rng: np.random.Generator, *, convention: str | None = None
) -> tuple[tuple[bytes, ...], OtReceiverState]:
    if not 0 <= j < n:
        raise OtError(f"choice {j} outside [0, {n})")
    convention = _convention(convention)
    branches = receiver_branches(n, j, convention)
    keys = [dme.dm_enc_keygen(crs.dme, b, rng) for b in branches]
    return tuple(pk for pk, _ in keys), OtReceiverState(j, branches, tuple(sk for _, sk in keys), convention)


def _xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def ot1n_sender(
    crs: OtCrs, ot1: Sequence[bytes], messages: Sequence[bytes], rng: np.random.Generator
) -> tuple[tuple[bytes, bytes], ...]:
    n = len(ot1)
    if len(messages) != n:
        raise OtError(f"need {n} messages, got {len(messages)}")
    length = len(messages[0])
    if any(len(mu) != length for mu in messages):
        raise OtError("all messages must have the same length")
    # chain[i] is r_{i-1}; chain[n] exists only to mask the last branch-1 share
    chain = [bytes(length)] + [rng.bytes(length) for _ in range(n)]
    ot2 = []
    for i, pk in enumerate(ot1):
        share0 = _xor(messages[i], chain[i])
        share1 = _xor(chain[i + 1], chain[i])
        ot2.append((dme.dm_enc_enc(crs.dme, pk, 0, share0, rng), dme.dm_enc_enc(crs.dme, pk, 1, share1, rng)))
    return tuple(ot2)


def ot1n_derive(crs: OtCrs, st: OtReceiverState, ot2: Sequence[tuple[bytes, bytes]]) -> bytes:
    if len(ot2) != len(st.branches):
        raise OtError(f"second message has {len(ot2)} slots, expected {len(st.branches)}")
    out = None
    for i in range(st.choice + 1):
        share = dme.dm_enc_dec(crs.dme, st.secret_keys[i], ot2[i][st.branches[i]])
        out = share if out is None else _xor(out, share)
    return out


def otkn_receiver(
    crs: OtCrs, choices: Sequence[int], n: int, rng: np.random.Generator, *, convention: str | None = None
) -> tuple[tuple[tuple[bytes, ...], ...], tuple[OtReceiverState, ...]]:
    firsts, states = [], []
    for copy, j in enumerate(choices):
        try:
            ot1, st = ot1n_receiver(crs, int(j), n, rng, convention=convention)
        except OtError as exc:
            raise OtError(f"copy {copy}: {exc}") from exc
        firsts.append(ot1)
        states.append(st)
    return tuple(firsts), tuple(states)


def otkn_sender(
    crs: OtCrs, ot1: Sequence[Sequence[bytes]], messages: Sequence[bytes], rng: np.random.Generator
) -> tuple[tuple[tuple[bytes, bytes], ...], ...]:
    out = []
    for copy, first in enumerate(ot1):
        try:
            out.append(ot1n_sender(crs, first, messages, rng))
        except OtError as exc:
            raise OtError(f"copy {copy}: {exc}") from exc
    return tuple(out)


def otkn_derive(
    crs: OtCrs, states: Sequence[OtReceiverState], ot2: Sequence[Sequence[tuple[bytes, bytes]]]
) -> tuple[bytes, ...]:
    if len(states) != len(ot2):
        raise OtError(f"second message has {len(ot2)} copies, expected {len(states)}")
    out = []
    for copy, (st, second) in enumerate(zip(states, ot2)):
        try:
            out.append(ot1n_derive(crs, st, second))
        except (OtError, dme.DmeError) as exc:
            raise OtError(f"copy {copy}: {exc}") from exc
    return tuple(out)


def ot1n_open_rec(td: OtTrapdoor, ot1: Sequence[bytes], *, convention: str | None = None) -> tuple[int, bool]:
    """Extract the receiver's choice from its public keys via the messy-branch finder.

    Under the corrected convention the choice is the first slot whose messy
    branch is 1, i.e. the first key made for branch 0. Under the literal one it
    is the first slot whose messy branch is 0. Returns ``(j, fallback)``.
    """
    if td.mode != HIDING:
        raise OtError("extraction needs the hiding-mode trapdoor")
    target = 1 if _convention(convention) == CORRECTED else 0
    for i, pk in enumerate(ot1):
        if dme.dm_enc_find_messy(td.dme.crs, td.dme, pk) == target:
            return i, False
    return len(ot1) - 1, True


def ot_open_rec(td: OtTrapdoor, ot1: Sequence[Sequence[bytes]], *, convention: str | None = None) -> Extraction:
    found = [ot1n_open_rec(td, first, convention=convention) for first in ot1]
    return Extraction(tuple(j for j, _ in found), tuple(flag for _, flag in found))


class AuditedPayloads(Sequence):
    """Read-only payload list that records which indices were read."""

    def __init__(self, payloads: Sequence[bytes] | Mapping[int, bytes], size: int | None = None):
        self._payloads = payloads
        self._size = len(payloads) if size is None else size
        self.accessed: list[int] = []

    def __len__(self) -> int:
        return self._size

    def __getitem__(self, index):
        if isinstance(index, slice):
            raise TypeError("audited payloads are read one index at a time")
        if not 0 <= index < self._size:
            raise IndexError(index)
        self.accessed.append(index)
        return self._payloads[index]


def ot_sim_sender(
    crs: OtCrs,
    ot1: Sequence[Sequence[bytes]],
    choices: Sequence[int],
    payloads: Sequence[bytes],
    length: int,
    rng: np.random.Generator,
) -> tuple[tuple[tuple[bytes, bytes], ...], ...]:
    """Second message from the chosen payloads alone; every other slot gets a random message."""
    out = []
    for first, j in zip(ot1, choices):
        messages = [rng.bytes(length) for _ in range(len(first))]
        messages[j] = payloads[j]
        out.append(ot1n_sender(crs, first, messages, rng))
    return tuple(out)
