"""Dual-mode proof system: a common reference string, a quantum proving key
with an OT first message, and a classical proof.

The prover chooses its own Pauli pad, teleports the padded witness into the
key, encrypts every pad pair under the lossy-encryption key and sends each
``(pad, randomness)`` payload through a 5-out-of-N oblivious transfer. The
verifier's OT choices are its secret subset, so it learns exactly the pads it
needs. It re-encrypts each one to check it against the transmitted
ciphertext, then runs the usual post-hoc term test.

Binding mode pairs a decryption-mode OT with an injective key, which makes
the pads committed. Hiding mode pairs a messy-mode OT with a lossy key, so
the extractor and the sender simulator can produce proofs without a witness.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import qsim
from ..bitstrings import bits_to_hex, hex_to_bits
from ..hamiltonian import Instance, InstanceError, sim_hist
from ..protocol_qsp import (
    MalformedProofError,
    QspProof,
    VerifierTrace,
    _check_proof,
    _draw_frames,
    corrected_bit,
    posthoc_decision,
    resolve_strategy,
)
from ..qsim import QuantumState, State
from ..subsets import MAX_LOCALITY, sample_subset
from . import lossy, ot
from .dme import HANDLE_BYTES
from .ot import BINDING, HIDING, OtCrs, OtReceiverState, OtTrapdoor

CHOICES = MAX_LOCALITY
PAYLOAD_BYTES = 2 + lossy.RANDOMNESS_BYTES


class ModeMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DmCrs:
    mode: str
    ot: OtCrs
    pk: bytes


@dataclass(frozen=True, eq=False)
class DmTrapdoor:
    mode: str
    ot: OtTrapdoor


@dataclass(frozen=True, eq=False)
class DmProvingKey:
    rho_p: QuantumState
    ot1: tuple[tuple[bytes, ...], ...]


@dataclass(frozen=True, eq=False)
class DmVerificationKey:
    mode: str
    bases: str
    m: np.ndarray
    subset: tuple[int, ...]
    choices: tuple[int, ...]
    ot_state: tuple[OtReceiverState, ...]


@dataclass(frozen=True, eq=False)
class DmKeys:
    proving: DmProvingKey
    verification: DmVerificationKey


@dataclass(frozen=True)
class DmProof:
    x: np.ndarray
    z: np.ndarray
    ciphertexts: tuple[bytes, ...]
    ot2: tuple[tuple[tuple[bytes, bytes], ...], ...]

    def to_json(self) -> str:
        flat = b"".join(c for copy in self.ot2 for pair in copy for c in pair)
        return json.dumps(
            {
                "x": bits_to_hex(self.x),
                "z": bits_to_hex(self.z),
                "ct": [base64.b64encode(c).decode() for c in self.ciphertexts],
                "ot2": base64.b64encode(flat).decode(),
            }
        )

    @classmethod
    def from_json(cls, text: str, n: int) -> "DmProof":
        try:
            data = json.loads(text)
            x = hex_to_bits(data["x"], n)
            z = hex_to_bits(data["z"], n)
            cts = tuple(base64.b64decode(c, validate=True) for c in data["ct"])
            flat = base64.b64decode(data["ot2"], validate=True)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedProofError(f"cannot parse proof: {exc}") from exc
        if len(flat) != CHOICES * n * 2 * HANDLE_BYTES:
            raise MalformedProofError(f"ot2 must hold {CHOICES * n * 2} handles of {HANDLE_BYTES} bytes")
        handles = [flat[i : i + HANDLE_BYTES] for i in range(0, len(flat), HANDLE_BYTES)]
        pairs = [(handles[i], handles[i + 1]) for i in range(0, len(handles), 2)]
        ot2 = tuple(tuple(pairs[c * n : (c + 1) * n]) for c in range(CHOICES))
        return cls(x, z, cts, ot2)


def dm_crsgen(mode: str, rng: np.random.Generator) -> tuple[DmCrs, DmTrapdoor]:
    """Binding: decryption-mode OT with an injective key. Hiding: messy-mode OT with a lossy key."""
    if mode not in (BINDING, HIDING):
        raise ValueError(f"mode must be {BINDING!r} or {HIDING!r}")
    ot_crs, ot_td = ot.ot_crsgen(mode, rng)
    keys = lossy.le_inj_gen(rng) if mode == BINDING else lossy.le_lossy_gen(rng)
    return DmCrs(mode, ot_crs, keys.pk), DmTrapdoor(mode, ot_td)


def pad_choices(subset: Sequence[int]) -> tuple[int, ...]:
    """The subset in ascending order, extended to five entries by repeating its largest element."""
    items = sorted(int(j) for j in subset)
    return tuple(items + [items[-1]] * (CHOICES - len(items)))


def dm_preprocess(
    crs: DmCrs,
    n: int,
    rng: np.random.Generator,
    *,
    subset: Sequence[int] | None = None,
    convention: str | None = None,
) -> DmKeys:
    """``subset`` forces the verifier's secret subset (for tests)."""
    if n < 1:
        raise ValueError("need at least one qubit")
    bases, m, _, _ = _draw_frames(n, rng)
    subset = sample_subset(n, rng) if subset is None else tuple(sorted(int(j) for j in subset))
    if not 1 <= len(subset) <= min(CHOICES, n) or subset[0] < 0 or subset[-1] >= n:
        raise ValueError(f"subset {subset} is not admissible for {n} qubits")
    choices = pad_choices(subset)
    ot1, states = ot.otkn_receiver(crs.ot, choices, n, rng, convention=convention)
    proving = DmProvingKey(qsim.prepare_pauli_product(bases, m), ot1)
    return DmKeys(proving, DmVerificationKey(crs.mode, bases, m, subset, choices, states))


def _payload(pad_x: int, pad_z: int, randomness: bytes) -> bytes:
    return bytes((pad_x, pad_z)) + randomness


def dm_prove(
    crs: DmCrs, k_p: DmProvingKey, instance: Instance, rng: np.random.Generator, *, state: State | None = None
) -> DmProof:
    if state is None:
        if instance.witness is None:
            raise InstanceError("honest proving needs a witness state")
        state = instance.witness
    n = instance.num_qubits
    pad_x = rng.integers(2, size=n, dtype=np.uint8)
    pad_z = rng.integers(2, size=n, dtype=np.uint8)
    padded = qsim.apply_pauli_frame(state, pad_x, pad_z)
    joint = qsim.tensor_product(padded, k_p.rho_p)
    x, z = qsim.sample_bell_outcomes(joint, [(j, n + j) for j in range(n)], rng)
    randomness = [lossy.le_sample_randomness(rng) for _ in range(n)]
    cts = tuple(lossy.le_enc(crs.pk, (int(pad_x[j]), int(pad_z[j])), randomness[j]) for j in range(n))
    payloads = [_payload(int(pad_x[j]), int(pad_z[j]), randomness[j]) for j in range(n)]
    return DmProof(x, z, cts, ot.otkn_sender(crs.ot, k_p.ot1, payloads, rng))


def _check_shapes(proof: DmProof, n: int) -> None:
    _check_proof(QspProof(proof.x, proof.z), n)
    if len(proof.ciphertexts) != n or any(len(c) != lossy.CT_BYTES for c in proof.ciphertexts):
        raise MalformedProofError(f"proof needs {n} ciphertexts of {lossy.CT_BYTES} bytes")
    if len(proof.ot2) != CHOICES or any(len(copy) != n for copy in proof.ot2):
        raise MalformedProofError(f"ot2 must hold {CHOICES} copies of {n} slots")


def _rejected(reason: str) -> tuple[bool, VerifierTrace]:
    return False, VerifierTrace(None, None, None, verdict=False, reason=reason)


def dm_verify(
    crs: DmCrs, k_v: DmVerificationKey, instance: Instance, proof: DmProof, rng: np.random.Generator
) -> tuple[bool, VerifierTrace]:
    if k_v.mode != crs.mode:
        raise ModeMismatchError(f"verification key is for {k_v.mode} mode but the CRS is {crs.mode}")
    n = instance.num_qubits
    if len(k_v.bases) != n:
        raise ValueError("verification key does not match the instance size")
    _check_shapes(proof, n)
    try:
        derived = ot.otkn_derive(crs.ot, k_v.ot_state, proof.ot2)
    except (ot.OtError, ValueError) as exc:
        return _rejected(f"OT derive failed: {exc}")
    pads = {}
    for i, (j, payload) in enumerate(zip(k_v.choices, derived)):
        if len(payload) != PAYLOAD_BYTES or payload[0] > 1 or payload[1] > 1:
            return _rejected(f"payload {i} is malformed")
        pad = (payload[0], payload[1])
        try:
            again = lossy.le_enc(crs.pk, pad, payload[2:])
        except ValueError as exc:
            return _rejected(f"payload {i} does not re-encrypt: {exc}")
        if again != proof.ciphertexts[j]:
            return _rejected(f"ciphertext mismatch on slot {j}")
        if i < len(k_v.subset):
            pads[j] = pad

    def outcome(j: int, basis: str) -> int:
        return corrected_bit(basis, int(k_v.m[j]), int(proof.x[j]) ^ pads[j][0], int(proof.z[j]) ^ pads[j][1])

    return posthoc_decision(instance.hamiltonian, k_v.subset, k_v.bases, outcome, rng)


def _subset_bell_outcomes(reduced: State, rho_p: QuantumState, subset, rng) -> tuple[list[int], list[int]]:
    k = len(subset)
    joint = qsim.tensor_product(reduced, qsim.partial_trace(rho_p, subset))
    xs, zs = qsim.sample_bell_outcomes(joint, [(i, k + i) for i in range(k)], rng)
    return xs.tolist(), zs.tolist()


def dm_simulate(
    crs: DmCrs,
    td: DmTrapdoor,
    k_p: DmProvingKey,
    instance: Instance,
    rng: np.random.Generator,
    *,
    audit: list | None = None,
) -> DmProof:
    """Proof from the trapdoor and the reduced witness on the extracted subset.

    Slots outside the extracted subset are Bell-measured against a maximally
    mixed qubit, which gives uniform outcomes, so they are drawn uniformly.
    ``audit`` (if given) receives the extraction and the payload indices the
    sender simulator read.
    """
    if td.mode != HIDING or crs.mode != HIDING:
        raise ModeMismatchError("simulation needs the hiding-mode CRS and trapdoor")
    n = instance.num_qubits
    extraction = ot.ot_open_rec(td.ot, k_p.ot1)
    subset = tuple(sorted(set(extraction.indices)))
    pad_x = rng.integers(2, size=n, dtype=np.uint8)
    pad_z = rng.integers(2, size=n, dtype=np.uint8)
    randomness = [lossy.le_sample_randomness(rng) for _ in range(n)]
    cts = tuple(lossy.le_enc(crs.pk, (int(pad_x[j]), int(pad_z[j])), randomness[j]) for j in range(n))
    payloads = ot.AuditedPayloads([_payload(int(pad_x[j]), int(pad_z[j]), randomness[j]) for j in range(n)])
    ot2 = ot.ot_sim_sender(crs.ot, k_p.ot1, extraction.indices, payloads, PAYLOAD_BYTES, rng)

    reduced = qsim.apply_pauli_frame(sim_hist(instance, subset), pad_x[list(subset)], pad_z[list(subset)])
    xs, zs = _subset_bell_outcomes(reduced, k_p.rho_p, subset, rng)
    x = rng.integers(2, size=n, dtype=np.uint8)
    z = rng.integers(2, size=n, dtype=np.uint8)
    x[list(subset)] = xs
    z[list(subset)] = zs
    if audit is not None:
        audit.append({"extraction": extraction, "payloads_read": list(payloads.accessed)})
    return DmProof(x, z, cts, ot2)


def dm_run(
    instance: Instance,
    strategy,
    mode: str,
    rng: np.random.Generator,
    *,
    subset: Sequence[int] | None = None,
) -> tuple[bool, VerifierTrace]:
    """Fresh CRS, keys, proof and verdict; a random-bit prover teleports the maximally mixed state."""
    n = instance.num_qubits
    plan = resolve_strategy(strategy, instance)
    state = plan.state if plan.state is not None else qsim.DensityMatrix.maximally_mixed(n)
    crs, _ = dm_crsgen(mode, rng)
    keys = dm_preprocess(crs, n, rng, subset=subset)
    proof = dm_prove(crs, keys.proving, instance, rng, state=state)
    return dm_verify(crs, keys.verification, instance, proof, rng)


def _pad_assignments(k: int):
    for code in range(4**k):
        bits = [(code >> (2 * k - 1 - i)) & 1 for i in range(2 * k)]
        yield bits[0::2], bits[1::2]


def honest_opened_law(rho_p: QuantumState, instance: Instance, subset: Sequence[int]) -> np.ndarray:
    """Exact law of ``(pad_x, pad_z, x, z)`` on ``subset`` for the honest prover,
    shaped ``(2, 2) * k + (2, 2) * k`` and indexed ``[pad_x_0, pad_z_0, ..., x_0, z_0, ...]``."""
    if instance.witness is None:
        raise InstanceError("the honest law needs a witness state")
    n = instance.num_qubits
    subset = list(subset)
    k = len(subset)
    keep = {2 * j for j in subset} | {2 * j + 1 for j in subset}
    drop = tuple(a for a in range(2 * n) if a not in keep)
    out = np.zeros((4**k, 4**k))
    for code, (px, pz) in enumerate(_pad_assignments(k)):
        full_x = np.zeros(n, dtype=np.uint8)
        full_z = np.zeros(n, dtype=np.uint8)
        full_x[subset] = px
        full_z[subset] = pz
        padded = qsim.apply_pauli_frame(instance.witness, full_x, full_z)
        joint = qsim.tensor_product(padded, rho_p)
        law = qsim.bell_outcome_probabilities(joint, [(j, n + j) for j in range(n)])
        out[code] = law.sum(axis=drop).reshape(-1) / 4**k
    return out.reshape((2,) * (4 * k))


def simulated_opened_law(rho_p: QuantumState, instance: Instance, subset: Sequence[int]) -> np.ndarray:
    """Exact law of :func:`dm_simulate` on ``subset``, in the layout of :func:`honest_opened_law`."""
    subset = list(subset)
    k = len(subset)
    reduced = sim_hist(instance, subset)
    partner = qsim.partial_trace(rho_p, subset)
    out = np.zeros((4**k, 4**k))
    for code, (px, pz) in enumerate(_pad_assignments(k)):
        joint = qsim.tensor_product(qsim.apply_pauli_frame(reduced, px, pz), partner)
        out[code] = qsim.bell_outcome_probabilities(joint, [(i, k + i) for i in range(k)]).reshape(-1) / 4**k
    return out.reshape((2,) * (4 * k))
