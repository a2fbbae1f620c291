"""Sigma protocol with quantum preprocessing and its Fiat-Shamir transform.

Preprocessing hands the prover ``(x)_j U(W_j)|m_j>`` and the verifier
``(W, m)``. The prover teleports its witness into the key, commits to every
pair of Bell outcomes with a random-oracle commitment, and opens the pairs on
the challenge subset. The verifier checks the openings, then runs the same
post-hoc term test as the padded protocol with the challenge in place of a
pre-shared subset and no pad.

The non-interactive version derives the challenge by hashing the instance
and the commitments. The oracle is a lazily sampled table that can be
reprogrammed, which is what the zero-knowledge simulator needs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qsim
from .hamiltonian import Instance, InstanceError, sim_hist
from .protocol_qsp import (
    MalformedProofError,
    ProverStrategy,
    VerifierTrace,
    _draw_frames,
    _LazyMeasurement,
    _virtual_teleport,
    corrected_bit,
    hoeffding_bound,
    posthoc_decision,
    resolve_strategy,
)
from .qsim import QuantumState, State
from .subsets import MAX_LOCALITY, admissible_subset_count, rank_subset, sample_subset, unrank_subset

COMMIT_TAG = b"COMMIT"
FS_TAG = b"FS"
RANDOMNESS_BYTES = 32
BLOCK_BITS = 64
MAX_CHALLENGE_QUERIES = 64


class ChallengeExhaustedError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# programmable random oracle


class ProgrammableOracle:
    """Random function on byte strings, sampled lazily from a seeded generator.

    Reprogrammed points are recorded in ``reprogrammed`` in the order they
    were set.
    """

    def __init__(self, seed: int | np.random.SeedSequence | None = None, output_bits: int = 256):
        if output_bits <= 0 or output_bits % 8:
            raise ValueError("output_bits must be a positive multiple of 8")
        self.output_bits = output_bits
        self.output_bytes = output_bits // 8
        self._seed = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._rng = np.random.default_rng(self._seed)
        self._table: dict[bytes, bytes] = {}
        self.query_count = 0
        self.reprogrammed: list[bytes] = []

    def query(self, point: bytes) -> bytes:
        self.query_count += 1
        value = self._table.get(point)
        if value is None:
            value = self._rng.bytes(self.output_bytes)
            self._table[point] = value
        return value

    __call__ = query

    def reprogram(self, point: bytes, value: bytes) -> None:
        if len(value) != self.output_bytes:
            raise ValueError(f"oracle values are {self.output_bytes} bytes")
        self._table[bytes(point)] = bytes(value)
        self.reprogrammed.append(bytes(point))

    def fork(self) -> "ProgrammableOracle":
        """A fresh oracle with an independent seed derived from this one."""
        return ProgrammableOracle(self._seed.spawn(1)[0], self.output_bits)

    def __len__(self) -> int:
        return len(self._table)

    def to_json(self) -> str:
        return json.dumps(
            {
                "output_bits": self.output_bits,
                "queries": self.query_count,
                "table": {k.hex(): v.hex() for k, v in self._table.items()},
                "reprogrammed": [p.hex() for p in self.reprogrammed],
            }
        )


def oracle_query(ro: ProgrammableOracle, point: bytes) -> bytes:
    return ro.query(point)


# ---------------------------------------------------------------------------
# commitments


@dataclass(frozen=True)
class Commitment:
    com: bytes
    message: bytes
    randomness: bytes


def _commit_point(message: bytes, randomness: bytes) -> bytes:
    return COMMIT_TAG + len(message).to_bytes(4, "big") + message + randomness


def commit(ro: ProgrammableOracle, message: bytes, rng: np.random.Generator) -> Commitment:
    r = rng.bytes(RANDOMNESS_BYTES)
    return Commitment(ro.query(_commit_point(message, r)), bytes(message), r)


def verify_commit(ro: ProgrammableOracle, message: bytes, com: bytes, randomness: bytes) -> bool:
    return ro.query(_commit_point(message, randomness)) == com


def find_commitment_collision(
    ro: ProgrammableOracle, attempts: int, rng: np.random.Generator
) -> tuple[Commitment, Commitment] | None:
    """Birthday search for two openings of one ``com`` to different pair values."""
    seen: dict[bytes, Commitment] = {}
    batch = 4096
    done = 0
    while done < attempts:
        size = min(batch, attempts - done)
        codes = rng.integers(4, size=size).tolist()
        pool = rng.bytes(RANDOMNESS_BYTES * size)
        for i, code in enumerate(codes):
            message = bytes((code >> 1, code & 1))
            r = pool[i * RANDOMNESS_BYTES : (i + 1) * RANDOMNESS_BYTES]
            c = Commitment(ro.query(_commit_point(message, r)), message, r)
            other = seen.setdefault(c.com, c)
            if other.message != message:
                return other, c
        done += size
    return None


# ---------------------------------------------------------------------------
# the interactive protocol


@dataclass(frozen=True)
class SigmaProvingKey:
    rho_p: QuantumState


@dataclass(frozen=True)
class SigmaVerificationKey:
    bases: str
    m: np.ndarray

    def __post_init__(self):
        if any(b not in qsim.BASES for b in self.bases):
            raise ValueError(f"bases must be drawn from XYZ, got {self.bases!r}")
        if len(self.m) != len(self.bases):
            raise ValueError("bases and m differ in length")


@dataclass(frozen=True)
class SigmaKeys:
    proving: SigmaProvingKey
    verification: SigmaVerificationKey


@dataclass(frozen=True)
class Opening:
    j: int
    x: int
    z: int
    randomness: bytes

    @property
    def message(self) -> bytes:
        return bytes((self.x, self.z))


@dataclass(frozen=True)
class SigmaProverState:
    """Everything the prover keeps after the first message."""

    x: np.ndarray
    z: np.ndarray
    randomness: tuple[bytes, ...]

    def open(self, subset: Sequence[int]) -> tuple[Opening, ...]:
        return tuple(Opening(j, int(self.x[j]), int(self.z[j]), self.randomness[j]) for j in subset)


def sigma_preprocess(n: int, rng: np.random.Generator) -> SigmaKeys:
    if n < 1:
        raise ValueError("need at least one qubit")
    bases, m, _, _ = _draw_frames(n, rng)
    return SigmaKeys(SigmaProvingKey(qsim.prepare_pauli_product(bases, m)), SigmaVerificationKey(bases, m))


def _commit_outcomes(x, z, ro: ProgrammableOracle, rng: np.random.Generator):
    commitments = [commit(ro, bytes((int(a), int(b))), rng) for a, b in zip(x, z)]
    msg1 = tuple(c.com for c in commitments)
    return msg1, SigmaProverState(x, z, tuple(c.randomness for c in commitments))


def sigma_prove1(
    k_p: SigmaProvingKey,
    instance: Instance,
    ro: ProgrammableOracle,
    rng: np.random.Generator,
    *,
    state: State | None = None,
) -> tuple[tuple[bytes, ...], SigmaProverState]:
    """Teleport the witness (or ``state``) into the key and commit to each outcome pair."""
    if state is None:
        if instance.witness is None:
            raise InstanceError("honest proving needs a witness state")
        state = instance.witness
    n = instance.num_qubits
    if state.num_qubits != n or k_p.rho_p.num_qubits != n:
        raise ValueError("state, key and instance differ in qubit count")
    joint = qsim.tensor_product(state, k_p.rho_p)
    x, z = qsim.sample_bell_outcomes(joint, [(j, n + j) for j in range(n)], rng)
    return _commit_outcomes(x, z, ro, rng)


def sigma_verify1(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    return sample_subset(n, rng)


def sigma_prove2(st: SigmaProverState, subset: Sequence[int]) -> tuple[Opening, ...]:
    return st.open(subset)


def _check_transcript(n: int, output_bytes: int, msg1, subset, msg3) -> tuple[int, ...]:
    if len(msg1) != n or any(not isinstance(c, bytes) or len(c) != output_bytes for c in msg1):
        raise MalformedProofError(f"msg1 must hold {n} commitments of {output_bytes} bytes")
    subset = tuple(int(j) for j in subset)
    if not 1 <= len(subset) <= min(MAX_LOCALITY, n) or tuple(sorted(set(subset))) != subset:
        raise MalformedProofError(f"challenge {subset} is not an admissible subset")
    if subset[0] < 0 or subset[-1] >= n:
        raise MalformedProofError(f"challenge {subset} outside the register")
    if len(msg3) != len(subset):
        raise MalformedProofError("msg3 must open exactly the challenge subset")
    for opening, j in zip(msg3, subset):
        if opening.j != j:
            raise MalformedProofError(f"opening for slot {opening.j} where slot {j} was challenged")
        if opening.x not in (0, 1) or opening.z not in (0, 1):
            raise MalformedProofError(f"opening for slot {j} holds a value other than 0/1")
        if not isinstance(opening.randomness, bytes) or len(opening.randomness) != RANDOMNESS_BYTES:
            raise MalformedProofError(f"opening for slot {j} needs {RANDOMNESS_BYTES} bytes of randomness")
    return subset


def sigma_verify2(
    k_v: SigmaVerificationKey,
    instance: Instance,
    msg1: Sequence[bytes],
    subset: Sequence[int],
    msg3: Sequence[Opening],
    ro: ProgrammableOracle,
    rng: np.random.Generator,
) -> tuple[bool, VerifierTrace]:
    n = instance.num_qubits
    if len(k_v.bases) != n:
        raise ValueError("verification key does not match the instance size")
    subset = _check_transcript(n, ro.output_bytes, msg1, subset, msg3)
    # every opening is checked, in slot order, before any verdict is formed
    checks = [verify_commit(ro, o.message, msg1[o.j], o.randomness) for o in msg3]
    if not all(checks):
        bad = checks.index(False)
        return False, VerifierTrace(None, None, None, verdict=False, reason=f"commitment {subset[bad]} fails to open")
    opened = {o.j: o for o in msg3}

    def outcome(j: int, basis: str) -> int:
        return corrected_bit(basis, int(k_v.m[j]), opened[j].x, opened[j].z)

    return posthoc_decision(instance.hamiltonian, subset, k_v.bases, outcome, rng)


def _strategy_state(plan: ProverStrategy, n: int) -> State:
    # a random-bit prover is the same as teleporting the maximally mixed state
    return plan.state if plan.state is not None else qsim.DensityMatrix.maximally_mixed(n)


def sigma_run(
    instance: Instance, strategy, rng: np.random.Generator, ro: ProgrammableOracle | None = None
) -> tuple[bool, VerifierTrace]:
    """One interactive execution with a prover that teleports the strategy's state honestly."""
    n = instance.num_qubits
    plan = resolve_strategy(strategy, instance)
    ro = ro if ro is not None else ProgrammableOracle(int(rng.integers(2**63)))
    keys = sigma_preprocess(n, rng)
    msg1, st = sigma_prove1(keys.proving, instance, ro, rng, state=_strategy_state(plan, n))
    subset = sigma_verify1(n, rng)
    return sigma_verify2(keys.verification, instance, msg1, subset, sigma_prove2(st, subset), ro, rng)


def sigma_virtual_run(
    instance: Instance, strategy, rng: np.random.Generator, ro: ProgrammableOracle | None = None
) -> tuple[bool, VerifierTrace]:
    """Preprocessing shares Bell pairs; after the openings arrive the verifier
    undoes ``X^x Z^z`` on the challenged qubits only, measures all of its halves
    in fresh random bases and tests the raw outcomes."""
    n = instance.num_qubits
    plan = resolve_strategy(strategy, instance)
    plan = ProverStrategy(plan.state, pad=False)
    ro = ro if ro is not None else ProgrammableOracle(int(rng.integers(2**63)))
    zeros = np.zeros(n, dtype=np.uint8)
    joint, proof, v0 = _virtual_teleport(instance, plan, zeros, zeros, rng)
    msg1, st = _commit_outcomes(proof.x, proof.z, ro, rng)
    subset = sigma_verify1(n, rng)
    msg3 = sigma_prove2(st, subset)
    subset = _check_transcript(n, ro.output_bytes, msg1, subset, msg3)
    if not all(verify_commit(ro, o.message, msg1[o.j], o.randomness) for o in msg3):
        return False, VerifierTrace(None, None, None, verdict=False, reason="commitment fails to open")
    frame_x = np.zeros(n, dtype=np.uint8)
    frame_z = np.zeros(n, dtype=np.uint8)
    for o in msg3:
        frame_x[o.j], frame_z[o.j] = o.x, o.z
    bases = "".join(qsim.BASES[c] for c in rng.integers(3, size=n).tolist())
    measured = _LazyMeasurement(joint, v0, bases, rng, frame=(frame_x, frame_z))
    return posthoc_decision(instance.hamiltonian, subset, bases, lambda j, _b: measured[j], rng)


# ---------------------------------------------------------------------------
# special zero-knowledge simulator


def sigma_simulate(
    k_p: SigmaProvingKey,
    instance: Instance,
    subset: Sequence[int],
    ro: ProgrammableOracle,
    rng: np.random.Generator,
) -> tuple[tuple[bytes, ...], tuple[Opening, ...]]:
    """Transcript for a known challenge without the witness: Bell-measure the
    reduced witness on ``subset`` against the matching key qubits and commit
    to ``(0, 0)`` everywhere else."""
    n = instance.num_qubits
    subset = tuple(int(j) for j in subset)
    if not 1 <= len(subset) <= min(MAX_LOCALITY, n):
        raise ValueError(f"subset {subset} is not admissible")
    k = len(subset)
    joint = qsim.tensor_product(sim_hist(instance, subset), qsim.partial_trace(k_p.rho_p, subset))
    xs, zs = qsim.sample_bell_outcomes(joint, [(i, k + i) for i in range(k)], rng)
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    x[list(subset)] = xs
    z[list(subset)] = zs
    msg1, st = _commit_outcomes(x, z, ro, rng)
    return msg1, st.open(subset)


def honest_opened_law(k_p: SigmaProvingKey, instance: Instance, subset: Sequence[int]) -> np.ndarray:
    """Exact law of the honest prover's opened pairs, indexed ``[x_0, z_0, x_1, ...]`` over ``subset``."""
    if instance.witness is None:
        raise InstanceError("the honest law needs a witness state")
    n = instance.num_qubits
    joint = qsim.tensor_product(instance.witness, k_p.rho_p)
    full = qsim.bell_outcome_probabilities(joint, [(j, n + j) for j in range(n)])
    keep = {2 * j for j in subset} | {2 * j + 1 for j in subset}
    return full.sum(axis=tuple(a for a in range(2 * n) if a not in keep))


def simulated_opened_law(k_p: SigmaProvingKey, instance: Instance, subset: Sequence[int]) -> np.ndarray:
    """Exact law of :func:`sigma_simulate`'s opened pairs, in the layout of :func:`honest_opened_law`."""
    k = len(subset)
    joint = qsim.tensor_product(sim_hist(instance, subset), qsim.partial_trace(k_p.rho_p, subset))
    return qsim.bell_outcome_probabilities(joint, [(i, k + i) for i in range(k)])


# ---------------------------------------------------------------------------
# Fiat-Shamir


def encode_msg1(msg1: Sequence[bytes]) -> bytes:
    """Length-prefixed concatenation, so distinct commitment lists never collide."""
    parts = [len(msg1).to_bytes(4, "big")]
    for com in msg1:
        parts.append(len(com).to_bytes(2, "big"))
        parts.append(com)
    return b"".join(parts)


def challenge_point(instance_id: bytes, msg1: Sequence[bytes]) -> bytes:
    return FS_TAG + len(instance_id).to_bytes(2, "big") + instance_id + encode_msg1(msg1)


def _block_bits(ro: ProgrammableOracle) -> int:
    return min(BLOCK_BITS, ro.output_bits)


def _blocks(value: bytes, width: int) -> list[int]:
    step = width // 8
    return [int.from_bytes(value[i : i + step], "big") for i in range(0, len(value) - step + 1, step)]


def derive_subsets(ro: ProgrammableOracle, point: bytes, n: int, count: int = 1) -> list[tuple[int, ...]]:
    """``count`` uniform admissible subsets read off the oracle at ``point``.

    Each block of the output is an index candidate; candidates at or above the
    largest multiple of the subset count are rejected. Further blocks come from
    ``point || counter`` for ``counter = 1, 2, ...``.
    """
    total = admissible_subset_count(n)
    width = _block_bits(ro)
    limit = ((1 << width) // total) * total
    per_query = ro.output_bits // width
    budget = MAX_CHALLENGE_QUERIES + (count - 1) // per_query
    out: list[tuple[int, ...]] = []
    for counter in range(budget):
        query = point if counter == 0 else point + counter.to_bytes(4, "big")
        for v in _blocks(ro.query(query), width):
            if v < limit:
                out.append(unrank_subset(n, v % total))
                if len(out) == count:
                    return out
    raise ChallengeExhaustedError("challenge derivation exhausted")


def fs_challenge(ro: ProgrammableOracle, instance_id: bytes, msg1: Sequence[bytes], n: int | None = None):
    n = len(msg1) if n is None else n
    return derive_subsets(ro, challenge_point(instance_id, msg1), n)[0]


def programmed_output(ro: ProgrammableOracle, subset: Sequence[int], n: int, rng: np.random.Generator) -> bytes:
    """An oracle value whose first block is accepted and decodes to ``subset``;
    the first block is uniform among such values and the rest is uniform."""
    total = admissible_subset_count(n)
    width = _block_bits(ro)
    limit = ((1 << width) // total) * total
    if limit == 0:
        raise ChallengeExhaustedError("oracle output too short to encode a challenge")
    first = rank_subset(n, subset) + total * int(rng.integers(limit // total, dtype=np.uint64))
    step = width // 8
    return first.to_bytes(step, "big") + rng.bytes(ro.output_bytes - step)


@dataclass(frozen=True)
class FsProof:
    msg1: tuple[bytes, ...]
    opened: tuple[Opening, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "msg1": [c.hex() for c in self.msg1],
                "opened": [{"j": o.j, "x": o.x, "z": o.z, "r": o.randomness.hex()} for o in self.opened],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FsProof":
        try:
            data = json.loads(text)
            msg1 = tuple(bytes.fromhex(c) for c in data["msg1"])
            opened = tuple(
                Opening(int(o["j"]), int(o["x"]), int(o["z"]), bytes.fromhex(o["r"])) for o in data["opened"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedProofError(f"cannot parse proof: {exc}") from exc
        return cls(msg1, opened)


def fs_prove(
    k_p: SigmaProvingKey,
    instance: Instance,
    ro: ProgrammableOracle,
    rng: np.random.Generator,
    *,
    state: State | None = None,
) -> FsProof:
    msg1, st = sigma_prove1(k_p, instance, ro, rng, state=state)
    subset = fs_challenge(ro, instance.digest(), msg1, instance.num_qubits)
    return FsProof(msg1, st.open(subset))


def fs_verify(
    k_v: SigmaVerificationKey,
    instance: Instance,
    proof: FsProof,
    ro: ProgrammableOracle,
    rng: np.random.Generator,
) -> tuple[bool, VerifierTrace]:
    n = instance.num_qubits
    if len(proof.msg1) != n:
        raise MalformedProofError(f"msg1 must hold {n} commitments")
    subset = fs_challenge(ro, instance.digest(), proof.msg1, n)
    if tuple(o.j for o in proof.opened) != subset:
        return False, VerifierTrace(None, None, None, verdict=False, reason="openings do not match the challenge")
    return sigma_verify2(k_v, instance, proof.msg1, subset, proof.opened, ro, rng)


def fs_simulate(
    k_p: SigmaProvingKey, instance: Instance, ro: ProgrammableOracle, rng: np.random.Generator
) -> FsProof:
    """Pick the challenge first, simulate the transcript for it, then
    reprogram the oracle so the hash of the commitments is that challenge."""
    n = instance.num_qubits
    subset = sample_subset(n, rng)
    msg1, msg3 = sigma_simulate(k_p, instance, subset, ro, rng)
    ro.reprogram(challenge_point(instance.digest(), msg1), programmed_output(ro, subset, n, rng))
    return FsProof(msg1, msg3)


def fs_run(
    instance: Instance, strategy, rng: np.random.Generator, ro: ProgrammableOracle | None = None
) -> tuple[bool, VerifierTrace]:
    n = instance.num_qubits
    plan = resolve_strategy(strategy, instance)
    ro = ro if ro is not None else ProgrammableOracle(int(rng.integers(2**63)))
    keys = sigma_preprocess(n, rng)
    proof = fs_prove(keys.proving, instance, ro, rng, state=_strategy_state(plan, n))
    return fs_verify(keys.verification, instance, proof, ro, rng)


# ---------------------------------------------------------------------------
# shared Bell pairs in place of the preprocessing


class HalfAlreadyMeasuredError(RuntimeError):
    pass


class _SharedPairs:
    """Joint register; the prover half is ``p0 .. p0+n-1`` and the verifier half ``v0 .. v0+n-1``."""

    def __init__(self, n: int):
        self.n = n
        self.state = qsim.make_bell_pairs(n)
        self.p0, self.v0 = 0, n
        self.prover_used = False
        self.verifier_key: SigmaVerificationKey | None = None


@dataclass(frozen=True)
class ProverHalf:
    _pairs: _SharedPairs

    def teleport(self, state: State, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        pairs = self._pairs
        if pairs.prover_used:
            raise HalfAlreadyMeasuredError("the prover half was already measured")
        n = pairs.n
        if state.num_qubits != n:
            raise ValueError("state and shared pairs differ in qubit count")
        if not isinstance(state, QuantumState):
            raise TypeError("the shared-pair prover needs a pure state")
        joint = qsim.tensor_product(state, pairs.state)
        x, z = qsim.measure_bell_pairs(joint, [(j, n + pairs.p0 + j) for j in range(n)], rng)
        pairs.state = joint
        pairs.p0 += n
        pairs.v0 += n
        pairs.prover_used = True
        return x, z


@dataclass(frozen=True)
class VerifierHalf:
    _pairs: _SharedPairs

    @property
    def measured(self) -> bool:
        return self._pairs.verifier_key is not None

    def measure(self, rng: np.random.Generator) -> SigmaVerificationKey:
        """Measure every verifier qubit in an independent random Pauli basis."""
        pairs = self._pairs
        if pairs.verifier_key is not None:
            raise HalfAlreadyMeasuredError("the verifier half was already measured")
        bases = "".join(qsim.BASES[c] for c in rng.integers(3, size=pairs.n).tolist())
        m = qsim.measure_paulis(pairs.state, range(pairs.v0, pairs.v0 + pairs.n), bases, rng)
        pairs.verifier_key = SigmaVerificationKey(bases, np.array(m, dtype=np.uint8))
        return pairs.verifier_key


def shared_bell_setup(n: int) -> tuple[ProverHalf, VerifierHalf]:
    pairs = _SharedPairs(n)
    return ProverHalf(pairs), VerifierHalf(pairs)


def shared_bell_state(half: ProverHalf | VerifierHalf) -> QuantumState:
    return half._pairs.state


def shared_bell_prove(
    half: ProverHalf, instance: Instance, ro: ProgrammableOracle, rng: np.random.Generator, *, state: State | None = None
) -> FsProof:
    if state is None:
        if instance.witness is None:
            raise InstanceError("honest proving needs a witness state")
        state = instance.witness
    x, z = half.teleport(state, rng)
    msg1, st = _commit_outcomes(x, z, ro, rng)
    return FsProof(msg1, st.open(fs_challenge(ro, instance.digest(), msg1, instance.num_qubits)))


def shared_bell_verify(
    half: VerifierHalf, instance: Instance, proof: FsProof, ro: ProgrammableOracle, rng: np.random.Generator
) -> tuple[bool, VerifierTrace]:
    """Measure the verifier half now unless that already happened, then verify as usual."""
    k_v = half._pairs.verifier_key if half.measured else half.measure(rng)
    return fs_verify(k_v, instance, proof, ro, rng)


def shared_bell_run(
    instance: Instance, strategy, rng: np.random.Generator, ro: ProgrammableOracle | None = None
) -> tuple[bool, VerifierTrace]:
    n = instance.num_qubits
    plan = resolve_strategy(strategy, instance)
    ro = ro if ro is not None else ProgrammableOracle(int(rng.integers(2**63)))
    prover, verifier = shared_bell_setup(n)
    proof = shared_bell_prove(prover, instance, ro, rng, state=_strategy_state(plan, n))
    return shared_bell_verify(verifier, instance, proof, ro, rng)


# ---------------------------------------------------------------------------
# parallel repetition


@dataclass(frozen=True)
class AmplifiedFsProof:
    proofs: tuple[FsProof, ...]


@dataclass(frozen=True)
class AmplifiedSigma:
    """``reps`` independent preprocessings; accept iff more than ``reps (c + s) / 2`` copies accept.

    The challenges come from one oracle query stream over all first messages
    unless ``per_copy`` is set, in which case copy ``i`` hashes its own
    commitments under a copy-tagged instance id.
    """

    reps: int
    completeness: float
    soundness: float
    per_copy: bool = False

    @property
    def threshold(self) -> float:
        return self.reps * (self.completeness + self.soundness) / 2

    @property
    def error_bound(self) -> float:
        return hoeffding_bound(self.reps, self.completeness, self.soundness)

    def setup(self, n: int, rng: np.random.Generator) -> tuple[SigmaKeys, ...]:
        return tuple(sigma_preprocess(n, rng) for _ in range(self.reps))

    def challenges(self, ro: ProgrammableOracle, instance: Instance, msg1s: Sequence[Sequence[bytes]]):
        n = instance.num_qubits
        instance_id = instance.digest()
        if self.per_copy:
            return [
                fs_challenge(ro, instance_id + b"#" + i.to_bytes(4, "big"), m, n) for i, m in enumerate(msg1s)
            ]
        flat = [c for m in msg1s for c in m]
        return derive_subsets(ro, challenge_point(instance_id, flat), n, len(msg1s))

    def prove(
        self,
        keys: Sequence[SigmaKeys],
        instance: Instance,
        ro: ProgrammableOracle,
        rng: np.random.Generator,
        *,
        state: State | None = None,
    ) -> AmplifiedFsProof:
        firsts = [sigma_prove1(k.proving, instance, ro, rng, state=state) for k in keys]
        subsets = self.challenges(ro, instance, [m for m, _ in firsts])
        return AmplifiedFsProof(tuple(FsProof(m, st.open(s)) for (m, st), s in zip(firsts, subsets)))

    def verify(
        self,
        keys: Sequence[SigmaKeys],
        instance: Instance,
        proof: AmplifiedFsProof,
        ro: ProgrammableOracle,
        rng: np.random.Generator,
    ) -> tuple[bool, int]:
        if len(proof.proofs) != self.reps or len(keys) != self.reps:
            raise MalformedProofError(f"expected {self.reps} proofs")
        subsets = self.challenges(ro, instance, [p.msg1 for p in proof.proofs])
        accepts = 0
        for k, p, s in zip(keys, proof.proofs, subsets):
            if tuple(o.j for o in p.opened) != s:
                continue
            accepts += sigma_verify2(k.verification, instance, p.msg1, s, p.opened, ro, rng)[0]
        return accepts > self.threshold, accepts


def sigma_amplify(reps: int, completeness: float, soundness: float, *, per_copy: bool = False) -> AmplifiedSigma:
    if reps < 1:
        raise ValueError("reps must be positive")
    if not completeness > soundness:
        raise ValueError("amplification needs completeness above soundness")
    return AmplifiedSigma(reps, completeness, soundness, per_copy)

