"""Non-interactive proofs for local-Hamiltonian instances with a quantum proving key.

A trusted setup samples Pauli bases ``W``, bits ``m``, a one-time pad
``(pad_x, pad_z)`` and a subset ``S_V``. The prover receives the product state
``(x)_j U(W_j)|m_j>`` and the pad; the verifier receives ``W``, ``m``, ``S_V``
and the pad restricted to ``S_V``. An honest prover pads its witness with the
Pauli frame ``X^pad_x Z^pad_z`` and Bell-measures it qubit by qubit against the
key. The verifier samples one Hamiltonian term and only tests it when the term
acts on exactly ``S_V`` in exactly the committed bases and a thinning coin
lands tails, so acceptance is ``1 - energy / N'`` with ``N'`` from
:func:`qmanizk.subsets.dilution_factor`.

Also here: the two virtual protocols used to cross-check acceptance laws
(Bell pairs in place of the key), the zero-knowledge simulator, a variant
without the pad (:func:`nizk_prime_setup` and friends), the two-local
``XX``/``ZZ`` proof system (:func:`nip_setup` and friends) and parallel
repetition with a threshold decision (:func:`amplify`).
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import qsim
from .bitstrings import bits_to_hex, hex_to_bits
from .hamiltonian import Instance, InstanceError, LocalHamiltonian, PauliTerm, ground_state, sim_hist
from .qsim import QuantumState, State
from .subsets import MAX_LOCALITY, admissible_subset_count, dilution_factor, sample_subset, uniform_digits


class MalformedProofError(ValueError):
    pass


# ---------------------------------------------------------------------------
# keys, proofs, traces


@dataclass(frozen=True)
class QspProvingKey:
    rho_p: QuantumState
    pad_x: np.ndarray
    pad_z: np.ndarray


@dataclass(frozen=True)
class QspVerificationKey:
    bases: str
    m: np.ndarray
    subset: tuple[int, ...]
    pads: Mapping[int, tuple[int, int]]

    def __post_init__(self):
        n = len(self.bases)
        if any(b not in qsim.BASES for b in self.bases):
            raise ValueError(f"bases must be drawn from XYZ, got {self.bases!r}")
        if len(self.m) != n:
            raise ValueError("bases and m differ in length")
        if not 1 <= len(self.subset) <= min(MAX_LOCALITY, n) or tuple(sorted(set(self.subset))) != self.subset:
            raise ValueError(f"subset {self.subset} is not admissible")
        if self.subset[0] < 0 or self.subset[-1] >= n:
            raise ValueError(f"subset {self.subset} outside the register")
        if set(self.pads) != set(self.subset):
            raise ValueError("pads must cover exactly the subset")

    def to_json(self) -> str:
        return json.dumps(
            {
                "bases": self.bases,
                "m": bits_to_hex(self.m),
                "subset": list(self.subset),
                "pads": {str(j): list(p) for j, p in self.pads.items()},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QspVerificationKey":
        data = json.loads(text)
        n = len(data["bases"])
        pads = {int(j): (int(p[0]), int(p[1])) for j, p in data["pads"].items()}
        return cls(data["bases"], hex_to_bits(data["m"], n), tuple(data["subset"]), pads)


@dataclass(frozen=True)
class QspKeys:
    proving: QspProvingKey
    verification: QspVerificationKey


@dataclass(frozen=True)
class QspProof:
    x: np.ndarray
    z: np.ndarray

    def to_json(self) -> str:
        return json.dumps({"x": bits_to_hex(self.x), "z": bits_to_hex(self.z)})

    @classmethod
    def from_json(cls, text: str, n: int) -> "QspProof":
        try:
            data = json.loads(text)
            return cls(hex_to_bits(data["x"], n), hex_to_bits(data["z"], n))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedProofError(f"cannot parse proof: {exc}") from exc


@dataclass
class VerifierTrace:
    term: int | None
    consistent: bool | None
    coin: str | None
    corrected_bits: dict[int, int] = field(default_factory=dict)
    verdict: bool = True
    reason: str = ""


def _check_proof(proof: QspProof, n: int) -> None:
    for name, bits in (("x", proof.x), ("z", proof.z)):
        if not isinstance(bits, np.ndarray) or bits.shape != (n,) or bits.dtype.kind not in "ub":
            raise MalformedProofError(f"proof.{name} must be {n} unsigned bits")
        if n and max(bits.tolist()) > 1:
            raise MalformedProofError(f"proof.{name} holds a value other than 0/1")


# ---------------------------------------------------------------------------
# the post-hoc decision shared by every verifier in the package


def sample_term(h: LocalHamiltonian, rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    for i, term in enumerate(h.terms):
        acc += term.weight
        if u < acc:
            return i
    return len(h.terms) - 1


def corrected_bit(basis: str, m: int, frame_x: int, frame_z: int) -> int:
    """Outcome a ``basis`` measurement would give after undoing ``X^frame_x Z^frame_z``:
    ``X`` flips ``Z`` outcomes, ``Z`` flips ``X`` outcomes, both flip ``Y``."""
    if basis == "Z":
        return m ^ frame_x
    if basis == "X":
        return m ^ frame_z
    return m ^ frame_x ^ frame_z


def parity_accepts(bits, sign: int) -> bool:
    """``(-1)**(xor of bits) == -sign``."""
    parity = 0
    for b in bits:
        parity ^= int(b)
    return parity == (1 if sign == 1 else 0)


def posthoc_decision(
    h: LocalHamiltonian,
    subset: Sequence[int],
    bases: Mapping[int, str] | str,
    outcome: Callable[[int, str], int],
    rng: np.random.Generator,
) -> tuple[bool, VerifierTrace]:
    """Sample a term; test it only if it matches ``subset``/``bases`` and the
    thinning coin (tails with probability ``3**(|S| - 5)``) lands tails.

    ``outcome(j, W_j)`` returns the corrected measurement bit on qubit ``j``.
    """
    i = sample_term(h, rng)
    term = h.terms[i]
    subset = tuple(subset)
    if term.support != subset or any(bases[q] != b for q, b in term.paulis):
        return True, VerifierTrace(i, False, None, verdict=True, reason="inconsistent term")
    if rng.integers(3 ** (MAX_LOCALITY - len(subset))):
        return True, VerifierTrace(i, True, "heads", verdict=True, reason="coin heads")
    bits = {q: outcome(q, b) for q, b in term.paulis}
    verdict = parity_accepts(bits.values(), term.sign)
    return verdict, VerifierTrace(i, True, "tails", bits, verdict, "parity test")


# ---------------------------------------------------------------------------
# the padded protocol


def _draw_frames(n: int, rng: np.random.Generator):
    """Independent uniform ``(W_j, m_j, pad_x_j, pad_z_j)`` per qubit from one draw of 24 codes."""
    codes = uniform_digits(rng, 24, n)
    bases = "".join([qsim.BASES[c % 3] for c in codes])
    m = np.array([(c // 3) & 1 for c in codes], dtype=np.uint8)
    pad_x = np.array([(c // 6) & 1 for c in codes], dtype=np.uint8)
    pad_z = np.array([c // 12 for c in codes], dtype=np.uint8)
    return bases, m, pad_x, pad_z


def setup(n: int, rng: np.random.Generator) -> QspKeys:
    if n < 1:
        raise ValueError("need at least one qubit")
    bases, m, pad_x, pad_z = _draw_frames(n, rng)
    subset = sample_subset(n, rng)
    proving = QspProvingKey(qsim.prepare_pauli_product(bases, m), pad_x, pad_z)
    pads = {j: (int(pad_x[j]), int(pad_z[j])) for j in subset}
    return QspKeys(proving, QspVerificationKey(bases, m, subset, pads))


def teleport(state: State, rho_p: QuantumState, rng: np.random.Generator) -> QspProof:
    """Bell-measure qubit ``j`` of ``state`` against qubit ``j`` of ``rho_p``."""
    n = state.num_qubits
    if rho_p.num_qubits != n:
        raise ValueError("state and key differ in qubit count")
    joint = qsim.tensor_product(state, rho_p)
    x, z = qsim.sample_bell_outcomes(joint, [(j, n + j) for j in range(n)], rng)
    return QspProof(x, z)


def prove_state(k_p: QspProvingKey, state: State, rng: np.random.Generator, *, pad: bool = True) -> QspProof:
    if pad:
        state = qsim.apply_pauli_frame(state, k_p.pad_x, k_p.pad_z)
    return teleport(state, k_p.rho_p, rng)


def prove(k_p: QspProvingKey, instance: Instance, rng: np.random.Generator) -> QspProof:
    if instance.witness is None:
        raise InstanceError("honest proving needs a witness state")
    return prove_state(k_p, instance.witness, rng)


@functools.lru_cache(maxsize=32)
def _ground(h: LocalHamiltonian) -> QuantumState:
    return ground_state(h)[1]


def cheat_prove_optimal(k_p: QspProvingKey, instance: Instance, rng: np.random.Generator) -> QspProof:
    """Teleport a ground state of the instance: the best a cheating prover can do."""
    return prove_state(k_p, _ground(instance.hamiltonian), rng)


def cheat_prove_random(n: int, rng: np.random.Generator) -> QspProof:
    codes = uniform_digits(rng, 4, n)
    return QspProof(np.array([c >> 1 for c in codes], dtype=np.uint8), np.array([c & 1 for c in codes], dtype=np.uint8))


def _pad_frame(proof: QspProof, pads: Mapping[int, tuple[int, int]], j: int) -> tuple[int, int]:
    pad_x, pad_z = pads[j]
    return int(proof.x[j]) ^ pad_x, int(proof.z[j]) ^ pad_z


def verify(
    k_v: QspVerificationKey, instance: Instance, proof: QspProof, rng: np.random.Generator
) -> tuple[bool, VerifierTrace]:
    n = instance.num_qubits
    if len(k_v.bases) != n:
        raise ValueError("verification key does not match the instance size")
    _check_proof(proof, n)

    def outcome(j: int, basis: str) -> int:
        fx, fz = _pad_frame(proof, k_v.pads, j)
        return corrected_bit(basis, int(k_v.m[j]), fx, fz)

    return posthoc_decision(instance.hamiltonian, k_v.subset, k_v.bases, outcome, rng)


def term_rejection(state: State, term: PauliTerm) -> float:
    """``Tr(rho (I + s P) / 2)`` from the outcome law of measuring the support."""
    support = list(term.support)
    rotated = state
    for q, b in term.paulis:
        if b != "Z":
            rotated = qsim.apply_gate(rotated, qsim.basis_change(b).conj().T, [q])
    probs = _marginal_z(rotated, support)
    reject = 0.0
    for index, p in np.ndenumerate(probs):
        if not parity_accepts(index, term.sign):
            reject += p
    return float(reject)


def _marginal_z(state: State, qubits: Sequence[int]) -> np.ndarray:
    n = state.num_qubits
    if isinstance(state, QuantumState):
        diag = state.probabilities()
    else:
        diag = np.real(np.diagonal(state.matrix))
    t = diag.reshape((2,) * n)
    order = [n - 1 - q for q in qubits]
    rest = [ax for ax in range(n) if ax not in order]
    return np.transpose(t, order + rest).reshape((2,) * len(qubits) + (-1,)).sum(axis=-1)


def energy_test(state: QuantumState, h: LocalHamiltonian, rng: np.random.Generator) -> bool:
    """Measure one sampled term's support in its Pauli bases and run the parity test."""
    term = h.terms[sample_term(h, rng)]
    work = state.copy()
    bits = [qsim.measure_pauli(work, q, b, rng) for q, b in term.paulis]
    return parity_accepts(bits, term.sign)


def energy_test_acceptance(state: State, h: LocalHamiltonian) -> float:
    """Exact acceptance of :func:`energy_test` by enumerating measurement outcomes."""
    return 1.0 - sum(t.weight * term_rejection(state, t) for t in h.terms)


def acceptance_probability_exact(state: State, instance: Instance) -> float:
    """Acceptance averaged over setup and verifier coins when ``state`` is teleported.

    A term on ``k`` qubits is tested with probability
    ``(1/#subsets) * 3**-k * 3**(k-5)``; the verification key is integrated out.
    """
    n = instance.num_qubits
    if n > 10:
        raise InstanceError("exact acceptance limited to n <= 10")
    count = admissible_subset_count(n)
    reject = 0.0
    for term in instance.hamiltonian.terms:
        k = len(term.paulis)
        tested = Fraction(1, count) * Fraction(1, 3**k) * Fraction(1, 3 ** (MAX_LOCALITY - k))
        reject += term.weight * float(tested) * term_rejection(state, term)
    return 1.0 - reject


def acceptance_law(energy: float, n: int) -> float:
    return 1.0 - energy / dilution_factor(n)


# ---------------------------------------------------------------------------
# zero-knowledge simulator


def _simulated_slot_probabilities(k_v: QspVerificationKey, instance: Instance) -> np.ndarray:
    subset = list(k_v.subset)
    reduced = sim_hist(instance, subset)
    pad_x = [k_v.pads[j][0] for j in subset]
    pad_z = [k_v.pads[j][1] for j in subset]
    padded = qsim.apply_pauli_frame(reduced, pad_x, pad_z)
    partner = qsim.prepare_pauli_product([k_v.bases[j] for j in subset], [k_v.m[j] for j in subset])
    k = len(subset)
    joint = qsim.tensor_product(padded, partner)
    return qsim.bell_outcome_probabilities(joint, [(i, k + i) for i in range(k)])


def simulate(k_v: QspVerificationKey, instance: Instance, rng: np.random.Generator) -> QspProof:
    """Proof drawn from the verification key and the reduced witness on ``S_V`` only.

    Slots in ``S_V`` follow the Bell law of the padded reduced state against
    ``U(W_j)|m_j>``; every other slot is uniform.
    """
    n = instance.num_qubits
    x = rng.integers(2, size=n, dtype=np.uint8)
    z = rng.integers(2, size=n, dtype=np.uint8)
    probs = _simulated_slot_probabilities(k_v, instance).reshape(-1)
    k = len(k_v.subset)
    index = qsim._sample(probs, rng)
    for i, j in enumerate(k_v.subset):
        x[j] = (index >> (2 * (k - 1 - i) + 1)) & 1
        z[j] = (index >> (2 * (k - 1 - i))) & 1
    return QspProof(x, z)


def honest_distribution(k_v: QspVerificationKey, rho_p: QuantumState, state: State) -> dict:
    """Exact law of the padded proof given the verifier's view.

    The pad off ``S_V`` is private to the prover, so it is averaged out; the
    pad on ``S_V`` is the one in ``k_v``.
    """
    n = state.num_qubits
    off = [j for j in range(n) if j not in k_v.pads]
    pairs = [(j, n + j) for j in range(n)]
    table: dict = {}
    for code in range(4 ** len(off)):
        pad_x = np.zeros(n, dtype=np.uint8)
        pad_z = np.zeros(n, dtype=np.uint8)
        for j, (px, pz) in k_v.pads.items():
            pad_x[j], pad_z[j] = px, pz
        for i, j in enumerate(off):
            pad_x[j], pad_z[j] = (code >> (2 * i)) & 1, (code >> (2 * i + 1)) & 1
        joint = qsim.tensor_product(qsim.apply_pauli_frame(state, pad_x, pad_z), rho_p)
        for key, p in qsim.bell_outcome_distribution(joint, pairs).items():
            table[key] = table.get(key, 0.0) + p / 4 ** len(off)
    return table


def simulate_distribution(k_v: QspVerificationKey, instance: Instance) -> dict:
    """Exact law of :func:`simulate` as ``{(x_bits, z_bits): probability}``."""
    n = instance.num_qubits
    slot = _simulated_slot_probabilities(k_v, instance)
    uniform = 4.0 ** -(n - len(k_v.subset))
    table = {}
    for xs in np.ndindex(*(2,) * n):
        for zs in np.ndindex(*(2,) * n):
            index = tuple(v for j in k_v.subset for v in (xs[j], zs[j]))
            table[(xs, zs)] = float(slot[index]) * uniform
    return table


# ---------------------------------------------------------------------------
# prover strategies and the virtual protocols


@dataclass(frozen=True)
class ProverStrategy:
    """State to teleport (``None``: send uniformly random bits) and whether to pad it."""

    state: QuantumState | None
    pad: bool = True


def resolve_strategy(strategy: str | ProverStrategy | QuantumState, instance: Instance) -> ProverStrategy:
    if isinstance(strategy, ProverStrategy):
        return strategy
    if isinstance(strategy, QuantumState):
        return ProverStrategy(strategy)
    if strategy == "honest":
        if instance.witness is None:
            raise InstanceError("honest strategy needs a witness state")
        return ProverStrategy(instance.witness)
    if strategy == "ground":
        return ProverStrategy(_ground(instance.hamiltonian))
    if strategy == "random":
        return ProverStrategy(None)
    raise ValueError(f"unknown prover strategy {strategy!r}")


def original_run(instance: Instance, strategy, rng: np.random.Generator) -> tuple[bool, VerifierTrace]:
    plan = resolve_strategy(strategy, instance)
    keys = setup(instance.num_qubits, rng)
    if plan.state is None:
        proof = cheat_prove_random(instance.num_qubits, rng)
    else:
        proof = prove_state(keys.proving, plan.state, rng, pad=plan.pad)
    return verify(keys.verification, instance, proof, rng)


def _virtual_teleport(instance: Instance, plan: ProverStrategy, pad_x, pad_z, rng):
    """Registers: C = witness ``0..n-1``, P = ``n..2n-1``, V = ``2n..3n-1``;
    P and V start as Bell pairs. Returns a function giving the post-measurement
    joint state, the proof bits and the first verifier qubit.

    The outcome is drawn from the Born law right away; the collapsed state is
    only built if the verifier ends up measuring its halves.
    """
    n = instance.num_qubits
    pairs = qsim.make_bell_pairs(n)
    if plan.state is None:
        return lambda: pairs, cheat_prove_random(n, rng), n
    state = qsim.apply_pauli_frame(plan.state, pad_x, pad_z) if plan.pad else plan.state
    joint = qsim.tensor_product(state, pairs)
    bell = [(j, n + j) for j in range(n)]
    x, z = qsim.sample_bell_outcomes(joint, bell, rng)
    return lambda: qsim.project_bell_pairs(joint, bell, x, z), QspProof(x, z), 2 * n


def _virtual_keys(n: int, rng: np.random.Generator):
    bases, _, pad_x, pad_z = _draw_frames(n, rng)
    return sample_subset(n, rng), pad_x, pad_z, bases


class _LazyMeasurement:
    """The verifier's Pauli measurement of its halves, done on first use.

    Only a tested term reads the outcomes, and an unread measurement cannot
    change the verdict, so skipping it leaves the acceptance law intact.
    ``frame`` is undone on the halves before measuring.
    """

    def __init__(self, joint: Callable[[], QuantumState], v0: int, bases: str, rng: np.random.Generator, frame=None):
        self._args = (joint, v0, bases, rng, frame)
        self._bits = None

    def __getitem__(self, j: int) -> int:
        if self._bits is None:
            joint, v0, bases, rng, frame = self._args
            n = len(bases)
            state = joint()
            if frame is not None:
                state = qsim.apply_pauli_frame(state, frame[0], frame[1], qubits=range(v0, v0 + n))
            self._bits = qsim.measure_paulis(state, range(v0, v0 + n), bases, rng, collapse=False)
        return int(self._bits[j])


def virtual1_run(instance: Instance, strategy, rng: np.random.Generator) -> tuple[bool, VerifierTrace]:
    """Setup hands out Bell-pair halves; the verifier measures its halves in
    random bases after receiving the proof, then verifies as usual."""
    n = instance.num_qubits
    plan = resolve_strategy(strategy, instance)
    subset, pad_x, pad_z, bases = _virtual_keys(n, rng)
    joint, proof, v0 = _virtual_teleport(instance, plan, pad_x, pad_z, rng)
    measured = _LazyMeasurement(joint, v0, bases, rng)
    pads = {j: (int(pad_x[j]), int(pad_z[j])) for j in subset}

    def outcome(j: int, basis: str) -> int:
        fx, fz = _pad_frame(proof, pads, j)
        return corrected_bit(basis, measured[j], fx, fz)

    return posthoc_decision(instance.hamiltonian, subset, bases, outcome, rng)


def virtual2_run(instance: Instance, strategy, rng: np.random.Generator) -> tuple[bool, VerifierTrace]:
    """As :func:`virtual1_run`, but the verifier undoes the combined frame
    ``X^(x^pad_x) Z^(z^pad_z)`` on its halves before measuring; no classical correction."""
    n = instance.num_qubits
    plan = resolve_strategy(strategy, instance)
    subset, pad_x, pad_z, bases = _virtual_keys(n, rng)
    joint, proof, v0 = _virtual_teleport(instance, plan, pad_x, pad_z, rng)
    measured = _LazyMeasurement(joint, v0, bases, rng, frame=(proof.x ^ pad_x, proof.z ^ pad_z))
    return posthoc_decision(instance.hamiltonian, subset, bases, lambda j, _b: measured[j], rng)


# ---------------------------------------------------------------------------
# variant without the pad


@dataclass(frozen=True)
class NizkPrimeProvingKey:
    rho_p: QuantumState


@dataclass(frozen=True)
class NizkPrimeVerificationKey:
    subset: tuple[int, ...]
    bases: Mapping[int, str]
    m: Mapping[int, int]


@dataclass(frozen=True)
class NizkPrimeKeys:
    proving: NizkPrimeProvingKey
    verification: NizkPrimeVerificationKey


def nizk_prime_setup(n: int, rng: np.random.Generator) -> NizkPrimeKeys:
    bases = "".join(qsim.BASES[i] for i in rng.integers(3, size=n))
    m = rng.integers(2, size=n, dtype=np.uint8)
    subset = sample_subset(n, rng)
    k_v = NizkPrimeVerificationKey(subset, {j: bases[j] for j in subset}, {j: int(m[j]) for j in subset})
    return NizkPrimeKeys(NizkPrimeProvingKey(qsim.prepare_pauli_product(bases, m)), k_v)


def nizk_prime_prove(k_p: NizkPrimeProvingKey, instance: Instance, rng: np.random.Generator) -> QspProof:
    if instance.witness is None:
        raise InstanceError("honest proving needs a witness state")
    return teleport(instance.witness, k_p.rho_p, rng)


def nizk_prime_verify(
    k_v: NizkPrimeVerificationKey, instance: Instance, proof: QspProof, rng: np.random.Generator
) -> tuple[bool, VerifierTrace]:
    _check_proof(proof, instance.num_qubits)

    def outcome(j: int, basis: str) -> int:
        return corrected_bit(basis, k_v.m[j], int(proof.x[j]), int(proof.z[j]))

    return posthoc_decision(instance.hamiltonian, k_v.subset, k_v.bases, outcome, rng)


def _teleported_proof(rho_p: QuantumState, plan: ProverStrategy, n: int, rng: np.random.Generator) -> QspProof:
    return cheat_prove_random(n, rng) if plan.state is None else teleport(plan.state, rho_p, rng)


def prime_run(instance: Instance, strategy, rng: np.random.Generator) -> tuple[bool, VerifierTrace]:
    plan = resolve_strategy(strategy, instance)
    keys = nizk_prime_setup(instance.num_qubits, rng)
    proof = _teleported_proof(keys.proving.rho_p, plan, instance.num_qubits, rng)
    return nizk_prime_verify(keys.verification, instance, proof, rng)


# ---------------------------------------------------------------------------
# two-local XX/ZZ proof system


@dataclass(frozen=True)
class NipProvingKey:
    rho_p: QuantumState


@dataclass(frozen=True)
class NipVerificationKey:
    h: int
    m: np.ndarray


@dataclass(frozen=True)
class NipKeys:
    proving: NipProvingKey
    verification: NipVerificationKey


@dataclass(frozen=True)
class XXZZPair:
    a: int
    b: int
    weight: float
    sign: int


@functools.lru_cache(maxsize=32)
def xxzz_pairs(h: LocalHamiltonian) -> tuple[XXZZPair, ...]:
    """Read ``sum p_ab/2 [(I + s XX)/2 + (I + s ZZ)/2]`` back into pairs.

    Raises :class:`InstanceError` for hamiltonians not of that form.
    """
    found: dict[tuple[int, int], dict[str, PauliTerm]] = {}
    for term in h.terms:
        bases = set(b for _, b in term.paulis)
        if len(term.paulis) != 2 or len(bases) != 1 or "Y" in bases:
            raise InstanceError("hamiltonian is not in paired XX/ZZ form")
        slot = found.setdefault(term.support, {})
        kind = bases.pop()
        if kind in slot:
            raise InstanceError(f"duplicate {kind}{kind} term on {term.support}")
        slot[kind] = term
    pairs = []
    for (a, b), slot in sorted(found.items()):
        if set(slot) != {"X", "Z"}:
            raise InstanceError(f"pair {(a, b)} lacks a matching XX or ZZ term")
        xx, zz = slot["X"], slot["Z"]
        if xx.sign != zz.sign or not math.isclose(xx.weight, zz.weight, rel_tol=1e-9, abs_tol=1e-12):
            raise InstanceError(f"pair {(a, b)} has unequal XX and ZZ terms")
        pairs.append(XXZZPair(a, b, xx.weight + zz.weight, xx.sign))
    return tuple(pairs)


def nip_setup(n: int, rng: np.random.Generator) -> NipKeys:
    h = int(rng.integers(2))
    m = rng.integers(2, size=n, dtype=np.uint8)
    column = qsim.HADAMARD if h else qsim.IDENTITY
    rho_p = qsim.product_state(column[:, int(b)] for b in m)
    return NipKeys(NipProvingKey(rho_p), NipVerificationKey(h, m))


def nip_prove(k_p: NipProvingKey, instance: Instance, rng: np.random.Generator) -> QspProof:
    if instance.witness is None:
        raise InstanceError("honest proving needs a witness state")
    return teleport(instance.witness, k_p.rho_p, rng)


def nip_verify(
    k_v: NipVerificationKey, instance: Instance, proof: QspProof, rng: np.random.Generator
) -> tuple[bool, VerifierTrace]:
    """Sample a pair with probability ``p_ab``; ``h = 1`` tests ``XX``, ``h = 0`` tests ``ZZ``."""
    _check_proof(proof, instance.num_qubits)
    pairs = xxzz_pairs(instance.hamiltonian)
    u, acc, chosen = rng.random(), 0.0, len(pairs) - 1
    for i, pair in enumerate(pairs):
        acc += pair.weight
        if u < acc:
            chosen = i
            break
    pair = pairs[chosen]
    frame = proof.z if k_v.h else proof.x
    bits = {j: int(k_v.m[j]) ^ int(frame[j]) for j in (pair.a, pair.b)}
    verdict = parity_accepts(bits.values(), pair.sign)
    return verdict, VerifierTrace(chosen, None, None, bits, verdict, "XX test" if k_v.h else "ZZ test")


def nip_cheat_prove(k_p: NipProvingKey, instance: Instance, rng: np.random.Generator) -> QspProof:
    return teleport(_ground(instance.hamiltonian), k_p.rho_p, rng)


def nip_run(instance: Instance, strategy, rng: np.random.Generator) -> tuple[bool, VerifierTrace]:
    plan = resolve_strategy(strategy, instance)
    xxzz_pairs(instance.hamiltonian)
    keys = nip_setup(instance.num_qubits, rng)
    proof = _teleported_proof(keys.proving.rho_p, plan, instance.num_qubits, rng)
    return nip_verify(keys.verification, instance, proof, rng)


# ---------------------------------------------------------------------------
# parallel repetition


@dataclass(frozen=True)
class ProofSystem:
    setup: Callable
    prove: Callable
    verify: Callable


QSP = ProofSystem(setup, prove, verify)
NIZK_PRIME = ProofSystem(nizk_prime_setup, nizk_prime_prove, nizk_prime_verify)
NIP = ProofSystem(nip_setup, nip_prove, nip_verify)


@dataclass(frozen=True)
class AmplifiedKeys:
    proving: tuple
    verification: tuple


def hoeffding_bound(reps: int, completeness: float, soundness: float) -> float:
    """Upper bound on either error of the threshold test: ``exp(-reps (c - s)**2 / 2)``."""
    return math.exp(-reps * (completeness - soundness) ** 2 / 2)


def hoeffding_reps(completeness: float, soundness: float, error: float) -> int:
    """Fewest repetitions with :func:`hoeffding_bound` at most ``error``."""
    gap = completeness - soundness
    return math.ceil(2 * math.log(1 / error) / gap**2)


@dataclass(frozen=True)
class Amplified:
    """``reps`` independent copies; accept iff more than ``reps (c + s) / 2`` accept."""

    base: ProofSystem
    reps: int
    completeness: float
    soundness: float

    @property
    def threshold(self) -> float:
        return self.reps * (self.completeness + self.soundness) / 2

    def setup(self, n: int, rng: np.random.Generator) -> AmplifiedKeys:
        keys = [self.base.setup(n, rng) for _ in range(self.reps)]
        return AmplifiedKeys(tuple(k.proving for k in keys), tuple(k.verification for k in keys))

    def prove(self, proving: Sequence, instance: Instance, rng: np.random.Generator, prover: Callable | None = None):
        prover = prover or self.base.prove
        return tuple(prover(k, instance, rng) for k in proving)

    def verify(self, verification: Sequence, instance: Instance, proofs: Sequence, rng: np.random.Generator) -> tuple[bool, int]:
        if len(proofs) != self.reps or len(verification) != self.reps:
            raise MalformedProofError(f"expected {self.reps} proofs")
        accepts = sum(self.base.verify(k, instance, p, rng)[0] for k, p in zip(verification, proofs))
        return accepts > self.threshold, accepts


def amplify(system: ProofSystem, reps: int, completeness: float, soundness: float) -> Amplified:
    if reps < 1:
        raise ValueError("reps must be positive")
    if not completeness > soundness:
        raise ValueError("amplification needs completeness above soundness")
    return Amplified(system, reps, completeness, soundness)
