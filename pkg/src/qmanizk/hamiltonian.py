"""Local Hamiltonians in the normalized form ``H = sum_i p_i (I + s_i P_i) / 2``.

Each term carries a probability weight ``p_i > 0`` (weights sum to 1), a sign
``s_i`` in ``{+1, -1}`` and a Pauli string ``P_i`` acting on at most five
qubits. Energies therefore lie in ``[0, 1]``.

Besides hand-built instances, a toy circuit can be turned into an instance
through the unary-clock history-state construction: clock qubits come first
(``0 .. T-1``, time ``t`` sets qubits ``0 .. t-1``), data qubits follow.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import qsim
from .qsim import DensityMatrix, QuantumState, State
from .subsets import MAX_LOCALITY

WEIGHT_TOL = 1e-9
BETA_GUARD = 1e-6
MAX_DENSE_QUBITS = 12


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class PauliTerm:
    weight: float
    sign: int
    paulis: tuple[tuple[int, str], ...]

    @classmethod
    def of(cls, weight: float, sign: int, paulis: Mapping[int, str]) -> "PauliTerm":
        return cls(float(weight), int(sign), tuple(sorted((int(q), str(b)) for q, b in paulis.items())))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.paulis)

    @property
    def bases(self) -> dict[int, str]:
        return dict(self.paulis)

    def masks(self) -> tuple[int, int, int]:
        """``(x_mask, z_mask, y_count)`` with ``P = i**y_count X^x_mask Z^z_mask``."""
        xmask = zmask = ny = 0
        for q, b in self.paulis:
            if b in ("X", "Y"):
                xmask |= 1 << q
            if b in ("Z", "Y"):
                zmask |= 1 << q
            ny += b == "Y"
        return xmask, zmask, ny


@dataclass(frozen=True)
class LocalHamiltonian:
    num_qubits: int
    terms: tuple[PauliTerm, ...]
    locality: int = MAX_LOCALITY

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not 1 <= self.locality <= MAX_LOCALITY:
            raise InstanceError(f"locality {self.locality} outside 1..{MAX_LOCALITY}")
        if not self.terms:
            raise InstanceError("hamiltonian has no terms")
        for i, term in enumerate(self.terms):
            if term.weight <= 0:
                raise InstanceError(f"terms[{i}].p must be positive")
            if term.sign not in (1, -1):
                raise InstanceError(f"terms[{i}].s must be +1 or -1")
            if not term.paulis:
                raise InstanceError(f"terms[{i}].paulis is empty")
            if len(term.paulis) > self.locality:
                raise InstanceError(f"terms[{i}] acts on {len(term.paulis)} qubits, locality is {self.locality}")
            for q, b in term.paulis:
                if not 0 <= q < self.num_qubits:
                    raise InstanceError(f"terms[{i}].paulis: qubit {q} outside 0..{self.num_qubits - 1}")
                if b not in qsim.BASES:
                    raise InstanceError(f"terms[{i}].paulis: unknown Pauli {b!r}")
        total = sum(t.weight for t in self.terms)
        if abs(total - 1) > WEIGHT_TOL:
            raise InstanceError(f"weights must sum to 1 (got {total!r})")

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    def matrix(self) -> np.ndarray:
        if self.num_qubits > MAX_DENSE_QUBITS:
            raise InstanceError(f"dense matrix needs n <= {MAX_DENSE_QUBITS}")
        dim = 1 << self.num_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for term in self.terms:
            out += term.weight * (np.eye(dim) + term.sign * pauli_matrix(term, self.num_qubits)) / 2
        return out


@dataclass(frozen=True)
class Instance:
    """A promise-problem instance with thresholds ``alpha < beta``.

    ``witness`` is the state an honest prover teleports (the history state for
    circuit instances); no-instances usually carry none.
    """

    hamiltonian: LocalHamiltonian
    alpha: float
    beta: float
    label: str
    witness: QuantumState | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.label not in ("yes", "no"):
            raise InstanceError(f"label must be 'yes' or 'no', got {self.label!r}")
        if not 0 <= self.alpha < self.beta <= 1:
            raise InstanceError(f"need 0 <= alpha < beta <= 1, got alpha={self.alpha}, beta={self.beta}")
        if self.witness is not None and self.witness.num_qubits != self.hamiltonian.num_qubits:
            raise InstanceError("witness size differs from the hamiltonian")

    @property
    def num_qubits(self) -> int:
        return self.hamiltonian.num_qubits

    def digest(self) -> bytes:
        """Stable identifier of the public part (hamiltonian and thresholds)."""
        return self._digest

    @functools.cached_property
    def _digest(self) -> bytes:
        public = _instance_dict(self, include_witness=False)
        return hashlib.sha256(json.dumps(public, sort_keys=True).encode()).digest()


def pauli_matrix(term: PauliTerm, n: int) -> np.ndarray:
    bases = term.bases
    out = np.ones((1, 1), dtype=complex)
    for q in range(n - 1, -1, -1):
        out = np.kron(out, qsim.PAULIS[bases.get(q, "I")])
    return out


def pauli_expectation(state: State, term: PauliTerm) -> float:
    n = state.num_qubits
    xmask, zmask, ny = term.masks()
    idx = np.arange(1 << n)
    sign = 1 - 2 * (np.bitwise_count(idx & zmask) & 1).astype(np.int8)
    phase = 1j**ny
    if isinstance(state, QuantumState):
        psi = state.amplitudes
        value = phase * np.vdot(psi[idx ^ xmask], sign * psi)
    else:
        value = phase * np.sum(state.matrix[idx, idx ^ xmask] * sign)
    return float(value.real)


def energy(state: State, h: LocalHamiltonian) -> float:
    if state.num_qubits != h.num_qubits:
        raise InstanceError("state and hamiltonian differ in qubit count")
    return float(sum(t.weight * (1 + t.sign * pauli_expectation(state, t)) / 2 for t in h.terms))


def ground_state(h: LocalHamiltonian) -> tuple[float, QuantumState]:
    values, vectors = np.linalg.eigh(h.matrix())
    return float(values[0]), QuantumState(vectors[:, 0])


def spectrum(h: LocalHamiltonian) -> np.ndarray:
    return np.linalg.eigvalsh(h.matrix())


def sim_hist(instance: Instance, subset: Sequence[int]) -> DensityMatrix:
    """Reduced witness state on ``subset``."""
    if instance.witness is None:
        raise InstanceError("instance carries no witness state")
    subset = sorted(set(subset))
    if not 1 <= len(subset) <= MAX_LOCALITY:
        raise InstanceError(f"subset size {len(subset)} outside 1..{MAX_LOCALITY}")
    return qsim.partial_trace(instance.witness, subset)


# ---------------------------------------------------------------------------
# toy circuits and the clock construction

_GATES = {
    "H": qsim.HADAMARD,
    "T": qsim.T_GATE,
    "X": qsim.PAULI_X,
    "Z": qsim.PAULI_Z,
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}
MAX_CIRCUIT_GATES = 6


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]

    def matrix(self) -> np.ndarray:
        return _GATES[self.name]


@dataclass(frozen=True)
class ToyCircuit:
    """Gates from {CNOT, T, H, X, Z}; CNOT qubits are ``(control, target)``.

    ``ancilla`` lists data qubits that must start in ``|0>``.
    """

    num_qubits: int
    gates: tuple[Gate, ...]
    ancilla: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if len(self.gates) > MAX_CIRCUIT_GATES:
            raise InstanceError(f"circuit has {len(self.gates)} gates, limit is {MAX_CIRCUIT_GATES}")
        for g in self.gates:
            if g.name not in _GATES:
                raise InstanceError(f"unsupported gate {g.name!r}")
            arity = 2 if g.name == "CNOT" else 1
            if len(g.qubits) != arity or len(set(g.qubits)) != arity:
                raise InstanceError(f"gate {g.name} needs {arity} distinct qubits")
            if any(not 0 <= q < self.num_qubits for q in g.qubits):
                raise InstanceError(f"gate {g.name} acts outside the register")

    @classmethod
    def parse(cls, text: str, num_qubits: int | None = None) -> "ToyCircuit":
        """Parse ``"H:0,CNOT:0-1"``."""
        gates = []
        for item in filter(None, (s.strip() for s in text.split(","))):
            name, _, targets = item.partition(":")
            qubits = tuple(int(q) for q in targets.split("-"))
            gates.append(Gate(name.upper(), qubits))
        if num_qubits is None:
            num_qubits = 1 + max((q for g in gates for q in g.qubits), default=0)
        return cls(num_qubits, tuple(gates))

    @property
    def depth(self) -> int:
        return len(self.gates)


def history_state(circuit: ToyCircuit, witness: QuantumState) -> QuantumState:
    steps = circuit.depth
    n = circuit.num_qubits
    if witness.num_qubits != n:
        raise InstanceError("witness size differs from the circuit register")
    if steps + n > MAX_DENSE_QUBITS:
        raise InstanceError(f"history state needs T + n <= {MAX_DENSE_QUBITS}")
    out = np.zeros(1 << (steps + n), dtype=complex)
    data: State = witness
    for t in range(steps + 1):
        if t:
            gate = circuit.gates[t - 1]
            data = qsim.apply_gate(data, gate.matrix(), gate.qubits)
        clock = np.zeros(1 << steps, dtype=complex)
        clock[(1 << t) - 1] = 1
        out += np.kron(data.amplitudes, clock)
    return QuantumState(out / math.sqrt(steps + 1))


@dataclass(frozen=True)
class ClockEncoding:
    """Normalized clock hamiltonian and the affine map back to the raw one:
    ``H_normalized = (I + (H_raw - identity_offset I) / l1_norm) / 2``."""

    hamiltonian: LocalHamiltonian
    identity_offset: float
    l1_norm: float
    raw_terms: tuple[tuple[tuple[int, ...], np.ndarray], ...]


_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)
_RAISE = np.array([[0, 0], [1, 0]], dtype=complex)


def _clock_terms(circuit: ToyCircuit) -> list[tuple[tuple[int, ...], np.ndarray]]:
    steps = circuit.depth
    terms = []
    for a in circuit.ancilla:
        terms.append(((0, steps + a), np.kron(_P0, _P1)))
    for k in range(steps - 1):
        terms.append(((k, k + 1), np.kron(_P0, _P1)))
    for t in range(1, steps + 1):
        gate = circuit.gates[t - 1]
        qubits = []
        if t >= 2:
            qubits.append(t - 2)
        qubits.append(t - 1)
        if t <= steps - 1:
            qubits.append(t)
        u = gate.matrix()
        dim_g = u.shape[0]

        def window(middle):
            out = np.ones((1, 1), dtype=complex)
            if t >= 2:
                out = np.kron(out, _P1)
            out = np.kron(out, middle)
            if t <= steps - 1:
                out = np.kron(out, _P0)
            return out

        m = 0.5 * (
            np.kron(window(np.eye(2)), np.eye(dim_g))
            - np.kron(window(_RAISE), u)
            - np.kron(window(_RAISE.T), u.conj().T)
        )
        terms.append((tuple(qubits) + tuple(steps + q for q in gate.qubits), m))
    return terms


def _pauli_decompose(qubits: tuple[int, ...], m: np.ndarray, acc: dict) -> float:
    k = len(qubits)
    offset = 0.0
    for labels in itertools.product("IXYZ", repeat=k):
        p = np.ones((1, 1), dtype=complex)
        for lab in labels:
            p = np.kron(p, qsim.PAULIS[lab])
        c = np.trace(p @ m) / (1 << k)
        if abs(c.imag) > 1e-12:
            raise AssertionError("non-Hermitian local term")
        c = float(c.real)
        if abs(c) < 1e-14:
            continue
        key = tuple(sorted((q, lab) for q, lab in zip(qubits, labels) if lab != "I"))
        if key:
            acc[key] = acc.get(key, 0.0) + c
        else:
            offset += c
    return offset


def kitaev_hamiltonian(circuit: ToyCircuit) -> ClockEncoding:
    """Clock-check, propagation and input terms, normalized to the weighted form."""
    if circuit.depth < 1:
        raise InstanceError("circuit needs at least one gate")
    if circuit.depth > 4 or circuit.num_qubits > 3:
        raise InstanceError("clock construction limited to T <= 4 gates on n <= 3 qubits")
    raw = _clock_terms(circuit)
    acc: dict = {}
    offset = sum(_pauli_decompose(q, m, acc) for q, m in raw)
    coeffs = {key: c for key, c in acc.items() if abs(c) > 1e-12}
    l1 = sum(abs(c) for c in coeffs.values())
    terms = tuple(
        PauliTerm(abs(c) / l1, 1 if c > 0 else -1, key) for key, c in sorted(coeffs.items())
    )
    weights_total = sum(t.weight for t in terms)
    terms = tuple(PauliTerm(t.weight / weights_total, t.sign, t.paulis) for t in terms)
    h = LocalHamiltonian(circuit.depth + circuit.num_qubits, terms)
    return ClockEncoding(h, offset, l1, tuple(raw))


def raw_clock_matrix(encoding: ClockEncoding) -> np.ndarray:
    """Dense ``H_raw`` assembled directly from the local projector terms."""
    n = encoding.hamiltonian.num_qubits
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for qubits, m in encoding.raw_terms:
        out += _embed(m, qubits, n)
    return out


def _embed(m: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    dim = 1 << n
    out = np.empty((dim, dim), dtype=complex)
    for col in range(dim):
        basis = np.zeros(dim, dtype=complex)
        basis[col] = 1
        out[:, col] = qsim.apply_gate(QuantumState._trusted(basis), m, qubits).amplitudes
    return out


def _spectral_beta(h: LocalHamiltonian, alpha: float) -> float:
    values = spectrum(h)
    above = values[values > alpha + 1e-9]
    if above.size == 0:
        raise InstanceError("hamiltonian has no level above its ground energy")
    return float(min(1.0, above[0] - BETA_GUARD))


def make_circuit_instance(circuit: ToyCircuit, witness: QuantumState) -> Instance:
    """Yes-instance whose witness is the history state; ``alpha`` is its exact
    normalized energy and ``beta`` the next spectral level (less a guard)."""
    encoding = kitaev_hamiltonian(circuit)
    hist = history_state(circuit, witness)
    alpha = energy(hist, encoding.hamiltonian)
    return Instance(encoding.hamiltonian, alpha, _spectral_beta(encoding.hamiltonian, alpha), "yes", hist)


# ---------------------------------------------------------------------------
# hand-built families

HANDCRAFTED_KINDS = ("bell_stabilizer_yes", "anti_stabilizer_no", "ghz_yes", "random_no", "xxzz_frustrated_no")


def _uniform(n: int, specs: list[tuple[int, dict]]) -> LocalHamiltonian:
    w = 1.0 / len(specs)
    return LocalHamiltonian(n, tuple(PauliTerm.of(w, s, p) for s, p in specs))


def _xxzz_pairs(n: int, weights: Sequence[float], sign: int) -> LocalHamiltonian:
    pairs = list(itertools.combinations(range(n), 2))
    terms = []
    for (a, b), w in zip(pairs, weights):
        terms.append(PauliTerm.of(w / 2, sign, {a: "X", b: "X"}))
        terms.append(PauliTerm.of(w / 2, sign, {a: "Z", b: "Z"}))
    return LocalHamiltonian(n, tuple(terms))


def _no_instance(h: LocalHamiltonian) -> Instance:
    lam = float(spectrum(h)[0])
    beta = lam - BETA_GUARD
    if beta <= 0:
        raise InstanceError(f"ground energy {lam} leaves no room for a no-instance threshold")
    return Instance(h, 0.0, beta, "no")


def make_handcrafted_instance(kind: str, n: int, seed: int = 0) -> Instance:
    """Small instances with known spectra.

    ``bell_stabilizer_yes``: Bell pairs on (0,1), (2,3), ... with ``-XX`` and
    ``-ZZ`` checks, a spare odd qubit pinned to ``|0>``; zero-energy witness.
    ``anti_stabilizer_no``: ``(I+Z_0)/4 + (I-Z_0)/4``, every state has energy 1/2.
    ``ghz_yes``: GHZ checks ``-Z_j Z_{j+1}`` and ``-X...X`` (n <= 5).
    ``random_no``: antiferromagnetic ``XX + ZZ`` on all pairs with random
    weights (n >= 3, frustrated, paired form).
    ``xxzz_frustrated_no``: the same with uniform weights.

    Yes-families record ``alpha = 0`` and ``beta`` at the first excited level;
    no-families record ``beta`` as the exact ground energy less ``1e-6``.
    """
    if kind == "bell_stabilizer_yes":
        if n < 2:
            raise InstanceError("bell_stabilizer_yes needs n >= 2")
        specs, amps = [], np.ones(1, dtype=complex)
        bell = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        for a in range(0, n - 1, 2):
            specs += [(-1, {a: "X", a + 1: "X"}), (-1, {a: "Z", a + 1: "Z"})]
            amps = np.kron(bell, amps)
        if n % 2:
            specs.append((-1, {n - 1: "Z"}))
            amps = np.kron(np.array([1, 0], dtype=complex), amps)
        h = _uniform(n, specs)
        return Instance(h, 0.0, _spectral_beta(h, 0.0), "yes", QuantumState(amps))
    if kind == "anti_stabilizer_no":
        if n < 1:
            raise InstanceError("anti_stabilizer_no needs n >= 1")
        return _no_instance(_uniform(n, [(1, {0: "Z"}), (-1, {0: "Z"})]))
    if kind == "ghz_yes":
        if not 2 <= n <= MAX_LOCALITY:
            raise InstanceError(f"ghz_yes needs 2 <= n <= {MAX_LOCALITY}")
        specs = [(-1, {j: "Z", j + 1: "Z"}) for j in range(n - 1)]
        specs.append((-1, {j: "X" for j in range(n)}))
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = amps[-1] = 1 / math.sqrt(2)
        h = _uniform(n, specs)
        return Instance(h, 0.0, _spectral_beta(h, 0.0), "yes", QuantumState(amps))
    if kind in ("random_no", "xxzz_frustrated_no"):
        if n < 3:
            raise InstanceError(f"{kind} needs n >= 3")
        count = math.comb(n, 2)
        if kind == "random_no":
            weights = np.random.default_rng(seed).dirichlet(np.ones(count))
        else:
            weights = np.full(count, 1.0 / count)
        return _no_instance(_xxzz_pairs(n, weights, +1))
    raise InstanceError(f"unknown instance kind {kind!r}; expected one of {HANDCRAFTED_KINDS}")


# ---------------------------------------------------------------------------
# JSON files

FILE_VERSION = 1


def _instance_dict(instance: Instance, include_witness: bool = True) -> dict:
    h = instance.hamiltonian
    data = {
        "version": FILE_VERSION,
        "n": h.num_qubits,
        "locality": h.locality,
        "alpha": instance.alpha,
        "beta": instance.beta,
        "terms": [
            {"p": t.weight, "s": t.sign, "paulis": {str(q): b for q, b in t.paulis}} for t in h.terms
        ],
        "label": instance.label,
    }
    if include_witness and instance.witness is not None:
        data["witness"] = [[float(a.real), float(a.imag)] for a in instance.witness.amplitudes]
    return data


def instance_to_json(instance: Instance) -> str:
    return json.dumps(_instance_dict(instance), indent=1)


def instance_from_json(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def _require(data: Mapping, key: str, kind, path: str = ""):
    if key not in data:
        raise InstanceError(f"{path}{key}: missing")
    value = data[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise InstanceError(f"{path}{key}: expected {kind.__name__}")
    return value


def instance_from_dict(data: Mapping) -> Instance:
    if not isinstance(data, Mapping):
        raise InstanceError("instance file must hold a JSON object")
    version = _require(data, "version", int)
    if version != FILE_VERSION:
        raise InstanceError(f"version: unsupported {version}")
    n = _require(data, "n", int)
    locality = _require(data, "locality", int)
    alpha = _require(data, "alpha", float)
    beta = _require(data, "beta", float)
    label = _require(data, "label", str)
    raw_terms = _require(data, "terms", list)
    terms = []
    for i, t in enumerate(raw_terms):
        path = f"terms[{i}]."
        if not isinstance(t, Mapping):
            raise InstanceError(f"terms[{i}]: expected object")
        p = _require(t, "p", float, path)
        s = _require(t, "s", int, path)
        paulis = _require(t, "paulis", dict, path)
        try:
            mapping = {int(q): b for q, b in paulis.items()}
        except ValueError as exc:
            raise InstanceError(f"{path}paulis: qubit keys must be integers") from exc
        terms.append(PauliTerm.of(p, s, mapping))
    witness = None
    if "witness" in data:
        raw = data["witness"]
        try:
            amps = np.array([complex(re, im) for re, im in raw])
        except (TypeError, ValueError) as exc:
            raise InstanceError("witness: expected a list of [re, im] pairs") from exc
        if amps.size != 1 << n:
            raise InstanceError(f"witness: expected {1 << n} amplitudes, got {amps.size}")
        try:
            witness = QuantumState(amps)
        except qsim.InvalidStateError as exc:
            raise InstanceError(f"witness: {exc}") from exc
    return Instance(LocalHamiltonian(n, tuple(terms), locality), alpha, beta, label, witness)


def load_instance(path: str | Path) -> Instance:
    return instance_from_json(Path(path).read_text())


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(instance_to_json(instance) + "\n")
