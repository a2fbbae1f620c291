"""Self-checks for the quantum and cryptographic facts the proof systems rely on.

Each suite returns a list of :class:`Check` rows. Exact checks enumerate
outcomes and compare at ``EXACT_TOL``. Sampling checks use a chi-squared
uniformity test and fail below ``CHI2_LEVEL``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import fiat_shamir, protocol_qsp, qsim
from .dual_mode import ot
from .dual_mode import protocol as dm
from .hamiltonian import LocalHamiltonian, PauliTerm, make_handcrafted_instance
from .qsim import DensityMatrix, QuantumState

EXACT_TOL = 1e-9
ZK_TOL = 1e-6
CHI2_LEVEL = 1e-3
SAMPLES = 10_000


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str


def random_pure(n: int, rng: np.random.Generator) -> QuantumState:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return QuantumState(v / np.linalg.norm(v))


def random_mixed(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    dim = 1 << n
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def uniformity_pvalue(counts) -> float:
    return float(stats.chisquare(np.asarray(counts, dtype=float)).pvalue)


def _fidelity_row(suite: str, name: str, value: float) -> Check:
    return Check(suite, name, bool(value >= 1 - EXACT_TOL), f"min fidelity {value:.12f}")


def _chi2_row(suite: str, name: str, counts) -> Check:
    p = uniformity_pvalue(counts)
    return Check(suite, name, p > CHI2_LEVEL, f"chi2 p={p:.4f} over {int(np.sum(counts))} samples")


def _conditional_remote(joint: QuantumState, pairs, x, z) -> tuple[float, np.ndarray]:
    """Probability of Bell outcome ``(x, z)`` on ``pairs`` and the normalized
    state left on the unmeasured qubits, by rotating each pair into the
    computational basis and slicing."""
    rotated = joint
    for a, b in pairs:
        rotated = qsim.apply_gate(rotated, qsim.BELL_VECTORS.conj(), [a, b])
    idx = np.arange(1 << joint.num_qubits)
    mask = np.ones(idx.shape, dtype=bool)
    for (a, b), xi, zi in zip(pairs, x, z):
        mask &= ((idx >> a) & 1) == xi
        mask &= ((idx >> b) & 1) == zi
    remote = rotated.amplitudes[mask]
    prob = float(np.vdot(remote, remote).real)
    return prob, remote / np.sqrt(prob)


# ---------------------------------------------------------------------------
# teleportation and state collapse


def teleport_suite(rng: np.random.Generator) -> list[Check]:
    rows = []
    worst_f, worst_p = 1.0, 0.0
    for k in (1, 2, 3):
        for _ in range(3):
            psi = random_pure(k, rng)
            joint = qsim.tensor_product(psi, qsim.make_bell_pairs(k))
            pairs = [(j, k + j) for j in range(k)]
            for code in range(4**k):
                x = [(code >> (2 * i)) & 1 for i in range(k)]
                z = [(code >> (2 * i + 1)) & 1 for i in range(k)]
                prob, remote = _conditional_remote(joint, pairs, x, z)
                expected = qsim.apply_pauli_frame(psi, x, z)
                worst_f = min(worst_f, abs(np.vdot(expected.amplitudes, remote)) ** 2)
                worst_p = max(worst_p, abs(prob - 4.0**-k))
    rows.append(_fidelity_row("teleport", "remote state is the Pauli-framed input", worst_f))
    rows.append(Check("teleport", "every outcome has probability 4^-k", worst_p <= EXACT_TOL, f"max deviation {worst_p:.2e}"))

    counts = np.zeros(4)
    for _ in range(SAMPLES):
        state = qsim.tensor_product(qsim.product_state([np.array([1, 0])]), qsim.make_bell_pairs(1))
        x, z = qsim.measure_bell(state, 0, 1, rng)
        counts[2 * x + z] += 1
    rows.append(_chi2_row("teleport", "outcomes uniform for |0> input", counts))

    joint = qsim.tensor_product(random_pure(3, rng), qsim.make_bell_pairs(3))
    counts = np.zeros(64)
    for _ in range(SAMPLES):
        x, z = qsim.measure_bell_pairs(joint.copy(), [(j, 3 + j) for j in range(3)], rng)
        counts[int("".join(f"{a}{b}" for a, b in zip(x, z)), 2)] += 1
    rows.append(_chi2_row("teleport", "outcomes uniform for a random 3-qubit input", counts))

    worst = 1.0
    for basis in qsim.BASES:
        for m in (0, 1):
            pair = qsim.make_bell_pairs(1)
            rotated = qsim.apply_gate(pair, qsim.basis_change(basis).conj().T, [1])
            remote = rotated.amplitudes.reshape(2, 2)[m]
            remote = remote / np.linalg.norm(remote)
            expected = qsim.collapse_unitary(basis)[:, m]
            worst = min(worst, abs(np.vdot(expected, remote)) ** 2)
    rows.append(_fidelity_row("teleport", "measuring one Bell half leaves U(W)|m> on the other", worst))
    return rows


# ---------------------------------------------------------------------------
# Pauli mixing


def mixing_suite(rng: np.random.Generator) -> list[Check]:
    rows = []
    worst = 0.0
    for a_qubits, b_qubits in ((1, 1), (1, 1), (1, 2), (2, 1)):
        n = a_qubits + b_qubits
        rho = random_mixed(n, rng)
        acc = np.zeros_like(rho.matrix)
        for code in range(4**a_qubits):
            x = [(code >> (2 * i)) & 1 for i in range(a_qubits)]
            z = [(code >> (2 * i + 1)) & 1 for i in range(a_qubits)]
            acc += qsim.apply_pauli_frame(rho, x, z, qubits=range(a_qubits)).matrix
        acc /= 4**a_qubits
        expected = qsim.tensor_product(
            DensityMatrix.maximally_mixed(a_qubits), qsim.partial_trace(rho, range(a_qubits, n))
        ).matrix
        worst = max(worst, float(np.max(np.abs(acc - expected))))
    rows.append(Check("mixing", "pad average is I/2 on the padded register", worst <= EXACT_TOL, f"max entry error {worst:.2e}"))

    instance = make_handcrafted_instance("ghz_yes", 3)
    counts = np.zeros((3, 4))
    for _ in range(SAMPLES):
        keys = protocol_qsp.setup(3, rng)
        proof = protocol_qsp.prove(keys.proving, instance, rng)
        for j in range(3):
            counts[j, 2 * int(proof.x[j]) + int(proof.z[j])] += 1
    p = min(uniformity_pvalue(c) for c in counts)
    # three marginals share one significance budget
    rows.append(Check("mixing", "honest proof bits uniform per slot", p > CHI2_LEVEL / 3, f"min chi2 p={p:.4f}"))
    return rows


# ---------------------------------------------------------------------------
# effect of a Pauli frame before measurement


def pauli_outcome_law(state, bases: str) -> np.ndarray:
    """Exact law of measuring qubit ``j`` in ``bases[j]``, indexed ``[m_0, m_1, ...]``."""
    rotated = state
    for q, b in enumerate(bases):
        if b != "Z":
            rotated = qsim.apply_gate(rotated, qsim.basis_change(b).conj().T, [q])
    n = state.num_qubits
    diag = rotated.probabilities() if isinstance(rotated, QuantumState) else np.real(np.diagonal(rotated.matrix))
    return diag.reshape((2,) * n).transpose(list(range(n - 1, -1, -1)))


class _ForcedCoins:
    """Stands in for the verifier's generator: picks term ``index`` and tails."""

    def __init__(self, h: LocalHamiltonian, index: int):
        self._u = sum(t.weight for t in h.terms[:index]) + h.terms[index].weight / 2

    def random(self):
        return self._u

    def integers(self, *_args, **_kwargs):
        return 0


def _verifier_rejections(instance) -> int:
    """Run the real verifier over every tested term, key and positive-probability proof."""
    n = instance.num_qubits
    h = instance.hamiltonian
    rejections = 0
    for index, term in enumerate(h.terms):
        support = term.support
        # bases off the support never enter the decision
        bases = "".join(term.bases.get(q, "Z") for q in range(n))
        for m_code in range(1 << n):
            m = np.array([(m_code >> j) & 1 for j in range(n)], dtype=np.uint8)
            rho_p = qsim.prepare_pauli_product(bases, m)
            for pad_code in range(4 ** len(support)):
                pads = {q: ((pad_code >> (2 * i)) & 1, (pad_code >> (2 * i + 1)) & 1) for i, q in enumerate(support)}
                px = np.array([pads.get(j, (0, 0))[0] for j in range(n)], dtype=np.uint8)
                pz = np.array([pads.get(j, (0, 0))[1] for j in range(n)], dtype=np.uint8)
                joint = qsim.tensor_product(qsim.apply_pauli_frame(instance.witness, px, pz), rho_p)
                law = qsim.bell_outcome_distribution(joint, [(j, n + j) for j in range(n)])
                k_v = protocol_qsp.QspVerificationKey(bases, m, support, pads)
                for (xs, zs), p in law.items():
                    if p < EXACT_TOL:
                        continue
                    proof = protocol_qsp.QspProof(np.array(xs, dtype=np.uint8), np.array(zs, dtype=np.uint8))
                    ok, _ = protocol_qsp.verify(k_v, instance, proof, _ForcedCoins(h, index))
                    rejections += not ok
    return rejections


def xz_suite(rng: np.random.Generator) -> list[Check]:
    rows = []
    worst = 0.0
    for n in (1, 2, 3):
        rho = random_mixed(n, rng)
        for bases in itertools.product(qsim.BASES, repeat=n):
            bases = "".join(bases)
            base_law = pauli_outcome_law(rho, bases)
            for code in range(4**n):
                x = [(code >> (2 * i)) & 1 for i in range(n)]
                z = [(code >> (2 * i + 1)) & 1 for i in range(n)]
                framed = pauli_outcome_law(qsim.apply_pauli_frame(rho, x, z), bases)
                corrected = np.zeros_like(framed)
                for m in itertools.product((0, 1), repeat=n):
                    fixed = tuple(protocol_qsp.corrected_bit(bases[j], m[j], x[j], z[j]) for j in range(n))
                    corrected[fixed] += framed[m]
                worst = max(worst, 0.5 * float(np.abs(corrected - base_law).sum()))
    rows.append(Check("xz", "corrected outcomes follow the unframed law", worst <= EXACT_TOL, f"max TV {worst:.2e}"))

    instance = make_handcrafted_instance("bell_stabilizer_yes", 2)
    rejections = _verifier_rejections(instance)
    rows.append(Check("xz", "verifier undoes pad and teleport frame", rejections == 0, f"{rejections} honest rejections"))
    return rows


# ---------------------------------------------------------------------------
# energy test exactness


def random_hamiltonian(n: int, rng: np.random.Generator, terms: int | None = None) -> LocalHamiltonian:
    count = int(rng.integers(1, 6)) if terms is None else terms
    weights = rng.random(count) + 0.1
    weights = weights / weights.sum()
    out = []
    for w in weights:
        size = int(rng.integers(1, n + 1))
        support = sorted(rng.choice(n, size=size, replace=False).tolist())
        out.append(PauliTerm.of(float(w), int(rng.choice([-1, 1])), {q: str(rng.choice(qsim.BASES)) for q in support}))
    return LocalHamiltonian(n, tuple(out))


def dense_energy(state, h: LocalHamiltonian) -> float:
    """``Tr(rho H)`` from the full matrix of ``H``."""
    if isinstance(state, QuantumState):
        return float(np.vdot(state.amplitudes, h.matrix() @ state.amplitudes).real)
    return float(np.trace(state.matrix @ h.matrix()).real)


def energy_suite(rng: np.random.Generator, cases: int = 20) -> list[Check]:
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 4))
        h = random_hamiltonian(n, rng)
        rho = random_mixed(n, rng) if rng.random() < 0.5 else random_pure(n, rng)
        enumerated = protocol_qsp.energy_test_acceptance(rho, h)
        worst = max(worst, abs(enumerated - (1 - dense_energy(rho, h))))
    return [Check("energy", "enumerated acceptance equals 1 - Tr(rho H)", worst <= EXACT_TOL, f"max error {worst:.2e} over {cases} cases")]


# ---------------------------------------------------------------------------
# zero knowledge by exact enumeration


def _tv(a: dict, b: dict) -> float:
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b))


def zk_suite(rng: np.random.Generator) -> list[Check]:
    rows = []
    instance = make_handcrafted_instance("ghz_yes", 3)
    n = instance.num_qubits
    worst = 0.0
    for _ in range(5):
        keys = protocol_qsp.setup(n, rng)
        k_p, k_v = keys.proving, keys.verification
        honest = protocol_qsp.honest_distribution(k_v, k_p.rho_p, instance.witness)
        worst = max(worst, _tv(honest, protocol_qsp.simulate_distribution(k_v, instance)))
    rows.append(Check("zk", "padded proofs: prover and simulator laws match", worst <= ZK_TOL, f"max TV {worst:.2e}"))

    keys = protocol_qsp.setup(n, rng)
    off = [j for j in range(n) if j not in keys.verification.subset]
    if off:
        counts = np.zeros(4 ** len(off))
        for _ in range(SAMPLES):
            proof = protocol_qsp.simulate(keys.verification, instance, rng)
            code = 0
            for j in off:
                code = 4 * code + 2 * int(proof.x[j]) + int(proof.z[j])
            counts[code] += 1
        rows.append(_chi2_row("zk", "simulated bits off the subset are uniform", counts))

    worst_sigma = worst_dm = 0.0
    for _ in range(3):
        s_keys = fiat_shamir.sigma_preprocess(n, rng)
        subset = fiat_shamir.sigma_verify1(n, rng)
        h = fiat_shamir.honest_opened_law(s_keys.proving, instance, subset)
        s = fiat_shamir.simulated_opened_law(s_keys.proving, instance, subset)
        worst_sigma = max(worst_sigma, 0.5 * float(np.abs(h - s).sum()))

        crs, _ = dm.dm_crsgen(ot.HIDING, rng)
        d_keys = dm.dm_preprocess(crs, n, rng)
        subset = d_keys.verification.subset
        h = dm.honest_opened_law(d_keys.proving.rho_p, instance, subset)
        s = dm.simulated_opened_law(d_keys.proving.rho_p, instance, subset)
        worst_dm = max(worst_dm, 0.5 * float(np.abs(h - s).sum()))
    rows.append(Check("zk", "opened commitments: prover and simulator laws match", worst_sigma <= ZK_TOL, f"max TV {worst_sigma:.2e}"))
    rows.append(Check("zk", "dual-mode opened slots: prover and simulator laws match", worst_dm <= ZK_TOL, f"max TV {worst_dm:.2e}"))
    return rows


# ---------------------------------------------------------------------------
# oblivious transfer


def ot_one_of_n_failures(rng: np.random.Generator, max_n: int = 4, vectors: int = 100) -> tuple[int, int, int]:
    """``(runs, wrong outputs, wrong extractions)`` over every ``n <= max_n`` and choice."""
    runs = wrong = missed = 0
    for mode in (ot.BINDING, ot.HIDING):
        crs, td = ot.ot_crsgen(mode, rng)
        for n in range(1, max_n + 1):
            for j in range(n):
                for _ in range(vectors):
                    messages = [rng.bytes(8) for _ in range(n)]
                    ot1, st = ot.ot1n_receiver(crs, j, n, rng)
                    try:
                        got = ot.ot1n_derive(crs, st, ot.ot1n_sender(crs, ot1, messages, rng))
                    except ValueError:
                        got = None
                    runs += 1
                    wrong += got != messages[j]
                    if mode == ot.HIDING:
                        missed += ot.ot1n_open_rec(td, ot1) != (j, False)
    return runs, wrong, missed


def ot_k_of_n_failures(rng: np.random.Generator, max_n: int = 8, max_k: int = 5, vectors: int = 100) -> tuple[int, int, int]:
    runs = wrong = missed = 0
    for mode in (ot.BINDING, ot.HIDING):
        crs, td = ot.ot_crsgen(mode, rng)
        for n in range(1, max_n + 1):
            for k in range(1, max_k + 1):
                for _ in range(vectors):
                    messages = [rng.bytes(8) for _ in range(n)]
                    choices = [int(c) for c in rng.integers(n, size=k)]
                    ot1, states = ot.otkn_receiver(crs, choices, n, rng)
                    try:
                        got = ot.otkn_derive(crs, states, ot.otkn_sender(crs, ot1, messages, rng))
                    except ValueError:
                        got = None
                    runs += 1
                    wrong += got != tuple(messages[c] for c in choices)
                    if mode == ot.HIDING:
                        missed += ot.ot_open_rec(td, ot1).indices != tuple(choices)
    return runs, wrong, missed


def ot_suite(rng: np.random.Generator) -> list[Check]:
    rows = []
    for label, (runs, wrong, missed) in (
        ("1-of-n", ot_one_of_n_failures(rng)),
        ("k-of-n", ot_k_of_n_failures(rng)),
    ):
        rows.append(Check("ot", f"{label} receiver gets its chosen message", wrong == 0, f"{wrong}/{runs} wrong"))
        rows.append(Check("ot", f"{label} extractor recovers the choice", missed == 0, f"{missed} missed"))
    return rows


SUITES: dict[str, Callable[[np.random.Generator], list[Check]]] = {
    "teleport": teleport_suite,
    "mixing": mixing_suite,
    "xz": xz_suite,
    "energy": energy_suite,
    "zk": zk_suite,
    "ot": ot_suite,
}


def run_suites(names, seed: int) -> list[Check]:
    rows = []
    for i, name in enumerate(names):
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}")
        rows.extend(SUITES[name](np.random.default_rng([seed, i])))
    return rows
