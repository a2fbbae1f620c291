import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from qmanizk import protocol_qsp as qsp
from qmanizk import qsim
from qmanizk.hamiltonian import Instance, InstanceError, LocalHamiltonian, PauliTerm, make_handcrafted_instance
from qmanizk.qsim import DensityMatrix, QuantumState
from qmanizk.subsets import unrank_subset

seeds = st.integers(0, 2**32 - 1)


class ForcedCoins:
    """Verifier coins that pick term ``index`` (by cumulative weight) and tails."""

    def __init__(self, weights, index):
        self.u = sum(weights[:index]) + weights[index] / 2

    def random(self):
        return self.u

    def integers(self, *args, **kwargs):
        return 0


def dilution(n):
    return 3**5 * sum(math.comb(n, k) for k in range(1, min(5, n) + 1))


def enumerated_acceptance(rho: np.ndarray, instance: Instance) -> float:
    """Average the real verifier over every key, Bell outcome, term and coin."""
    n = instance.num_qubits
    h = instance.hamiltonian
    weights = [t.weight for t in h.terms]
    count = sum(math.comb(n, k) for k in range(1, min(5, n) + 1))
    pairs = [(j, n + j) for j in range(n)]
    reject = 0.0
    for bases in itertools.product("XYZ", repeat=n):
        bases = "".join(bases)
        for m in itertools.product((0, 1), repeat=n):
            key_state = qsim.prepare_pauli_product(bases, m).amplitudes
            for rank in range(count):
                subset = unrank_subset(n, rank)
                for pad_bits in itertools.product((0, 1), repeat=2 * len(subset)):
                    pads = {j: (pad_bits[2 * i], pad_bits[2 * i + 1]) for i, j in enumerate(subset)}
                    px = [pads.get(j, (0, 0))[0] for j in range(n)]
                    pz = [pads.get(j, (0, 0))[1] for j in range(n)]
                    op = oracles.frame(px, pz)
                    joint = np.kron(oracles.density(key_state), op @ rho @ op.conj().T)
                    law = oracles.bell_law(joint, pairs, 2 * n)
                    k_v = qsp.QspVerificationKey(bases, np.array(m, dtype=np.uint8), subset, pads)
                    p_key = 1 / (3**n * 2**n * count * 4 ** len(subset))
                    for (xs, zs), p in law.items():
                        if p < 1e-15:
                            continue
                        proof = qsp.QspProof(np.array(xs, dtype=np.uint8), np.array(zs, dtype=np.uint8))
                        for i, w in enumerate(weights):
                            ok, trace = qsp.verify(k_v, instance, proof, ForcedCoins(weights, i))
                            if trace.coin == "tails" and not ok:
                                reject += p_key * p * w * 3.0 ** (len(subset) - 5)
    return 1 - reject


def small_instance(h: LocalHamiltonian) -> Instance:
    return Instance(h, 0.0, 1.0, "no")


# ---------------------------------------------------------------- decision rule


@pytest.mark.parametrize("basis, m, fx, fz, expected", [
    ("Z", 0, 1, 0, 1), ("Z", 1, 0, 1, 1), ("X", 0, 1, 0, 0), ("X", 0, 0, 1, 1),
    ("Y", 0, 1, 0, 1), ("Y", 0, 0, 1, 1), ("Y", 1, 1, 1, 1),
])
def test_corrected_bit_table(basis, m, fx, fz, expected):
    assert qsp.corrected_bit(basis, m, fx, fz) == expected


@given(seed=seeds, bases=st.text("XYZ", min_size=2, max_size=2), frame=st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_corrected_bits_undo_a_frame(seed, bases, frame):
    rho = oracles.random_density(2, np.random.default_rng(seed))
    x, z = frame[:2], frame[2:]
    op = oracles.frame(x, z)
    framed = oracles.pauli_outcome_law(op @ rho @ op.conj().T, bases)
    corrected = {}
    for ms, p in framed.items():
        key = tuple(qsp.corrected_bit(bases[j], ms[j], x[j], z[j]) for j in range(2))
        corrected[key] = corrected.get(key, 0) + p
    assert oracles.tv(corrected, oracles.pauli_outcome_law(rho, bases)) < 1e-12


def test_parity_rule():
    # a +1 term penalizes the +1 eigenspace, i.e. even parity
    assert not qsp.parity_accepts([0, 0], +1)
    assert qsp.parity_accepts([0, 1], +1)
    assert qsp.parity_accepts([1, 1], -1)
    assert not qsp.parity_accepts([1], -1)


def test_posthoc_paths():
    h = LocalHamiltonian(2, (PauliTerm.of(1.0, 1, {0: "Z", 1: "X"}),))

    class Heads(ForcedCoins):
        def integers(self, *args, **kwargs):
            return 1

    ok, trace = qsp.posthoc_decision(h, (0,), "ZX", lambda j, b: 0, ForcedCoins([1.0], 0))
    assert ok and trace.reason == "inconsistent term"
    ok, trace = qsp.posthoc_decision(h, (0, 1), "ZZ", lambda j, b: 0, ForcedCoins([1.0], 0))
    assert ok and not trace.consistent
    ok, trace = qsp.posthoc_decision(h, (0, 1), "ZX", lambda j, b: 0, Heads([1.0], 0))
    assert ok and trace.coin == "heads"
    ok, trace = qsp.posthoc_decision(h, (0, 1), "ZX", lambda j, b: 0, ForcedCoins([1.0], 0))
    assert not ok and trace.corrected_bits == {0: 0, 1: 0}


# ---------------------------------------------------------------- acceptance law


def test_enumerated_acceptance_matches_exact_formula_one_qubit(rng):
    h = LocalHamiltonian(1, (PauliTerm.of(0.3, 1, {0: "Y"}), PauliTerm.of(0.7, -1, {0: "X"})))
    rho = oracles.random_density(1, rng)
    inst = small_instance(h)
    exact = qsp.acceptance_probability_exact(DensityMatrix(rho), inst)
    assert enumerated_acceptance(rho, inst) == pytest.approx(exact, abs=1e-12)


def test_enumerated_acceptance_matches_exact_formula_two_qubits(rng):
    h = LocalHamiltonian(2, (PauliTerm.of(0.5, 1, {0: "Y", 1: "Z"}), PauliTerm.of(0.5, -1, {1: "X"})))
    rho = oracles.random_density(2, rng)
    inst = small_instance(h)
    exact = qsp.acceptance_probability_exact(DensityMatrix(rho), inst)
    assert enumerated_acceptance(rho, inst) == pytest.approx(exact, abs=1e-12)


@given(seed=seeds, n=st.integers(1, 3))
def test_exact_acceptance_is_energy_over_dilution(seed, n):
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(3):
        support = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
        terms.append(PauliTerm.of(1 / 3, int(rng.choice([-1, 1])), {q: str(rng.choice(list("XYZ"))) for q in support}))
    h = LocalHamiltonian(n, tuple(terms))
    rho = oracles.random_density(n, rng)
    e = np.trace(rho @ oracles.hamiltonian_matrix(h)).real
    got = qsp.acceptance_probability_exact(DensityMatrix(rho), small_instance(h))
    assert got == pytest.approx(1 - e / dilution(n), abs=1e-12)
    assert qsp.acceptance_law(e, n) == pytest.approx(got, abs=1e-12)


def test_energy_test_acceptance_is_one_minus_energy(rng):
    h = LocalHamiltonian(2, (PauliTerm.of(0.4, 1, {0: "Y", 1: "Y"}), PauliTerm.of(0.6, -1, {0: "Z"})))
    rho = oracles.random_density(2, rng)
    e = np.trace(rho @ oracles.hamiltonian_matrix(h)).real
    assert qsp.energy_test_acceptance(DensityMatrix(rho), h) == pytest.approx(1 - e, abs=1e-12)
    psi = QuantumState(oracles.random_state(2, rng))
    trials = 4000
    accepts = sum(qsp.energy_test(psi, h, rng) for _ in range(trials))
    p = qsp.energy_test_acceptance(psi, h)
    assert abs(accepts / trials - p) <= 4 * math.sqrt(p * (1 - p) / trials)


@pytest.mark.parametrize("run", [qsp.original_run, qsp.virtual1_run, qsp.virtual2_run, qsp.prime_run])
def test_honest_runs_accept_zero_energy_witness(run, rng):
    inst = make_handcrafted_instance("ghz_yes", 3)
    assert all(run(inst, "honest", rng)[0] for _ in range(300))


def test_unpadded_strategy_still_accepted_by_virtual_runs(rng):
    inst = make_handcrafted_instance("bell_stabilizer_yes", 2)
    plan = qsp.ProverStrategy(inst.witness, pad=False)
    assert all(qsp.virtual1_run(inst, plan, rng)[0] for _ in range(200))


def test_resolve_strategy_errors():
    no = make_handcrafted_instance("anti_stabilizer_no", 1)
    with pytest.raises(InstanceError):
        qsp.resolve_strategy("honest", no)
    with pytest.raises(ValueError):
        qsp.resolve_strategy("sneaky", no)
    assert qsp.resolve_strategy("random", no).state is None


# ---------------------------------------------------------------- zero knowledge


def dense_honest_law(k_p, k_v, witness, n):
    """Bell law of the padded witness, averaged over the pad bits the verifier never sees."""
    off = [j for j in range(n) if j not in k_v.pads]
    law = {}
    for bits in itertools.product((0, 1), repeat=2 * len(off)):
        px, pz = list(k_p.pad_x), list(k_p.pad_z)
        for i, j in enumerate(off):
            px[j], pz[j] = bits[2 * i], bits[2 * i + 1]
        op = oracles.frame(px, pz)
        joint = np.kron(oracles.density(k_p.rho_p.amplitudes), op @ oracles.density(witness) @ op.conj().T)
        for key, p in oracles.bell_law(joint, [(j, n + j) for j in range(n)], 2 * n).items():
            law[key] = law.get(key, 0.0) + p / 4 ** len(off)
    return law


def test_simulator_law_equals_prover_law(rng):
    inst = make_handcrafted_instance("ghz_yes", 3)
    n = 3
    for _ in range(4):
        keys = qsp.setup(n, rng)
        k_p, k_v = keys.proving, keys.verification
        dense = dense_honest_law(k_p, k_v, inst.witness.amplitudes, n)
        assert oracles.tv(dense, qsp.honest_distribution(k_v, k_p.rho_p, inst.witness)) < 1e-12
        assert oracles.tv(dense, qsp.simulate_distribution(k_v, inst)) < 1e-12


def test_fixed_pads_alone_do_not_hide_the_witness():
    # with every pad fixed, GHZ outcomes off the subset are correlated with it
    inst = make_handcrafted_instance("ghz_yes", 3)
    rho_p = qsim.prepare_pauli_product("ZZZ", [0, 0, 0])
    k_p = qsp.QspProvingKey(rho_p, np.zeros(3, np.uint8), np.zeros(3, np.uint8))
    k_v = qsp.QspVerificationKey("ZZZ", np.zeros(3, np.uint8), (0,), {0: (0, 0)})
    fixed = oracles.bell_law(
        np.kron(oracles.density(rho_p.amplitudes), oracles.density(inst.witness.amplitudes)), [(j, 3 + j) for j in range(3)], 6
    )
    assert oracles.tv(fixed, dense_honest_law(k_p, k_v, inst.witness.amplitudes, 3)) > 0.1


def test_simulate_needs_only_verification_key(rng):
    inst = make_handcrafted_instance("ghz_yes", 3)
    keys = qsp.setup(3, rng)
    proof = qsp.simulate(keys.verification, inst, rng)
    assert proof.x.shape == (3,) and proof.x.dtype == np.uint8


# ---------------------------------------------------------------- serialization


def test_proof_and_key_json_round_trip(rng):
    keys = qsp.setup(4, rng)
    inst = make_handcrafted_instance("bell_stabilizer_yes", 4)
    proof = qsp.prove(keys.proving, inst, rng)
    back = qsp.QspProof.from_json(proof.to_json(), 4)
    assert np.array_equal(back.x, proof.x) and np.array_equal(back.z, proof.z)
    k_v = qsp.QspVerificationKey.from_json(keys.verification.to_json())
    assert k_v.bases == keys.verification.bases and k_v.pads == keys.verification.pads


@pytest.mark.parametrize("text", ['{"x": "0"}', "not json", '{"x": "zz", "z": "0"}', '{"x": "1f", "z": "0"}'])
def test_malformed_proof_json(text):
    with pytest.raises(qsp.MalformedProofError):
        qsp.QspProof.from_json(text, 2)


def test_verify_rejects_malformed_bits(rng):
    inst = make_handcrafted_instance("bell_stabilizer_yes", 2)
    keys = qsp.setup(2, rng)
    with pytest.raises(qsp.MalformedProofError):
        qsp.verify(keys.verification, inst, qsp.QspProof(np.array([0, 2], dtype=np.uint8), np.zeros(2, np.uint8)), rng)
    with pytest.raises(qsp.MalformedProofError):
        qsp.verify(keys.verification, inst, qsp.QspProof(np.zeros(3, np.uint8), np.zeros(3, np.uint8)), rng)


def test_verification_key_validation():
    with pytest.raises(ValueError):
        qsp.QspVerificationKey("XQ", np.zeros(2, np.uint8), (0,), {0: (0, 0)})
    with pytest.raises(ValueError):
        qsp.QspVerificationKey("XZ", np.zeros(2, np.uint8), (1, 0), {0: (0, 0), 1: (0, 0)})
    with pytest.raises(ValueError):
        qsp.QspVerificationKey("XZ", np.zeros(2, np.uint8), (0,), {1: (0, 0)})


# ---------------------------------------------------------------- two-local system


def nip_enumerated_acceptance(rho, instance):
    n = instance.num_qubits
    pairs = qsp.xxzz_pairs(instance.hamiltonian)
    weights = [p.weight for p in pairs]
    accept = 0.0
    for h_bit in (0, 1):
        for m in itertools.product((0, 1), repeat=n):
            column = oracles.H if h_bit else oracles.I2
            key = oracles.kron_all([column[:, m[q]] for q in range(n - 1, -1, -1)]).reshape(-1)
            joint = np.kron(oracles.density(key), rho)
            law = oracles.bell_law(joint, [(j, n + j) for j in range(n)], 2 * n)
            k_v = qsp.NipVerificationKey(h_bit, np.array(m, dtype=np.uint8))
            for (xs, zs), p in law.items():
                if p < 1e-15:
                    continue
                proof = qsp.QspProof(np.array(xs, dtype=np.uint8), np.array(zs, dtype=np.uint8))
                for i, w in enumerate(weights):
                    ok, _ = qsp.nip_verify(k_v, instance, proof, ForcedCoins(weights, i))
                    accept += ok * w * p / 2 ** (n + 1)
    return accept


def test_nip_acceptance_is_one_minus_energy(rng):
    inst = make_handcrafted_instance("xxzz_frustrated_no", 3)
    rho = oracles.random_density(3, rng)
    e = np.trace(rho @ oracles.hamiltonian_matrix(inst.hamiltonian)).real
    assert nip_enumerated_acceptance(rho, inst) == pytest.approx(1 - e, abs=1e-12)


def test_nip_requires_paired_form():
    with pytest.raises(InstanceError):
        qsp.xxzz_pairs(make_handcrafted_instance("ghz_yes", 3).hamiltonian)
    pairs = qsp.xxzz_pairs(make_handcrafted_instance("bell_stabilizer_yes", 2).hamiltonian)
    assert pairs == (qsp.XXZZPair(0, 1, 1.0, -1),)


def test_nip_honest_always_accepts(rng):
    inst = make_handcrafted_instance("bell_stabilizer_yes", 4)
    assert all(qsp.nip_run(inst, "honest", rng)[0] for _ in range(300))


# ---------------------------------------------------------------- amplification


def test_hoeffding_numbers():
    assert qsp.hoeffding_bound(83, 1.0, 2 / 3) == pytest.approx(math.exp(-83 / 18))
    # 2 ln(100) / (1/3)^2 = 82.9
    assert qsp.hoeffding_reps(1.0, 2 / 3, 0.01) == 83
    assert qsp.hoeffding_bound(qsp.hoeffding_reps(0.9, 0.5, 0.05), 0.9, 0.5) <= 0.05


def test_amplified_threshold_and_errors(rng):
    with pytest.raises(ValueError):
        qsp.amplify(qsp.NIP, 0, 1.0, 0.5)
    with pytest.raises(ValueError):
        qsp.amplify(qsp.NIP, 3, 0.5, 0.5)
    amp = qsp.amplify(qsp.NIP, 5, 1.0, 2 / 3)
    assert amp.threshold == pytest.approx(5 * (5 / 6))
    inst = make_handcrafted_instance("bell_stabilizer_yes", 2)
    keys = amp.setup(2, rng)
    proofs = amp.prove(keys.proving, inst, rng)
    ok, accepts = amp.verify(keys.verification, inst, proofs, rng)
    assert ok and accepts == 5
    with pytest.raises(qsp.MalformedProofError):
        amp.verify(keys.verification, inst, proofs[:4], rng)
