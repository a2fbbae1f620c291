import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

import oracles
from qmanizk import fiat_shamir as fs
from qmanizk import protocol_qsp as qsp
from qmanizk import qsim
from qmanizk.hamiltonian import Instance, LocalHamiltonian, PauliTerm, make_handcrafted_instance
from qmanizk.protocol_qsp import MalformedProofError
from qmanizk.qsim import DensityMatrix
from qmanizk.subsets import admissible_subset_count, rank_subset, unrank_subset

seeds = st.integers(0, 2**32 - 1)


class ForcedCoins:
    def __init__(self, weights, index):
        self.u = sum(weights[:index]) + weights[index] / 2

    def random(self):
        return self.u

    def integers(self, *args, **kwargs):
        return 0


# ---------------------------------------------------------------- oracle


def test_oracle_is_a_deterministic_function():
    a, b = fs.ProgrammableOracle(5), fs.ProgrammableOracle(5)
    assert a.query(b"p") == b.query(b"p") == a.query(b"p")
    assert a.query(b"q") != a.query(b"p")
    assert len(a) == 2 and a.query_count == 4
    assert len(a.query(b"r")) == 32


def test_reprogram_and_fork():
    ro = fs.ProgrammableOracle(1, output_bits=64)
    ro.query(b"p")
    ro.reprogram(b"p", bytes(8))
    assert ro.query(b"p") == bytes(8) and ro.reprogrammed == [b"p"]
    with pytest.raises(ValueError):
        ro.reprogram(b"p", bytes(7))
    child = ro.fork()
    assert child.output_bits == 64 and child.query(b"p") != bytes(8)
    with pytest.raises(ValueError):
        fs.ProgrammableOracle(1, output_bits=12)


def test_commitments_open_only_to_their_message(rng):
    ro = fs.ProgrammableOracle(2)
    c = fs.commit(ro, b"\x01\x00", rng)
    assert fs.verify_commit(ro, b"\x01\x00", c.com, c.randomness)
    assert not fs.verify_commit(ro, b"\x00\x00", c.com, c.randomness)
    assert not fs.verify_commit(ro, b"\x01\x00", c.com, bytes(32))


def test_short_oracle_commitments_collide(rng):
    # 16-bit outputs: a birthday search needs about 2^8 tries
    pair = fs.find_commitment_collision(fs.ProgrammableOracle(3, output_bits=16), 20_000, rng)
    assert pair is not None
    a, b = pair
    assert a.com == b.com and a.message != b.message


@given(a=st.lists(st.binary(max_size=4), max_size=4), b=st.lists(st.binary(max_size=4), max_size=4))
def test_encode_msg1_is_injective(a, b):
    assert (fs.encode_msg1(a) == fs.encode_msg1(b)) == (a == b)


# ---------------------------------------------------------------- challenges


def test_derived_challenges_are_uniform():
    ro = fs.ProgrammableOracle(7)
    n = 3
    counts = np.zeros(admissible_subset_count(n))
    for i in range(7000):
        counts[rank_subset(n, fs.derive_subsets(ro, i.to_bytes(4, "big"), n)[0])] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


def test_derive_many_subsets_spans_queries():
    ro = fs.ProgrammableOracle(8)
    out = fs.derive_subsets(ro, b"x", 4, count=20)
    assert len(out) == 20 and ro.query_count >= 5


def test_challenge_exhaustion():
    # 8-bit blocks cannot index 381 subsets of nine qubits
    ro = fs.ProgrammableOracle(9, output_bits=8)
    assert admissible_subset_count(9) == 381
    with pytest.raises(fs.ChallengeExhaustedError):
        fs.derive_subsets(ro, b"x", 9)
    with pytest.raises(fs.ChallengeExhaustedError):
        fs.programmed_output(ro, (0,), 9, np.random.default_rng(0))


@given(seed=seeds, n=st.integers(1, 7), data=st.data())
def test_programmed_output_decodes_to_its_subset(seed, n, data):
    rng = np.random.default_rng(seed)
    subset = unrank_subset(n, data.draw(st.integers(0, admissible_subset_count(n) - 1)))
    ro = fs.ProgrammableOracle(seed)
    ro.reprogram(b"pt", fs.programmed_output(ro, subset, n, rng))
    assert fs.derive_subsets(ro, b"pt", n) == [subset]


# ---------------------------------------------------------------- interactive protocol


def sigma_enumerated_acceptance(rho, instance):
    n = instance.num_qubits
    weights = [t.weight for t in instance.hamiltonian.terms]
    count = admissible_subset_count(n)
    ro = fs.ProgrammableOracle(0)
    reject = 0.0
    for bases in itertools.product("XYZ", repeat=n):
        for m in itertools.product((0, 1), repeat=n):
            key = qsim.prepare_pauli_product("".join(bases), m).amplitudes
            law = oracles.bell_law(np.kron(oracles.density(key), rho), [(j, n + j) for j in range(n)], 2 * n)
            k_v = fs.SigmaVerificationKey("".join(bases), np.array(m, dtype=np.uint8))
            for (xs, zs), p in law.items():
                if p < 1e-15:
                    continue
                rng = np.random.default_rng(0)
                msg1, state = fs._commit_outcomes(np.array(xs), np.array(zs), ro, rng)
                for rank in range(count):
                    subset = unrank_subset(n, rank)
                    for i, w in enumerate(weights):
                        ok, trace = fs.sigma_verify2(k_v, instance, msg1, subset, state.open(subset), ro, ForcedCoins(weights, i))
                        if trace.coin == "tails" and not ok:
                            reject += p * w * 3.0 ** (len(subset) - 5) / (6**n * count)
    return 1 - reject


def test_sigma_acceptance_matches_exact_formula(rng):
    h = LocalHamiltonian(2, (PauliTerm.of(0.5, -1, {0: "X", 1: "Y"}), PauliTerm.of(0.5, 1, {0: "Z"})))
    inst = Instance(h, 0.0, 1.0, "no")
    rho = oracles.random_density(2, rng)
    exact = qsp.acceptance_probability_exact(DensityMatrix(rho), inst)
    assert sigma_enumerated_acceptance(rho, inst) == pytest.approx(exact, abs=1e-12)


@pytest.mark.parametrize("run", [fs.sigma_run, fs.sigma_virtual_run, fs.fs_run, fs.shared_bell_run])
def test_honest_sigma_family_accepts(run, rng):
    inst = make_handcrafted_instance("ghz_yes", 3)
    assert all(run(inst, "honest", rng)[0] for _ in range(300))


def _transcript(rng, n=3):
    inst = make_handcrafted_instance("ghz_yes", n)
    ro = fs.ProgrammableOracle(11)
    keys = fs.sigma_preprocess(n, rng)
    msg1, state = fs.sigma_prove1(keys.proving, inst, ro, rng)
    return inst, ro, keys, msg1, state


def test_tampered_opening_rejected(rng):
    inst, ro, keys, msg1, state = _transcript(rng)
    subset = (0, 2)
    good = state.open(subset)
    assert fs.sigma_verify2(keys.verification, inst, msg1, subset, good, ro, rng)[0]
    o = good[1]
    bad = (good[0], fs.Opening(o.j, o.x ^ 1, o.z, o.randomness))
    ok, trace = fs.sigma_verify2(keys.verification, inst, msg1, subset, bad, ro, rng)
    assert not ok and trace.reason == "commitment 2 fails to open"


@pytest.mark.parametrize("case", ["short msg1", "bad subset", "wrong slot", "non-bit", "short randomness", "extra opening"])
def test_malformed_transcripts(case, rng):
    inst, ro, keys, msg1, state = _transcript(rng)
    subset, opened = (0, 1), list(state.open((0, 1)))
    if case == "short msg1":
        msg1 = msg1[:2]
    elif case == "bad subset":
        subset = (1, 0)
    elif case == "wrong slot":
        opened[0] = fs.Opening(2, opened[0].x, opened[0].z, opened[0].randomness)
    elif case == "non-bit":
        opened[0] = fs.Opening(0, 2, 0, opened[0].randomness)
    elif case == "short randomness":
        opened[0] = fs.Opening(0, 0, 0, b"r")
    else:
        opened.append(opened[0])
    with pytest.raises(MalformedProofError):
        fs.sigma_verify2(keys.verification, inst, msg1, subset, opened, ro, rng)


def test_opened_laws_agree_with_dense_oracle(rng):
    inst = make_handcrafted_instance("ghz_yes", 3)
    keys = fs.sigma_preprocess(3, rng)
    joint = np.kron(oracles.density(keys.proving.rho_p.amplitudes), oracles.density(inst.witness.amplitudes))
    full = oracles.bell_law(joint, [(j, 3 + j) for j in range(3)], 6)
    for subset in [(0,), (1, 2), (0, 1, 2)]:
        expected = np.zeros((2,) * (2 * len(subset)))
        for (xs, zs), p in full.items():
            expected[tuple(b for j in subset for b in (xs[j], zs[j]))] += p
        assert np.abs(fs.honest_opened_law(keys.proving, inst, subset) - expected).sum() / 2 < 1e-12
        assert np.abs(fs.simulated_opened_law(keys.proving, inst, subset) - expected).sum() / 2 < 1e-12


# ---------------------------------------------------------------- non-interactive


def test_fs_proof_json_round_trip(rng):
    inst = make_handcrafted_instance("bell_stabilizer_yes", 3)
    ro = fs.ProgrammableOracle(4)
    keys = fs.sigma_preprocess(3, rng)
    proof = fs.fs_prove(keys.proving, inst, ro, rng)
    assert fs.FsProof.from_json(proof.to_json()) == proof
    with pytest.raises(MalformedProofError):
        fs.FsProof.from_json('{"msg1": ["zz"], "opened": []}')


def test_fs_tampering_changes_the_challenge(rng):
    inst = make_handcrafted_instance("ghz_yes", 4)
    keys = fs.sigma_preprocess(4, rng)
    rejected = 0
    for seed in range(200):
        ro = fs.ProgrammableOracle(seed)
        proof = fs.fs_prove(keys.proving, inst, ro, rng)
        # swap in a fresh commitment for one unopened slot
        opened = {o.j for o in proof.opened}
        free = [j for j in range(4) if j not in opened]
        if not free:
            continue
        msg1 = list(proof.msg1)
        msg1[free[0]] = fs.commit(ro, b"\x00\x00", rng).com
        ok, _ = fs.fs_verify(keys.verification, inst, fs.FsProof(tuple(msg1), proof.opened), ro, rng)
        rejected += not ok
    # the re-derived challenge matches the old openings with probability 1/30
    assert rejected >= 150


def test_fs_simulator_reprograms_once_and_verifies(rng):
    inst = make_handcrafted_instance("ghz_yes", 3)
    for seed in range(50):
        ro = fs.ProgrammableOracle(seed)
        keys = fs.sigma_preprocess(3, rng)
        proof = fs.fs_simulate(keys.proving, inst, ro, rng)
        assert len(ro.reprogrammed) == 1
        assert fs.fs_verify(keys.verification, inst, proof, ro, rng)[0]


# ---------------------------------------------------------------- shared Bell pairs


def test_each_half_measures_once(rng):
    inst = make_handcrafted_instance("bell_stabilizer_yes", 2)
    prover, verifier = fs.shared_bell_setup(2)
    prover.teleport(inst.witness, rng)
    with pytest.raises(fs.HalfAlreadyMeasuredError):
        prover.teleport(inst.witness, rng)
    verifier.measure(rng)
    assert verifier.measured
    with pytest.raises(fs.HalfAlreadyMeasuredError):
        verifier.measure(rng)
    with pytest.raises(TypeError):
        fs.shared_bell_setup(2)[0].teleport(DensityMatrix.maximally_mixed(2), rng)


def test_shared_pairs_start_maximally_entangled():
    prover, _ = fs.shared_bell_setup(2)
    state = fs.shared_bell_state(prover)
    law = oracles.bell_law(oracles.density(state.amplitudes), [(0, 2), (1, 3)], 4)
    assert law[((0, 0), (0, 0))] == pytest.approx(1)


# ---------------------------------------------------------------- repetition


@pytest.mark.parametrize("per_copy", [False, True])
def test_amplified_sigma(per_copy, rng):
    amp = fs.sigma_amplify(7, 1.0, 2 / 3, per_copy=per_copy)
    assert amp.threshold == pytest.approx(7 * 5 / 6)
    assert amp.error_bound == pytest.approx(math.exp(-7 / 18))
    inst = make_handcrafted_instance("ghz_yes", 3)
    ro = fs.ProgrammableOracle(12)
    keys = amp.setup(3, rng)
    proof = amp.prove(keys, inst, ro, rng)
    assert amp.verify(keys, inst, proof, ro, rng) == (True, 7)
    with pytest.raises(MalformedProofError):
        amp.verify(keys[:6], inst, proof, ro, rng)


def test_amplify_arguments():
    with pytest.raises(ValueError):
        fs.sigma_amplify(0, 1.0, 0.5)
    with pytest.raises(ValueError):
        fs.sigma_amplify(3, 0.5, 0.6)
