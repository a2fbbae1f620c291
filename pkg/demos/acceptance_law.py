# Acceptance of the padded protocol against the closed-form law, for an
# honest prover and for a prover that teleports a ground state.
import numpy as np

from qmanizk import protocol_qsp as qsp
from qmanizk import qsim
from qmanizk.hamiltonian import ToyCircuit, energy, make_circuit_instance, make_handcrafted_instance
from qmanizk.montecarlo import estimate_acceptance

cases = [
    ("circuit H:0, honest", make_circuit_instance(ToyCircuit.parse("H:0", 1), qsim.QuantumState.basis_state([0])), "honest"),
    ("anti_stabilizer_no(2), ground", make_handcrafted_instance("anti_stabilizer_no", 2), "ground"),
    ("xxzz_frustrated_no(3), ground", make_handcrafted_instance("xxzz_frustrated_no", 3), "ground"),
]

print(f"{'case':34} {'energy':>8} {'exact':>9} {'estimate':>9}  runs")
for label, inst, strategy in cases:
    state = qsp.resolve_strategy(strategy, inst).state
    exact = qsp.acceptance_probability_exact(state, inst)
    for run in (qsp.original_run, qsp.virtual1_run, qsp.virtual2_run):
        est = estimate_acceptance(lambda rng: run(inst, strategy, rng)[0], 20_000, seed=1, workers=1)
        print(f"{label:34} {energy(state, inst.hamiltonian):8.4f} {exact:9.6f} {est.rate:9.6f}  {run.__name__}")

# the diluted gap is tiny; the non-padded NIP verifier sees the energy directly
inst = make_handcrafted_instance("xxzz_frustrated_no", 3)
rng = np.random.default_rng(0)
rate = np.mean([qsp.nip_run(inst, "ground", rng)[0] for _ in range(3000)])
print(f"NIP on xxzz_frustrated_no(3): {rate:.3f}, 1 - lambda_min = {1 - 1/3:.3f}")
