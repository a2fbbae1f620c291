# One non-interactive proof end to end, then a simulated proof that verifies
# because the oracle was reprogrammed at exactly one point.
import numpy as np

from qmanizk import fiat_shamir as fs
from qmanizk.hamiltonian import make_handcrafted_instance

rng = np.random.default_rng(5)
inst = make_handcrafted_instance("ghz_yes", 3)
keys = fs.sigma_preprocess(3, rng)
print("verifier key bases:", keys.verification.bases, "bits:", keys.verification.m.tolist())

ro = fs.ProgrammableOracle(seed=11)
proof = fs.fs_prove(keys.proving, inst, ro, rng)
print("opened slots:", [(o.j, o.x, o.z) for o in proof.opened])
print("verdict:", fs.fs_verify(keys.verification, inst, proof, ro, rng)[0])
print("proof size (JSON bytes):", len(proof.to_json()))

# flip one opened bit: the commitment no longer opens
o = proof.opened[0]
bad = fs.FsProof(proof.msg1, (fs.Opening(o.j, o.x ^ 1, o.z, o.randomness),) + proof.opened[1:])
print("tampered verdict:", fs.fs_verify(keys.verification, inst, bad, ro, rng)[1].reason)

sim_ro = fs.ProgrammableOracle(seed=12)
fake = fs.fs_simulate(keys.proving, inst, sim_ro, rng)
print("simulated verdict:", fs.fs_verify(keys.verification, inst, fake, sim_ro, rng)[0])
print("reprogrammed points:", len(sim_ro.reprogrammed))

# with a 32-bit oracle, binding is gone
pair = fs.find_commitment_collision(fs.ProgrammableOracle(seed=1, output_bits=32), 1 << 20, rng)
print("32-bit collision:", pair[0].com.hex(), pair[0].message, pair[1].message)
