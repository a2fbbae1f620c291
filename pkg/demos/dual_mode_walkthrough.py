# Binding-mode proofs commit to the pads; hiding-mode proofs can be produced
# from the trapdoor alone, and the sender simulator only reads the payloads
# the verifier chose.
import numpy as np

from qmanizk.dual_mode import ot
from qmanizk.dual_mode import protocol as dm
from qmanizk.hamiltonian import make_handcrafted_instance

rng = np.random.default_rng(3)
inst = make_handcrafted_instance("ghz_yes", 3)

for mode in (ot.BINDING, ot.HIDING):
    crs, td = dm.dm_crsgen(mode, rng)
    keys = dm.dm_preprocess(crs, 3, rng)
    proof = dm.dm_prove(crs, keys.proving, inst, rng)
    ok, _ = dm.dm_verify(crs, keys.verification, inst, proof, rng)
    print(f"{mode:8} honest proof accepted: {ok}  verifier subset {keys.verification.subset}")

crs, td = dm.dm_crsgen(ot.HIDING, rng)
keys = dm.dm_preprocess(crs, 3, rng)
audit = []
fake = dm.dm_simulate(crs, td, keys.proving, inst, rng, audit=audit)
print("simulated proof accepted:", dm.dm_verify(crs, keys.verification, inst, fake, rng)[0])
print("extracted choices:", audit[0]["extraction"].indices, "payloads read:", sorted(set(audit[0]["payloads_read"])))

subset = keys.verification.subset
h = dm.honest_opened_law(keys.proving.rho_p, inst, subset)
s = dm.simulated_opened_law(keys.proving.rho_p, inst, subset)
print(f"opened-slot TV, honest vs simulated: {0.5 * np.abs(h - s).sum():.1e}")
