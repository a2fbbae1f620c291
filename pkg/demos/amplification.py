# Error of the threshold test over independent NIP copies, next to the
# Hoeffding bound for the single-copy gap.
import numpy as np

from qmanizk import protocol_qsp as qsp
from qmanizk.hamiltonian import make_handcrafted_instance

yes = make_handcrafted_instance("bell_stabilizer_yes", 2)
no = make_handcrafted_instance("xxzz_frustrated_no", 3)
c, s = 1.0, 2 / 3
rng = np.random.default_rng(9)

print(" reps  completeness_err  soundness_err  bound")
for reps in (1, 5, 20, 40, qsp.hoeffding_reps(c, s, 0.01)):
    amp = qsp.amplify(qsp.NIP, reps, c, s)
    errs = []
    for inst, prover, want in ((yes, qsp.nip_prove, False), (no, qsp.nip_cheat_prove, True)):
        wrong = 0
        for _ in range(300):
            keys = amp.setup(inst.num_qubits, rng)
            ok, _ = amp.verify(keys.verification, inst, amp.prove(keys.proving, inst, rng, prover), rng)
            wrong += ok == want
        errs.append(wrong / 300)
    print(f"{reps:5} {errs[0]:17.3f} {errs[1]:14.3f}  {qsp.hoeffding_bound(reps, c, s):.3f}")
