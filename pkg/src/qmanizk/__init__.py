"""Desk-scale simulation of classically verifiable zero-knowledge proofs for
local-Hamiltonian instances.

Submodules: :mod:`.qsim` (statevector and density-matrix simulator),
:mod:`.hamiltonian` (instances), :mod:`.protocol_qsp` (proofs with a quantum
proving key), :mod:`.fiat_shamir` (sigma protocol and its random-oracle
transform), :mod:`.dual_mode` (CRS-based proofs over oblivious transfer) and
:mod:`.cli`.
"""

__version__ = "0.1.0"
