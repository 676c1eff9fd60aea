"""
Re-running the published NOR parameter set
==========================================

Four lattice sites, labelled by two qubits. Each gate input (f0, f1) starts
as an equal mix of sites (0, f0) and (1, f1); after a fixed evolution time
the occupation of site (1, 1) is read out and compared with NOR(f0, f1).
"""

import numpy as np

from gpgate import constants
from gpgate.gate import GateSpec, Reading, gate_error, potential_permutation_scan
from gpgate.integrator import SplittingScheme

params = constants.paper_params()
evo = constants.paper_evolution()
print(f"alpha = {params.alpha}, tau_final = {evo.tau_final}, dtau = {evo.dtau}")
print("potential (00, 01, 10, 11):", [float(v) for v in params.potential])

# %% readouts under both splittings and all three readings
for scheme in (SplittingScheme.STRANG_DIAGONAL_FIRST, SplittingScheme.LIE):
    for reading in Reading:
        rep = gate_error(params, evo, GateSpec.nor(), scheme, reading)
        devs = "  ".join(f"{d:.4f}" for d in rep.deviations)
        print(f"{scheme.value:22s} {reading.value:12s} deviations {devs}   truth table ok: {rep.truth_table_ok}")

# The thresholded truth table is right, but the worst case (input 00) sits
# far from the quoted per-case figures 0.06, 0.01, 0.04, 0.04.

# %% which site assignment of the same four potential values fits them?
print("\nbest relabellings of the published potential values:")
for perm, devs in potential_permutation_scan()[:4]:
    values = [constants.PAPER_POTENTIAL[i] for i in perm]
    print("  V =", np.round(values, 6), " deviations", np.round(devs, 4))

# Moving the values around the lattice reproduces the quoted figures up to
# their order, which points at a site-labelling difference between the
# original computation and the convention used here.
