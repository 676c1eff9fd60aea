"""Reference NOR-gate parameter set, as published with the original gate.

This table is the single source of truth; every command and test reads it
from here. All values are dimensionless (energies in eps, time in tau).
"""

from types import MappingProxyType

from .lattice import EvolutionParams, SystemParams

# alpha / eps
PAPER_ALPHA = 2.350
# final tau
PAPER_TAU_FINAL = 7.665
# integration step
PAPER_DTAU = 7.665e-4
# V(0,0), V(0,1), V(1,0), V(1,1) in units of eps; V(1,1) is the energy reference
PAPER_POTENTIAL = (-0.003554, 2.124, 2.352, 0.0)
# reported per-case distance of the final psi(1,1) from its ideal value,
# cases in (f0, f1) order 00, 01, 10, 11
PAPER_DEVIATIONS = (0.06, 0.01, 0.04, 0.04)

# uniform per-case bound used when the reported figures are not met exactly
RELAXED_BOUND = 0.10

PAPER_CONSTANTS = MappingProxyType({
    "alpha": PAPER_ALPHA,
    "tau_final": PAPER_TAU_FINAL,
    "dtau": PAPER_DTAU,
    "potential": PAPER_POTENTIAL,
    "reported_deviations": PAPER_DEVIATIONS,
})


def paper_params() -> SystemParams:
    return SystemParams(PAPER_ALPHA, PAPER_POTENTIAL)


def paper_evolution(sample_stride: int = 10) -> EvolutionParams:
    return EvolutionParams(PAPER_DTAU, PAPER_TAU_FINAL, sample_stride)
