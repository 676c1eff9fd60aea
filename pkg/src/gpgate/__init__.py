"""Nonlinear two-qubit gates from Gross-Pitaevskii dynamics on a four-site lattice."""

from .constants import paper_evolution, paper_params
from .gate import (
    GateCase,
    GateReport,
    GateSpec,
    Reading,
    gate_error,
    initial_state,
    nonlinearity_witness,
    readout,
    verify_paper_parameters,
)
from .integrator import (
    NonFiniteState,
    NormDrift,
    SplittingScheme,
    Trajectory,
    diagonal_flow,
    evolve,
    kinetic_flow,
    measure_order,
    rk4_evolve,
    step,
)
from .lattice import EvolutionParams, SiteIndex, StateVector, SystemParams, gp_energy, norm, rhs
from .synth import SearchSpace, SynthesisConfig, SynthesisResult, nelder_mead, synthesize

__version__ = "0.1.0"
