"""Simulation of a two-level quantum repeater built from optomechanical cavities.

Each segment holds two V-type atoms coupled to two optomechanical
cavities; the dynamics reduce to an 11-dimensional closed subspace
evolved exactly with a matrix exponential.
"""

from .evolution import build_s_matrix, evolve, integrate_oracle, stage1_initial_state
from .fock import BasisKet, BasisRegistry, build_basis
from .hamiltonian import ProtocolParameters, build_effective_hamiltonian
from .measurement import linear_entropy, post_select, success_probability
from .protocol import run_protocol, stage1, stage2, sweep

__all__ = [
    "BasisKet",
    "BasisRegistry",
    "ProtocolParameters",
    "build_basis",
    "build_effective_hamiltonian",
    "build_s_matrix",
    "evolve",
    "integrate_oracle",
    "stage1_initial_state",
    "linear_entropy",
    "post_select",
    "success_probability",
    "run_protocol",
    "stage1",
    "stage2",
    "sweep",
]

__version__ = "0.1.0"
