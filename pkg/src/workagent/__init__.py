"""Quantum work measurement with a finite-mass oscillator agent."""

__version__ = "0.1.0"

from .hilbert import (
    AgentBasis,
    CompositeState,
    SystemBasis,
    TruncationError,
    coherent_state,
    enumerate_fock,
)
from .model import ModelParams, total_hamiltonian
from .propagate import DriveProtocol, evolve_autonomous, evolve_driven

__all__ = [
    "AgentBasis",
    "CompositeState",
    "SystemBasis",
    "TruncationError",
    "coherent_state",
    "enumerate_fock",
    "ModelParams",
    "total_hamiltonian",
    "DriveProtocol",
    "evolve_autonomous",
    "evolve_driven",
]
