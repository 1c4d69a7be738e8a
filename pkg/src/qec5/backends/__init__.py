"""Simulation engines: dense state vector and Pauli frame."""
from .frame import FrameResult, FrameSimulator, NonCliffordError, pf_run
from .statevector import MemoryBudgetError, StateVector, stabilizer_expectation, sv_run

__all__ = [
    "FrameResult", "FrameSimulator", "NonCliffordError", "pf_run",
    "MemoryBudgetError", "StateVector", "stabilizer_expectation", "sv_run",
]
