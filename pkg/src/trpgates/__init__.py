"""Twisted-rapid-passage (TRP) gate synthesis.

Simulate quartic TRP sweeps for one and two qubits, score the realized
unitaries against target gates, search sweep parameters, and translate the
result into hardware control waveforms.
"""

from trpgates.hamiltonians import SweepParams, TwoQubitParams
from trpgates.propagator import GateResult, IntegratorOptions, assemble_unitary
from trpgates.targets import target

__all__ = [
    "SweepParams",
    "TwoQubitParams",
    "GateResult",
    "IntegratorOptions",
    "assemble_unitary",
    "target",
]

__version__ = "0.1.0"
