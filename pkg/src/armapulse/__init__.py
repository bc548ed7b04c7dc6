"""Optimal single-qubit pulse sequences under ARMA-correlated noise.

Submodules
----------
arma        ARMA noise models: autocovariance, spectra, sampling.
control     Pulse sequences, first-order error vectors and infidelities.
optimizer   Exact QP for amplitude noise, descent for added dephasing.
composite   SK1/BB1 composite pulses and comparison maps.
montecarlo  Exact SU(2) simulation of noisy control.
bounds      Higher-order error budgets and weak-noise diagnostics.
cli         ``armapulse`` command-line front end.
"""

from .arma import ArmaModel, DcNoiseModel, autocovariance, power_spectrum
from .control import NoiseModel, PulseSequence, infidelity_full, uniform_sequence
from .optimizer import QpProblem, optimize_full, solve_qp, sweep_lengths

__version__ = "0.1.0"

__all__ = [
    "ArmaModel",
    "DcNoiseModel",
    "NoiseModel",
    "PulseSequence",
    "QpProblem",
    "autocovariance",
    "infidelity_full",
    "optimize_full",
    "power_spectrum",
    "solve_qp",
    "sweep_lengths",
    "uniform_sequence",
]
