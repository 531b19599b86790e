"""Secure transmission over the two-user MIMO interference channel with local output feedback.

Submodules
----------
matcore    complex matrix helpers (sampling, block-diagonal, rank, log-det)
channel    block-fading CSI and distance trajectories
phaseplan  phase-duration plans, constraints, closed-form and grid optimizers
schemes    end-to-end scheme execution and zero-forcing receivers
verify     rank-chain matrices and appendix factorizations
rates      Monte Carlo finite-SNR rates and SDoF slopes
sdof       closed-form sum-SDoF bounds and the reference table
cli        command-line front end
"""

from .exceptions import DecodeError, InvalidParameterError
from .phaseplan import AntennaConfig, PhasePlan, Regime, Scheme, optimal_plan

__version__ = "0.1.0"

__all__ = [
    "AntennaConfig",
    "DecodeError",
    "InvalidParameterError",
    "PhasePlan",
    "Regime",
    "Scheme",
    "optimal_plan",
    "__version__",
]
