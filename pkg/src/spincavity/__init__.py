"""Cavity-engineered spin-1 dynamics and spin-nematic squeezing.

Simulation engine for an ensemble of spin-1 atoms coupled to a lossy cavity
via Raman transitions: laboratory-to-model parameter mapping, exact Lindblad
and Monte-Carlo wavefunction evolution, squeezing quantification against the
undepleted-mode closed form, and SU(2) Q-function visualisation.
"""

from ._version import __version__
from .errors import CapacityError, ConfigError, IntegrationError, ValidationFailure
from .hilbert import FockState, SymmetricBasis, build_basis
from .models import JointBasis, LindbladModel, dispersive, full_dicke, spin_mixing
from .params import (
    DispersiveParams,
    EffectiveDickeParams,
    MicroscopicParams,
    dicke_params,
    dispersive_params,
    feasibility,
)

__all__ = [
    "__version__",
    "CapacityError",
    "ConfigError",
    "IntegrationError",
    "ValidationFailure",
    "FockState",
    "SymmetricBasis",
    "build_basis",
    "JointBasis",
    "LindbladModel",
    "dispersive",
    "full_dicke",
    "spin_mixing",
    "DispersiveParams",
    "EffectiveDickeParams",
    "MicroscopicParams",
    "dicke_params",
    "dispersive_params",
    "feasibility",
]
