"""Wigner phase-space dynamics of cold atoms in gravity and the three-pulse atom interferometer."""

from .errors import (ConfigError, ConvergenceFailure, ExtrapolationLoss, GridEscape, GridMismatch,
                     GridTooSmall, NonNormalized, NotNormalizable, WignerGravError)
from .phasespace import (ComplexField, GaussianState, GaussianWigner, GridSpec, PositionGrid,
                         RealField, WaveFunction, characteristic_transform, marginal_momentum,
                         marginal_position, phase_space_overlap, wigner_transform)
from .dynamics import AffineFlow, PhysParams, PolynomialPotential, classical_flow, transport
from .interferometer import (EndpointReport, ExitReport, PulseSequence, endpoints,
                             exit_probability_exact, exit_probability_weak, separation)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceFailure", "ExtrapolationLoss", "GridEscape", "GridMismatch",
    "GridTooSmall", "NonNormalized", "NotNormalizable", "WignerGravError",
    "ComplexField", "GaussianState", "GaussianWigner", "GridSpec", "PositionGrid", "RealField",
    "WaveFunction", "characteristic_transform", "marginal_momentum", "marginal_position",
    "phase_space_overlap", "wigner_transform",
    "AffineFlow", "PhysParams", "PolynomialPotential", "classical_flow", "transport",
    "EndpointReport", "ExitReport", "PulseSequence", "endpoints", "exit_probability_exact",
    "exit_probability_weak", "separation",
]
