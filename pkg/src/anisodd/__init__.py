"""Coherence limits of dense anisotropic spin ensembles under dynamical decoupling."""

from .dipolar import DipolarCoupling, PairGeometry, isotropic_component, pair_coupling
from .sequence import (
    AverageHamiltonian,
    Pulse,
    PulseSequence,
    TogglingFrame,
    average_hamiltonian,
    effective_asymmetry,
    standard_sequence,
    toggling_frames,
)
from .zeeman import (
    FieldOrientation,
    GTensor,
    ZeemanFrame,
    effective_field_axis,
    effective_g,
    effective_gamma,
    zeeman_frame,
)

__version__ = "0.1.0"

__all__ = [
    "AverageHamiltonian",
    "DipolarCoupling",
    "FieldOrientation",
    "GTensor",
    "PairGeometry",
    "Pulse",
    "PulseSequence",
    "TogglingFrame",
    "ZeemanFrame",
    "average_hamiltonian",
    "effective_asymmetry",
    "effective_field_axis",
    "effective_g",
    "effective_gamma",
    "isotropic_component",
    "pair_coupling",
    "standard_sequence",
    "toggling_frames",
    "zeeman_frame",
    "__version__",
]
