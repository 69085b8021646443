"""Ensemble statistics: dipolar linewidths, Monte Carlo baths, pulse fidelity."""

from .fidelity import QuadratureError, pi_pulse_fidelity, rabi_flip_probability
from .lattice import Lattice, LatticeError, cell_vectors, load_lattice, parse_lattice, site_density
from .linewidth import (
    ABS_ANGULAR_MEAN,
    CoherencePrediction,
    abs_quadratic_mean,
    angular_factor,
    coherence_from_linewidth,
    decoupled_linewidth,
    dipolar_linewidth,
    effective_concentration,
)
from .montecarlo import (
    MIN_REALIZATIONS,
    InsufficientSamplesError,
    decoupled_coherence,
    decoupled_shifts,
    flip_flop_rates,
    flip_flop_time,
    fwhm_iqr,
    fwhm_iqr_stderr,
    realization_rng,
    required_realizations,
    sample_sphere,
)
from .offresonant import offresonant_broadening, shift_coefficients
from .spec import BathSpecies, EnsembleSpec

#: Longest useful pulse spacing (s) given precession of strongly coupled host
#: nuclei at a few hundred kHz; reported as an advisory only.
NUCLEAR_SPACING_ADVISORY = 0.3e-6

__all__ = [
    "ABS_ANGULAR_MEAN",
    "BathSpecies",
    "CoherencePrediction",
    "EnsembleSpec",
    "InsufficientSamplesError",
    "Lattice",
    "LatticeError",
    "MIN_REALIZATIONS",
    "NUCLEAR_SPACING_ADVISORY",
    "QuadratureError",
    "abs_quadratic_mean",
    "angular_factor",
    "cell_vectors",
    "coherence_from_linewidth",
    "decoupled_coherence",
    "decoupled_linewidth",
    "decoupled_shifts",
    "dipolar_linewidth",
    "effective_concentration",
    "flip_flop_rates",
    "flip_flop_time",
    "fwhm_iqr",
    "fwhm_iqr_stderr",
    "load_lattice",
    "offresonant_broadening",
    "parse_lattice",
    "pi_pulse_fidelity",
    "rabi_flip_probability",
    "realization_rng",
    "required_realizations",
    "sample_sphere",
    "shift_coefficients",
    "site_density",
]
