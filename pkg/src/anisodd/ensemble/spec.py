"""Ensemble and bath descriptions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..dipolar import DEFAULT_MIN_SEPARATION
from ..zeeman import GTensor

__all__ = ["BathSpecies", "EnsembleSpec"]


@dataclass(frozen=True)
class BathSpecies:
    """An off-resonant spin species surrounding the probe spins.

    Parameters
    ----------
    name : str
    kind : {"electron", "nuclear"}
    concentration : float
        Occupied fraction of host sites (1.0 for a fully abundant nucleus).
    site_density : float
        Host site density available to this species, m^-3.
    g : GTensor, optional
        Principal g-values (electron species).
    rotation : ndarray, optional
        Lab frame to the species' g eigenbasis; identity when omitted.
    moment : float, optional
        Nuclear magnetic moment in J/T (signed; nuclear species).
    placement : {"lattice", "continuum"}
    site_label : str, optional
        Lattice site label the species occupies; every site when omitted.
    """

    name: str
    kind: str
    concentration: float
    site_density: float
    g: Optional[GTensor] = None
    rotation: Optional[np.ndarray] = None
    moment: Optional[float] = None
    placement: str = "lattice"
    site_label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("electron", "nuclear"):
            raise ValueError(f"bath species {self.name!r}: kind must be 'electron' or 'nuclear'")
        if not 0.0 <= self.concentration <= 1.0:
            raise ValueError(f"bath species {self.name!r}: concentration must lie in [0, 1]")
        if not self.site_density > 0:
            raise ValueError(f"bath species {self.name!r}: site density must be positive")
        if self.kind == "electron" and self.g is None:
            raise ValueError(f"bath species {self.name!r}: electron species needs a g-tensor")
        if self.kind == "nuclear" and self.moment is None:
            raise ValueError(f"bath species {self.name!r}: nuclear species needs a moment")
        if self.placement not in ("lattice", "continuum"):
            raise ValueError(f"bath species {self.name!r}: placement must be 'lattice' or 'continuum'")

    @property
    def density(self) -> float:
        return self.concentration * self.site_density


@dataclass(frozen=True)
class EnsembleSpec:
    """Resonant ensemble and its environment.

    ``concentration`` is the resonant fraction of host sites, ``eta`` the
    fraction of those actually flipped by a refocusing pulse.
    """

    concentration: float
    site_density: float
    eta: float = 1.0
    bath: tuple = field(default_factory=tuple)
    thermal: bool = False
    temperature: Optional[float] = None
    field_tesla: Optional[float] = None
    min_separation: float = DEFAULT_MIN_SEPARATION

    def __post_init__(self):
        if not 0.0 < self.concentration <= 1.0:
            raise ValueError("concentration must lie in (0, 1]")
        if not self.site_density > 0:
            raise ValueError("site density must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.thermal and not (self.temperature and self.temperature > 0 and self.field_tesla):
            raise ValueError("thermal polarisation needs a positive temperature and field")
        object.__setattr__(self, "bath", tuple(self.bath))

    @property
    def n(self) -> float:
        """Resonant-spin density, m^-3."""
        return self.concentration * self.site_density

    @property
    def n_eff(self) -> float:
        """Density of resonant spins flipped by a pulse, m^-3."""
        return self.eta * self.n
