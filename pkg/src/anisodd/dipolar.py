"""Secular dipolar couplings between two identical, resonant spins.

In the Zeeman eigenbasis the pair Hamiltonian is

    H = 2 J_S (s+ s- + s- s+) + J_I sz sz = J_S (sx sx + sy sy) + J_I sz sz,

and ``alpha = (2 J_S + J_I) / 3`` is its rotation-invariant (Heisenberg) part.
All coefficients are in joules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import H, MU_0, MU_B
from .zeeman import GTensor, ZeemanFrame

__all__ = [
    "DEFAULT_MIN_SEPARATION",
    "PairGeometry",
    "DipolarCoupling",
    "pair_coupling",
    "secular_coefficients",
    "isotropic_component",
    "spectral_diffusion_from_gamma",
    "dipolar_prefactor",
]

#: Smallest accepted separation (m) when no lattice information is supplied.
#: Typical nearest cation-cation distance in oxide hosts.
DEFAULT_MIN_SEPARATION = 3.0e-10


def dipolar_prefactor(r):
    """``mu0 / (4 pi r^3) * (mu_B / 2)^2`` in joules (r in metres)."""
    return MU_0 / (4 * np.pi * np.asarray(r, dtype=float) ** 3) * (MU_B / 2) ** 2


@dataclass(frozen=True)
class PairGeometry:
    r: float
    r_hat: tuple

    def __post_init__(self):
        r = float(self.r)
        if not (np.isfinite(r) and r > 0):
            raise ValueError(f"separation must be positive, got {r!r}")
        rh = np.asarray(self.r_hat, dtype=float)
        if rh.shape != (3,) or abs(np.linalg.norm(rh) - 1.0) > 1e-12:
            raise ValueError("r_hat must be a unit 3-vector")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "r_hat", tuple(rh))

    @classmethod
    def from_vector(cls, v) -> "PairGeometry":
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v)
        return cls(r, tuple(v / r))

    def delta(self, frame: ZeemanFrame) -> float:
        """Angle between the bond and the direction of ``uz``."""
        uz = frame.uz / np.linalg.norm(frame.uz)
        return float(np.arccos(np.clip(uz @ np.asarray(self.r_hat), -1.0, 1.0)))


@dataclass(frozen=True)
class DipolarCoupling:
    J_S: float
    J_I: float

    @property
    def alpha(self) -> float:
        return (2.0 * self.J_S + self.J_I) / 3.0


def _check_separation(r, min_separation):
    r = np.asarray(r, dtype=float)
    if np.any(r < min_separation):
        raise ValueError(
            f"separation {float(np.min(r)):.3e} m below minimum {min_separation:.3e} m"
        )


def secular_coefficients(frame: ZeemanFrame, r, r_hat):
    """Vectorised ``(J_S, J_I)`` for arrays of separations and unit bonds.

    ``r`` has shape (...) and ``r_hat`` shape (..., 3). No separation check.
    """
    r_hat = np.asarray(r_hat, dtype=float)
    k = dipolar_prefactor(r)
    ax = r_hat @ frame.ux
    ay = r_hat @ frame.uy
    az = r_hat @ frame.uz
    two_js = k * (frame.ux @ frame.ux + frame.uy @ frame.uy - 3 * ax**2 - 3 * ay**2)
    j_i = k * (frame.uz @ frame.uz - 3 * az**2)
    return two_js / 2, j_i


def pair_coupling(
    frame: ZeemanFrame, geom: PairGeometry, min_separation: float = DEFAULT_MIN_SEPARATION
) -> DipolarCoupling:
    """Flip-flop and spectral-diffusion coefficients for one like pair."""
    _check_separation(geom.r, min_separation)
    j_s, j_i = secular_coefficients(frame, geom.r, np.asarray(geom.r_hat))
    return DipolarCoupling(float(j_s), float(j_i))


def isotropic_component(
    g: GTensor, geom: PairGeometry, min_separation: float = DEFAULT_MIN_SEPARATION
) -> float:
    """Heisenberg coefficient from the g-values and bond direction alone.

    Field independent. Identical to ``pair_coupling(...).alpha`` for any field.
    """
    _check_separation(geom.r, min_separation)
    rh = np.asarray(geom.r_hat)
    ga = g.as_array()
    return float(MU_0 * MU_B**2 / (48 * np.pi * geom.r**3) * np.sum(ga**2 * (1 - 3 * rh**2)))


def spectral_diffusion_from_gamma(gamma_eff, r, cos_delta):
    """``J_I`` from the effective gyromagnetic ratio and bond angle (joules)."""
    r = np.asarray(r, dtype=float)
    return MU_0 / (4 * np.pi * r**3) * (H * gamma_eff) ** 2 / 4 * (1 - 3 * np.asarray(cos_delta) ** 2)
