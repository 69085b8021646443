"""Quasi-static broadening of the probe transition by off-resonant bath spins.

Only the longitudinal part of each bath moment is kept (its transverse part
precesses at a different frequency and averages out). The probe transition
shifts by ``mu_B uz . B_dip / h`` where ``B_dip`` is the bath dipole field.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..constants import H, K_B, MU_0, MU_B
from ..zeeman import FieldOrientation, ZeemanFrame, zeeman_frame
from .lattice import Lattice, LatticeError
from .montecarlo import MIN_REALIZATIONS, InsufficientSamplesError, fwhm_iqr, realization_rng
from .spec import BathSpecies, EnsembleSpec

__all__ = ["offresonant_broadening", "species_moment_axis", "shift_coefficients"]

# enumerate lattice sites explicitly below this many candidates
_ENUMERATE_LIMIT = 200_000


def _lab(R, v):
    return v if R is None else np.asarray(R, dtype=float).T @ v


def species_moment_axis(species: BathSpecies, b_lab: np.ndarray):
    """Lab-frame vector ``w`` with bath moment ``m = scale * s * w`` and its scale (J/T).

    Also returns the Zeeman energy per unit field of the ``s = +1`` state
    (J/T), used for thermal populations.
    """
    if species.kind == "nuclear":
        return b_lab, float(species.moment), -float(species.moment)
    R = species.rotation
    b_eig = b_lab if R is None else np.asarray(R, dtype=float) @ b_lab
    fr = zeeman_frame(species.g, FieldOrientation.from_vector(b_eig))
    return _lab(R, fr.uz), -MU_B / 2, MU_B / 2 * fr.g_eff


def shift_coefficients(uz_probe: np.ndarray, w: np.ndarray, scale: float, pos: np.ndarray) -> np.ndarray:
    """Probe shift (Hz) per unit bath spin ``s`` for bath moments at ``pos`` (m)."""
    r = np.linalg.norm(pos, axis=1)
    rh = pos / r[:, None]
    b_field = MU_0 * scale / (4 * math.pi * r**3)
    geom = 3 * (rh @ uz_probe) * (rh @ w) - uz_probe @ w
    return MU_B * b_field * geom / H


def _spin_states(rng, k, p_plus):
    return np.where(rng.random(k) < p_plus, 1.0, -1.0)


def offresonant_broadening(spec: EnsembleSpec, frame: ZeemanFrame, realizations: int = 2000, seed: int = 0,
                           lattice: Optional[Lattice] = None, rotation=None, n_target: float = 400,
                           centre_label: Optional[str] = None) -> dict:
    """FWHM (Hz) of the probe shift distribution for each bath species.

    Parameters
    ----------
    spec : EnsembleSpec
        Supplies the bath species and the thermal flag.
    frame : ZeemanFrame
        Probe frame (expressed in the probe g eigenbasis).
    lattice : Lattice, optional
        Required for lattice-placed species; vectors in the lab frame.
    rotation : ndarray, optional
        Lab frame to probe eigenbasis. Identity when omitted.
    n_target : float
        Mean number of occupied bath sites inside the sampling sphere.
    centre_label : str, optional
        Lattice label of the probe site.
    """
    if realizations < MIN_REALIZATIONS:
        raise InsufficientSamplesError(realizations, MIN_REALIZATIONS)
    uz = _lab(rotation, np.asarray(frame.uz))
    b_lab = _lab(rotation, frame.b.as_array())
    out = {}
    for k_sp, sp in enumerate(spec.bath):
        if sp.density == 0:
            out[sp.name] = 0.0
            continue
        if sp.placement == "lattice" and lattice is None:
            raise LatticeError(f"bath species {sp.name!r} is lattice-placed but no lattice file was given")
        w, scale, e_plus = species_moment_axis(sp, b_lab)
        p_plus = 0.5
        if spec.thermal:
            x = e_plus * spec.field_tesla / (K_B * spec.temperature)
            p_plus = 1.0 / (1.0 + math.exp(min(2 * x, 700.0)))
        # abundant species converge slowly in 1/r^6, so sample a larger sphere
        n_occ = n_target if sp.concentration <= 0.01 else max(n_target, 2000)
        radius = (3 * n_occ / (4 * math.pi * sp.density)) ** (1 / 3)
        n_sites = 4 / 3 * math.pi * radius**3 * sp.site_density
        shifts = np.empty(realizations)
        seed_k = [*np.atleast_1d(seed).tolist(), k_sp]
        if sp.placement == "lattice" and n_sites < _ENUMERATE_LIMIT:
            # dense species: enumerate the sites once, draw occupation per realisation
            pos = lattice.sites_within(radius, centre_label, sp.site_label)
            a = shift_coefficients(uz, w, scale, pos)
            for j in range(realizations):
                rng = realization_rng(seed_k, j)
                occ = rng.random(len(a)) < sp.concentration
                s = _spin_states(rng, int(occ.sum()), p_plus)
                shifts[j] = math.fsum(a[occ] * s)
        else:
            for j in range(realizations):
                rng = realization_rng(seed_k, j)
                count = rng.poisson(n_occ)
                if sp.placement == "lattice":
                    pos = lattice.random_sites(rng, count, radius, centre_label, sp.site_label)
                else:
                    v = rng.standard_normal((count, 3))
                    v *= (radius * rng.random(count) ** (1 / 3) / np.linalg.norm(v, axis=1))[:, None]
                    pos = v[np.linalg.norm(v, axis=1) >= spec.min_separation]
                s = _spin_states(rng, len(pos), p_plus)
                shifts[j] = math.fsum(shift_coefficients(uz, w, scale, pos) * s) if len(pos) else 0.0
        out[sp.name] = fwhm_iqr(shifts)
    return out
