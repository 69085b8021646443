"""Monte Carlo statistics of a central spin in a random dipolar ensemble.

Each realisation draws its own generator from ``SeedSequence(seed,
spawn_key=(i,))`` so results do not depend on the order or the process in
which realisations are evaluated.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from ..constants import H, HBAR
from ..dipolar import secular_coefficients
from ..sequence import redistribute
from ..zeeman import ZeemanFrame
from .linewidth import CoherencePrediction, coherence_from_linewidth
from .spec import EnsembleSpec

__all__ = [
    "InsufficientSamplesError",
    "MIN_REALIZATIONS",
    "realization_rng",
    "fwhm_iqr",
    "fwhm_iqr_stderr",
    "required_realizations",
    "sample_sphere",
    "decoupled_shifts",
    "decoupled_coherence",
    "flip_flop_rates",
    "flip_flop_time",
]

#: Fewest realisations accepted for a width estimate.
MIN_REALIZATIONS = 100

CouplingFn = Callable[[np.ndarray, np.ndarray], tuple]


class InsufficientSamplesError(ValueError):
    def __init__(self, got: int, required: int, what: str = "realizations"):
        super().__init__(f"{got} {what} too few; at least {required} required")
        self.required = required


def realization_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def fwhm_iqr(samples) -> float:
    """Lorentzian FWHM estimated as the interquartile range."""
    q1, q3 = np.percentile(np.asarray(samples, dtype=float), [25, 75])
    return float(q3 - q1)


def fwhm_iqr_stderr(fwhm: float, n: int) -> float:
    """Asymptotic standard error of :func:`fwhm_iqr` for Lorentzian samples."""
    return fwhm * math.pi / (2 * math.sqrt(n))


def required_realizations(rel_precision: float) -> int:
    """Realisations needed for a given relative standard error of the IQR width."""
    return int(math.ceil((math.pi / (2 * rel_precision)) ** 2))


def _check_realizations(realizations: int, rel_precision: Optional[float]):
    need = MIN_REALIZATIONS
    if rel_precision is not None:
        need = max(need, required_realizations(rel_precision))
    if realizations < need:
        raise InsufficientSamplesError(realizations, need)


def sample_sphere(rng: np.random.Generator, density: float, n_target: float, min_separation: float):
    """Poisson points around the origin in a sphere holding ``n_target`` on average.

    Returns ``(r, r_hat)``; points closer than ``min_separation`` are dropped.
    """
    radius = (3 * n_target / (4 * math.pi * density)) ** (1 / 3)
    k = rng.poisson(n_target)
    v = rng.standard_normal((k, 3))
    r_hat = v / np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.random(k) ** (1 / 3)
    keep = r >= min_separation
    return r[keep], r_hat[keep]


def _couplings(frame: ZeemanFrame, coupling: Optional[CouplingFn]) -> CouplingFn:
    if coupling is not None:
        return coupling
    return lambda r, r_hat: secular_coefficients(frame, r, r_hat)


def decoupled_shifts(frame: ZeemanFrame, c: float, spec: EnsembleSpec, realizations: int, seed: int = 0,
                     n_target: float = 400, coupling: Optional[CouplingFn] = None, start: int = 0) -> np.ndarray:
    """Central-spin frequency shifts (Hz) from randomly oriented flipped neighbours.

    Each neighbour in state ``s = +-1`` shifts the central transition by
    ``2 Jt_I s / h``. ``coupling(r, r_hat) -> (J_S, J_I)`` overrides the
    dipolar coefficients (for tests).
    """
    fn = _couplings(frame, coupling)
    out = np.empty(realizations)
    for j in range(realizations):
        rng = realization_rng(seed, start + j)
        r, r_hat = sample_sphere(rng, spec.n_eff, n_target, spec.min_separation)
        s = rng.choice((-1.0, 1.0), size=len(r))
        j_s, j_i = fn(r, r_hat)
        _, jt_i = redistribute(np.asarray(j_s), np.asarray(j_i), c)
        out[j] = math.fsum(2 * jt_i * s / H)
    return out


def decoupled_coherence(frame: ZeemanFrame, c: float, spec: EnsembleSpec, realizations: int = 2000,
                        seed: int = 0, n_target: float = 400, T1_ff: float = math.inf,
                        rel_precision: Optional[float] = None,
                        coupling: Optional[CouplingFn] = None) -> CoherencePrediction:
    """Monte Carlo linewidth and T2 under a sequence of asymmetry ``c``.

    Parameters
    ----------
    frame : ZeemanFrame
        Zeeman frame of the resonant spins.
    c : float
        Asymmetry of the decoupling sequence (1 for spin echo).
    spec : EnsembleSpec
        Supplies ``n_eff`` and the minimum separation.
    realizations : int
        Number of bath configurations (one central spin each).
    rel_precision : float, optional
        Requested relative standard error of the width; too few
        realisations raise :class:`InsufficientSamplesError`.
    T1_ff : float
        Lifetime used for the ``T2 <= 2 T1`` cap.
    """
    _check_realizations(realizations, rel_precision)
    if spec.n_eff <= 0:
        return CoherencePrediction(fwhm=0.0, T2=2 * T1_ff, T1_ff=T1_ff,
                                   lifetime_cap_applied=math.isfinite(T1_ff))
    shifts = decoupled_shifts(frame, c, spec, realizations, seed, n_target, coupling)
    fwhm = fwhm_iqr(shifts)
    return coherence_from_linewidth(fwhm, T1_ff, approximate=math.isfinite(T1_ff),
                                    fwhm_stderr=fwhm_iqr_stderr(fwhm, realizations))


def flip_flop_rates(frame: ZeemanFrame, c: float, spec: EnsembleSpec, inhomogeneous_linewidth: float,
                    realizations: int = 2000, seed: int = 0, n_target: float = 400,
                    coupling: Optional[CouplingFn] = None) -> np.ndarray:
    """Per-realisation flip-flop rates (1/s) of a central spin. Approximate model.

    Golden rule with the pair detuning taken as the convolution of two
    Lorentzians of FWHM ``inhomogeneous_linewidth``:
    ``W = sum_j 8 Jt_S_j**2 / (hbar h Gamma)``, summed over resonant partners.
    """
    if not inhomogeneous_linewidth > 0:
        raise ValueError("inhomogeneous linewidth must be positive for the flip-flop gate")
    fn = _couplings(frame, coupling)
    cs = np.atleast_1d(np.asarray(c, dtype=float))
    rates = np.empty((realizations, len(cs)))
    gate = 8.0 / (HBAR * H * inhomogeneous_linewidth)
    for j in range(realizations):
        rng = realization_rng(seed, j)
        r, r_hat = sample_sphere(rng, spec.n, n_target, spec.min_separation)
        j_s, j_i = fn(r, r_hat)
        for k, ck in enumerate(cs):
            jt_s, _ = redistribute(np.asarray(j_s), np.asarray(j_i), ck)
            rates[j, k] = gate * math.fsum(np.asarray(jt_s) ** 2)
    return rates[:, 0] if np.ndim(c) == 0 else rates


def flip_flop_time(frame: ZeemanFrame, c: float, spec: EnsembleSpec, inhomogeneous_linewidth: float,
                   realizations: int = 2000, seed: int = 0, n_target: float = 400,
                   coupling: Optional[CouplingFn] = None) -> float:
    """Flip-flop lifetime (s) from the median rate. Approximate model.

    Returns ``inf`` when every redistributed flip-flop coefficient vanishes;
    an array when ``c`` is a sequence.
    """
    _check_realizations(realizations, None)
    rates = flip_flop_rates(frame, c, spec, inhomogeneous_linewidth, realizations, seed, n_target, coupling)
    med = np.median(rates, axis=0)
    T = np.where(med == 0.0, np.inf, 1.0 / np.where(med == 0.0, 1.0, med))
    return float(T) if np.ndim(c) == 0 else T
