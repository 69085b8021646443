"""Flip probability of a square pulse averaged over a Lorentzian line."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

__all__ = ["pi_pulse_fidelity", "rabi_flip_probability", "QuadratureError"]


class QuadratureError(RuntimeError):
    pass


def rabi_flip_probability(rabi, detuning_hz, t_p):
    """Transition probability of a square pulse at detuning ``detuning_hz`` (Hz).

    ``rabi`` is the angular Rabi frequency (rad/s).
    """
    w2 = rabi**2 + (2 * np.pi * np.asarray(detuning_hz)) ** 2
    return rabi**2 / w2 * np.sin(np.sqrt(w2) * t_p / 2) ** 2


def pi_pulse_fidelity(rabi: float, inhomogeneous_fwhm: float, t_p: float, epsabs: float = 1e-10) -> float:
    """Mean flip probability of a square pulse over a Lorentzian line.

    Parameters
    ----------
    rabi : float
        Angular Rabi frequency, rad/s.
    inhomogeneous_fwhm : float
        Lorentzian FWHM of the transition, Hz. Zero gives the on-resonance value.
    t_p : float
        Pulse length, s.

    Notes
    -----
    Breakpoints in detuning are geometric up to one Rabi width and then fall
    every half oscillation period of the pulse response, out to ``D = 300``
    Rabi widths. Beyond ``D`` only the smooth half ``rabi**2 / (2 W**2)`` is
    kept, written in ``v = atan(hw / delta)`` so the Lorentzian weight is
    ``dv / pi``; the dropped oscillating half is below ``(rabi / 2 pi D)**2 / 2``,
    i.e. under 6e-6.
    """
    if not (rabi > 0 and t_p > 0 and inhomogeneous_fwhm >= 0):
        raise ValueError("rabi and t_p must be positive, fwhm non-negative")
    if inhomogeneous_fwhm == 0:
        return float(rabi_flip_probability(rabi, 0.0, t_p))
    hw = inhomogeneous_fwhm / 2

    def full(d):
        return hw / math.pi / (d * d + hw * hw) * rabi_flip_probability(rabi, d, t_p)

    def smooth_tail(v):
        w2 = rabi**2 + (2 * math.pi * hw / math.tan(v)) ** 2
        return rabi**2 / (2 * w2) / math.pi

    f_rabi = rabi / (2 * math.pi)
    d_max = 300 * f_rabi
    near = np.geomspace(1e-2 * min(hw, f_rabi), f_rabi, 40)
    far = np.arange(f_rabi, d_max, 0.5 / t_p)
    cuts = np.unique(np.concatenate([[0.0], near, far, [d_max]]))
    # drop rounding slivers, keeping both ends
    keep = np.r_[True, np.diff(cuts) > 1e-6 * min(near[0], 0.5 / t_p)]
    cuts = cuts[keep]
    cuts[-1] = d_max
    n_chunks = len(cuts) - 1
    parts, err = [], 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(cuts[:-1], cuts[1:]):
                v, e = integrate.quad(full, a, b, limit=200, epsabs=epsabs / n_chunks, epsrel=1e-10)
                parts.append(2 * v)
                err += 2 * e
            v, e = integrate.quad(smooth_tail, 0.0, math.atan(hw / d_max), limit=200, epsabs=epsabs)
            parts.append(2 * v)
            err += 2 * e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"fidelity quadrature did not converge: {exc}") from None
    if err > 1e-4:
        raise QuadratureError(f"fidelity quadrature error estimate {err:.2e} exceeds 1e-4")
    return float(min(max(math.fsum(parts), 0.0), 1.0))
