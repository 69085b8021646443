"""Analytic dipolar linewidths and coherence predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..constants import H, MU_0
from ..zeeman import ZeemanFrame

__all__ = [
    "CoherencePrediction",
    "dipolar_linewidth",
    "coherence_from_linewidth",
    "effective_concentration",
    "decoupled_linewidth",
    "angular_factor",
    "abs_quadratic_mean",
    "ABS_ANGULAR_MEAN",
]

#: Mean of |1 - 3 cos^2| over the unit sphere, 4 / (3 sqrt 3).
ABS_ANGULAR_MEAN = 4.0 / (3.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class CoherencePrediction:
    """Linewidth-derived coherence estimate.

    ``T1_ff`` comes from an approximate flip-flop model (see
    :func:`anisodd.ensemble.flip_flop_time`); ``approximate`` marks that.
    """

    fwhm: float
    T2: float
    T1_ff: float = math.inf
    decay_shape: str = "exponential"
    lifetime_cap_applied: bool = False
    fwhm_stderr: float = 0.0
    approximate: bool = False


def dipolar_linewidth(gamma_eff, n_eff):
    """FWHM (Hz) of the resonant dipolar line of a random dilute ensemble.

    Parameters
    ----------
    gamma_eff : float or ndarray
        Effective gyromagnetic ratio, Hz/T.
    n_eff : float or ndarray
        Density of spins flipped by the refocusing pulse, m^-3.
    """
    gamma_eff = np.asarray(gamma_eff, dtype=float)
    n_eff = np.asarray(n_eff, dtype=float)
    if np.any(gamma_eff <= 0) or np.any(n_eff < 0):
        raise ValueError("gamma_eff must be positive and n_eff non-negative")
    out = 2 * math.pi / (9 * math.sqrt(3)) * MU_0 * H * gamma_eff**2 * n_eff
    return float(out) if out.ndim == 0 else out


def coherence_from_linewidth(fwhm: float, T1_ff: float = math.inf, approximate: bool = False,
                             fwhm_stderr: float = 0.0) -> CoherencePrediction:
    """Exponential echo decay from a Lorentzian line, capped at ``2 T1_ff``."""
    if not fwhm > 0:
        raise ValueError("fwhm must be positive")
    t_se = 1.0 / (math.pi * fwhm)
    cap = 2.0 * T1_ff
    capped = cap < t_se
    return CoherencePrediction(
        fwhm=float(fwhm),
        T2=float(min(t_se, cap)),
        T1_ff=float(T1_ff),
        decay_shape="exponential",
        lifetime_cap_applied=bool(capped),
        fwhm_stderr=float(fwhm_stderr),
        approximate=approximate,
    )


def effective_concentration(n, eta):
    """Density of spins actually flipped by a pulse of flip probability ``eta``."""
    eta = np.asarray(eta, dtype=float)
    if np.any((eta < 0) | (eta > 1)):
        raise ValueError("eta must lie in [0, 1]")
    out = eta * np.asarray(n, dtype=float)
    return float(out) if out.ndim == 0 else out


def _coupling_form(frame: ZeemanFrame, c: float) -> np.ndarray:
    """Symmetric ``A`` with ``Jt_I r^3 / K = r_hat . A . r_hat``."""
    def traceless(vs):
        B = sum(np.outer(v, v) for v in vs)
        return np.trace(B) * np.eye(3) - 3 * B

    form_s = traceless((frame.ux, frame.uy)) / 2
    form_i = traceless((frame.uz,))
    return (1 - c) * form_s + c * form_i


def abs_quadratic_mean(A) -> float:
    """Mean of ``|r . A . r|`` over the unit sphere for symmetric ``A``.

    In the eigenframe the azimuthal average of ``|P + Q cos 2 phi|`` is done
    in closed form; the remaining integral over ``cos(theta)`` is adaptive,
    with breakpoints where ``|P| = |Q|``.
    """
    l1, l2, l3 = np.linalg.eigvalsh(np.asarray(A, dtype=float))

    def phi_mean(u):
        s2 = 1 - u * u
        P = s2 * (l1 + l2) / 2 + l3 * u * u
        Q = abs(s2 * (l1 - l2) / 2)
        if abs(P) >= Q:
            return abs(P)
        return 2 / math.pi * (P * math.asin(P / Q) + math.sqrt(Q * Q - P * P))

    pts = []
    for lam in (l1, l2):
        if lam != l3:
            u2 = lam / (lam - l3)
            if 0 < u2 < 1:
                pts.append(math.sqrt(u2))
    scale = max(abs(l1), abs(l3), 1e-300)
    val, _ = integrate.quad(phi_mean, 0.0, 1.0, points=sorted(pts) or None, epsabs=1e-13 * scale,
                            epsrel=1e-12, limit=200)
    return float(val)


def angular_factor(frame: ZeemanFrame, c: float) -> float:
    """Ratio of the sphere-averaged ``|Jt_I r^3|`` to its ``c = 1`` value.

    For a Poisson ensemble the Lorentzian width is linear in this average,
    so the decoupled width is ``dipolar_linewidth * angular_factor``.
    """
    ref = float(frame.uz @ frame.uz) * ABS_ANGULAR_MEAN
    return abs_quadratic_mean(_coupling_form(frame, c)) / ref


def decoupled_linewidth(frame: ZeemanFrame, c: float, n_eff: float) -> float:
    """FWHM (Hz) of the line broadened by ``Jt_I`` under asymmetry ``c``."""
    return dipolar_linewidth(frame.gamma_eff, n_eff) * angular_factor(frame, c)
