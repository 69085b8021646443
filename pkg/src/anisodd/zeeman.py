"""Zeeman-frame geometry for an effective spin-1/2 with a diagonal g-tensor.

All vectors are expressed in the g-tensor eigenbasis. The moment of a spin is
decomposed onto the qubit Pauli operators of the Zeeman eigenbasis,

    m = -(mu_B / 2) * (ux sigma_x + uy sigma_y + uz sigma_z),

and the three direction vectors ``ux, uy, uz`` are what the dipolar module
consumes. They are generally not orthogonal, but the two transverse ones are
perpendicular to the applied field and ``B_hat . uz = g_eff``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import MU_B_OVER_H

__all__ = [
    "GTensor",
    "FieldOrientation",
    "ZeemanFrame",
    "diagonalize_g_matrix",
    "effective_field_axis",
    "effective_g",
    "effective_gamma",
    "moment_vectors",
    "zeeman_frame",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GTensor:
    """Principal values of a diagonal g-tensor."""

    gx: float
    gy: float
    gz: float

    def __post_init__(self):
        for name in ("gx", "gy", "gz"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.gx, self.gy, self.gz])

    @property
    def is_isotropic(self) -> bool:
        return self.gx == self.gy == self.gz


@dataclass(frozen=True)
class FieldOrientation:
    """Static-field unit vector in the g-tensor eigenbasis.

    ``B`` (tesla) is optional; ratios and couplings never need it.
    """

    bx: float
    by: float
    bz: float
    B: Optional[float] = None

    def __post_init__(self):
        v = np.array([self.bx, self.by, self.bz], dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("field components must be finite")
        if abs(v @ v - 1.0) > 1e-12:
            raise ValueError(f"field direction must be a unit vector, |b|^2 = {v @ v!r}")
        if self.B is not None and not (np.isfinite(self.B) and self.B >= 0):
            raise ValueError("field magnitude must be non-negative")
        for name, x in zip(("bx", "by", "bz"), v):
            object.__setattr__(self, name, float(x))

    @classmethod
    def from_vector(cls, v, B=None, rotation=None) -> "FieldOrientation":
        """Normalise ``v``; ``rotation`` maps lab-frame vectors into the g eigenbasis."""
        v = np.asarray(v, dtype=float)
        if rotation is not None:
            v = np.asarray(rotation, dtype=float) @ v
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("zero field direction")
        v = v / n
        return cls(*v, B=B)

    @classmethod
    def from_angles(cls, theta: float, phi: float, B=None) -> "FieldOrientation":
        st = np.sin(theta)
        return cls.from_vector([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], B=B)

    def as_array(self) -> np.ndarray:
        return np.array([self.bx, self.by, self.bz])


@dataclass(frozen=True)
class ZeemanFrame:
    g: GTensor
    b: FieldOrientation
    b_eff: np.ndarray
    g_eff: float
    gamma_eff: float  # Hz/T
    theta: float
    phi: float
    ux: np.ndarray
    uy: np.ndarray
    uz: np.ndarray = field(repr=False)

    @property
    def u(self) -> np.ndarray:
        """Stacked (3, 3) array with rows ux, uy, uz."""
        return np.stack([self.ux, self.uy, self.uz])


def diagonalize_g_matrix(matrix) -> tuple[GTensor, np.ndarray]:
    """Split a symmetric lab-frame g matrix into principal values and a rotation.

    Returns ``(g, R)`` with ``R @ v_lab`` giving components in the eigenbasis.
    Principal values are sorted ascending.
    """
    m = np.asarray(matrix, dtype=float)
    if m.shape != (3, 3):
        raise ValueError("g matrix must be 3x3")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * np.abs(m).max()):
        raise ValueError("g matrix must be symmetric")
    w, v = np.linalg.eigh(m)
    if np.linalg.det(v) < 0:
        v[:, 0] = -v[:, 0]
    return GTensor(*w), v.T.copy()


def moment_vectors(g, b):
    """Vectorised Zeeman-frame quantities.

    Parameters
    ----------
    g, b : array_like, shape (..., 3)
        Principal g-values and unit field vectors (broadcastable).

    Returns
    -------
    dict of arrays: ``b_eff`` (...,3), ``g_eff`` (...), ``gamma_eff`` (...),
    ``theta``, ``phi`` (...), ``ux``, ``uy``, ``uz`` (...,3).
    """
    g = np.asarray(g, dtype=float)
    b = np.asarray(b, dtype=float)
    gb = g * b
    g_eff = np.linalg.norm(gb, axis=-1)
    b_eff = gb / g_eff[..., None]
    theta = np.arctan2(np.hypot(b_eff[..., 0], b_eff[..., 1]), b_eff[..., 2])
    # phi is undefined on the pole; pin it to zero there
    on_pole = np.hypot(b_eff[..., 0], b_eff[..., 1]) == 0.0
    phi = np.where(on_pole, 0.0, np.arctan2(b_eff[..., 1], b_eff[..., 0]))

    gx, gy, gz = g[..., 0], g[..., 1], g[..., 2]
    gx, gy, gz = np.broadcast_arrays(gx, gy, gz, theta)[:3]
    c2, s2 = np.cos(theta / 2) ** 2, np.sin(theta / 2) ** 2
    st, ct = np.sin(theta), np.cos(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    c2p, s2p = np.cos(2 * phi), np.sin(2 * phi)
    ux = np.stack([gx * (c2 - s2 * c2p), -gy * s2 * s2p, -gz * st * cp], axis=-1)
    uy = np.stack([-gx * s2 * s2p, gy * (c2 + s2 * c2p), -gz * st * sp], axis=-1)
    uz = np.stack([gx * st * cp, gy * st * sp, gz * ct], axis=-1)

    gamma_eff = MU_B_OVER_H * np.sqrt(
        np.sum(g**4 * b**2, axis=-1) / np.sum(g**2 * b**2, axis=-1)
    )
    return dict(
        b_eff=b_eff, g_eff=g_eff, gamma_eff=gamma_eff, theta=theta, phi=phi,
        ux=ux, uy=uy, uz=uz,
    )


def effective_field_axis(g: GTensor, b: FieldOrientation) -> np.ndarray:
    """Unit precession axis: the g-weighted field direction."""
    gb = g.as_array() * b.as_array()
    n = np.linalg.norm(gb)
    assert n > 0.0, "positive g and unit b cannot give a null precession axis"
    return gb / n


def effective_g(g: GTensor, b: FieldOrientation) -> float:
    """Splitting g-factor; the Zeeman levels sit at +-mu_B g_eff B / 2."""
    return float(np.linalg.norm(g.as_array() * b.as_array()))


def effective_gamma(g: GTensor, b: FieldOrientation) -> float:
    """Effective gyromagnetic ratio (Hz/T) entering dipolar couplings.

    Weighted by g**4 rather than g**2, so it differs from
    ``MU_B_OVER_H * effective_g`` whenever the tensor is anisotropic.
    """
    ga, ba = g.as_array(), b.as_array()
    return float(MU_B_OVER_H * np.sqrt(np.sum(ga**4 * ba**2) / np.sum(ga**2 * ba**2)))


def zeeman_frame(g: GTensor, b: FieldOrientation) -> ZeemanFrame:
    """Full Zeeman frame: effective axis, angles and moment direction vectors."""
    q = moment_vectors(g.as_array(), b.as_array())
    return ZeemanFrame(
        g=g,
        b=b,
        b_eff=_frozen(q["b_eff"]),
        g_eff=float(q["g_eff"]),
        gamma_eff=float(q["gamma_eff"]),
        theta=float(q["theta"]),
        phi=float(q["phi"]),
        ux=_frozen(q["ux"]),
        uy=_frozen(q["uy"]),
        uz=_frozen(q["uz"]),
    )
