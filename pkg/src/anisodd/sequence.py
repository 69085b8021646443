"""Clifford pulse sequences, toggling frames and first-order average Hamiltonians.

Conventions
-----------
A pulse of angle ``theta`` about the signed rotating-frame axis ``+X`` is the
propagator ``exp(-i theta sigma_x / 2)`` (right-handed); ``-X`` reverses the
sense. Pulse centres of the named sequences sit at ``(k + 1/2) * spacing`` so
that a cycle of length ``n * spacing`` can be repeated seamlessly.

The toggling frame follows the image of ``sigma_z`` under the accumulated pulse
propagator ``U``: ``U^dag sigma_z U = n . sigma``. For Clifford pulses ``n`` is
a signed Cartesian axis. The asymmetry ``c`` is the time average of ``n_z**2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .dipolar import DipolarCoupling

__all__ = [
    "Pulse",
    "PulseSequence",
    "TogglingFrame",
    "AverageHamiltonian",
    "SequenceError",
    "SEQUENCE_KINDS",
    "pulse_unitary",
    "adjoint_rotation",
    "standard_sequence",
    "toggling_frames",
    "average_hamiltonian",
    "redistribute",
    "effective_asymmetry",
    "timetable",
]

SEQUENCE_KINDS = ("ramsey", "hahn_echo", "xy4", "xy8", "droid60", "droid_asym")

_AXES = {"+X": (0, 1.0), "-X": (0, -1.0), "+Y": (1, 1.0), "-Y": (1, -1.0)}
_ALIASES = {"X": "+X", "Y": "+Y", "x": "+X", "y": "+Y", "-x": "-X", "-y": "-Y", "+x": "+X", "+y": "+Y"}

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (_SX, _SY, _SZ)

# Gauss-Legendre nodes on [0, 1] for averaging over a pulse
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class SequenceError(ValueError):
    """Raised for malformed or infeasible pulse timings."""


def _norm_axis(axis: str) -> str:
    axis = _ALIASES.get(axis, axis)
    if axis not in _AXES:
        raise SequenceError(f"unknown pulse axis {axis!r}; expected one of {sorted(_AXES)}")
    return axis


@dataclass(frozen=True)
class Pulse:
    axis: str
    angle: float
    start: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "axis", _norm_axis(self.axis))
        if not (math.isfinite(self.angle) and self.angle > 0):
            raise SequenceError(f"pulse angle must be positive, got {self.angle!r}")
        if self.duration < 0 or self.start < 0:
            raise SequenceError("pulse start and duration must be non-negative")

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def center(self) -> float:
        return self.start + self.duration / 2

    @property
    def is_clifford(self) -> bool:
        q = self.angle / (math.pi / 2)
        return abs(q - round(q)) < 1e-9


def pulse_unitary(axis: str, angle: float) -> np.ndarray:
    """2x2 propagator of a rotation about a signed transverse axis."""
    i, sign = _AXES[_norm_axis(axis)]
    return math.cos(angle / 2) * np.eye(2) - 1j * sign * math.sin(angle / 2) * PAULI[i]


def adjoint_rotation(U: np.ndarray) -> np.ndarray:
    """Matrix ``O`` with ``U^dag sigma_a U = sum_b O[a, b] sigma_b``.

    Composition: ``adjoint_rotation(R @ U) == adjoint_rotation(R) @ adjoint_rotation(U)``.
    """
    Ud = U.conj().T
    return np.array(
        [[0.5 * np.trace(Ud @ PAULI[a] @ U @ PAULI[b]).real for b in range(3)] for a in range(3)]
    )


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple
    cycle_time: float
    name: str = ""

    def __post_init__(self):
        pulses = tuple(self.pulses)
        object.__setattr__(self, "pulses", pulses)
        t = 0.0
        for k, p in enumerate(pulses):
            if p.start < t - 1e-15:
                raise SequenceError(f"pulse {k} ({p.axis}) overlaps the previous pulse or is out of order")
            t = p.end
        if self.cycle_time < t - 1e-15:
            raise SequenceError("cycle_time shorter than the end of the last pulse")

    @property
    def net_rotation(self) -> np.ndarray:
        """Adjoint (3x3) rotation of the whole cycle."""
        U = np.eye(2, dtype=complex)
        for p in self.pulses:
            U = pulse_unitary(p.axis, p.angle) @ U
        return adjoint_rotation(U)

    @property
    def is_identity(self) -> bool:
        return bool(np.allclose(self.net_rotation, np.eye(3), atol=1e-9))

    @property
    def n_pi(self) -> int:
        return sum(1 for p in self.pulses if abs(p.angle - math.pi) < 1e-9)

    def repeat(self, n: int) -> "PulseSequence":
        if n < 1:
            raise SequenceError("repeat count must be >= 1")
        out = []
        for k in range(n):
            off = k * self.cycle_time
            out.extend(Pulse(p.axis, p.angle, p.start + off, p.duration) for p in self.pulses)
        return PulseSequence(tuple(out), n * self.cycle_time, self.name)

    def scaled(self, factor: float) -> "PulseSequence":
        """Stretch all times by ``factor`` (pulse durations included)."""
        return PulseSequence(
            tuple(Pulse(p.axis, p.angle, p.start * factor, p.duration * factor) for p in self.pulses),
            self.cycle_time * factor,
            self.name,
        )


# --- named sequences --------------------------------------------------------

_XY4 = ("+X", "+Y", "+X", "+Y")
_XY8 = ("+X", "+Y", "+X", "+Y", "+Y", "+X", "+Y", "+X")

# Twelve frame blocks. Each block is four echo pi pulses (XY-4 phase cycle)
# followed by a pi/2 frame change. The pi/2 phases below take sigma_z through
# z, y, x three times per sign, the second half being the phase-inverted first.
_DROID_HALF_PI = ("+X", "+Y", "+X", "+Y", "+X", "+Y", "-X", "-Y", "-X", "-Y", "-X", "-Y")


def _droid_pulses():
    out = []
    for h in _DROID_HALF_PI:
        out.extend((a, math.pi) for a in _XY4)
        out.append((h, math.pi / 2))
    return out


def _ideal_frames(pulse_list):
    """Signed axis of sigma_z before each pulse and after the last one."""
    U = np.eye(2, dtype=complex)
    frames = [_axis_label(adjoint_rotation(U)[2])]
    for axis, angle in pulse_list:
        U = pulse_unitary(axis, angle) @ U
        frames.append(_axis_label(adjoint_rotation(U)[2]))
    return frames


def _axis_label(n) -> str:
    k = int(np.argmax(np.abs(n)))
    if abs(abs(n[k]) - 1.0) > 1e-9 or np.sum(np.abs(n)) > 1.0 + 1e-9:
        raise SequenceError("toggling frame left the Clifford axes; non-Clifford pulse?")
    return ("+" if n[k] > 0 else "-") + "xyz"[k]


def _build(pulse_list, weights, spacing, pi_duration, half_pi_duration, name, frames):
    """Place pulses given per-gap weights (in units of ``spacing``)."""
    durations = []
    for _, angle in pulse_list:
        if abs(angle - math.pi) < 1e-12:
            durations.append(pi_duration)
        else:
            durations.append(half_pi_duration)
    m = len(pulse_list)
    pulses = []
    t = 0.0
    for k in range(m + 1):
        left = durations[k - 1] / 2 if k > 0 else 0.0
        right = durations[k] / 2 if k < m else 0.0
        w = weights[k]
        if w == 0.0:
            free = 0.0
        else:
            free = w * spacing - left - right
            if free < -1e-15:
                raise SequenceError(
                    f"{name}: negative free delay {free:.3e} s in gap {k} "
                    f"(toggling frame {frames[k]}, between pulses {k - 1} and {k})"
                )
            free = max(free, 0.0)
        t += free
        if k < m:
            axis, angle = pulse_list[k]
            pulses.append(Pulse(axis, angle, t, durations[k]))
            t += durations[k]
    return PulseSequence(tuple(pulses), t, name)


def standard_sequence(
    kind: str,
    *,
    spacing: float,
    n_repeats: int = 1,
    pulse_duration: float = 0.0,
    half_pi_duration: Optional[float] = None,
    c_target: float = 1.0 / 3.0,
) -> PulseSequence:
    """Build one of the named sequences.

    Parameters
    ----------
    kind : one of ``SEQUENCE_KINDS``
    spacing : float
        Centre-to-centre pulse separation (s). For ``ramsey`` it is the cycle length.
    n_repeats : int
        Number of cycles.
    pulse_duration : float
        Pi-pulse length (s); 0 gives ideal pulses.
    half_pi_duration : float, optional
        Pi/2-pulse length; defaults to ``pulse_duration / 2``.
    c_target : float
        Ideal-pulse asymmetry for ``droid_asym`` (0 <= c_target <= 1).
    """
    if kind not in SEQUENCE_KINDS:
        raise SequenceError(f"unknown sequence kind {kind!r}; expected one of {SEQUENCE_KINDS}")
    if not (spacing > 0):
        raise SequenceError("spacing must be positive")
    if pulse_duration < 0:
        raise SequenceError("pulse_duration must be non-negative")
    if pulse_duration > 0 and spacing <= pulse_duration and kind != "ramsey":
        raise SequenceError(f"spacing {spacing:.3e} s must exceed the pulse duration {pulse_duration:.3e} s")
    half_pi = pulse_duration / 2 if half_pi_duration is None else half_pi_duration

    if kind == "ramsey":
        seq = PulseSequence((), spacing, kind)
        return seq.repeat(n_repeats)

    pulse_list = {
        "hahn_echo": [("+X", math.pi)],
        "xy4": [(a, math.pi) for a in _XY4],
        "xy8": [(a, math.pi) for a in _XY8],
        "droid60": _droid_pulses(),
        "droid_asym": _droid_pulses(),
    }[kind]
    frames = _ideal_frames(pulse_list)
    weights = [1.0] * (len(pulse_list) + 1)
    weights[0] = weights[-1] = 0.5
    if kind == "droid_asym":
        if not 0.0 <= c_target <= 1.0:
            raise SequenceError("c_target must lie in [0, 1]")
        # the longer class of delay keeps the nominal spacing
        w_z = 1.0 if c_target >= 1 / 3 else 2 * c_target / (1 - c_target)
        w_xy = 1.0 if c_target <= 1 / 3 else (1 - c_target) / (2 * c_target)
        weights = [w * (w_z if f[1] == "z" else w_xy) for w, f in zip(weights, frames)]
    seq = _build(pulse_list, weights, spacing, pulse_duration, half_pi, kind, frames)
    return seq.repeat(n_repeats)


# --- toggling frame -----------------------------------------------------------


@dataclass(frozen=True)
class TogglingFrame:
    """Free-evolution segments of the sigma_z toggling frame.

    ``segments`` holds ``(signed_axis, dwell)`` pairs such as ``("-y", 1e-7)``.
    ``pulse_weights`` holds the time integral of ``n_x**2, n_y**2, n_z**2``
    over all finite pulses (zeros for ideal pulses).
    """

    segments: tuple
    pulse_weights: tuple = (0.0, 0.0, 0.0)
    pulse_signed: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for axis, dwell in self.segments:
            if dwell < 0:
                raise SequenceError("negative dwell in toggling frame")
            if axis not in ("+x", "-x", "+y", "-y", "+z", "-z"):
                raise SequenceError(f"bad frame axis {axis!r}")

    @property
    def free_time(self) -> float:
        return math.fsum(d for _, d in self.segments)

    @property
    def pulse_time(self) -> float:
        return math.fsum(self.pulse_weights)

    @property
    def total_time(self) -> float:
        return self.free_time + self.pulse_time

    def dwell(self, axis: str) -> float:
        """Total dwell on a signed (``"+z"``) or unsigned (``"z"``) axis."""
        if len(axis) == 1:
            return math.fsum(d for a, d in self.segments if a[1] == axis)
        return math.fsum(d for a, d in self.segments if a == axis)

    def signed_dwell(self, axis: str) -> float:
        """Dwell on ``+axis`` minus dwell on ``-axis``, pulses included."""
        k = "xyz".index(axis)
        return self.dwell("+" + axis) - self.dwell("-" + axis) + self.pulse_signed[k]

    def fractions(self) -> np.ndarray:
        """Time fractions ``(f_x, f_y, f_z)`` of ``n_a**2``; they sum to one."""
        tot = self.total_time
        if tot <= 0:
            raise SequenceError("empty toggling frame")
        return np.array([(self.dwell(a) + self.pulse_weights[k]) / tot for k, a in enumerate("xyz")])

    def mean_axis(self) -> np.ndarray:
        """Time-averaged signed ``n`` (first-order disorder term direction)."""
        tot = self.total_time
        return np.array([self.signed_dwell(a) for a in "xyz"]) / tot

    @property
    def c(self) -> float:
        return float(self.fractions()[2])


@lru_cache(maxsize=64)
def _arc_rows(axis: str, angle: float) -> np.ndarray:
    """Row z of the adjoint rotation at the Gauss-Legendre nodes of a pulse."""
    return np.array([adjoint_rotation(pulse_unitary(axis, angle * s))[2] for s in _GL_X])


def toggling_frames(seq: PulseSequence, ideal: bool = True) -> TogglingFrame:
    """Propagate the sigma_z frame through ``seq``.

    With ``ideal=True`` pulses are instantaneous at their centres. Otherwise
    free segments run between pulse edges and each pulse adds the time
    integral of the squared (and signed) projections of the continuously
    rotating frame vector.
    """
    for k, p in enumerate(seq.pulses):
        if not p.is_clifford:
            raise SequenceError(f"pulse {k} has non-Clifford angle {p.angle!r}")
    segments = []
    U = np.eye(2, dtype=complex)
    t = 0.0
    pw = np.zeros(3)
    ps = np.zeros(3)
    for p in seq.pulses:
        O = adjoint_rotation(U)
        if ideal:
            segments.append((_axis_label(O[2]), p.center - t))
            t = p.center
        else:
            segments.append((_axis_label(O[2]), p.start - t))
            if p.duration > 0:
                ns = _arc_rows(p.axis, p.angle) @ O
                pw += p.duration * (_GL_W @ ns**2)
                ps += p.duration * (_GL_W @ ns)
            t = p.end
        U = pulse_unitary(p.axis, p.angle) @ U
    segments.append((_axis_label(adjoint_rotation(U)[2]), seq.cycle_time - t))
    merged = []
    for axis, dwell in segments:
        if dwell < 0:
            dwell = 0.0 if dwell > -1e-15 else dwell
        if merged and merged[-1][0] == axis:
            merged[-1] = (axis, merged[-1][1] + dwell)
        else:
            merged.append((axis, dwell))
    return TogglingFrame(tuple(merged), tuple(pw), tuple(ps))


# --- average Hamiltonian -------------------------------------------------------


@dataclass(frozen=True)
class AverageHamiltonian:
    """First-order average pair Hamiltonian ``Jt_S (xx + yy) + Jt_I zz``."""

    Jt_S: float
    Jt_I: float
    c: float

    @property
    def alpha(self) -> float:
        return (2.0 * self.Jt_S + self.Jt_I) / 3.0


def redistribute(J_S, J_I, c):
    """``(Jt_S, Jt_I)`` for asymmetry ``c``; works on scalars and arrays."""
    return (1 + c) / 2 * J_S + (1 - c) / 2 * J_I, (1 - c) * J_S + c * J_I


def average_hamiltonian(frame: TogglingFrame, J: DipolarCoupling) -> AverageHamiltonian:
    """Average the pair interaction over the toggling frame."""
    if not frame.segments or frame.total_time <= 0:
        raise SequenceError("empty toggling frame")
    f = frame.fractions()
    tot = frame.total_time
    for k, a in enumerate("xyz"):
        if abs(frame.signed_dwell(a)) > 1e-9 * tot and f[k] > 0:
            warnings.warn(
                f"toggling frame not sign-balanced on {a}: first-order disorder survives",
                stacklevel=2,
            )
            break
    if abs(f[0] - f[1]) > 1e-9:
        warnings.warn(
            f"unequal x/y dwell ({f[0]:.4f} vs {f[1]:.4f}); (Jt_S, Jt_I) form is approximate",
            stacklevel=2,
        )
    c = float(f[2])
    jt_s, jt_i = redistribute(J.J_S, J.J_I, c)
    return AverageHamiltonian(float(jt_s), float(jt_i), c)


def effective_asymmetry(seq: PulseSequence, rabi: float) -> float:
    """Asymmetry ``c`` including the finite pulse widths.

    ``rabi`` is the angular Rabi frequency (rad/s); every pulse duration must
    match ``angle / rabi`` within 5 %.
    """
    if not rabi > 0:
        raise ValueError("Rabi frequency must be positive")
    for k, p in enumerate(seq.pulses):
        expected = p.angle / rabi
        if abs(p.duration - expected) > 0.05 * expected:
            raise SequenceError(
                f"pulse {k}: duration {p.duration:.3e} s inconsistent with "
                f"angle/rabi = {expected:.3e} s"
            )
    return toggling_frames(seq, ideal=False).c


def timetable(seq: PulseSequence) -> list:
    """Rows ``(start, axis, angle, duration)`` for export."""
    return [(p.start, p.axis, p.angle, p.duration) for p in seq.pulses]
