"""Exact propagation of small resonant spin clusters.

Basis states are bit strings with bit ``k`` (most significant first) giving
spin ``k``: 0 for ``|up>`` (``sigma_z = +1``) and 1 for ``|down>``. The
Hamiltonian is in joules and ``U(t) = exp(-i H t / hbar)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from ..constants import H as PLANCK
from ..constants import HBAR
from ..dipolar import DEFAULT_MIN_SEPARATION, secular_coefficients
from ..sequence import PAULI, PulseSequence, pulse_unitary
from ..zeeman import ZeemanFrame

__all__ = [
    "MAX_SPINS",
    "ClusterSpec",
    "SimulationResult",
    "DimensionError",
    "build_cluster_hamiltonian",
    "build_pair_hamiltonian",
    "simulate_sequence",
    "global_rotation",
    "product_state",
]

MAX_SPINS = 12


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterSpec:
    """A cluster of identical resonant spins.

    Either ``positions`` (m, shape (N, 3), g eigenbasis) together with
    ``frame``, or explicit symmetric coupling matrices ``J_S`` and ``J_I``
    (joules) must be given. ``disorder`` holds per-spin detunings in Hz.
    """

    positions: Optional[np.ndarray] = None
    frame: Optional[ZeemanFrame] = None
    disorder: Optional[np.ndarray] = None
    J_S: Optional[np.ndarray] = field(default=None, repr=False)
    J_I: Optional[np.ndarray] = field(default=None, repr=False)
    min_separation: float = DEFAULT_MIN_SEPARATION

    def __post_init__(self):
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=float)
            if pos.ndim != 2 or pos.shape[1] != 3:
                raise ValueError("positions must have shape (N, 3)")
            if self.frame is None:
                raise ValueError("positions need a Zeeman frame")
            d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
            iu = np.triu_indices(len(pos), 1)
            if len(iu[0]) and d[iu].min() < self.min_separation:
                raise ValueError(
                    f"spins closer than the minimum separation {self.min_separation:.3e} m"
                )
            object.__setattr__(self, "positions", pos)
            n = len(pos)
        elif self.J_S is not None and self.J_I is not None:
            js, ji = np.asarray(self.J_S, dtype=float), np.asarray(self.J_I, dtype=float)
            if js.shape != ji.shape or js.ndim != 2 or js.shape[0] != js.shape[1]:
                raise ValueError("J_S and J_I must be square matrices of equal shape")
            if not (np.allclose(js, js.T) and np.allclose(ji, ji.T)):
                raise ValueError("coupling matrices must be symmetric")
            object.__setattr__(self, "J_S", js)
            object.__setattr__(self, "J_I", ji)
            n = js.shape[0]
        else:
            raise ValueError("give positions and frame, or J_S and J_I matrices")
        if not 2 <= n <= MAX_SPINS:
            raise DimensionError(f"cluster size {n} outside 2..{MAX_SPINS} (state dimension <= 4096)")
        if self.disorder is not None:
            dis = np.asarray(self.disorder, dtype=float)
            if dis.shape != (n,):
                raise ValueError("disorder needs one detuning per spin")
            object.__setattr__(self, "disorder", dis)

    @property
    def N(self) -> int:
        return len(self.positions) if self.positions is not None else self.J_S.shape[0]

    @property
    def dim(self) -> int:
        return 2**self.N

    def couplings(self):
        """Symmetric ``(J_S, J_I)`` matrices with zero diagonal (joules)."""
        if self.positions is None:
            return self.J_S, self.J_I
        n = self.N
        js = np.zeros((n, n))
        ji = np.zeros((n, n))
        i, j = np.triu_indices(n, 1)
        v = self.positions[j] - self.positions[i]
        r = np.linalg.norm(v, axis=1)
        s, z = secular_coefficients(self.frame, r, v / r[:, None])
        js[i, j] = js[j, i] = s
        ji[i, j] = ji[j, i] = z
        return js, ji

    @classmethod
    def from_couplings(cls, J_S, J_I, disorder=None) -> "ClusterSpec":
        return cls(J_S=J_S, J_I=J_I, disorder=disorder)


def _z_table(n: int) -> np.ndarray:
    """``z[k, s]``: sigma_z eigenvalue of spin ``k`` in basis state ``s``."""
    s = np.arange(2**n)
    bits = (s[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    return 1.0 - 2.0 * bits


def build_pair_hamiltonian(J_S, J_I, disorder=None) -> np.ndarray:
    """Dense real Hamiltonian from coupling matrices (joules) and detunings (Hz)."""
    J_S = np.asarray(J_S, dtype=float)
    J_I = np.asarray(J_I, dtype=float)
    n = J_S.shape[0]
    if n > MAX_SPINS:
        raise DimensionError(f"{n} spins exceed the dimension budget")
    dim = 2**n
    z = _z_table(n)
    diag = np.zeros(dim)
    Hm = np.zeros((dim, dim))
    states = np.arange(dim)
    for i in range(n):
        for j in range(i + 1, n):
            diag += J_I[i, j] * z[i] * z[j]
            if J_S[i, j] != 0.0:
                # XX + YY = 2 (s+ s- + s- s+): couples states differing in bits i and j
                anti = z[i] != z[j]
                src = states[anti]
                dst = src ^ ((1 << (n - 1 - i)) | (1 << (n - 1 - j)))
                Hm[dst, src] += 2.0 * J_S[i, j]
    if disorder is not None:
        diag += PLANCK / 2 * (np.asarray(disorder, dtype=float) @ z)
    Hm[states, states] += diag
    return Hm


def build_cluster_hamiltonian(spec: ClusterSpec) -> np.ndarray:
    """Secular Hamiltonian of a cluster in joules (dense, real symmetric)."""
    js, ji = spec.couplings()
    return build_pair_hamiltonian(js, ji, spec.disorder)


def global_rotation(psi: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """Apply the 2x2 unitary ``u`` to every spin of the state vector ``psi``."""
    t = psi.reshape((2,) * n)
    for k in range(n):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [k])), 0, k)
    return t.reshape(-1)


def product_state(n: int, probe_x: bool = True, bath=None, all_x: bool = False) -> np.ndarray:
    """Product state: probe (spin 0) along +x, bath spins in ``sigma_z`` states ``bath`` (+-1)."""
    up = np.array([1.0, 0.0], dtype=complex)
    dn = np.array([0.0, 1.0], dtype=complex)
    px = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)
    if all_x:
        factors = [px] * n
    else:
        bath = np.ones(n - 1) if bath is None else np.asarray(bath)
        if bath.shape != (n - 1,) or not np.all(np.isin(bath, (-1, 1))):
            raise ValueError("bath states must be n-1 values of +-1")
        factors = [px if probe_x else up] + [up if b > 0 else dn for b in bath]
    psi = factors[0]
    for f in factors[1:]:
        psi = np.kron(psi, f)
    return psi


@dataclass(frozen=True)
class SimulationResult:
    times: np.ndarray  # readout times (s), cycle ends
    probe: np.ndarray  # <sigma_x> of spin 0
    mean: np.ndarray  # <sigma_x> averaged over all spins
    norm_error: float


class _Propagator:
    """Free evolution and pulses in the eigenbasis of the cluster Hamiltonian."""

    def __init__(self, Hm: np.ndarray, n: int):
        self.H = Hm
        self.n = n
        self.E, self.V = np.linalg.eigh(Hm)
        self._pulses = {}

    def free(self, c: np.ndarray, t: float) -> np.ndarray:
        return c * np.exp(-1j * self.E * t / HBAR)

    def pulse(self, c, axis: str, angle: float, duration: float, ideal: bool):
        key = (axis, round(angle, 12), 0.0 if ideal else duration)
        P = self._pulses.get(key)
        if P is None:
            if ideal or duration == 0.0:
                u = pulse_unitary(axis, angle)
                # kron(u, ..., u) in the eigenbasis
                M = np.eye(1)
                for _ in range(self.n):
                    M = np.kron(M, u)
            else:
                sign = -1.0 if axis.startswith("-") else 1.0
                sig = PAULI[0 if axis.endswith("X") else 1]
                drive = np.zeros_like(self.H, dtype=complex)
                for k in range(self.n):
                    op = np.eye(1)
                    for m in range(self.n):
                        op = np.kron(op, sig if m == k else np.eye(2))
                    drive += op
                rabi = angle / duration
                M = linalg.expm(-1j * (self.H / HBAR + sign * rabi / 2 * drive) * duration)
            P = self.V.conj().T @ M @ self.V
            self._pulses[key] = P
        return P @ c


def _sigma_x_expect(psi: np.ndarray, n: int):
    t = psi.reshape((2,) * n)
    out = np.empty(n)
    for k in range(n):
        a = np.take(t, 0, axis=k)
        b = np.take(t, 1, axis=k)
        out[k] = 2.0 * np.real(np.vdot(a, b))
    return out


def simulate_sequence(spec: ClusterSpec, seq: PulseSequence, n_cycles: int = 1, initial=None,
                      ideal_pulses: bool = True, seed: Optional[int] = None,
                      readout_every: int = 1) -> SimulationResult:
    """Propagate a cluster through ``n_cycles`` repetitions of ``seq``.

    Parameters
    ----------
    initial : ndarray or {"probe_x", "all_x"}, optional
        State vector or preset. ``probe_x`` (default) puts spin 0 along +x
        and the bath spins in random ``sigma_z`` states drawn from ``seed``
        (all up when ``seed`` is None).
    ideal_pulses : bool
        Instantaneous pulses at the pulse centres when True; otherwise each
        pulse is Rabi-driven for its duration under the full Hamiltonian.
    readout_every : int
        Record the signal after every ``readout_every`` cycles.

    Returns
    -------
    SimulationResult with ``<sigma_x>`` of the probe and of all spins,
    evaluated after undoing the accumulated global pulse rotation.
    """
    n = spec.N
    if isinstance(initial, np.ndarray):
        psi = initial.astype(complex)
        if psi.shape != (spec.dim,):
            raise DimensionError("initial state has the wrong dimension")
    elif initial in (None, "probe_x"):
        bath = None
        if seed is not None:
            bath = np.random.default_rng(seed).choice((-1.0, 1.0), size=n - 1)
        psi = product_state(n, bath=bath)
    elif initial == "all_x":
        psi = product_state(n, all_x=True)
    else:
        raise ValueError(f"unknown initial state {initial!r}")
    psi = psi / np.linalg.norm(psi)

    prop = _Propagator(build_cluster_hamiltonian(spec), n)
    # free-evolution plan for one cycle
    steps = []
    t = 0.0
    for p in seq.pulses:
        if ideal_pulses:
            steps.append(("free", p.center - t))
            t = p.center
        else:
            steps.append(("free", p.start - t))
            t = p.end
        steps.append(("pulse", p))
    steps.append(("free", seq.cycle_time - t))

    R = np.eye(2, dtype=complex)
    for p in seq.pulses:
        R = pulse_unitary(p.axis, p.angle) @ R

    c = prop.V.conj().T @ psi
    times, probe, mean = [0.0], [], []
    sx = _sigma_x_expect(psi, n)
    probe.append(sx[0])
    mean.append(sx.mean())
    acc = np.eye(2, dtype=complex)
    for k in range(1, n_cycles + 1):
        for kind, x in steps:
            if kind == "free":
                if x > 0:
                    c = prop.free(c, x)
            else:
                c = prop.pulse(c, x.axis, x.angle, x.duration, ideal_pulses)
        acc = R @ acc
        if k % readout_every == 0 or k == n_cycles:
            psi_k = prop.V @ c
            psi_k = global_rotation(psi_k, acc.conj().T, n)
            sx = _sigma_x_expect(psi_k, n)
            times.append(k * seq.cycle_time)
            probe.append(sx[0])
            mean.append(sx.mean())
    norm_err = abs(np.linalg.norm(c) - 1.0)
    if norm_err > 1e-10:
        raise FloatingPointError(f"state norm drifted by {norm_err:.2e}")
    return SimulationResult(np.array(times), np.array(probe), np.array(mean), float(norm_err))
