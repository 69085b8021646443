"""Single-spin dephasing by Ornstein-Uhlenbeck frequency noise under pulse trains.

The detuning ``x(t)`` (rad/s) is a stationary OU process with rms
``amplitude`` and correlation time ``tau``. Between pulses the phase picks up
``s * integral(x dt)`` with the toggling sign ``s = +-1`` flipped by every pi
pulse. ``(x, integral x dt)`` is advanced by its exact Gaussian transition, so
the only approximation is the finite number of trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from ..sequence import PulseSequence, SequenceError, standard_sequence, toggling_frames

__all__ = [
    "NoiseModel",
    "NoiseDecay",
    "ScalingResult",
    "InsufficientTrajectoriesError",
    "MIN_TRAJECTORIES",
    "sign_segments",
    "ou_step_moments",
    "sample_ou",
    "phase_variance",
    "analytic_coherence",
    "ou_noise_dephasing",
    "classify_decay",
    "one_over_e_time",
    "xy_scaling",
]

#: Fewest trajectories accepted for shape and exponent fits.
MIN_TRAJECTORIES = 1000


class InsufficientTrajectoriesError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    amplitude: float  # rad/s
    correlation_time: float  # s
    kind: str = "ornstein-uhlenbeck"

    def __post_init__(self):
        if not (self.amplitude > 0 and self.correlation_time > 0):
            raise ValueError("noise amplitude and correlation time must be positive")
        if self.kind != "ornstein-uhlenbeck":
            raise ValueError("only the Ornstein-Uhlenbeck model is available")


def sign_segments(seq: PulseSequence):
    """Boundaries and toggling signs of ``sigma_z`` for a pi-pulse train.

    Pulses act at their centres. Returns ``(edges, signs)`` with
    ``len(edges) == len(signs) + 1``. Sequences that leave the z axis raise.
    """
    frame = toggling_frames(seq, ideal=True)
    edges = [0.0]
    signs = []
    t = 0.0
    for axis, dwell in frame.segments:
        if axis[1] != "z":
            raise SequenceError("noise model needs a sequence of pi pulses (sigma_z must stay on z)")
        t += dwell
        edges.append(t)
        signs.append(1.0 if axis[0] == "+" else -1.0)
    return np.array(edges), np.array(signs)


def _f(q):
    """``q - 2(1 - e^-q) + (1 - e^-2q)/2``, series below q = 1e-3."""
    q = np.asarray(q, dtype=float)
    series = q**3 / 3 - q**4 / 4 + 7 * q**5 / 60
    exact = q + 2 * np.expm1(-q) - np.expm1(-2 * q) / 2
    return np.where(q < 1e-3, series, exact)


def ou_step_moments(sigma: float, tau: float, dt: float):
    """Transition of ``(x, I)`` over ``dt``.

    Returns ``(a, b, cov)`` with ``E[x'] = a x``, ``E[I] = b x`` and the
    2x2 conditional covariance of ``(x', I)``.
    """
    q = dt / tau
    a = math.exp(-q)
    b = -tau * math.expm1(-q)
    var_x = -sigma**2 * math.expm1(-2 * q)
    var_i = 2 * sigma**2 * tau**2 * float(_f(q))
    cov = sigma**2 * tau * math.expm1(-q) ** 2
    return a, b, np.array([[var_x, cov], [cov, var_i]])


def _chol2(cov):
    l11 = math.sqrt(max(cov[0, 0], 0.0))
    l21 = cov[0, 1] / l11 if l11 > 0 else 0.0
    l22 = math.sqrt(max(cov[1, 1] - l21 * l21, 0.0))
    return l11, l21, l22


def sample_ou(noise: NoiseModel, times: np.ndarray, n_traj: int, rng: np.random.Generator):
    """OU samples ``x(t_k)`` and the integrals over each interval, exactly.

    Returns ``(x, I)`` with shapes ``(n_traj, len(times))`` and
    ``(n_traj, len(times) - 1)``.
    """
    times = np.asarray(times, dtype=float)
    sig, tau = noise.amplitude, noise.correlation_time
    x = np.empty((n_traj, len(times)))
    I = np.empty((n_traj, len(times) - 1))
    x[:, 0] = sig * rng.standard_normal(n_traj)
    cache = {}
    for k, dt in enumerate(np.diff(times)):
        key = float(dt)
        if key not in cache:
            a, b, cov = ou_step_moments(sig, tau, dt)
            cache[key] = (a, b, _chol2(cov))
        a, b, (l11, l21, l22) = cache[key]
        z1 = rng.standard_normal(n_traj)
        z2 = rng.standard_normal(n_traj)
        x[:, k + 1] = a * x[:, k] + l11 * z1
        I[:, k] = b * x[:, k] + l21 * z1 + l22 * z2
    return x, I


def phase_variance(noise: NoiseModel, edges, signs) -> float:
    """Closed-form variance of ``sum_k s_k integral_k x dt``."""
    sig2, tau = noise.amplitude**2, noise.correlation_time
    edges = np.asarray(edges, dtype=float)
    signs = np.asarray(signs, dtype=float)
    L = np.diff(edges)
    q = L / tau
    diag = 2 * tau**2 * (q + np.expm1(-q))
    # (1 - e^-L_i)(1 - e^-L_j) e^{-(a_j - b_i)/tau} for i < j
    g = -np.expm1(-q)
    a, b = edges[:-1], edges[1:]
    total = [float(signs**2 @ diag)]
    for i in range(len(L)):
        j = np.arange(i + 1, len(L))
        if len(j) == 0:
            continue
        cross = tau**2 * g[i] * g[j] * np.exp(-(a[j] - b[i]) / tau)
        total.append(2 * signs[i] * float(signs[j] @ cross))
    return sig2 * math.fsum(total)


def analytic_coherence(noise: NoiseModel, seq: PulseSequence) -> float:
    """Gaussian-noise coherence ``exp(-Var(phi) / 2)`` after one pass of ``seq``."""
    edges, signs = sign_segments(seq)
    return math.exp(-phase_variance(noise, edges, signs) / 2)


@dataclass(frozen=True)
class NoiseDecay:
    times: np.ndarray
    coherence: np.ndarray
    stderr: np.ndarray
    T2: float  # 1/e time, s
    shape: str  # exponential | gaussian | ambiguous
    T_exp: float
    T_gauss: float
    residual_ratio: float
    analytic: np.ndarray = field(repr=False, default=None)


def _phase_samples(noise, seq, n_traj, rng, step):
    edges, signs = sign_segments(seq)
    grid = [edges[:1]]
    seg_sign = []
    for k in range(len(signs)):
        m = max(1, int(math.ceil((edges[k + 1] - edges[k]) / step)))
        grid.append(np.linspace(edges[k], edges[k + 1], m + 1)[1:])
        seg_sign.append(np.full(m, signs[k]))
    times = np.concatenate(grid)
    s = np.concatenate(seg_sign)
    _, I = sample_ou(noise, times, n_traj, rng)
    return I @ s


def classify_decay(times, coherence, ratio_threshold: float = 1.5):
    """Fit ``exp(-t/T)`` and ``exp(-(t/T)**2)``; pick the clearly better one.

    Returns ``(shape, T_exp, T_gauss, residual_ratio)``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(coherence, dtype=float)
    t0 = t[np.argmin(np.abs(y - 1 / math.e))] or t[-1] / 2
    fits = {}
    for name, model in (("exponential", lambda t, T: np.exp(-t / T)),
                        ("gaussian", lambda t, T: np.exp(-((t / T) ** 2)))):
        try:
            (T,), _ = optimize.curve_fit(model, t, y, p0=[t0], maxfev=5000)
            fits[name] = (abs(T), float(np.sum((model(t, T) - y) ** 2)))
        except RuntimeError:
            fits[name] = (math.nan, math.inf)
    (te, re), (tg, rg) = fits["exponential"], fits["gaussian"]
    ratio = max(re, rg) / max(min(re, rg), 1e-300)
    shape = "ambiguous"
    if ratio > ratio_threshold:
        shape = "exponential" if re < rg else "gaussian"
    return shape, te, tg, ratio


def one_over_e_time(times, coherence) -> float:
    """First crossing of ``1/e`` by linear interpolation in ``log`` coherence."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(coherence, dtype=float)
    below = np.nonzero(y <= 1 / math.e)[0]
    if len(below) == 0 or below[0] == 0:
        return math.nan
    k = below[0]
    y0, y1 = max(y[k - 1], 1e-300), max(y[k], 1e-300)
    l0, l1 = math.log(y0), math.log(y1)
    if l0 == l1:
        return float(t[k])
    return float(t[k - 1] + (-1 - l0) * (t[k] - t[k - 1]) / (l1 - l0))


def ou_noise_dephasing(noise: NoiseModel, seq: PulseSequence, trajectories: int = 2000, seed: int = 0,
                       durations: Optional[Sequence[float]] = None, n_points: int = 24,
                       stream: int = 0) -> NoiseDecay:
    """Coherence decay of one spin under ``seq`` stretched to each total duration.

    Parameters
    ----------
    noise : NoiseModel
    seq : PulseSequence
        Pi-pulse train defining the sign pattern; it is rescaled to every
        value of ``durations`` (pulse count fixed, spacing varies).
    trajectories : int
        Noise realisations per duration (>= 1000).
    durations : sequence of float, optional
        Total evolution times. Defaults to ``n_points`` values spanning
        0.1 to 2.5 times the closed-form 1/e time.
    stream : int
        Extra seed key so several decays under one seed stay independent.

    Notes
    -----
    The OU update is exact for any step; steps of ``min(spacing, tau) / 10``
    are used anyway so the sampled path resolves the correlation time.
    """
    if trajectories < MIN_TRAJECTORIES:
        raise InsufficientTrajectoriesError(
            f"{trajectories} trajectories too few; at least {MIN_TRAJECTORIES} required"
        )
    base = seq.cycle_time
    if durations is None:
        t_e = _analytic_1e_time(noise, seq)
        durations = np.linspace(0.1, 2.5, n_points) * t_e
    durations = np.asarray(durations, dtype=float)
    coh = np.empty(len(durations))
    err = np.empty(len(durations))
    ana = np.empty(len(durations))
    n_gaps = max(1, len(seq.pulses))
    for k, T in enumerate(durations):
        s = seq.scaled(T / base)
        step = min(T / n_gaps, noise.correlation_time) / 10
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream, k)))
        phi = _phase_samples(noise, s, trajectories, rng, step)
        cp = np.cos(phi)
        coh[k] = math.fsum(cp) / trajectories
        err[k] = float(np.std(cp, ddof=1)) / math.sqrt(trajectories)
        ana[k] = analytic_coherence(noise, s)
    times = np.concatenate([[0.0], durations])
    coh_all = np.concatenate([[1.0], coh])
    shape, te, tg, ratio = classify_decay(times, coh_all)
    return NoiseDecay(
        times=durations, coherence=coh, stderr=err, T2=one_over_e_time(times, coh_all),
        shape=shape, T_exp=te, T_gauss=tg, residual_ratio=ratio, analytic=ana,
    )


def _analytic_1e_time(noise: NoiseModel, seq: PulseSequence) -> float:
    base = seq.cycle_time

    def g(logt):
        return phase_variance(noise, *sign_segments(seq.scaled(math.exp(logt) / base))) / 2 - 1.0

    lo = math.log(1e-3 / noise.amplitude)
    hi = math.log(max(1e3 / noise.amplitude, 1e3 * noise.correlation_time))
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-10))


@dataclass(frozen=True)
class ScalingResult:
    n_pi: np.ndarray
    T2: np.ndarray
    gamma: float
    gamma_stderr: float
    shapes: tuple
    decays: tuple = field(repr=False, default=())


def xy_scaling(noise: NoiseModel, n_pi: Sequence[int] = (4, 8, 16, 32, 64), trajectories: int = 2000,
               seed: int = 0, n_points: int = 24) -> ScalingResult:
    """Fit ``T2 ~ n_pi**gamma`` for XY-4 trains of ``n_pi`` pulses."""
    T2, shapes, decays = [], [], []
    for k, n in enumerate(n_pi):
        if n % 4:
            raise SequenceError("XY-4 trains need a multiple of four pulses")
        seq = standard_sequence("xy4", spacing=1.0, n_repeats=n // 4)
        d = ou_noise_dephasing(noise, seq, trajectories, seed=seed, n_points=n_points, stream=k)
        T2.append(d.T2)
        shapes.append(d.shape)
        decays.append(d)
    x = np.log(np.asarray(n_pi, dtype=float))
    y = np.log(np.asarray(T2))
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(x) - 2, 1)
    s2 = float(res[0]) / dof if len(res) else 0.0
    se = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    return ScalingResult(np.asarray(n_pi), np.asarray(T2), float(coef[0]), se, tuple(shapes), tuple(decays))
