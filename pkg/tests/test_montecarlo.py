import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from anisodd.ensemble import (
    EnsembleSpec,
    InsufficientSamplesError,
    decoupled_coherence,
    decoupled_shifts,
    dipolar_linewidth,
    flip_flop_rates,
    flip_flop_time,
    fwhm_iqr,
    fwhm_iqr_stderr,
    required_realizations,
    sample_sphere,
)
from anisodd.zeeman import FieldOrientation, GTensor, zeeman_frame

FRAME = zeeman_frame(GTensor(0.63, 1.9, 14.8), FieldOrientation.from_angles(1.0, 0.7))


def spec(n=2e22, eta=1.0, min_sep=1e-15):
    return EnsembleSpec(concentration=n / 1e28, site_density=1e28, eta=eta, min_separation=min_sep)


def test_iqr_is_lorentzian_fwhm(rng):
    x = stats.cauchy.rvs(scale=3.0, size=200_000, random_state=rng)
    w = fwhm_iqr(x)
    assert w == pytest.approx(6.0, abs=4 * fwhm_iqr_stderr(6.0, len(x)))


def test_iqr_stderr_matches_sampling_spread(rng):
    n = 2000
    widths = [fwhm_iqr(stats.cauchy.rvs(size=n, random_state=rng)) for _ in range(600)]
    assert np.std(widths) == pytest.approx(fwhm_iqr_stderr(2.0, n), rel=0.1)


@given(st.floats(0.005, 0.2))
def test_required_realizations_meets_precision(rho):
    n = required_realizations(rho)
    assert fwhm_iqr_stderr(1.0, n) <= rho * (1 + 1e-12)
    assert fwhm_iqr_stderr(1.0, n - 1) > rho or n == 1


def test_too_few_realizations():
    with pytest.raises(InsufficientSamplesError):
        decoupled_coherence(FRAME, 1.0, spec(), realizations=50)
    with pytest.raises(InsufficientSamplesError, match="24675"):
        decoupled_coherence(FRAME, 1.0, spec(), realizations=2000, rel_precision=0.01)


def test_sample_sphere_statistics(rng):
    density, n_target = 1e24, 300
    radius = (3 * n_target / (4 * math.pi * density)) ** (1 / 3)
    counts, r3 = [], []
    for _ in range(300):
        r, rh = sample_sphere(rng, density, n_target, 0.0)
        counts.append(len(r))
        r3.append((r / radius) ** 3)
        assert np.allclose(np.linalg.norm(rh, axis=1), 1.0)
    assert np.mean(counts) == pytest.approx(n_target, rel=0.01)
    # uniform in volume: r^3 / R^3 is uniform on [0, 1]
    assert stats.kstest(np.concatenate(r3), "uniform").pvalue > 1e-3
    r, _ = sample_sphere(rng, density, n_target, 0.5 * radius)
    assert r.min() >= 0.5 * radius


def test_monte_carlo_matches_analytic_echo_width():
    p = decoupled_coherence(FRAME, 1.0, spec(eta=0.7), realizations=1500, seed=4)
    ref = dipolar_linewidth(FRAME.gamma_eff, 0.7 * 2e22)
    assert p.fwhm == pytest.approx(ref, rel=0.12)
    assert p.fwhm_stderr == pytest.approx(fwhm_iqr_stderr(p.fwhm, 1500))


@settings(max_examples=10)
@given(st.floats(1.1, 10.0), st.floats(0.0, 1.0))
def test_width_scales_exactly_with_density(k, c):
    a = decoupled_shifts(FRAME, c, spec(1e22), 20, seed=9)
    b = decoupled_shifts(FRAME, c, spec(k * 1e22), 20, seed=9)
    assert np.allclose(b, k * a, rtol=1e-9, atol=1e-9 * np.abs(b).max())


def test_seeded_runs_are_reproducible():
    a = decoupled_shifts(FRAME, 0.4, spec(), 30, seed=5)
    b = decoupled_shifts(FRAME, 0.4, spec(), 30, seed=5)
    c = decoupled_shifts(FRAME, 0.4, spec(), 30, seed=6)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_flip_flop_quadratic_in_density_at_fixed_gate():
    a = flip_flop_rates(FRAME, 1.0, spec(1e22), 1e7, realizations=20, seed=2)
    b = flip_flop_rates(FRAME, 1.0, spec(3e22), 1e7, realizations=20, seed=2)
    assert np.allclose(b, 9 * a, rtol=1e-9)
    # a gate proportional to density leaves linear scaling
    c = flip_flop_rates(FRAME, 1.0, spec(3e22), 3e7, realizations=20, seed=2)
    assert np.allclose(c, 3 * a, rtol=1e-9)


def test_flip_flop_vector_c_matches_scalar_calls():
    cs = [1.0, 1 / 3, 0.0]
    t = flip_flop_time(FRAME, cs, spec(), 1e7, realizations=120, seed=3)
    for ck, tk in zip(cs, t):
        assert flip_flop_time(FRAME, ck, spec(), 1e7, realizations=120, seed=3) == pytest.approx(tk)


def test_flip_flop_infinite_without_exchange():
    zero = lambda r, rh: (np.zeros_like(r), np.zeros_like(r))
    assert math.isinf(flip_flop_time(FRAME, 0.5, spec(), 1e7, realizations=100, coupling=zero))
    with pytest.raises(ValueError):
        flip_flop_rates(FRAME, 1.0, spec(), 0.0, realizations=100)


@given(st.floats(0.05, 0.95), st.floats(1.05, 20.0))
@settings(max_examples=15)
def test_symmetric_decoupling_shortens_flip_flop_lifetime(js, ratio):
    # J_I > J_S > 0 on every bond: the isotropic average raises |Jt_S|
    def coupling(r, r_hat):
        k = 1e-52 / r**3
        return js * k, js * ratio * k

    t = flip_flop_time(FRAME, [1.0, 1 / 3], spec(), 1e7, realizations=100, seed=8, coupling=coupling)
    assert t[1] < t[0]
    # pairwise: Jt_S(1/3) / J_S = (2 + ratio) / 3
    assert t[0] / t[1] == pytest.approx(((2 + ratio) / 3) ** 2, rel=1e-9)


def test_lifetime_cap_marks_approximation():
    p = decoupled_coherence(FRAME, 0.0, spec(eta=0.5), realizations=200, seed=1, T1_ff=1e-9)
    assert p.lifetime_cap_applied and p.approximate and p.T2 == pytest.approx(2e-9)
