import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from anisodd.constants import MU_0, MU_B, H
from anisodd.dipolar import secular_coefficients
from anisodd.ensemble import (
    ABS_ANGULAR_MEAN,
    abs_quadratic_mean,
    angular_factor,
    coherence_from_linewidth,
    decoupled_linewidth,
    dipolar_linewidth,
    effective_concentration,
)
from anisodd.sequence import redistribute
from anisodd.zeeman import FieldOrientation, GTensor, zeeman_frame

gvals = st.floats(0.2, 16.0)
vec = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 1e-2)


def lorentz_width_from_characteristic_function(frame, n):
    """FWHM (Hz) of a Poisson ensemble of +-1 spins with shift 2 J_I / h.

    ln phi(t) = -n int d^3r (1 - cos(2 pi t nu(r))) = -(2 pi^2 / 3) n |a| <|f|> 2 pi |t|
    for nu = a f(angle) / r^3, so HWHM = (2 pi^2 / 3) n |a| <|f|>.
    """
    k0 = MU_0 / (4 * math.pi) * (MU_B / 2) ** 2
    a = 2 * k0 * float(frame.uz @ frame.uz) / H
    return 2 * (2 * math.pi**2 / 3) * n * a * 4 / (3 * math.sqrt(3))


@given(st.tuples(gvals, gvals, gvals), vec, st.floats(1e20, 1e25))
def test_linewidth_matches_characteristic_function(g, bv, n):
    f = zeeman_frame(GTensor(*g), FieldOrientation.from_vector(bv))
    assert dipolar_linewidth(f.gamma_eff, n) == pytest.approx(
        lorentz_width_from_characteristic_function(f, n), rel=1e-12)


def test_abs_angular_mean():
    x = np.linspace(-1, 1, 2_000_001)
    assert trapezoid(np.abs(1 - 3 * x**2), x) / 2 == pytest.approx(ABS_ANGULAR_MEAN, rel=1e-9)


def test_linewidth_linear_in_density_and_quadratic_in_gamma():
    assert dipolar_linewidth(2e10, 2e22) == pytest.approx(2 * dipolar_linewidth(2e10, 1e22), rel=1e-15)
    assert dipolar_linewidth(4e10, 1e22) == pytest.approx(4 * dipolar_linewidth(2e10, 1e22), rel=1e-15)
    with pytest.raises(ValueError):
        dipolar_linewidth(-1.0, 1e22)


def test_coherence_from_linewidth_cap():
    p = coherence_from_linewidth(1e5)
    assert p.T2 == pytest.approx(1 / (math.pi * 1e5))
    assert not p.lifetime_cap_applied
    q = coherence_from_linewidth(1e5, T1_ff=1e-6, approximate=True)
    assert q.T2 == pytest.approx(2e-6) and q.lifetime_cap_applied and q.approximate
    with pytest.raises(ValueError):
        coherence_from_linewidth(0.0)


def test_effective_concentration():
    assert effective_concentration(1e22, 0.68) == pytest.approx(6.8e21)
    with pytest.raises(ValueError):
        effective_concentration(1e22, 1.2)


@given(st.tuples(gvals, gvals, gvals), vec)
def test_angular_factor_unity_for_echo(g, bv):
    f = zeeman_frame(GTensor(*g), FieldOrientation.from_vector(bv))
    assert angular_factor(f, 1.0) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("c", [1 / 3, 0.0, 0.2, 0.6])
def test_angular_factor_against_random_directions(c):
    f = zeeman_frame(GTensor(0.63, 1.9, 14.8), FieldOrientation.from_angles(1.0, 0.7))
    rng = np.random.default_rng(8)
    v = rng.standard_normal((400_000, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    js, ji = secular_coefficients(f, 1.0, v)
    _, jt = redistribute(js, ji, c)
    ref = np.abs(jt).mean() / (np.abs(ji).mean())
    assert angular_factor(f, c) == pytest.approx(ref, rel=0.01)


@given(vec, vec)
def test_isotropic_point_is_field_independent(b1, b2):
    g = GTensor(0.63, 1.9, 14.8)
    w = [decoupled_linewidth(zeeman_frame(g, FieldOrientation.from_vector(b)), 1 / 3, 1e22) for b in (b1, b2)]
    assert w[0] == pytest.approx(w[1], rel=1e-9)


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_abs_quadratic_mean_against_dense_grid(a):
    A = np.array([[a[0], a[1], a[2]], [a[1], a[3], a[4]], [a[2], a[4], a[5]]])
    # midpoint grid in (cos theta, phi), independent of the eigenframe route
    n = 600
    u = (np.arange(n) + 0.5) / n * 2 - 1
    ph = (np.arange(2 * n) + 0.5) / (2 * n) * 2 * math.pi
    U, PH = np.meshgrid(u, ph, indexing="ij")
    S = np.sqrt(1 - U**2)
    r = np.stack([S * np.cos(PH), S * np.sin(PH), U], axis=-1)
    ref = np.abs(np.einsum("...i,ij,...j->...", r, A, r)).mean()
    assert abs_quadratic_mean(A) == pytest.approx(ref, rel=1e-4, abs=1e-6 * (np.abs(A).max() + 1))
