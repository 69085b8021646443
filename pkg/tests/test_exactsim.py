import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from anisodd.constants import HBAR, H
from anisodd.exactsim import (
    ClusterSpec,
    DimensionError,
    aht_hamiltonian,
    build_pair_hamiltonian,
    compare_aht_vs_exact,
    global_rotation,
    product_state,
    short_time_curvature,
    simulate_sequence,
)
from anisodd.sequence import standard_sequence
from anisodd.zeeman import FieldOrientation, GTensor, zeeman_frame

from conftest import SX, SY, SZ

AXIS = {"+X": SX, "-X": -SX, "+Y": SY, "-Y": -SY}


def site_op(op, k, n):
    out = np.eye(1)
    for m in range(n):
        out = np.kron(out, op if m == k else np.eye(2))
    return out


def kron_hamiltonian(js, ji, disorder=None):
    n = js.shape[0]
    Hm = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            for P, J in ((SX, js[i, j]), (SY, js[i, j]), (SZ, ji[i, j])):
                Hm += J * site_op(P, i, n) @ site_op(P, j, n)
    if disorder is not None:
        for k, d in enumerate(disorder):
            Hm += H * d / 2 * site_op(SZ, k, n)
    return Hm


def brute_force_signal(js, ji, seq, psi, ideal):
    """Probe <sigma_x> after one cycle, by dense expm of every interval."""
    n = js.shape[0]
    Hm = kron_hamiltonian(js, ji)
    U = np.eye(2**n, dtype=complex)
    R = np.eye(2, dtype=complex)
    t = 0.0
    for p in seq.pulses:
        gen = sum(site_op(AXIS[p.axis], k, n) for k in range(n))
        if ideal or p.duration == 0:
            U = expm(-1j * Hm * (p.center - t) / HBAR) @ U
            U = expm(-0.5j * p.angle * gen) @ U
            t = p.center
        else:
            U = expm(-1j * Hm * (p.start - t) / HBAR) @ U
            U = expm(-1j * (Hm / HBAR + p.angle / p.duration / 2 * gen) * p.duration) @ U
            t = p.end
        R = expm(-0.5j * p.angle * AXIS[p.axis]) @ R
    U = expm(-1j * Hm * (seq.cycle_time - t) / HBAR) @ U
    # readout in the frame that undoes the net pulse rotation
    Rn = np.eye(1)
    for _ in range(n):
        Rn = np.kron(Rn, R.conj().T)
    out = Rn @ U @ psi
    return float(np.real(np.vdot(out, site_op(SX, 0, n) @ out)))


def random_couplings(rng, n, scale_hz=2e5):
    js = np.zeros((n, n))
    ji = np.zeros((n, n))
    i, j = np.triu_indices(n, 1)
    js[i, j] = rng.normal(0, scale_hz, len(i)) * H
    ji[i, j] = rng.normal(0, scale_hz, len(i)) * H
    return js + js.T, ji + ji.T


@given(st.integers(2, 5), st.integers(0, 2**31))
def test_hamiltonian_matches_kron_construction(n, seed):
    rng = np.random.default_rng(seed)
    js, ji = random_couplings(rng, n)
    dis = rng.normal(0, 1e5, n)
    ref = kron_hamiltonian(js, ji, dis)
    got = build_pair_hamiltonian(js, ji, dis)
    assert np.allclose(got, ref, rtol=0, atol=1e-12 * np.abs(ref).max())


def test_basis_convention_spin0_most_significant():
    js = np.zeros((3, 3))
    ji = np.zeros((3, 3))
    Hm = build_pair_hamiltonian(js, ji, disorder=[1.0, 0.0, 0.0])
    # spin 0 down in the upper half of the basis
    assert np.allclose(np.diag(Hm)[:4], H / 2) and np.allclose(np.diag(Hm)[4:], -H / 2)


@pytest.mark.parametrize("kind", ["hahn_echo", "xy4", "xy8", "droid60"])
@pytest.mark.parametrize("ideal", [True, False])
def test_simulate_matches_brute_force(kind, ideal):
    rng = np.random.default_rng(7)
    n = 3
    js, ji = random_couplings(rng, n)
    seq = standard_sequence(kind, spacing=400e-9, pulse_duration=0.0 if ideal else 40e-9)
    bath = np.array([1.0, -1.0])
    psi = product_state(n, bath=bath)
    res = simulate_sequence(ClusterSpec.from_couplings(js, ji), seq, n_cycles=1, initial=psi,
                            ideal_pulses=ideal)
    ref = brute_force_signal(js, ji, seq, psi, ideal)
    assert res.probe[-1] == pytest.approx(ref, abs=1e-9)
    assert res.norm_error < 1e-12


def test_product_state_matches_kron():
    psi = product_state(3, bath=[1, -1])
    ref = np.kron(np.kron(np.array([1, 1]) / math.sqrt(2), [1, 0]), [0, 1])
    assert np.allclose(psi, ref)
    assert np.allclose(product_state(2, all_x=True), np.full(4, 0.5))
    with pytest.raises(ValueError):
        product_state(3, bath=[1, 0])


def test_global_rotation_matches_kron(rng):
    n = 3
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    u = expm(-0.3j * SY) @ expm(-1.1j * SX)
    ref = np.kron(np.kron(u, u), u) @ psi
    assert np.allclose(global_rotation(psi, u, n), ref)


@given(st.floats(0.05e-6, 3e-6), st.floats(-3e5, 3e5))
def test_hahn_closed_form(tau, j_hz):
    j = j_hz * H
    pair = ClusterSpec.from_couplings(np.zeros((2, 2)), np.array([[0.0, j], [j, 0.0]]))
    seq = standard_sequence("hahn_echo", spacing=2 * tau)
    got = simulate_sequence(pair, seq).probe[-1]
    assert got == pytest.approx(math.cos(2 * j * 2 * tau / HBAR), abs=1e-9)


def test_norm_preserved_over_many_cycles(rng):
    js, ji = random_couplings(rng, 4)
    spec = ClusterSpec.from_couplings(js, ji, disorder=rng.normal(0, 1e5, 4))
    res = simulate_sequence(spec, standard_sequence("xy4", spacing=100e-9), n_cycles=500,
                            readout_every=50, seed=3)
    assert res.norm_error < 1e-10
    assert len(res.times) == 11
    assert np.all(np.abs(res.probe) <= 1 + 1e-12)


def test_dimension_limit():
    with pytest.raises(DimensionError):
        ClusterSpec.from_couplings(np.zeros((13, 13)), np.zeros((13, 13)))
    with pytest.raises(DimensionError):
        ClusterSpec.from_couplings(np.zeros((1, 1)), np.zeros((1, 1)))
    with pytest.raises(DimensionError):
        build_pair_hamiltonian(np.zeros((13, 13)), np.zeros((13, 13)))


def test_positions_need_frame_and_separation():
    frame = zeeman_frame(GTensor(2.0, 2.0, 2.0), FieldOrientation.from_vector([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        ClusterSpec(positions=np.zeros((2, 3)))
    with pytest.raises(ValueError):
        ClusterSpec(positions=[[0, 0, 0], [1e-10, 0, 0]], frame=frame)
    spec = ClusterSpec(positions=[[0, 0, 0], [1e-9, 0, 0], [0, 2e-9, 0]], frame=frame)
    js, ji = spec.couplings()
    assert np.allclose(js, js.T) and np.all(np.diag(js) == 0)
    # isotropic g: flip-flop is minus half the Ising term
    assert np.allclose(js, -ji / 2)


def test_aht_drops_disorder_for_balanced_sequences(rng):
    js, ji = random_couplings(rng, 3)
    spec = ClusterSpec.from_couplings(js, ji, disorder=[1e5, -2e5, 3e4])
    bare = ClusterSpec.from_couplings(js, ji)
    seq = standard_sequence("xy4", spacing=1e-7)
    assert np.allclose(aht_hamiltonian(spec, seq), aht_hamiltonian(bare, seq))
    # free evolution keeps the detuning on z
    ram = standard_sequence("ramsey", spacing=1e-7)
    assert np.allclose(aht_hamiltonian(spec, ram), kron_hamiltonian(js, ji, spec.disorder))


def test_short_time_curvature_recovers_coefficients():
    t = np.linspace(0, 1e-6, 15)
    k, m = 3.2e11, -1.5e22
    assert short_time_curvature(t, 1 - k * t**2 - m * t**4) == pytest.approx(k, rel=1e-9)


@pytest.mark.parametrize("kind", ["hahn_echo", "xy4", "droid60"])
def test_first_order_rate_converges(kind):
    rng = np.random.default_rng(11)
    clusters = [ClusterSpec.from_couplings(*random_couplings(rng, 3, 1e5)) for _ in range(3)]
    rows = {}
    for spacing in (1e-9, 1e-10):
        (r,) = compare_aht_vs_exact(clusters, [standard_sequence(kind, spacing=spacing)], seed=5)
        rows[spacing] = r
    assert abs(rows[1e-10].ratio - 1) < 0.05
    assert abs(rows[1e-10].ratio - 1) <= abs(rows[1e-9].ratio - 1) + 1e-3
    assert not rows[1e-10].flagged


def test_non_decaying_signal_is_reported():
    pair = ClusterSpec.from_couplings(np.zeros((2, 2)), np.zeros((2, 2)))
    (r,) = compare_aht_vs_exact([pair], [standard_sequence("xy4", spacing=1e-7)])
    assert math.isnan(r.ratio) and "does not decay" in r.note
