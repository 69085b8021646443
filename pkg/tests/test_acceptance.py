"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, small_config_text  # noqa: E402

from anisodd.cli import example_config_path, main  # noqa: E402
from anisodd.config import load_config  # noqa: E402
from anisodd.constants import HBAR, H, MU_B_OVER_H  # noqa: E402
from anisodd.ensemble import (  # noqa: E402
    EnsembleSpec,
    decoupled_coherence,
    decoupled_linewidth,
    dipolar_linewidth,
    pi_pulse_fidelity,
    rabi_flip_probability,
    realization_rng,
)
from anisodd.exactsim import (  # noqa: E402
    ClusterSpec,
    NoiseModel,
    compare_aht_vs_exact,
    simulate_sequence,
    xy_scaling,
)
from anisodd.runs import probe_frame, random_cluster  # noqa: E402
from anisodd.sequence import redistribute, standard_sequence, toggling_frames  # noqa: E402
from anisodd.zeeman import FieldOrientation, GTensor, moment_vectors, zeeman_frame  # noqa: E402


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def example():
    return load_config(example_config_path())


def test_criterion_01_monte_carlo_matches_analytic_width():
    rng = np.random.default_rng(2024)
    worst, slowest, parts = 0.0, 0.0, []
    for k in range(3):
        g = GTensor(*rng.uniform(0.5, 15.0, 3))
        frame = zeeman_frame(g, FieldOrientation.from_vector(rng.standard_normal(3)))
        n = 10 ** rng.uniform(21.5, 23.5)
        ens = EnsembleSpec(concentration=n / 1e28, site_density=1e28, eta=1.0)
        t0 = time.perf_counter()
        mc = decoupled_coherence(frame, 1.0, ens, realizations=2000, seed=[7, k])
        slowest = max(slowest, time.perf_counter() - t0)
        ref = dipolar_linewidth(frame.gamma_eff, ens.n_eff)
        dev = abs(mc.fwhm / ref - 1)
        worst = max(worst, dev)
        parts.append(f"{mc.fwhm / ref:.3f}")
    report(1, worst < 0.10 and slowest < 60,
           f"MC/analytic = {', '.join(parts)} (limit 10 %), slowest {slowest:.1f} s")


def test_criterion_02_spin_echo_limit(example):
    ens = example.ensemble
    frame = probe_frame(example, example.predict_direction)
    n_eff = 0.68 * 4e-6 * ens.site_density
    t_se = 1 / (math.pi * dipolar_linewidth(frame.gamma_eff, n_eff))
    angle = math.degrees(math.acos(np.clip(example.predict_direction @ [1, 0, 0], -1, 1)))
    report(2, 0.84e-6 <= t_se <= 0.98e-6 and math.isclose(n_eff, ens.n_eff, rel_tol=1e-12),
           f"T_SE = {t_se * 1e6:.4f} us at {angle:.1f} deg from D1 (band 0.84-0.98 us)")


def test_criterion_03_density_scaling(example):
    frame = probe_frame(example, example.predict_direction)
    n_eff = example.ensemble.n_eff
    worst = 0.0
    for m in (0.3, 1.0, 7.0):
        t1 = 1 / (math.pi * dipolar_linewidth(frame.gamma_eff, m * n_eff))
        t2 = 1 / (math.pi * dipolar_linewidth(frame.gamma_eff, 2 * m * n_eff))
        worst = max(worst, abs(t2 / t1 - 0.5) / 0.5)
    report(3, worst <= 1e-12, f"max relative deviation of T_SE ratio from 1/2: {worst:.2e}")


def test_criterion_04_symmetric_droid_along_d2(example):
    frame = probe_frame(example, example.directions["D2"])
    seq = standard_sequence("droid60", spacing=100e-9)
    c = toggling_frames(seq).c
    t2 = 1 / (math.pi * decoupled_linewidth(frame, c, example.ensemble.n_eff))
    report(4, abs(t2 / 2.66e-6 - 1) <= 0.15 and math.isclose(c, 1 / 3, abs_tol=1e-12),
           f"c = {c:.6f}, T2 = {t2 * 1e6:.3f} us (target 2.66 us +- 15 %)")


def test_criterion_05_c_map_identities():
    rng = np.random.default_rng(5)
    js, ji = rng.normal(size=10_000) * 1e-26, rng.normal(size=10_000) * 1e-26
    alpha = (2 * js + ji) / 3
    a1 = redistribute(js, ji, 1.0)
    a3 = redistribute(js, ji, 1.0 / 3.0)
    a0 = redistribute(js, ji, 0.0)
    eps = np.finfo(float).eps
    scale = np.abs(js) + np.abs(ji)
    anchors = max(
        np.max(np.abs(a1[0] - js) / scale), np.max(np.abs(a1[1] - ji) / scale),
        np.max(np.abs(a3[0] - alpha) / scale), np.max(np.abs(a3[1] - alpha) / scale),
        np.max(np.abs(a0[0] - (js + ji) / 2) / scale), np.max(np.abs(a0[1] - js) / scale),
    )
    c = rng.uniform(0, 1, 10_000)
    jt_s, jt_i = redistribute(js, ji, c)
    inv = np.max(np.abs((2 * jt_s + jt_i) - (2 * js + ji)) / np.abs(2 * js + ji))
    al = np.max(np.abs((2 * jt_s + jt_i) / 3 - alpha) / np.abs(alpha))
    ok = anchors <= 4 * eps and inv <= 1e-12 and al <= 1e-12
    report(5, ok, f"anchors within {anchors / eps:.1f} ulp; invariant {inv:.1e}, alpha {al:.1e} relative")


def test_criterion_06_pulse_fidelity():
    rabi1, rabi2 = 2 * math.pi * 14.9e6, 2 * math.pi * 6.4e6
    eta1 = pi_pulse_fidelity(rabi1, 10e6, 33e-9)
    eta2 = pi_pulse_fidelity(rabi2, 10e6, math.pi / rabi2)
    lim = max(abs(pi_pulse_fidelity(r, 1e-3, t) - math.sin(r * t / 2) ** 2)
              for r, t in ((rabi1, 33e-9), (rabi2, math.pi / rabi2), (rabi1, 21e-9)))
    narrow = float(rabi_flip_probability(rabi1, 0.0, 33e-9))
    ok = 0.72 <= eta1 <= 0.84 and 0.60 <= eta2 <= 0.73 and lim <= 1e-6
    report(6, ok, f"eta = {eta1:.4f} (band 0.72-0.84), {eta2:.4f} (band 0.60-0.73); "
                  f"narrow-line limit error {lim:.1e} (sin^2 = {narrow:.4f})")


def test_criterion_07_finite_pulse_asymmetry():
    seq = standard_sequence("droid_asym", spacing=100e-9, pulse_duration=33e-9, c_target=0.0)
    ideal = toggling_frames(standard_sequence("droid_asym", spacing=100e-9, c_target=0.0)).c
    c_eff = toggling_frames(seq, ideal=False).c
    report(7, 0.15 <= c_eff <= 0.30, f"c_eff = {c_eff:.4f} (band 0.15-0.30; zero-length pulses give c = {ideal:.2e})")


def test_criterion_08_exact_oracles(example):
    worst = 0.0
    for j_hz in (1e5, -3.7e5):
        j = H * j_hz
        pair = ClusterSpec.from_couplings(np.zeros((2, 2)), np.array([[0.0, j], [j, 0.0]]))
        for tau in (0.5e-6, 1e-6, 2e-6, 3e-6):
            got = simulate_sequence(pair, standard_sequence("hahn_echo", spacing=2 * tau)).probe[-1]
            worst = max(worst, abs(got - math.cos(2 * j * 2 * tau / HBAR)))
    o = example.oracle
    frame = probe_frame(example, example.predict_direction)
    clusters = [random_cluster(realization_rng([example.seed, 3], i), o.n_spins, o.density, frame,
                               example.ensemble.min_separation) for i in range(o.n_clusters)]
    spacings = (1e-8, 1e-9, 1e-10)
    ratios = {}
    for kind in ("hahn_echo", "xy4", "droid60"):
        rows = [compare_aht_vs_exact(clusters, [standard_sequence(kind, spacing=s)], seed=example.seed)[0]
                for s in spacings]
        ratios[kind] = [r.ratio for r in rows]
    conv = all(abs(r[-1] - 1) <= 0.05 for r in ratios.values())
    trend = "; ".join(f"{k} " + " -> ".join(f"{x:.3f}" for x in v) for k, v in ratios.items())
    report(8, worst <= 1e-9 and conv,
           f"Hahn closed form max error {worst:.1e}; rate ratio at spacing 10/1/0.1 ns: {trend}")


def test_criterion_09_noise_scaling(example):
    ns = example.noise
    noise = NoiseModel(ns.amplitude, ns.correlation_time)
    sc = xy_scaling(noise, (4, 8, 16, 32, 64), trajectories=2000, seed=example.seed, n_points=24)
    gauss = all(s == "gaussian" for s in sc.shapes)
    report(9, abs(sc.gamma - 2 / 3) <= 0.1 and gauss,
           f"gamma = {sc.gamma:.3f} +- {sc.gamma_stderr:.3f} (2/3 +- 0.1); shapes {set(sc.shapes)}")


def test_criterion_10_frame_invariants():
    rng = np.random.default_rng(10)
    t0 = time.perf_counter()
    n = 100_000
    g = rng.uniform(0.1, 20.0, (n, 3))
    b = rng.standard_normal((n, 3))
    b /= np.linalg.norm(b, axis=1)[:, None]
    q = moment_vectors(g, b)
    ux_b = np.max(np.abs(np.sum(b * q["ux"], axis=1)) / q["g_eff"])
    uy_b = np.max(np.abs(np.sum(b * q["uy"], axis=1)) / q["g_eff"])
    uz_b = np.max(np.abs(np.sum(b * q["uz"], axis=1) / q["g_eff"] - 1))
    gam = np.max(np.abs(MU_B_OVER_H * np.linalg.norm(q["uz"], axis=1) / q["gamma_eff"] - 1))
    dt = time.perf_counter() - t0
    worst = max(ux_b, uy_b, uz_b, gam)
    report(10, worst <= 1e-10 and dt < 10,
           f"max deviation {worst:.1e} over {n} pairs in {dt:.2f} s")


def test_criterion_11_deterministic_sweep(tmp_path):
    cfg = tmp_path / "sweep.toml"
    cfg.write_text(small_config_text(steps=3, realizations=2000))
    outs = []
    for k, workers in enumerate((1, 1, 3)):
        out = tmp_path / f"run{k}"
        assert main(["sweep", "-c", str(cfg), "-o", str(out), "--workers", str(workers)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    same = outs[0] == outs[1] and outs[0] == outs[2] and len(outs[0]) == 2
    report(11, same, f"{len(outs[0])} CSV files byte-identical across 3 runs (1, 1 and 3 workers)")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"])
    print("\n".join(sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":")))))
    sys.exit(code)
