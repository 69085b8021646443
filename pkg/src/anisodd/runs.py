"""Runners behind the command-line subcommands.

Every runner takes a resolved :class:`~anisodd.config.RunConfig`, writes its
CSV files into ``cfg.out`` and returns a :class:`RunResult` with the paths
and a short plain-text report.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, RunConfig, SequenceSpec
from .constants import HBAR, MU_B_OVER_H, H
from .ensemble import (
    NUCLEAR_SPACING_ADVISORY,
    coherence_from_linewidth,
    decoupled_coherence,
    decoupled_linewidth,
    dipolar_linewidth,
    flip_flop_time,
    offresonant_broadening,
    pi_pulse_fidelity,
    rabi_flip_probability,
    realization_rng,
)
from .exactsim import ClusterSpec, NoiseModel, compare_aht_vs_exact, simulate_sequence, xy_scaling
from .io import write_csv
from .sequence import standard_sequence, timetable, toggling_frames
from .zeeman import FieldOrientation, ZeemanFrame, zeeman_frame

__all__ = [
    "RunResult",
    "probe_frame",
    "sequence_asymmetry",
    "resolve_ensemble",
    "secular_warning",
    "run_sweep",
    "run_predict",
    "run_fidelity",
    "run_oracle",
    "run_noise",
    "run_export_sequence",
    "random_cluster",
]

APPROX_NOTE = ("T1_ff columns come from an approximate golden-rule flip-flop model "
               "gated by the inhomogeneous linewidth; capped T2 values inherit that")


@dataclass
class RunResult:
    files: list = field(default_factory=list)
    report: str = ""
    warnings: list = field(default_factory=list)


def _need(cfg: RunConfig, *attrs):
    missing = [a for a in attrs if getattr(cfg, a) is None or (isinstance(getattr(cfg, a), tuple)
                                                               and not getattr(cfg, a))]
    if missing:
        raise ConfigError([f"{cfg.source}: this subcommand needs config sections for: {', '.join(missing)}"])


def probe_frame(cfg: RunConfig, lab_vec) -> ZeemanFrame:
    """Zeeman frame of the probe for a lab-frame field direction."""
    B = cfg.ensemble.field_tesla if cfg.ensemble is not None else None
    return zeeman_frame(cfg.g, FieldOrientation.from_vector(lab_vec, B=B, rotation=cfg.rotation))


def sequence_asymmetry(sp: SequenceSpec) -> float:
    """``c`` of a configured sequence, with pulse intervals if requested."""
    return toggling_frames(sp.build(), ideal=not sp.finite_pulses).c


def resolve_ensemble(cfg: RunConfig):
    """Ensemble with ``eta`` replaced by the chained pulse fidelity when requested."""
    ens = cfg.ensemble
    if ens is None or cfg.eta_source is None:
        return ens
    case = next(c for c in cfg.fidelity if c.label == cfg.eta_source)
    eta = pi_pulse_fidelity(case.rabi, case.linewidth, case.t_p)
    return dataclasses.replace(ens, eta=eta)


def secular_warning(cfg: RunConfig, frame: ZeemanFrame) -> Optional[str]:
    """Warn when the Zeeman splitting is under 100 inhomogeneous linewidths."""
    ens = cfg.ensemble
    if ens is None or not ens.field_tesla or not cfg.inhomogeneous_linewidth:
        return None
    split = frame.g_eff * MU_B_OVER_H * ens.field_tesla
    if split < 100 * cfg.inhomogeneous_linewidth:
        return (f"Zeeman splitting {split:.3g} Hz is below 100 x the inhomogeneous linewidth "
                f"({cfg.inhomogeneous_linewidth:.3g} Hz); the secular approximation is doubtful")
    return None


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out) / name


# --- sweep ------------------------------------------------------------------

def _sweep_point(cfg: RunConfig, ens, k: int, angle: float, vec, cs):
    frame = probe_frame(cfg, vec)
    fwhm = dipolar_linewidth(frame.gamma_eff, ens.n_eff)
    t_se = 1.0 / (math.pi * fwhm)
    gamma_inh = cfg.inhomogeneous_linewidth
    all_c = [1.0, *cs]
    if gamma_inh:
        t1 = flip_flop_time(frame, all_c, ens, gamma_inh, cfg.realizations, [cfg.seed, 0, k], cfg.n_target)
    else:
        t1 = np.full(len(all_c), math.inf)
    row = [math.degrees(angle), frame.g_eff, frame.gamma_eff, fwhm, t_se, float(t1[0])]
    for c, t1c in zip(cs, t1[1:]):
        width = decoupled_linewidth(frame, c, ens.n_eff)
        pred = coherence_from_linewidth(width, float(t1c), approximate=bool(gamma_inh))
        row += [c, 1.0 / (math.pi * width), float(t1c), pred.T2]
    bath_row = None
    if ens.bath:
        widths = offresonant_broadening(ens, frame, cfg.realizations, [cfg.seed, 1, k], cfg.lattice,
                                        cfg.rotation, cfg.n_target, cfg.centre_label)
        elec = sum(widths[b.name] for b in ens.bath if b.kind == "electron")
        nuc = math.sqrt(sum(widths[b.name] ** 2 for b in ens.bath if b.kind == "nuclear"))
        bath_row = [math.degrees(angle), fwhm, elec, nuc, min(t_se, 2 * float(t1[0])), float(t1[0])]
    return row, bath_row, secular_warning(cfg, frame)


def run_sweep(cfg: RunConfig) -> RunResult:
    """T2 and flip-flop lifetimes along the configured field rotation."""
    _need(cfg, "g", "sweep", "ensemble")
    ens = resolve_ensemble(cfg)
    cs = [sequence_asymmetry(s) for s in cfg.sequences]
    points = cfg.sweep_points()
    args = [(cfg, ens, k, a, v, cs) for k, (a, v) in enumerate(points)]
    if cfg.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_sweep_point, *zip(*args)))
    else:
        results = [_sweep_point(*a) for a in args]

    cols = ["angle_deg", "g_eff", "gamma_eff_Hz_per_T", "fwhm_echo_Hz", "T_SE_s", "T1_ff_undecoupled_s"]
    desc = [
        "angle_deg: rotation angle from the sweep start direction",
        "gamma_eff_Hz_per_T: effective gyromagnetic ratio",
        "fwhm_echo_Hz / T_SE_s: resonant dipolar width and spin-echo time (analytic)",
        "T1_ff_undecoupled_s: flip-flop lifetime without decoupling (approximate, Monte Carlo median)",
    ]
    for s in cfg.sequences:
        cols += [f"c_{s.label}", f"T2_{s.label}_s", f"T1_ff_{s.label}_s", f"T2_capped_{s.label}_s"]
    desc.append("c_<seq> / T2_<seq>_s / T1_ff_<seq>_s / T2_capped_<seq>_s: per configured sequence, "
                "asymmetry, analytic T2, flip-flop lifetime and T2 limited to 2 T1_ff")
    header = dict(command="sweep", seed=cfg.seed, config=cfg.resolved(),
                  notes=[APPROX_NOTE, f"eta used: {ens.eta:.9g}", f"n_eff: {ens.n_eff:.9g} m^-3"])
    res = RunResult()
    res.files.append(write_csv(_out(cfg, "sweep.csv"), cols, [r[0] for r in results],
                               descriptions=desc, **header))
    if ens.bath:
        bcols = ["angle_deg", "fwhm_resonant_Hz", "fwhm_offres_electron_Hz", "fwhm_offres_nuclear_Hz",
                 "T2_pred_s", "T1_ff_s"]
        bdesc = [
            "fwhm_resonant_Hz: resonant dipolar width (analytic)",
            "fwhm_offres_electron_Hz: summed widths of off-resonant electron species (Monte Carlo)",
            "fwhm_offres_nuclear_Hz: root-sum-square width of nuclear species (Monte Carlo)",
            "T2_pred_s: spin-echo time limited to 2 T1_ff; quasi-static off-resonant shifts are refocused",
            "T1_ff_s: flip-flop lifetime without decoupling (approximate)",
        ]
        res.files.append(write_csv(_out(cfg, "bath.csv"), bcols, [r[1] for r in results],
                                   descriptions=bdesc, **header))
    seen = []
    for (_, _, w), (a, _) in zip(results, points):
        if w:
            seen.append(f"{math.degrees(a):.1f} deg: {w}")
    res.warnings = seen
    best = max(results, key=lambda r: r[0][4])[0]
    res.report = (f"sweep: {len(points)} directions, {len(cfg.sequences)} sequences\n"
                  f"longest spin-echo time {best[4]:.4g} s at {best[0]:.1f} deg\n")
    return res


# --- predict ----------------------------------------------------------------

def run_predict(cfg: RunConfig) -> RunResult:
    """Coherence predictions for a single field direction."""
    _need(cfg, "g", "predict_direction", "ensemble")
    ens = resolve_ensemble(cfg)
    frame = probe_frame(cfg, cfg.predict_direction)
    fwhm = dipolar_linewidth(frame.gamma_eff, ens.n_eff)
    gamma_inh = cfg.inhomogeneous_linewidth
    res = RunResult()
    w = secular_warning(cfg, frame)
    if w:
        res.warnings.append(w)

    rows = []
    lines = [
        f"field direction (lab): {np.array2string(np.asarray(cfg.predict_direction), precision=6)}",
        f"g_eff = {frame.g_eff:.6g}, gamma_eff = {frame.gamma_eff:.6g} Hz/T",
        f"eta = {ens.eta:.6g}" + (f" (from fidelity case '{cfg.eta_source}')" if cfg.eta_source else ""),
        f"n = {ens.n:.6g} m^-3, n_eff = {ens.n_eff:.6g} m^-3",
        f"resonant dipolar FWHM = {fwhm:.6g} Hz, T_SE = {1 / (math.pi * fwhm):.6g} s",
        "",
        f"{'sequence':<20}{'c':>8}{'T2 analytic':>14}{'T2 MC':>14}{'T1_ff*':>12}{'T2 capped':>12}",
    ]
    cs = [sequence_asymmetry(s) for s in cfg.sequences] or [1.0]
    labels = [s.label for s in cfg.sequences] or ["echo"]
    if gamma_inh:
        t1s = flip_flop_time(frame, cs, ens, gamma_inh, cfg.realizations, [cfg.seed, 0, 0], cfg.n_target)
    else:
        t1s = np.full(len(cs), math.inf)
    for j, (label, c, t1) in enumerate(zip(labels, cs, t1s)):
        t1 = float(t1)
        width = decoupled_linewidth(frame, c, ens.n_eff)
        mc = decoupled_coherence(frame, c, ens, cfg.realizations, [cfg.seed, 2, j], cfg.n_target, T1_ff=t1)
        t2a = 1.0 / (math.pi * width)
        rows.append([label, c, width, t2a, mc.fwhm, mc.fwhm_stderr, 1.0 / (math.pi * mc.fwhm), t1,
                     min(t2a, 2 * t1), 2 * t1 < t2a])
        lines.append(f"{label:<20}{c:>8.4f}{t2a:>14.4g}{1 / (math.pi * mc.fwhm):>14.4g}{t1:>12.4g}"
                     f"{min(t2a, 2 * t1):>12.4g}")
    lines.append("* approximate flip-flop model")
    long = [s.label for s in cfg.sequences if s.spacing > NUCLEAR_SPACING_ADVISORY]
    if long:
        lines.append(f"advisory: spacing above {NUCLEAR_SPACING_ADVISORY * 1e6:.1f} us for {', '.join(long)}; "
                     "host nuclear precession may spoil decoupling")

    cols = ["sequence", "c", "fwhm_analytic_Hz", "T2_analytic_s", "fwhm_mc_Hz", "fwhm_mc_stderr_Hz",
            "T2_mc_s", "T1_ff_s", "T2_capped_s", "lifetime_cap_applied"]
    desc = ["fwhm_mc_Hz: interquartile width of Monte Carlo shifts, stderr from its sampling distribution",
            "T2_capped_s: analytic T2 limited to 2 T1_ff (approximate)"]
    notes = [APPROX_NOTE, f"eta used: {ens.eta:.9g}", f"g_eff: {frame.g_eff:.9g}",
             f"gamma_eff_Hz_per_T: {frame.gamma_eff:.9g}", f"fwhm_echo_Hz: {fwhm:.9g}"]
    notes += [f"warning: {x}" for x in res.warnings]
    res.files.append(write_csv(_out(cfg, "predict.csv"), cols, rows, command="predict", seed=cfg.seed,
                               config=cfg.resolved(), descriptions=desc, notes=notes))
    res.report = "\n".join(lines) + "\n"
    rep = _out(cfg, "predict_report.txt")
    rep.write_text(res.report)
    res.files.append(rep)
    return res


# --- fidelity ---------------------------------------------------------------

def run_fidelity(cfg: RunConfig) -> RunResult:
    """Ensemble flip probability of each configured pulse."""
    _need(cfg, "fidelity")
    rows = []
    lines = []
    for case in cfg.fidelity:
        eta = pi_pulse_fidelity(case.rabi, case.linewidth, case.t_p)
        narrow = float(rabi_flip_probability(case.rabi, 0.0, case.t_p))
        n_eff = eta * cfg.ensemble.n if cfg.ensemble is not None else math.nan
        rows.append([case.label, case.rabi / (2 * math.pi), case.linewidth, case.t_p,
                     math.degrees(case.rabi * case.t_p), eta, narrow, n_eff])
        lines.append(f"{case.label}: eta = {eta:.5f} (zero-width limit {narrow:.5f})")
    cols = ["label", "rabi_Hz", "linewidth_Hz", "t_p_s", "pulse_area_deg", "eta",
            "eta_zero_linewidth", "n_eff_m3"]
    desc = ["rabi_Hz: Rabi frequency divided by 2 pi", "linewidth_Hz: Lorentzian FWHM of the line",
            "n_eff_m3: flipped density eta * n (nan without an [ensemble] table)"]
    res = RunResult(report="\n".join(lines) + "\n")
    res.files.append(write_csv(_out(cfg, "fidelity.csv"), cols, rows, command="fidelity", seed=cfg.seed,
                               config=cfg.resolved(), descriptions=desc))
    return res


# --- oracle -----------------------------------------------------------------

def random_cluster(rng: np.random.Generator, n_spins: int, density: float, frame: ZeemanFrame,
                   min_separation: float) -> ClusterSpec:
    """Spins placed uniformly in the sphere holding ``n_spins`` at ``density``."""
    radius = (3 * n_spins / (4 * math.pi * density)) ** (1 / 3)
    if radius < min_separation:
        raise ValueError("cluster density too high for the minimum separation")
    for _ in range(1000):
        v = rng.standard_normal((n_spins, 3))
        v *= (radius * rng.random(n_spins) ** (1 / 3) / np.linalg.norm(v, axis=1))[:, None]
        d = np.linalg.norm(v[:, None] - v[None], axis=-1)[np.triu_indices(n_spins, 1)]
        if d.min() >= min_separation:
            return ClusterSpec(positions=v, frame=frame, min_separation=min_separation)
    raise ValueError("could not place the cluster spins apart")


def run_oracle(cfg: RunConfig) -> RunResult:
    """Exact small-cluster checks of the closed-form echo and first-order theory."""
    _need(cfg, "g", "oracle")
    o = cfg.oracle
    res = RunResult()
    # two spins coupled only through J_I: closed-form echo signal
    j_i = H * o.hahn_coupling
    pair = ClusterSpec.from_couplings(np.zeros((2, 2)), np.array([[0.0, j_i], [j_i, 0.0]]))
    hahn = []
    for tau in o.hahn_taus:
        seq = standard_sequence("hahn_echo", spacing=2 * tau)
        exact = float(simulate_sequence(pair, seq, n_cycles=1).probe[-1])
        closed = math.cos(2 * j_i * 2 * tau / HBAR)
        hahn.append([tau, o.hahn_coupling, exact, closed, abs(exact - closed)])
    res.files.append(write_csv(
        _out(cfg, "oracle_hahn.csv"), ["tau_s", "J_I_Hz", "exact", "closed_form", "abs_error"], hahn,
        command="oracle", seed=cfg.seed, config=cfg.resolved(),
        descriptions=["tau_s: free evolution on each side of the refocusing pulse",
                      "exact / closed_form: probe <sigma_x> after the echo, bath spin up"]))

    vec = cfg.predict_direction if cfg.predict_direction is not None else np.array([0.0, 0.0, 1.0])
    frame = probe_frame(cfg, vec)
    minsep = cfg.ensemble.min_separation if cfg.ensemble is not None else 3e-10
    clusters = [random_cluster(realization_rng([cfg.seed, 3], i), o.n_spins, o.density, frame, minsep)
                for i in range(o.n_clusters)]
    rows = []
    for spacing in o.spacings:
        seqs = [standard_sequence(kind, spacing=spacing) for kind in o.sequences]
        for r in compare_aht_vs_exact(clusters, seqs, seed=cfg.seed):
            rows.append([spacing, r.sequence, r.c, r.rate_exact, r.rate_aht, r.ratio, r.flagged, r.note])
    flagged = sum(r[6] for r in rows)
    res.files.append(write_csv(
        _out(cfg, "oracle_compare.csv"),
        ["spacing_s", "sequence", "c", "rate_exact_per_s", "rate_aht_per_s", "ratio", "flagged", "note"],
        rows, command="oracle", seed=cfg.seed, config=cfg.resolved(),
        descriptions=["rate_*: square root of the short-time curvature of 1 - <sigma_x>",
                      "flagged: exact and first-order rates differ by more than 20 %"]))
    worst = max(r[4] for r in hahn) if hahn else 0.0
    res.report = (f"closed-form echo: max |exact - closed form| = {worst:.3g}\n"
                  f"first-order comparison: {len(rows)} rows, {flagged} flagged\n")
    return res


# --- noise ------------------------------------------------------------------

def run_noise(cfg: RunConfig) -> RunResult:
    """T2 scaling of XY-4 trains under Ornstein-Uhlenbeck frequency noise."""
    _need(cfg, "noise")
    ns = cfg.noise
    model = NoiseModel(ns.amplitude, ns.correlation_time)
    sc = xy_scaling(model, ns.n_pi, ns.trajectories, cfg.seed, ns.n_points)
    decay_rows = []
    for n, d in zip(sc.n_pi, sc.decays):
        for t, y, e, a in zip(d.times, d.coherence, d.stderr, d.analytic):
            decay_rows.append([int(n), t, y, e, a])
    notes = [f"gamma: {sc.gamma:.9g} +- {sc.gamma_stderr:.9g} (T2 ~ n_pi**gamma)"]
    res = RunResult()
    res.files.append(write_csv(
        _out(cfg, "noise_decay.csv"), ["n_pi", "time_s", "coherence", "stderr", "analytic"], decay_rows,
        command="noise", seed=cfg.seed, config=cfg.resolved(), notes=notes,
        descriptions=["coherence: mean cos(phase) over trajectories", "analytic: exp(-Var(phase)/2)"]))
    res.files.append(write_csv(
        _out(cfg, "noise_scaling.csv"), ["n_pi", "T2_s", "shape"],
        [[int(n), t, s] for n, t, s in zip(sc.n_pi, sc.T2, sc.shapes)],
        command="noise", seed=cfg.seed, config=cfg.resolved(), notes=notes,
        descriptions=["T2_s: 1/e time of the Monte Carlo decay", "shape: exponential, gaussian or ambiguous"]))
    res.report = (f"T2 ~ n_pi^gamma with gamma = {sc.gamma:.4f} +- {sc.gamma_stderr:.4f}\n"
                  f"decay shapes: {', '.join(sc.shapes)}\n")
    return res


# --- export-sequence --------------------------------------------------------

def run_export_sequence(cfg: RunConfig) -> RunResult:
    """One pulse timetable per configured sequence."""
    _need(cfg, "sequences")
    res = RunResult()
    lines = []
    for s in cfg.sequences:
        seq = s.build()
        rows = [list(r) for r in timetable(seq)]
        notes = [f"sequence: {s.label} ({s.kind}), cycle time {seq.cycle_time:.9g} s",
                 f"asymmetry c: {sequence_asymmetry(s):.9g}"]
        res.files.append(write_csv(
            _out(cfg, f"sequence_{s.label}.csv"), ["start_s", "axis", "angle_rad", "duration_s"], rows,
            command="export-sequence", seed=cfg.seed, config=cfg.resolved(), notes=notes,
            descriptions=["start_s: pulse start within the cycle", "axis: rotation axis in the rotating frame"]))
        lines.append(f"{s.label}: {len(rows)} pulses, cycle {seq.cycle_time:.4g} s")
    res.report = "\n".join(lines) + "\n"
    return res


RUNNERS = {
    "sweep": run_sweep,
    "predict": run_predict,
    "fidelity": run_fidelity,
    "oracle": run_oracle,
    "noise": run_noise,
    "export-sequence": run_export_sequence,
}
