"""Exact small-cluster propagation and classical-noise dephasing oracles."""

from .cluster import (
    MAX_SPINS,
    ClusterSpec,
    DimensionError,
    SimulationResult,
    build_cluster_hamiltonian,
    build_pair_hamiltonian,
    global_rotation,
    product_state,
    simulate_sequence,
)
from .compare import FLAG_THRESHOLD, ComparisonRow, aht_hamiltonian, compare_aht_vs_exact, short_time_curvature
from .noise import (
    MIN_TRAJECTORIES,
    InsufficientTrajectoriesError,
    NoiseDecay,
    NoiseModel,
    ScalingResult,
    analytic_coherence,
    classify_decay,
    one_over_e_time,
    ou_noise_dephasing,
    ou_step_moments,
    phase_variance,
    sample_ou,
    sign_segments,
    xy_scaling,
)

__all__ = [
    "FLAG_THRESHOLD",
    "MAX_SPINS",
    "MIN_TRAJECTORIES",
    "ClusterSpec",
    "ComparisonRow",
    "DimensionError",
    "InsufficientTrajectoriesError",
    "NoiseDecay",
    "NoiseModel",
    "ScalingResult",
    "SimulationResult",
    "aht_hamiltonian",
    "analytic_coherence",
    "build_cluster_hamiltonian",
    "build_pair_hamiltonian",
    "classify_decay",
    "compare_aht_vs_exact",
    "global_rotation",
    "one_over_e_time",
    "ou_noise_dephasing",
    "ou_step_moments",
    "phase_variance",
    "product_state",
    "sample_ou",
    "short_time_curvature",
    "sign_segments",
    "simulate_sequence",
    "xy_scaling",
]
