"""Sparse-aware LMS adaptive filtering.

Three recursions for identifying a sparse system from noisy observations:
plain LMS, the zero-attracting variant that shrinks every tap toward zero,
and a gated variant whose per-tap attractor switches off whenever the
instantaneous gradient already agrees with the weight's sign.  The package
pairs the recursions with their steady-state theory (mean weight limits and
excess-MSE closed forms) and a Monte Carlo harness that checks one against
the other.
"""

from .errors import (
    ConfigError,
    DegenerateMomentError,
    DivergenceError,
    StabilityError,
    StepSizeWarning,
)
from .filters import (
    Algorithm,
    FilterParams,
    FilterState,
    FilterTrajectory,
    StepRecord,
    gate,
    gc_lms_step,
    lms_step,
    run_filter,
    sgn,
    step_fn,
    za_lms_step,
)
from .signals import (
    Realization,
    Scenario,
    SystemPhase,
    gen_input,
    gen_noise,
    gen_observation,
    make_sparse_system,
    realize,
    run_rng,
    tap_dot,
    tap_windows,
)
from .theory import (
    ActiveTapBiasReport,
    EmseEstimate,
    EmsePrediction,
    SpectrumModel,
    SteadyStateSamples,
    b_vector,
    beta2_approx,
    compare_active_tap_bias,
    estimate_gc_moments,
    estimate_za_moments,
    eta,
    eta_from_matrix,
    gc_emse,
    lms_emse,
    mean_limit,
    phi_fixed_point,
    s_vector,
    support_sets,
    za_emse,
)
from .experiments import (
    EnsembleStats,
    ReportRow,
    SweepRow,
    TheorySimReport,
    desk_params,
    emse_per_run,
    paired_emse_diff,
    run_ensemble,
    sparsity_sweep,
    static_scenario,
    steady_state_emse,
    steady_window,
    theory_vs_sim_report,
    three_phase_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "ActiveTapBiasReport",
    "ConfigError",
    "DegenerateMomentError",
    "DivergenceError",
    "EmseEstimate",
    "EmsePrediction",
    "EnsembleStats",
    "FilterParams",
    "FilterState",
    "FilterTrajectory",
    "Realization",
    "ReportRow",
    "Scenario",
    "SpectrumModel",
    "StabilityError",
    "SteadyStateSamples",
    "StepRecord",
    "StepSizeWarning",
    "SweepRow",
    "SystemPhase",
    "TheorySimReport",
    "b_vector",
    "beta2_approx",
    "compare_active_tap_bias",
    "desk_params",
    "emse_per_run",
    "estimate_gc_moments",
    "estimate_za_moments",
    "eta",
    "eta_from_matrix",
    "gate",
    "gc_emse",
    "gc_lms_step",
    "gen_input",
    "gen_noise",
    "gen_observation",
    "lms_emse",
    "lms_step",
    "make_sparse_system",
    "mean_limit",
    "paired_emse_diff",
    "phi_fixed_point",
    "realize",
    "run_ensemble",
    "run_filter",
    "run_rng",
    "s_vector",
    "sgn",
    "sparsity_sweep",
    "static_scenario",
    "steady_state_emse",
    "steady_window",
    "step_fn",
    "support_sets",
    "tap_dot",
    "tap_windows",
    "theory_vs_sim_report",
    "three_phase_scenario",
    "za_emse",
    "za_lms_step",
]
