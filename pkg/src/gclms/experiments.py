"""Monte Carlo harness: ensembles, steady-state estimates, sweeps, reports.

All algorithms in one call share the same drawn input and noise streams
(common random numbers), so cross-algorithm comparisons can use paired
per-run differences.  Runs are seeded per index through ``signals.run_rng``;
the hash of the drawn streams is recorded so two invocations with the same
scenario can prove they averaged the same data.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats as sp_stats

from .errors import DegenerateMomentError, DivergenceError, StepSizeWarning
from .filters import Algorithm, FilterParams, FilterState, step_fn
from .signals import Scenario, SystemPhase, make_sparse_system, realize, tap_windows
from .theory import (
    ActiveTapBiasReport,
    EmseEstimate,
    EmsePrediction,
    SpectrumModel,
    SteadyStateSamples,
    b_vector,
    compare_active_tap_bias,
    estimate_gc_moments,
    estimate_za_moments,
    eta,
    gc_emse,
    lms_emse,
    s_vector,
    support_sets,
    za_emse,
)

DESK_N_TAPS = 16
DESK_SIGMA_X2 = 1.0
DESK_SIGMA_V2 = 1e-3
DESK_MU = 0.05
DESK_RHO = 5e-4
DESK_ENSEMBLE = 200
DEFAULT_SEED = 12345

# Slope test window (iterations) for per-phase convergence flags.
_CONVERGENCE_TAIL = 200


def desk_params() -> tuple[FilterParams, ...]:
    """The three algorithms at desk-scale settings (plain LMS runs rho = 0)."""
    return (
        FilterParams(mu=DESK_MU, rho=0.0, algorithm=Algorithm.LMS),
        FilterParams(mu=DESK_MU, rho=DESK_RHO, algorithm=Algorithm.ZA_LMS),
        FilterParams(mu=DESK_MU, rho=DESK_RHO, algorithm=Algorithm.GC_LMS),
    )


def three_phase_scenario(
    seed: int = DEFAULT_SEED,
    ensemble: int = DESK_ENSEMBLE,
    phase_len: int = 1000,
    magnitude: float = 1.0,
) -> Scenario:
    """The canonical re-sparsification experiment.

    Three equal phases over 16 taps: 1 active tap (sparse), then 8
    (semi-sparse), then all 16 (dense), alternating signs, so tracking across
    sparsity regimes is exercised in one run.
    """
    phases = tuple(
        SystemPhase(
            w0=make_sparse_system(DESK_N_TAPS, n_active, magnitude, "alternating"),
            duration=phase_len,
        )
        for n_active in (1, 8, 16)
    )
    return Scenario(
        n_taps=DESK_N_TAPS,
        sigma_x2=DESK_SIGMA_X2,
        sigma_v2=DESK_SIGMA_V2,
        phases=phases,
        ensemble=ensemble,
        seed=seed,
    )


def static_scenario(
    n_active: int,
    duration: int = 5000,
    n_taps: int = DESK_N_TAPS,
    sigma_x2: float = DESK_SIGMA_X2,
    sigma_v2: float = DESK_SIGMA_V2,
    ensemble: int = DESK_ENSEMBLE,
    seed: int = DEFAULT_SEED,
    magnitude: float = 1.0,
) -> Scenario:
    """A single-phase scenario with a fixed sparse system."""
    phase = SystemPhase(
        w0=make_sparse_system(n_taps, n_active, magnitude, "alternating"),
        duration=duration,
    )
    return Scenario(
        n_taps=n_taps,
        sigma_x2=sigma_x2,
        sigma_v2=sigma_v2,
        phases=(phase,),
        ensemble=ensemble,
        seed=seed,
    )


def steady_window(scenario: Scenario, fraction: float = 0.2) -> tuple[int, int]:
    """[start, stop) of the steady-state window: the last ``fraction`` of the final phase."""
    fraction = float(fraction)
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    start, stop = scenario.phase_bounds()[-1]
    length = max(1, int(round(fraction * (stop - start))))
    return stop - length, stop


def _mse_slope_is_flat(segment: np.ndarray, alpha: float = 0.05) -> bool:
    """True when a linear fit over the segment finds no significant slope."""
    segment = np.asarray(segment, dtype=float)
    if segment.size < 8 or not np.all(np.isfinite(segment)):
        return False
    if np.ptp(segment) == 0.0:
        return True
    fit = sp_stats.linregress(np.arange(segment.size), segment)
    return bool(fit.pvalue >= alpha)


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Everything a finished ensemble run exposes.

    ``mse`` maps each algorithm to its ensemble-mean squared error per
    iteration; ``sq_err`` keeps the per-run squared errors (runs, iters) so
    window means and paired differences stay computable.  ``samples`` holds
    the raw steady-state window records.  ``stream_digest`` is the SHA-256 of
    the drawn input and noise streams.
    """

    scenario: Scenario
    params: dict[Algorithm, FilterParams]
    mse: dict[Algorithm, np.ndarray]
    sq_err: dict[Algorithm, np.ndarray]
    samples: dict[Algorithm, SteadyStateSamples]
    mean_w: dict[Algorithm, np.ndarray]
    snapshot_iters: np.ndarray
    window: tuple[int, int]
    phase_converged: dict[Algorithm, list[bool]]
    stream_digest: str
    n_runs: int
    divergent_runs: dict[Algorithm, tuple[int, ...]]

    @property
    def algorithms(self) -> tuple[Algorithm, ...]:
        return tuple(self.params)


def _stack_streams(scenario: Scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray, str]:
    runs = [realize(scenario, r) for r in range(scenario.ensemble)]
    x = np.stack([r.x for r in runs])
    noise = np.stack([r.noise for r in runs])
    d = np.stack([r.d for r in runs])
    digest = hashlib.sha256(x.tobytes() + noise.tobytes()).hexdigest()
    return x, noise, d, digest


def run_ensemble(
    scenario: Scenario,
    params_list,
    window_fraction: float = 0.2,
    snapshot_stride: int = 50,
    drop_divergent: bool = False,
) -> EnsembleStats:
    """Run every algorithm over a common ensemble of realizations.

    Weights start at zero.  A diverging run aborts the whole call with
    DivergenceError unless ``drop_divergent`` is set, in which case the run
    is excluded from every statistic and listed in ``divergent_runs``.
    """
    params_list = tuple(params_list)
    if not params_list:
        raise ValueError("params_list must name at least one algorithm")
    seen = set()
    for params in params_list:
        if params.algorithm in seen:
            raise ValueError(f"duplicate algorithm {params.algorithm.value}")
        seen.add(params.algorithm)
        # Mean convergence needs mu < 1/lambda_max; for white input
        # lambda_max = sigma_x2.  A violation is worth running anyway.
        if params.mu >= 1.0 / scenario.sigma_x2:
            warnings.warn(
                f"mu = {params.mu:.6g} >= 1/lambda_max = {1.0 / scenario.sigma_x2:.6g}; "
                "the mean recursion will not converge",
                StepSizeWarning,
                stacklevel=2,
            )
    snapshot_stride = int(snapshot_stride)
    if snapshot_stride < 1:
        raise ValueError(f"snapshot_stride must be >= 1, got {snapshot_stride}")

    n_runs = scenario.ensemble
    n_taps = scenario.n_taps
    total = scenario.total_iterations
    x, _noise, d, digest = _stack_streams(scenario)
    windows = tap_windows(x, n_taps)
    win_start, win_stop = steady_window(scenario, window_fraction)
    win_len = win_stop - win_start
    snap_iters = np.arange(0, total, snapshot_stride)

    mse: dict[Algorithm, np.ndarray] = {}
    sq_err: dict[Algorithm, np.ndarray] = {}
    samples: dict[Algorithm, SteadyStateSamples] = {}
    mean_w: dict[Algorithm, np.ndarray] = {}
    params_by_alg: dict[Algorithm, FilterParams] = {}
    converged: dict[Algorithm, list[bool]] = {}
    divergent: dict[Algorithm, tuple[int, ...]] = {}

    for params in params_list:
        alg = params.algorithm
        step = step_fn(alg)
        gated = alg is Algorithm.GC_LMS
        state = FilterState(w=np.zeros((n_runs, n_taps)), n=0)
        sq = np.empty((n_runs, total))
        snaps = np.empty((snap_iters.size, n_taps))
        w_win = np.empty((n_runs, win_len, n_taps))
        err_win = np.empty((n_runs, win_len))
        gate_win = np.empty((n_runs, win_len, n_taps)) if gated else None
        alive = np.ones(n_runs, dtype=bool)
        dead: list[int] = []
        snap_idx = 0

        for n in range(total):
            if snap_idx < snap_iters.size and n == snap_iters[snap_idx]:
                snaps[snap_idx] = state.w[alive].mean(axis=0)
                snap_idx += 1
            try:
                rec = step(state, params, windows[:, n, :], d[:, n])
                w_next = rec.w_next
            except DivergenceError as exc:
                if not drop_divergent:
                    raise
                rec = exc.record
                newly = [r for r in exc.runs if alive[r]]
                dead.extend(newly)
                alive[list(exc.runs)] = False
                if not alive.any():
                    raise DivergenceError(n, runs=tuple(sorted(dead))) from exc
                # Freeze excluded runs at zero so the survivors keep stepping.
                w_next = np.where(alive[:, None], rec.w_next, 0.0)
            # Excluded rows keep getting written here; they are sliced away below.
            # Huge pre-divergence errors may square to inf; that is a faithful
            # record, not a fault, so the overflow is expected.
            with np.errstate(over="ignore"):
                sq[:, n] = np.asarray(rec.e) ** 2
            if win_start <= n < win_stop:
                j = n - win_start
                w_win[:, j, :] = state.w
                err_win[:, j] = rec.e
                if gate_win is not None:
                    gate_win[:, j, :] = rec.gate
            state.w = w_next
            state.n = n + 1

        keep = alive if dead else slice(None)
        sq_kept = sq[keep]
        mse[alg] = sq_kept.mean(axis=0)
        sq_err[alg] = sq_kept
        samples[alg] = SteadyStateSamples(
            w=w_win[keep],
            err=err_win[keep],
            gate=gate_win[keep] if gate_win is not None else None,
            window_start=win_start,
        )
        mean_w[alg] = snaps
        params_by_alg[alg] = params
        divergent[alg] = tuple(sorted(dead))
        converged[alg] = [
            _mse_slope_is_flat(mse[alg][max(a, b - _CONVERGENCE_TAIL) : b])
            for a, b in scenario.phase_bounds()
        ]

    kept_runs = min(n_runs - len(divergent[a]) for a in params_by_alg)
    return EnsembleStats(
        scenario=scenario,
        params=params_by_alg,
        mse=mse,
        sq_err=sq_err,
        samples=samples,
        mean_w=mean_w,
        snapshot_iters=snap_iters,
        window=(win_start, win_stop),
        phase_converged=converged,
        stream_digest=digest,
        n_runs=kept_runs,
        divergent_runs=divergent,
    )


def emse_per_run(stats: EnsembleStats, algorithm: Algorithm, sigma_v2: float) -> np.ndarray:
    """Each run's window-mean squared error minus the noise floor, (runs,)."""
    a, b = stats.window
    return stats.sq_err[algorithm][:, a:b].mean(axis=1) - float(sigma_v2)


def steady_state_emse(
    stats: EnsembleStats, sigma_v2: float, algorithm: Algorithm
) -> EmseEstimate:
    """Measured excess MSE over the steady-state window, with standard error.

    Runs are independent, so the standard error comes from the spread of
    per-run window means.  Requires a window of at least 100 iterations.
    """
    a, b = stats.window
    if b - a < 100:
        raise ValueError(f"steady-state window has {b - a} iterations; need >= 100")
    per_run = emse_per_run(stats, algorithm, sigma_v2)
    value = float(per_run.mean())
    stderr = float(per_run.std(ddof=1) / np.sqrt(per_run.size)) if per_run.size > 1 else np.nan
    return EmseEstimate(value=value, stderr=stderr)


def paired_emse_diff(
    stats: EnsembleStats, alg_a: Algorithm, alg_b: Algorithm
) -> EmseEstimate:
    """Mean and standard error of the per-run EMSE difference a - b.

    The two algorithms saw identical streams, so pairing removes the shared
    run-to-run variation (the noise floor cancels in the difference).
    """
    if stats.divergent_runs[alg_a] != stats.divergent_runs[alg_b]:
        raise ValueError("algorithms kept different run sets; pairing is undefined")
    a, b = stats.window
    diff = (
        stats.sq_err[alg_a][:, a:b].mean(axis=1) - stats.sq_err[alg_b][:, a:b].mean(axis=1)
    )
    stderr = float(diff.std(ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else np.nan
    return EmseEstimate(value=float(diff.mean()), stderr=stderr)


def _predict_attractor(
    stats: EnsembleStats, algorithm: Algorithm
) -> tuple[EmsePrediction | None, np.ndarray | None]:
    """(prediction, mean attractor direction) for one algorithm, from its own samples."""
    scenario = stats.scenario
    spectrum = SpectrumModel.white(scenario.n_taps, scenario.sigma_x2)
    params = stats.params[algorithm]
    w0 = scenario.phases[-1].w0
    samples = stats.samples[algorithm]
    eta_value = eta(params.mu, spectrum)
    if algorithm is Algorithm.GC_LMS:
        m1, m2, mean_dir = estimate_gc_moments(samples, spectrum, params.mu, w0)
        predict = gc_emse
    elif algorithm is Algorithm.ZA_LMS:
        m1, m2, mean_dir = estimate_za_moments(samples, spectrum, params.mu, w0)
        predict = za_emse
    else:
        return None, None
    try:
        prediction = predict(eta_value, scenario.sigma_v2, m1, m2, params.rho)
    except DegenerateMomentError:
        return None, mean_dir
    return prediction, mean_dir


@dataclass(frozen=True)
class SweepRow:
    """Measured and predicted steady state at one sparsity level."""

    sparsity: float
    n_active: int
    emse_measured: dict[Algorithm, float]
    emse_stderr: dict[Algorithm, float]
    emse_predicted: dict[Algorithm, float]
    beta2: float
    alpha2: float

    @property
    def beta2_sign(self) -> int:
        return int(np.sign(self.beta2))


def sparsity_sweep(
    base: Scenario,
    s_grid,
    params_list,
    duration: int | None = None,
    window_fraction: float = 0.2,
) -> list[SweepRow]:
    """Re-run the ensemble across systems of varying sparsity.

    ``s_grid`` is a strictly increasing list of zero-tap fractions in [0, 1];
    each is snapped to the nearest achievable n_active.  Every grid point
    reuses the base scenario's statistics, seeding, and ensemble size, so the
    sweep is paired across sparsity levels too.
    """
    grid = [float(s) for s in s_grid]
    if not grid:
        raise ValueError("s_grid must be non-empty")
    if any(not 0.0 <= s <= 1.0 for s in grid):
        raise ValueError("sparsity values must lie in [0, 1]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("s_grid must be strictly increasing")
    n_taps = base.n_taps
    actives = [int(round((1.0 - s) * n_taps)) for s in grid]
    if len(set(actives)) != len(actives):
        raise ValueError(f"s_grid is finer than the tap resolution 1/{n_taps}")
    duration = base.total_iterations if duration is None else int(duration)

    rows: list[SweepRow] = []
    for s_req, n_active in zip(grid, actives):
        scenario = static_scenario(
            n_active,
            duration=duration,
            n_taps=n_taps,
            sigma_x2=base.sigma_x2,
            sigma_v2=base.sigma_v2,
            ensemble=base.ensemble,
            seed=base.seed,
        )
        stats = run_ensemble(scenario, params_list, window_fraction=window_fraction)
        measured: dict[Algorithm, float] = {}
        stderr: dict[Algorithm, float] = {}
        predicted: dict[Algorithm, float] = {}
        beta2 = np.nan
        alpha2 = np.nan
        spectrum = SpectrumModel.white(n_taps, base.sigma_x2)
        for alg, params in stats.params.items():
            est = steady_state_emse(stats, base.sigma_v2, alg)
            measured[alg] = est.value
            stderr[alg] = est.stderr
            if alg is Algorithm.LMS:
                predicted[alg] = lms_emse(eta(params.mu, spectrum), base.sigma_v2)
            else:
                prediction, _ = _predict_attractor(stats, alg)
                predicted[alg] = prediction.total if prediction is not None else np.nan
                if prediction is not None:
                    if alg is Algorithm.GC_LMS:
                        beta2 = prediction.l1_gain
                    else:
                        alpha2 = prediction.l1_gain
        rows.append(
            SweepRow(
                sparsity=(n_taps - n_active) / n_taps,
                n_active=n_active,
                emse_measured=measured,
                emse_stderr=stderr,
                emse_predicted=predicted,
                beta2=beta2,
                alpha2=alpha2,
            )
        )
    return rows


@dataclass(frozen=True)
class ReportRow:
    """One algorithm's theory-vs-simulation line."""

    algorithm: Algorithm
    emse_measured: float
    emse_stderr: float
    emse_predicted: float
    rel_gap: float
    quad_moment: float
    l1_gain: float
    rho_window_upper: float
    rho_in_window: bool | None
    degenerate: bool


@dataclass(frozen=True)
class TheorySimReport:
    """Theory-vs-simulation table plus the gated-vs-ungated bias comparison."""

    eta_value: float
    noise_floor: float
    rows: tuple[ReportRow, ...]
    bias_comparison: ActiveTapBiasReport | None


def _rel_gap(measured: float, predicted: float) -> float:
    if not np.isfinite(predicted) or predicted == 0.0:
        return float("nan")
    return (measured - predicted) / predicted


def theory_vs_sim_report(stats: EnsembleStats) -> TheorySimReport:
    """Assemble measured EMSE, predicted EMSE, and moment diagnostics.

    Predictions for the attractor algorithms use moments estimated from
    their own steady-state samples; a degenerate moment flags the row and
    leaves its prediction empty.  When both attractor algorithms are present
    and the system has active taps, the gated and ungated per-mode bias
    magnitudes are compared over the active support.
    """
    scenario = stats.scenario
    spectrum = SpectrumModel.white(scenario.n_taps, scenario.sigma_x2)
    w0 = scenario.phases[-1].w0
    sigma_v2 = scenario.sigma_v2
    rows: list[ReportRow] = []
    mean_dirs: dict[Algorithm, np.ndarray] = {}

    for alg, params in stats.params.items():
        est = steady_state_emse(stats, sigma_v2, alg)
        eta_value = eta(params.mu, spectrum)
        if alg is Algorithm.LMS:
            predicted = lms_emse(eta_value, sigma_v2)
            rows.append(
                ReportRow(
                    algorithm=alg,
                    emse_measured=est.value,
                    emse_stderr=est.stderr,
                    emse_predicted=predicted,
                    rel_gap=_rel_gap(est.value, predicted),
                    quad_moment=np.nan,
                    l1_gain=np.nan,
                    rho_window_upper=np.nan,
                    rho_in_window=None,
                    degenerate=False,
                )
            )
            continue
        prediction, mean_dir = _predict_attractor(stats, alg)
        if mean_dir is not None:
            mean_dirs[alg] = mean_dir
        if prediction is None:
            rows.append(
                ReportRow(
                    algorithm=alg,
                    emse_measured=est.value,
                    emse_stderr=est.stderr,
                    emse_predicted=np.nan,
                    rel_gap=np.nan,
                    quad_moment=np.nan,
                    l1_gain=np.nan,
                    rho_window_upper=np.nan,
                    rho_in_window=None,
                    degenerate=True,
                )
            )
            continue
        rows.append(
            ReportRow(
                algorithm=alg,
                emse_measured=est.value,
                emse_stderr=est.stderr,
                emse_predicted=prediction.total,
                rel_gap=_rel_gap(est.value, prediction.total),
                quad_moment=prediction.quad_moment,
                l1_gain=prediction.l1_gain,
                rho_window_upper=prediction.rho_window_upper,
                rho_in_window=bool(0.0 < stats.params[alg].rho < prediction.rho_window_upper),
                degenerate=False,
            )
        )

    bias: ActiveTapBiasReport | None = None
    _, nonzero = support_sets(w0)
    if Algorithm.GC_LMS in mean_dirs and Algorithm.ZA_LMS in mean_dirs and nonzero.size:
        s = s_vector(spectrum, mean_dirs[Algorithm.GC_LMS])
        b = b_vector(spectrum, mean_dirs[Algorithm.ZA_LMS])
        bias = compare_active_tap_bias(s, b, nonzero)

    mu_values = {p.mu for p in stats.params.values()}
    eta_value = eta(mu_values.pop(), spectrum) if len(mu_values) == 1 else np.nan
    return TheorySimReport(
        eta_value=eta_value,
        noise_floor=sigma_v2,
        rows=tuple(rows),
        bias_comparison=bias,
    )
