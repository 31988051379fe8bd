"""Per-sample adaptive filter recursions.

Three weight updates share one error path e(n) = d(n) - w(n).x(n):

    lms     w(n+1) = w(n) + mu e(n) x(n)
    za-lms  w(n+1) = w(n) + mu e(n) x(n) - rho sgn(w(n))
    gc-lms  w(n+1) = w(n) + mu e(n) x(n) - rho g(n) o sgn(w(n))

where the gate g(n) = |sgn(e(n) x(n)) - sgn(w(n))| / 2 switches each tap's
zero attractor on only where the instantaneous gradient direction disagrees
with the current weight sign.  All step functions are pure: they read a
FilterState and return a StepRecord without mutating anything.  They accept a
single state (weights shaped ``(n_taps,)``) or a stacked ensemble
(``(runs, n_taps)``), which is how the Monte Carlo harness drives them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DivergenceError
from .signals import Realization, tap_dot, tap_windows


class Algorithm(Enum):
    """The three update rules, with their config names and CSV column keys."""

    LMS = "lms"
    ZA_LMS = "za-lms"
    GC_LMS = "gc-lms"

    @classmethod
    def from_name(cls, name: "str | Algorithm") -> "Algorithm":
        if isinstance(name, Algorithm):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "lms": cls.LMS,
            "za-lms": cls.ZA_LMS,
            "zalms": cls.ZA_LMS,
            "gc-lms": cls.GC_LMS,
            "gclms": cls.GC_LMS,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown algorithm {name!r}; expected one of lms, za-lms, gc-lms")

    @property
    def column(self) -> str:
        """Key used in CSV headers (no hyphen)."""
        return {Algorithm.LMS: "lms", Algorithm.ZA_LMS: "zalms", Algorithm.GC_LMS: "gclms"}[self]


@dataclass(frozen=True)
class FilterParams:
    """Step size, attractor strength, and which update rule to run."""

    mu: float
    rho: float = 0.0
    algorithm: Algorithm = Algorithm.LMS

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "algorithm", Algorithm.from_name(self.algorithm))
        if not np.isfinite(self.mu) or self.mu <= 0.0:
            raise ValueError(f"mu must be a finite positive step size, got {self.mu}")
        if not np.isfinite(self.rho) or self.rho < 0.0:
            raise ValueError(f"rho must be finite and >= 0, got {self.rho}")


@dataclass
class FilterState:
    """Current weights and the iteration index they correspond to."""

    w: np.ndarray
    n: int = 0


@dataclass(frozen=True)
class StepRecord:
    """Everything one update produced: output, error, gate, next weights."""

    y: np.ndarray
    e: np.ndarray
    w_next: np.ndarray
    gate: np.ndarray | None = None


def sgn(v: np.ndarray) -> np.ndarray:
    """Component-wise sign with sgn(0) = 0, the exact-zero convention."""
    return np.sign(np.asarray(v, dtype=float))


def gate(e: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Per-tap attractor gate |sgn(e * x) - sgn(w)| / 2.

    Entries are 0 where the signs agree, 1 where they strictly oppose, and
    1/2 where exactly one of the two signs is zero.  ``e`` may be a scalar
    (single run) or shaped like ``x`` without its tap axis (ensemble).
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != w.shape:
        raise ValueError(f"shape mismatch: x {x.shape} vs w {w.shape}")
    e = np.asarray(e, dtype=float)
    if e.ndim == x.ndim - 1:
        e = e[..., None]
    return 0.5 * np.abs(np.sign(e * x) - np.sign(w))


def _scaled_error(e: np.ndarray, x: np.ndarray) -> np.ndarray:
    """e broadcast against the tap axis of x."""
    e = np.asarray(e, dtype=float)
    if e.ndim == x.ndim - 1:
        return e[..., None]
    return e


def _check_finite(state: FilterState, w_next: np.ndarray, record: StepRecord) -> None:
    finite = np.isfinite(w_next)
    if finite.all():
        return
    if w_next.ndim > 1:
        bad = tuple(int(r) for r in np.nonzero(~finite.all(axis=-1))[0])
    else:
        bad = None
    raise DivergenceError(state.n, runs=bad, record=record)


def lms_step(state: FilterState, params: FilterParams, x: np.ndarray, d_obs) -> StepRecord:
    """One plain LMS update."""
    x = np.asarray(x, dtype=float)
    y = tap_dot(state.w, x)
    e = np.asarray(d_obs, dtype=float) - y
    w_next = state.w + params.mu * _scaled_error(e, x) * x
    record = StepRecord(y=y, e=e, w_next=w_next)
    _check_finite(state, w_next, record)
    return record


def za_lms_step(state: FilterState, params: FilterParams, x: np.ndarray, d_obs) -> StepRecord:
    """One zero-attracting update: LMS plus a uniform -rho sgn(w) pull."""
    x = np.asarray(x, dtype=float)
    y = tap_dot(state.w, x)
    e = np.asarray(d_obs, dtype=float) - y
    w_next = state.w + params.mu * _scaled_error(e, x) * x
    if params.rho != 0.0:
        # Guarded so rho = 0 reproduces lms_step bit for bit.
        w_next = w_next - params.rho * sgn(state.w)
    record = StepRecord(y=y, e=e, w_next=w_next)
    _check_finite(state, w_next, record)
    return record


def gc_lms_step(state: FilterState, params: FilterParams, x: np.ndarray, d_obs) -> StepRecord:
    """One gated update: the attractor acts only where the gate opens."""
    x = np.asarray(x, dtype=float)
    y = tap_dot(state.w, x)
    e = np.asarray(d_obs, dtype=float) - y
    g = gate(e, x, state.w)
    w_next = state.w + params.mu * _scaled_error(e, x) * x
    if params.rho != 0.0:
        w_next = w_next - params.rho * (g * sgn(state.w))
    record = StepRecord(y=y, e=e, w_next=w_next, gate=g)
    _check_finite(state, w_next, record)
    return record


_STEPS = {
    Algorithm.LMS: lms_step,
    Algorithm.ZA_LMS: za_lms_step,
    Algorithm.GC_LMS: gc_lms_step,
}


def step_fn(algorithm: "Algorithm | str"):
    """The step function implementing an algorithm."""
    return _STEPS[Algorithm.from_name(algorithm)]


@dataclass(frozen=True, eq=False)
class FilterTrajectory:
    """A single run's outputs: per-iteration error and optional weight snapshots."""

    e: np.ndarray
    w_final: np.ndarray
    params: FilterParams
    snapshot_iters: np.ndarray | None = None
    w_snapshots: np.ndarray | None = None
    gates: np.ndarray | None = field(default=None, repr=False)

    @property
    def sq_err(self) -> np.ndarray:
        return self.e**2


def run_filter(
    params: FilterParams,
    realization: Realization,
    w_init: np.ndarray | None = None,
    snapshot_stride: int = 0,
    record_gates: bool = False,
) -> FilterTrajectory:
    """Run one filter over one realization.

    Weights start at ``w_init`` (default all zeros).  With a positive
    ``snapshot_stride`` the pre-update weights at iterations 0, stride,
    2*stride, ... are kept alongside the error sequence.  Raises
    DivergenceError the moment a weight goes non-finite.
    """
    n_taps = realization.n_taps
    if w_init is None:
        w_init = np.zeros(n_taps)
    w_init = np.array(w_init, dtype=float)
    if w_init.shape != (n_taps,):
        raise ValueError(f"w_init must have shape ({n_taps},), got {w_init.shape}")
    if not np.all(np.isfinite(w_init)):
        raise ValueError("w_init must be finite")
    snapshot_stride = int(snapshot_stride)
    if snapshot_stride < 0:
        raise ValueError(f"snapshot_stride must be >= 0, got {snapshot_stride}")

    step = step_fn(params.algorithm)
    total = len(realization)
    windows = tap_windows(realization.x, n_taps)
    err = np.empty(total)
    snaps: list[np.ndarray] = []
    snap_iters: list[int] = []
    gates = np.empty((total, n_taps)) if record_gates else None

    state = FilterState(w=w_init, n=0)
    for n in range(total):
        if snapshot_stride and n % snapshot_stride == 0:
            snaps.append(state.w.copy())
            snap_iters.append(n)
        rec = step(state, params, windows[n], realization.d[n])
        err[n] = rec.e
        if gates is not None:
            gates[n] = rec.gate if rec.gate is not None else 1.0
        state.w = rec.w_next
        state.n = n + 1

    return FilterTrajectory(
        e=err,
        w_final=state.w,
        params=params,
        snapshot_iters=np.asarray(snap_iters) if snapshot_stride else None,
        w_snapshots=np.asarray(snaps) if snapshot_stride else None,
        gates=gates,
    )
