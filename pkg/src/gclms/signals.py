"""Seedable generation of inputs, noise, sparse systems, and scenarios.

Everything downstream (single runs, ensembles, the CLI) draws its randomness
through this module so that a (seed, run index) pair pins the exact byte
stream: run r uses the generator spawned from ``SeedSequence(seed)`` child r,
and each run draws its input stream first and its noise stream second.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGN_PATTERNS = ("alternating", "all-positive", "random")


def make_sparse_system(
    n_taps: int,
    n_active: int,
    magnitude: float = 1.0,
    sign_pattern: str = "alternating",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Build a tap vector with ``n_active`` nonzero entries of |value| ``magnitude``.

    The i-th active tap sits at index ``i * n_taps // n_active``, so the
    support is evenly spaced, starts at tap 0, and depends only on
    (n_taps, n_active).  ``sign_pattern`` is one of ``alternating`` (+, -, +,
    ... over the active taps), ``all-positive``, or ``random`` (fair coin per
    active tap, drawn from ``rng``).
    """
    n_taps = int(n_taps)
    n_active = int(n_active)
    if n_taps < 1:
        raise ValueError(f"n_taps must be >= 1, got {n_taps}")
    if not 0 <= n_active <= n_taps:
        raise ValueError(f"n_active must be in [0, {n_taps}], got {n_active}")
    magnitude = float(magnitude)
    if magnitude <= 0.0:
        raise ValueError(f"magnitude must be > 0, got {magnitude}")
    if sign_pattern not in SIGN_PATTERNS:
        raise ValueError(f"sign_pattern must be one of {SIGN_PATTERNS}, got {sign_pattern!r}")

    w = np.zeros(n_taps)
    if n_active == 0:
        return w
    support = (np.arange(n_active) * n_taps) // n_active
    if sign_pattern == "alternating":
        signs = np.where(np.arange(n_active) % 2 == 0, 1.0, -1.0)
    elif sign_pattern == "all-positive":
        signs = np.ones(n_active)
    else:
        if rng is None:
            raise ValueError("sign_pattern='random' requires an rng")
        signs = rng.choice([-1.0, 1.0], size=n_active)
    w[support] = magnitude * signs
    return w


def gen_input(count: int, sigma_x2: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. zero-mean Gaussian input samples of variance ``sigma_x2``."""
    count = int(count)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    sigma_x2 = float(sigma_x2)
    if sigma_x2 <= 0.0:
        raise ValueError(f"sigma_x2 must be > 0, got {sigma_x2}")
    return rng.normal(0.0, np.sqrt(sigma_x2), size=count)


def gen_noise(count: int, sigma_v2: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` observation-noise samples of variance ``sigma_v2`` (0 allowed)."""
    count = int(count)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    sigma_v2 = float(sigma_v2)
    if sigma_v2 < 0.0:
        raise ValueError(f"sigma_v2 must be >= 0, got {sigma_v2}")
    return rng.normal(0.0, np.sqrt(sigma_v2), size=count)


def tap_dot(w: np.ndarray, windows: np.ndarray) -> np.ndarray:
    """Inner product along the trailing tap axis.

    This is the single float path used for every filter output and every
    synthesized observation, so a filter initialized at the true system sees
    a bit-exact zero error on noiseless data.
    """
    return np.sum(np.asarray(w, dtype=float) * np.asarray(windows, dtype=float), axis=-1)


def tap_windows(x: np.ndarray, n_taps: int) -> np.ndarray:
    """Tapped-delay-line regressor windows for an input stream.

    Returns a read-only view of shape ``x.shape + (n_taps,)`` whose entry
    ``[..., n, k]`` is ``x[..., n - k]``, with zeros for the pre-history
    ``n - k < 0``.  Works on a single stream ``(T,)`` or a stacked ensemble
    ``(runs, T)``.
    """
    x = np.asarray(x, dtype=float)
    n_taps = int(n_taps)
    if n_taps < 1:
        raise ValueError(f"n_taps must be >= 1, got {n_taps}")
    pad = np.zeros(x.shape[:-1] + (n_taps - 1,))
    padded = np.concatenate([pad, x], axis=-1)
    ascending = np.lib.stride_tricks.sliding_window_view(padded, n_taps, axis=-1)
    return ascending[..., ::-1]


def gen_observation(w0: np.ndarray, x_window: np.ndarray, noise_sample: float) -> float:
    """One observation d(n) = w0 . x_window + noise_sample."""
    w0 = np.asarray(w0, dtype=float)
    x_window = np.asarray(x_window, dtype=float)
    if w0.shape != x_window.shape:
        raise ValueError(f"shape mismatch: w0 {w0.shape} vs window {x_window.shape}")
    return float(tap_dot(w0, x_window)) + float(noise_sample)


@dataclass(frozen=True, eq=False)
class SystemPhase:
    """A stretch of iterations during which the unknown system is constant."""

    w0: np.ndarray
    duration: int

    def __post_init__(self) -> None:
        w0 = np.array(self.w0, dtype=float)
        if w0.ndim != 1 or w0.size < 1:
            raise ValueError("w0 must be a non-empty 1-D vector")
        if not np.all(np.isfinite(w0)):
            raise ValueError("w0 must be finite")
        w0.flags.writeable = False
        object.__setattr__(self, "w0", w0)
        duration = int(self.duration)
        if duration < 1:
            raise ValueError(f"duration must be >= 1, got {duration}")
        object.__setattr__(self, "duration", duration)

    @property
    def n_taps(self) -> int:
        return self.w0.size


@dataclass(frozen=True, eq=False)
class Scenario:
    """A full experiment description: signal statistics, system phases, seeding."""

    n_taps: int
    sigma_x2: float
    sigma_v2: float
    phases: tuple[SystemPhase, ...]
    ensemble: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_taps", int(self.n_taps))
        object.__setattr__(self, "sigma_x2", float(self.sigma_x2))
        object.__setattr__(self, "sigma_v2", float(self.sigma_v2))
        object.__setattr__(self, "phases", tuple(self.phases))
        object.__setattr__(self, "ensemble", int(self.ensemble))
        object.__setattr__(self, "seed", int(self.seed))
        if self.n_taps < 1:
            raise ValueError(f"n_taps must be >= 1, got {self.n_taps}")
        if self.sigma_x2 <= 0.0:
            raise ValueError(f"sigma_x2 must be > 0, got {self.sigma_x2}")
        if self.sigma_v2 < 0.0:
            raise ValueError(f"sigma_v2 must be >= 0, got {self.sigma_v2}")
        if not self.phases:
            raise ValueError("at least one phase is required")
        for phase in self.phases:
            if phase.n_taps != self.n_taps:
                raise ValueError(
                    f"phase tap count {phase.n_taps} does not match scenario n_taps {self.n_taps}"
                )
        if self.ensemble < 1:
            raise ValueError(f"ensemble must be >= 1, got {self.ensemble}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a uint64, got {self.seed}")

    @property
    def total_iterations(self) -> int:
        return sum(p.duration for p in self.phases)

    def phase_bounds(self) -> list[tuple[int, int]]:
        """Half-open iteration ranges [start, stop) for each phase, in order."""
        bounds = []
        start = 0
        for phase in self.phases:
            bounds.append((start, start + phase.duration))
            start += phase.duration
        return bounds

    def equals(self, other: "Scenario") -> bool:
        """Field-wise equality, comparing phase systems element-wise."""
        if not isinstance(other, Scenario):
            return False
        same_scalars = (
            self.n_taps == other.n_taps
            and self.sigma_x2 == other.sigma_x2
            and self.sigma_v2 == other.sigma_v2
            and self.ensemble == other.ensemble
            and self.seed == other.seed
        )
        if not same_scalars or len(self.phases) != len(other.phases):
            return False
        return all(
            a.duration == b.duration and np.array_equal(a.w0, b.w0)
            for a, b in zip(self.phases, other.phases)
        )


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """The generator for ensemble run ``run_index`` under root ``seed``.

    Equivalent to ``SeedSequence(seed).spawn(n)[run_index]`` for any n, so the
    stream of a given run never depends on how many runs surround it.
    """
    run_index = int(run_index)
    if run_index < 0:
        raise ValueError(f"run_index must be >= 0, got {run_index}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(run_index,)))


@dataclass(frozen=True, eq=False)
class Realization:
    """One run's drawn streams: input x, noise, and observations d."""

    x: np.ndarray
    noise: np.ndarray
    d: np.ndarray
    n_taps: int

    def __post_init__(self) -> None:
        for name in ("x", "noise", "d"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not self.x.shape == self.noise.shape == self.d.shape:
            raise ValueError("x, noise, d must share a shape")

    def __len__(self) -> int:
        return self.x.shape[-1]


def realize(scenario: Scenario, run_index: int) -> Realization:
    """Draw run ``run_index`` of a scenario: input, noise, and observations."""
    rng = run_rng(scenario.seed, run_index)
    total = scenario.total_iterations
    x = gen_input(total, scenario.sigma_x2, rng)
    noise = gen_noise(total, scenario.sigma_v2, rng)
    windows = tap_windows(x, scenario.n_taps)
    d = np.empty(total)
    for phase, (start, stop) in zip(scenario.phases, scenario.phase_bounds()):
        d[start:stop] = tap_dot(phase.w0, windows[start:stop]) + noise[start:stop]
    return Realization(x=x, noise=noise, d=d, n_taps=scenario.n_taps)
