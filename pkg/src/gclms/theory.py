"""Closed-form steady-state predictions for the three recursions.

Under the usual independence assumptions the excess mean-square error of LMS
with step size mu over an input with correlation eigenvalues lam_k is

    eta      = sum_k mu lam_k / (1 - mu lam_k)     (= Tr(mu R (I - mu R)^-1))
    lms_emse = eta sigma_v2 / (2 - eta),

finite exactly when eta < 2.  A sign attractor of strength rho (uniform for
za-lms, gated for gc-lms) shifts this by a penalty term

    m1 rho (rho - 2 m2 / m1) / (2 - eta)

where m1 is the attractor direction's quadratic moment through
(I - mu R)^-1 and m2 is the attractor's l1-style gain over the true system:

    za-lms  m1 = E[ sgn(w)^T (I - mu R)^-1 sgn(w) ]      m2 = E||w||_1 - ||w0||_1
    gc-lms  m1 = E[ (g o sgn(w))^T (I - mu R)^-1 (g o sgn(w)) ]
            m2 = E[ sum_i g_i (|w_i| - |w0_i|) ]

The penalty is negative (the attractor helps) exactly when 0 < rho < 2 m2/m1,
so a positive m2 is the gain condition.  The module also carries the mean
weight limit, the per-tap second-moment fixed point that reproduces the same
excess MSE, and the estimators that extract all of these moments from
steady-state samples.  Everything here assumes diagonalized coordinates: for
white input (R = sigma_x2 I) the tap basis is already the eigenbasis, which is
the regime the Monte Carlo harness validates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateMomentError, StabilityError


@dataclass(frozen=True, eq=False)
class SpectrumModel:
    """Eigenvalues of the input correlation matrix, one per tap.

    ``sigma_x2`` is set when the model is white (R = sigma_x2 I); then every
    eigenvalue equals sigma_x2 and the eigenbasis is the tap basis, so
    per-tap vectors (mean gate-sign, bias) line up with the eigenvalues.
    Models built from a full matrix lose that alignment and should only feed
    the scalar forms (eta, lms_emse).
    """

    lambdas: np.ndarray
    sigma_x2: float | None = None

    def __post_init__(self) -> None:
        lam = np.array(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("lambdas must be a non-empty 1-D vector")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
            raise ValueError("eigenvalues must be finite and > 0")
        lam.flags.writeable = False
        object.__setattr__(self, "lambdas", lam)
        if self.sigma_x2 is not None:
            sigma_x2 = float(self.sigma_x2)
            if not np.all(lam == sigma_x2):
                raise ValueError("white model requires all eigenvalues equal to sigma_x2")
            object.__setattr__(self, "sigma_x2", sigma_x2)

    @classmethod
    def white(cls, n_taps: int, sigma_x2: float) -> "SpectrumModel":
        sigma_x2 = float(sigma_x2)
        if sigma_x2 <= 0.0:
            raise ValueError(f"sigma_x2 must be > 0, got {sigma_x2}")
        return cls(lambdas=np.full(int(n_taps), sigma_x2), sigma_x2=sigma_x2)

    @classmethod
    def from_matrix(cls, correlation: np.ndarray) -> "SpectrumModel":
        corr = np.asarray(correlation, dtype=float)
        if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
            raise ValueError("correlation must be a square matrix")
        if not np.allclose(corr, corr.T):
            raise ValueError("correlation must be symmetric")
        return cls(lambdas=np.linalg.eigvalsh(corr))

    @property
    def n_taps(self) -> int:
        return self.lambdas.size

    @property
    def lambda_max(self) -> float:
        return float(self.lambdas.max())

    @property
    def is_white(self) -> bool:
        return self.sigma_x2 is not None


def _check_step(mu: float, spectrum: SpectrumModel) -> float:
    mu = float(mu)
    if mu < 0.0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if mu * spectrum.lambda_max >= 1.0:
        raise StabilityError(
            f"mu lambda_max = {mu * spectrum.lambda_max:.6g} >= 1; "
            "the closed forms need mu < 1/lambda_max"
        )
    return mu


def eta(mu: float, spectrum: SpectrumModel) -> float:
    """Step-size concentration sum_k mu lam_k / (1 - mu lam_k)."""
    mu = _check_step(mu, spectrum)
    terms = mu * spectrum.lambdas
    return float(np.sum(terms / (1.0 - terms)))


def eta_from_matrix(mu: float, correlation: np.ndarray) -> float:
    """eta computed in matrix form, Tr(mu R (I - mu R)^-1).

    Agrees with ``eta`` on the eigenvalues of R; kept separate so the two
    routes can cross-check each other.
    """
    corr = np.asarray(correlation, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError("correlation must be a square matrix")
    mu = float(mu)
    if mu < 0.0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    lam_max = float(np.linalg.eigvalsh(corr).max())
    if mu * lam_max >= 1.0:
        raise StabilityError(
            f"mu lambda_max = {mu * lam_max:.6g} >= 1; the closed forms need mu < 1/lambda_max"
        )
    n = corr.shape[0]
    resolvent = np.linalg.solve(np.eye(n) - mu * corr, mu * corr)
    return float(np.trace(resolvent))


def lms_emse(eta_value: float, sigma_v2: float) -> float:
    """Steady-state excess MSE of plain LMS: eta sigma_v2 / (2 - eta)."""
    eta_value = float(eta_value)
    sigma_v2 = float(sigma_v2)
    if sigma_v2 < 0.0:
        raise ValueError(f"sigma_v2 must be >= 0, got {sigma_v2}")
    if not 0.0 <= eta_value < 2.0:
        raise StabilityError(f"eta = {eta_value:.6g} outside [0, 2); mean-square divergence")
    return eta_value * sigma_v2 / (2.0 - eta_value)


@dataclass(frozen=True)
class EmsePrediction:
    """An attractor algorithm's predicted excess MSE, decomposed.

    total = lms_term + penalty_term exactly; penalty_term is negative (the
    attractor beats LMS) iff 0 < rho < rho_window_upper = 2 l1_gain /
    quad_moment, which requires a positive l1_gain.
    """

    lms_term: float
    penalty_term: float
    total: float
    quad_moment: float
    l1_gain: float
    rho_window_upper: float


def _attractor_emse(
    eta_value: float, sigma_v2: float, quad_moment: float, l1_gain: float, rho: float
) -> EmsePrediction:
    quad_moment = float(quad_moment)
    l1_gain = float(l1_gain)
    rho = float(rho)
    if rho < 0.0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if quad_moment <= 0.0:
        raise DegenerateMomentError(
            f"quadratic attractor moment must be > 0, got {quad_moment:.6g}"
        )
    base = lms_emse(eta_value, sigma_v2)
    window_upper = 2.0 * l1_gain / quad_moment
    penalty = quad_moment * rho * (rho - 2.0 * l1_gain / quad_moment) / (2.0 - float(eta_value))
    return EmsePrediction(
        lms_term=base,
        penalty_term=penalty,
        total=base + penalty,
        quad_moment=quad_moment,
        l1_gain=l1_gain,
        rho_window_upper=window_upper,
    )


def za_emse(
    eta_value: float, sigma_v2: float, alpha1: float, alpha2: float, rho: float
) -> EmsePrediction:
    """Excess MSE of the uniform attractor given its moments alpha1, alpha2."""
    return _attractor_emse(eta_value, sigma_v2, alpha1, alpha2, rho)


def gc_emse(
    eta_value: float, sigma_v2: float, beta1: float, beta2: float, rho: float
) -> EmsePrediction:
    """Excess MSE of the gated attractor given its moments beta1, beta2."""
    return _attractor_emse(eta_value, sigma_v2, beta1, beta2, rho)


@dataclass(frozen=True, eq=False)
class SteadyStateSamples:
    """Raw per-sample records from a steady-state window.

    ``w`` holds pre-update weights shaped (runs, window, taps), ``err`` the
    matching errors (runs, window).  ``gate`` carries the per-tap gates for
    the gated algorithm and is None when the attractor is ungated (gate
    identically 1).  ``window_start`` is the absolute iteration index of the
    window's first sample.
    """

    w: np.ndarray
    err: np.ndarray
    gate: np.ndarray | None = None
    window_start: int = 0

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        err = np.asarray(self.err, dtype=float)
        if w.ndim != 3:
            raise ValueError(f"w must be (runs, window, taps), got shape {w.shape}")
        if err.shape != w.shape[:2]:
            raise ValueError(f"err shape {err.shape} does not match w {w.shape[:2]}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "err", err)
        if self.gate is not None:
            g = np.asarray(self.gate, dtype=float)
            if g.shape != w.shape:
                raise ValueError(f"gate shape {g.shape} does not match w {w.shape}")
            object.__setattr__(self, "gate", g)
        object.__setattr__(self, "window_start", int(self.window_start))

    @property
    def n_runs(self) -> int:
        return self.w.shape[0]

    @property
    def window_len(self) -> int:
        return self.w.shape[1]

    @property
    def n_taps(self) -> int:
        return self.w.shape[2]

    @property
    def n_samples(self) -> int:
        return self.n_runs * self.window_len

    def gate_sgn(self) -> np.ndarray:
        """Per-sample attractor direction g o sgn(w), (runs, window, taps)."""
        v = np.sign(self.w)
        if self.gate is not None:
            v = self.gate * v
        return v

    def per_run_mean_w(self) -> np.ndarray:
        return self.w.mean(axis=1)

    def per_run_mean_gate_sgn(self) -> np.ndarray:
        return self.gate_sgn().mean(axis=1)

    def per_run_mean_sgn(self) -> np.ndarray:
        return np.sign(self.w).mean(axis=1)


def _check_samples(samples: SteadyStateSamples, spectrum: SpectrumModel, w0: np.ndarray):
    if samples.n_samples == 0:
        raise ValueError("steady-state window is empty")
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (samples.n_taps,):
        raise ValueError(f"w0 must have shape ({samples.n_taps},), got {w0.shape}")
    if spectrum.n_taps != samples.n_taps:
        raise ValueError(
            f"spectrum has {spectrum.n_taps} eigenvalues for {samples.n_taps} taps"
        )
    return w0


def estimate_gc_moments(
    samples: SteadyStateSamples, spectrum: SpectrumModel, mu: float, w0: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """Estimate (beta1, beta2, mean gate-sign vector) from steady-state samples.

    beta1 is the sample mean of the quadratic form of g o sgn(w) through
    (I - mu R)^-1; beta2 pairs the same gate realization against |w| and
    |w0| in a single sample, mean of sum_i g_i (|w_i| - |w0_i|).
    """
    w0 = _check_samples(samples, spectrum, w0)
    mu = _check_step(mu, spectrum)
    scale = 1.0 / (1.0 - mu * spectrum.lambdas)
    v = samples.gate_sgn()
    beta1 = float(np.mean(np.sum(v * v * scale, axis=-1)))
    gate = samples.gate if samples.gate is not None else 1.0
    beta2 = float(np.mean(np.sum(gate * (np.abs(samples.w) - np.abs(w0)), axis=-1)))
    mean_gate_sgn = v.reshape(-1, samples.n_taps).mean(axis=0)
    return beta1, beta2, mean_gate_sgn


def estimate_za_moments(
    samples: SteadyStateSamples, spectrum: SpectrumModel, mu: float, w0: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """Estimate (alpha1, alpha2, mean sign vector): the gate-free moments."""
    w0 = _check_samples(samples, spectrum, w0)
    mu = _check_step(mu, spectrum)
    scale = 1.0 / (1.0 - mu * spectrum.lambdas)
    v = np.sign(samples.w)
    alpha1 = float(np.mean(np.sum(v * v * scale, axis=-1)))
    alpha2 = float(np.mean(np.sum(np.abs(samples.w) - np.abs(w0), axis=-1)))
    mean_sgn = v.reshape(-1, samples.n_taps).mean(axis=0)
    return alpha1, alpha2, mean_sgn


def mean_limit(
    w0: np.ndarray,
    rho: float,
    mu: float,
    spectrum: SpectrumModel,
    mean_gate_sgn: np.ndarray,
) -> np.ndarray:
    """Mean weight limit w0 - (rho/mu) R^-1 E[g o sgn(w)] in the eigenbasis."""
    w0 = np.asarray(w0, dtype=float)
    mean_gate_sgn = np.asarray(mean_gate_sgn, dtype=float)
    if w0.shape != mean_gate_sgn.shape or w0.shape != (spectrum.n_taps,):
        raise ValueError("w0, mean_gate_sgn, and spectrum must share one tap count")
    mu = _check_step(mu, spectrum)
    if mu == 0.0:
        raise ValueError("mu must be > 0")
    rho = float(rho)
    if rho < 0.0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    return w0 - (rho / mu) * mean_gate_sgn / spectrum.lambdas


def s_vector(spectrum: SpectrumModel, mean_gate_sgn: np.ndarray) -> np.ndarray:
    """Per-mode gated bias direction: mean gate-sign over the eigenvalues."""
    mean_gate_sgn = np.asarray(mean_gate_sgn, dtype=float)
    if mean_gate_sgn.shape != (spectrum.n_taps,):
        raise ValueError("mean_gate_sgn must have one entry per eigenvalue")
    return mean_gate_sgn / spectrum.lambdas


def b_vector(spectrum: SpectrumModel, mean_sgn: np.ndarray) -> np.ndarray:
    """Per-mode ungated bias direction: mean sign over the eigenvalues."""
    mean_sgn = np.asarray(mean_sgn, dtype=float)
    if mean_sgn.shape != (spectrum.n_taps,):
        raise ValueError("mean_sgn must have one entry per eigenvalue")
    return mean_sgn / spectrum.lambdas


def _index_sets(n_taps: int, zero_set, nonzero_set) -> tuple[np.ndarray, np.ndarray]:
    zero = np.asarray(sorted(int(i) for i in zero_set), dtype=int)
    nonzero = np.asarray(sorted(int(i) for i in nonzero_set), dtype=int)
    merged = np.sort(np.concatenate([zero, nonzero]))
    if merged.size != n_taps or not np.array_equal(merged, np.arange(n_taps)):
        raise ValueError("zero_set and nonzero_set must partition the tap indices")
    return zero, nonzero


def support_sets(w0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(zero_set, nonzero_set) index partition of a system vector."""
    w0 = np.asarray(w0, dtype=float)
    zero = np.flatnonzero(w0 == 0.0)
    nonzero = np.flatnonzero(w0 != 0.0)
    return zero, nonzero


def beta2_approx(
    phi_diag: np.ndarray,
    s: np.ndarray,
    rho: float,
    mu: float,
    zero_set,
    nonzero_set,
) -> float:
    """Small-fluctuation approximation of the gated l1 gain beta2.

    Zero taps of the true system contribute the folded-Gaussian mean
    sqrt(2 phi_i / pi) of their fluctuation; nonzero taps contribute their
    bias magnitude -(rho/mu) |s_i|:

        beta2 ~ sum_{i in zero} sqrt(2 phi_i / pi) - (rho/mu) sum_{i in nonzero} |s_i|
    """
    phi_diag = np.asarray(phi_diag, dtype=float)
    s = np.asarray(s, dtype=float)
    if phi_diag.shape != s.shape or phi_diag.ndim != 1:
        raise ValueError("phi_diag and s must be 1-D vectors of equal length")
    if np.any(phi_diag < 0.0):
        raise ValueError("per-tap second moments must be >= 0")
    mu = float(mu)
    if mu <= 0.0:
        raise ValueError(f"mu must be > 0, got {mu}")
    rho = float(rho)
    if rho < 0.0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    zero, nonzero = _index_sets(phi_diag.size, zero_set, nonzero_set)
    fluctuation = float(np.sum(np.sqrt(2.0 * phi_diag[zero] / np.pi)))
    bias = (rho / mu) * float(np.sum(np.abs(s[nonzero])))
    return fluctuation - bias


def phi_fixed_point(
    spectrum: SpectrumModel,
    mu: float,
    sigma_v2: float,
    rho: float,
    f_diag: np.ndarray | None = None,
    g_diag: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> tuple[np.ndarray, float]:
    """Per-mode second-moment fixed point and the excess MSE it implies.

    Solves phi = B phi + mu^2 sigma_v2 lam + rho^2 f - 2 rho (1 - mu lam) o g
    by plain iteration from zero, where B = diag(1 - 2 mu lam + 2 mu^2 lam^2)
    + mu^2 lam lam^T.  ``f_diag`` and ``g_diag`` are the attractor's
    second-moment and cross-moment diagonals (zero when rho = 0, their only
    exercised regime here).  Returns (phi, lam . phi); the second entry
    matches lms_emse(eta, sigma_v2) when rho = 0.  Raises StabilityError when
    the iteration fails to contract, reporting the spectral radius of B.
    """
    lam = spectrum.lambdas
    mu = _check_step(mu, spectrum)
    if mu == 0.0:
        raise ValueError("mu must be > 0")
    sigma_v2 = float(sigma_v2)
    if sigma_v2 < 0.0:
        raise ValueError(f"sigma_v2 must be >= 0, got {sigma_v2}")
    rho = float(rho)
    if rho < 0.0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    n = lam.size
    f_diag = np.zeros(n) if f_diag is None else np.asarray(f_diag, dtype=float)
    g_diag = np.zeros(n) if g_diag is None else np.asarray(g_diag, dtype=float)
    if f_diag.shape != (n,) or g_diag.shape != (n,):
        raise ValueError("f_diag and g_diag must have one entry per eigenvalue")

    b1 = 1.0 - 2.0 * mu * lam + 2.0 * (mu * lam) ** 2
    forcing = mu**2 * sigma_v2 * lam + rho**2 * f_diag - 2.0 * rho * (1.0 - mu * lam) * g_diag
    phi = np.zeros(n)
    prev_delta = None
    for _ in range(int(max_iter)):
        phi_next = b1 * phi + mu**2 * lam * float(lam @ phi) + forcing
        delta = float(np.max(np.abs(phi_next - phi)))
        phi = phi_next
        scale = float(np.max(np.abs(phi), initial=0.0))
        # Remaining error is the geometric tail delta * rate / (1 - rate),
        # not the last step; near-unit contraction the tail dominates.
        if delta == 0.0:
            return phi, float(lam @ phi)
        if prev_delta is not None and prev_delta > 0.0:
            rate = delta / prev_delta
            if rate < 1.0 and delta * rate / (1.0 - rate) <= tol * scale:
                return phi, float(lam @ phi)
        prev_delta = delta
        if not np.all(np.isfinite(phi)):
            break
    radius = float(np.max(np.abs(np.linalg.eigvalsh(np.diag(b1) + mu**2 * np.outer(lam, lam)))))
    raise StabilityError(
        f"second-moment recursion did not converge (spectral radius {radius:.6f}); "
        "it contracts only when eta < 2"
    )


@dataclass(frozen=True)
class ActiveTapBiasReport:
    """Aggregate bias magnitudes over the active taps, gated vs ungated."""

    gated: float
    ungated: float
    holds: bool


def compare_active_tap_bias(
    s: np.ndarray, b: np.ndarray, nonzero_set
) -> ActiveTapBiasReport:
    """Does the gate shrink the active-tap bias: sum |s_i| < sum |b_i| over NZ?

    An empty active set yields (0, 0, False): there is no bias to compare.
    """
    s = np.asarray(s, dtype=float)
    b = np.asarray(b, dtype=float)
    if s.shape != b.shape or s.ndim != 1:
        raise ValueError("s and b must be 1-D vectors of equal length")
    nonzero = np.asarray(sorted(int(i) for i in nonzero_set), dtype=int)
    if nonzero.size and (nonzero.min() < 0 or nonzero.max() >= s.size):
        raise ValueError("nonzero_set indices out of range")
    if nonzero.size == 0:
        return ActiveTapBiasReport(gated=0.0, ungated=0.0, holds=False)
    gated = float(np.sum(np.abs(s[nonzero])))
    ungated = float(np.sum(np.abs(b[nonzero])))
    return ActiveTapBiasReport(gated=gated, ungated=ungated, holds=gated < ungated)


class EmseEstimate(NamedTuple):
    """A measured excess MSE with its standard error over runs."""

    value: float
    stderr: float
