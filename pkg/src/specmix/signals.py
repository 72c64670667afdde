"""Time-series containers, periodogram, and the Whittle quasi-log-likelihood.

Frequencies are handled in cycles/sample throughout; conversion to Hz
(multiplication by the sampling rate) happens only at I/O boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GridMismatch,
    NonPositiveModel,
    TooShortSignal,
    ZeroVarianceSignal,
)

MIN_LENGTH = 8


def _as_float_vector(x, name: str) -> np.ndarray:
    out = np.asarray(x, dtype=float)
    if out.ndim != 1:
        out = out.reshape(-1)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite")
    return out


@dataclass(frozen=True)
class TimeSeriesEpoch:
    """A finite real-valued segment assumed weakly stationary.

    samples are in signal units; fs is the sampling rate in Hz.
    """

    samples: np.ndarray
    fs: float = 1.0

    def __post_init__(self):
        samples = _as_float_vector(self.samples, "samples")
        if samples.size < MIN_LENGTH:
            raise TooShortSignal(
                f"need at least {MIN_LENGTH} samples, got {samples.size}"
            )
        if not self.fs > 0:
            raise ValueError("fs must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", float(self.fs))

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Periodogram:
    """Ordinates I(w_k) on the fundamental frequency grid k/T, k=1..floor((T-1)/2)."""

    freqs: np.ndarray
    ordinates: np.ndarray
    T: int
    fs: float = 1.0

    def __post_init__(self):
        freqs = _as_float_vector(self.freqs, "freqs")
        ordinates = _as_float_vector(self.ordinates, "ordinates")
        if freqs.size != ordinates.size:
            raise ValueError("freqs and ordinates must have the same length")
        if freqs.size and not (np.all(np.diff(freqs) > 0)
                               and freqs[0] > 0 and freqs[-1] < 0.5):
            raise ValueError("freqs must be strictly increasing within (0, 0.5)")
        if np.any(ordinates < 0):
            raise ValueError("ordinates must be non-negative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "ordinates", ordinates)


@dataclass(frozen=True)
class SpectralCurve:
    """A non-negative function sampled on a frequency grid inside (0, 0.5)."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = _as_float_vector(self.grid, "grid")
        values = _as_float_vector(self.values, "values")
        if grid.size != values.size:
            raise ValueError("grid and values must have the same length")
        if not (np.all(np.diff(grid) > 0) and grid[0] > 0 and grid[-1] < 0.5):
            raise ValueError("grid must be strictly increasing within (0, 0.5)")
        if np.any(values < 0):
            raise ValueError("values must be non-negative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def standardize(ts: TimeSeriesEpoch) -> TimeSeriesEpoch:
    """Center and scale the epoch to sample mean 0 and variance 1 (denominator T)."""
    x = ts.samples
    mean = x.mean()
    centered = x - mean
    sd = np.sqrt(np.mean(centered * centered))
    scale = max(np.max(np.abs(x)), np.finfo(float).tiny)
    if sd <= 1e-12 * scale:
        raise ZeroVarianceSignal("signal has zero sample variance")
    return TimeSeriesEpoch(centered / sd, fs=ts.fs)


def fourier_grid(T: int) -> np.ndarray:
    """Fundamental frequencies k/T, k = 1..floor((T-1)/2), in cycles/sample."""
    k = np.arange(1, (T - 1) // 2 + 1)
    return k / T


def refined_grid(T: int, factor: int = 4) -> np.ndarray:
    """Uniform grid j/(factor*T), j = 1..factor*T/2 - 1.

    Contains the fundamental grid of ``T`` as a subset, so curves stored on
    it can be compared directly against periodogram-based quantities.
    """
    n = factor * T
    j = np.arange(1, (n - 1) // 2 + 1)
    return j / n


def periodogram(ts: TimeSeriesEpoch) -> Periodogram:
    """Squared-modulus DFT of the epoch divided by T, on the fundamental grid.

    I(w_k) = |sum_t X_t exp(-i 2 pi w_k t)|^2 / T. Requires the input to be
    (at least) mean-centered so the k=0 term carries no leakage.
    """
    x = ts.samples
    T = x.size
    if T < MIN_LENGTH:
        raise TooShortSignal(f"need at least {MIN_LENGTH} samples, got {T}")
    rms = max(np.sqrt(np.mean(x * x)), np.finfo(float).tiny)
    if abs(x.mean()) > 1e-8 * rms:
        raise ValueError("periodogram expects a mean-centered (standardized) epoch")
    spec = np.fft.rfft(x)
    K = (T - 1) // 2
    ordinates = (spec.real[1:K + 1] ** 2 + spec.imag[1:K + 1] ** 2) / T
    return Periodogram(freqs=fourier_grid(T), ordinates=ordinates, T=T, fs=ts.fs)


def whittle_loglik(pdgm: Periodogram, model: SpectralCurve) -> float:
    """Whittle quasi-log-likelihood sum_k [ -log f(w_k) - I(w_k)/f(w_k) ]."""
    if pdgm.freqs.size != model.grid.size or not np.array_equal(pdgm.freqs, model.grid):
        raise GridMismatch("model grid must equal the periodogram frequencies")
    f = model.values
    if np.any(f <= 0):
        raise NonPositiveModel("model must be strictly positive at every frequency")
    return float(-np.sum(np.log(f) + pdgm.ordinates / f))


def curve_integral(grid: np.ndarray, values: np.ndarray,
                   full_range: bool = False) -> float:
    """Trapezoidal integral of a gridded curve.

    With ``full_range`` the grid is extended to the open interval limits 0 and
    0.5 by edge-value continuation before integrating.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if full_range:
        grid = np.concatenate(([0.0], grid, [0.5]))
        values = np.concatenate(([values[0]], values, [values[-1]]))
    return float(np.trapezoid(values, grid))
