"""AR(2) spectral kernels: parameter maps, mixture evaluation, simulation.

A causal AR(2) process with complex-conjugate characteristic roots is
parameterized here by the root phase ``psi`` (peak location, cycles/sample)
and the root log-modulus ``L`` (bandwidth; smaller L gives a sharper peak):

    phi1 = 2 cos(2 pi psi) exp(-L),    phi2 = -exp(-2 L).

Its spectral density, divided by its integral over (0, 0.5), is the
standardized kernel ``g(w; psi, L)`` which integrates to one and therefore
acts as a probability density on the frequency half-line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidComponent, NonCausal, RealRoots
from .signals import SpectralCurve, TimeSeriesEpoch


@dataclass(frozen=True)
class AR2Component:
    """Kernel parameters: peak phase psi in (0, 0.5), log-modulus L > 0."""

    psi: float
    L: float

    def __post_init__(self):
        if not (0.0 < self.psi < 0.5):
            raise InvalidComponent(f"psi must lie in (0, 0.5), got {self.psi}")
        if not self.L > 0.0:
            raise InvalidComponent(f"L must be positive, got {self.L}")


@dataclass(frozen=True)
class AR2Coefficients:
    """AR(2) coefficients restricted to the complex-root causal region."""

    phi1: float
    phi2: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not (-1.0 < self.phi2 < 0.0):
            raise NonCausal(f"phi2 must lie in (-1, 0), got {self.phi2}")
        if self.phi1 * self.phi1 + 4.0 * self.phi2 >= 0.0:
            raise RealRoots(
                f"discriminant phi1^2 + 4 phi2 = "
                f"{self.phi1 * self.phi1 + 4.0 * self.phi2} is non-negative"
            )


@dataclass(frozen=True)
class MixtureSpec:
    """Convex combination of AR(2) kernels."""

    components: Sequence[AR2Component]
    weights: Sequence[float]

    def __post_init__(self):
        comps = tuple(self.components)
        weights = np.asarray(self.weights, dtype=float)
        if len(comps) < 1 or weights.size != len(comps):
            raise ValueError("components and weights must have equal length >= 1")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) >= 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", weights)


def component_to_coeffs(c: AR2Component, sigma2: float = 1.0) -> AR2Coefficients:
    """Map (psi, L) to (phi1, phi2) with innovation variance sigma2."""
    phi1 = 2.0 * np.cos(2.0 * np.pi * c.psi) * np.exp(-c.L)
    phi2 = -np.exp(-2.0 * c.L)
    return AR2Coefficients(phi1=float(phi1), phi2=float(phi2), sigma2=float(sigma2))


def coeffs_to_component(co: AR2Coefficients) -> AR2Component:
    """Inverse map: L = -log(-phi2)/2 and psi = arccos(phi1 e^L / 2)/(2 pi)."""
    L = -0.5 * np.log(-co.phi2)
    arg = co.phi1 * np.exp(L) / 2.0
    psi = np.arccos(np.clip(arg, -1.0, 1.0)) / (2.0 * np.pi)
    return AR2Component(psi=float(psi), L=float(L))


def ar2_variance_normalizer(co: AR2Coefficients) -> float:
    """Integral of the AR(2) SDF over (0, 1/2), equal to Var(Z)/2.

    (1 - phi2) sigma2 / (2 (1 + phi2) ((1 - phi2)^2 - phi1^2)).
    """
    p1, p2 = co.phi1, co.phi2
    return float((1.0 - p2) * co.sigma2
                 / (2.0 * (1.0 + p2) * ((1.0 - p2) ** 2 - p1 * p1)))


def _phases(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.exp(-2j * np.pi * np.asarray(grid, dtype=float))
    return z, z * z


def kernel_matrix(psi: np.ndarray, L: np.ndarray, grid: np.ndarray,
                  phases: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Evaluate standardized kernels row-wise: output shape (len(psi), len(grid))."""
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    L = np.atleast_1d(np.asarray(L, dtype=float))
    z, z2 = _phases(grid) if phases is None else phases
    cos2 = 2.0 * np.cos(2.0 * np.pi * psi)
    e = np.exp(-L)
    e2 = e * e
    num = 2.0 * (1.0 - e2) * ((1.0 + e2) ** 2 - cos2 * cos2 * e2)
    poly = (1.0 - (cos2 * e)[:, None] * z[None, :] + e2[:, None] * z2[None, :])
    den = (1.0 + e2)[:, None] * (poly.real ** 2 + poly.imag ** 2)
    return num[:, None] / den


def ar2_kernel(c: AR2Component, grid) -> SpectralCurve:
    """Standardized AR(2) SDF g(w; psi, L) on a grid inside (0, 0.5)."""
    grid = np.asarray(grid, dtype=float)
    values = kernel_matrix(np.array([c.psi]), np.array([c.L]), grid)[0]
    return SpectralCurve(grid=grid, values=values)


def mixture_sdf(m: MixtureSpec, grid) -> SpectralCurve:
    """Pointwise sum_c p_c g(w; psi_c, L_c); integrates to 1 over (0, 0.5)."""
    grid = np.asarray(grid, dtype=float)
    psi = np.array([c.psi for c in m.components])
    L = np.array([c.L for c in m.components])
    values = m.weights @ kernel_matrix(psi, L, grid)
    return SpectralCurve(grid=grid, values=values)


def ar2_sdf_raw(co: AR2Coefficients, grid) -> np.ndarray:
    """Un-normalized AR(2) SDF sigma2 / |Phi(e^{-i 2 pi w})|^2 (oracle path)."""
    z, z2 = _phases(np.asarray(grid, dtype=float))
    poly = 1.0 - co.phi1 * z - co.phi2 * z2
    return co.sigma2 / (poly.real ** 2 + poly.imag ** 2)


def warmup_length(L: float) -> int:
    """Burn-in discarded before an AR(2) draw is treated as stationary.

    Scales with the memory of the process: the autocorrelation decays like
    exp(-L h), so the discarded prefix grows as L approaches 0.
    """
    return 10 * int(np.ceil(1.0 / (1.0 - np.exp(-2.0 * L)))) + 100


def simulate_ar2(c: AR2Component, sigma: float, T: int, rng: np.random.Generator,
                 fs: float = 1.0) -> TimeSeriesEpoch:
    """Simulate Z_t = phi1 Z_{t-1} + phi2 Z_{t-2} + W_t with Gaussian W_t.

    Initialized at zero; a warm-up prefix is discarded (see warmup_length).
    """
    if T < 8:
        raise ValueError("T must be at least 8")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    co = component_to_coeffs(c, sigma * sigma)
    warm = warmup_length(c.L)
    w = rng.normal(0.0, sigma, size=T + warm)
    z = lfilter([1.0], [1.0, -co.phi1, -co.phi2], w)
    return TimeSeriesEpoch(z[warm:], fs=fs)


def simulate_mixture(m: MixtureSpec, T: int, rng: np.random.Generator,
                     fs: float = 1.0) -> TimeSeriesEpoch:
    """Sum of independent AR(2) paths scaled to unit variance and then sqrt(p_c).

    The theoretical standardized SDF of the output equals ``mixture_sdf(m)``
    and its theoretical variance equals 1.
    """
    x = np.zeros(T)
    for comp, p in zip(m.components, m.weights):
        z = simulate_ar2(comp, 1.0, T, rng).samples
        var = 2.0 * ar2_variance_normalizer(component_to_coeffs(comp, 1.0))
        x += np.sqrt(p / var) * z
    return TimeSeriesEpoch(x, fs=fs)
