"""Closed-form channel statistics, special functions and moment fitting.

Conventions: ``sinc(x) = sin(x)/x``; the Rician law is parameterised by the
shape factor ``K`` and the mean power ``Omega_p``. Bessel functions are taken
in exponentially scaled form (``scipy.special.ive``) so that large ``K`` never
overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ive

from .core import TWO_PI, sinc


@dataclass(frozen=True)
class RicianParams:
    k_factor: float
    omega_p: float

    def __post_init__(self):
        if not (self.k_factor >= 0 and math.isfinite(self.k_factor)):
            raise ValueError(f"K must be finite and >= 0, got {self.k_factor}")
        if not (self.omega_p > 0 and math.isfinite(self.omega_p)):
            raise ValueError(f"Omega_p must be finite and > 0, got {self.omega_p}")

    @property
    def nakagami_m(self) -> float:
        k = self.k_factor
        return (1 + k) ** 2 / (1 + 2 * k)


@dataclass(frozen=True)
class EffectiveMoments:
    """Squared mean length ``xi_sq`` and total variance ``sigma`` of ``T_c + j T_s``."""

    xi_sq: float
    sigma: float

    def __post_init__(self):
        if self.xi_sq < 0:
            raise ValueError("xi_sq must be >= 0")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True)
class NakagamiParams:
    m: float
    spread: float

    def __post_init__(self):
        if self.m < 0.5 - 1e-12:
            raise ValueError(f"Nakagami m must be >= 1/2, got {self.m}")


# ---------------------------------------------------------------- densities

def _log_i0(z):
    z = np.asarray(z, float)
    return np.log(ive(0, z)) + z


def rician_pdf(x, params: RicianParams):
    """Rician envelope density, evaluated in the log domain."""
    x = np.asarray(x, float)
    if np.any(x < 0):
        raise ValueError("envelope values must be >= 0")
    K, om = params.k_factor, params.omega_p
    with np.errstate(divide="ignore"):
        logp = (np.log(2 * x * (K + 1) / om) - K - (K + 1) * x * x / om
                + _log_i0(2 * x * math.sqrt(K * (K + 1) / om)))
    return np.where(x > 0, np.exp(logp), 0.0)


def snr_pdf(gamma, params: RicianParams, noise_n0: float = 1.0):
    """Density of ``gamma = |R|^2 / N_0`` (non-central chi-square, two degrees of freedom)."""
    g = np.asarray(gamma, float)
    if np.any(g < 0):
        raise ValueError("SNR values must be >= 0")
    K = params.k_factor
    gbar = params.omega_p / noise_n0
    logp = (math.log((1 + K) / gbar) - K - (1 + K) * g / gbar
            + _log_i0(2 * np.sqrt(K * (K + 1) * g / gbar)))
    return np.exp(logp)


# ---------------------------------------------------------------- closed forms

def effective_shape(moments: EffectiveMoments) -> RicianParams:
    return RicianParams(moments.xi_sq / moments.sigma, moments.xi_sq + moments.sigma)


def _s(delta: float) -> float:
    return float(sinc(delta / 2)) ** 2


def keff_continuous(M: int, c_0: float, delta_phi: float, N: int, omega_d: float) -> RicianParams:
    """Continuous-phase steering: LoS power ``M^2 c_0^2 sinc^2(M dphi / 2)`` over ``N omega_d``."""
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    los = (M * c_0 * float(sinc(M * delta_phi / 2))) ** 2
    return RicianParams(los / (N * omega_d), los + N * omega_d)


def keff_discrete(M: int, delta: float, k_0_ratio: float) -> float:
    if M < 1:
        raise ValueError("M must be >= 1")
    if not (0.0 <= delta <= TWO_PI + 1e-12):
        raise ValueError("delta must lie in [0, 2*pi]")
    if k_0_ratio <= 0:
        raise ValueError("K_0 must be > 0")
    s = _s(delta)
    return M * s / (1 - s + 1 / k_0_ratio)


def omega_discrete(M: int, delta: float, omega_r: float, N: int, omega_d: float) -> float:
    if M < 1:
        raise ValueError("M must be >= 1")
    s = _s(delta)
    return omega_r * (M + (M * M - M) * s) + N * omega_d


def discrete_moments(M: int, delta: float, omega_r: float, N: int, omega_d: float) -> EffectiveMoments:
    """Mean-vector length and variance of the envelope with uniform quantization errors."""
    s = _s(delta)
    return EffectiveMoments(xi_sq=M * M * omega_r * s, sigma=M * omega_r * (1 - s) + N * omega_d)


def power_scaling(M: int, delta: float) -> float:
    if M < 1:
        raise ValueError("M must be >= 1")
    s = _s(delta)
    return s * M * M + (1 - s) * M


def keff_inverse_line(M: int, delta: float) -> tuple:
    """``(slope, intercept)`` of ``1/K_eff = slope / K_0 + intercept``."""
    s = _s(delta)
    if s < 1e-15:
        raise ValueError("no finite inverse line when sinc(delta/2) = 0 (random-phase regime)")
    return 1.0 / (M * s), (1 - s) / (M * s)


def nakagami_m_general(mean_tc: float, mean_ts: float, var_tc: float, var_ts: float, cov: float) -> NakagamiParams:
    """Nakagami ``m`` of ``R = |T_c + j T_s|`` for jointly Gaussian components."""
    if not (var_tc > 0 and var_ts > 0):
        raise ValueError("variances must be positive")
    if cov * cov > var_tc * var_ts * (1 + 1e-12):
        raise ValueError("covariance inconsistent with variances")
    a2 = mean_tc ** 2 + mean_ts ** 2
    sigma = var_tc + var_ts
    b = math.sqrt(4 * cov * cov + (var_tc - var_ts) ** 2)
    d1 = math.atan2(mean_ts, mean_tc)
    d2 = 0.5 * math.atan2(2 * cov, var_tc - var_ts)
    spread = sigma + a2
    m = spread ** 2 / (spread ** 2 + b * b - a2 * a2 + 2 * a2 * b * math.cos(2 * (d1 - d2)))
    return NakagamiParams(m=m, spread=spread)


# ---------------------------------------------------------------- Marcum Q and outage

def _marcum_terms(a: float, b: float) -> int:
    return int(40 + 10 * math.sqrt(a * b))


def marcum_q1(a: float, b: float) -> float:
    """First-order Marcum Q function.

    Uses the scaled-Bessel series of whichever tail is smaller, so both
    ``Q_1`` and ``1 - Q_1`` keep full relative accuracy.
    """
    a = float(a)
    b = float(b)
    if a < 0 or b < 0:
        raise ValueError("Marcum Q arguments must be >= 0")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return math.exp(-b * b / 2)
    if b > a:
        return _upper_series(a, b)
    return 1.0 - _lower_series(a, b)


def marcum_p1(a: float, b: float) -> float:
    """``1 - Q_1(a, b)`` without cancellation."""
    a = float(a)
    b = float(b)
    if a < 0 or b < 0:
        raise ValueError("Marcum Q arguments must be >= 0")
    if b == 0.0:
        return 0.0
    if a == 0.0:
        return -math.expm1(-b * b / 2)
    if b > a:
        return 1.0 - _upper_series(a, b)
    return _lower_series(a, b)


def _upper_series(a, b):
    # Q_1 = exp(-(a-b)^2/2) sum_{k>=0} (a/b)^k ive(k, ab)
    k = np.arange(_marcum_terms(a, b))
    terms = (a / b) ** k * ive(k, a * b)
    return float(min(1.0, math.exp(-(a - b) ** 2 / 2) * terms.sum()))


def _lower_series(a, b):
    # 1 - Q_1 = exp(-(a-b)^2/2) sum_{k>=1} (b/a)^k ive(k, ab)
    k = np.arange(1, _marcum_terms(a, b) + 1)
    terms = (b / a) ** k * ive(k, a * b)
    return float(min(1.0, math.exp(-(a - b) ** 2 / 2) * terms.sum()))


def outage_probability(params: RicianParams, mu) -> float:
    """``Pr{|h|^2 < mu}`` for a Rician channel."""
    if np.ndim(mu):
        return np.array([outage_probability(params, m) for m in np.ravel(mu)]).reshape(np.shape(mu))
    if mu < 0:
        raise ValueError("threshold must be >= 0")
    K = params.k_factor
    return marcum_p1(math.sqrt(2 * K), math.sqrt(2 * mu * (K + 1) / params.omega_p))


def outage_quantile(params: RicianParams, p: float) -> float:
    """Threshold ``mu`` at which the outage probability equals ``p``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    hi = params.omega_p
    while outage_probability(params, hi) < p:
        hi *= 2
    lo = hi * 1e-30
    return brentq(lambda m: outage_probability(params, m) - p, lo, hi, xtol=1e-300, rtol=1e-12)


def outage_asymptote(params: RicianParams, gamma_th, gamma_bar):
    """First-order small-threshold outage ``(1+K) e^{-K} gamma_th / gamma_bar``."""
    K = params.k_factor
    return (1 + K) * math.exp(-K) * np.asarray(gamma_th, float) / gamma_bar


# ---------------------------------------------------------------- fitting

def _rician_mean_ratio(K: float) -> float:
    """``E[R]^2 / E[R^2]`` of a Rician law with shape ``K``."""
    return math.pi / (4 * (K + 1)) * ((1 + K) * ive(0, K / 2) + K * ive(1, K / 2)) ** 2


_K_FIT_MAX = 1e3


def fit_rician(samples) -> RicianParams:
    """Method-of-moments Rician fit from envelope magnitudes.

    ``Omega_p`` is the mean of ``|R|^2``; ``K`` solves the moment ratio
    ``E[R]^2 / E[R^2]``. Ratios at or below the Rayleigh value ``pi/4`` clamp
    to ``K = 0``.
    """
    r = np.asarray(samples, float).ravel()
    if r.size < 100:
        raise ValueError(f"need at least 100 samples, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise ValueError("samples must be finite")
    if np.any(r < 0):
        raise ValueError("envelope magnitudes must be >= 0")
    m2 = float(np.mean(r * r))
    t = float(np.mean(r)) ** 2 / m2
    if t <= math.pi / 4:
        k = 0.0
    elif t >= _rician_mean_ratio(_K_FIT_MAX):
        k = _K_FIT_MAX
    else:
        k = brentq(lambda K: _rician_mean_ratio(K) - t, 0.0, _K_FIT_MAX, xtol=1e-12)
    return RicianParams(k, m2)


def sample_moments(values) -> EffectiveMoments:
    """Empirical ``|E[T]|^2`` and ``Var(T_c) + Var(T_s)`` of complex envelope samples."""
    v = np.asarray(values, complex).ravel()
    if v.size < 2:
        raise ValueError("need at least two samples")
    if not np.all(np.isfinite(v)):
        raise ValueError("samples must be finite")
    mean = v.mean()
    return EffectiveMoments(xi_sq=float(abs(mean) ** 2), sigma=float(np.mean(np.abs(v - mean) ** 2)))


def fit_effective(values) -> RicianParams:
    """Effective Rician parameters from complex envelope samples via their first two moments."""
    return effective_shape(sample_moments(values))
