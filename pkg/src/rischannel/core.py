"""Geometry, hardware and phase-configuration primitives for a phased-array RIS.

All records are frozen dataclasses and every function is pure, so instances
can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

TWO_PI = 2.0 * math.pi
FREE_SPACE_IMPEDANCE = 376.730313668


class DegenerateImpedanceError(ValueError):
    """Raised when ``z_l + z_0`` vanishes and the reflection coefficient is undefined."""


def sinc(x):
    """Unnormalized sinc, ``sin(x)/x`` with ``sinc(0) = 1``."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def wrap_phase(x):
    """Wrap angles into ``[0, 2*pi)``."""
    w = np.mod(x, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    return np.where(w >= TWO_PI, 0.0, w)


def wrap_residual(x):
    """Wrap angles into ``(-pi, pi]``."""
    w = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)
    return np.where(w <= -np.pi, w + TWO_PI, w)


@dataclass(frozen=True)
class RisGeometry:
    """Rectangular element grid of the surface.

    Parameters
    ----------
    m_x, m_y : int
        Number of columns (along x) and rows (along y).
    p_x, p_y : float
        Element periods in meters.
    lambda_c : float
        Carrier wavelength in meters.
    """

    m_x: int
    m_y: int
    p_x: float
    p_y: float
    lambda_c: float

    def __post_init__(self):
        if int(self.m_x) != self.m_x or int(self.m_y) != self.m_y:
            raise ValueError("m_x and m_y must be integers")
        if self.m_x < 1 or self.m_y < 1:
            raise ValueError(f"element counts must be >= 1, got ({self.m_x}, {self.m_y})")
        for name in ("p_x", "p_y", "lambda_c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def k_0(self) -> float:
        return TWO_PI / self.lambda_c

    @property
    def n_elements(self) -> int:
        return self.m_x * self.m_y

    @classmethod
    def half_wavelength(cls, m_x: int, m_y: int = 1, lambda_c: float = 1.0) -> "RisGeometry":
        return cls(m_x, m_y, lambda_c / 2, lambda_c / 2, lambda_c)


@dataclass(frozen=True)
class LinkGeometry:
    """Incidence and observation directions (radians) plus path distances (meters)."""

    theta_in: float
    theta_out: float
    phi_in: float = 0.0
    phi_out: float = 0.0
    d_1: float = 1.0
    d_2: float = 1.0

    def __post_init__(self):
        if not -math.pi / 2 < self.theta_in < math.pi / 2:
            raise ValueError(f"theta_in must lie in (-pi/2, pi/2), got {self.theta_in!r}")
        if self.d_1 <= 0 or self.d_2 <= 0:
            raise ValueError("distances d_1 and d_2 must be positive")

    @property
    def is_2d(self) -> bool:
        return self.phi_in == 0.0 and self.phi_out == 0.0


@dataclass(frozen=True)
class MobilityParams:
    """Receiver motion. Distribution fitting is only valid when ``v == 0``."""

    v: float = 0.0
    gamma_move: float = 0.0
    alpha_n: tuple = ()

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("speed v must be >= 0")

    @property
    def stationary(self) -> bool:
        return self.v == 0.0

    def doppler_rate(self, alpha: float, lambda_c: float) -> float:
        """Angular Doppler rate ``2*pi*v/lambda_c * cos(gamma - alpha)``."""
        return TWO_PI * self.v / lambda_c * math.cos(self.gamma_move - alpha)


@dataclass(frozen=True)
class Continuous:
    """Phase shifts may take any value in ``[0, 2*pi)``."""

    @property
    def step(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Discrete:
    """``bits``-bit phase shifters with levels ``t * 2*pi / 2**bits``."""

    bits: int

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise ValueError(f"bits must be an integer >= 1, got {self.bits!r}")

    @property
    def step(self) -> float:
        return TWO_PI / (1 << self.bits)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(1 << self.bits) * self.step


Quantization = Union[Continuous, Discrete]


@dataclass(frozen=True)
class PhaseConfig:
    """Per-element phase discontinuities, shape ``(m_x, m_y)``, stored in ``[0, 2*pi)``."""

    phi: np.ndarray
    quantization: Quantization = field(default_factory=Continuous)

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 2:
            raise ValueError("phase matrix must be two-dimensional (m_x, m_y)")
        if np.any(phi < 0) or np.any(phi >= TWO_PI) or not np.all(np.isfinite(phi)):
            raise ValueError("phase entries must lie in [0, 2*pi)")
        if isinstance(self.quantization, Discrete):
            t = phi / self.quantization.step
            if np.any(np.abs(t - np.round(t)) > 1e-9):
                raise ValueError("discrete configuration has entries off the quantization grid")
            phi = np.round(t) * self.quantization.step
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def shape(self) -> tuple:
        return self.phi.shape

    @property
    def columns(self) -> np.ndarray:
        """Column phases; only meaningful when every row is identical."""
        return self.phi[:, 0]

    def rows_identical(self) -> bool:
        return bool(np.all(self.phi == self.phi[:, :1]))

    def matches(self, geom: RisGeometry) -> bool:
        return self.phi.shape == (geom.m_x, geom.m_y)


@dataclass(frozen=True)
class ReflectionCoefficient:
    """Complex reflection coefficient ``beta * exp(j*phase)``."""

    value: complex

    @property
    def beta(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return float(wrap_phase(np.angle(self.value)))

    @classmethod
    def from_polar(cls, beta: float, phase: float) -> "ReflectionCoefficient":
        if beta < 0:
            raise ValueError("amplitude beta must be >= 0")
        return cls(beta * complex(math.cos(phase), math.sin(phase)))

    @property
    def passive(self) -> bool:
        return self.beta <= 1.0 + 1e-12


def reflection_coefficient(z_l: complex, z_0: float = FREE_SPACE_IMPEDANCE) -> ReflectionCoefficient:
    """Normal-incidence reflection coefficient ``(z_l - z_0) / (z_l + z_0)``.

    An infinite load (open circuit) gives full in-phase reflection.
    """
    z_l = complex(z_l)
    if math.isinf(z_l.real) or math.isinf(z_l.imag):
        return ReflectionCoefficient(1.0 + 0.0j)
    denom = z_l + z_0
    scale = max(abs(z_l), abs(z_0), 1.0)
    if abs(denom) <= 8 * np.finfo(float).eps * scale:
        raise DegenerateImpedanceError(f"z_l + z_0 vanishes for z_l={z_l!r}, z_0={z_0!r}")
    return ReflectionCoefficient((z_l - z_0) / denom)


def quantize_phase(phi_desired, bits: int):
    """Snap phases to the nearest ``bits``-bit level (circular distance).

    Exact ties between two levels resolve to the lower level.
    """
    step = Discrete(bits).step
    x = np.asarray(wrap_phase(phi_desired), dtype=float) / step
    t = np.mod(np.ceil(x - 0.5), 1 << bits)
    out = t * step
    return float(out) if np.ndim(out) == 0 else out


def phase_gradient(geom: RisGeometry, theta_in: float, theta_out: float) -> float:
    """Per-column phase increment ``2*pi*(p_x/lambda_c)*(sin(theta_out) - sin(theta_in))``."""
    return TWO_PI * geom.p_x / geom.lambda_c * (math.sin(theta_out) - math.sin(theta_in))


def co_phase_config(geom: RisGeometry, theta_in: float, theta_target: float,
                    quantization: Quantization = Continuous()) -> PhaseConfig:
    """Linear phase gradient steering the reflected beam to ``theta_target``.

    Column ``m`` (0-based) receives ``m * phase_gradient(theta_in, theta_target)``,
    wrapped to ``[0, 2*pi)`` and quantized in the discrete case. Rows share the
    column value.
    """
    m = np.arange(geom.m_x)
    col = wrap_phase(phase_gradient(geom, theta_in, theta_target) * m)
    if isinstance(quantization, Discrete):
        col = np.atleast_1d(quantize_phase(col, quantization.bits))
    phi = np.repeat(col[:, None], geom.m_y, axis=1)
    return PhaseConfig(phi, quantization)


def residual_phases(config: PhaseConfig, geom: RisGeometry, theta_in: float, theta_out: float) -> np.ndarray:
    """Residual phase of every column at ``theta_out``, wrapped to ``(-pi, pi]``."""
    if not config.matches(geom):
        raise ValueError("phase configuration does not match geometry")
    eps = phase_gradient(geom, theta_in, theta_out)
    m = np.arange(geom.m_x)
    return wrap_residual(config.columns - eps * m)


def residual_phase(config: PhaseConfig, geom: RisGeometry, theta_in: float, theta_out: float, m: int) -> float:
    if not 0 <= m < geom.m_x:
        raise IndexError(f"column index {m} outside [0, {geom.m_x})")
    eps = phase_gradient(geom, theta_in, theta_out)
    return float(wrap_residual(config.columns[m] - eps * m))


def residual_histogram(residuals, step: float, bins: int = 32):
    """Histogram of quantization residuals over ``[-step/2, step/2]``.

    Useful for inspecting periodic residual patterns when the phase-gradient
    to step ratio is rational.
    """
    return np.histogram(residuals, bins=bins, range=(-step / 2, step / 2))
