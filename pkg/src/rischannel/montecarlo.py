"""Seeded Monte Carlo generation of the joint RIS + direct-link envelope.

Two entry styles are offered. The ``sample_*`` functions take a
``numpy.random.Generator`` and are handy for ad-hoc experiments. ``run_trials``
is the reproducible path: trial ``k`` depends only on ``(seed, k)`` through the
counter-based generator in :mod:`rischannel.kernels`, so any chunking or
ordering of the trial range produces the same samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import TWO_PI, sinc

# keeps per-call memory bounded for large trial counts
_TRIAL_CHUNK = 1 << 16

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Stable child seed for sweep point ``indices`` of a run seeded with ``seed``.

    ``derive_seed(s) == s`` and each index folds in as ``mix(s + G*(i+1))``,
    so sweep points get unrelated streams without sharing any state.
    """
    s = int(seed) & _MASK64
    for i in indices:
        s = _mix64(s + _GOLDEN * (int(i) + 1))
    return s


@dataclass(frozen=True)
class ScenarioParams:
    """Power parameters of the specular RIS link and the direct NLoS link.

    Attributes
    ----------
    M, N : int
        RIS column count and direct-path count.
    omega_r, omega_d : float
        Per-path mean-square amplitudes of the two links.
    delta : float
        Quantization step in radians; 0 is continuous, ``2*pi`` random phase.
    delta_phi : float
        Per-element phase increment away from the steering target.
    """

    M: int
    N: int
    omega_r: float
    omega_d: float
    delta: float = 0.0
    delta_phi: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not (self.omega_r > 0 and self.omega_d > 0):
            raise ValueError("omega_r and omega_d must be positive")
        if not (0.0 <= self.delta <= TWO_PI + 1e-12):
            raise ValueError(f"delta must lie in [0, 2*pi], got {self.delta}")

    @property
    def k_0_ratio(self) -> float:
        return self.M * self.omega_r / (self.N * self.omega_d)

    @classmethod
    def from_k0(cls, M: int, k_0: float, delta: float = 0.0, N: int = 64,
                n_omega_d: float = 1.0, delta_phi: float = 0.0) -> "ScenarioParams":
        """Build parameters from ``K_0`` with total direct power ``N*omega_d = n_omega_d``."""
        if k_0 <= 0:
            raise ValueError("k_0 must be positive")
        return cls(M=M, N=N, omega_r=k_0 * n_omega_d / M, omega_d=n_omega_d / N,
                   delta=delta, delta_phi=delta_phi)


@dataclass(frozen=True)
class EnvelopeSample:
    specular: complex
    direct: complex

    @property
    def value(self) -> complex:
        return self.specular + self.direct


@dataclass(frozen=True)
class EnvelopeBatch:
    """Column-oriented collection of envelope samples."""

    specular: np.ndarray
    direct: np.ndarray

    def __len__(self) -> int:
        return len(self.specular)

    def __getitem__(self, k: int) -> EnvelopeSample:
        return EnvelopeSample(complex(self.specular[k]), complex(self.direct[k]))

    @property
    def value(self) -> np.ndarray:
        return self.specular + self.direct

    @property
    def t_c(self) -> np.ndarray:
        return self.value.real

    @property
    def t_s(self) -> np.ndarray:
        return self.value.imag

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.value)

    @property
    def magnitude_sq(self) -> np.ndarray:
        v = self.value
        return v.real ** 2 + v.imag ** 2

    def to_csv(self, handle, header_lines=(), start: int = 0):
        for line in header_lines:
            handle.write(f"# {line}\n")
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(["trial", "t_c", "t_s", "magnitude", "magnitude_sq"])
        for k, (c, s, r, r2) in enumerate(zip(self.t_c, self.t_s, self.magnitude, self.magnitude_sq)):
            w.writerow([start + k, repr(float(c)), repr(float(s)), repr(float(r)), repr(float(r2))])


def sample_direct(N: int, omega_d: float, rng: np.random.Generator, size=None):
    """Sum of ``N`` equal-amplitude paths with iid uniform phases."""
    if N < 1:
        raise ValueError("N must be >= 1")
    shape = (N,) if size is None else (*np.atleast_1d(size), N)
    theta = rng.uniform(-np.pi, np.pi, shape)
    out = math.sqrt(omega_d) * np.exp(1j * theta).sum(axis=-1)
    return complex(out) if size is None else out


def sample_specular_discrete(M: int, omega_r: float, delta: float, rng: np.random.Generator, size=None):
    """Specular sum with quantization-error phases iid on ``(-delta/2, delta/2)``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if not (0.0 <= delta <= TWO_PI + 1e-12):
        raise ValueError("delta must lie in [0, 2*pi]")
    shape = (M,) if size is None else (*np.atleast_1d(size), M)
    theta = rng.uniform(-delta / 2, delta / 2, shape)
    out = math.sqrt(omega_r) * np.exp(1j * theta).sum(axis=-1)
    return complex(out) if size is None else out


def continuous_specular(params: ScenarioParams) -> float:
    """Deterministic arc-approximated specular term ``M sqrt(omega_r) sinc(M dphi / 2)``."""
    return params.M * math.sqrt(params.omega_r) * float(sinc(params.M * params.delta_phi / 2))


def sample_envelope(params: ScenarioParams, rng: np.random.Generator, size=None):
    if params.delta == 0.0:
        spec = continuous_specular(params)
        spec = complex(spec) if size is None else np.full(np.atleast_1d(size), spec, dtype=complex)
    else:
        spec = sample_specular_discrete(params.M, params.omega_r, params.delta, rng, size)
    direct = sample_direct(params.N, params.omega_d, rng, size)
    if size is None:
        return EnvelopeSample(spec, direct)
    return EnvelopeBatch(np.asarray(spec), np.asarray(direct))


def run_trials(params: ScenarioParams, n_trials: int, seed: int, start: int = 0) -> EnvelopeBatch:
    """Reproducible envelope samples for trials ``start ... start + n_trials - 1``.

    With ``delta > 0`` each specular element draws a phase on
    ``(-delta/2, delta/2)`` plus the deterministic ramp ``-delta_phi * m``.
    With ``delta == 0`` the specular term is the closed-form arc value.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    amp_r = math.sqrt(params.omega_r)
    amp_d = math.sqrt(params.omega_d)
    random_spec = params.delta > 0.0
    spec = np.empty(n_trials, dtype=complex)
    direct = np.empty(n_trials, dtype=complex)
    for lo in range(0, n_trials, _TRIAL_CHUNK):
        cnt = min(_TRIAL_CHUNK, n_trials - lo)
        s, d = kernels.envelope_block(seed, start + lo, cnt, params.M if random_spec else 0, params.N,
                                      amp_r, amp_d, float(params.delta), float(params.delta_phi))
        spec[lo:lo + cnt] = s
        direct[lo:lo + cnt] = d
    if not random_spec:
        spec[:] = continuous_specular(params)
    return EnvelopeBatch(spec, direct)


def gaussian_block(seed: int, stream: int, trial_start: int, count: int, lanes: int) -> np.ndarray:
    """Standard normal draws of shape ``(count, lanes)`` by Box-Muller on counter uniforms."""
    if stream < 2:
        raise ValueError("streams 0 and 1 are reserved for envelope phases")
    u = kernels.uniform_block(seed, stream, trial_start, count, 2 * lanes)
    u1 = 1.0 - u[:, :lanes]  # (0, 1]
    u2 = u[:, lanes:]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(TWO_PI * u2)


def rician_power_block(k_factor, omega_p, seed: int, stream: int, trial_start: int, count: int) -> np.ndarray:
    """Channel power draws ``|h|^2`` with ``h`` Rician, one column per parameter pair.

    ``k_factor`` and ``omega_p`` broadcast to a common 1-D shape ``(U,)``; the
    result has shape ``(count, U)``.
    """
    k, om = np.broadcast_arrays(np.atleast_1d(np.asarray(k_factor, float)), np.atleast_1d(np.asarray(omega_p, float)))
    U = k.size
    g = gaussian_block(seed, stream, trial_start, count, 2 * U)
    los = np.sqrt(om * k / (k + 1))
    sd = np.sqrt(om / (2 * (k + 1)))
    re = los + sd * g[:, :U]
    im = sd * g[:, U:]
    return re * re + im * im
