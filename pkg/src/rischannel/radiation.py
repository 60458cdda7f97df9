"""Far-field radiation of the surface and the specular-link envelope.

The reflected aperture field is sampled once per element, so the far-field
pattern on a grid of spatial frequencies is a zero-padded 2-D inverse DFT of
the element field matrix multiplied by per-direction element factors.

Sign convention: element phases enter the aperture field as ``exp(-j*phi)``.
With the co-phase gradient ``phi_m = m * 2*pi*(p_x/lambda)(sin t - sin i)`` this
puts the main lobe at ``sin(theta_out) = sin(t)``, in agreement with the column
sum used by :func:`ris_envelope_2d` (which carries ``exp(+j*(phi_m - eps*m))``;
the two differ only by complex conjugation).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LinkGeometry, PhaseConfig, RisGeometry, phase_gradient, sinc


class GeometryModeError(ValueError):
    """Raised when a 2-D-only computation receives a non-zero azimuth."""


def idft2(f) -> np.ndarray:
    """``out[p, q] = 1/(M N) * sum_mn f[m, n] exp(j 2 pi m p / M) exp(j 2 pi n q / N)``."""
    f = np.asarray(f, dtype=complex)
    if f.ndim != 2:
        raise ValueError("idft2 expects a two-dimensional array")
    if f.shape[0] < 1 or f.shape[1] < 1:
        raise ValueError(f"idft2 needs non-empty dimensions, got {f.shape}")
    return np.fft.ifft2(f)


def signed_index(p: int, size: int) -> int:
    """Map a DFT bin to a signed spatial frequency; bins above ``size/2`` are negative."""
    return p - size if p > size / 2 else p


def direction_cosines(p, q, P: int, Q: int, geom: RisGeometry):
    """Direction cosines ``(u, v) = (sin t cos f, sin t sin f)`` of bins ``(p, q)``."""
    p = np.asarray(p)
    q = np.asarray(q)
    pt = np.where(p > P / 2, p - P, p)
    qt = np.where(q > Q / 2, q - Q, q)
    # 2*pi / k_0 == lambda_c
    u = geom.lambda_c * pt / (P * geom.p_x)
    v = geom.lambda_c * qt / (Q * geom.p_y)
    return u, v


def direction_from_indices(p: int, q: int, P: int, Q: int, geom: RisGeometry) -> Optional[tuple]:
    """Observation direction ``(theta_out, phi_out)`` of grid bin ``(p, q)``.

    Returns ``None`` for evanescent bins (``|sin theta| > 1``).
    """
    if not (0 <= p < P and 0 <= q < Q):
        raise IndexError(f"bin ({p}, {q}) outside grid ({P}, {Q})")
    u, v = direction_cosines(p, q, P, Q, geom)
    s = math.hypot(float(u), float(v))
    if s > 1.0 + 1e-12:
        return None
    return math.asin(min(s, 1.0)), math.atan2(float(v), float(u))


@dataclass(frozen=True)
class ElementAmplitude:
    """Per-element envelope amplitude and the factors it is built from.

    ``c_0 = scale * area * distance * fraunhofer * leaning``, where ``scale``
    stands for ``E_0 k / (4 pi)``. The default instance has every factor equal
    to one, i.e. a unit-amplitude element.
    """

    scale: float = 1.0
    area: float = 1.0
    distance: float = 1.0
    fraunhofer: float = 1.0
    leaning: float = 1.0

    def __post_init__(self):
        if self.c_0 < 0:
            raise ValueError("element amplitude must be non-negative")

    @property
    def c_0(self) -> float:
        return self.scale * self.area * self.distance * self.fraunhofer * self.leaning

    @classmethod
    def from_geometry(cls, geom: RisGeometry, link: LinkGeometry, scale: float = 1.0) -> "ElementAmplitude":
        u_prime = math.sin(link.theta_out) - math.sin(link.theta_in)
        return cls(
            scale=scale,
            area=geom.p_x * geom.p_y,
            distance=1.0 / (link.d_1 * link.d_2),
            fraunhofer=abs(float(sinc(geom.k_0 * u_prime * geom.p_x / 2))),
            leaning=math.cos(link.theta_out),
        )


@dataclass(frozen=True)
class PatternGrid:
    """Complex far-field values on a ``P x Q`` spatial-frequency grid.

    Evanescent bins carry ``nan`` and ``physical == False``.
    """

    values: np.ndarray
    u: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    physical: np.ndarray

    @property
    def pad(self) -> tuple:
        return self.values.shape

    def peak(self) -> tuple:
        """``(p, q, theta, phi, value)`` of the largest physical bin."""
        mag = np.where(self.physical, np.abs(np.nan_to_num(self.values)), -np.inf)
        p, q = np.unravel_index(int(np.argmax(mag)), mag.shape)
        return int(p), int(q), float(self.theta[p, q]), float(self.phi[p, q]), complex(self.values[p, q])

    def signed_theta(self) -> np.ndarray:
        """Polar angle signed by the sign of ``u`` (convenient for the 2-D problem)."""
        return np.where(self.u < 0, -self.theta, self.theta)

    def to_csv(self, handle, header_lines=()):
        for line in header_lines:
            handle.write(f"# {line}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["p", "q", "theta_deg", "phi_deg", "re", "im", "magnitude_db"])
        P, Q = self.values.shape
        for p in range(P):
            for q in range(Q):
                if not self.physical[p, q]:
                    continue
                val = self.values[p, q]
                mag = abs(val)
                mag_db = 20 * math.log10(mag) if mag > 0 else -math.inf
                writer.writerow([p, q, _fmt(math.degrees(self.theta[p, q])), _fmt(math.degrees(self.phi[p, q])),
                                 _fmt(val.real), _fmt(val.imag), _fmt(mag_db)])


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def field_matrix(geom: RisGeometry, config: PhaseConfig, theta_in: float, amplitude=None) -> np.ndarray:
    """Reflected tangential field per element including the incidence phase ramp."""
    if not config.matches(geom):
        raise ValueError(f"phase matrix {config.shape} does not match geometry ({geom.m_x}, {geom.m_y})")
    r = np.ones((geom.m_x, geom.m_y)) if amplitude is None else np.broadcast_to(amplitude, (geom.m_x, geom.m_y))
    m = np.arange(geom.m_x)[:, None]
    return r * np.exp(-1j * config.phi) * np.exp(-1j * geom.k_0 * math.sin(theta_in) * m * geom.p_x)


def _element_factors(geom: RisGeometry, u, v, theta_in: float, amplitude_scale: float):
    u_prime = u - math.sin(theta_in)
    s2 = np.clip(u * u + v * v, 0.0, None)
    cos_t = np.sqrt(np.clip(1.0 - s2, 0.0, None))
    k1 = np.exp(-0.5j * geom.k_0 * (u_prime * (geom.m_x - 1) * geom.p_x + v * (geom.m_y - 1) * geom.p_y))
    amp = (amplitude_scale * geom.p_x * geom.p_y
           * sinc(geom.k_0 * u_prime * geom.p_x / 2) * sinc(geom.k_0 * v * geom.p_y / 2) * cos_t)
    return k1, amp


def ris_pattern(geom: RisGeometry, config: PhaseConfig, theta_in: float, pad=None,
                amplitude_scale: float = 1.0, amplitude=None) -> PatternGrid:
    """Far-field pattern of the surface on a zero-padded ``P x Q`` grid.

    Parameters
    ----------
    pad : (int, int), optional
        Grid size; defaults to the exact-bin grid ``(m_x, m_y)``.
    amplitude_scale : float
        Folded constant ``E_0 k / (4 pi d_1 d_2)``.
    amplitude : array_like, optional
        Per-element amplitude response ``r(m, n)``; unit by default.
    """
    P, Q = (geom.m_x, geom.m_y) if pad is None else (int(pad[0]), int(pad[1]))
    if P < geom.m_x or Q < geom.m_y:
        raise ValueError(f"pad {(P, Q)} smaller than the element grid ({geom.m_x}, {geom.m_y})")
    padded = np.zeros((P, Q), dtype=complex)
    padded[: geom.m_x, : geom.m_y] = field_matrix(geom, config, theta_in, amplitude)
    array_sum = idft2(padded) * (P * Q)

    pp, qq = np.meshgrid(np.arange(P), np.arange(Q), indexing="ij")
    u, v = direction_cosines(pp, qq, P, Q, geom)
    s = np.hypot(u, v)
    physical = s <= 1.0 + 1e-12
    k1, amp = _element_factors(geom, u, v, theta_in, amplitude_scale)
    values = np.where(physical, k1 * amp * array_sum, np.nan + 0j)
    theta = np.where(physical, np.arcsin(np.clip(s, 0.0, 1.0)), np.nan)
    phi = np.where(physical, np.arctan2(v, u), np.nan)
    return PatternGrid(values, u, v, theta, phi, physical)


def pattern_direct(geom: RisGeometry, config: PhaseConfig, theta_in: float, u: float, v: float,
                   amplitude_scale: float = 1.0, amplitude=None) -> complex:
    """Pattern value at one direction by explicit summation over centered element positions."""
    x = (np.arange(geom.m_x) - (geom.m_x - 1) / 2) * geom.p_x
    y = (np.arange(geom.m_y) - (geom.m_y - 1) / 2) * geom.p_y
    r = np.ones((geom.m_x, geom.m_y)) if amplitude is None else np.broadcast_to(amplitude, (geom.m_x, geom.m_y))
    u_prime = u - math.sin(theta_in)
    phase = geom.k_0 * (u_prime * x[:, None] + v * y[None, :]) - config.phi
    total = np.sum(r * np.exp(1j * phase))
    cos_t = math.sqrt(max(0.0, 1.0 - u * u - v * v))
    amp = (amplitude_scale * geom.p_x * geom.p_y * float(sinc(geom.k_0 * u_prime * geom.p_x / 2))
           * float(sinc(geom.k_0 * v * geom.p_y / 2)) * cos_t)
    return complex(amp * total)


def ris_envelope_2d(geom: RisGeometry, config: PhaseConfig, link: LinkGeometry,
                    amp: ElementAmplitude = ElementAmplitude(), column_amplitudes=None) -> complex:
    """Specular complex envelope of the 2-D problem at ``t = 0``.

    Sums ``c_m exp(j(theta_0 - eps*m + phi_m))`` over the ``m_x`` columns with
    ``c_m = m_y * c_0`` unless ``column_amplitudes`` overrides it.
    """
    if not link.is_2d:
        raise GeometryModeError("ris_envelope_2d requires phi_in = phi_out = 0")
    if not config.matches(geom):
        raise ValueError("phase configuration does not match geometry")
    if not config.rows_identical():
        raise ValueError("2-D envelope needs a configuration constant along rows")
    M = geom.m_x
    k = geom.k_0
    u_prime = math.sin(link.theta_out) - math.sin(link.theta_in)
    eps = phase_gradient(geom, link.theta_in, link.theta_out)
    theta_0 = k * u_prime * (M - 1) * geom.p_x / 2 + k * (link.d_1 + link.d_2)
    c = np.full(M, geom.m_y * amp.c_0) if column_amplitudes is None else np.asarray(column_amplitudes, float)
    m = np.arange(M)
    return complex(np.sum(c * np.exp(1j * (theta_0 - eps * m + config.columns))))


def vector_graph_magnitude(M: int, c_0: float, delta_phi):
    """Arc approximation ``M c_0 |sinc(M delta_phi / 2)|`` of a bent phasor chain."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return M * c_0 * np.abs(sinc(M * np.asarray(delta_phi) / 2))


def phasor_chain_magnitude(M: int, c_0: float, delta_phi: float) -> float:
    """Exact ``c_0 |sum_m exp(j m delta_phi)|`` over ``m = 0..M-1``."""
    return float(c_0 * abs(np.sum(np.exp(1j * delta_phi * np.arange(M)))))
