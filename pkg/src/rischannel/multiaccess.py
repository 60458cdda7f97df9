"""Multi-user layer: per-user channel statistics, NOMA/FDMA/TDMA SINRs,
outage thresholds and simulated sum rates as the RIS steering angle moves.

User indices are 0-based and follow the NOMA allocation order: user 0 has
the largest power coefficient and is expected to be the weakest channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import Continuous, Discrete, LinkGeometry, RisGeometry
from .montecarlo import derive_seed, rician_power_block
from .radiation import ElementAmplitude
from .statistics import RicianParams, outage_probability

SCHEMES = ("noma", "fdma", "tdma")


class DecodingOrderError(ValueError):
    """Raised when a user is asked to decode a message it cannot see (``l > k``)."""


class InfeasibleAllocationError(ArithmeticError):
    """Raised when a NOMA allocation can never meet a user's SINR target."""


@dataclass(frozen=True)
class UserSpec:
    """One user: angle seen from the RIS, SINR target ``tau`` and NOMA share ``a``."""

    theta_out: float
    tau: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        if not -math.pi / 2 < self.theta_out < math.pi / 2:
            raise ValueError("theta_out must lie in (-pi/2, pi/2)")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if not 0 < self.a <= 1:
            raise ValueError("power coefficient a must lie in (0, 1]")


@dataclass(frozen=True)
class MultiAccessScenario:
    """Users, access scheme and the shared RIS/direct-link context.

    Attributes
    ----------
    c_0 : float
        Per-element amplitude before the optional element pattern.
    element_pattern : bool
        Scale ``c_0`` by the element Fraunhofer and leaning factors of each
        user's direction, which makes users at different angles unequal.
    fdma_powers : sequence of float, optional
        Per-user FDMA powers; equal split of ``p_t`` by default.
    """

    users: tuple
    geom: RisGeometry
    theta_in: float = 0.0
    theta_target: float = 0.0
    scheme: str = "noma"
    N: int = 64
    omega_d: float = 1.0 / 64
    c_0: float = 1.0
    p_t: float = 1.0
    sigma_sq: float = 1.0
    gamma_min: float = 1.0
    quantization: object = field(default_factory=Continuous)
    fdma_powers: Optional[tuple] = None
    element_pattern: bool = False

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if len(self.users) < 1:
            raise ValueError("need at least one user")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.N < 1 or self.omega_d <= 0 or self.c_0 < 0:
            raise ValueError("invalid direct-link or amplitude parameters")
        if self.p_t <= 0 or self.sigma_sq <= 0:
            raise ValueError("p_t and sigma_sq must be positive")
        if self.scheme == "noma":
            a = [u.a for u in self.users]
            if abs(sum(a) - 1.0) > 1e-9:
                raise ValueError(f"NOMA power coefficients must sum to 1, got {sum(a)}")
            if any(x < y for x, y in zip(a, a[1:])):
                raise ValueError("NOMA power coefficients must be non-increasing in user order")
        if self.fdma_powers is not None:
            p = tuple(float(x) for x in self.fdma_powers)
            object.__setattr__(self, "fdma_powers", p)
            if len(p) != len(self.users) or min(p) < 0:
                raise ValueError("fdma_powers needs one non-negative entry per user")
            if sum(p) > self.p_t * (1 + 1e-12):
                raise ValueError("fdma_powers exceed the total power p_t")

    @property
    def q(self) -> int:
        return len(self.users)

    def powers(self) -> tuple:
        return self.fdma_powers if self.fdma_powers is not None else (self.p_t / self.q,) * self.q

    def retarget(self, theta_target: float) -> "MultiAccessScenario":
        return replace(self, theta_target=theta_target)


def _user(scenario: MultiAccessScenario, k: int) -> UserSpec:
    if not 0 <= k < scenario.q:
        raise IndexError(f"user index {k} out of range for {scenario.q} users")
    return scenario.users[k]


def _element_c0(scenario: MultiAccessScenario, theta_out: float) -> float:
    if not scenario.element_pattern:
        return scenario.c_0
    link = LinkGeometry(theta_in=scenario.theta_in, theta_out=theta_out)
    amp = ElementAmplitude.from_geometry(scenario.geom, link)
    return scenario.c_0 * amp.fraunhofer * amp.leaning


def user_channel_params(user: UserSpec, scenario: MultiAccessScenario) -> RicianParams:
    """Rician parameters of one user's joint channel under the current steering angle.

    Continuous steering uses the arc-approximated array factor. With discrete
    quantization the per-element errors are uniform on ``(-D/2, D/2)`` on top
    of the off-target ramp, which multiplies the coherent power by
    ``sinc^2(D/2)`` and moves the remainder into the diffuse part.
    """
    g = scenario.geom
    M = g.m_x
    dphi = 2 * math.pi * g.p_x / g.lambda_c * (math.sin(user.theta_out) - math.sin(scenario.theta_target))
    c = g.m_y * _element_c0(scenario, user.theta_out)
    array = float(np.sinc(M * dphi / 2 / math.pi)) ** 2
    direct = scenario.N * scenario.omega_d
    if isinstance(scenario.quantization, Discrete):
        s = float(np.sinc(scenario.quantization.step / 2 / math.pi)) ** 2
        los = M * M * c * c * s * array
        diffuse = M * c * c * (1 - s) + direct
    else:
        los = M * M * c * c * array
        diffuse = direct
    return RicianParams(los / diffuse, los + diffuse)


def noma_sinr(k: int, l: int, h_sq, scenario: MultiAccessScenario):
    """SINR with which user ``k`` decodes the message of user ``l`` (``l <= k``)."""
    _user(scenario, k)
    if l > k:
        raise DecodingOrderError(f"user {k} cannot decode the message of user {l}")
    if l < 0:
        raise IndexError("negative user index")
    a = [u.a for u in scenario.users]
    tail = sum(a[l + 1:])
    hp = np.asarray(h_sq, float) * scenario.p_t
    return hp * a[l] / (hp * tail + scenario.sigma_sq)


def oma_snr(k: int, h_sq, scenario: MultiAccessScenario, scheme: Optional[str] = None):
    """FDMA or TDMA SNR of user ``k``; FDMA users see noise ``sigma^2 / q``."""
    scheme = scenario.scheme if scheme is None else scheme
    _user(scenario, k)
    h = np.asarray(h_sq, float)
    if scheme == "fdma":
        return h * scenario.powers()[k] / (scenario.sigma_sq / scenario.q)
    if scheme == "tdma":
        return h * scenario.p_t / scenario.sigma_sq
    raise ValueError(f"oma_snr needs scheme 'fdma' or 'tdma', got {scheme!r}")


def outage_threshold(k: int, scenario: MultiAccessScenario) -> float:
    """Channel-power threshold below which user ``k`` is in outage.

    For NOMA, user ``k`` must decode every message ``l <= k``; each event
    needs ``|h|^2 >= tau_l / (a_l - tau_l * sum_{p>l} a_p) * sigma^2 / P_t``,
    and all of them hold exactly when ``|h|^2`` clears the largest one.
    """
    _user(scenario, k)
    s = scenario.sigma_sq
    if scenario.scheme == "tdma":
        return scenario.gamma_min * s / scenario.p_t
    if scenario.scheme == "fdma":
        p = scenario.powers()[k]
        if p <= 0:
            raise InfeasibleAllocationError(f"user {k} has no FDMA power")
        return scenario.gamma_min * s / (scenario.q * p)
    a = [u.a for u in scenario.users]
    worst = 0.0
    for l in range(k + 1):
        tau = scenario.users[l].tau
        den = a[l] - tau * sum(a[l + 1:])
        if den <= 0:
            raise InfeasibleAllocationError(
                f"user {k} cannot decode message {l}: a_l - tau_l * sum(a_p) = {den:.6g} <= 0")
        worst = max(worst, tau / den)
    return worst * s / scenario.p_t


def user_outage(k: int, scenario: MultiAccessScenario) -> float:
    """Analytic outage of user ``k``; an infeasible NOMA allocation gives 1."""
    try:
        mu = outage_threshold(k, scenario)
    except InfeasibleAllocationError:
        return 1.0
    return float(outage_probability(user_channel_params(scenario.users[k], scenario), mu))


def noma_outage_mc(k: int, scenario: MultiAccessScenario, n_draws: int, seed: int) -> float:
    """Monte Carlo outage of user ``k`` from the joint SIC events on one channel draw per trial."""
    p = user_channel_params(_user(scenario, k), scenario)
    h = rician_power_block(p.k_factor, p.omega_p, seed, 2 + k, 0, n_draws)[:, 0]
    ok = np.ones(n_draws, dtype=bool)
    for l in range(k + 1):
        ok &= noma_sinr(k, l, h, scenario) >= scenario.users[l].tau
    return float(np.mean(~ok))


@dataclass(frozen=True)
class SumRateResult:
    """Mean sum rates (bit/s/Hz) per scheme over a sweep of steering angles."""

    theta_target: np.ndarray
    rates: dict

    def argmax(self, scheme: str) -> float:
        return float(self.theta_target[int(np.argmax(self.rates[scheme]))])


def _noma_sum_rate(h: np.ndarray, a_sorted: np.ndarray, snr: float) -> np.ndarray:
    # rank users by instantaneous gain; the weakest gets the largest share
    hs = np.sort(h, axis=1)
    tail = np.concatenate([np.cumsum(a_sorted[::-1])[::-1][1:], [0.0]])
    g = hs * snr
    return np.log2(1 + g * a_sorted / (g * tail + 1)).sum(axis=1)


def sum_rate(scenario: MultiAccessScenario, targets: Sequence[float], n_draws: int = 10_000,
             seed: int = 0) -> SumRateResult:
    """Simulated mean sum rate of NOMA, FDMA and TDMA at each steering angle.

    Per draw, NOMA orders users by their instantaneous channel power and
    assumes successful SIC, so rank ``r`` contributes
    ``log2(1 + h_r P a_r / (h_r P sum_{p>r} a_p + sigma^2))``. Orthogonal
    schemes give every user a ``1/q`` share of time or bandwidth.
    """
    if scenario.q < 2:
        raise ValueError("sum_rate needs two or more users")
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    targets = np.asarray(targets, float)
    a_sorted = np.sort([u.a for u in scenario.users])[::-1]
    if abs(a_sorted.sum() - 1.0) > 1e-9:
        raise ValueError("power coefficients must sum to 1")
    snr = scenario.p_t / scenario.sigma_sq
    powers = np.asarray(scenario.powers())
    q = scenario.q
    out = {s: np.empty(len(targets)) for s in SCHEMES}
    for i, t in enumerate(targets):
        sc = scenario.retarget(float(t))
        params = [user_channel_params(u, sc) for u in sc.users]
        h = rician_power_block([p.k_factor for p in params], [p.omega_p for p in params],
                               derive_seed(seed, i), 2, 0, n_draws)
        out["noma"][i] = _noma_sum_rate(h, a_sorted, snr).mean()
        out["tdma"][i] = (np.log2(1 + h * snr).sum(axis=1) / q).mean()
        out["fdma"][i] = (np.log2(1 + h * powers * q / scenario.sigma_sq).sum(axis=1) / q).mean()
    return SumRateResult(targets, out)
