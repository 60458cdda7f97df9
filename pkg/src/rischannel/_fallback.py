"""Pure numpy implementation of the Monte Carlo kernels.

Counter-based uniforms
----------------------
Every random number is a pure function of ``(seed, trial, stream, lane)``::

    mix(z)   = SplitMix64 finalizer (constants 0xBF58476D1CE4E5B9, 0x94D049BB133111EB)
    key      = mix(seed + G)                    G = 0x9E3779B97F4A7C15
    tk       = mix(key ^ trial)
    sk       = mix(tk + S * (stream + 1))       S = 0xD1B54A32D192ED03
    u        = (mix(sk + G * (lane + 1)) >> 11) * 2**-53      in [0, 1)

All arithmetic is modulo 2**64. Trials therefore never share generator state
and any chunking of the trial range yields identical samples. This derivation
is part of the public reproducibility contract and must not change.

Streams used by the package: 0 = specular phases, 1 = direct-path phases,
``2 + j`` = auxiliary draws (e.g. Gaussian pairs for user ``j``).
"""

from __future__ import annotations

import numpy as np

_U = np.uint64
GOLDEN = _U(0x9E3779B97F4A7C15)
STREAM_GAMMA = _U(0xD1B54A32D192ED03)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = _U(30), _U(27), _U(31), _U(11)
_INV53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * np.pi

# keep temporaries around a few MB
_CHUNK_ELEMS = 1 << 20


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _as_u64(x) -> np.uint64:
    return _U(int(x) & 0xFFFFFFFFFFFFFFFF)


def stream_keys(seed: int, stream: int, trials) -> np.ndarray:
    key = _mix(np.array([_as_u64(seed)], dtype=np.uint64) + GOLDEN)
    tk = _mix(key ^ np.asarray(trials, dtype=np.uint64))
    with np.errstate(over="ignore"):
        return _mix(tk + STREAM_GAMMA * _as_u64(stream + 1))


def _lane_uniforms(keys: np.ndarray, lanes: int) -> np.ndarray:
    lane_off = (np.arange(1, lanes + 1, dtype=np.uint64) * GOLDEN)[None, :]
    with np.errstate(over="ignore"):
        z = _mix(keys[:, None] + lane_off)
    return (z >> _S11).astype(np.float64) * _INV53


def uniform_block(seed: int, stream: int, trial_start: int, count: int, lanes: int) -> np.ndarray:
    """Uniforms of shape ``(count, lanes)`` for trials ``trial_start ...``."""
    trials = np.arange(trial_start, trial_start + count, dtype=np.uint64)
    return _lane_uniforms(stream_keys(seed, stream, trials), lanes)


def _phasor_sum(seed, stream, trials, lanes, amp, scale, ramp):
    out = np.empty(len(trials), dtype=complex)
    if lanes == 0:
        out[:] = 0.0
        return out
    step = max(1, _CHUNK_ELEMS // lanes)
    m = np.arange(lanes, dtype=float)
    for lo in range(0, len(trials), step):
        keys = stream_keys(seed, stream, trials[lo:lo + step])
        theta = (_lane_uniforms(keys, lanes) - 0.5) * scale - ramp * m
        out[lo:lo + step] = amp * (np.cos(theta).sum(axis=1) + 1j * np.sin(theta).sum(axis=1))
    return out


def envelope_block(seed: int, trial_start: int, count: int, M: int, N: int,
                   amp_r: float, amp_d: float, delta: float, ramp: float = 0.0):
    """Specular and direct complex envelopes for ``count`` consecutive trials.

    Specular lane ``m`` has phase ``(u - 1/2) * delta - ramp * m``; direct lanes
    have phase ``(u - 1/2) * 2*pi``.
    """
    trials = np.arange(trial_start, trial_start + count, dtype=np.uint64)
    spec = _phasor_sum(seed, 0, trials, M, amp_r, delta, ramp)
    direct = _phasor_sum(seed, 1, trials, N, amp_d, TWO_PI, 0.0)
    return spec, direct
