# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels.

Bit-for-bit the same uniforms as ``rischannel._fallback``; see that module for
the counter-based derivation.
"""

import numpy as np

from libc.math cimport sin, cos, M_PI
from libc.stdint cimport uint64_t
from cython.parallel cimport prange

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_GAMMA = 0xD1B54A32D192ED03ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _stream_key(uint64_t key, uint64_t trial, uint64_t stream) noexcept nogil:
    return _mix(_mix(key ^ trial) + STREAM_GAMMA * (stream + 1))


cdef inline double _unit(uint64_t sk, uint64_t lane) noexcept nogil:
    return <double>(_mix(sk + GOLDEN * (lane + 1)) >> 11) * INV53


cdef inline uint64_t _seed_key(object seed):
    return _mix(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF) + GOLDEN)


cdef inline double complex _phasor_sum(uint64_t sk, Py_ssize_t lanes, double scale, double ramp) noexcept nogil:
    cdef double th, re = 0.0, im = 0.0
    cdef Py_ssize_t j
    for j in range(lanes):
        th = (_unit(sk, <uint64_t>j) - 0.5) * scale - ramp * <double>j
        re = re + cos(th)
        im = im + sin(th)
    return re + 1j * im


def uniform_block(seed, int stream, long long trial_start, Py_ssize_t count, Py_ssize_t lanes):
    out = np.empty((count, lanes), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint64_t key = _seed_key(seed)
    cdef uint64_t sk
    cdef Py_ssize_t i, j
    for i in prange(count, nogil=True, schedule="static"):
        sk = _stream_key(key, <uint64_t>(trial_start + i), <uint64_t>stream)
        for j in range(lanes):
            o[i, j] = _unit(sk, <uint64_t>j)
    return out


def envelope_block(seed, long long trial_start, Py_ssize_t count, Py_ssize_t M, Py_ssize_t N,
                   double amp_r, double amp_d, double delta, double ramp=0.0):
    spec = np.zeros(count, dtype=np.complex128)
    direct = np.zeros(count, dtype=np.complex128)
    cdef double complex[::1] sv = spec
    cdef double complex[::1] dv = direct
    cdef uint64_t key = _seed_key(seed)
    cdef Py_ssize_t i
    cdef double two_pi = 2.0 * M_PI
    # trials are independent, so the parallel loop is deterministic
    for i in prange(count, nogil=True, schedule="static"):
        if M > 0:
            sv[i] = amp_r * _phasor_sum(_stream_key(key, <uint64_t>(trial_start + i), 0), M, delta, ramp)
        if N > 0:
            dv[i] = amp_d * _phasor_sum(_stream_key(key, <uint64_t>(trial_start + i), 1), N, two_pi, 0.0)
    return spec, direct
