import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rischannel import _fallback, kernels

try:
    from rischannel import _kernels
except ImportError:  # extension not built in this environment
    _kernels = None

needs_compiled = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")

MASK = (1 << 64) - 1


def mix_reference(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def uniform_reference(seed, stream, trial, lane):
    """Pure-integer statement of the documented derivation."""
    g = 0x9E3779B97F4A7C15
    key = mix_reference(seed + g)
    tk = mix_reference(key ^ trial)
    sk = mix_reference(tk + 0xD1B54A32D192ED03 * (stream + 1))
    return (mix_reference(sk + g * (lane + 1)) >> 11) * 2.0 ** -53


def test_splitmix_reference_vector():
    # first SplitMix64 output for state 0 (published test vector)
    assert mix_reference(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
    assert int(_fallback._mix(np.array([0x9E3779B97F4A7C15], dtype=np.uint64))[0]) == 0xE220A8397B1DCDAF


@given(st.integers(0, MASK), st.integers(0, 7), st.integers(0, 2 ** 40), st.integers(1, 5))
@settings(max_examples=40)
def test_fallback_matches_integer_reference(seed, stream, trial, lanes):
    u = _fallback.uniform_block(seed, stream, trial, 2, lanes)
    for i in range(2):
        for j in range(lanes):
            assert u[i, j] == uniform_reference(seed, stream, trial + i, j)


@needs_compiled
@given(st.integers(0, MASK), st.integers(0, 7), st.integers(0, 2 ** 40), st.integers(1, 64), st.integers(1, 64))
@settings(max_examples=40)
def test_compiled_uniforms_bit_identical(seed, stream, start, count, lanes):
    a = _fallback.uniform_block(seed, stream, start, count, lanes)
    b = _kernels.uniform_block(seed, stream, start, count, lanes)
    assert np.array_equal(a, b)


@needs_compiled
@pytest.mark.parametrize("M,N,delta,ramp", [(50, 64, np.pi, 0.0), (7, 3, 2 * np.pi, 0.01), (0, 16, 0.0, 0.0),
                                            (20, 0, np.pi / 2, 0.3)])
def test_compiled_envelopes_agree(M, N, delta, ramp):
    s1, d1 = _fallback.envelope_block(3, 10, 2000, M, N, 1.5, 0.2, delta, ramp)
    s2, d2 = _kernels.envelope_block(3, 10, 2000, M, N, 1.5, 0.2, delta, ramp)
    assert np.max(np.abs(s1 - s2)) <= 1e-12 * max(1, M)
    assert np.max(np.abs(d1 - d2)) <= 1e-12 * max(1, N)


@pytest.mark.parametrize("impl", [_fallback, _kernels] if _kernels is not None else [_fallback])
def test_chunking_invariance(impl):
    whole = impl.envelope_block(9, 0, 1000, 12, 8, 1.0, 1.0, np.pi, 0.0)
    parts = [impl.envelope_block(9, lo, 250, 12, 8, 1.0, 1.0, np.pi, 0.0) for lo in range(0, 1000, 250)]
    for k in range(2):
        assert np.array_equal(whole[k], np.concatenate([p[k] for p in parts]))


def test_uniform_range_and_streams_differ():
    u = kernels.uniform_block(1, 0, 0, 1000, 10)
    v = kernels.uniform_block(1, 1, 0, 1000, 10)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert not np.array_equal(u, v)
    assert abs(u.mean() - 0.5) < 0.01


def test_envelope_specular_phases_follow_uniforms():
    # lane m of stream 0 sets the specular phase (u - 1/2) * delta - ramp * m
    u = kernels.uniform_block(4, 0, 0, 5, 6)
    spec, _ = kernels.envelope_block(4, 0, 5, 6, 1, 2.0, 1.0, np.pi, 0.1)
    ref = 2.0 * np.exp(1j * ((u - 0.5) * np.pi - 0.1 * np.arange(6))).sum(axis=1)
    np.testing.assert_allclose(spec, ref, rtol=1e-13)


def test_backend_env_override():
    env = dict(os.environ, RISCHANNEL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import rischannel; print(rischannel.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("python", "compiled")
