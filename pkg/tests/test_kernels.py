import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from zfmimo import _kernels_py, kernels


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


def test_confluent_series_matches_scipy(backend):
    v, n, conv, mx = backend.confluent_series(2.0, 4.0, 3.5, 1e-15, 500, 0)
    assert conv
    assert v == pytest.approx(special.hyp1f1(2, 4, 3.5), rel=1e-13)
    assert mx >= 1.0


def test_confluent_series_cap(backend):
    v, n, conv, _ = backend.confluent_series(1.0, 1.0, 50.0, 1e-15, 10, 0)
    assert n == 10 and not conv


def test_conditional_error_matches_loop(backend):
    rng = np.random.default_rng(1)
    g = rng.exponential(3.0, 1000)
    c = rng.uniform(0.5, 5.0, 32)
    w = rng.uniform(0, 1, 32)
    ref = np.array([np.sum(w * np.exp(-x * c)) for x in g])
    np.testing.assert_allclose(backend.conditional_error(g, c, w), ref, rtol=1e-13)


def test_laguerre_matches_scipy(backend):
    L = backend.laguerre_sequence(40, 2.0, 3.3)
    ref = [special.eval_genlaguerre(n, 2.0, 3.3) for n in range(41)]
    np.testing.assert_allclose(L, ref, rtol=1e-10, atol=1e-12)


def test_laguerre_short(backend):
    assert list(backend.laguerre_sequence(0, 1.0, 2.0)) == [1.0]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.floats(0.0, 1e3), st.integers(2, 16))
def test_backends_agree_mpsk(N, g, M):
    try:
        from zfmimo import _kernels
    except ImportError:
        pytest.skip("compiled extension not built")
    a = _kernels.mpsk_closed(N, g, M)
    b = _kernels_py.mpsk_closed(N, g, M)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.5, 8.0), st.floats(-30, 30))
def test_backends_agree_confluent(a, b, z):
    try:
        from zfmimo import _kernels
    except ImportError:
        pytest.skip("compiled extension not built")
    r1 = _kernels.confluent_series(a, b, z, 1e-14, 400, 0)
    r2 = _kernels_py.confluent_series(a, b, z, 1e-14, 400, 0)
    assert r1[1:3] == r2[1:3]
    assert r1[0] == pytest.approx(r2[0], rel=1e-12, abs=1e-300)


def test_pure_python_env_switch(tmp_path):
    import subprocess
    import sys
    code = "import zfmimo.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={**__import__("os").environ, "ZFMIMO_PURE_PYTHON": "1"})
    assert out.stdout.strip() == "python"
