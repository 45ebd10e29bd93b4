import os

import pytest



@pytest.fixture(params=["cython", "python"])
def backend(request):
    """Both kernel implementations, for parity tests."""
    from zfmimo import _kernels_py
    if request.param == "python":
        return _kernels_py
    try:
        from zfmimo import _kernels
    except ImportError:
        pytest.skip("compiled extension not built")
    return _kernels
