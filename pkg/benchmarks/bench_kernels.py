"""Time the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""

import argparse
import timeit

import numpy as np

from zfmimo import _kernels_py
from zfmimo.montecarlo import conditional_error_nodes

try:
    from zfmimo import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    gammas = rng.exponential(10.0, size=200_000)
    c, w = conditional_error_nodes(4)
    return {
        "confluent_series(a=3,b=4,z=80)": lambda m: m.confluent_series(3.0, 4.0, 80.0, 1e-16, 10_000, 0),
        "conditional_error(2e5 x 256)": lambda m: m.conditional_error(gammas, c, w),
        "laguerre_sequence(150)": lambda m: m.laguerre_sequence(150, 3.0, 7.5),
        "mpsk_closed(N=40)": lambda m: m.mpsk_closed(40, 10.0, 4),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; only the Python backend can be timed")
    print(f"{'kernel':34s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        if _kernels is not None:
            t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
            ref, got = fn(_kernels_py), fn(_kernels)
            assert np.allclose(np.asarray(ref, dtype=float), np.asarray(got, dtype=float),
                               rtol=1e-12, atol=0), name
            print(f"{name:34s} {t_py:12.3g} {t_cy:12.3g} {t_py / t_cy:9.1f}")
        else:
            print(f"{name:34s} {t_py:12.3g} {'-':>12s} {'-':>9s}")


if __name__ == "__main__":
    main()
