"""Benchmark the stencil assembly kernel: compiled extension vs pure Python.

The assembly is the hot Python-level loop of grid construction (the sparse
factorization itself always runs in SciPy). Run:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np
import scipy.sparse as sp

from aputherm._kernels import COMPILED
from aputherm._kernels import pure

try:
    from aputherm._kernels import _stencil
except ImportError:
    _stencil = None


def _case(nx, ny):
    thickness = np.array([750e-6, 2e-6, 0.5e-3])
    conductivity = np.array([148.0, 0.138, 35.0])
    active = np.ones((3, ny, nx), dtype=np.uint8)
    active[0, : ny // 4, :] = 0  # die smaller than the window
    active[1] = active[0]
    return nx, ny, 0.625e-3, 0.625e-3, thickness, conductivity, active


def _time(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, 3500.0, 5.0)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    print(f"compiled extension available: {_stencil is not None} "
          f"(package using {'compiled' if COMPILED else 'pure'})")
    header = f"{'grid':>10} {'pure (ms)':>12} {'compiled (ms)':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for nx in (64, 128, 256):
        args = _case(nx, nx)
        t_pure, out_pure = _time(pure.assemble_stencil, args, repeat=2)
        if _stencil is None:
            print(f"{nx}x{nx:<6} {1e3 * t_pure:12.1f} {'n/a':>14} {'n/a':>9}")
            continue
        t_ext, out_ext = _time(_stencil.assemble_stencil, args, repeat=5)
        n = 3 * nx * nx
        a1 = sp.csr_matrix((out_pure[2], (out_pure[0], out_pure[1])), shape=(n, n))
        a2 = sp.csr_matrix((out_ext[2], (out_ext[0], out_ext[1])), shape=(n, n))
        assert abs(a1 - a2).max() < 1e-12, "kernel outputs diverge"
        print(f"{nx}x{nx:<6} {1e3 * t_pure:12.1f} {1e3 * t_ext:14.2f} "
              f"{t_pure / t_ext:8.1f}x")


if __name__ == "__main__":
    main()
