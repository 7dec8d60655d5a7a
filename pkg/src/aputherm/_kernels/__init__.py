"""Hot-loop kernels: compiled extension when built, pure Python otherwise.

Set ``APUTHERM_PURE=1`` to force the pure-Python fallback (useful for
debugging and for the benchmark in ``benchmarks/bench_kernels.py``).
"""

import os
import warnings

if os.environ.get("APUTHERM_PURE", "") not in ("", "0"):
    from .pure import COMPILED, assemble_stencil
else:
    try:
        from ._stencil import COMPILED, assemble_stencil
    except ImportError:
        warnings.warn(
            "aputherm compiled kernels not built; using the pure-Python "
            "fallback (slower grid assembly)",
            RuntimeWarning,
            stacklevel=2,
        )
        from .pure import COMPILED, assemble_stencil

__all__ = ["COMPILED", "assemble_stencil"]
