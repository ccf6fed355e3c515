"""Exact null-distribution kernels.

Prefers the compiled extension when it built; otherwise the pure-numpy
fallback. `BACKEND` records which one is active.
"""

try:
    from ._signflip import signflip_pmf

    BACKEND = "cython"
except ImportError:
    from ._signflip_py import signflip_pmf

    BACKEND = "python"

__all__ = ["signflip_pmf", "BACKEND"]
