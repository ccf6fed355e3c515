"""Always-importable reference copy of the fallback kernel.

Kept separate from the backend selection so benchmarks and tests can compare
the compiled extension against the pure-Python path even when the extension
is installed.
"""

from ._signflip_py import signflip_pmf

__all__ = ["signflip_pmf"]
