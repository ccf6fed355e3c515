"""Timing comparison of the sign-flip null distribution kernels.

Runs the selected backend (compiled extension when available) against the
always-importable pure-numpy reference on rank-score vectors of growing
size, printing per-call times and the largest probability discrepancy.

Run as: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from didsens.kernels import BACKEND, signflip_pmf
from didsens.kernels._signflip_ref import signflip_pmf as reference_pmf

SIZES = (50, 200, 800, 2000)
P_PLUS = 0.6


def time_call(fn, scores, reps: int) -> float:
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(scores, P_PLUS)
    return (time.perf_counter() - t0) / reps


def main() -> None:
    print(f"selected backend: {BACKEND}")
    print(f"{'n':>6} {'selected (ms)':>14} {'reference (ms)':>15} {'speedup':>8} {'max |diff|':>12}")
    for n in SIZES:
        scores = np.arange(1, n + 1, dtype=np.int64)
        reps = max(1, 4000 // n)
        t_sel = time_call(signflip_pmf, scores, reps)
        t_ref = time_call(reference_pmf, scores, reps)
        diff = float(np.max(np.abs(signflip_pmf(scores, P_PLUS) - reference_pmf(scores, P_PLUS))))
        print(f"{n:>6} {t_sel * 1e3:>14.3f} {t_ref * 1e3:>15.3f} {t_ref / t_sel:>8.2f} {diff:>12.3e}")


if __name__ == "__main__":
    main()
