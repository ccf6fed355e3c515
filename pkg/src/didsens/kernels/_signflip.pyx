# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled exact sign-flip convolution kernel."""

import numpy as np


def signflip_pmf(scores, double p_plus):
    """PMF of T = sum(eps_i * q_i), eps_i iid Bernoulli(p_plus), q_i >= 0 ints.

    Returns an array of length sum(q) + 1; entry t is P(T = t).
    """
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError("p_plus must lie in [0, 1]")
    cdef long long[::1] q = np.ascontiguousarray(scores, dtype=np.int64)
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t i
    cdef long long total = 0
    for i in range(n):
        if q[i] < 0:
            raise ValueError("scores must be nonnegative integers")
        total += q[i]
    out = np.zeros(total + 1, dtype=np.float64)
    cdef double[::1] pmf = out
    pmf[0] = 1.0
    cdef double p = p_plus
    cdef double one_minus = 1.0 - p_plus
    # 'top' tracks the current support maximum so each convolution step
    # touches only reachable cells.
    cdef long long top = 0
    cdef long long s, qi
    for i in range(n):
        qi = q[i]
        if qi == 0:
            continue
        for s in range(top, -1, -1):
            pmf[s + qi] += pmf[s] * p
            pmf[s] *= one_minus
        top += qi
    return out
