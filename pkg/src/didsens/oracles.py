"""Slow, transparent reference implementations.

These exist to cross-check the closed forms and fast algorithms elsewhere in
the package and are deliberately written in the most literal way possible:
grid search over the full parameter box, exhaustive enumeration of sign
patterns, exact rational binomial tails.  Nothing here shares code with the
paths it validates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class BruteForceResult:
    """Extremal sign probability and one grid configuration attaining it."""

    value: float
    at: dict


def brute_force_bound(
    lam: float,
    delta: float,
    objective: str = "max",
    aligned: bool = False,
    du_points: int = 21,
    coef_points: int = 9,
) -> BruteForceResult:
    """Extremize the one-quadruple sign probability by grid search.

    The probability that the signed contrast is positive, given magnitudes,
    is a composition of two logistic terms: the assignment-side term with
    per-period coefficients bounded by log(lam), and the outcome-side term
    with coefficients bounded by log(delta).  This routine evaluates that
    composition on a full grid over the two latent differences (each in
    [-1, 1], including the corners), the four coefficients (including the
    interval endpoints), and the cross-period agreement flag, and returns
    the max or min.

    Parameters
    ----------
    lam, delta : float
        Caps, both >= 1.
    objective : str
        "max" or "min".
    aligned : bool
        If True, restrict to coefficient pairs with matching signs across
        periods (lam1*lam2 >= 0 and delta1*delta2 >= 0).
    du_points, coef_points : int
        Grid resolutions.  Defaults include all corner configurations.

    Returns
    -------
    BruteForceResult

    Notes
    -----
    One sweep locates both extremes and is memoized, so asking for "min"
    and "max" at the same parameters costs a single grid evaluation.
    """
    if lam < 1 or delta < 1:
        raise ValueError("lam and delta must be >= 1")
    if objective not in ("max", "min"):
        raise ValueError("objective must be 'max' or 'min'")
    lo, hi = _grid_extremes(
        float(lam), float(delta), bool(aligned), int(du_points), int(coef_points)
    )
    value, at = lo if objective == "min" else hi
    return BruteForceResult(value=value, at=dict(at))


@lru_cache(maxsize=64)
def _grid_extremes(
    lam: float, delta: float, aligned: bool, du_points: int, coef_points: int
) -> tuple[tuple[float, tuple], tuple[float, tuple]]:
    """Scan the full configuration grid once, returning (min, max) entries."""
    du = np.linspace(-1.0, 1.0, du_points)
    lgrid = np.linspace(-math.log(lam), math.log(lam), coef_points)
    dgrid = np.linspace(-math.log(delta), math.log(delta), coef_points)

    # For one configuration the agreement probability is
    #     rho*eta + (1 - rho)*(1 - eta) = (1 + tanh(a/2)*tanh(c/2)) / 2
    # with rho = expit(a), eta = expit(c); the map is increasing in the tanh
    # product, so extremizing the product extremizes the probability.  The
    # grid is swept one du1 slice at a time to keep temporaries in cache.
    du2 = du[:, None, None, None, None]
    l1 = lgrid[None, :, None, None, None]
    l2 = lgrid[None, None, :, None, None]
    g1 = dgrid[None, None, None, :, None]
    g2 = dgrid[None, None, None, None, :]
    slice_shape = (du_points, coef_points, coef_points, coef_points, coef_points)
    if aligned:
        mask = np.broadcast_to((l1 * l2 >= 0) & (g1 * g2 >= 0), slice_shape)

    best_lo = None
    best_hi = None
    for b in (-1.0, 1.0):
        for i1, du1 in enumerate(du):
            r = np.tanh(0.5 * (l2 * du2 + b * l1 * du1))
            e = np.tanh(0.5 * (g2 * du2 - b * g1 * du1))
            c = r * e
            if aligned:
                c = np.where(mask, c, np.nan)
                flat_hi = int(np.nanargmax(c))
                flat_lo = int(np.nanargmin(c))
            else:
                flat_hi = int(c.argmax())
                flat_lo = int(c.argmin())
            c_flat = c.reshape(-1)
            v_hi = 0.5 * (1.0 + float(c_flat[flat_hi]))
            v_lo = 0.5 * (1.0 + float(c_flat[flat_lo]))
            if best_hi is None or v_hi > best_hi[0]:
                best_hi = (v_hi, (i1, *np.unravel_index(flat_hi, c.shape)), b)
            if best_lo is None or v_lo < best_lo[0]:
                best_lo = (v_lo, (i1, *np.unravel_index(flat_lo, c.shape)), b)

    def pack(entry: tuple) -> tuple[float, tuple]:
        value, idx, b = entry
        i1, i2, j1, j2, k1, k2 = idx
        at = (
            ("du1", float(du[i1])),
            ("du2", float(du[i2])),
            ("lam1", float(lgrid[j1])),
            ("lam2", float(lgrid[j2])),
            ("delta1", float(dgrid[k1])),
            ("delta2", float(dgrid[k2])),
            ("b", b),
        )
        return value, at

    return pack(best_lo), pack(best_hi)


@dataclass(frozen=True)
class ExactNullDistribution:
    """All 2^n sign patterns of a score vector with their probabilities."""

    values: np.ndarray
    probs: np.ndarray

    def tail_geq(self, t: float, tol: float = 1e-9) -> float:
        return float(self.probs[self.values >= t - tol].sum())

    def tail_leq(self, t: float, tol: float = 1e-9) -> float:
        return float(self.probs[self.values <= t + tol].sum())

    def pmf(self, decimals: int = 9) -> dict[float, float]:
        table: dict[float, float] = {}
        for v, p in zip(np.round(self.values, decimals), self.probs):
            table[float(v)] = table.get(float(v), 0.0) + float(p)
        return table


def exact_null_distribution(scores, p_plus: float = 0.5) -> ExactNullDistribution:
    """Exhaustively enumerate the sign-flip null distribution.

    Each of the n scores independently enters the sum with probability
    p_plus.  Limited to n <= 20; intended for validation, not production.
    """
    q = [float(v) for v in scores]
    n = len(q)
    if n > 20:
        raise ValueError("exhaustive enumeration is limited to 20 scores")
    if any(v < 0 for v in q):
        raise ValueError("scores must be nonnegative")
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError("p_plus must lie in [0, 1]")
    values = []
    probs = []
    for pattern in itertools.product((0, 1), repeat=n):
        k = sum(pattern)
        values.append(sum(v for v, bit in zip(q, pattern) if bit))
        probs.append(p_plus**k * (1.0 - p_plus) ** (n - k))
    return ExactNullDistribution(values=np.array(values), probs=np.array(probs))


def binomial_tail_exact(n: int, t: int, p: Fraction, upper: bool = True) -> Fraction:
    """Exact rational binomial tail P(X >= t) (or P(X <= t))."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    p = Fraction(p)
    ks = range(t, n + 1) if upper else range(0, t + 1)
    total = Fraction(0)
    for k in ks:
        if 0 <= k <= n:
            total += math.comb(n, k) * p**k * (1 - p) ** (n - k)
    return total


def mcnemar_tail_exact(
    n_informative: int,
    statistic: int,
    gamma_squared: Fraction,
    direction: str = "upper",
    sided: str = "greater",
) -> Fraction:
    """Exact rational bound on the binomial-tail p-value.

    The sign probability ranges over [1/(1+g), g/(1+g)]; "upper"/"lower"
    selects the worst/best case for the tail named by `sided`.
    """
    g = Fraction(gamma_squared)
    if g < 1:
        raise ValueError("gamma_squared must be >= 1")
    if direction not in ("upper", "lower"):
        raise ValueError("direction must be 'upper' or 'lower'")
    if sided not in ("greater", "less"):
        raise ValueError("sided must be 'greater' or 'less'")
    p_hi = g / (1 + g)
    p_lo = 1 / (1 + g)
    # P(X >= t) grows with p; P(X <= t) shrinks with p.
    if sided == "greater":
        p = p_hi if direction == "upper" else p_lo
        return binomial_tail_exact(n_informative, statistic, p, upper=True)
    p = p_lo if direction == "upper" else p_hi
    return binomial_tail_exact(n_informative, statistic, p, upper=False)
