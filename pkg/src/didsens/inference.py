"""Randomization inference for matched difference-in-differences contrasts.

Tests are sign-score tests: under the null that the adjusted contrasts are
symmetric, each quadruple's sign is an independent fair coin given the
magnitudes, and the positive-sign score sum has an exactly computable
reference distribution.  The same machinery, run with a tilted sign
probability, powers the sensitivity module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm, rankdata

from . import kernels
from .core import QuadrupleSet
from .errors import DegenerateDataError

SIDES = ("one_sided_greater", "one_sided_less", "two_sided")

# Cutoffs for the exact-computation routes.
DP_MAX_TOTAL = 1_000_000
ENUM_MAX_N = 20
_INT_SCALES = (1, 2)


@dataclass(frozen=True)
class ScoreFunction:
    """Maps contrast magnitudes to nonnegative scores.

    Scores must be 0 wherever the magnitude is 0 (zero contrasts carry no
    sign information and are dropped).
    """

    kind: str
    fn: Callable[[np.ndarray], np.ndarray] | None = None

    @staticmethod
    def wilcoxon() -> "ScoreFunction":
        """Signed-rank scores: average ranks of the nonzero magnitudes."""
        return ScoreFunction(kind="wilcoxon")

    @staticmethod
    def absolute_value() -> "ScoreFunction":
        """Identity scores; the statistic is a permutational t variant."""
        return ScoreFunction(kind="absolute_value")

    @staticmethod
    def custom(fn: Callable[[np.ndarray], np.ndarray], name: str = "custom") -> "ScoreFunction":
        return ScoreFunction(kind=name, fn=fn)

    def scores(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        if np.any(a < 0):
            raise ValueError("magnitudes must be nonnegative")
        if self.kind == "wilcoxon":
            q = np.zeros_like(a)
            nonzero = a > 0
            if nonzero.any():
                q[nonzero] = rankdata(a[nonzero], method="average")
            return q
        if self.kind == "absolute_value":
            return a.copy()
        if self.fn is None:
            raise ValueError(f"score function {self.kind!r} has no callable")
        q = np.asarray(self.fn(a), dtype=np.float64)
        if q.shape != a.shape:
            raise ValueError("custom score function changed the vector length")
        if np.any(q < 0):
            raise ValueError("custom scores must be nonnegative")
        if np.any(q[a == 0] != 0):
            raise ValueError("custom scores must vanish at zero magnitudes")
        return q


@dataclass(frozen=True)
class TestResult:
    """A test statistic with its p-value and bookkeeping.

    p_value is a float; under a sensitivity analysis it is the bound for
    the requested direction.  method records score kind, computation route,
    and any tilt, e.g. "wilcoxon:dp" or "wilcoxon:dp:gamma=1.25:upper".
    """

    statistic: float
    p_value: float
    sided: str
    method: str
    n_effective: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p_value must lie in [0, 1]")
        if self.sided not in SIDES:
            raise ValueError(f"sided must be one of {SIDES}")


@dataclass(frozen=True)
class EstimateResult:
    """A point estimate together with a confidence interval."""

    point: float
    interval: tuple[float, float]
    alpha: float
    method: str


def _check_sided(sided: str) -> None:
    if sided not in SIDES:
        raise ValueError(f"sided must be one of {SIDES}, got {sided!r}")


def _adjusted(d: np.ndarray, tau0: float, score: ScoreFunction) -> tuple[np.ndarray, np.ndarray]:
    """Signs and scores of d - tau0."""
    shifted = d - tau0
    s = np.sign(shifted)
    q = score.scores(np.abs(shifted))
    return s, q


def sign_score_statistic(quads: QuadrupleSet, tau0: float, score: ScoreFunction) -> float:
    """Positive-sign score sum of the adjusted contrasts d - tau0."""
    s, q = _adjusted(quads.d_values(), tau0, score)
    return float(q[s > 0].sum())


def _integer_scaled(q: np.ndarray) -> tuple[np.ndarray, int] | None:
    """Try to express the scores as small integers; returns (ints, scale)."""
    for scale in _INT_SCALES:
        x = q * scale
        r = np.round(x)
        if np.max(np.abs(x - r)) <= 1e-8:
            ints = r.astype(np.int64)
            if ints.sum() <= DP_MAX_TOTAL:
                return ints, scale
            return None
    return None


def _tail_pvalue(q_active: np.ndarray, t_obs: float, p_plus: float, greater: bool) -> tuple[float, str]:
    """One tail of the null distribution of the positive-sign score sum.

    Routes: exact DP over integer-scaled scores, exhaustive enumeration for
    small n, else a normal approximation without continuity correction.
    """
    n = q_active.size
    scaled = _integer_scaled(q_active)
    if scaled is not None:
        ints, scale = scaled
        pmf = kernels.signflip_pmf(ints, p_plus)
        if greater:
            k = int(np.ceil(t_obs * scale - 1e-9))
            p = float(pmf[max(k, 0):].sum())
        else:
            k = int(np.floor(t_obs * scale + 1e-9))
            p = float(pmf[: min(k, len(pmf) - 1) + 1].sum()) if k >= 0 else 0.0
        return min(p, 1.0), "dp"
    if n <= ENUM_MAX_N:
        idx = np.arange(2**n, dtype=np.int64)
        bits = (idx[:, None] >> np.arange(n)) & 1
        vals = bits @ q_active
        k = bits.sum(axis=1)
        probs = p_plus**k * (1.0 - p_plus) ** (n - k)
        if greater:
            p = float(probs[vals >= t_obs - 1e-9].sum())
        else:
            p = float(probs[vals <= t_obs + 1e-9].sum())
        return min(p, 1.0), "enumeration"
    total = q_active.sum()
    mu = p_plus * total
    sigma = np.sqrt(p_plus * (1.0 - p_plus) * np.square(q_active).sum())
    z = (t_obs - mu) / sigma
    p = float(norm.sf(z)) if greater else float(norm.cdf(z))
    return p, "normal"


def _signscore_pvalue(
    d: np.ndarray,
    tau0: float,
    score: ScoreFunction,
    p_greater_tail: float,
    p_less_tail: float,
    sided: str,
) -> tuple[float, float, str, int]:
    """Shared p-value engine.

    p_greater_tail / p_less_tail are the sign probabilities used for the
    upper and lower tails (they differ only under a sensitivity tilt; both
    are 0.5 for the randomization test).  Returns (statistic, p, route,
    n_effective).
    """
    _check_sided(sided)
    s, q = _adjusted(d, tau0, score)
    t_obs = float(q[s > 0].sum())
    q_active = q[q > 0]
    if q_active.size == 0:
        raise DegenerateDataError("all adjusted contrasts are zero; no sign information")
    if sided == "one_sided_greater":
        p, route = _tail_pvalue(q_active, t_obs, p_greater_tail, greater=True)
    elif sided == "one_sided_less":
        p, route = _tail_pvalue(q_active, t_obs, p_less_tail, greater=False)
    else:
        p_g, route = _tail_pvalue(q_active, t_obs, p_greater_tail, greater=True)
        p_l, _ = _tail_pvalue(q_active, t_obs, p_less_tail, greater=False)
        p = min(1.0, 2.0 * min(p_g, p_l))
    return t_obs, p, route, int(q_active.size)


def randomization_pvalue(
    quads: QuadrupleSet,
    tau0: float = 0.0,
    score: ScoreFunction | None = None,
    sided: str = "one_sided_greater",
) -> TestResult:
    """Exact randomization test of the constant-shift null d ~ tau0 + symmetric.

    Parameters
    ----------
    quads : QuadrupleSet
    tau0 : float
        Hypothesized constant effect.
    score : ScoreFunction
        Defaults to signed-rank scores.
    sided : str
        "one_sided_greater", "one_sided_less", or "two_sided"
        (two-sided doubles the smaller tail and caps at 1).
    """
    score = score or ScoreFunction.wilcoxon()
    t_obs, p, route, n_eff = _signscore_pvalue(quads.d_values(), tau0, score, 0.5, 0.5, sided)
    return TestResult(
        statistic=t_obs,
        p_value=p,
        sided=sided,
        method=f"{score.kind}:{route}",
        n_effective=n_eff,
    )


def hodges_lehmann(quads: QuadrupleSet) -> float:
    """Median of the pairwise Walsh averages (d_i + d_j)/2, i <= j."""
    d = quads.d_values()
    if d.size == 0:
        raise DegenerateDataError("no quadruples")
    i, j = np.triu_indices(d.size)
    return float(np.median((d[i] + d[j]) / 2.0))


def _bisect_boundary(predicate, lo: float, hi: float, tol: float) -> float:
    """Boundary of a monotone predicate: False at lo, True at hi."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def invert_ci(
    quads: QuadrupleSet,
    alpha: float = 0.05,
    score: ScoreFunction | None = None,
    tol: float = 1e-6,
) -> tuple[float, float]:
    """Confidence interval by inverting the two-sided randomization test.

    Returns the set {tau : two-sided p-value at tau > alpha} as an
    interval, endpoints located by bisection to `tol`.  Endpoints are
    +/-inf when even extreme shifts are not rejected (tiny samples).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    score = score or ScoreFunction.wilcoxon()
    d = quads.d_values()

    def p_two(tau: float) -> float:
        # A shift that zeroes every contrast is maximally compatible.
        try:
            return _signscore_pvalue(d, tau, score, 0.5, 0.5, "two_sided")[1]
        except DegenerateDataError:
            return 1.0

    span = float(d.max() - d.min()) + 1.0
    lo0 = float(d.min()) - span
    hi0 = float(d.max()) + span
    center = hodges_lehmann(quads)
    lower = -np.inf if p_two(lo0) > alpha else _bisect_boundary(lambda t: p_two(t) > alpha, lo0, center, tol)
    upper = np.inf if p_two(hi0) > alpha else -_bisect_boundary(lambda t: p_two(-t) > alpha, -hi0, -center, tol)
    return (lower, upper)


def point_and_interval(
    quads: QuadrupleSet,
    alpha: float = 0.05,
    score: ScoreFunction | None = None,
) -> EstimateResult:
    """Convenience bundle: Hodges-Lehmann point plus inverted-test interval."""
    score = score or ScoreFunction.wilcoxon()
    return EstimateResult(
        point=hodges_lehmann(quads),
        interval=invert_ci(quads, alpha=alpha, score=score),
        alpha=alpha,
        method=f"hodges_lehmann+invert_ci:{score.kind}",
    )
