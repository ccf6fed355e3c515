"""Sensitivity analysis for matched difference-in-differences designs.

Two routes are provided.  The two-parameter route caps the assignment-side
and outcome-side influence of an unobserved covariate separately (lam and
delta, both >= 1 on the odds scale) and yields sharp bounds on the
probability that a quadruple's signed contrast is positive.  The
one-parameter route caps a single sign-probability odds at gamma^2, so the
classical paired worst-case machinery applies with gamma^2 in place of
gamma.  Amplification maps translate a one-parameter cap into the frontier
of two-parameter explanations with the same worst case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .core import QuadrupleSet
from .errors import DegenerateDataError
from .inference import (
    ScoreFunction,
    TestResult,
    _bisect_boundary,
    _signscore_pvalue,
    hodges_lehmann,
)
from .oracles import brute_force_bound

DIRECTIONS = ("upper", "lower")


def _check_direction(direction: str) -> None:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


@dataclass(frozen=True)
class SignProbabilityBounds:
    """Sharp bounds on P(positive signed contrast) for one quadruple."""

    lower: float
    upper: float
    lam: float
    delta: float
    aligned: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise ValueError("bounds must satisfy 0 <= lower <= upper <= 1")


def two_param_bounds(lam: float, delta: float, aligned: bool = False) -> SignProbabilityBounds:
    """Sharp sign-probability bounds under separate caps lam and delta.

    Closed forms:
        lower = (delta^2 + lam^2) / ((1 + lam^2) (1 + delta^2))
        upper = ((lam delta)^2 + 1) / ((1 + lam^2) (1 + delta^2))
    which satisfy lower + upper = 1.  With aligned=True the caps are
    restricted to configurations whose per-period coefficients share a
    sign; that tighter bound has no closed form and is computed by the
    brute-force grid optimizer.
    """
    if lam < 1 or delta < 1:
        raise ValueError("lam and delta must be >= 1")
    if aligned:
        lo = brute_force_bound(lam, delta, objective="min", aligned=True).value
        hi = brute_force_bound(lam, delta, objective="max", aligned=True).value
        return SignProbabilityBounds(lower=lo, upper=hi, lam=lam, delta=delta, aligned=True)
    l2 = lam * lam
    d2 = delta * delta
    denom = (1.0 + l2) * (1.0 + d2)
    return SignProbabilityBounds(
        lower=(d2 + l2) / denom,
        upper=(l2 * d2 + 1.0) / denom,
        lam=lam,
        delta=delta,
    )


def one_param_bounds(gamma: float) -> tuple[float, float]:
    """Sign-probability bounds under the single cap: odds at most gamma^2."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    g2 = gamma * gamma
    return (1.0 / (1.0 + g2), g2 / (1.0 + g2))


def did_gamma_from(lam: float, delta: float) -> float:
    """One-parameter cap whose worst case equals the two-parameter one.

    gamma^2 = (lam^2 delta^2 + 1) / (lam^2 + delta^2).
    """
    if lam < 1 or delta < 1:
        raise ValueError("lam and delta must be >= 1")
    l2 = lam * lam
    d2 = delta * delta
    return math.sqrt((l2 * d2 + 1.0) / (l2 + d2))


def paired_gamma_from(lam: float, delta: float) -> float:
    """Classical single-period correspondence: gamma = (lam delta + 1) / (lam + delta)."""
    if lam < 1 or delta < 1:
        raise ValueError("lam and delta must be >= 1")
    return (lam * delta + 1.0) / (lam + delta)


def amplify_did(gamma: float, lam: float) -> float:
    """Outcome-side cap delta matching (gamma, lam) in this design.

    Inverts gamma^2 = (lam^2 delta^2 + 1)/(lam^2 + delta^2):
        delta = sqrt((gamma^2 lam^2 - 1) / (lam^2 - gamma^2)).
    Requires lam > gamma (the curve has a vertical asymptote at lam =
    gamma: no finite outcome-side cap suffices at or below it).
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    if lam < 1:
        raise ValueError("lam must be >= 1")
    if gamma == 1.0:
        return 1.0
    if lam <= gamma:
        raise ValueError(
            f"amplification needs lam > gamma (asymptote at lam = gamma): got lam={lam}, gamma={gamma}"
        )
    g2 = gamma * gamma
    l2 = lam * lam
    return math.sqrt((g2 * l2 - 1.0) / (l2 - g2))


def amplify_paired(gamma: float, lam: float) -> float:
    """Classical single-period amplification: delta = (gamma lam - 1)/(lam - gamma)."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    if lam < 1:
        raise ValueError("lam must be >= 1")
    if gamma == 1.0:
        return 1.0
    if lam <= gamma:
        raise ValueError(
            f"amplification needs lam > gamma (asymptote at lam = gamma): got lam={lam}, gamma={gamma}"
        )
    return (gamma * lam - 1.0) / (lam - gamma)


def worst_case_pvalue(
    quads: QuadrupleSet,
    tau0: float = 0.0,
    score: ScoreFunction | None = None,
    gamma: float = 1.0,
    direction: str = "upper",
    sided: str = "one_sided_greater",
) -> TestResult:
    """Bound on the sign-score p-value when sign odds may reach gamma^2.

    direction="upper" gives the worst case (the reportable bound);
    "lower" the best case.  At gamma=1 both reduce to the randomization
    test, through the identical code path.  Two-sided upper bounds combine
    the two one-sided worst cases (conservative); two-sided lower bounds
    are exact.
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    _check_direction(direction)
    score = score or ScoreFunction.wilcoxon()
    p_lo, p_hi = one_param_bounds(gamma)
    if direction == "upper":
        # Worst case per tail: the greater tail is largest at the largest
        # sign probability, the less tail at the smallest.
        p_greater_tail, p_less_tail = p_hi, p_lo
    else:
        p_greater_tail, p_less_tail = p_lo, p_hi
    t_obs, p, route, n_eff = _signscore_pvalue(
        quads.d_values(), tau0, score, p_greater_tail, p_less_tail, sided
    )
    return TestResult(
        statistic=t_obs,
        p_value=p,
        sided=sided,
        method=f"{score.kind}:{route}:gamma={gamma:g}:{direction}",
        n_effective=n_eff,
    )


def changepoint_gamma(
    quads: QuadrupleSet,
    tau0: float = 0.0,
    score: ScoreFunction | None = None,
    alpha: float = 0.05,
    sided: str = "one_sided_greater",
    tol: float = 1e-4,
) -> float | None:
    """Largest gamma at which the worst-case p-value still meets alpha.

    Returns None when the test already fails at gamma = 1 (there is no
    significance to lose).  Binary-outcome sets route through the exact
    binomial machinery.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if quads.outcome_kind == "binary":
        if tau0 != 0.0:
            raise ValueError("binary designs test the sharp null; tau0 must be 0")
        from .binary import eligible_quadruples, mcnemar_sensitivity_pvalue

        eligible = eligible_quadruples(quads)

        def pval(g: float) -> float:
            return mcnemar_sensitivity_pvalue(eligible, gamma=g, direction="upper", sided=sided).p_value

    else:

        def pval(g: float) -> float:
            return worst_case_pvalue(quads, tau0, score, g, "upper", sided).p_value

    if pval(1.0) > alpha:
        return None
    lo, hi = 1.0, 2.0
    while pval(hi) <= alpha:
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pval(mid) <= alpha:
            lo = mid
        else:
            hi = mid
    return lo


def _solve_score_equation(d: np.ndarray, score: ScoreFunction, p_target: float, tol: float) -> float:
    """Solve T(tau) = p_target * (total score at tau) for tau.

    T(tau) is a nonincreasing step function; the solution set is an
    interval and its midpoint is returned (the Walsh-median convention at
    p_target = 1/2).
    """

    def gap(tau: float) -> float:
        s, q = np.sign(d - tau), score.scores(np.abs(d - tau))
        total = q.sum()
        if total == 0:
            return 0.0
        return float(q[s > 0].sum() - p_target * total)

    span = float(d.max() - d.min()) + 1.0
    lo0 = float(d.min()) - span
    hi0 = float(d.max()) + span
    b_hi = _bisect_boundary(lambda t: gap(t) <= 0, lo0, hi0, tol)
    b_lo = _bisect_boundary(lambda t: gap(t) < 0, lo0, hi0, tol)
    return 0.5 * (b_lo + b_hi)


def estimate_bounds(
    quads: QuadrupleSet,
    gamma: float = 1.0,
    score: ScoreFunction | None = None,
    tol: float = 1e-6,
) -> tuple[float, float]:
    """Range of score-equation estimates compatible with sign odds gamma^2.

    tau_min solves the score equation against the most positive-leaning
    null expectation, tau_max against the most negative-leaning one.  At
    gamma = 1 both collapse to the Hodges-Lehmann point (up to bisection
    tolerance).
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    score = score or ScoreFunction.wilcoxon()
    d = quads.d_values()
    if d.size == 0:
        raise DegenerateDataError("no quadruples")
    p_lo, p_hi = one_param_bounds(gamma)
    tau_min = _solve_score_equation(d, score, p_hi, tol)
    tau_max = _solve_score_equation(d, score, p_lo, tol)
    return (min(tau_min, tau_max), max(tau_min, tau_max))


def _deviate(w_sum: float, w_sqsum: float, n: int) -> float:
    """Studentized mean from running sums; +/-inf conventions at zero spread."""
    mean = w_sum / n
    var = (w_sqsum - n * mean * mean) / (n - 1)
    if var <= 0:
        if mean > 0:
            return math.inf
        if mean < 0:
            return -math.inf
        return 0.0
    return mean / math.sqrt(var / n)


def _extreme_deviate(lo: np.ndarray, hi: np.ndarray, minimize: bool) -> float:
    """Extremize the studentized mean over a box, coordinates at endpoints.

    The extremum over the rectangle is attained at a vertex; candidate
    vertices are the prefix/suffix assignments in the sorted coordinate
    order, scanned exhaustively.
    """
    if not minimize:
        return -_extreme_deviate(-hi, -lo, minimize=True)
    n = lo.size
    order = np.argsort(hi)
    lo_s, hi_s = lo[order], hi[order]
    best = math.inf
    # Suffix family: top-k coordinates (largest hi) at the upper endpoint.
    lo_cum_fwd = np.concatenate([[0.0], np.cumsum(lo_s)])
    lo2_cum_fwd = np.concatenate([[0.0], np.cumsum(lo_s**2)])
    hi_cum_rev = np.concatenate([[0.0], np.cumsum(hi_s[::-1])])
    hi2_cum_rev = np.concatenate([[0.0], np.cumsum(hi_s[::-1] ** 2)])
    for k in range(n + 1):
        w_sum = lo_cum_fwd[n - k] + hi_cum_rev[k]
        w_sq = lo2_cum_fwd[n - k] + hi2_cum_rev[k]
        best = min(best, _deviate(w_sum, w_sq, n))
    # Prefix family: bottom-k coordinates at the upper endpoint (covers the
    # negative-mean regime of the optimality condition).
    hi_cum_fwd = np.concatenate([[0.0], np.cumsum(hi_s)])
    hi2_cum_fwd = np.concatenate([[0.0], np.cumsum(hi_s**2)])
    lo_cum_rev = np.concatenate([[0.0], np.cumsum(lo_s[::-1])])
    lo2_cum_rev = np.concatenate([[0.0], np.cumsum(lo_s[::-1] ** 2)])
    for k in range(n + 1):
        w_sum = hi_cum_fwd[k] + lo_cum_rev[n - k]
        w_sq = hi2_cum_fwd[k] + lo2_cum_rev[n - k]
        best = min(best, _deviate(w_sum, w_sq, n))
    return best


def _sate_upper_tail(a: np.ndarray, kappa: float, direction: str) -> float:
    """Bound on P(deviate as large as observed) for the greater alternative."""
    if kappa == 0.0:
        # degenerate box: evaluate the single vertex directly so both
        # directions share one rounding path and collapse exactly
        dev = _deviate(float(a.sum()), float((a * a).sum()), int(a.size))
    else:
        lo = a - kappa * np.abs(a)
        hi = a + kappa * np.abs(a)
        dev = _extreme_deviate(lo, hi, minimize=(direction == "upper"))
    return float(norm.sf(dev))


def sate_pvalue(
    quads: QuadrupleSet,
    tau0: float = 0.0,
    gamma: float = 1.0,
    direction: str = "upper",
    sided: str = "one_sided_greater",
) -> TestResult:
    """Sensitivity bound for the sample-average effect, studentized.

    Tests H0: average effect = tau0 allowing effect heterogeneity.  The
    worst-case null expectation of each adjusted contrast lies in a box of
    halfwidth kappa |d_i - tau0| with kappa = (gamma^2 - 1)/(gamma^2 + 1);
    the studentized deviate is extremized over the box and referred to a
    normal reference.  At gamma = 1 this is the z-test on the contrast
    mean.
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    _check_direction(direction)
    if sided not in ("one_sided_greater", "one_sided_less", "two_sided"):
        raise ValueError(f"invalid sided {sided!r}")
    a = quads.d_values() - tau0
    if a.size < 2:
        raise DegenerateDataError("the studentized procedure needs at least 2 quadruples")
    g2 = gamma * gamma
    kappa = (g2 - 1.0) / (g2 + 1.0)
    if sided == "one_sided_greater":
        p = _sate_upper_tail(a, kappa, direction)
    elif sided == "one_sided_less":
        p = _sate_upper_tail(-a, kappa, direction)
    else:
        p = min(1.0, 2.0 * min(_sate_upper_tail(a, kappa, direction), _sate_upper_tail(-a, kappa, direction)))
    statistic = float(a.mean() / (a.std(ddof=1) / math.sqrt(a.size))) if a.std(ddof=1) > 0 else 0.0
    return TestResult(
        statistic=statistic,
        p_value=p,
        sided=sided,
        method=f"sate:normal:gamma={gamma:g}:{direction}",
        n_effective=int(a.size),
    )
