import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from didsens.errors import DegenerateDataError
from didsens.inference import (
    ScoreFunction,
    hodges_lehmann,
    invert_ci,
    point_and_interval,
    randomization_pvalue,
    sign_score_statistic,
)
from didsens.oracles import exact_null_distribution

from conftest import quadset_from_d


# scores() receives magnitudes |d - tau0|; zeros mark dropped quadruples


def test_wilcoxon_scores_average_tied_ranks():
    score = ScoreFunction.wilcoxon()
    q = score.scores(np.array([1.0, 1.0, 2.0]))
    assert q.tolist() == [1.5, 1.5, 3.0]


def test_wilcoxon_scores_drop_zeros():
    score = ScoreFunction.wilcoxon()
    q = score.scores(np.array([0.0, 3.0, 1.0]))
    assert q.tolist() == [0.0, 2.0, 1.0]


def test_absolute_value_scores_are_magnitudes():
    score = ScoreFunction.absolute_value()
    assert score.scores(np.array([2.0, 0.5, 0.0])).tolist() == [2.0, 0.5, 0.0]


def test_custom_score_validation():
    bad = ScoreFunction.custom(lambda a: a - 10.0, name="shifted")
    with pytest.raises(ValueError, match="nonnegative"):
        bad.scores(np.array([1.0, 2.0]))
    lazy = ScoreFunction.custom(lambda a: np.ones_like(a), name="flat")
    with pytest.raises(ValueError, match="zero magnitude"):
        lazy.scores(np.array([0.0, 1.0]))


def test_statistic_sums_scores_of_positive_contrasts():
    qs = quadset_from_d([3.0, -1.0, 2.0])
    t = sign_score_statistic(qs, tau0=0.0, score=ScoreFunction.wilcoxon())
    assert t == 3.0 + 2.0  # ranks of |3| and |2| among (1, 2, 3)
    # shifted contrasts (0.5, -3.5, -0.5): magnitudes tie at 0.5 -> ranks 1.5
    t0 = sign_score_statistic(qs, tau0=2.5, score=ScoreFunction.wilcoxon())
    assert t0 == 1.5


def test_all_positive_smallest_tail():
    qs = quadset_from_d([3.0, 1.0, 2.0])
    res = randomization_pvalue(qs)
    assert res.statistic == 6.0
    assert res.p_value == pytest.approx(1.0 / 8.0, abs=1e-15)
    assert res.method.startswith("wilcoxon:")
    assert res.n_effective == 3


def test_single_quadruple_half():
    res = randomization_pvalue(quadset_from_d([1.0]))
    assert res.p_value == pytest.approx(0.5, abs=1e-15)


def test_two_sided_with_perfect_tie():
    res = randomization_pvalue(quadset_from_d([2.0, -2.0]), sided="two_sided")
    assert res.p_value == 1.0


def test_zero_contrasts_are_uninformative():
    res = randomization_pvalue(quadset_from_d([0.0, 3.0, 1.0, 2.0]))
    assert res.n_effective == 3
    assert res.p_value == pytest.approx(1.0 / 8.0, abs=1e-15)
    with pytest.raises(DegenerateDataError):
        randomization_pvalue(quadset_from_d([0.0, 0.0]))


def test_dp_agrees_with_enumeration_all_tails():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(2, 12))
        d = np.round(rng.normal(0.0, 2.0, n), 1)
        if np.all(np.abs(d) < 1e-12):
            continue
        qs = quadset_from_d(d.tolist())
        for score in (ScoreFunction.wilcoxon(), ScoreFunction.absolute_value()):
            q = score.scores(np.abs(d))
            active = q[np.abs(d) > 0]
            t = float(np.sum(q[d > 0]))
            dist = exact_null_distribution(active, 0.5)
            res_g = randomization_pvalue(qs, score=score, sided="one_sided_greater")
            res_l = randomization_pvalue(qs, score=score, sided="one_sided_less")
            res_2 = randomization_pvalue(qs, score=score, sided="two_sided")
            assert res_g.p_value == pytest.approx(dist.tail_geq(t), abs=1e-12)
            assert res_l.p_value == pytest.approx(dist.tail_leq(t), abs=1e-12)
            expect2 = min(1.0, 2.0 * min(dist.tail_geq(t), dist.tail_leq(t)))
            assert res_2.p_value == pytest.approx(expect2, abs=1e-12)


def test_integer_rescaling_handles_half_ranks():
    # tied magnitudes produce .5 ranks; the integer route must still apply
    qs = quadset_from_d([1.0, -1.0, 2.0, 3.0])
    res = randomization_pvalue(qs)
    assert res.method == "wilcoxon:dp"


def test_irrational_scores_fall_back_to_enumeration():
    d = [math.sqrt(2.0), -math.pi / 3.0, math.e / 2.0]
    res = randomization_pvalue(quadset_from_d(d), score=ScoreFunction.absolute_value())
    assert res.method == "absolute_value:enumeration"
    q = np.abs(d)
    t = q[0] + q[2]
    dist = exact_null_distribution(q, 0.5)
    assert res.p_value == pytest.approx(dist.tail_geq(t), abs=1e-12)


def test_large_irrational_scores_use_normal_approximation():
    rng = np.random.default_rng(5)
    d = (rng.normal(0.3, 1.0, 60) + rng.uniform(0, 1e-9, 60)).tolist()
    res = randomization_pvalue(quadset_from_d(d), score=ScoreFunction.absolute_value())
    assert res.method == "absolute_value:normal"
    q = np.abs(d)
    t = float(np.sum(q[np.array(d) > 0]))
    mu = 0.5 * q.sum()
    sd = math.sqrt(0.25 * np.sum(q**2))
    from scipy.stats import norm

    assert res.p_value == pytest.approx(norm.sf((t - mu) / sd), abs=1e-12)


def test_hodges_lehmann_walsh_median():
    assert hodges_lehmann(quadset_from_d([1.0, 3.0])) == 2.0
    # walsh averages of (1, 2, 4): 1, 1.5, 2, 2.5, 3, 4 -> median 2.25
    assert hodges_lehmann(quadset_from_d([1.0, 2.0, 4.0])) == 2.25
    assert hodges_lehmann(quadset_from_d([5.0])) == 5.0


def test_ci_brackets_by_exhaustive_probe():
    rng = np.random.default_rng(9)
    d = np.round(rng.normal(1.0, 1.5, 9), 2).tolist()
    qs = quadset_from_d(d)
    lo, hi = invert_ci(qs, alpha=0.10)
    assert lo < hi

    def p_two(tau):
        return randomization_pvalue(qs, tau0=tau, sided="two_sided").p_value

    # interval endpoints split accept (p > alpha) from reject
    assert p_two(lo + 1e-4) > 0.10
    assert p_two(hi - 1e-4) > 0.10
    assert p_two(lo - 0.05) <= 0.10 or lo < min(d)
    assert p_two(hi + 0.05) <= 0.10 or hi > max(d)
    point = hodges_lehmann(qs)
    assert lo <= point <= hi


def test_ci_unbounded_when_too_few_quadruples():
    lo, hi = invert_ci(quadset_from_d([1.0, 2.0]), alpha=0.05)
    assert lo == -math.inf
    assert hi == math.inf


def test_point_and_interval_bundle():
    qs = quadset_from_d([1.0, 2.0, 4.0, 0.5, 3.0, 2.5, 1.5])
    est = point_and_interval(qs, alpha=0.05)
    assert est.point == hodges_lehmann(qs)
    assert est.interval[0] <= est.point <= est.interval[1]
    assert est.alpha == 0.05


_grid = st.integers(min_value=-50000, max_value=50000).map(lambda k: k / 1000.0)


@settings(max_examples=40, deadline=None)
@given(
    d=st.lists(_grid, min_size=3, max_size=10, unique=True),
    shift=st.integers(min_value=-20000, max_value=20000).map(lambda k: k / 1000.0),
)
def test_shift_equivariance(d, shift):
    # well-separated adjusted magnitudes keep sign and rank structure
    # stable under the shift despite float rounding
    mags = sorted(abs(x - 1.0) for x in d)
    assume(mags[0] > 1e-3)
    assume(all(b - a > 1e-3 for a, b in zip(mags, mags[1:])))
    qs = quadset_from_d(d)
    moved = quadset_from_d([x + shift for x in d])
    assert hodges_lehmann(moved) == pytest.approx(hodges_lehmann(qs) + shift, abs=1e-9)
    p_base = randomization_pvalue(qs, tau0=1.0).p_value
    p_moved = randomization_pvalue(moved, tau0=1.0 + shift).p_value
    assert p_moved == pytest.approx(p_base, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(d=st.lists(_grid.filter(lambda x: abs(x) > 1e-3), min_size=2, max_size=10))
def test_negation_swaps_tails(d):
    # sign flips are exact in floats, so tie structure is preserved
    qs = quadset_from_d(d)
    neg = quadset_from_d([-x for x in d])
    pg = randomization_pvalue(qs, sided="one_sided_greater").p_value
    pl = randomization_pvalue(neg, sided="one_sided_less").p_value
    assert pg == pytest.approx(pl, abs=1e-12)
