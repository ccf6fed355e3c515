import math

import numpy as np
import pytest

from didsens.binary import eligibility_report, eligible_quadruples, mcnemar_statistic
from didsens.errors import StructuralError
from didsens.simulate import (
    AnalysisPlan,
    BinaryDesign,
    ContinuousDesign,
    generate_binary,
    generate_continuous,
    level_power_study,
    quadruples_from_records,
)


def test_generators_are_reproducible_bit_for_bit():
    c = ContinuousDesign(n_quadruples=40, tau=1.0)
    assert generate_continuous(c, seed=5) == generate_continuous(c, seed=5)
    b = BinaryDesign(n_quadruples=40)
    assert generate_binary(b, seed=5) == generate_binary(b, seed=5)
    assert generate_continuous(c, seed=5) != generate_continuous(c, seed=6)


def test_record_structure_round_trips():
    design = ContinuousDesign(n_quadruples=25, tau=0.5)
    records = generate_continuous(design, seed=2)
    assert len(records) == 100
    quads = quadruples_from_records(records)
    assert len(quads) == 25
    assert quads.outcome_kind == "continuous"
    for q in quads:
        assert q.pre.treated.period == 1 and q.post.treated.period == 2


def test_unit_effects_cancel_in_the_contrast():
    # huge unit, role, and period effects must vanish from d exactly
    design = ContinuousDesign(n_quadruples=10_000, mu_sd=50.0, alpha_sd=50.0, beta_sd=50.0)
    quads = quadruples_from_records(generate_continuous(design, seed=11))
    d = quads.d_values()
    assert abs(d.mean()) < 4.5 * 2.0 / math.sqrt(d.size)
    assert d.std() < 4.0


def test_constant_effect_shifts_the_contrast_mean():
    design = ContinuousDesign(n_quadruples=4000, tau=2.0, residual_scale=0.5)
    quads = quadruples_from_records(generate_continuous(design, seed=3))
    assert quads.d_values().mean() == pytest.approx(2.0, abs=0.08)


def test_latent_tilt_biases_the_sign():
    # with both tilts on, assignment and noise sign correlate through u
    design = ContinuousDesign(n_quadruples=3000, lambda2=5.0, delta2=5.0)
    quads = quadruples_from_records(generate_continuous(design, seed=7))
    assert np.sign(quads.d_values()).mean() > 0.3
    # with tilts off the sign is symmetric
    null = ContinuousDesign(n_quadruples=3000)
    quads0 = quadruples_from_records(generate_continuous(null, seed=7))
    assert abs(np.sign(quads0.d_values()).mean()) < 0.06


def test_design_validation():
    with pytest.raises(ValueError):
        ContinuousDesign(n_quadruples=0)
    with pytest.raises(ValueError):
        ContinuousDesign(n_quadruples=5, residual="cauchy")
    with pytest.raises(ValueError):
        ContinuousDesign(n_quadruples=5, u_dist="beta")
    with pytest.raises(ValueError):
        BinaryDesign(n_quadruples=5, u_dist="beta")


def test_binary_flat_design_rates():
    design = BinaryDesign(n_quadruples=4000, mu_sd=0.0, alpha_sd=0.0, beta_sd=0.0)
    records = generate_binary(design, seed=13)
    outcomes = np.array([r.outcome for r in records])
    assert set(outcomes.tolist()) <= {0.0, 1.0}
    assert outcomes.mean() == pytest.approx(0.5, abs=0.02)
    quads = quadruples_from_records(records, outcome_kind="binary")
    rep = eligibility_report(quads)
    assert rep.n_total == 4000
    assert len(rep.eligible) / 4000 == pytest.approx(1.0 / 8.0, abs=0.02)


def test_binary_rare_events_starve_eligibility():
    design = BinaryDesign(n_quadruples=800, mu_mean=-8.0, mu_sd=0.5)
    quads = quadruples_from_records(generate_binary(design, seed=1), outcome_kind="binary")
    assert len(eligible_quadruples(quads)) < 40


def test_binary_positive_effect_raises_the_statistic():
    design = BinaryDesign(n_quadruples=3000, tau_logit=1.5, mu_sd=0.0, alpha_sd=0.0, beta_sd=0.0)
    quads = quadruples_from_records(generate_binary(design, seed=9), outcome_kind="binary")
    els = eligible_quadruples(quads)
    assert mcnemar_statistic(els) > 0.6 * len(els)


def test_level_power_study_rows_and_summary():
    design = ContinuousDesign(n_quadruples=30, tau=1.0, residual_scale=0.8)
    plan = AnalysisPlan(
        test="signed_rank",
        compute_hl=True,
        estimate_gamma=1.2,
        compute_changepoint=True,
    )
    res = level_power_study(design, plan, reps=8, seed=3)
    assert len(res.rows) == 8
    for r, row in enumerate(res.rows):
        assert row["rep"] == r
        assert 0.0 <= row["p_value"] <= 1.0
        assert row["reject"] in (0, 1)
        assert row["bound_lower"] <= row["bound_upper"]
        assert row["covered"] in (0, 1)
        assert "hl" in row and "changepoint" in row
    s = res.summary
    assert s["reps"] == 8
    rate = s["rejection_rate"]
    assert s["mc_se"] == pytest.approx(math.sqrt(rate * (1 - rate) / 8))
    assert {"mean_p", "hl_mean", "hl_rmse", "coverage_rate", "changepoint_median"} <= set(s)


def test_level_power_study_is_deterministic():
    design = ContinuousDesign(n_quadruples=20)
    plan = AnalysisPlan(test="sate")
    a = level_power_study(design, plan, reps=5, seed=42)
    b = level_power_study(design, plan, reps=5, seed=42)
    assert a == b


def test_mcnemar_budget_pins_the_effective_size():
    design = BinaryDesign(n_quadruples=400, mu_sd=0.0, alpha_sd=0.0, beta_sd=0.0)
    plan = AnalysisPlan(test="mcnemar", mcnemar_budget=20)
    res = level_power_study(design, plan, reps=6, seed=8)
    assert all(row["n_effective"] == 20 for row in res.rows)


def test_plan_and_study_validation():
    with pytest.raises(ValueError):
        AnalysisPlan(test="t_test")
    with pytest.raises(ValueError):
        AnalysisPlan(alpha=0.0)
    with pytest.raises(ValueError):
        AnalysisPlan(mcnemar_budget=0)
    with pytest.raises(ValueError):
        level_power_study(ContinuousDesign(n_quadruples=5), AnalysisPlan(), reps=0)


def test_quadruples_from_records_structural_errors():
    records = generate_continuous(ContinuousDesign(n_quadruples=3), seed=4)
    with pytest.raises(StructuralError, match="3 records"):
        quadruples_from_records(records[:-1])
    broken = [
        r if not r.id.startswith("q00000-p1") else type(r)(
            id=r.id, period=r.period, z=1, outcome=r.outcome, covariates=r.covariates
        )
        for r in records
    ]
    with pytest.raises(StructuralError, match="treated-control"):
        quadruples_from_records(broken)
