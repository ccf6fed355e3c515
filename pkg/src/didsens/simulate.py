"""Synthetic data generators and Monte Carlo study driver.

Both generators build quadruples from a latent two-period model with unit
fixed effects, a common period shift, and an unobserved binary trait per
unit whose assignment-side and outcome-side influence is controlled by
log-odds coefficients (lambda1, lambda2 and delta1, delta2).  With all
four coefficients at zero the designs are randomized: signs are fair
coins and the worst-case tests reduce to their nominal levels.

The continuous generator works on the observed scale.  Fixed effects and
period shifts cancel exactly in the contrast; what remains is the
treatment effect plus a residual contrast whose sign the hidden trait may
tilt.  The generator draws that latent contrast, retilts only its sign,
and reconstructs one post-period residual so the emitted records remain
ordinary unit records.  The binary generator needs no such device: the
hidden trait sits directly in the outcome logit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .binary import eligible_quadruples, mcnemar_sensitivity_pvalue
from .core import MatchedPair, QuadrupleSet, UnitRecord, build_quadruple
from .errors import StructuralError
from .inference import ScoreFunction, hodges_lehmann
from .sensitivity import estimate_bounds, changepoint_gamma, sate_pvalue, worst_case_pvalue

RESIDUALS = ("normal", "lognormal")
U_DISTS = ("bernoulli", "uniform")


@dataclass(frozen=True)
class ContinuousDesign:
    """Continuous-outcome generator configuration.

    tau is the constant treatment effect; tau_heterogeneity_sd adds
    unit-level normal noise around it.  residual selects the unit noise
    law ("lognormal" gives a long right tail).  u_dist draws the hidden
    trait at the {0,1} corners ("bernoulli") or uniformly in [0,1].
    """

    n_quadruples: int
    tau: float = 0.0
    tau_heterogeneity_sd: float = 0.0
    mu_sd: float = 1.0
    alpha_sd: float = 1.0
    beta_sd: float = 1.0
    residual: str = "normal"
    residual_scale: float = 1.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    u_dist: str = "bernoulli"

    def __post_init__(self) -> None:
        if self.n_quadruples < 1:
            raise ValueError("n_quadruples must be >= 1")
        if self.residual not in RESIDUALS:
            raise ValueError(f"residual must be one of {RESIDUALS}")
        if self.u_dist not in U_DISTS:
            raise ValueError(f"u_dist must be one of {U_DISTS}")


@dataclass(frozen=True)
class BinaryDesign:
    """Binary-outcome generator configuration.

    Outcomes are Bernoulli draws from a logit with unit effects, a period
    shift, the hidden trait scaled by delta1/delta2, and tau_logit added
    for treated period-2 units.  mu_mean shifts the base rate (large
    negative values produce rare events and few informative quadruples).
    """

    n_quadruples: int
    tau_logit: float = 0.0
    mu_mean: float = 0.0
    mu_sd: float = 1.0
    alpha_sd: float = 0.5
    beta_sd: float = 0.5
    lambda1: float = 0.0
    lambda2: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    u_dist: str = "bernoulli"

    def __post_init__(self) -> None:
        if self.n_quadruples < 1:
            raise ValueError("n_quadruples must be >= 1")
        if self.u_dist not in U_DISTS:
            raise ValueError(f"u_dist must be one of {U_DISTS}")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _draw_u(rng: np.random.Generator, dist: str, shape) -> np.ndarray:
    if dist == "bernoulli":
        return rng.integers(0, 2, size=shape).astype(np.float64)
    return rng.random(shape)


def _draw_assignment(
    rng: np.random.Generator, design, du1: np.ndarray, du2: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Period assignment contrasts (v1, v2), v2 tilted by the lambdas."""
    rho = expit(design.lambda2 * du2 + b * design.lambda1 * du1)
    v2 = np.where(rng.random(du1.size) < rho, 1, -1)
    return v2 * b, v2


def _slot_z(v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """Treatment indicators by (quadruple, period, slot); slot 0 treated iff v=+1."""
    v = np.stack([v1, v2], axis=1)
    z = np.empty((v.shape[0], 2, 2), dtype=np.int64)
    z[:, :, 0] = v == 1
    z[:, :, 1] = v == -1
    return z


def _emit_records(z: np.ndarray, outcomes: np.ndarray) -> list[UnitRecord]:
    records: list[UnitRecord] = []
    for i in range(z.shape[0]):
        for t in (0, 1):
            for j, member in enumerate("ab"):
                records.append(
                    UnitRecord(
                        id=f"q{i:05d}-p{t + 1}-{member}",
                        period=t + 1,
                        z=int(z[i, t, j]),
                        outcome=float(outcomes[i, t, j]),
                        covariates={},
                    )
                )
    return records


def generate_continuous(design: ContinuousDesign, seed=None) -> list[UnitRecord]:
    """Draw 4 * n_quadruples unit records from the continuous model."""
    rng = _rng(seed)
    n = design.n_quadruples
    mu = rng.normal(0.0, design.mu_sd, n)
    alpha = rng.normal(0.0, design.alpha_sd, n)
    beta = rng.normal(0.0, design.beta_sd, n)
    b = 2 * rng.integers(0, 2, n) - 1
    u = _draw_u(rng, design.u_dist, (n, 2, 2))
    du1 = u[:, 0, 0] - u[:, 0, 1]
    du2 = u[:, 1, 0] - u[:, 1, 1]
    if design.residual == "normal":
        eps = rng.normal(0.0, design.residual_scale, (n, 2, 2))
    else:
        eps = rng.lognormal(0.0, design.residual_scale, (n, 2, 2))
    # Latent contrast of residuals; retilt its sign, keep its magnitude.
    y_raw = (eps[:, 1, 0] - eps[:, 1, 1]) - b * (eps[:, 0, 0] - eps[:, 0, 1])
    eta = expit(design.delta2 * du2 - b * design.delta1 * du1)
    sign = np.where(rng.random(n) < eta, 1.0, -1.0)
    y = sign * np.abs(y_raw)
    eps[:, 1, 0] = y + eps[:, 1, 1] + b * (eps[:, 0, 0] - eps[:, 0, 1])
    v1, v2 = _draw_assignment(rng, design, du1, du2, b)
    tau_units = design.tau + (
        rng.normal(0.0, design.tau_heterogeneity_sd, (n, 2))
        if design.tau_heterogeneity_sd > 0
        else np.zeros((n, 2))
    )
    z = _slot_z(v1, v2)
    post = np.array([0.0, 1.0])[None, :, None]
    outcomes = (
        mu[:, None, None]
        + beta[:, None, None] * z
        + eps
        + post * (alpha[:, None, None] + tau_units[:, None, :] * z)
    )
    return _emit_records(z, outcomes)


def generate_binary(design: BinaryDesign, seed=None) -> list[UnitRecord]:
    """Draw 4 * n_quadruples unit records from the binary logit model."""
    rng = _rng(seed)
    n = design.n_quadruples
    mu = rng.normal(design.mu_mean, design.mu_sd, n)
    alpha = rng.normal(0.0, design.alpha_sd, n)
    beta = rng.normal(0.0, design.beta_sd, n)
    b = 2 * rng.integers(0, 2, n) - 1
    u = _draw_u(rng, design.u_dist, (n, 2, 2))
    du1 = u[:, 0, 0] - u[:, 0, 1]
    du2 = u[:, 1, 0] - u[:, 1, 1]
    v1, v2 = _draw_assignment(rng, design, du1, du2, b)
    z = _slot_z(v1, v2)
    deltas = np.array([design.delta1, design.delta2])[None, :, None]
    post = np.array([0.0, 1.0])[None, :, None]
    logits = (
        mu[:, None, None]
        + beta[:, None, None] * z
        + deltas * u
        + post * (alpha[:, None, None] + design.tau_logit * z)
    )
    outcomes = (rng.random((n, 2, 2)) < expit(logits)).astype(np.float64)
    return _emit_records(z, outcomes)


def quadruples_from_records(records: list[UnitRecord], outcome_kind: str = "continuous") -> QuadrupleSet:
    """Reassemble generator output (ids "<quad>-p<period>-<member>") into quadruples."""
    groups: dict[str, list[UnitRecord]] = {}
    order: list[str] = []
    for rec in records:
        key = rec.id.split("-p")[0]
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(rec)
    quads = []
    for key in order:
        members = groups[key]
        if len(members) != 4:
            raise StructuralError(f"quadruple {key!r} has {len(members)} records, expected 4")
        pairs = {}
        for period in (1, 2):
            in_period = [r for r in members if r.period == period]
            treated = [r for r in in_period if r.z == 1]
            control = [r for r in in_period if r.z == 0]
            if len(treated) != 1 or len(control) != 1:
                raise StructuralError(f"quadruple {key!r} period {period} is not a treated-control pair")
            pairs[period] = MatchedPair(treated=treated[0], control=control[0])
        quads.append(build_quadruple(pairs[1], pairs[2]))
    return QuadrupleSet(quads=tuple(quads), outcome_kind=outcome_kind)


@dataclass(frozen=True)
class AnalysisPlan:
    """What to run on each replication.

    test is one of "signed_rank", "permutational_t", "sate", "mcnemar".
    Worst-case (upper) p-values are computed at `gamma`.  estimate_gamma,
    when set, also computes estimate bounds at that cap and records
    whether they cover the design's true effect.  mcnemar_budget, when
    set, analyzes only the first that many informative quadruples, fixing
    the effective sample size across replications.
    """

    test: str = "signed_rank"
    gamma: float = 1.0
    alpha: float = 0.05
    tau0: float = 0.0
    sided: str = "one_sided_greater"
    compute_hl: bool = False
    estimate_gamma: float | None = None
    compute_changepoint: bool = False
    mcnemar_budget: int | None = None

    def __post_init__(self) -> None:
        if self.test not in ("signed_rank", "permutational_t", "sate", "mcnemar"):
            raise ValueError(f"unknown test {self.test!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.mcnemar_budget is not None and self.mcnemar_budget < 1:
            raise ValueError("mcnemar_budget must be >= 1")


@dataclass(frozen=True)
class StudyResult:
    """Per-replication rows plus a summary dict."""

    rows: tuple[dict, ...]
    summary: dict


def _analyze_one(quads: QuadrupleSet, plan: AnalysisPlan, true_tau: float) -> dict:
    if plan.test == "mcnemar":
        eligible = eligible_quadruples(quads)
        if plan.mcnemar_budget is not None:
            eligible = eligible[: plan.mcnemar_budget]
        if not eligible:
            return {"statistic": np.nan, "p_value": 1.0, "n_effective": 0}
        res = mcnemar_sensitivity_pvalue(eligible, gamma=plan.gamma, direction="upper", sided=plan.sided)
    elif plan.test == "sate":
        res = sate_pvalue(quads, tau0=plan.tau0, gamma=plan.gamma, direction="upper", sided=plan.sided)
    else:
        score = ScoreFunction.wilcoxon() if plan.test == "signed_rank" else ScoreFunction.absolute_value()
        res = worst_case_pvalue(
            quads, tau0=plan.tau0, score=score, gamma=plan.gamma, direction="upper", sided=plan.sided
        )
    row = {"statistic": res.statistic, "p_value": res.p_value, "n_effective": res.n_effective}
    if plan.compute_hl:
        row["hl"] = hodges_lehmann(quads)
    if plan.estimate_gamma is not None:
        lo, hi = estimate_bounds(quads, gamma=plan.estimate_gamma)
        row["bound_lower"] = lo
        row["bound_upper"] = hi
        row["covered"] = int(lo - 1e-9 <= true_tau <= hi + 1e-9)
    if plan.compute_changepoint:
        cp = changepoint_gamma(quads, tau0=plan.tau0, alpha=plan.alpha, sided=plan.sided)
        row["changepoint"] = np.nan if cp is None else cp
    return row


def level_power_study(
    design: ContinuousDesign | BinaryDesign,
    plan: AnalysisPlan,
    reps: int,
    seed: int = 0,
) -> StudyResult:
    """Run `reps` generate-analyze replications with spawned seeds.

    Seeds are spawned per replication from the base seed, so results do
    not depend on execution order and are reproducible bit for bit.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    binary = isinstance(design, BinaryDesign)
    true_tau = design.tau_logit if binary else design.tau
    children = np.random.SeedSequence(seed).spawn(reps)
    rows: list[dict] = []
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        records = generate_binary(design, rng) if binary else generate_continuous(design, rng)
        quads = quadruples_from_records(records, outcome_kind="binary" if binary else "continuous")
        row = {"rep": r}
        row.update(_analyze_one(quads, plan, true_tau))
        row["reject"] = int(row["p_value"] <= plan.alpha)
        rows.append(row)
    n = len(rows)
    rate = sum(r["reject"] for r in rows) / n
    summary = {
        "reps": n,
        "rejection_rate": rate,
        "mc_se": float(np.sqrt(rate * (1.0 - rate) / n)),
        "mean_p": float(np.mean([r["p_value"] for r in rows])),
    }
    if plan.compute_hl:
        hls = np.array([r["hl"] for r in rows])
        summary["hl_mean"] = float(hls.mean())
        summary["hl_rmse"] = float(np.sqrt(np.mean((hls - true_tau) ** 2)))
    if plan.estimate_gamma is not None:
        summary["coverage_rate"] = float(np.mean([r["covered"] for r in rows]))
    if plan.compute_changepoint:
        cps = np.array([r["changepoint"] for r in rows], dtype=np.float64)
        summary["changepoint_median"] = float(np.nanmedian(cps)) if np.isfinite(cps).any() else float("nan")
    return StudyResult(rows=tuple(rows), summary=summary)
