"""Three-stage matching for two-period group comparisons.

Stage 1 pairs treated to control units within period 1, stage 2 within
period 2, and stage 3 matches period-1 pairs to period-2 pairs on
pair-level summaries, yielding the quadruples that inference consumes.

Distances are rank-based Mahalanobis distances over the continuous
covariates.  Balance constraints come in three flavors: per-covariate
caps on the absolute standardized difference, exact agreement on nominal
covariates, and (near-)fine balance, which constrains the matched
control group's category histogram rather than individual pairs.

Pair solvers are built on the exact rectangular assignment solver from
scipy.  objective="minimize_total_distance" matches every treated unit at
minimal total distance, with fine balance enforced through restricted
dummy columns; it cannot drop pairs, so standardized-difference caps
cannot be enforced there.  objective="maximize_pairs" (the default)
first finds a maximum-cardinality minimum-distance matching, then repairs
constraint violations by removing the least useful pairs and greedily
re-augments.  The repair sequence is a heuristic: the returned matching
satisfies every declared constraint, but among all constraint-satisfying
matchings it may not have maximal size or minimal distance.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from .core import MatchedPair, QuadrupleSet, UnitRecord, build_quadruple, validate_dataset
from .errors import ConfigError, InfeasibleMatchError, StructuralError

OBJECTIVES = ("maximize_pairs", "minimize_total_distance")
NOMINAL_RULES = ("exact", "fine", "near_fine", "none")


@dataclass(frozen=True)
class NominalRule:
    """Handling rule for one nominal covariate."""

    kind: str
    k: int = 0

    def __post_init__(self) -> None:
        if self.kind not in NOMINAL_RULES:
            raise ConfigError(f"nominal rule must be one of {NOMINAL_RULES}, got {self.kind!r}")
        if self.kind == "near_fine" and self.k < 1:
            raise ConfigError("near_fine needs a deviation budget k >= 1")
        if self.kind != "near_fine" and self.k != 0:
            raise ConfigError(f"rule {self.kind!r} takes no budget")


@dataclass(frozen=True)
class BalanceSpec:
    """Declared balance constraints and solver options for one stage.

    continuous maps covariate name to the largest tolerated absolute
    standardized difference (math.inf leaves it distance-only).  nominal
    maps covariate name to a NominalRule.  The caliper is a cap on the
    rank-based Mahalanobis distance: a hard edge filter under
    maximize_pairs, a large additive penalty under
    minimize_total_distance.
    """

    continuous: Mapping[str, float] = field(default_factory=dict)
    nominal: Mapping[str, NominalRule] = field(default_factory=dict)
    caliper: float | None = None
    objective: str = "maximize_pairs"

    def __post_init__(self) -> None:
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        for name, threshold in self.continuous.items():
            if threshold <= 0:
                raise ConfigError(f"threshold for {name!r} must be positive")
        if self.caliper is not None and self.caliper <= 0:
            raise ConfigError("caliper must be positive")

    @property
    def exact_names(self) -> tuple[str, ...]:
        return tuple(sorted(n for n, r in self.nominal.items() if r.kind == "exact"))

    @property
    def fine_like(self) -> tuple[str, ...]:
        return tuple(sorted(n for n, r in self.nominal.items() if r.kind in ("fine", "near_fine")))

    def budget(self, name: str) -> int:
        rule = self.nominal[name]
        return rule.k if rule.kind == "near_fine" else 0


@dataclass(frozen=True)
class PairSummary:
    """Pair-level features for cross-period matching."""

    pair: MatchedPair
    features: Mapping[str, float | str]


@dataclass(frozen=True)
class BalanceRow:
    covariate: str
    std_diff_before: float
    p_before: float
    std_diff_after: float
    p_after: float
    note: str = ""


@dataclass(frozen=True)
class BalanceReport:
    """Before/after balance for one matching stage."""

    stage: str
    rows: tuple[BalanceRow, ...]
    n_treated_before: int
    n_control_before: int
    n_matched: int


# ---------------------------------------------------------------------------
# standardized differences and distances


def pooled_sd(column: np.ndarray, group_a: np.ndarray, group_b: np.ndarray) -> float:
    """Square root of the average of the two group variances."""
    xa = column[group_a]
    xb = column[group_b]
    va = xa.var(ddof=1) if xa.size > 1 else 0.0
    vb = xb.var(ddof=1) if xb.size > 1 else 0.0
    return float(np.sqrt(0.5 * (va + vb)))


def standardized_difference(
    column: np.ndarray, group_a: np.ndarray, group_b: np.ndarray, scale: float
) -> float:
    """(mean_a - mean_b) / scale, with a +inf sentinel at zero scale.

    The scale is supplied by the caller so that before/after comparisons
    share the full-sample pooled SD.
    """
    column = np.asarray(column, dtype=np.float64)
    diff = float(column[group_a].mean() - column[group_b].mean())
    if scale == 0.0:
        if diff == 0.0:
            return 0.0
        warnings.warn("zero pooled SD with unequal means; reporting inf", stacklevel=2)
        return math.inf
    return diff / scale


def _rank_mahalanobis(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Rank-based Mahalanobis distances between two row sets."""
    na = xa.shape[0]
    p = xa.shape[1]
    if p == 0:
        return np.zeros((na, xb.shape[0]))
    pooled = np.vstack([xa, xb])
    ranks = np.column_stack([rankdata(pooled[:, j], method="average") for j in range(p)])
    cov = np.atleast_2d(np.cov(ranks, rowvar=False))
    cov = cov + np.eye(p) * (1e-8 * max(np.trace(cov), 1.0))
    transform = np.linalg.cholesky(np.linalg.inv(cov))
    y = ranks @ transform
    return cdist(y[:na], y[na:])


# ---------------------------------------------------------------------------
# solver internals


def _one_sided_deviation(t_labels: Sequence[str], c_labels: Sequence[str]) -> int:
    """Sum over categories of max(treated count - control count, 0)."""
    ct = Counter(t_labels)
    cc = Counter(c_labels)
    return sum(max(v - cc.get(cat, 0), 0) for cat, v in ct.items())


def _assignment_match(
    dist: np.ndarray,
    feasible: np.ndarray,
    compound_t: list[tuple] | None,
    compound_c: list[tuple] | None,
    budget: int,
    caliper: float | None,
) -> list[tuple[int, int]]:
    """Minimum total distance, every treated unit matched.

    Fine balance on the compound category is enforced with restricted
    dummy columns; a near-fine budget adds wildcard columns.
    """
    n_t, n_c = dist.shape
    if n_t > n_c:
        raise InfeasibleMatchError(
            f"{n_t} treated units but only {n_c} controls; "
            "minimize_total_distance must match every treated unit"
        )
    dmax = float(dist.max()) if dist.size else 1.0
    cost_dist = dist.copy()
    if caliper is not None:
        cost_dist = cost_dist + (dist > caliper) * (1000.0 * (dmax + 1.0))
        dmax = float(cost_dist.max())

    extra_cols: list[tuple[str, object]] = []
    if compound_t is not None:
        counts_t = Counter(compound_t)
        counts_c = Counter(compound_c)
        deficit = {cat: n - counts_c.get(cat, 0) for cat, n in counts_t.items() if n > counts_c.get(cat, 0)}
        total_deficit = sum(deficit.values())
        if total_deficit > budget:
            worst = max(deficit, key=lambda cat: deficit[cat])
            raise InfeasibleMatchError(
                f"fine balance infeasible: category {worst!r} has "
                f"{counts_t[worst]} treated but {counts_c.get(worst, 0)} controls "
                f"(total deficit {total_deficit} exceeds budget {budget})"
            )
        for cat, n in counts_c.items():
            surplus = n - counts_t.get(cat, 0)
            extra_cols.extend(("dummy", cat) for _ in range(max(surplus, 0)))
        extra_cols.extend(("wildcard", None) for _ in range(budget - total_deficit))

    n_cols = n_t + len(extra_cols)
    big_m = (n_c + len(extra_cols) + 1) * (dmax + 1.0)
    eps = (dmax + 1.0) * 1e-6
    cost = np.full((n_c, n_cols), big_m)
    cost[:, :n_t] = np.where(feasible.T, cost_dist.T - big_m, big_m)
    for j, (kind, cat) in enumerate(extra_cols):
        col = n_t + j
        if kind == "wildcard":
            cost[:, col] = eps
        else:
            for i in range(n_c):
                if compound_c[i] == cat:
                    cost[i, col] = 0.0
    rows, cols = linear_sum_assignment(cost)
    assigned = {c: r for r, c in zip(rows, cols)}
    pairs: list[tuple[int, int]] = []
    for t in range(n_t):
        if t not in assigned or not feasible[t, assigned[t]]:
            raise InfeasibleMatchError(
                "no admissible control for every treated unit under the exact "
                "matching and fine balance constraints"
            )
        pairs.append((t, assigned[t]))
    return pairs


def _max_cardinality_match(dist: np.ndarray, feasible: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-cardinality matching, minimum total distance among those."""
    n_t, n_c = dist.shape
    if not feasible.any():
        return []
    dmax = float(dist[feasible].max()) if feasible.any() else 1.0
    unmatched = (min(n_t, n_c) + 1) * (dmax + 1.0)
    big = 10.0 * (n_t + n_c + 2) * unmatched
    cost = np.full((n_t, n_c + n_t), big)
    cost[:, :n_c] = np.where(feasible, dist, big)
    cost[np.arange(n_t), n_c + np.arange(n_t)] = unmatched
    rows, cols = linear_sum_assignment(cost)
    return [(int(t), int(c)) for t, c in zip(rows, cols) if c < n_c and feasible[t, c]]


class _StageData:
    """Shared covariate context for one matching stage."""

    def __init__(
        self,
        rows_t: list[Mapping[str, float | str]],
        rows_c: list[Mapping[str, float | str]],
        kinds: Mapping[str, str],
        spec: BalanceSpec,
    ) -> None:
        for name in list(spec.continuous) + list(spec.nominal):
            if name not in kinds:
                raise ConfigError(f"constraint names unknown covariate {name!r}")
        for name in spec.continuous:
            if kinds[name] != "continuous":
                raise ConfigError(f"continuous threshold declared for nominal covariate {name!r}")
        for name in spec.nominal:
            if kinds[name] != "nominal":
                raise ConfigError(f"nominal rule declared for continuous covariate {name!r}")
        self.spec = spec
        self.cont_names = tuple(sorted(n for n, k in kinds.items() if k == "continuous"))
        self.x_t = np.array([[float(r[n]) for n in self.cont_names] for r in rows_t], dtype=np.float64)
        self.x_c = np.array([[float(r[n]) for n in self.cont_names] for r in rows_c], dtype=np.float64)
        if not self.cont_names:
            self.x_t = np.zeros((len(rows_t), 0))
            self.x_c = np.zeros((len(rows_c), 0))
        self.dist = _rank_mahalanobis(self.x_t, self.x_c)
        exact = spec.exact_names
        self.exact_t = [tuple(r[n] for n in exact) for r in rows_t]
        self.exact_c = [tuple(r[n] for n in exact) for r in rows_c]
        self.fine_t = {n: [str(r[n]) for r in rows_t] for n in spec.fine_like}
        self.fine_c = {n: [str(r[n]) for r in rows_c] for n in spec.fine_like}
        # Full-sample pooled SDs, fixed once per stage.
        self.scales = {}
        for j, name in enumerate(self.cont_names):
            col = np.concatenate([self.x_t[:, j], self.x_c[:, j]])
            ga = np.arange(len(rows_t))
            gb = np.arange(len(rows_t), len(rows_t) + len(rows_c))
            self.scales[name] = pooled_sd(col, ga, gb)

    def feasible_matrix(self, hard_caliper: bool) -> np.ndarray:
        feas = np.ones(self.dist.shape, dtype=bool)
        if self.spec.exact_names:
            key_ids: dict[tuple, int] = {}
            kt = np.array([key_ids.setdefault(k, len(key_ids)) for k in self.exact_t])
            kc = np.array([key_ids.setdefault(k, len(key_ids)) for k in self.exact_c])
            feas &= kt[:, None] == kc[None, :]
        if hard_caliper and self.spec.caliper is not None:
            feas &= self.dist <= self.spec.caliper
        return feas

    def nominal_excesses(self, pairs: list[tuple[int, int]]) -> dict[str, int]:
        out = {}
        for name in self.spec.fine_like:
            t_labels = [self.fine_t[name][t] for t, _ in pairs]
            c_labels = [self.fine_c[name][c] for _, c in pairs]
            dev = _one_sided_deviation(t_labels, c_labels)
            out[name] = dev - self.spec.budget(name)
        return out

    def continuous_excesses(self, pairs: list[tuple[int, int]]) -> dict[str, float]:
        out = {}
        if not pairs:
            return {name: 0.0 for name in self.spec.continuous if math.isfinite(self.spec.continuous[name])}
        t_idx = np.array([t for t, _ in pairs])
        c_idx = np.array([c for _, c in pairs])
        for name, threshold in self.spec.continuous.items():
            if not math.isfinite(threshold):
                continue
            j = self.cont_names.index(name)
            mt = self.x_t[t_idx, j].mean()
            mc = self.x_c[c_idx, j].mean()
            scale = self.scales[name]
            if scale == 0.0:
                sd = 0.0 if mt == mc else math.inf
            else:
                sd = (mt - mc) / scale
            out[name] = max(abs(sd) - threshold, 0.0)
        return out

    def satisfied(self, pairs: list[tuple[int, int]]) -> bool:
        if any(v > 0 for v in self.nominal_excesses(pairs).values()):
            return False
        return not any(v > 1e-12 for v in self.continuous_excesses(pairs).values())


def _repair_and_augment(stage: _StageData, pairs: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Remove pairs until all constraints hold, then greedily re-augment."""
    pairs = sorted(pairs)
    last_binding = None

    def remove_for_nominal() -> None:
        nonlocal pairs, last_binding
        names = stage.spec.fine_like
        if not names:
            return
        # Removing one pair shifts two label counts by one, so the deviation
        # change is an O(1) integer update; recomputing marginals per
        # candidate would make the repair quadratic in the pair count.
        count_t = {n: Counter(stage.fine_t[n][t] for t, _ in pairs) for n in names}
        count_c = {n: Counter(stage.fine_c[n][c] for _, c in pairs) for n in names}
        dev = {
            n: sum(max(v - count_c[n][cat], 0) for cat, v in count_t[n].items())
            for n in names
        }
        while True:
            excesses = {n: dev[n] - stage.spec.budget(n) for n in names}
            violated = [n for n, e in excesses.items() if e > 0]
            if not violated:
                return
            last_binding = max(violated, key=lambda n: excesses[n])
            best = None
            for idx, (t, c) in enumerate(pairs):
                reduction = 0
                same = True
                for n in violated:
                    lt = stage.fine_t[n][t]
                    lc = stage.fine_c[n][c]
                    if lt == lc:
                        continue
                    same = False
                    if count_t[n][lt] > count_c[n][lt]:
                        reduction += 1
                    if count_t[n][lc] >= count_c[n][lc]:
                        reduction -= 1
                if same:
                    continue
                key = (-reduction, -stage.dist[t, c], idx)
                if best is None or key < best[0]:
                    best = (key, idx)
            if best is None:
                raise InfeasibleMatchError(
                    f"cannot satisfy fine balance on {last_binding!r}: no removable pair"
                )
            t, c = pairs.pop(best[1])
            for n in names:
                lt = stage.fine_t[n][t]
                lc = stage.fine_c[n][c]
                if lt != lc:
                    if count_t[n][lt] > count_c[n][lt]:
                        dev[n] -= 1
                    if count_t[n][lc] >= count_c[n][lc]:
                        dev[n] += 1
                count_t[n][lt] -= 1
                count_c[n][lc] -= 1
            if not pairs:
                raise InfeasibleMatchError(
                    f"fine balance on {last_binding!r} eliminated every pair"
                )

    def remove_one_for_continuous() -> bool:
        nonlocal pairs, last_binding
        excesses = stage.continuous_excesses(pairs)
        total = sum(excesses.values())
        if total <= 1e-12:
            return False
        last_binding = max(excesses, key=lambda n: excesses[n])
        best = None
        for idx, (t, c) in enumerate(pairs):
            trial = pairs[:idx] + pairs[idx + 1:]
            trial_total = sum(stage.continuous_excesses(trial).values())
            key = (trial_total, -stage.dist[t, c], idx)
            if best is None or key < best[0]:
                best = (key, idx)
        pairs.pop(best[1])
        if not pairs:
            raise InfeasibleMatchError(
                f"standardized-difference cap on {last_binding!r} eliminated every pair"
            )
        return True

    while True:
        remove_for_nominal()
        if not remove_one_for_continuous():
            break

    # Greedy re-augmentation among dropped units, constraint-preserving.
    feas = stage.feasible_matrix(hard_caliper=True)
    used_t = {t for t, _ in pairs}
    used_c = {c for _, c in pairs}
    candidates = [
        (stage.dist[t, c], t, c)
        for t in range(feas.shape[0])
        if t not in used_t
        for c in range(feas.shape[1])
        if c not in used_c and feas[t, c]
    ]
    for _, t, c in sorted(candidates):
        if t in used_t or c in used_c:
            continue
        trial = sorted(pairs + [(t, c)])
        if stage.satisfied(trial):
            pairs = trial
            used_t.add(t)
            used_c.add(c)
    if not pairs:
        raise InfeasibleMatchError(
            f"no pairs satisfy the declared constraints (binding: {last_binding!r})"
        )
    return sorted(pairs)


def _match_stage(stage: _StageData) -> list[tuple[int, int]]:
    spec = stage.spec
    if spec.objective == "minimize_total_distance":
        if stage.spec.fine_like:
            names = stage.spec.fine_like
            compound_t = [tuple(stage.fine_t[n][i] for n in names) for i in range(stage.dist.shape[0])]
            compound_c = [tuple(stage.fine_c[n][i] for n in names) for i in range(stage.dist.shape[1])]
            if any(spec.nominal[n].kind == "fine" for n in names):
                budget = 0
            else:
                budget = min(spec.budget(n) for n in names)
        else:
            compound_t = compound_c = None
            budget = 0
        pairs = _assignment_match(
            stage.dist,
            stage.feasible_matrix(hard_caliper=False),
            compound_t,
            compound_c,
            budget,
            spec.caliper,
        )
        excess = stage.continuous_excesses(pairs)
        bad = [n for n, e in excess.items() if e > 1e-12]
        if bad:
            raise InfeasibleMatchError(
                f"standardized-difference caps on {bad} cannot be enforced under "
                "minimize_total_distance (every treated unit must be matched); "
                "use objective='maximize_pairs'"
            )
        return sorted(pairs)
    feas = stage.feasible_matrix(hard_caliper=True)
    if not feas.any():
        reason = "caliper" if stage.spec.caliper is not None else "exact matching constraints"
        raise InfeasibleMatchError(f"no admissible treated-control edges (binding: {reason})")
    pairs = _max_cardinality_match(stage.dist, feas)
    return _repair_and_augment(stage, pairs)


# ---------------------------------------------------------------------------
# public matching operations


def _covariate_kinds(records: Sequence[UnitRecord]) -> dict[str, str]:
    report = validate_dataset(list(records))
    if not report.ok:
        raise StructuralError("invalid records: " + "; ".join(report.problems[:5]))
    return dict(report.covariate_kinds)


def within_period_match(
    records: Sequence[UnitRecord], spec: BalanceSpec, seed: int | None = None
) -> list[MatchedPair]:
    """Pair treated to control units from one period under a BalanceSpec.

    The solver itself is deterministic; the seed is accepted for interface
    symmetry with the reporting helpers and is currently unused.
    """
    records = list(records)
    if not records:
        raise StructuralError("no records")
    periods = {r.period for r in records}
    if len(periods) != 1:
        raise StructuralError(f"records span periods {sorted(periods)}; expected one period")
    kinds = _covariate_kinds(records)
    treated = [r for r in records if r.z == 1]
    controls = [r for r in records if r.z == 0]
    if not treated or not controls:
        raise InfeasibleMatchError("need at least one treated and one control unit")
    stage = _StageData(
        [r.covariates for r in treated],
        [r.covariates for r in controls],
        kinds,
        spec,
    )
    pairs = _match_stage(stage)
    return [MatchedPair(treated=treated[t], control=controls[c]) for t, c in pairs]


def pair_summaries(
    pairs: Sequence[MatchedPair], spec: BalanceSpec | None = None
) -> list[PairSummary]:
    """Summarize pairs for cross-period matching.

    Continuous covariates become within-pair means.  Nominal covariates
    become the shared label when exactly matched; under (near-)fine
    balance an unordered compound label "a|b"; covariates declared with
    rule "none" are dropped.  Without a spec, nominal covariates with
    differing labels raise an error instructing the caller to declare a
    handling rule.
    """
    out: list[PairSummary] = []
    for pair in pairs:
        features: dict[str, float | str] = {}
        for name, value in pair.treated.covariates.items():
            if name not in pair.control.covariates:
                raise StructuralError(
                    f"pair ({pair.treated.id!r}, {pair.control.id!r}): covariate {name!r} "
                    "missing on the control side"
                )
            other = pair.control.covariates[name]
            if isinstance(value, str):
                rule = spec.nominal.get(name, NominalRule("none")) if spec is not None else None
                if rule is not None and rule.kind == "none":
                    continue
                if value == other:
                    features[name] = value
                elif rule is not None and rule.kind in ("fine", "near_fine"):
                    features[name] = "|".join(sorted((value, str(other))))
                elif rule is not None and rule.kind == "exact":
                    raise StructuralError(
                        f"pair ({pair.treated.id!r}, {pair.control.id!r}) violates exact "
                        f"matching on {name!r}"
                    )
                else:
                    raise StructuralError(
                        f"nominal covariate {name!r} differs within pair "
                        f"({pair.treated.id!r}, {pair.control.id!r}) and has no handling rule; "
                        "declare it exact, fine, near_fine, or none in the BalanceSpec"
                    )
            else:
                features[name] = 0.5 * (float(value) + float(other))
        out.append(PairSummary(pair=pair, features=features))
    return out


@dataclass(frozen=True)
class CrossMatchDetails:
    """Pair summaries and index pairs behind a cross-period match."""

    pre_summaries: tuple[PairSummary, ...]
    post_summaries: tuple[PairSummary, ...]
    index_pairs: tuple[tuple[int, int], ...]


def cross_period_match(
    pre_pairs: Sequence[MatchedPair],
    post_pairs: Sequence[MatchedPair],
    spec: BalanceSpec,
    seed: int | None = None,
    outcome_kind: str = "continuous",
    pair_spec: BalanceSpec | None = None,
    return_details: bool = False,
):
    """Match period-1 pairs to period-2 pairs on pair-level summaries.

    spec constrains the pair-level features (continuous features are
    within-pair means; nominal features are labels or compound labels).
    pair_spec, when given, is the within-period spec used to build the
    summaries.  Returns a QuadrupleSet, or (QuadrupleSet,
    CrossMatchDetails) with return_details=True.
    """
    if not pre_pairs or not post_pairs:
        raise InfeasibleMatchError("need at least one pair on each side")
    pre_sum = pair_summaries(pre_pairs, spec=pair_spec)
    post_sum = pair_summaries(post_pairs, spec=pair_spec)
    kinds: dict[str, str] = {}
    for s in pre_sum + post_sum:
        for name, value in s.features.items():
            kind = "nominal" if isinstance(value, str) else "continuous"
            if kinds.setdefault(name, kind) != kind:
                raise StructuralError(f"feature {name!r} mixes continuous and nominal values")
    swap = len(pre_sum) > len(post_sum) and spec.objective == "minimize_total_distance"
    rows_a = [s.features for s in (post_sum if swap else pre_sum)]
    rows_b = [s.features for s in (pre_sum if swap else post_sum)]
    stage = _StageData(rows_a, rows_b, kinds, spec)
    index_pairs = _match_stage(stage)
    if swap:
        index_pairs = sorted((b, a) for a, b in index_pairs)
    quads = tuple(build_quadruple(pre_pairs[i], post_pairs[j]) for i, j in index_pairs)
    quad_set = QuadrupleSet(quads=quads, outcome_kind=outcome_kind)
    if return_details:
        details = CrossMatchDetails(
            pre_summaries=tuple(pre_sum),
            post_summaries=tuple(post_sum),
            index_pairs=tuple((int(i), int(j)) for i, j in index_pairs),
        )
        return quad_set, details
    return quad_set


# ---------------------------------------------------------------------------
# balance reporting


def _permutation_pvalues(
    columns: Mapping[str, np.ndarray],
    kinds: Mapping[str, str],
    scales: Mapping[str, object],
    ia: np.ndarray,
    ib: np.ndarray,
    seed: int,
    draws: int,
) -> dict[str, float]:
    """Two-sample permutation p-values, shared draws across covariates.

    Continuous statistic: absolute mean difference.  Nominal statistic:
    max over categories of the absolute standardized indicator difference
    (scales fixed by the caller).  Add-one convention.
    """
    rng = np.random.default_rng(seed)
    pool = np.concatenate([ia, ib])
    n_a = ia.size
    n = pool.size
    obs: dict[str, float] = {}
    exceed: dict[str, int] = {}
    pooled_cols: dict[str, np.ndarray] = {}
    for name in columns:
        if kinds[name] == "continuous":
            col = np.asarray(columns[name], dtype=np.float64)[pool]
            pooled_cols[name] = col
            obs[name] = abs(col[:n_a].mean() - col[n_a:].mean())
        else:
            labels = np.asarray(columns[name], dtype=object)[pool]
            cats, scale_map = scales[name]
            mat = np.column_stack([(labels == cat).astype(np.float64) for cat in cats])
            pooled_cols[name] = mat
            diffs = [
                abs(mat[:n_a, k].mean() - mat[n_a:, k].mean()) / scale_map[cat]
                for k, cat in enumerate(cats)
                if scale_map[cat] > 0
            ]
            obs[name] = max(diffs, default=0.0)
        exceed[name] = 0

    block = 2000
    done = 0
    while done < draws:
        b = min(block, draws - done)
        sel = np.argsort(rng.random((b, n)), axis=1)[:, :n_a]
        for name in columns:
            col = pooled_cols[name]
            if kinds[name] == "continuous":
                s_a = col[sel].sum(axis=1)
                total = col.sum()
                stat = np.abs(s_a / n_a - (total - s_a) / (n - n_a))
            else:
                cats, scale_map = scales[name]
                stats = []
                for k, cat in enumerate(cats):
                    if scale_map[cat] <= 0:
                        continue
                    s_a = col[:, k][sel].sum(axis=1)
                    total = col[:, k].sum()
                    stats.append(np.abs(s_a / n_a - (total - s_a) / (n - n_a)) / scale_map[cat])
                stat = np.max(stats, axis=0) if stats else np.zeros(b)
            exceed[name] += int((stat >= obs[name] - 1e-12).sum())
        done += b
    return {name: (1 + exceed[name]) / (draws + 1) for name in columns}


def _balance_rows(
    columns: Mapping[str, np.ndarray],
    kinds: Mapping[str, str],
    ia_before: np.ndarray,
    ib_before: np.ndarray,
    ia_after: np.ndarray,
    ib_after: np.ndarray,
    seed: int,
    draws: int,
) -> list[BalanceRow]:
    scales: dict[str, object] = {}
    sds_before: dict[str, float] = {}
    sds_after: dict[str, float] = {}
    notes: dict[str, str] = {}
    for name in sorted(columns):
        notes[name] = ""
        if kinds[name] == "continuous":
            col = np.asarray(columns[name], dtype=np.float64)
            scale = pooled_sd(col, ia_before, ib_before)
            scales[name] = scale
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sds_before[name] = standardized_difference(col, ia_before, ib_before, scale)
                sds_after[name] = standardized_difference(col, ia_after, ib_after, scale)
            if scale == 0.0 and (math.isinf(sds_before[name]) or math.isinf(sds_after[name])):
                notes[name] = "zero pooled SD"
        else:
            labels = np.asarray(columns[name], dtype=object)
            cats = sorted(set(labels))
            scale_map = {}
            for cat in cats:
                ind = (labels == cat).astype(np.float64)
                scale_map[cat] = pooled_sd(ind, ia_before, ib_before)
            scales[name] = (cats, scale_map)

            def max_sd(ia: np.ndarray, ib: np.ndarray) -> float:
                vals = []
                for cat in cats:
                    if scale_map[cat] <= 0:
                        continue
                    ind = (labels == cat).astype(np.float64)
                    vals.append(abs(standardized_difference(ind, ia, ib, scale_map[cat])))
                return max(vals, default=0.0)

            sds_before[name] = max_sd(ia_before, ib_before)
            sds_after[name] = max_sd(ia_after, ib_after)
    seq = np.random.SeedSequence(seed)
    seed_before, seed_after = [int(s.generate_state(1)[0]) for s in seq.spawn(2)]
    p_before = _permutation_pvalues(columns, kinds, scales, ia_before, ib_before, seed_before, draws)
    p_after = _permutation_pvalues(columns, kinds, scales, ia_after, ib_after, seed_after, draws)
    return [
        BalanceRow(
            covariate=name,
            std_diff_before=sds_before[name],
            p_before=p_before[name],
            std_diff_after=sds_after[name],
            p_after=p_after[name],
            note=notes[name],
        )
        for name in sorted(columns)
    ]


def balance_report(
    records: Sequence[UnitRecord],
    pairs: Sequence[MatchedPair],
    seed: int = 0,
    draws: int = 10_000,
    stage: str = "",
) -> BalanceReport:
    """Before/after balance for a within-period stage.

    "Before" compares all treated to all control records; "after" compares
    the matched units.  Standardized differences use the full-sample
    pooled SD throughout; p-values are two-sample permutation tests with
    10,000 seeded draws by default.
    """
    records = list(records)
    kinds = _covariate_kinds(records)
    id_to_idx = {r.id: i for i, r in enumerate(records)}
    ia_before = np.array([i for i, r in enumerate(records) if r.z == 1], dtype=np.int64)
    ib_before = np.array([i for i, r in enumerate(records) if r.z == 0], dtype=np.int64)
    ia_after = np.array([id_to_idx[p.treated.id] for p in pairs], dtype=np.int64)
    ib_after = np.array([id_to_idx[p.control.id] for p in pairs], dtype=np.int64)
    columns = {
        name: np.array(
            [r.covariates[name] for r in records],
            dtype=np.float64 if kinds[name] == "continuous" else object,
        )
        for name in kinds
    }
    rows = _balance_rows(columns, kinds, ia_before, ib_before, ia_after, ib_after, seed, draws)
    if not stage:
        stage = f"period{records[0].period}" if records else "stage"
    return BalanceReport(
        stage=stage,
        rows=tuple(rows),
        n_treated_before=int(ia_before.size),
        n_control_before=int(ib_before.size),
        n_matched=len(pairs),
    )


def cross_balance_report(
    pre_summaries: Sequence[PairSummary],
    post_summaries: Sequence[PairSummary],
    index_pairs: Sequence[tuple[int, int]],
    seed: int = 0,
    draws: int = 10_000,
    stage: str = "cross",
) -> BalanceReport:
    """Balance of pair-level features across the two periods."""
    all_rows = [s.features for s in pre_summaries] + [s.features for s in post_summaries]
    kinds: dict[str, str] = {}
    for row in all_rows:
        for name, value in row.items():
            kinds[name] = "nominal" if isinstance(value, str) else "continuous"
    columns = {
        name: np.array(
            [row[name] for row in all_rows],
            dtype=np.float64 if kinds[name] == "continuous" else object,
        )
        for name in kinds
    }
    n_pre = len(pre_summaries)
    ia_before = np.arange(n_pre, dtype=np.int64)
    ib_before = np.arange(n_pre, n_pre + len(post_summaries), dtype=np.int64)
    ia_after = np.array([i for i, _ in index_pairs], dtype=np.int64)
    ib_after = np.array([n_pre + j for _, j in index_pairs], dtype=np.int64)
    rows = _balance_rows(columns, kinds, ia_before, ib_before, ia_after, ib_after, seed, draws)
    return BalanceReport(
        stage=stage,
        rows=tuple(rows),
        n_treated_before=n_pre,
        n_control_before=len(post_summaries),
        n_matched=len(index_pairs),
    )
