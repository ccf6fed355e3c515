"""Command-line front end: match, test, sens, amplify, simulate, patterns.

Analyses are declared in a YAML config file; most keys can be overridden
by command-line flags.  Input is CSV with a header row, one record per
(unit, period).  Reports are written as JSON with full-precision numbers
(validating against schemas/report.schema.json) while the human-readable
summary prints 4 significant digits.  Every command is deterministic
given input bytes, config, and seed.

Exit codes: 0 success, 2 usage or config error, 3 matching infeasibility,
4 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .binary import eligibility_report, mcnemar_sensitivity_pvalue
from .core import MatchedPair, QuadrupleSet, UnitRecord, build_quadruple, validate_dataset
from .errors import ConfigError, DataError, DidsensError, InfeasibleMatchError
from .inference import ScoreFunction, hodges_lehmann, invert_ci, randomization_pvalue
from .matching import (
    BalanceSpec,
    NominalRule,
    balance_report,
    cross_balance_report,
    cross_period_match,
    within_period_match,
)
from .patterns import write_pattern_svgs
from .sensitivity import (
    amplify_did,
    amplify_paired,
    changepoint_gamma,
    estimate_bounds,
    sate_pvalue,
    worst_case_pvalue,
)
from .simulate import AnalysisPlan, BinaryDesign, ContinuousDesign, level_power_study

SCHEMA_VERSION = 1
TESTS = ("signed_rank", "permutational_t", "sate", "mcnemar")
OUTCOME_KINDS = ("continuous", "binary")
ROLES = ("continuous", "nominal")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class CovariateRole:
    """Declared handling of one covariate column."""

    role: str
    threshold: float | None = None
    balance: str = "none"
    k: int = 0


@dataclass(frozen=True)
class AnalysisConfig:
    """Validated analysis configuration (see README for the YAML layout)."""

    input: str | None = None
    output_dir: str = "."
    seed: int = 0
    outcome_column: str | None = None
    outcome_kind: str = "continuous"
    period_column: str = "period"
    period_labels: dict | None = None
    treatment_column: str = "z"
    id_column: str | None = None
    covariates: dict = field(default_factory=dict)
    objective: str = "maximize_pairs"
    caliper: float | None = None
    test: str = "signed_rank"
    alpha: float = 0.05
    tau0: float = 0.0
    sided: str = "one_sided_greater"
    gammas: tuple = (1.0,)
    amplification_lambdas: tuple = ()
    simulate: dict | None = None

    def __post_init__(self) -> None:
        if self.outcome_kind not in OUTCOME_KINDS:
            raise ConfigError(f"outcome.kind must be one of {OUTCOME_KINDS}, got {self.outcome_kind!r}")
        if self.test not in TESTS:
            raise ConfigError(f"test must be one of {TESTS}, got {self.test!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        for g in self.gammas:
            if g < 1.0:
                raise ConfigError(f"gamma values must be >= 1, got {g}")
        for lam in self.amplification_lambdas:
            if lam <= 1.0:
                raise ConfigError(f"amplification lambdas must exceed 1, got {lam}")


def _as_float_tuple(value, key: str) -> tuple:
    if isinstance(value, (int, float)):
        value = [value]
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of numbers") from None


def _parse_covariates(section) -> dict:
    if not isinstance(section, dict):
        raise ConfigError("covariates must map column names to role declarations")
    out = {}
    for name, decl in section.items():
        if not isinstance(decl, dict) or "role" not in decl:
            raise ConfigError(f"covariate {name!r} needs a mapping with a 'role' key")
        role = decl["role"]
        if role not in ROLES:
            raise ConfigError(f"covariate {name!r}: role must be one of {ROLES}")
        threshold = decl.get("threshold")
        if threshold is not None:
            if role != "continuous":
                raise ConfigError(f"covariate {name!r}: threshold applies to continuous covariates")
            threshold = float(threshold)
        balance = decl.get("balance", "none")
        k = int(decl.get("k", 0))
        if role == "continuous" and balance != "none":
            raise ConfigError(f"covariate {name!r}: balance rules apply to nominal covariates")
        out[str(name)] = CovariateRole(role=role, threshold=threshold, balance=balance, k=k)
    return out


def load_config(path: str) -> AnalysisConfig:
    """Load and validate a YAML config file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return config_from_mapping(raw)


def config_from_mapping(raw: dict) -> AnalysisConfig:
    outcome = raw.get("outcome", {}) or {}
    period = raw.get("period", {}) or {}
    treatment = raw.get("treatment", {}) or {}
    ident = raw.get("id", {}) or {}
    matching = raw.get("matching", {}) or {}
    labels = period.get("labels")
    if labels is not None:
        try:
            labels = {str(k): int(v) for k, v in labels.items()}
        except (AttributeError, TypeError, ValueError):
            raise ConfigError("period.labels must map raw period values to 1 or 2") from None
        if not set(labels.values()) <= {1, 2}:
            raise ConfigError("period.labels values must be 1 or 2")
    caliper = matching.get("caliper")
    return AnalysisConfig(
        input=raw.get("input"),
        output_dir=str(raw.get("output_dir", ".")),
        seed=int(raw.get("seed", 0)),
        outcome_column=outcome.get("column"),
        outcome_kind=outcome.get("kind", "continuous"),
        period_column=period.get("column", "period"),
        period_labels=labels,
        treatment_column=treatment.get("column", "z"),
        id_column=ident.get("column"),
        covariates=_parse_covariates(raw.get("covariates", {}) or {}),
        objective=matching.get("objective", "maximize_pairs"),
        caliper=None if caliper is None else float(caliper),
        test=raw.get("test", "signed_rank"),
        alpha=float(raw.get("alpha", 0.05)),
        tau0=float(raw.get("tau0", 0.0)),
        sided=raw.get("sided", "one_sided_greater"),
        gammas=tuple(sorted(_as_float_tuple(raw.get("gammas", [1.0]), "gammas"))),
        amplification_lambdas=_as_float_tuple(
            raw.get("amplification_lambdas", []), "amplification_lambdas"
        ),
        simulate=raw.get("simulate"),
    )


_OVERRIDABLE = (
    "input",
    "output_dir",
    "seed",
    "test",
    "alpha",
    "tau0",
    "sided",
    "objective",
    "caliper",
)


def _config_with_overrides(args) -> AnalysisConfig:
    cfg = load_config(args.config)
    updates = {}
    for key in _OVERRIDABLE:
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    if getattr(args, "gammas", None) is not None:
        updates["gammas"] = tuple(sorted(_as_float_tuple(args.gammas, "gammas")))
    if getattr(args, "lambdas", None) is not None:
        updates["amplification_lambdas"] = _as_float_tuple(args.lambdas, "lambdas")
    return replace(cfg, **updates) if updates else cfg


# ---------------------------------------------------------------------------
# CSV ingestion


def _require_columns(fieldnames, needed: list[str], path: str) -> None:
    present = set(fieldnames or [])
    for col in needed:
        if col not in present:
            raise ConfigError(f"{path}: missing column {col!r}")


def read_unit_records(path: str, cfg: AnalysisConfig) -> list[UnitRecord]:
    """Parse the input CSV into UnitRecords; errors carry line numbers."""
    if cfg.outcome_column is None:
        raise ConfigError("outcome.column is required")
    p = Path(path)
    if not p.exists():
        raise DataError(f"input file not found: {path}")
    records = []
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = [cfg.outcome_column, cfg.period_column, cfg.treatment_column]
        if cfg.id_column:
            needed.append(cfg.id_column)
        needed.extend(cfg.covariates)
        _require_columns(reader.fieldnames, needed, path)
        for lineno, row in enumerate(reader, start=2):
            records.append(_parse_row(row, lineno, cfg))
    if not records:
        raise DataError(f"{path}: no data rows")
    return records


def _parse_row(row: dict, lineno: int, cfg: AnalysisConfig) -> UnitRecord:
    def fail(msg: str):
        raise DataError(f"line {lineno}: {msg}") from None

    raw_period = row[cfg.period_column]
    if cfg.period_labels is not None:
        if str(raw_period) not in cfg.period_labels:
            fail(f"period value {raw_period!r} not in period.labels")
        period = cfg.period_labels[str(raw_period)]
    else:
        try:
            period = int(raw_period)
        except (TypeError, ValueError):
            fail(f"period value {raw_period!r} is not an integer (declare period.labels?)")
        if period not in (1, 2):
            fail(f"period must be 1 or 2, got {period}")
    if row[cfg.treatment_column] not in ("0", "1", 0, 1):
        fail(f"treatment value {row[cfg.treatment_column]!r} must be 0 or 1")
    z = int(row[cfg.treatment_column])
    try:
        outcome = float(row[cfg.outcome_column])
    except (TypeError, ValueError):
        fail(f"outcome value {row[cfg.outcome_column]!r} is not a number")
    covariates = {}
    for name, role in cfg.covariates.items():
        value = row[name]
        if role.role == "continuous":
            try:
                covariates[name] = float(value)
            except (TypeError, ValueError):
                fail(f"covariate {name!r} value {value!r} is not a number")
        else:
            covariates[name] = str(value)
    unit_id = row[cfg.id_column] if cfg.id_column else f"row{lineno}"
    try:
        return UnitRecord(id=unit_id, period=period, z=z, outcome=outcome, covariates=covariates)
    except DidsensError as exc:
        fail(str(exc))


def _balance_spec(cfg: AnalysisConfig) -> BalanceSpec:
    continuous = {}
    nominal = {}
    for name, role in cfg.covariates.items():
        if role.role == "continuous":
            continuous[name] = role.threshold if role.threshold is not None else math.inf
        else:
            nominal[name] = NominalRule(kind=role.balance, k=role.k)
    return BalanceSpec(
        continuous=continuous, nominal=nominal, caliper=cfg.caliper, objective=cfg.objective
    )


# ---------------------------------------------------------------------------
# artifact writers


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_pairs_csv(path: Path, pairs: list[MatchedPair]) -> None:
    rows = [
        [i, p.treated.id, p.control.id, repr(float(p.treated.outcome)), repr(float(p.control.outcome))]
        for i, p in enumerate(pairs)
    ]
    _write_csv(path, ["pair", "treated_id", "control_id", "treated_outcome", "control_outcome"], rows)


def _write_quadruples_csv(path: Path, quads: QuadrupleSet) -> None:
    header = [
        "quad",
        "pre_treated_id",
        "pre_control_id",
        "post_treated_id",
        "post_control_id",
        "pre_treated_outcome",
        "pre_control_outcome",
        "post_treated_outcome",
        "post_control_outcome",
        "d",
    ]
    rows = []
    for i, q in enumerate(quads):
        rows.append(
            [
                i,
                q.pre.treated.id,
                q.pre.control.id,
                q.post.treated.id,
                q.post.control.id,
                repr(float(q.pre.treated.outcome)),
                repr(float(q.pre.control.outcome)),
                repr(float(q.post.treated.outcome)),
                repr(float(q.post.control.outcome)),
                repr(float(q.d)),
            ]
        )
    _write_csv(path, header, rows)


def _write_balance_csv(path: Path, reports: list) -> None:
    header = [
        "stage",
        "covariate",
        "std_diff_before",
        "p_before",
        "std_diff_after",
        "p_after",
        "note",
        "n_treated_before",
        "n_control_before",
        "n_matched",
    ]
    rows = []
    for rep in reports:
        for r in rep.rows:
            rows.append(
                [
                    rep.stage,
                    r.covariate,
                    repr(float(r.std_diff_before)),
                    repr(float(r.p_before)),
                    repr(float(r.std_diff_after)),
                    repr(float(r.p_after)),
                    r.note,
                    rep.n_treated_before,
                    rep.n_control_before,
                    rep.n_matched,
                ]
            )
    _write_csv(path, header, rows)


def read_quadruples_csv(path: str, outcome_kind: str) -> QuadrupleSet:
    """Rebuild a QuadrupleSet from a quadruples.csv written by cmd_match."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"quadruples file not found: {path}")
    quads = []
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(
            reader.fieldnames,
            ["pre_treated_id", "pre_control_id", "post_treated_id", "post_control_id",
             "pre_treated_outcome", "pre_control_outcome", "post_treated_outcome",
             "post_control_outcome"],
            path,
        )
        for lineno, row in enumerate(reader, start=2):
            try:
                members = {
                    key: float(row[f"{key}_outcome"]) for key in
                    ("pre_treated", "pre_control", "post_treated", "post_control")
                }
            except (TypeError, ValueError):
                raise DataError(f"line {lineno}: outcome values must be numbers") from None
            pre = MatchedPair(
                treated=UnitRecord(row["pre_treated_id"], 1, 1, members["pre_treated"], {}),
                control=UnitRecord(row["pre_control_id"], 1, 0, members["pre_control"], {}),
            )
            post = MatchedPair(
                treated=UnitRecord(row["post_treated_id"], 2, 1, members["post_treated"], {}),
                control=UnitRecord(row["post_control_id"], 2, 0, members["post_control"], {}),
            )
            quads.append(build_quadruple(pre, post))
    if not quads:
        raise DataError(f"{path}: no quadruples")
    return QuadrupleSet(quads=tuple(quads), outcome_kind=outcome_kind)


def _write_json_report(path: Path, report: dict) -> None:
    path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


def _sig4(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.4g}"


# ---------------------------------------------------------------------------
# commands


def cmd_match(cfg: AnalysisConfig) -> int:
    if cfg.input is None:
        raise ConfigError("input is required for match")
    records = read_unit_records(cfg.input, cfg)
    check = validate_dataset(records, outcome_kind=cfg.outcome_kind)
    if not check.ok:
        shown = "; ".join(check.problems[:5])
        more = len(check.problems) - 5
        if more > 0:
            shown += f"; and {more} more"
        raise DataError(f"invalid dataset: {shown}")
    spec = _balance_spec(cfg)
    pre = [r for r in records if r.period == 1]
    post = [r for r in records if r.period == 2]
    pre_pairs = within_period_match(pre, spec, seed=cfg.seed)
    post_pairs = within_period_match(post, spec, seed=cfg.seed)
    quads, details = cross_period_match(
        pre_pairs,
        post_pairs,
        spec,
        seed=cfg.seed,
        outcome_kind=cfg.outcome_kind,
        pair_spec=spec,
        return_details=True,
    )
    reports = [
        balance_report(pre, pre_pairs, seed=cfg.seed, stage="period1"),
        balance_report(post, post_pairs, seed=cfg.seed, stage="period2"),
        cross_balance_report(
            details.pre_summaries, details.post_summaries, details.index_pairs,
            seed=cfg.seed, stage="cross",
        ),
    ]
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_pairs_csv(outdir / "pairs_pre.csv", pre_pairs)
    _write_pairs_csv(outdir / "pairs_post.csv", post_pairs)
    _write_quadruples_csv(outdir / "quadruples.csv", quads)
    _write_balance_csv(outdir / "balance.csv", reports)
    print(f"period 1: {len(pre_pairs)} pairs from {len(pre)} records")
    print(f"period 2: {len(post_pairs)} pairs from {len(post)} records")
    print(f"quadruples: {len(quads.quads)}")
    for rep in reports:
        finite = [abs(r.std_diff_after) for r in rep.rows if math.isfinite(r.std_diff_after)]
        worst = max(finite) if finite else float("nan")
        print(f"balance[{rep.stage}]: worst |std diff| after = {_sig4(worst)}")
    print(f"wrote pairs_pre.csv pairs_post.csv quadruples.csv balance.csv in {outdir}")
    return 0


def _check_kind_test(cfg: AnalysisConfig) -> None:
    if cfg.outcome_kind == "binary" and cfg.test != "mcnemar":
        raise ConfigError("binary outcomes require test: mcnemar")
    if cfg.outcome_kind == "continuous" and cfg.test == "mcnemar":
        raise ConfigError("test mcnemar requires outcome.kind: binary")


def _score_for(cfg: AnalysisConfig) -> ScoreFunction:
    return ScoreFunction.wilcoxon() if cfg.test == "signed_rank" else ScoreFunction.absolute_value()


def _eligibility_or_error(quads: QuadrupleSet):
    rep = eligibility_report(quads)
    if not rep.eligible:
        histogram = ", ".join(f"{k}={v}" for k, v in sorted(rep.reasons.items()))
        raise DataError(
            f"no informative quadruples among {rep.n_total} "
            f"(exclusion counts, not mutually exclusive: {histogram})"
        )
    return rep


def cmd_test(cfg: AnalysisConfig, quad_path: str) -> int:
    _check_kind_test(cfg)
    quads = read_quadruples_csv(quad_path, cfg.outcome_kind)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "test",
        "outcome_kind": cfg.outcome_kind,
        "test": cfg.test,
        "sided": cfg.sided,
        "tau0": cfg.tau0,
        "n_quadruples": len(quads.quads),
    }
    if cfg.outcome_kind == "binary":
        if cfg.tau0 != 0.0:
            raise ConfigError("binary tests address the sharp null; tau0 must be 0")
        elig = _eligibility_or_error(quads)
        res = mcnemar_sensitivity_pvalue(list(elig.eligible), gamma=1.0, sided=cfg.sided)
        report["eligibility"] = {
            "n_total": elig.n_total,
            "n_eligible": len(elig.eligible),
            "reasons": dict(sorted(elig.reasons.items())),
        }
    elif cfg.test == "sate":
        res = sate_pvalue(quads, tau0=cfg.tau0, gamma=1.0, sided=cfg.sided)
    else:
        res = randomization_pvalue(quads, tau0=cfg.tau0, score=_score_for(cfg), sided=cfg.sided)
    report.update(
        {
            "statistic": res.statistic,
            "p_value": res.p_value,
            "method": res.method,
            "n_effective": res.n_effective,
        }
    )
    if cfg.outcome_kind == "continuous" and cfg.test in ("signed_rank", "permutational_t"):
        score = _score_for(cfg)
        lo, hi = invert_ci(quads, alpha=cfg.alpha, score=score)
        report["hl_estimate"] = hodges_lehmann(quads)
        report["ci"] = {"lower": _json_num(lo), "upper": _json_num(hi), "alpha": cfg.alpha}
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json_report(outdir / "test_report.json", report)
    print(f"test: {cfg.test} ({cfg.sided}), n = {report['n_quadruples']}")
    if "eligibility" in report:
        e = report["eligibility"]
        print(f"informative quadruples: {e['n_eligible']} of {e['n_total']}")
    print(f"statistic = {_sig4(res.statistic)}")
    print(f"p-value at tau0 = {_sig4(cfg.tau0)}: {_sig4(res.p_value)}")
    if "hl_estimate" in report:
        ci = report["ci"]
        lo_s = "-inf" if ci["lower"] is None else _sig4(ci["lower"])
        hi_s = "inf" if ci["upper"] is None else _sig4(ci["upper"])
        print(
            f"shift estimate = {_sig4(report['hl_estimate'])}, "
            f"{(1 - cfg.alpha) * 100:.4g}% CI [{lo_s}, {hi_s}]"
        )
    print(f"wrote {outdir / 'test_report.json'}")
    return 0


def _json_num(x: float):
    """JSON-safe number: infinities become null."""
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _amplification_rows(gamma: float, lambdas) -> list[dict]:
    rows = []
    for lam in lambdas:
        if gamma > 1.0 and lam <= gamma:
            continue  # outside the curve's domain (asymptote at lam = gamma)
        rows.append(
            {
                "lam": lam,
                "delta_did": amplify_did(gamma, lam),
                "delta_paired": amplify_paired(gamma, lam) if lam > gamma or gamma == 1.0 else None,
            }
        )
    return rows


def cmd_sens(cfg: AnalysisConfig, quad_path: str) -> int:
    _check_kind_test(cfg)
    quads = read_quadruples_csv(quad_path, cfg.outcome_kind)
    binary = cfg.outcome_kind == "binary"
    if binary and cfg.tau0 != 0.0:
        raise ConfigError("binary tests address the sharp null; tau0 must be 0")
    elig = _eligibility_or_error(quads) if binary else None
    score = None if binary or cfg.test == "sate" else _score_for(cfg)
    grid = []
    for gamma in cfg.gammas:
        if binary:
            res = mcnemar_sensitivity_pvalue(list(elig.eligible), gamma=gamma, sided=cfg.sided)
            bounds = (None, None)
        elif cfg.test == "sate":
            res = sate_pvalue(quads, tau0=cfg.tau0, gamma=gamma, sided=cfg.sided)
            bounds = (None, None)
        else:
            res = worst_case_pvalue(quads, tau0=cfg.tau0, score=score, gamma=gamma, sided=cfg.sided)
            bounds = estimate_bounds(quads, gamma=gamma, score=score)
        grid.append(
            {
                "gamma": gamma,
                "gamma_squared": gamma * gamma,
                "p_upper": res.p_value,
                "bound_lower": _json_num(bounds[0]) if bounds[0] is not None else None,
                "bound_upper": _json_num(bounds[1]) if bounds[1] is not None else None,
                "amplification": _amplification_rows(gamma, cfg.amplification_lambdas),
            }
        )
    if binary or cfg.test != "sate":
        cp = changepoint_gamma(quads, tau0=cfg.tau0, score=score, alpha=cfg.alpha, sided=cfg.sided)
    else:

        def sate_p(g: float) -> float:
            return sate_pvalue(quads, tau0=cfg.tau0, gamma=g, sided=cfg.sided).p_value

        cp = _changepoint_by_probe(sate_p, cfg.alpha)
    if cp is None:
        changepoint = None
    else:
        changepoint = {
            "gamma": _json_num(cp),
            "gamma_squared": _json_num(cp * cp) if math.isfinite(cp) else None,
            "unbounded": not math.isfinite(cp),
        }
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "sens",
        "outcome_kind": cfg.outcome_kind,
        "test": cfg.test,
        "sided": cfg.sided,
        "tau0": cfg.tau0,
        "alpha": cfg.alpha,
        "n_quadruples": len(quads.quads),
        "grid": grid,
        "changepoint": changepoint,
    }
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json_report(outdir / "sens_report.json", report)
    print(f"sensitivity analysis: {cfg.test} ({cfg.sided}), n = {report['n_quadruples']}")
    header = "gamma    gamma^2  p_upper"
    if not binary and cfg.test != "sate":
        header += "  est_lower  est_upper"
    print(header)
    for row in grid:
        line = f"{row['gamma']:<8.4g} {row['gamma_squared']:<8.4g} {_sig4(row['p_upper'])}"
        if not binary and cfg.test != "sate":
            line += f"    {_sig4(row['bound_lower'])}      {_sig4(row['bound_upper'])}"
        print(line)
    if changepoint is None:
        print(f"changepoint: none (p > {_sig4(cfg.alpha)} already at gamma = 1)")
    elif changepoint["unbounded"]:
        print("changepoint: unbounded (significant at every probed gamma)")
    else:
        print(
            f"changepoint gamma* = {_sig4(changepoint['gamma'])} "
            f"(internal gamma^2 = {_sig4(changepoint['gamma_squared'])})"
        )
    for row in grid:
        for amp in row["amplification"]:
            paired = _sig4(amp["delta_paired"]) if amp["delta_paired"] is not None else "-"
            print(
                f"amplify gamma={_sig4(row['gamma'])}: lambda={_sig4(amp['lam'])} -> "
                f"delta={_sig4(amp['delta_did'])} (paired design: {paired})"
            )
    print(f"wrote {outdir / 'sens_report.json'}")
    return 0


def _changepoint_by_probe(pval, alpha: float, tol: float = 1e-4) -> float | None:
    """Changepoint search for monotone worst-case p-value functions."""
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


def cmd_amplify(gamma: float, lambdas, json_path: str | None) -> int:
    if gamma < 1.0:
        raise ConfigError(f"gamma must be >= 1, got {gamma}")
    if not lambdas:
        raise ConfigError("at least one lambda is required")
    for lam in lambdas:
        if gamma > 1.0 and lam <= gamma:
            raise ConfigError(
                f"lambda must exceed gamma (curve has a vertical asymptote at lambda = gamma); "
                f"got lambda = {lam} with gamma = {gamma}"
            )
    rows = _amplification_rows(gamma, lambdas)
    print(f"amplification of gamma = {_sig4(gamma)} (did gamma^2 = {_sig4(gamma * gamma)})")
    print("lambda   delta_did  delta_paired")
    for row in rows:
        print(f"{row['lam']:<8.4g} {_sig4(row['delta_did']):<10} {_sig4(row['delta_paired'])}")
    if json_path:
        report = {
            "schema_version": SCHEMA_VERSION,
            "command": "amplify",
            "gamma": gamma,
            "gamma_squared": gamma * gamma,
            "rows": rows,
        }
        _write_json_report(Path(json_path), report)
        print(f"wrote {json_path}")
    return 0


_DESIGN_KEYS = {"continuous": ContinuousDesign, "binary": BinaryDesign}


def cmd_simulate(cfg: AnalysisConfig) -> int:
    section = cfg.simulate
    if not section:
        raise ConfigError("config needs a 'simulate' section")
    kind = section.get("design", "continuous")
    if kind not in _DESIGN_KEYS:
        raise ConfigError(f"simulate.design must be one of {tuple(_DESIGN_KEYS)}")
    reps = int(section.get("reps", 0))
    if reps < 1:
        raise ConfigError("simulate.reps must be >= 1")
    params = section.get("params", {}) or {}
    plan_params = section.get("plan", {}) or {}
    try:
        design = _DESIGN_KEYS[kind](**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"simulate.params: {exc}") from None
    try:
        plan = AnalysisPlan(**plan_params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"simulate.plan: {exc}") from None
    result = level_power_study(design, plan, reps=reps, seed=cfg.seed)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "simulation.csv"
    rep_cols = []
    for row in result.rows:
        for key in row:
            if key not in rep_cols:
                rep_cols.append(key)
    sum_cols = [f"summary_{k}" for k in result.summary]
    rows = []
    for row in result.rows:
        rows.append([_csv_cell(row.get(c)) for c in rep_cols] + [""] * len(sum_cols))
    rows.append(
        ["summary"] + [""] * (len(rep_cols) - 1) + [_csv_cell(v) for v in result.summary.values()]
    )
    _write_csv(path, rep_cols + sum_cols, rows)
    print(f"{reps} replications of {kind} design, test = {plan.test}, gamma = {_sig4(plan.gamma)}")
    print(f"rejection rate at alpha = {_sig4(plan.alpha)}: {_sig4(result.summary['rejection_rate'])}")
    print(f"wrote {path}")
    return 0


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return v


def cmd_patterns(outdir: str) -> int:
    paths = write_pattern_svgs(outdir)
    print(f"wrote {len(paths)} schematic panels in {Path(outdir)}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _add_config_arg(p) -> None:
    p.add_argument("--config", required=True, help="YAML config file")


def _add_common_overrides(p) -> None:
    p.add_argument("--input", help="input CSV (overrides config)")
    p.add_argument("--output-dir", dest="output_dir", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="seed (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="didsens",
        description="Matched differences-in-differences analysis with sensitivity bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="three-stage matching into quadruples")
    _add_config_arg(p)
    _add_common_overrides(p)
    p.add_argument("--objective", choices=("maximize_pairs", "minimize_total_distance"))
    p.add_argument("--caliper", type=float)

    p = sub.add_parser("test", help="randomization test on matched quadruples")
    _add_config_arg(p)
    _add_common_overrides(p)
    p.add_argument("--quadruples", help="quadruples.csv from match (default: <output_dir>/quadruples.csv)")
    p.add_argument("--test", choices=TESTS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tau0", type=float)
    p.add_argument("--sided", choices=("one_sided_greater", "one_sided_less", "two_sided"))

    p = sub.add_parser("sens", help="worst-case p-values over a gamma grid")
    _add_config_arg(p)
    _add_common_overrides(p)
    p.add_argument("--quadruples")
    p.add_argument("--test", choices=TESTS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tau0", type=float)
    p.add_argument("--sided", choices=("one_sided_greater", "one_sided_less", "two_sided"))
    p.add_argument("--gammas", help="comma-separated gamma grid (overrides config)")
    p.add_argument("--lambdas", help="comma-separated lambdas for amplification tables")

    p = sub.add_parser("amplify", help="gamma <-> (lambda, delta) amplification table")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--lambdas", required=True, help="comma-separated lambda values")
    p.add_argument("--json", dest="json_path", help="also write a JSON report here")

    p = sub.add_parser("simulate", help="Monte Carlo level/power study")
    _add_config_arg(p)
    _add_common_overrides(p)

    p = sub.add_parser("patterns", help="schematic before/after response panels")
    p.add_argument("--outdir", default=".", help="directory for the SVG files")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "amplify":
            return cmd_amplify(args.gamma, _as_float_tuple(args.lambdas, "lambdas"), args.json_path)
        if args.command == "patterns":
            return cmd_patterns(args.outdir)
        cfg = _config_with_overrides(args)
        if args.command == "match":
            return cmd_match(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        quad_path = getattr(args, "quadruples", None) or str(Path(cfg.output_dir) / "quadruples.csv")
        if args.command == "test":
            return cmd_test(cfg, quad_path)
        if args.command == "sens":
            return cmd_sens(cfg, quad_path)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleMatchError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
