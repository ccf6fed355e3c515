"""Matched differences-in-differences analysis with sensitivity bounds.

The package covers the full pipeline: three-stage optimal matching into
quadruples (a pre-period pair joined to a post-period pair), randomization
inference on the quadruple contrasts, worst-case sensitivity analysis in
one or two bias parameters with an amplification map between them, a
binary-outcome route through McNemar-style machinery, and Monte Carlo
generators for validating all of it.
"""

from .binary import (
    EligibilityReport,
    EligibleQuadruple,
    binary_two_param_bounds,
    eligibility_report,
    eligible_quadruples,
    mcnemar_sensitivity_pvalue,
    mcnemar_statistic,
)
from .core import (
    MatchedPair,
    Quadruple,
    QuadrupleSet,
    UnitRecord,
    ValidationReport,
    build_quadruple,
    did_contrast,
    validate_dataset,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    DidsensError,
    InfeasibleMatchError,
    StructuralError,
)
from .inference import (
    EstimateResult,
    ScoreFunction,
    TestResult,
    hodges_lehmann,
    invert_ci,
    point_and_interval,
    randomization_pvalue,
    sign_score_statistic,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .matching import (
    BalanceReport,
    BalanceRow,
    BalanceSpec,
    CrossMatchDetails,
    NominalRule,
    PairSummary,
    balance_report,
    cross_balance_report,
    cross_period_match,
    pair_summaries,
    pooled_sd,
    standardized_difference,
    within_period_match,
)
from .oracles import (
    ExactNullDistribution,
    binomial_tail_exact,
    brute_force_bound,
    exact_null_distribution,
    mcnemar_tail_exact,
)
from .sensitivity import (
    SignProbabilityBounds,
    amplify_did,
    amplify_paired,
    changepoint_gamma,
    did_gamma_from,
    estimate_bounds,
    one_param_bounds,
    paired_gamma_from,
    sate_pvalue,
    two_param_bounds,
    worst_case_pvalue,
)
from .simulate import (
    AnalysisPlan,
    BinaryDesign,
    ContinuousDesign,
    StudyResult,
    generate_binary,
    generate_continuous,
    level_power_study,
    quadruples_from_records,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisPlan",
    "BalanceReport",
    "BalanceRow",
    "BalanceSpec",
    "BinaryDesign",
    "ConfigError",
    "ContinuousDesign",
    "CrossMatchDetails",
    "DataError",
    "DegenerateDataError",
    "DidsensError",
    "EligibilityReport",
    "EligibleQuadruple",
    "EstimateResult",
    "ExactNullDistribution",
    "InfeasibleMatchError",
    "KERNEL_BACKEND",
    "MatchedPair",
    "NominalRule",
    "PairSummary",
    "Quadruple",
    "QuadrupleSet",
    "ScoreFunction",
    "SignProbabilityBounds",
    "StructuralError",
    "StudyResult",
    "TestResult",
    "UnitRecord",
    "ValidationReport",
    "amplify_did",
    "amplify_paired",
    "balance_report",
    "binary_two_param_bounds",
    "binomial_tail_exact",
    "brute_force_bound",
    "build_quadruple",
    "changepoint_gamma",
    "cross_balance_report",
    "cross_period_match",
    "did_contrast",
    "did_gamma_from",
    "eligibility_report",
    "eligible_quadruples",
    "estimate_bounds",
    "exact_null_distribution",
    "generate_binary",
    "generate_continuous",
    "hodges_lehmann",
    "invert_ci",
    "level_power_study",
    "mcnemar_sensitivity_pvalue",
    "mcnemar_statistic",
    "mcnemar_tail_exact",
    "one_param_bounds",
    "paired_gamma_from",
    "pair_summaries",
    "point_and_interval",
    "pooled_sd",
    "quadruples_from_records",
    "randomization_pvalue",
    "sate_pvalue",
    "sign_score_statistic",
    "standardized_difference",
    "two_param_bounds",
    "validate_dataset",
    "within_period_match",
    "worst_case_pvalue",
]
