"""Robust effect size index (RESI) estimation for regression models.

The package covers the full pipeline: CSV ingestion, model formulas and
design matrices, least squares / GLM / nonlinear least squares fitting,
robust sandwich covariances, Wald tests and ANOVA tables, conversion of
test statistics to the effect size index S, bootstrap confidence
intervals, and report rendering.
"""

from .bootstrap import (
    BootSpec,
    BootstrapResult,
    percentile_ci,
    reextract,
    replicate_rng,
    run_bootstrap,
    write_replicates_csv,
)
from .convert import Rsq2S, S2Rsq, S2d, S2fsq, d2S, fsq2S
from .covariance import (
    CovarianceEstimate,
    vcov_by_name,
    vcov_hc,
    vcov_naive,
    vcov_nls_sandwich,
)
from .errors import (
    BootstrapError,
    ConvergenceError,
    DataError,
    DesignError,
    FitError,
    FormulaError,
    InferenceError,
    ResiError,
    SingularGradientError,
)
from .estimators import chisq2S, f2S, interpret, t2S, t2S_alt, z2S, z2S_alt
from .formula import (
    DesignMatrix,
    ExpressionAST,
    FormulaAST,
    Term,
    build_design,
    evaluate_expression,
    parse_formula,
    parse_nls_expression,
)
from .frames import Column, DataFrame, frame_from_dict, read_csv
from .inference import (
    WaldResult,
    anova_table,
    coef_tests,
    multi_wald,
    overall_test,
    wald_p_value,
)
from .models import FittedModel, fit_glm, fit_nls, fit_ols
from .pipeline import Analysis, ModelSpec
from .plots import render_forest_svg
from .report import (
    AnovaRow,
    CoefficientRow,
    OverallRow,
    ResiReport,
    render_json,
    render_text,
    resi,
    resi_pe,
)

__version__ = "0.1.0"

__all__ = [
    "Analysis",
    "AnovaRow",
    "BootSpec",
    "BootstrapError",
    "BootstrapResult",
    "CoefficientRow",
    "Column",
    "ConvergenceError",
    "CovarianceEstimate",
    "DataError",
    "DataFrame",
    "DesignError",
    "DesignMatrix",
    "ExpressionAST",
    "FitError",
    "FittedModel",
    "FormulaAST",
    "FormulaError",
    "InferenceError",
    "ModelSpec",
    "OverallRow",
    "ResiError",
    "ResiReport",
    "Rsq2S",
    "S2Rsq",
    "S2d",
    "S2fsq",
    "SingularGradientError",
    "Term",
    "WaldResult",
    "anova_table",
    "build_design",
    "chisq2S",
    "coef_tests",
    "d2S",
    "evaluate_expression",
    "f2S",
    "fit_glm",
    "fit_nls",
    "fit_ols",
    "frame_from_dict",
    "fsq2S",
    "interpret",
    "multi_wald",
    "overall_test",
    "parse_formula",
    "parse_nls_expression",
    "percentile_ci",
    "read_csv",
    "reextract",
    "render_forest_svg",
    "render_json",
    "render_text",
    "replicate_rng",
    "resi",
    "resi_pe",
    "run_bootstrap",
    "t2S",
    "t2S_alt",
    "vcov_by_name",
    "vcov_hc",
    "vcov_naive",
    "vcov_nls_sandwich",
    "wald_p_value",
    "write_replicates_csv",
    "z2S",
    "z2S_alt",
]
