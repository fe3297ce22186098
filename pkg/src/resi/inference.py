"""Wald tests: per-coefficient tests, multi-parameter tests, ANOVA
tables, and full-versus-reduced model comparisons.

Least squares models report t and F statistics with the residual
degrees of freedom; generalized linear and nonlinear models report Z
and Chi-square statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .covariance import CovarianceEstimate
from .errors import InferenceError
from .formula import Term
from .models import FittedModel

Z, T, CHISQ, F = "z", "t", "chisq", "f"


@dataclass(frozen=True)
class WaldResult:
    statistic: float
    kind: str            # z | t | chisq | f
    df1: int             # number of tested parameters
    df2: int | None      # residual degrees of freedom (t/f only)
    p_value: float


def wald_p_value(statistic: float, kind: str, df1: int, df2: int | None) -> float:
    """Two-sided p-value for z/t statistics, upper tail for chisq/F."""
    if kind == Z:
        return 2.0 * float(stats.norm.sf(abs(statistic)))
    if kind == T:
        return 2.0 * float(stats.t.sf(abs(statistic), df2))
    if kind == CHISQ:
        return float(stats.chi2.sf(statistic, df1))
    return float(stats.f.sf(statistic, df1, df2))


def _make_result(statistic: float, kind: str, df1: int, df2: int | None) -> WaldResult:
    return WaldResult(statistic, kind, df1, df2, wald_p_value(statistic, kind, df1, df2))


def _quadratic_form(beta: np.ndarray, cov: np.ndarray, columns) -> float:
    ix = np.asarray(columns, dtype=int)
    sub = cov[np.ix_(ix, ix)]
    b = beta[ix]
    try:
        solved = np.linalg.solve(sub, b)
    except np.linalg.LinAlgError:
        raise InferenceError("covariance subblock is singular") from None
    w = float(b @ solved)
    if not np.isfinite(w):
        raise InferenceError("covariance subblock is singular")
    return max(w, 0.0)


def _marginal_wald(beta: np.ndarray, cov: np.ndarray, term_cols, relative_cols) -> float:
    """Type II Wald statistic for a term with higher-order relatives.

    Tests the part of the term's hypothesis space that is orthogonal,
    in the covariance inner product, to its relatives: rows c of the
    combined selector with c' Cov[term+relatives, relatives] = 0. This
    is the construction behind Wald-based Type II ANOVA with a supplied
    covariance, computed entirely from the full model.
    """
    rows = list(term_cols) + list(relative_cols)
    t = len(term_cols)
    selector = np.eye(beta.size)[rows]
    cross = cov[np.ix_(rows, list(relative_cols))]
    q, _ = np.linalg.qr(cross, mode="complete")
    hyp = q[:, -t:].T @ selector
    mid = hyp @ cov @ hyp.T
    rhs = hyp @ beta
    try:
        w = float(rhs @ np.linalg.solve(mid, rhs))
    except np.linalg.LinAlgError:
        raise InferenceError("covariance subblock is singular") from None
    if not np.isfinite(w):
        raise InferenceError("covariance subblock is singular")
    return max(w, 0.0)


def coef_tests(model: FittedModel, vcov: CovarianceEstimate):
    """Per-coefficient Wald tests.

    Returns a list of ``(label, estimate, standard error, WaldResult)``
    tuples, one per model coefficient.
    """
    se = vcov.standard_errors()
    if se.shape[0] != model.m:
        raise InferenceError("covariance dimension does not match the model")
    kind = Z if model.kind == "glm" else T
    df2 = None if kind == Z else model.n - model.m
    out = []
    for j, label in enumerate(model.labels):
        if se[j] == 0.0:
            raise InferenceError(f"zero standard error for coefficient {label!r}")
        statistic = float(model.coefficients[j] / se[j])
        out.append((label, float(model.coefficients[j]), float(se[j]),
                    _make_result(statistic, kind, 1, df2)))
    return out


def multi_wald(model: FittedModel, vcov: CovarianceEstimate, columns) -> WaldResult:
    """Joint Wald test that the given coefficients are all zero.

    Least squares models yield an F statistic (the quadratic form
    divided by the number of tested parameters); other models yield a
    Chi-square statistic.
    """
    columns = list(columns)
    if not columns:
        raise InferenceError("empty column set")
    if min(columns) < 0 or max(columns) >= model.m:
        raise InferenceError("column index out of range")
    w = _quadratic_form(model.coefficients, vcov.matrix, columns)
    df1 = len(columns)
    if model.kind == "ols":
        return _make_result(w / df1, F, df1, model.n - model.m)
    return _make_result(w, CHISQ, df1, None)


def _relatives(term: Term, terms) -> list[Term]:
    """Higher-order terms that strictly contain *term*."""
    return [u for u in terms if term.key() < u.key()]


def anova_table(model: FittedModel, vcov: CovarianceEstimate, type: int = 2):
    """Term-wise Wald tests (Type II or Type III).

    Type III tests each term's own columns in the full model; it
    includes an intercept row. Type II respects marginality: a term
    with higher-order relatives is tested on the component of its
    hypothesis orthogonal (under the supplied covariance) to those
    relatives; terms without relatives reduce to their Type III test.
    F statistics are referred to the model's residual degrees of
    freedom. Returns a list of ``(term label, WaldResult)`` rows.
    """
    if type not in (2, 3):
        raise InferenceError(f"ANOVA type must be 2 or 3, got {type!r}")
    if model.design is None:
        raise InferenceError("ANOVA requires a design-backed (ols/glm) model")
    design = model.design
    if not design.terms:
        raise InferenceError("model has no non-intercept terms")
    rdf_full = model.n - model.m
    is_ols = model.kind == "ols"

    def wrap(w: float, df1: int) -> WaldResult:
        if is_ols:
            return _make_result(w / df1, F, df1, rdf_full)
        return _make_result(w, CHISQ, df1, None)

    rows: list[tuple[str, WaldResult]] = []
    if type == 3:
        if design.has_intercept:
            rows.append(("(Intercept)",
                         wrap(_quadratic_form(model.coefficients, vcov.matrix, [0]), 1)))
        for term in design.terms:
            cols = design.columns_of(term)
            rows.append((term.label(),
                         wrap(_quadratic_form(model.coefficients, vcov.matrix, cols), len(cols))))
        return rows

    for term in design.terms:
        cols = design.columns_of(term)
        relatives = _relatives(term, design.terms)
        if not relatives:
            w = _quadratic_form(model.coefficients, vcov.matrix, cols)
        else:
            rel_cols = [c for u in relatives for c in design.columns_of(u)]
            w = _marginal_wald(model.coefficients, vcov.matrix, cols, rel_cols)
        rows.append((term.label(), wrap(w, len(cols))))
    return rows


def overall_test(full: FittedModel, reduced: FittedModel,
                 vcov: CovarianceEstimate) -> WaldResult:
    """Wald test of the full model against a nested reduced model.

    For nonlinear models the parameters of the two fits do not share a
    common basis, so the test covers every full-model parameter (the
    reduced fit only supplies its residual degrees of freedom).
    """
    if full.kind == "nls":
        if reduced is not None and reduced.m >= full.m:
            raise InferenceError("reduced model must have fewer parameters")
        columns = list(range(full.m))
        w = _quadratic_form(full.coefficients, vcov.matrix, columns)
        return _make_result(w, CHISQ, full.m, None)

    if full.n != reduced.n or not np.array_equal(full.y, reduced.y):
        raise InferenceError("full and reduced models must use the same response rows")
    full_labels = set(full.labels)
    reduced_labels = set(reduced.labels)
    if not reduced_labels <= full_labels:
        raise InferenceError("models are not nested (reduced has extra columns)")
    tested = [j for j, label in enumerate(full.labels) if label not in reduced_labels]
    if not tested:
        raise InferenceError("no tested parameters (models are identical)")
    w = _quadratic_form(full.coefficients, vcov.matrix, tested)
    df1 = len(tested)
    if full.kind == "ols":
        return _make_result(w / df1, F, df1, full.n - full.m)
    return _make_result(w, CHISQ, df1, None)
