"""End-to-end analysis pipeline shared by point estimation and the
bootstrap.

An :class:`Analysis` binds a model specification to a data frame once:
it drops incomplete rows, freezes the factor coding, fits the original
model, and precomputes the ANOVA test plan. Every bootstrap replicate
then reruns the identical computation on resampled rows (or reweighted
rows for the Bayesian bootstrap), so point estimates and replicate
quantities can never disagree structurally.

The replicate path computes test statistics and S values only;
p-values are added when report tables are rendered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import vcov_by_name
from .errors import ConvergenceError, FitError, InferenceError
from .estimators import chisq2S, f2S, t2S, t2S_alt, z2S, z2S_alt
from .formula import (
    build_design,
    expression_columns,
    parse_formula,
    parse_nls_expression,
)
from .frames import NUMERIC, DataFrame
from .inference import _marginal_wald, _quadratic_form
from .models import fit_glm, fit_nls_arrays, fit_ols, with_design

GLM_FAMILY_NAMES = ("gaussian", "binomial", "poisson")


@dataclass(frozen=True)
class ModelSpec:
    """What to fit: a formula plus family, and start values for nls.

    ``family`` is one of gaussian (least squares), binomial, poisson
    (generalized linear models with canonical links) or nls, in which
    case the right-hand side of ``formula`` is an arithmetic expression
    and ``start`` must name every parameter.
    """

    formula: str
    family: str = "gaussian"
    start: tuple[tuple[str, float], ...] | None = None

    @staticmethod
    def of(formula, family: str = "gaussian", start=None) -> "ModelSpec":
        if isinstance(formula, ModelSpec):
            return formula
        start_items = tuple(start.items()) if isinstance(start, dict) else start
        return ModelSpec(formula, family, start_items)

    @property
    def kind(self) -> str:
        if self.family == "nls":
            return "nls"
        return "ols" if self.family == "gaussian" else "glm"

    def start_dict(self) -> dict[str, float]:
        return dict(self.start or ())


@dataclass
class CoefStats:
    labels: tuple[str, ...]
    estimates: np.ndarray
    se: np.ndarray
    statistics: np.ndarray
    kind: str                # z | t
    df2: int | None
    s_values: np.ndarray


@dataclass
class AnovaStats:
    labels: tuple[str, ...]
    df1: tuple[int, ...]
    statistics: np.ndarray
    kind: str                # chisq | f
    df2: int | None
    s_values: np.ndarray


@dataclass
class OverallStats:
    statistic: float
    kind: str                # chisq | f
    df1: int
    df2: int | None
    res_df_full: int
    res_df_reduced: int
    s: float


@dataclass
class EvalResult:
    n: int
    m: int
    coef: CoefStats | None
    anova: AnovaStats | None
    overall: OverallStats


@dataclass
class _AnovaEntry:
    label: str
    df1: int
    columns: list[int]              # the term's columns in the full design
    relatives: list[int] | None     # columns of higher-order relatives (Type II)


class Analysis:
    """A model specification bound to a data frame, ready to evaluate."""

    def __init__(self, spec: ModelSpec, data: DataFrame, *, reduced=None,
                 vcov: str | None = None, anova_type: int = 2,
                 unbiased: bool = True, coefficients: bool = True,
                 anova: bool = True):
        spec = ModelSpec.of(spec)
        if spec.kind != "nls" and spec.family not in GLM_FAMILY_NAMES:
            raise FitError(f"unknown family {spec.family!r}")
        if anova_type not in (2, 3):
            raise InferenceError(f"ANOVA type must be 2 or 3, got {anova_type!r}")
        self.spec = spec
        self.kind = spec.kind
        self.vcov_variant = vcov if vcov is not None else (
            "robust" if spec.kind == "nls" else "HC3")
        self.robust = self.vcov_variant.lower() != "naive"
        self.anova_type = anova_type
        self.unbiased = unbiased
        self.with_coefficients = coefficients
        self.with_anova = anova and spec.kind != "nls"

        if spec.kind == "nls":
            self._prepare_nls(spec, data, reduced)
        else:
            self._prepare_linear(spec, data, reduced)

        self.point = self.evaluate()
        self.quantity_labels = self._quantity_labels(self.point)

    # -- preparation ------------------------------------------------------

    def _prepare_linear(self, spec: ModelSpec, data: DataFrame, reduced):
        formula = parse_formula(spec.formula)
        self.formula = formula
        self.design, self.y = build_design(formula, data)
        self.n = self.design.n

        if reduced is None:
            if not formula.has_intercept:
                raise InferenceError(
                    "the default intercept-only reduced model is not nested in "
                    "an intercept-free model; supply a reduced model explicitly"
                )
            reduced_labels = {"(Intercept)"}
            self.reduced_text = f"{formula.response} ~ 1"
            self.reduced_p = 1
        else:
            reduced_spec = ModelSpec.of(reduced)
            if reduced_spec.kind != spec.kind or reduced_spec.family != spec.family:
                raise InferenceError("reduced model must have the same family")
            reduced_formula = parse_formula(reduced_spec.formula)
            if reduced_formula.response != formula.response:
                raise InferenceError("reduced model must have the same response")
            reduced_design, _ = build_design(
                reduced_formula, data,
                rows=self.design.retained,
                factor_levels=self.design.factor_levels,
            )
            extra = set(reduced_design.labels) - set(self.design.labels)
            if extra:
                raise InferenceError(
                    f"models are not nested (reduced has {sorted(extra)})"
                )
            reduced_labels = set(reduced_design.labels)
            self.reduced_text = str(reduced_formula)
            self.reduced_p = reduced_design.p
        self.tested_columns = [
            j for j, label in enumerate(self.design.labels)
            if label not in reduced_labels
        ]
        if not self.tested_columns:
            raise InferenceError("no tested parameters (full equals reduced model)")

        self._anova_plan()
        self.model0 = self._fit_linear(self.design.X, self.y)

    def _anova_plan(self):
        """Resolve each term's Type II/III test to column sets up front."""
        design = self.design
        self.anova_entries: list[_AnovaEntry] = []
        if not self.with_anova:
            return
        if not design.terms:
            self.with_anova = False
            return
        if self.anova_type == 3 and design.has_intercept:
            self.anova_entries.append(_AnovaEntry("(Intercept)", 1, [0], None))
        for term in design.terms:
            cols = design.columns_of(term)
            relatives = None
            if self.anova_type == 2:
                rel_terms = [u for u in design.terms if term.key() < u.key()]
                if rel_terms:
                    relatives = [c for u in rel_terms for c in design.columns_of(u)]
            self.anova_entries.append(
                _AnovaEntry(term.label(), len(cols), cols, relatives))

    def _prepare_nls(self, spec: ModelSpec, data: DataFrame, reduced):
        if reduced is not None:
            raise InferenceError(
                "custom reduced models are not supported for nonlinear pipelines"
            )
        if not spec.start:
            raise FitError("nls models need starting values")
        parts = spec.formula.split("~")
        if len(parts) != 2:
            raise FitError("nls formula must contain exactly one '~'")
        self.response_name = parts[0].strip()
        start = spec.start_dict()
        self.expression = parse_nls_expression(parts[1], start.keys())
        col_names = expression_columns(self.expression)
        for name in [self.response_name] + col_names:
            if data[name].kind != NUMERIC:
                raise FitError(f"column {name!r} must be numeric")
        keep = ~data[self.response_name].missing
        for name in col_names:
            keep &= ~data[name].missing
        rows = np.flatnonzero(keep)
        if rows.size == 0:
            raise FitError("no rows left after dropping missing values")
        self.columns = {n: data[n].values[rows].astype(float) for n in col_names}
        self.y = data[self.response_name].values[rows].astype(float)
        self.n = int(rows.size)
        self.start = start
        self.model0 = fit_nls_arrays(self.expression, self.columns, self.y, start)
        # replicates restart from the original estimates
        self.refit_start = dict(zip(self.model0.labels, self.model0.coefficients))
        self.reduced_text = f"{self.response_name} ~ 1"
        self.reduced_p = 1
        self.formula = None

    # -- evaluation -------------------------------------------------------

    def _fit_linear(self, X: np.ndarray, y: np.ndarray):
        design = with_design(self.design, X)
        if self.kind == "ols":
            return fit_ols(design, y)
        model = fit_glm(design, y, self.spec.family)
        if not model.converged:
            raise ConvergenceError("IRLS did not converge")
        return model

    def evaluate(self, idx: np.ndarray | None = None,
                 weights: np.ndarray | None = None) -> EvalResult:
        """Run the whole pipeline on resampled or reweighted rows.

        ``idx`` selects rows with replacement (nonparametric bootstrap);
        ``weights`` reweights all rows (Bayesian bootstrap). Both None
        evaluates the original data. Raises FitError/InferenceError
        subclasses when the replicate cannot be completed.
        """
        if self.kind == "nls":
            return self._evaluate_nls(idx, weights)
        return self._evaluate_linear(idx, weights)

    def _evaluate_linear(self, idx, weights) -> EvalResult:
        X, y = self.design.X, self.y
        if idx is not None:
            X, y = X[idx], y[idx]
        if weights is not None:
            sqw = np.sqrt(weights)
            X, y = X * sqw[:, None], y * sqw
        model = self._fit_linear(X, y)
        vcov = vcov_by_name(model, self.vcov_variant)
        n, m = model.n, model.m
        rdf = n - m
        is_ols = self.kind == "ols"

        coef = None
        if self.with_coefficients:
            se = vcov.standard_errors()
            if np.any(se == 0.0):
                raise InferenceError("zero standard error")
            stats = model.coefficients / se
            if is_ols:
                converter = t2S if self.unbiased else t2S_alt
                s = np.array([converter(t, n, m) for t in stats])
            else:
                converter = z2S if self.unbiased else z2S_alt
                s = np.array([converter(z, n) for z in stats])
            coef = CoefStats(model.labels, model.coefficients, se, stats,
                             "t" if is_ols else "z", rdf if is_ols else None, s)

        anova = None
        if self.with_anova:
            stats_list = []
            s_list = []
            for entry in self.anova_entries:
                if entry.relatives is None:
                    w = _quadratic_form(model.coefficients, vcov.matrix, entry.columns)
                else:
                    w = _marginal_wald(model.coefficients, vcov.matrix,
                                       entry.columns, entry.relatives)
                if is_ols:
                    f_stat = w / entry.df1
                    stats_list.append(f_stat)
                    s_list.append(f2S(f_stat, entry.df1, rdf, n))
                else:
                    stats_list.append(w)
                    s_list.append(chisq2S(w, entry.df1, n))
            anova = AnovaStats(
                tuple(e.label for e in self.anova_entries),
                tuple(e.df1 for e in self.anova_entries),
                np.asarray(stats_list), "f" if is_ols else "chisq",
                rdf if is_ols else None, np.asarray(s_list))

        w = _quadratic_form(model.coefficients, vcov.matrix, self.tested_columns)
        df1 = len(self.tested_columns)
        if is_ols:
            f_stat = w / df1
            overall = OverallStats(f_stat, "f", df1, rdf, rdf,
                                   n - self.reduced_p, f2S(f_stat, df1, rdf, n))
        else:
            overall = OverallStats(w, "chisq", df1, None, rdf,
                                   n - self.reduced_p, chisq2S(w, df1, n))
        return EvalResult(n, m, coef, anova, overall)

    def _evaluate_nls(self, idx, weights) -> EvalResult:
        columns, y = self.columns, self.y
        start = self.refit_start if (idx is not None or weights is not None) else self.start
        if idx is not None:
            columns = {name: arr[idx] for name, arr in columns.items()}
            y = y[idx]
        model = fit_nls_arrays(self.expression, columns, y, start, weights=weights)
        vcov = vcov_by_name(model, self.vcov_variant)
        n, m = model.n, model.m

        coef = None
        if self.with_coefficients:
            se = vcov.standard_errors()
            if np.any(se == 0.0):
                raise InferenceError("zero standard error")
            stats = model.coefficients / se
            converter = t2S if self.unbiased else t2S_alt
            s = np.array([converter(t, n, m) for t in stats])
            coef = CoefStats(model.labels, model.coefficients, se, stats,
                             "t", n - m, s)

        w = _quadratic_form(model.coefficients, vcov.matrix, list(range(m)))
        overall = OverallStats(w, "chisq", m, None, n - m, n - 1, chisq2S(w, m, n))
        return EvalResult(n, m, coef, None, overall)

    # -- bootstrap support --------------------------------------------------

    def _quantity_labels(self, result: EvalResult) -> list[str]:
        labels = []
        if result.coef is not None:
            labels.extend(f"coef:{lbl}" for lbl in result.coef.labels)
        if result.anova is not None:
            labels.extend(f"anova:{lbl}" for lbl in result.anova.labels)
        labels.append("overall")
        return labels

    def quantity_values(self, result: EvalResult) -> np.ndarray:
        """Flatten an evaluation into the bootstrap quantity vector."""
        parts = []
        if result.coef is not None:
            parts.append(result.coef.s_values)
        if result.anova is not None:
            parts.append(result.anova.s_values)
        parts.append(np.array([result.overall.s]))
        return np.concatenate(parts)

    def describe_model(self) -> str:
        if self.kind == "nls":
            start = ", ".join(f"{k} = {v:g}" for k, v in self.start.items())
            return f"{self.spec.formula} (nonlinear least squares, start: {start})"
        return f"{self.spec.formula} (family: {self.spec.family})"
