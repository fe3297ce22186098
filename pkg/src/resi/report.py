"""Full analysis reports: point estimates, bootstrap intervals, and
text/JSON rendering.

:func:`resi_pe` produces the three tables (coefficients, ANOVA,
overall) with S point estimates; :func:`resi` adds percentile
confidence or credible intervals from the bootstrap. The bootstrap
never changes point estimates: both functions read them from the same
original-data evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .bootstrap import BAYESIAN, BootSpec, BootstrapResult, run_bootstrap
from .frames import DataFrame
from .inference import wald_p_value
from .pipeline import Analysis, EvalResult, ModelSpec

CItype = dict[float, tuple[float, float]] | None


@dataclass
class CoefficientRow:
    label: str
    estimate: float
    se: float
    statistic: float
    stat_kind: str           # t | z
    df2: int | None
    p_value: float
    s: float
    ci: CItype = None


@dataclass
class AnovaRow:
    term: str
    df: int
    statistic: float
    stat_kind: str           # f | chisq
    df2: int | None
    p_value: float
    s: float
    ci: CItype = None


@dataclass
class OverallRow:
    statistic: float
    stat_kind: str           # f | chisq
    df1: int
    df2: int | None
    res_df_full: int
    res_df_reduced: int
    p_value: float
    s: float
    ci: CItype = None


@dataclass
class ResiReport:
    model: str
    reduced_model: str
    kind: str
    family: str
    vcov_variant: str
    robust: bool
    anova_type: int
    unbiased: bool
    n: int
    m: int
    alphas: tuple[float, ...]
    coefficients: list[CoefficientRow] | None
    anova: list[AnovaRow] | None
    overall: OverallRow
    notes: list[str]
    boot: BootstrapResult | None = None


def _rows_from_eval(result: EvalResult):
    coef_rows = None
    if result.coef is not None:
        c = result.coef
        coef_rows = [
            CoefficientRow(
                label=c.labels[j],
                estimate=float(c.estimates[j]),
                se=float(c.se[j]),
                statistic=float(c.statistics[j]),
                stat_kind=c.kind,
                df2=c.df2,
                p_value=wald_p_value(float(c.statistics[j]), c.kind, 1, c.df2),
                s=float(c.s_values[j]),
            )
            for j in range(len(c.labels))
        ]
    anova_rows = None
    if result.anova is not None:
        a = result.anova
        anova_rows = [
            AnovaRow(
                term=a.labels[j],
                df=a.df1[j],
                statistic=float(a.statistics[j]),
                stat_kind=a.kind,
                df2=a.df2,
                p_value=wald_p_value(float(a.statistics[j]), a.kind, a.df1[j], a.df2),
                s=float(a.s_values[j]),
            )
            for j in range(len(a.labels))
        ]
    o = result.overall
    overall_row = OverallRow(
        statistic=o.statistic,
        stat_kind=o.kind,
        df1=o.df1,
        df2=o.df2,
        res_df_full=o.res_df_full,
        res_df_reduced=o.res_df_reduced,
        p_value=wald_p_value(o.statistic, o.kind, o.df1, o.df2),
        s=o.s,
    )
    return coef_rows, anova_rows, overall_row


def _covariance_note(robust: bool) -> str:
    if robust:
        return "The RESI was calculated using a robust covariance estimator."
    return "The RESI was calculated using the model-based (naive) covariance estimator."


def _build_report(analysis: Analysis, alphas=(), boot=None) -> ResiReport:
    coef_rows, anova_rows, overall_row = _rows_from_eval(analysis.point)
    notes = [_covariance_note(analysis.robust)]
    if boot is not None:
        if boot.method == BAYESIAN:
            notes.append(
                f"Credible intervals constructed using {boot.attempts} "
                "Bayesian bootstraps."
            )
        else:
            notes.append(
                f"Confidence intervals (CIs) constructed using {boot.attempts} "
                "nonparametric bootstraps."
            )
        notes.append(
            f"The bootstrap was successful in {boot.successes} out of "
            f"{boot.attempts} attempts."
        )
        if coef_rows is not None:
            for row in coef_rows:
                row.ci = boot.intervals[f"coef:{row.label}"]
        if anova_rows is not None:
            for row in anova_rows:
                row.ci = boot.intervals[f"anova:{row.term}"]
        overall_row.ci = boot.intervals["overall"]
    return ResiReport(
        model=analysis.describe_model(),
        reduced_model=analysis.reduced_text,
        kind=analysis.kind,
        family=analysis.spec.family,
        vcov_variant=analysis.vcov_variant,
        robust=analysis.robust,
        anova_type=analysis.anova_type,
        unbiased=analysis.unbiased,
        n=analysis.point.n,
        m=analysis.point.m,
        alphas=tuple(alphas),
        coefficients=coef_rows,
        anova=anova_rows,
        overall=overall_row,
        notes=notes,
        boot=boot,
    )


def resi_pe(full, data: DataFrame, reduced=None, *, vcov: str | None = None,
            anova_type: int = 2, unbiased: bool = True,
            coefficients: bool = True, anova: bool = True) -> ResiReport:
    """Point estimates only: coefficient, ANOVA, and overall S values.

    ``full`` is a formula string or :class:`ModelSpec`; ``reduced``
    defaults to the intercept-only model of the same family. ``vcov``
    defaults to HC3 for least squares and generalized linear models and
    to the Jacobian sandwich for nonlinear models; pass ``"naive"`` for
    the model-based covariance. Signed coefficient estimates use the
    unbiased z/t estimators unless ``unbiased=False`` selects the
    truncated alternates.
    """
    analysis = Analysis(ModelSpec.of(full), data, reduced=reduced, vcov=vcov,
                        anova_type=anova_type, unbiased=unbiased,
                        coefficients=coefficients, anova=anova)
    return _build_report(analysis)


def resi(full, data: DataFrame, reduced=None, *, vcov: str | None = None,
         anova_type: int = 2, unbiased: bool = True, coefficients: bool = True,
         anova: bool = True, boot: BootSpec = BootSpec(),
         workers: int | None = None) -> ResiReport:
    """Point estimates plus bootstrap percentile intervals.

    Runs :func:`resi_pe`'s computation once on the original data, then
    bootstraps the entire pipeline according to ``boot``. Point
    estimates are taken from the original fit and are never affected by
    the bootstrap.
    """
    analysis = Analysis(ModelSpec.of(full), data, reduced=reduced, vcov=vcov,
                        anova_type=anova_type, unbiased=unbiased,
                        coefficients=coefficients, anova=anova)
    boot_result = run_bootstrap(analysis, spec=boot, workers=workers)
    return _build_report(analysis, alphas=boot.alphas, boot=boot_result)


# ---------------------------------------------------------------------------
# rendering


def _fmt(value: float, digits: int = 4) -> str:
    return f"{value:.{digits}f}"


def _stat_headers(kind: str) -> tuple[str, str]:
    return {
        "t": ("t value", "Pr(>|t|)"),
        "z": ("z value", "Pr(>|z|)"),
        "f": ("F", "Pr(>F)"),
        "chisq": ("Chisq", "Pr(>Chisq)"),
    }[kind]


def _ci_headers(alphas) -> list[str]:
    lows = [f"{100 * a / 2:g}%" for a in sorted(alphas, reverse=True)]
    highs = [f"{100 * (1 - a / 2):g}%" for a in sorted(alphas)]
    return lows + highs


def _ci_cells(ci: CItype, alphas) -> list[str]:
    lows = [_fmt(ci[a][0]) for a in sorted(alphas, reverse=True)]
    highs = [_fmt(ci[a][1]) for a in sorted(alphas)]
    return lows + highs


def _format_table(header: list[str], rows: list[list[str]]) -> list[str]:
    widths = [len(h) for h in header]
    for row in rows:
        for j, cell in enumerate(row):
            widths[j] = max(widths[j], len(cell))
    lines = []
    all_rows = [header] + rows
    for i, row in enumerate(all_rows):
        cells = [row[0].ljust(widths[0])]
        cells += [cell.rjust(widths[j + 1]) for j, cell in enumerate(row[1:])]
        lines.append(" ".join(cells).rstrip())
    return lines


def render_text(report: ResiReport) -> str:
    """Plain-text report: header, model, tables, and numbered notes."""
    out = ["Analysis of effect sizes based on RESI:"]
    if report.alphas:
        out.append("Confidence level =  " + " ".join(f"{a:g}" for a in report.alphas))
    out.append(f"Model:  {report.model}")
    out.append(f"Reduced model:  {report.reduced_model}")

    ci_headers = _ci_headers(report.alphas) if report.alphas else []

    if report.coefficients:
        out.append("")
        out.append("Coefficient Table")
        stat_h, p_h = _stat_headers(report.coefficients[0].stat_kind)
        header = ["", "Estimate", "Std. Error", stat_h, p_h, "RESI"] + ci_headers
        rows = []
        for row in report.coefficients:
            cells = [row.label, _fmt(row.estimate), _fmt(row.se),
                     _fmt(row.statistic), _fmt(row.p_value), _fmt(row.s)]
            if report.alphas:
                cells += _ci_cells(row.ci, report.alphas)
            rows.append(cells)
        out.extend(_format_table(header, rows))

    if report.anova:
        roman = "II" if report.anova_type == 2 else "III"
        out.append("")
        out.append(f"Analysis of Deviance Table (Type {roman} tests)")
        out.append("")
        response = report.model.split("~")[0].strip()
        out.append(f"Response: {response}")
        stat_h, p_h = _stat_headers(report.anova[0].stat_kind)
        header = ["", "Df", stat_h, p_h, "RESI"] + ci_headers
        rows = []
        for row in report.anova:
            cells = [row.term, str(row.df), _fmt(row.statistic),
                     _fmt(row.p_value), _fmt(row.s)]
            if report.alphas:
                cells += _ci_cells(row.ci, report.alphas)
            rows.append(cells)
        out.extend(_format_table(header, rows))

    out.append("")
    if report.reduced_model.split("~")[1].strip() == "1":
        out.append("Overall RESI comparing model to intercept-only model:")
    else:
        out.append("Overall RESI comparing full model to reduced model:")
    out.append("")
    o = report.overall
    stat_h, p_h = _stat_headers(o.stat_kind)
    header = ["", "Res.Df", "Df", stat_h, p_h, "RESI"] + ci_headers
    pad = [""] * (3 + len(ci_headers))
    row1 = ["1", str(o.res_df_reduced), ""] + pad
    row2 = ["2", str(o.res_df_full), str(o.df1), _fmt(o.statistic),
            _fmt(o.p_value), _fmt(o.s)]
    if report.alphas:
        row2 += _ci_cells(o.ci, report.alphas)
    out.extend(_format_table(header, [row1, row2]))

    out.append("")
    out.append("Notes:")
    for i, note in enumerate(report.notes, start=1):
        out.append(f"{i}. {note}")
    return "\n".join(out) + "\n"


def _ci_json(ci: CItype):
    if ci is None:
        return None
    return {f"{alpha:g}": [lo, hi] for alpha, (lo, hi) in sorted(ci.items())}


def render_json(report: ResiReport) -> str:
    """JSON report with full-precision numbers; a stable superset of
    every value shown in the text rendering."""
    payload = {
        "model": report.model,
        "reduced_model": report.reduced_model,
        "kind": report.kind,
        "family": report.family,
        "covariance": {"variant": report.vcov_variant, "robust": report.robust},
        "anova_type": report.anova_type,
        "unbiased": report.unbiased,
        "n": report.n,
        "m": report.m,
        "alphas": list(report.alphas),
        "coefficients": None,
        "anova": None,
        "overall": {
            "statistic": report.overall.statistic,
            "statistic_kind": report.overall.stat_kind,
            "df": report.overall.df1,
            "res_df": report.overall.df2,
            "res_df_full": report.overall.res_df_full,
            "res_df_reduced": report.overall.res_df_reduced,
            "p_value": report.overall.p_value,
            "resi": report.overall.s,
            "ci": _ci_json(report.overall.ci),
        },
        "notes": list(report.notes),
        "bootstrap": None,
    }
    if report.coefficients is not None:
        payload["coefficients"] = [
            {
                "label": row.label,
                "estimate": row.estimate,
                "se": row.se,
                "statistic": row.statistic,
                "statistic_kind": row.stat_kind,
                "res_df": row.df2,
                "p_value": row.p_value,
                "resi": row.s,
                "ci": _ci_json(row.ci),
            }
            for row in report.coefficients
        ]
    if report.anova is not None:
        payload["anova"] = [
            {
                "term": row.term,
                "df": row.df,
                "statistic": row.statistic,
                "statistic_kind": row.stat_kind,
                "res_df": row.df2,
                "p_value": row.p_value,
                "resi": row.s,
                "ci": _ci_json(row.ci),
            }
            for row in report.anova
        ]
    if report.boot is not None:
        payload["bootstrap"] = {
            "method": report.boot.method,
            "attempts": report.boot.attempts,
            "successes": report.boot.successes,
            "seed": report.boot.seed,
            "stored": report.boot.replicates is not None,
        }
    return json.dumps(payload, indent=2)
