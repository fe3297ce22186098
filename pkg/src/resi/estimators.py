"""Test-statistic to robust effect size index (S) conversions.

S is the square root of the sample-size-free part of a Wald statistic's
noncentrality parameter. Chi-square and F statistics give nonnegative
estimates; Z and t statistics give signed estimates, in an unbiased
form (``z2S``/``t2S``) and a truncated alternate form
(``z2S_alt``/``t2S_alt``) whose magnitude matches the unsigned
estimators exactly.
"""

from __future__ import annotations

import math

from scipy.special import gammaln


def chisq2S(t2: float, df: int, n: int) -> float:
    """S estimate from a Chi-square statistic: sqrt(max(0, (T2 - df)/n))."""
    if t2 < 0:
        raise ValueError("chi-square statistic must be nonnegative")
    if df < 1:
        raise ValueError("degrees of freedom must be at least 1")
    if n < 1:
        raise ValueError("sample size must be at least 1")
    return math.sqrt(max(0.0, (t2 - df) / n))


def f2S(f: float, df1: int, rdf: int, n: int) -> float:
    """S estimate from an F statistic by the method of moments.

    Uses S^2 = df1 * (F * (rdf - 2) / rdf - 1) / n truncated at zero,
    where rdf is the residual degrees of freedom n - m. Requires
    rdf > 2 for the F moment to exist.
    """
    if f < 0:
        raise ValueError("F statistic must be nonnegative")
    if df1 < 1:
        raise ValueError("degrees of freedom must be at least 1")
    if rdf <= 2:
        raise ValueError("residual degrees of freedom must exceed 2")
    if n < 1:
        raise ValueError("sample size must be at least 1")
    return math.sqrt(max(0.0, df1 * (f * (rdf - 2) / rdf - 1.0) / n))


def z2S(z: float, n: int) -> float:
    """Unbiased signed S estimate from a Z statistic: Z / sqrt(n)."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    return z / math.sqrt(n)


def z2S_alt(z: float, n: int) -> float:
    """Truncated signed S estimate: sgn(Z) * sqrt(max(0, (Z^2 - 1)/n)).

    Biased but consistent; its magnitude equals ``chisq2S(z**2, 1, n)``.
    """
    if n < 1:
        raise ValueError("sample size must be at least 1")
    magnitude = math.sqrt(max(0.0, (z * z - 1.0) / n))
    return math.copysign(magnitude, z) if z != 0 else 0.0


def t2S(t: float, n: int, m: int) -> float:
    """Unbiased signed S estimate from a t statistic.

    S = t * sqrt(2) * Gamma((n-m)/2) / (sqrt(n*(n-m)) * Gamma((n-m-1)/2)),
    with the Gamma ratio evaluated in log space. Requires n - m > 1.
    """
    rdf = n - m
    if rdf <= 1:
        raise ValueError("residual degrees of freedom must exceed 1")
    log_ratio = gammaln(rdf / 2.0) - gammaln((rdf - 1) / 2.0)
    return t * math.sqrt(2.0 / (n * rdf)) * math.exp(log_ratio)


def t2S_alt(t: float, n: int, m: int) -> float:
    """Truncated signed S estimate from a t statistic.

    Equals sgn(t) * f2S(t^2, 1, n - m, n), so its magnitude matches the
    F-based estimator exactly. Requires n - m > 2.
    """
    if n - m <= 2:
        raise ValueError("residual degrees of freedom must exceed 2")
    magnitude = f2S(t * t, 1, n - m, n)
    return math.copysign(magnitude, t) if t != 0 else 0.0


INTERPRETATION_RANGES = (
    (0.1, "none-to-small"),
    (0.25, "small-to-medium"),
    (0.4, "medium-to-large"),
)


def interpret(s: float) -> str:
    """Qualitative label for an S magnitude.

    [0, 0.1] none-to-small, (0.1, 0.25] small-to-medium,
    (0.25, 0.4] medium-to-large, above 0.4 large.
    """
    magnitude = abs(s)
    for upper, label in INTERPRETATION_RANGES:
        if magnitude <= upper:
            return label
    return "large"
