"""Conversions between S and other common effect size measures.

Cohen's d needs the group proportion pi of the binary predictor; f
squared and R squared convert without extra context. Each pair is an
exact inverse of the other on its domain.
"""

from __future__ import annotations

import math


def _check_pi(pi: float):
    if not 0.0 < pi < 1.0:
        raise ValueError("group proportion pi must lie strictly in (0, 1)")


def d2S(d: float, pi: float = 0.5) -> float:
    """S from Cohen's d: S = d * sqrt(pi * (1 - pi))."""
    _check_pi(pi)
    return d * math.sqrt(pi * (1.0 - pi))


def S2d(s: float, pi: float = 0.5) -> float:
    """Cohen's d from S: d = S / sqrt(pi * (1 - pi))."""
    _check_pi(pi)
    return s / math.sqrt(pi * (1.0 - pi))


def fsq2S(fsq: float) -> float:
    """S from Cohen's f squared: S = sqrt(f^2)."""
    if fsq < 0:
        raise ValueError("f squared must be nonnegative")
    return math.sqrt(fsq)


def S2fsq(s: float) -> float:
    """Cohen's f squared from S: f^2 = S^2."""
    return s * s


def Rsq2S(rsq: float) -> float:
    """S from R squared: S = sqrt(R^2 / (1 - R^2)), for R^2 in [0, 1)."""
    if not 0.0 <= rsq < 1.0:
        raise ValueError("R squared must lie in [0, 1)")
    return math.sqrt(rsq / (1.0 - rsq))


def S2Rsq(s: float) -> float:
    """R squared from S: R^2 = S^2 / (1 + S^2)."""
    return s * s / (1.0 + s * s)
