"""Parameter covariance estimators: model-based and sandwich forms.

The sandwich estimators make downstream Wald statistics consistent
under heteroskedasticity. HC0 is the plain outer-product meat; HC1
rescales by n/(n-m); HC2 and HC3 deflate each squared residual by
(1 - h_ii) and (1 - h_ii)^2 where h_ii is the observation's leverage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InferenceError
from .models import FittedModel

HC_VARIANTS = ("HC0", "HC1", "HC2", "HC3")


@dataclass(frozen=True)
class CovarianceEstimate:
    """A p x p covariance of the coefficient estimates."""

    matrix: np.ndarray
    robust: bool
    variant: str   # naive | HC0..HC3 | nls-sandwich

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.matrix))


def _require_converged(model: FittedModel):
    if not model.converged:
        raise InferenceError("model did not converge; covariance is unavailable")


def _inv_crossprod_from_r(r: np.ndarray) -> np.ndarray:
    """(A'A)^-1 from the triangular factor of A = QR."""
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= diag.max() * np.finfo(float).eps * max(r.shape):
        raise InferenceError("information matrix is singular")
    r_inv = solve_triangular(r, np.eye(r.shape[0]))
    return r_inv @ r_inv.T


def _regressors(model: FittedModel) -> np.ndarray:
    """The matrix whose cross-product is the information: X, sqrt(W)X, or J."""
    if model.kind == "nls":
        return model.jacobian
    if model.kind == "glm":
        return np.sqrt(model.irls_weights)[:, None] * model.design.X
    return model.design.X


def _bread(model: FittedModel) -> np.ndarray:
    if model.qr_r is not None:
        return _inv_crossprod_from_r(model.qr_r)
    reg = _regressors(model)
    _, r = np.linalg.qr(reg)
    return _inv_crossprod_from_r(r)


def _leverages(model: FittedModel) -> np.ndarray:
    if model.qr_q is not None:
        return np.einsum("ij,ij->i", model.qr_q, model.qr_q)
    reg = _regressors(model)
    q, _ = np.linalg.qr(reg)
    return np.einsum("ij,ij->i", q, q)


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.T) / 2.0


def vcov_naive(model: FittedModel) -> CovarianceEstimate:
    """Model-based covariance.

    OLS: sigma^2 (X'X)^-1; GLM: (X'WX)^-1 at convergence;
    NLS: sigma^2 (J'J)^-1.
    """
    _require_converged(model)
    bread = _bread(model)
    if model.kind == "glm":
        matrix = bread
    else:
        matrix = model.sigma2 * bread
    return CovarianceEstimate(_symmetrize(matrix), robust=False, variant="naive")


def vcov_hc(model: FittedModel, variant: str = "HC3") -> CovarianceEstimate:
    """Heteroskedasticity-consistent sandwich covariance for OLS/GLM.

    The meat is X' diag(s_i e_i^2) X with e_i the response residual and
    s_i the variant's leverage adjustment; the bread is (X'X)^-1 for
    OLS and (X'WX)^-1 for GLM.
    """
    variant = variant.upper()
    if variant not in HC_VARIANTS:
        raise InferenceError(f"unknown sandwich variant {variant!r}")
    if model.kind not in ("ols", "glm"):
        raise InferenceError(f"vcov_hc applies to ols/glm models, not {model.kind!r}")
    _require_converged(model)

    scaled = model.residuals ** 2
    if variant == "HC1":
        scaled = scaled * model.n / (model.n - model.m)
    elif variant in ("HC2", "HC3"):
        h = _leverages(model)
        at_one = np.flatnonzero(1.0 - h <= np.finfo(float).eps)
        if at_one.size:
            raise InferenceError(
                f"leverage is 1 at row {at_one[0]}; {variant} is undefined"
            )
        power = 1 if variant == "HC2" else 2
        scaled = scaled / (1.0 - h) ** power

    X = model.design.X
    bread = _bread(model)
    meat = (X * scaled[:, None]).T @ X
    matrix = bread @ meat @ bread
    return CovarianceEstimate(_symmetrize(matrix), robust=True, variant=variant)


def vcov_nls_sandwich(model: FittedModel) -> CovarianceEstimate:
    """HC0-style sandwich with the Jacobian as the regressor matrix."""
    if model.kind != "nls":
        raise InferenceError("vcov_nls_sandwich applies to nls models only")
    _require_converged(model)
    jac = model.jacobian
    bread = _bread(model)
    meat = (jac * (model.residuals ** 2)[:, None]).T @ jac
    matrix = bread @ meat @ bread
    return CovarianceEstimate(_symmetrize(matrix), robust=True, variant="nls-sandwich")


def vcov_by_name(model: FittedModel, name: str) -> CovarianceEstimate:
    """Dispatch a covariance request by variant name.

    ``naive`` maps to the model-based estimate for every model kind;
    HC names map to :func:`vcov_hc` for ols/glm and, for nls models,
    to the Jacobian sandwich (the only robust form available there).
    """
    lowered = name.lower()
    if lowered == "naive":
        return vcov_naive(model)
    if model.kind == "nls":
        return vcov_nls_sandwich(model)
    return vcov_hc(model, name)
