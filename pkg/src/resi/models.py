"""Model fitting: least squares, generalized linear models, nonlinear
least squares.

All fitters are pure functions of their inputs and return an immutable
:class:`FittedModel`. Rank problems and failed iterations raise
:class:`~resi.errors.FitError` subclasses; GLM non-convergence is the
one exception, reported through the ``converged`` flag so a bootstrap
can count it as a failed attempt instead of aborting.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import expit, xlogy

from .errors import ConvergenceError, FitError, SingularGradientError
from .formula import (
    DesignMatrix,
    evaluate_expression,
    expression_columns,
    expression_params,
)
from .frames import NUMERIC, DataFrame

GLM_FAMILIES = ("gaussian", "binomial", "poisson")

IRLS_TOL = 1e-8
IRLS_MAX_ITER = 50

NLS_MAX_ITER = 50
NLS_TOL = 1e-5
NLS_MIN_STEP = 1.0 / 1024.0
NLS_MAX_CONDITION = 1e12  # on J'J

_MU_EPS = 1e-10


@dataclass(frozen=True)
class FittedModel:
    """A fitted mean model and everything downstream inference needs."""

    kind: str                       # "ols" | "glm" | "nls"
    coefficients: np.ndarray
    labels: tuple[str, ...]
    fitted: np.ndarray
    residuals: np.ndarray
    y: np.ndarray
    n: int
    m: int
    converged: bool
    iterations: int
    design: DesignMatrix | None = None
    sigma2: float | None = None          # ols / nls dispersion
    family: str | None = None            # glm
    irls_weights: np.ndarray | None = None
    deviance: float | None = None
    expression: object | None = None     # nls
    param_names: tuple[str, ...] | None = None
    jacobian: np.ndarray | None = None   # nls, at the solution
    qr_q: np.ndarray | None = None       # cached thin-QR factors of the
    qr_r: np.ndarray | None = None       # (weighted) regressor matrix


def _qr_solve(X: np.ndarray, rhs: np.ndarray, labels):
    """Least squares via thin QR, raising on rank deficiency."""
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    tol = max(X.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    deficient = np.flatnonzero(diag <= tol)
    if deficient.size:
        label = labels[deficient[0]] if labels else str(deficient[0])
        raise FitError(f"design matrix is rank deficient (column {label!r})")
    beta = solve_triangular(r, q.T @ rhs)
    return beta, q, r


def fit_ols(design: DesignMatrix, y: np.ndarray) -> FittedModel:
    """Ordinary least squares via Householder QR.

    The dispersion estimate is the residual sum of squares divided by
    the residual degrees of freedom n - m.
    """
    y = np.asarray(y, dtype=float)
    n, p = design.X.shape
    if y.shape != (n,):
        raise FitError(f"response has length {y.shape}, expected ({n},)")
    if n <= p:
        raise FitError(f"need more observations ({n}) than parameters ({p})")
    beta, q, r = _qr_solve(design.X, y, design.labels)
    fitted = design.X @ beta
    resid = y - fitted
    sigma2 = float(resid @ resid) / (n - p)
    return FittedModel(
        kind="ols",
        coefficients=beta,
        labels=design.labels,
        fitted=fitted,
        residuals=resid,
        y=y,
        n=n,
        m=p,
        converged=True,
        iterations=1,
        design=design,
        sigma2=sigma2,
        qr_q=q,
        qr_r=r,
    )


def _glm_mustart(y: np.ndarray, family: str) -> np.ndarray:
    if family == "binomial":
        return (y + 0.5) / 2.0
    if family == "poisson":
        return y + 0.1
    return y.copy()


def _glm_linkinv(eta: np.ndarray, family: str) -> np.ndarray:
    if family == "binomial":
        return expit(eta)
    if family == "poisson":
        return np.exp(np.clip(eta, -700, 700))
    return eta


def _glm_link(mu: np.ndarray, family: str) -> np.ndarray:
    if family == "binomial":
        return np.log(mu / (1.0 - mu))
    if family == "poisson":
        return np.log(mu)
    return mu


def _glm_deviance(y: np.ndarray, mu: np.ndarray, family: str) -> float:
    if family == "binomial":
        mu = np.clip(mu, _MU_EPS, 1.0 - _MU_EPS)
        dev = xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu))
        return 2.0 * float(dev.sum())
    if family == "poisson":
        mu = np.maximum(mu, _MU_EPS)
        return 2.0 * float((xlogy(y, y / mu) - (y - mu)).sum())
    resid = y - mu
    return float(resid @ resid)


def fit_glm(design: DesignMatrix, y: np.ndarray, family: str,
            link: str = "canonical") -> FittedModel:
    """Generalized linear model via IRLS with the canonical link.

    Convergence requires the relative deviance change to drop below
    1e-8 within 50 iterations; failure to do so sets ``converged`` to
    False rather than raising.
    """
    if family not in GLM_FAMILIES:
        raise FitError(f"unknown family {family!r}")
    if link != "canonical":
        raise FitError("only canonical links are supported")
    y = np.asarray(y, dtype=float)
    n, p = design.X.shape
    if y.shape != (n,):
        raise FitError(f"response has length {y.shape}, expected ({n},)")
    if n <= p:
        raise FitError(f"need more observations ({n}) than parameters ({p})")
    if family == "binomial" and (np.any(y < 0) or np.any(y > 1)):
        raise FitError("binomial response must lie in [0, 1]")
    if family == "poisson" and np.any(y < 0):
        raise FitError("poisson response must be nonnegative")

    mu = _glm_mustart(y, family)
    eta = _glm_link(mu, family)
    dev_old = _glm_deviance(y, mu, family)
    beta = np.zeros(p)
    q = r = None
    converged = False
    iterations = 0
    # canonical links: dmu/deta equals the variance function
    for iterations in range(1, IRLS_MAX_ITER + 1):
        if family == "binomial":
            w = np.maximum(mu * (1.0 - mu), _MU_EPS)
        elif family == "poisson":
            w = np.maximum(mu, _MU_EPS)
        else:
            w = np.ones(n)
        z = eta + (y - mu) / w
        sqw = np.sqrt(w)
        beta, q, r = _qr_solve(sqw[:, None] * design.X, sqw * z, design.labels)
        eta = design.X @ beta
        mu = _glm_linkinv(eta, family)
        dev = _glm_deviance(y, mu, family)
        if not np.isfinite(dev):
            break
        if abs(dev - dev_old) / (abs(dev) + 0.1) < IRLS_TOL:
            converged = True
            break
        dev_old = dev

    # refresh weights and factors at the final mean so that downstream
    # covariances use the information matrix exactly at convergence
    if converged:
        if family == "binomial":
            w = np.maximum(mu * (1.0 - mu), _MU_EPS)
        elif family == "poisson":
            w = np.maximum(mu, _MU_EPS)
        else:
            w = np.ones(n)
        sqw = np.sqrt(w)
        q, r = np.linalg.qr(sqw[:, None] * design.X)

    resid = y - mu
    return FittedModel(
        kind="glm",
        coefficients=beta,
        labels=design.labels,
        fitted=mu,
        residuals=resid,
        y=y,
        n=n,
        m=p,
        converged=converged,
        iterations=iterations,
        design=design,
        family=family,
        irls_weights=w,
        deviance=_glm_deviance(y, mu, family),
        qr_q=q,
        qr_r=r,
    )


def _numeric_jacobian(predict, theta: np.ndarray) -> np.ndarray:
    """Central finite differences, step 1e-6 * max(1, |parameter|)."""
    cols = []
    for j in range(theta.size):
        h = 1e-6 * max(1.0, abs(theta[j]))
        up = theta.copy()
        up[j] += h
        down = theta.copy()
        down[j] -= h
        cols.append((predict(up) - predict(down)) / (2.0 * h))
    return np.column_stack(cols)


def gauss_newton(predict, y: np.ndarray, theta0: np.ndarray,
                 max_iter: int = NLS_MAX_ITER, tol: float = NLS_TOL):
    """Minimize ||y - predict(theta)||^2 by Gauss-Newton with step halving.

    Returns ``(theta, fitted, residuals, jacobian, iterations)``. Raises
    :class:`SingularGradientError` when the Jacobian cross-product is
    numerically singular and :class:`ConvergenceError` when the step
    search stalls or the iteration cap is hit.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    fitted = predict(theta)
    if not np.all(np.isfinite(fitted)):
        raise FitError("model is not finite at the starting values")
    resid = y - fitted
    rss = float(resid @ resid)

    for iteration in range(1, max_iter + 1):
        jac = _numeric_jacobian(predict, theta)
        if not np.all(np.isfinite(jac)):
            raise SingularGradientError("singular gradient")
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[-1] <= 0.0 or (sv[0] / sv[-1]) ** 2 > NLS_MAX_CONDITION:
            raise SingularGradientError("singular gradient")
        q, r = np.linalg.qr(jac)
        step = solve_triangular(r, q.T @ resid)

        lam = 1.0
        accepted = False
        rss_full = np.inf
        while lam >= NLS_MIN_STEP:
            candidate = theta + lam * step
            fitted_new = predict(candidate)
            with np.errstate(over="ignore", invalid="ignore"):
                resid_new = y - fitted_new
                rss_new = float(resid_new @ resid_new)
            if lam == 1.0:
                rss_full = rss_new
            if np.isfinite(rss_new) and rss_new < rss:
                accepted = True
                break
            lam *= 0.5

        if not accepted:
            # at a stationary point the full step cannot reduce the RSS;
            # accept convergence when it would not change it meaningfully
            if np.isfinite(rss_full) and abs(rss_full - rss) <= tol * rss:
                break
            if rss == 0.0:
                break
            raise ConvergenceError(
                "step halving reduced the step below the minimum factor "
                "without decreasing the residual sum of squares"
            )
        theta = candidate
        reduction = rss - rss_new
        relative_to = max(rss, np.finfo(float).tiny)
        fitted, resid, rss = fitted_new, resid_new, rss_new
        if reduction <= tol * relative_to:
            break
    else:
        raise ConvergenceError(f"no convergence in {max_iter} iterations")

    jac = _numeric_jacobian(predict, theta)
    return theta, fitted, y - fitted, jac, iteration


def _nls_predictor(expression, columns: dict[str, np.ndarray],
                   param_names: tuple[str, ...], n: int, weights=None):
    sqw = None if weights is None else np.sqrt(weights)

    def predict(theta: np.ndarray) -> np.ndarray:
        values = dict(zip(param_names, theta))
        with np.errstate(all="ignore"):
            out = evaluate_expression(expression, columns, values)
        out = np.broadcast_to(np.asarray(out, dtype=float), (n,)).copy()
        return out if sqw is None else sqw * out

    return predict


def fit_nls_arrays(expression, columns: dict[str, np.ndarray], y: np.ndarray,
                   start: dict[str, float], *, weights: np.ndarray | None = None,
                   max_iter: int = NLS_MAX_ITER, tol: float = NLS_TOL) -> FittedModel:
    """Nonlinear least squares on prepared column arrays.

    With *weights* the objective becomes sum(w_i * r_i^2), realized by
    scaling residuals by sqrt(w); this is the Bayesian-bootstrap path.
    """
    needed = expression_params(expression)
    missing = [p for p in needed if p not in start]
    if missing:
        raise FitError(f"start values missing for parameter(s) {', '.join(missing)}")
    unused = [p for p in start if p not in needed]
    if unused:
        raise FitError(f"start values for unknown parameter(s) {', '.join(unused)}")
    param_names = tuple(start)
    theta0 = np.array([float(start[p]) for p in param_names])
    y = np.asarray(y, dtype=float)
    n = y.size
    if n <= theta0.size:
        raise FitError(f"need more observations ({n}) than parameters ({theta0.size})")

    predict = _nls_predictor(expression, columns, param_names, n, weights)
    target = y if weights is None else np.sqrt(weights) * y
    theta, fitted, resid, jac, iterations = gauss_newton(
        predict, target, theta0, max_iter=max_iter, tol=tol
    )
    sigma2 = float(resid @ resid) / (n - theta.size)
    return FittedModel(
        kind="nls",
        coefficients=theta,
        labels=param_names,
        fitted=fitted,
        residuals=resid,
        y=target,
        n=n,
        m=theta.size,
        converged=True,
        iterations=iterations,
        sigma2=sigma2,
        expression=expression,
        param_names=param_names,
        jacobian=jac,
    )


def fit_nls(expression, data: DataFrame, response: str, start: dict[str, float],
            *, max_iter: int = NLS_MAX_ITER, tol: float = NLS_TOL) -> FittedModel:
    """Fit a nonlinear least squares model to a data frame.

    Rows with missing values in the response or any referenced column
    are dropped first. Every parameter must get a starting value.
    """
    col_names = expression_columns(expression)
    for name in [response] + col_names:
        if data[name].kind != NUMERIC:
            raise FitError(f"column {name!r} must be numeric for nonlinear fitting")
    keep = ~data[response].missing
    for name in col_names:
        keep &= ~data[name].missing
    rows = np.flatnonzero(keep)
    if rows.size == 0:
        raise FitError("no rows left after dropping missing values")
    columns = {name: data[name].values[rows].astype(float) for name in col_names}
    y = data[response].values[rows].astype(float)
    return fit_nls_arrays(expression, columns, y, start, max_iter=max_iter, tol=tol)


def with_design(design: DesignMatrix, X: np.ndarray,
                retained: np.ndarray | None = None) -> DesignMatrix:
    """A copy of *design* carrying different rows (resampled/weighted)."""
    return replace(design, X=X, retained=design.retained if retained is None else retained)
