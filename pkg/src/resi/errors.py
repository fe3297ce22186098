"""Exception hierarchy shared across the package."""


class ResiError(Exception):
    """Base class for all errors raised by this package."""


class FormulaError(ResiError):
    """Malformed model formula or nonlinear expression."""


class DataError(ResiError):
    """Unreadable or structurally invalid tabular input."""


class DesignError(ResiError):
    """A design matrix cannot be built from the given frame."""


class FitError(ResiError):
    """Model estimation failed (rank deficiency, invalid response, ...)."""


class ConvergenceError(FitError):
    """An iterative fitter did not reach its convergence criterion."""


class SingularGradientError(ConvergenceError):
    """Gauss-Newton normal equations are numerically singular."""


class InferenceError(ResiError):
    """A Wald test or covariance estimate is not computable."""


class BootstrapError(ResiError):
    """Bootstrap failed entirely or stored replicates are unavailable."""
