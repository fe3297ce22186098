"""Nonparametric and Bayesian bootstrap over the full analysis pipeline.

Reproducibility contract: replicate r draws from a Philox (4x64)
counter-based generator keyed with ``(seed, r)``, so its resample
indices or Dirichlet weights depend on the seed and replicate index
alone. Results are therefore bitwise identical for any worker count
and any scheduling order. The environment variable ``RESI_THREADS``
caps the worker pool.

A replicate whose refit fails (non-convergence, rank deficiency,
singular covariance) counts as a failed attempt and is excluded from
the replicate matrix; interval construction uses the successes only.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BootstrapError, FitError, InferenceError
from .frames import DataFrame
from .pipeline import Analysis, ModelSpec

NONPARAMETRIC = "nonparametric"
BAYESIAN = "bayesian"


@dataclass(frozen=True)
class BootSpec:
    """Bootstrap settings: method, replicate count, levels, seed."""

    method: str = NONPARAMETRIC
    nboot: int = 1000
    alphas: tuple[float, ...] = (0.05,)
    seed: int = 0
    store_replicates: bool = False

    def __post_init__(self):
        method = {"bayes": BAYESIAN}.get(self.method, self.method)
        if method not in (NONPARAMETRIC, BAYESIAN):
            raise BootstrapError(f"unknown bootstrap method {self.method!r}")
        object.__setattr__(self, "method", method)
        if self.nboot < 1:
            raise BootstrapError("nboot must be at least 1")
        alphas = tuple(float(a) for a in self.alphas)
        if len(set(alphas)) != len(alphas):
            raise BootstrapError("alpha levels must be distinct")
        if any(not 0.0 < a < 1.0 for a in alphas):
            raise BootstrapError("alpha levels must lie in (0, 1)")
        object.__setattr__(self, "alphas", tuple(sorted(alphas)))


@dataclass
class BootstrapResult:
    """Replicate accounting, percentile intervals, optional replicates."""

    labels: list[str]
    attempts: int
    successes: int
    alphas: tuple[float, ...]
    method: str
    seed: int
    intervals: dict[str, dict[float, tuple[float, float]]]
    replicates: np.ndarray | None = None   # successes x len(labels), stored on request


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """The counter-based generator for one replicate: Philox(key=(seed, r))."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def percentile_ci(replicates, alpha: float) -> tuple[float, float]:
    """Percentile interval: linear-interpolation quantiles at alpha/2
    and 1 - alpha/2 (order statistic position h = (B - 1) p + 1)."""
    values = np.asarray(replicates, dtype=float)
    if values.size == 0:
        raise BootstrapError("cannot form an interval from zero replicates")
    lo, hi = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0], method="linear")
    return float(lo), float(hi)


def _intervals(labels, matrix: np.ndarray, alphas):
    out: dict[str, dict[float, tuple[float, float]]] = {}
    for j, label in enumerate(labels):
        out[label] = {alpha: percentile_ci(matrix[:, j], alpha) for alpha in alphas}
    return out


def _worker_count(requested: int | None) -> int:
    cap_text = os.environ.get("RESI_THREADS", "").strip()
    cap = int(cap_text) if cap_text else None
    workers = requested if requested is not None else (cap or 1)
    if cap is not None:
        workers = min(workers, cap)
    return max(1, workers)


def run_bootstrap(pipeline, data: DataFrame | None = None,
                  spec: BootSpec = BootSpec(), *,
                  workers: int | None = None) -> BootstrapResult:
    """Bootstrap every RESI quantity of an analysis pipeline.

    ``pipeline`` is a :class:`~resi.pipeline.ModelSpec` (or formula
    string) together with ``data``, or an already prepared
    :class:`~resi.pipeline.Analysis`. Nonparametric replicates resample
    the n retained rows with replacement; Bayesian replicates draw flat
    Dirichlet weights (normalized unit exponentials) and refit by
    weighted least squares, and are available for least squares and
    nonlinear pipelines only.
    """
    if isinstance(pipeline, Analysis):
        analysis = pipeline
    else:
        if data is None:
            raise BootstrapError("data frame required when passing a model spec")
        analysis = Analysis(ModelSpec.of(pipeline), data)
    if spec.method == BAYESIAN and analysis.kind == "glm":
        raise BootstrapError(
            "the Bayesian bootstrap applies to least squares and nonlinear "
            "pipelines only"
        )

    n = analysis.n
    nonparametric = spec.method == NONPARAMETRIC

    def one(index: int):
        rng = replicate_rng(spec.seed, index)
        if nonparametric:
            idx, weights = rng.integers(0, n, size=n), None
        else:
            raw = rng.standard_exponential(n)
            idx, weights = None, raw / raw.sum()
        try:
            return analysis.quantity_values(analysis.evaluate(idx, weights))
        except (FitError, InferenceError):
            return None

    workers = _worker_count(workers)
    if workers == 1:
        outcomes = [one(r) for r in range(spec.nboot)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(spec.nboot)))

    rows = [row for row in outcomes if row is not None]
    if not rows:
        raise BootstrapError("every bootstrap replicate failed to fit")
    matrix = np.vstack(rows)
    labels = list(analysis.quantity_labels)
    result = BootstrapResult(
        labels=labels,
        attempts=spec.nboot,
        successes=len(rows),
        alphas=spec.alphas,
        method=spec.method,
        seed=spec.seed,
        intervals=_intervals(labels, matrix, spec.alphas),
        replicates=matrix if spec.store_replicates else None,
    )
    return result


def reextract(result: BootstrapResult, alphas) -> dict[str, dict[float, tuple[float, float]]]:
    """Build intervals at new alpha levels from stored replicates.

    Requires the bootstrap to have been run with
    ``store_replicates=True``; otherwise the replicate matrix was
    discarded and this raises.
    """
    if result.replicates is None:
        raise BootstrapError(
            "bootstrap replicates were not stored; rerun with "
            "store_replicates=True to change alpha levels afterwards"
        )
    alphas = tuple(float(a) for a in alphas)
    if any(not 0.0 < a < 1.0 for a in alphas):
        raise BootstrapError("alpha levels must lie in (0, 1)")
    return _intervals(result.labels, result.replicates, sorted(alphas))


def write_replicates_csv(result: BootstrapResult, path: str):
    """Export stored replicates: one row per success, one column per
    quantity, header row of quantity labels."""
    if result.replicates is None:
        raise BootstrapError(
            "bootstrap replicates were not stored; rerun with "
            "store_replicates=True to export them"
        )
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(result.labels)
        for row in result.replicates:
            writer.writerow([repr(float(v)) for v in row])
