"""Chi-square goodness-of-fit statistics and their summaries.

The central quantity is a Pearson statistic whose cell counts come from
probability-integral transforms of the observations, evaluated at a single
parameter value sampled from the posterior.  Its reference law is chi-square
with (cells - 1) degrees of freedom regardless of how many parameters the
model carries, which is what makes averaging tail areas over posterior draws
meaningful.  Classical comparators (cells fixed in data space, parameters
fitted by raw-data or grouped maximum likelihood) are provided for the same
cell layouts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import probkit
from .binning import BinScheme, assign, assign_discrete_randomized
from .errors import DomainError, EvaluationError, OptimizationError
from .probkit import RngStream

__all__ = [
    "ChisqDraw",
    "BinnedStat",
    "FittedStat",
    "OutcomeBins",
    "pearson",
    "posterior_chisq_continuous",
    "posterior_chisq_discrete_randomized",
    "posterior_chisq_fixed_outcome_bins",
    "plugin_chisq",
    "grouped_chisq",
    "chisq_discrepancy",
    "reference_auc",
    "exceedance",
]

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class ChisqDraw:
    """One statistic value at one posterior draw."""

    value: float
    dof: int
    draw_index: int


@dataclass(frozen=True)
class BinnedStat:
    value: float
    counts: np.ndarray


@dataclass(frozen=True)
class FittedStat:
    """A classical statistic together with the parameter value it used."""

    value: float
    counts: np.ndarray
    probs: np.ndarray
    theta: tuple
    iterations: int = 0


@dataclass(frozen=True)
class OutcomeBins:
    """Partition of the non-negative integers into contiguous cells.

    ``uppers`` holds the inclusive upper endpoint of every cell but the last;
    the last cell is open-ended.  uppers (1, 3, 5) means cells
    {0-1}, {2-3}, {4-5}, {6, 7, ...}.
    """

    uppers: tuple[int, ...]

    def __post_init__(self) -> None:
        u = self.uppers
        if len(u) < 1:
            raise DomainError("outcome bins need at least one finite upper endpoint")
        if u[0] < 0 or any(a >= b for a, b in zip(u, u[1:])):
            raise DomainError("uppers must be non-negative and strictly increasing")

    @property
    def k(self) -> int:
        return len(self.uppers) + 1

    def counts(self, y: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.uppers), y, side="left")
        return np.bincount(idx, minlength=self.k)


def pearson(counts, probs) -> float:
    """Sum of (observed - expected)^2 / expected over cells."""
    m = np.asarray(counts, dtype=float)
    p = np.asarray(probs, dtype=float)
    if m.shape != p.shape or m.ndim != 1 or m.size < 2:
        raise DomainError("counts and probs must be matching 1-D vectors of length >= 2")
    if np.any(m < 0) or np.any(m != np.floor(m)):
        raise DomainError("counts must be non-negative integers")
    n = m.sum()
    if n <= 0:
        raise DomainError("counts must sum to a positive total")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"cell probabilities must sum to 1, got {p.sum()!r}")
    if np.any(p < PROB_FLOOR):
        raise EvaluationError(
            f"cell probability below the {PROB_FLOOR} floor in cells "
            f"{np.nonzero(p < PROB_FLOOR)[0].tolist()}"
        )
    expected = n * p
    return float(np.sum((m - expected) ** 2 / expected))


def _check_unit_interval(u: np.ndarray, what: str) -> None:
    bad = ~(np.isfinite(u) & (u >= 0.0) & (u <= 1.0))
    if np.any(bad):
        raise EvaluationError(
            f"{what} produced invalid values at observations {np.nonzero(bad)[0].tolist()}"
        )


def posterior_chisq_continuous(data, model, theta, scheme: BinScheme) -> BinnedStat:
    """Pearson statistic from CDF transforms at one parameter value.

    Each observation is mapped to u = F_j(y_j | theta) and assigned to a
    right-closed cell of the scheme; cell probabilities are the scheme's
    widths.  Reference law: chi-square with scheme.k - 1 degrees of freedom
    when theta is a posterior draw.
    """
    y = np.asarray(data, dtype=float)
    u = np.asarray(model.obs_cdf(y, theta), dtype=float)
    _check_unit_interval(u, "CDF transform")
    idx = assign(scheme, u)
    counts = np.bincount(idx, minlength=scheme.k)
    return BinnedStat(pearson(counts, scheme.widths()), counts)


def posterior_chisq_discrete_randomized(
    data, model, theta, scheme: BinScheme, rng: RngStream
) -> BinnedStat:
    """Discrete-data variant: each outcome's CDF mass interval is resolved
    to a single point drawn uniformly within it, then binned as usual."""
    y = np.asarray(data)
    f_below, f_at = model.obs_cdf_pair(y, theta)
    f_below = np.asarray(f_below, dtype=float)
    f_at = np.asarray(f_at, dtype=float)
    _check_unit_interval(f_below, "CDF-below transform")
    _check_unit_interval(f_at, "CDF-at transform")
    zero = ~(f_at > f_below)
    if np.any(zero):
        raise EvaluationError(
            "observed outcome has zero probability at this draw for observations "
            f"{np.nonzero(zero)[0].tolist()}"
        )
    idx = assign_discrete_randomized(scheme, f_below, f_at, rng)
    counts = np.bincount(idx, minlength=scheme.k)
    return BinnedStat(pearson(counts, scheme.widths()), counts)


def posterior_chisq_fixed_outcome_bins(
    data, model, theta, bins: OutcomeBins
) -> BinnedStat:
    """Discrete-data variant with cells fixed in outcome space.

    Observed counts are parameter-free; the cell probabilities are averaged
    per-observation model probabilities at the sampled parameter value.
    """
    y = np.asarray(data)
    counts = bins.counts(y)
    probs = np.asarray(model.outcome_bin_probs(theta, bins), dtype=float)
    if probs.ndim == 2:
        probs = probs.mean(axis=0)
    if not np.all(np.isfinite(probs)):
        raise EvaluationError("outcome-bin probabilities are not finite")
    return BinnedStat(pearson(counts, probs), counts)


def _data_space_counts(y: np.ndarray, edges) -> np.ndarray:
    cuts = np.asarray(edges, dtype=float)
    if cuts.ndim != 1 or cuts.size < 1 or np.any(np.diff(cuts) <= 0):
        raise DomainError("data-space edges must be strictly increasing interior cut points")
    idx = np.searchsorted(cuts, y, side="left")
    return np.bincount(idx, minlength=cuts.size + 1)


def plugin_chisq(data, model, edges) -> FittedStat:
    """Pearson statistic with cells fixed in data space and cell
    probabilities evaluated at the raw-data maximum-likelihood estimate.

    Its null law is not chi-square: it sits stochastically between
    chi-square(K - 1 - s) and chi-square(K - 1), s the number of fitted
    parameters.
    """
    y = np.asarray(data, dtype=float)
    theta = model.mle(y)
    counts = _data_space_counts(y, edges)
    probs = np.asarray(model.cell_probs(edges, theta), dtype=float)
    if np.any(probs < PROB_FLOOR):
        raise EvaluationError("fitted cell probability below floor at the MLE")
    return FittedStat(pearson(counts, probs), counts, probs, tuple(np.atleast_1d(theta)))


def grouped_chisq(
    data, model, edges, *, max_iter: int = 500, rel_tol: float = 1e-8
) -> FittedStat:
    """Pearson statistic at the grouped-data maximum-likelihood estimate.

    The parameter maximizes the multinomial likelihood of the observed cell
    counts, found by a derivative-free simplex search started at the raw-data
    MLE.  Reference law: chi-square(K - 1 - s).
    """
    y = np.asarray(data, dtype=float)
    counts = _data_space_counts(y, edges)
    start = np.asarray(model.free_params(model.mle(y)), dtype=float)

    def neg_group_loglik(vec: np.ndarray) -> float:
        theta = model.theta_from_free(vec)
        p = np.asarray(model.cell_probs(edges, theta), dtype=float)
        if np.any(p < 1e-300) or not np.all(np.isfinite(p)):
            return np.inf
        return -float(np.dot(counts, np.log(p)))

    f0 = neg_group_loglik(start)
    if not np.isfinite(f0):
        raise EvaluationError("grouped likelihood is not finite at the raw MLE start")
    # convergence is judged on the objective (relative rel_tol).  Two guards
    # against simplex pathologies: the initial simplex is sized to the
    # parameter scale (scipy's 5% default crawls when the grouped optimum sits
    # a standard error away), and the search restarts from its best point with
    # a fresh simplex when a round stalls.  Total budget stays max_iter.
    remaining = max_iter
    used = 0
    x = start
    res = None
    while remaining > 0:
        steps = 0.1 * (1.0 + np.abs(x))
        simplex = np.vstack([x, x + np.diag(steps)])
        res = optimize.minimize(
            neg_group_loglik,
            x,
            method="Nelder-Mead",
            options={
                "maxiter": min(remaining, 200),
                "initial_simplex": simplex,
                "xatol": 1e-4 * (1.0 + float(np.abs(start).max())),
                "fatol": rel_tol * (1.0 + abs(f0)),
            },
        )
        remaining -= res.nit
        used += int(res.nit)
        x = res.x
        if res.success or res.nit == 0:
            break
    if res is None or not res.success:
        raise OptimizationError(
            f"grouped MLE search did not converge in {max_iter} iterations"
        )
    theta = model.theta_from_free(res.x)
    probs = np.asarray(model.cell_probs(edges, theta), dtype=float)
    if np.any(probs < PROB_FLOOR):
        raise EvaluationError("grouped-fit cell probability below floor")
    return FittedStat(pearson(counts, probs), counts, probs, tuple(np.atleast_1d(theta)), used)


def chisq_discrepancy(y_rep, model, theta) -> float:
    """Variance-scaled squared-residual discrepancy for a replicate dataset.

    Useful as a posterior-predictive comparator; unlike the binned statistics
    it has no chi-square reference law under parameter uncertainty.
    """
    y = np.asarray(y_rep, dtype=float)
    mean, var = model.obs_mean_var(theta)
    mean = np.broadcast_to(np.asarray(mean, dtype=float), y.shape)
    var = np.broadcast_to(np.asarray(var, dtype=float), y.shape)
    if np.any(var <= 0) or not np.all(np.isfinite(var)):
        raise EvaluationError("observation variances must be positive and finite")
    return float(np.sum((y - mean) ** 2 / var))


def reference_auc(values, dof: int) -> float:
    """Probability that the statistic exceeds an independent chi-square(dof)
    variate, averaged over the supplied draws.

    Equals the area under the ROC curve separating the two laws; 0.5 when the
    draws follow the reference chi-square exactly, and near 1 under misfit.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DomainError("need a non-empty 1-D vector of statistic values")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise DomainError("statistic values must be finite and non-negative")
    if dof < 1:
        raise DomainError(f"dof must be >= 1, got {dof}")
    # Pr(value > X) for X ~ chi-square(dof): the CDF at each draw, averaged
    return float(np.mean(probkit.chi2_cdf(dof, v)))


def exceedance(values, threshold: float) -> float:
    """Fraction of draws strictly above the threshold."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DomainError("need a non-empty 1-D vector of statistic values")
    if not np.isfinite(threshold):
        raise DomainError("threshold must be finite")
    return float(np.mean(v > threshold))
