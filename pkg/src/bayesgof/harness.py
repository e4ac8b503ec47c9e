"""Monte Carlo harness: calibration, size/power studies, data analysis, monitoring.

Replicates are independent work units.  Each replicate r derives its own
random stream as split(root, r), so results are identical for any worker
count and unaffected by adding or removing other replicates.  Worker threads
only ever assemble results by replicate index.

Stream layout (fixed, documented so runs can be reproduced precisely):
  calibration / size studies   replicate r: data split(c,0), posterior
                               split(c,1), discrete randomization split(c,2),
                               where c = split(root, r)
  power studies                per alternative d: base = split(root, d),
                               then per replicate as above
  analyze                      posterior split(rng,0), randomization split(rng,1)
  predictive recalibration     observed split(rng,0), predictive parameters
                               split(rng,1), replicate m: split(rng, 2 + m)
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from . import binning, gof, probkit
from .binning import BinScheme, equiprobable, default_bin_count
from .errors import ConfigError, DataError, DomainError, EvaluationError
from .gof import OutcomeBins, reference_auc, exceedance
from .models import (
    NormalModel,
    PoissonSaturated,
    generate_null_normal,
    generate_poisson,
    generate_t,
)
from .probkit import RngStream, ScalarDistribution, split

__all__ = [
    "ExperimentConfig",
    "KsResult",
    "CalibrationSeries",
    "CalibrationResult",
    "AucDistribution",
    "PowerRow",
    "PowerResult",
    "GofSummary",
    "AnalysisResult",
    "PredictiveAucResult",
    "MonitorRecord",
    "ks_statistic",
    "null_calibration",
    "null_auc_distribution",
    "power_study",
    "analyze",
    "predictive_auc_test",
    "stream_monitor",
]

POWER_METHODS = ("auc", "single-draw", "grouped")


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for the simulation studies; unused fields are ignored by each op."""

    model: str = "normal"  # "normal" or "poisson-synthetic"
    n: int = 50
    bins: int | None = None  # None: rule-of-thumb count for n
    replicates: int = 2000
    seed: int = 0
    draws_per_dataset: int = 500
    alpha: float = 0.05
    ks_alpha: float = 0.01
    include_classical: bool = False
    workers: int = 1
    df_grid: tuple[int, ...] = (1, 2, 3, 5, 10)
    methods: tuple[str, ...] = POWER_METHODS
    true_mean: float = 4.2
    prior_exponent: float = 0.5

    def __post_init__(self) -> None:
        if self.model not in ("normal", "poisson-synthetic"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.n < 2 or self.replicates < 1 or self.draws_per_dataset < 1:
            raise ConfigError("n, replicates and draws_per_dataset must be positive")
        if self.bins is not None and self.bins < 2:
            raise ConfigError("bins must be at least 2")
        if not 0.0 < self.alpha < 1.0 or not 0.0 < self.ks_alpha < 1.0:
            raise ConfigError("alpha levels must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if any(m not in POWER_METHODS for m in self.methods):
            raise ConfigError(f"methods must be among {POWER_METHODS}")
        if len(self.df_grid) < 1 or any(d <= 0 for d in self.df_grid):
            raise ConfigError("df_grid must be non-empty with positive entries")
        if self.true_mean <= 0:
            raise ConfigError("true_mean must be positive")

    @property
    def k(self) -> int:
        return self.bins if self.bins is not None else default_bin_count(self.n)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical: float
    alpha: float
    n: int
    passed: bool


@dataclass(frozen=True)
class CalibrationSeries:
    """Sorted replicate values with reference quantiles and summaries."""

    name: str
    values: np.ndarray
    ref_quantiles: np.ndarray
    mean: float
    variance: float
    ks: KsResult | None


@dataclass(frozen=True)
class CalibrationResult:
    series: dict[str, CalibrationSeries]
    n: int
    k: int
    replicates: int
    runtime_s: float


@dataclass(frozen=True)
class AucDistribution:
    values: np.ndarray  # sorted
    critical: float
    alpha: float
    replicates: int
    draws_per_dataset: int


@dataclass(frozen=True)
class PowerRow:
    df: float
    method: str
    rejections: int
    replicates: int
    rate: float


@dataclass(frozen=True)
class PowerResult:
    rows: tuple[PowerRow, ...]
    auc_critical: float

    def rate(self, df: float, method: str) -> float:
        for row in self.rows:
            if row.df == df and row.method == method:
                return row.rate
        raise KeyError((df, method))


@dataclass(frozen=True)
class GofSummary:
    auc: float
    exceedance_rate: float
    threshold: float
    n_draws: int
    k: int
    mean_bin_counts: tuple[float, ...]
    small_cells: tuple[int, ...]


@dataclass(frozen=True)
class AnalysisResult:
    summary: GofSummary
    values: np.ndarray  # per-draw statistic trace, in draw order


@dataclass(frozen=True)
class PredictiveAucResult:
    auc_observed: float
    predictive_aucs: np.ndarray
    p_value: float


@dataclass(frozen=True)
class MonitorRecord:
    index: int
    value: float
    valid: bool
    exceeds: bool
    cumulative_rate: float
    alert: bool


# ---------------------------------------------------------------------------
# small shared pieces
# ---------------------------------------------------------------------------

def ks_statistic(values, reference: ScalarDistribution, alpha: float = 0.01) -> KsResult:
    """One-sample Kolmogorov-Smirnov distance with its asymptotic critical value.

    critical = c(alpha) / sqrt(N) with c = sqrt(-ln(alpha/2) / 2); the sample
    must hold at least 20 points for the asymptotic regime to be meaningful.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size < 20:
        raise DomainError(f"KS needs at least 20 observations, got {v.size}")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    cdf_vals = np.asarray(probkit.cdf(reference, v), dtype=float)
    i = np.arange(1, v.size + 1)
    d_plus = np.max(i / v.size - cdf_vals)
    d_minus = np.max(cdf_vals - (i - 1) / v.size)
    d = float(max(d_plus, d_minus))
    critical = math.sqrt(-math.log(alpha / 2.0) / 2.0) / math.sqrt(v.size)
    return KsResult(d, critical, alpha, int(v.size), d < critical)


def _map_replicates(fn: Callable[[int], object], reps: int, workers: int) -> list:
    if workers <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(reps)))


def _null_edges(model: NormalModel, k: int) -> np.ndarray:
    """Data-space cut points at the null standard-normal k-tiles."""
    return probkit.normal_quantile(np.arange(1, k) / k)


def _normal_chisq_batch(
    y: np.ndarray, mu: np.ndarray, sigma: np.ndarray, scheme: BinScheme
) -> np.ndarray:
    """Statistic values for many (mu, sigma) draws at once.

    Matches gof.posterior_chisq_continuous row for row; kept vectorized here
    because the simulation studies evaluate millions of draws.
    """
    u = probkit.normal_cdf((y[None, :] - mu[:, None]) / sigma[:, None])
    edges = np.asarray(scheme.edges)
    idx = np.maximum(np.searchsorted(edges, u, side="left"), 1) - 1
    k = scheme.k
    flat = (np.arange(u.shape[0])[:, None] * k + idx).ravel()
    counts = np.bincount(flat, minlength=u.shape[0] * k).reshape(u.shape[0], k)
    expected = u.shape[1] * scheme.widths()
    return np.sum((counts - expected) ** 2 / expected, axis=1)


def _series(
    name: str, values: np.ndarray, ref_df: int | None, ks_alpha: float
) -> CalibrationSeries:
    v = np.sort(np.asarray(values, dtype=float))
    pp = (np.arange(1, v.size + 1) - 0.5) / v.size
    if ref_df is not None:
        ref = probkit.chi2_quantile(ref_df, pp)
        # below the KS asymptotic minimum the test is skipped, not failed
        ks = ks_statistic(v, probkit.chi_squared(ref_df), ks_alpha) if v.size >= 20 else None
    else:
        ref = np.full(v.size, np.nan)
        ks = None
    var = float(v.var(ddof=1)) if v.size > 1 else 0.0
    return CalibrationSeries(name, v, np.asarray(ref), float(v.mean()), var, ks)


# ---------------------------------------------------------------------------
# null calibration
# ---------------------------------------------------------------------------

def null_calibration(config: ExperimentConfig) -> CalibrationResult:
    """Sampling distribution of the statistics under a correctly specified model.

    One posterior draw per replicate dataset.  The posterior-draw statistic is
    compared to chi-square(k - 1); when include_classical is set (normal model
    only) the raw-MLE and grouped-MLE statistics are computed on the same
    datasets with cells fixed at the null k-tiles.
    """
    t0 = time.perf_counter()
    root = RngStream(config.seed)
    k = config.k
    scheme = equiprobable(k)

    if config.model == "normal":
        model = NormalModel()
        edges = _null_edges(model, k)

        def one(r: int) -> tuple[float, float, float]:
            c = split(root, r)
            y = generate_null_normal(config.n, split(c, 0))
            theta = model.posterior_draw(y, split(c, 1))
            value = gof.posterior_chisq_continuous(y, model, theta, scheme).value
            if not config.include_classical:
                return (value, np.nan, np.nan)
            plug = gof.plugin_chisq(y, model, edges).value
            grouped = gof.grouped_chisq(y, model, edges).value
            return (value, plug, grouped)

        rows = np.asarray(_map_replicates(one, config.replicates, config.workers))
        series = {"posterior": _series("posterior", rows[:, 0], k - 1, config.ks_alpha)}
        if config.include_classical:
            series["plugin"] = _series("plugin", rows[:, 1], None, config.ks_alpha)
            series["grouped"] = _series(
                "grouped", rows[:, 2], k - 1 - model.n_params, config.ks_alpha
            )
    else:
        if config.include_classical:
            raise ConfigError("classical statistics are defined for the normal model only")
        offsets = np.ones(config.n)
        model = PoissonSaturated(offsets, config.prior_exponent)
        means = config.true_mean * offsets

        def one(r: int) -> float:
            c = split(root, r)
            y = generate_poisson(means, split(c, 0))
            theta = model.posterior_draw(y, split(c, 1))
            return gof.posterior_chisq_discrete_randomized(
                y, model, theta, scheme, split(c, 2)
            ).value

        values = np.asarray(_map_replicates(one, config.replicates, config.workers))
        series = {"posterior": _series("posterior", values, k - 1, config.ks_alpha)}

    return CalibrationResult(
        series=series,
        n=config.n,
        k=k,
        replicates=config.replicates,
        runtime_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# reference-exceedance AUC: null distribution and power
# ---------------------------------------------------------------------------

def _auc_for_dataset(
    y: np.ndarray, model: NormalModel, scheme: BinScheme, draws: int, rng: RngStream
) -> tuple[float, float]:
    """(auc, first-draw statistic) from a batch of posterior draws."""
    mu, sigma = model.posterior_draws(y, draws, rng)
    values = _normal_chisq_batch(y, mu, sigma, scheme)
    return reference_auc(values, scheme.k - 1), float(values[0])


def null_auc_distribution(config: ExperimentConfig) -> AucDistribution:
    """Null sampling distribution of the AUC summary for the normal model,
    and the empirical critical value at the configured test level."""
    if config.model != "normal":
        raise ConfigError("the AUC null distribution is tabulated for the normal model")
    root = RngStream(config.seed)
    scheme = equiprobable(config.k)
    model = NormalModel()

    def one(r: int) -> float:
        c = split(root, r)
        y = generate_null_normal(config.n, split(c, 0))
        return _auc_for_dataset(y, model, scheme, config.draws_per_dataset, split(c, 1))[0]

    values = np.sort(np.asarray(_map_replicates(one, config.replicates, config.workers)))
    # empirical upper-alpha point: smallest order statistic with at most
    # alpha mass strictly above it
    idx = min(values.size - 1, max(0, math.ceil((1.0 - config.alpha) * values.size) - 1))
    return AucDistribution(
        values=values,
        critical=float(values[idx]),
        alpha=config.alpha,
        replicates=config.replicates,
        draws_per_dataset=config.draws_per_dataset,
    )


def power_study(config: ExperimentConfig, auc_critical: float) -> PowerResult:
    """Rejection rates against heavier-tailed alternatives on the df grid.

    Three tests, all at the same nominal level: the AUC summary against its
    stored null critical value; the first-draw statistic against the upper
    chi-square(k - 1) point; and the grouped-MLE statistic against the upper
    chi-square(k - 1 - s) point with cells fixed at the null k-tiles.
    """
    if config.model != "normal":
        raise ConfigError("the power study is defined for the normal model")
    if not np.isfinite(auc_critical) or not 0.0 < auc_critical < 1.0:
        raise ConfigError(f"auc_critical must lie in (0, 1), got {auc_critical}")
    root = RngStream(config.seed)
    k = config.k
    scheme = equiprobable(k)
    model = NormalModel()
    edges = _null_edges(model, k)
    single_crit = probkit.chi2_quantile(k - 1, 1.0 - config.alpha)
    grouped_crit = probkit.chi2_quantile(k - 1 - model.n_params, 1.0 - config.alpha)

    rows: list[PowerRow] = []
    for d_index, df in enumerate(config.df_grid):
        base = split(root, d_index)

        def one(r: int) -> tuple[bool, bool, bool]:
            c = split(base, r)
            y = generate_t(config.n, df, split(c, 0))
            auc, first = _auc_for_dataset(
                y, model, scheme, config.draws_per_dataset, split(c, 1)
            )
            rej_auc = auc > auc_critical
            rej_single = first > single_crit
            rej_grouped = False
            if "grouped" in config.methods:
                rej_grouped = gof.grouped_chisq(y, model, edges).value > grouped_crit
            return (rej_auc, rej_single, rej_grouped)

        flags = np.asarray(_map_replicates(one, config.replicates, config.workers))
        for j, method in enumerate(POWER_METHODS):
            if method not in config.methods:
                continue
            rej = int(flags[:, j].sum())
            rows.append(
                PowerRow(float(df), method, rej, config.replicates, rej / config.replicates)
            )
    return PowerResult(tuple(rows), float(auc_critical))


# ---------------------------------------------------------------------------
# applied analysis
# ---------------------------------------------------------------------------

def analyze(
    data,
    model,
    rng: RngStream,
    *,
    n_draws: int = 5000,
    scheme: BinScheme | None = None,
    threshold: float | None = None,
    outcome_bins: OutcomeBins | None = None,
) -> AnalysisResult:
    """Fit diagnostics for one dataset: one statistic value per posterior draw,
    summarized by the AUC, the exceedance rate over the threshold, and mean
    cell counts.

    Discrete models use the randomized allocation path unless explicit
    outcome_bins are supplied; the randomization consumes one dedicated child
    stream across draws, so results are reproducible from (seed, path).
    """
    y = model.validate_data(data)
    if n_draws < 1:
        raise ConfigError("n_draws must be positive")
    sch = scheme if scheme is not None else equiprobable(default_bin_count(y.size))
    k = outcome_bins.k if outcome_bins is not None else sch.k
    thr = threshold if threshold is not None else probkit.chi2_quantile(k - 1, 0.95)

    draw_rng = split(rng, 0)
    assign_rng = split(rng, 1)

    counts_total = np.zeros(k)
    values = np.empty(n_draws)

    if not model.is_discrete and isinstance(model, NormalModel):
        mu, sigma = model.posterior_draws(y, n_draws, draw_rng)
        values = _normal_chisq_batch(y, mu, sigma, sch)
        u = probkit.normal_cdf((y[None, :] - mu[:, None]) / sigma[:, None])
        edges_arr = np.asarray(sch.edges)
        idx = np.maximum(np.searchsorted(edges_arr, u, side="left"), 1) - 1
        counts_total = np.bincount(idx.ravel(), minlength=k).astype(float)
        expected_mean = y.size * sch.widths()
    else:
        thetas = model.posterior_sample(y, n_draws, draw_rng)
        expected_total = np.zeros(k)
        for i, theta in enumerate(thetas):
            if outcome_bins is not None:
                stat = gof.posterior_chisq_fixed_outcome_bins(y, model, theta, outcome_bins)
                probs = np.asarray(
                    model.outcome_bin_probs(theta, outcome_bins), dtype=float
                ).mean(axis=0)
                expected_total += y.size * probs
            elif model.is_discrete:
                stat = gof.posterior_chisq_discrete_randomized(
                    y, model, theta, sch, assign_rng
                )
                expected_total += y.size * sch.widths()
            else:
                stat = gof.posterior_chisq_continuous(y, model, theta, sch)
                expected_total += y.size * sch.widths()
            values[i] = stat.value
            counts_total += stat.counts
        expected_mean = expected_total / n_draws

    mean_counts = counts_total / n_draws
    # cells this thin degrade the chi-square approximation; kept, but flagged
    small = tuple(int(i) for i in np.nonzero(expected_mean < 1.0)[0])
    summary = GofSummary(
        auc=reference_auc(values, k - 1),
        exceedance_rate=exceedance(values, thr),
        threshold=float(thr),
        n_draws=n_draws,
        k=k,
        mean_bin_counts=tuple(float(c) for c in mean_counts),
        small_cells=small,
    )
    return AnalysisResult(summary, values)


def predictive_auc_test(
    data,
    model,
    rng: RngStream,
    *,
    pp_reps: int = 100,
    n_draws: int = 1000,
    scheme: BinScheme | None = None,
) -> PredictiveAucResult:
    """Significance of an observed AUC by posterior-predictive recalibration.

    For each replicate, a parameter draw generates a replicate dataset, the
    posterior is re-fit to that dataset, and its AUC is recorded; the p-value
    is the fraction of replicate AUCs at least as large as the observed one.
    """
    y = model.validate_data(data)
    if pp_reps < 1:
        raise ConfigError("pp_reps must be positive")
    sch = scheme if scheme is not None else equiprobable(default_bin_count(y.size))

    observed = analyze(y, model, split(rng, 0), n_draws=n_draws, scheme=sch).summary.auc
    thetas = model.posterior_sample(y, pp_reps, split(rng, 1))
    aucs = np.empty(pp_reps)
    for m_idx, theta in enumerate(thetas):
        c = split(rng, 2 + m_idx)
        y_pp = model.predictive_draw(theta, split(c, 0), n=y.size)
        try:
            aucs[m_idx] = analyze(
                y_pp, model, split(c, 1), n_draws=n_draws, scheme=sch
            ).summary.auc
        except DataError as exc:
            raise EvaluationError(
                f"predictive replicate {m_idx} violates model data requirements: {exc}"
            ) from exc
    p_value = float(np.mean(aucs >= observed))
    return PredictiveAucResult(float(observed), aucs, p_value)


# ---------------------------------------------------------------------------
# streaming monitor
# ---------------------------------------------------------------------------

def stream_monitor(
    draw_stream: Iterable,
    data,
    model,
    scheme: BinScheme,
    rng: RngStream | None = None,
    *,
    threshold: float | None = None,
    alert_factor: float = 8.0,
    min_draws: int = 200,
) -> Iterator[MonitorRecord]:
    """Walk a stream of parameter draws and track tail exceedances online.

    Each draw yields one record with the statistic value and the running
    exceedance rate over valid draws.  The alert flag latches once the rate
    sits above alert_factor times the reference tail mass with at least
    min_draws valid draws seen.  Memory use is constant in stream length.

    The default factor is deliberately far above 1: on a well-specified
    model the per-dataset exceedance rate varies widely around the nominal
    tail mass (its 95th percentile sits near 4x nominal for 50 observations
    and five cells), and a factor of 8 keeps false alarms near 1% while a
    grossly miscoded evaluator overshoots it within a few hundred draws.
    """
    y = model.validate_data(data)
    if alert_factor <= 1.0:
        raise ConfigError("alert_factor must exceed 1")
    if min_draws < 1:
        raise ConfigError("min_draws must be positive")
    thr = threshold if threshold is not None else probkit.chi2_quantile(scheme.k - 1, 0.95)
    nominal = probkit.chi2_survival(scheme.k - 1, thr)
    band = alert_factor * nominal

    seen_valid = 0
    exceed_count = 0
    alerted = False
    for index, theta in enumerate(draw_stream):
        try:
            if model.is_discrete:
                if rng is None:
                    raise ConfigError("discrete models need an rng for randomized allocation")
                value = gof.posterior_chisq_discrete_randomized(
                    y, model, theta, scheme, rng
                ).value
            else:
                value = gof.posterior_chisq_continuous(y, model, theta, scheme).value
            valid = True
        except (EvaluationError, DomainError, DataError, ValueError, TypeError):
            value = float("nan")
            valid = False
        exceeds = bool(valid and value > thr)
        if valid:
            seen_valid += 1
            exceed_count += int(exceeds)
        rate = exceed_count / seen_valid if seen_valid else 0.0
        if seen_valid >= min_draws and rate > band:
            alerted = True
        yield MonitorRecord(index, value, valid, exceeds, rate, alerted)
