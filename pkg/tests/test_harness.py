"""Experiment-level behavior: KS utility, replicate bookkeeping, determinism,
analysis summaries, the predictive significance test, and the stream monitor."""

import collections

import numpy as np
import pytest

from bayesgof import probkit
from bayesgof.binning import equiprobable
from bayesgof.errors import ConfigError, DomainError
from bayesgof.harness import (
    ExperimentConfig,
    analyze,
    ks_statistic,
    null_auc_distribution,
    null_calibration,
    power_study,
    predictive_auc_test,
    stream_monitor,
)
from bayesgof.models import NormalModel, PoissonCommonRate, generate_t
from bayesgof.probkit import RngStream, split


def test_ks_exact_plotting_quantiles():
    n = 100
    sample = probkit.chi2_quantile(4, (np.arange(1, n + 1) - 0.5) / n)
    res = ks_statistic(sample, probkit.chi_squared(4))
    assert res.statistic == pytest.approx(0.5 / n, abs=1e-12)


def test_ks_needs_twenty_points():
    with pytest.raises(DomainError):
        ks_statistic(np.ones(19), probkit.chi_squared(4))


def test_ks_accepts_matching_law():
    for seed in (0, 1, 2, 3, 4):
        draws = probkit.sample(probkit.chi_squared(4), RngStream(seed), 2000)
        assert ks_statistic(draws, probkit.chi_squared(4), alpha=0.01).passed


def test_ks_rejects_wrong_df():
    draws = probkit.sample(probkit.chi_squared(2), RngStream(77), 2000)
    res = ks_statistic(draws, probkit.chi_squared(4), alpha=0.01)
    assert not res.passed
    assert res.statistic > 0.15


def test_ks_critical_constants():
    r1 = ks_statistic(np.linspace(0.01, 0.99, 400), probkit.uniform(0, 1), alpha=0.01)
    r5 = ks_statistic(np.linspace(0.01, 0.99, 400), probkit.uniform(0, 1), alpha=0.05)
    assert r1.critical == pytest.approx(1.628 / 20, abs=2e-4)
    assert r5.critical == pytest.approx(1.358 / 20, abs=2e-4)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(model="weibull")
    with pytest.raises(ConfigError):
        ExperimentConfig(replicates=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(alpha=1.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(methods=("auc", "bogus"))
    with pytest.raises(ConfigError):
        ExperimentConfig(bins=1)


def test_default_bin_rule_in_config():
    assert ExperimentConfig(n=50).k == 5
    assert ExperimentConfig(n=200).k == 8
    assert ExperimentConfig(n=200, bins=5).k == 5


def test_single_replicate_skips_ks():
    res = null_calibration(ExperimentConfig(n=30, replicates=1, seed=4))
    s = res.series["posterior"]
    assert s.values.shape == (1,)
    assert s.ks is None


def test_replicate_values_are_independent_of_count():
    # the first 10 replicates must not change when 15 more are appended
    small = null_calibration(ExperimentConfig(n=30, replicates=10, seed=9))
    large = null_calibration(ExperimentConfig(n=30, replicates=25, seed=9))
    small_counts = collections.Counter(np.round(small.series["posterior"].values, 12))
    large_counts = collections.Counter(np.round(large.series["posterior"].values, 12))
    assert all(large_counts[v] >= c for v, c in small_counts.items())


def test_worker_count_does_not_change_results():
    base = ExperimentConfig(n=40, replicates=60, seed=14, include_classical=True)
    one = null_calibration(base)
    four = null_calibration(ExperimentConfig(**{**base.__dict__, "workers": 4}))
    for name in ("posterior", "plugin", "grouped"):
        assert np.array_equal(one.series[name].values, four.series[name].values)


def test_classical_requires_normal_model():
    cfg = ExperimentConfig(model="poisson-synthetic", n=30, replicates=5,
                           include_classical=True)
    with pytest.raises(ConfigError):
        null_calibration(cfg)


def test_auc_null_requires_normal_model():
    cfg = ExperimentConfig(model="poisson-synthetic", n=30, replicates=30)
    with pytest.raises(ConfigError):
        null_auc_distribution(cfg)


def test_auc_null_centering(stored_auc_null):
    assert abs(stored_auc_null.values.mean() - 0.5) < 0.02
    assert stored_auc_null.critical > 0.5
    assert np.all(np.diff(stored_auc_null.values) >= 0)


def test_power_rows_shape():
    cfg = ExperimentConfig(n=50, replicates=40, seed=3, df_grid=(1, 5),
                           draws_per_dataset=100)
    res = power_study(cfg, auc_critical=0.786)
    assert len(res.rows) == 2 * 3
    for row in res.rows:
        assert 0.0 <= row.rate <= 1.0
        assert row.replicates == 40
    assert res.rate(1, "auc") >= res.rate(5, "auc") - 0.05


def test_analyze_summary_consistency():
    y = RngStream(33).generator.normal(0, 1, 50)
    res = analyze(y, NormalModel(), RngStream(34), n_draws=400)
    s = res.summary
    assert s.k == 5
    assert s.n_draws == 400
    assert res.values.shape == (400,)
    assert 0.0 <= s.exceedance_rate <= 1.0
    assert sum(s.mean_bin_counts) == pytest.approx(50.0)
    assert s.threshold == pytest.approx(probkit.chi2_quantile(4, 0.95))
    assert s.small_cells == ()


def test_analyze_nominal_centering():
    # synthetic data from the fitted model centers the AUC on one half; the
    # per-dataset spread is wide (null 90% band is roughly 0.23 to 0.79 at
    # n=50), so the tight statement holds for the mean, not each dataset
    root = RngStream(35)
    aucs = []
    for r in range(100):
        rep = split(root, r)
        y = rep.generator.normal(0.0, 1.0, 50)
        aucs.append(analyze(y, NormalModel(), split(rep, 1), n_draws=200).summary.auc)
    aucs = np.asarray(aucs)
    assert abs(aucs.mean() - 0.5) < 0.05
    assert np.mean((aucs >= 0.15) & (aucs <= 0.85)) >= 0.90


def test_analyze_flags_small_cells():
    # with a common rate near 8, the {0} cell expects ~40 * exp(-8) < 1 counts
    n = 40
    y = RngStream(50).generator.poisson(8.0, n)
    model = PoissonCommonRate(offsets=np.ones(n))
    from bayesgof.gof import OutcomeBins

    res = analyze(y, model, RngStream(36), n_draws=50, outcome_bins=OutcomeBins((0, 6, 9)))
    assert 0 in res.summary.small_cells


def test_pp_test_p_value_granularity():
    y = RngStream(37).generator.normal(0, 1, 50)
    res = predictive_auc_test(y, NormalModel(), RngStream(38), pp_reps=20, n_draws=100)
    assert res.predictive_aucs.shape == (20,)
    assert res.p_value in {i / 20 for i in range(21)}


def test_pp_test_all_below_gives_zero():
    y = generate_t(50, 1, RngStream(39))
    res = predictive_auc_test(y, NormalModel(), RngStream(40), pp_reps=20, n_draws=200)
    if np.all(res.predictive_aucs < res.auc_observed):
        assert res.p_value == 0.0
    assert res.p_value == np.mean(res.predictive_aucs >= res.auc_observed)


def test_pp_test_self_consistency():
    root = RngStream(41)
    rejections = 0
    for r in range(100):
        rep = split(root, r)
        y = rep.generator.normal(0.0, 1.0, 50)
        res = predictive_auc_test(y, NormalModel(), split(rep, 1), pp_reps=20, n_draws=150)
        rejections += int(res.p_value <= 0.05)
    assert abs(rejections / 100 - 0.05) <= 0.03 + 1e-9


def test_pp_test_detects_heavy_tails():
    root = RngStream(42)
    low = 0
    for r in range(25):
        rep = split(root, r)
        y = generate_t(50, 1, split(rep, 0))
        res = predictive_auc_test(y, NormalModel(), split(rep, 1), pp_reps=20, n_draws=150)
        low += int(res.p_value < 0.05)
    assert low >= 20


def test_monitor_empty_stream():
    records = list(
        stream_monitor(iter([]), np.zeros(50) + np.arange(50), NormalModel(), equiprobable(5))
    )
    assert records == []


def test_monitor_null_rate_settles():
    y = RngStream(43).generator.normal(0, 1, 50)
    model = NormalModel()
    mu, sigma = model.posterior_draws(y, 1500, RngStream(44))
    recs = list(stream_monitor(zip(mu, sigma), y, model, equiprobable(5)))
    assert len(recs) == 1500
    assert abs(recs[-1].cumulative_rate - 0.05) <= 0.03
    assert not recs[-1].alert


def test_monitor_marks_invalid_draws():
    y = RngStream(45).generator.normal(0, 1, 50)
    model = NormalModel()
    mu, sigma = model.posterior_draws(y, 10, RngStream(46))
    stream = [(mu[0], sigma[0]), (0.0, 0.0), (mu[1], sigma[1])]
    recs = list(stream_monitor(stream, y, model, equiprobable(5)))
    assert [r.valid for r in recs] == [True, False, True]
    assert np.isnan(recs[1].value)
    # invalid draws are excluded from the running denominator
    assert recs[2].cumulative_rate in (0.0, 0.5, 1.0)


def test_monitor_alert_latches():
    y = RngStream(47).generator.normal(0, 1, 50)
    model = NormalModel()
    bad = [(50.0, 0.1)] * 200
    mu, sigma = model.posterior_draws(y, 2000, RngStream(48))
    stream = bad + list(zip(mu, sigma))
    recs = list(stream_monitor(stream, y, model, equiprobable(5),
                               alert_factor=3.0, min_draws=10))
    assert recs[199].alert
    band = 3.0 * probkit.chi2_survival(4, probkit.chi2_quantile(4, 0.95))
    assert recs[-1].cumulative_rate < band
    assert recs[-1].alert


def test_monitor_config_errors():
    y = RngStream(49).generator.normal(0, 1, 30)
    with pytest.raises(ConfigError):
        list(stream_monitor([], y, NormalModel(), equiprobable(5), alert_factor=1.0))
    with pytest.raises(ConfigError):
        list(stream_monitor([], y, NormalModel(), equiprobable(5), min_draws=0))
