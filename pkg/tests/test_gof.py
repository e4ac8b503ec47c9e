"""Statistic-level checks: hand-computable Pearson values, exact-fit zeros,
calibration of the fixed-outcome-bin path, and the tail-area summaries."""

import numpy as np
import pytest

from bayesgof import gof, probkit
from bayesgof.binning import equiprobable
from bayesgof.errors import DomainError, EvaluationError
from bayesgof.gof import (
    OutcomeBins,
    chisq_discrepancy,
    exceedance,
    grouped_chisq,
    pearson,
    plugin_chisq,
    posterior_chisq_continuous,
    posterior_chisq_discrete_randomized,
    posterior_chisq_fixed_outcome_bins,
    reference_auc,
)
from bayesgof.models import NormalModel, PoissonCommonRate
from bayesgof.probkit import RngStream, split


def test_pearson_exact_fit_is_zero():
    assert pearson([1, 1, 1, 1, 1], [0.2] * 5) == 0.0


def test_pearson_total_concentration():
    assert pearson([5, 0, 0, 0, 0], [0.2] * 5) == pytest.approx(20.0)


def test_pearson_two_cells():
    assert pearson([3, 2], [0.5, 0.5]) == pytest.approx(0.2)


def test_pearson_rejects_bad_probs():
    with pytest.raises(DomainError):
        pearson([1, 1], [0.6, 0.6])
    with pytest.raises(DomainError):
        pearson([1, -1], [0.5, 0.5])
    with pytest.raises(EvaluationError):
        pearson([1, 1, 0], [0.5, 0.5, 0.0])


def test_continuous_exact_fit():
    model = NormalModel()
    data = probkit.normal_quantile(np.array([0.1, 0.3, 0.5, 0.7, 0.9]))
    stat = posterior_chisq_continuous(data, model, (0.0, 1.0), equiprobable(5))
    assert stat.value == pytest.approx(0.0, abs=1e-12)
    assert list(stat.counts) == [1, 1, 1, 1, 1]


def test_continuous_gross_misfit():
    model = NormalModel()
    data = probkit.normal_quantile(np.array([0.1, 0.3, 0.5, 0.7, 0.9]))
    stat = posterior_chisq_continuous(data, model, (10.0, 1.0), equiprobable(5))
    assert stat.value == pytest.approx(20.0)
    assert list(stat.counts) == [5, 0, 0, 0, 0]


def test_randomized_single_observation_two_cells():
    # n=1, K=2: value is 1.0 whichever cell receives the point
    model = PoissonCommonRate(offsets=[1.0])
    stat = posterior_chisq_discrete_randomized(
        np.array([2]), model, 2.0, equiprobable(2), RngStream(4)
    )
    assert stat.value == pytest.approx(1.0)


def test_randomized_impossible_outcome_rejected():
    model = PoissonCommonRate(offsets=[1.0, 1.0])
    tiny = 1e-310
    with pytest.raises(EvaluationError):
        posterior_chisq_discrete_randomized(
            np.array([40, 40]), model, tiny, equiprobable(5), RngStream(0)
        )


def test_fixed_outcome_bin_probs_partition():
    model = PoissonCommonRate(offsets=np.ones(4))
    bins = OutcomeBins((1, 3, 5))
    probs = np.asarray(model.outcome_bin_probs(3.0, bins))
    assert np.allclose(probs.sum(axis=-1), 1.0, atol=1e-10)


def test_fixed_outcome_bins_exact_expectation():
    # mean log(2) puts exactly half the mass on {0}; counts (5,5) fit exactly
    model = PoissonCommonRate(offsets=np.ones(10))
    data = np.array([0] * 5 + [1] * 5)
    stat = posterior_chisq_fixed_outcome_bins(data, model, np.log(2.0), OutcomeBins((0,)))
    assert stat.value == pytest.approx(0.0, abs=1e-12)


def test_fixed_outcome_bins_calibration_poisson3():
    # conjugate posterior draw per replicate; reference is chi-square(3)
    bins = OutcomeBins((1, 3, 5))
    n = 200
    root = RngStream(52)
    values = []
    for r in range(1000):
        rep = split(root, r)
        y = split(rep, 0).generator.poisson(3.0, n)
        model = PoissonCommonRate(offsets=np.ones(n))
        theta = model.posterior_draw(y, split(rep, 1))
        values.append(posterior_chisq_fixed_outcome_bins(y, model, theta, bins).value)
    assert abs(np.mean(values) - 3.0) < 0.4


def test_plugin_counts_and_probs():
    model = NormalModel()
    rng = RngStream(15)
    y = rng.generator.normal(0.0, 1.0, 80)
    edges = probkit.normal_quantile(np.arange(1, 5) / 5)
    stat = plugin_chisq(y, model, edges)
    assert stat.counts.sum() == 80
    assert abs(stat.probs.sum() - 1.0) < 1e-9
    assert stat.value >= 0.0


def test_grouped_improves_group_likelihood():
    model = NormalModel()
    rng = RngStream(21)
    y = rng.generator.normal(0.4, 1.3, 60)
    edges = probkit.normal_quantile(np.arange(1, 5) / 5)
    raw = plugin_chisq(y, model, edges)
    grp = grouped_chisq(y, model, edges)

    def group_loglik(theta):
        p = model.cell_probs(edges, theta)
        return float(np.dot(grp.counts, np.log(p)))

    assert group_loglik(grp.theta) >= group_loglik(raw.theta) - 1e-9


def test_grouped_statistic_not_above_plugin_on_average():
    model = NormalModel()
    edges = probkit.normal_quantile(np.arange(1, 5) / 5)
    root = RngStream(61)
    diffs = []
    for r in range(60):
        y = split(root, r).generator.normal(0.0, 1.0, 50)
        diffs.append(plugin_chisq(y, model, edges).value - grouped_chisq(y, model, edges).value)
    assert np.mean(diffs) > 0.0


def test_discrepancy_zero_at_exact_mean():
    model = PoissonCommonRate(offsets=np.ones(6))
    y = np.full(6, 3.0)
    assert chisq_discrepancy(y, model, 3.0) == 0.0


def test_discrepancy_one_sd_residual():
    model = PoissonCommonRate(offsets=np.ones(4))
    y = np.array([4.0, 4.0, 4.0, 6.0])
    assert chisq_discrepancy(y, model, 4.0) == pytest.approx(1.0)


def test_discrepancy_mean_near_n():
    n = 30
    model = PoissonCommonRate(offsets=np.ones(n))
    gen = RngStream(99).generator
    y = gen.poisson(4.2, size=(10_000, n)).astype(float)
    vals = ((y - 4.2) ** 2 / 4.2).sum(axis=1)
    assert abs(vals.mean() - n) / n < 0.02
    one = chisq_discrepancy(y[0], model, 4.2)
    assert one == pytest.approx(((y[0] - 4.2) ** 2 / 4.2).sum())


def test_auc_all_zero_values():
    assert reference_auc(np.zeros(10), 4) == 0.0


def test_auc_at_chi2_median():
    # chi-square(4) median
    med = probkit.chi2_quantile(4, 0.5)
    assert abs(med - 3.3567) < 1e-3
    assert abs(reference_auc([med], 4) - 0.5) < 1e-3


def test_auc_null_centering():
    rng = RngStream(40)
    v = probkit.sample(probkit.chi_squared(4), rng, 100_000)
    assert abs(reference_auc(v, 4) - 0.5) < 0.01


def test_auc_matches_direct_tail_simulation():
    # the closed form is the average of Pr(value > X), X an independent
    # chi-square(4) variate; compare with brute-force indicator pairs
    rng = RngStream(41)
    v = probkit.sample(probkit.chi_squared(4), rng, 2000)
    x = probkit.sample(probkit.chi_squared(4), rng, 2000)
    brute = float(np.mean(v > x))
    se = np.sqrt(0.25 / 2000)
    assert abs(reference_auc(v, 4) - brute) < 3 * se


def test_exceedance_examples():
    assert exceedance([10.0, 8.0], 9.49) == pytest.approx(0.5)
    assert exceedance([9.49], 9.49) == 0.0
    rng = RngStream(43)
    v = probkit.sample(probkit.chi_squared(4), rng, 10_000)
    assert abs(exceedance(v, probkit.chi2_quantile(4, 0.95)) - 0.05) < 0.007


def test_classical_cdf_ordering(null_run_2000):
    # grouped stochastically below plugin, plugin below the posterior draw
    res, _ = null_run_2000
    post = np.asarray(res.series["posterior"].values)
    plug = np.asarray(res.series["plugin"].values)
    grp = np.asarray(res.series["grouped"].values)
    grid = np.linspace(0.1, probkit.chi2_quantile(4, 0.99), 50)

    def ecdf(sample, x):
        return np.searchsorted(np.sort(sample), x, side="right") / sample.size

    f_post = ecdf(post, grid)
    f_plug = ecdf(plug, grid)
    f_grp = ecdf(grp, grid)
    assert np.all(f_grp >= f_plug - 0.03)
    assert np.all(f_plug >= f_post - 0.03)
