"""Distribution-function accuracy and stream-splitting behavior.

Oracles here are deliberately independent of the implementation: Gauss
quadrature for the normal CDF, direct density integration for chi-square,
a Lentz continued fraction for the far upper tail, and plain bisection
for quantiles.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from bayesgof import probkit
from bayesgof.errors import DomainError
from bayesgof.probkit import RngStream, split


def quad_normal_cdf(z: float) -> float:
    val, _ = integrate.quad(
        lambda t: math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi),
        -12.0, z,
    )
    return val


def quad_chi2_cdf(df: float, x: float) -> float:
    a = df / 2.0
    log_norm = a * math.log(2.0) + math.lgamma(a)

    def dens(t: float) -> float:
        return math.exp((a - 1.0) * math.log(t) - t / 2.0 - log_norm)

    val, _ = integrate.quad(dens, 0.0, x, limit=200)
    return val


def lentz_upper_gamma_q(a: float, x: float) -> float:
    # regularized upper incomplete gamma via modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def bisect_quantile(cdf, p: float, lo: float, hi: float, tol: float = 1e-12) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_chi2_cdf_at_classic_critical_value():
    assert abs(probkit.chi2_cdf(4, 9.49) - 0.95) < 5e-4


def test_normal_cdf_against_quadrature():
    for z in (-3.0, -1.0, 0.0, 0.5, 1.95996, 4.0):
        assert abs(probkit.normal_cdf(z) - quad_normal_cdf(z)) < 1e-5
    assert abs(probkit.normal_cdf(1.95996) - 0.975) < 1e-5


def test_chi2_cdf_against_quadrature():
    for df, x in ((1, 0.5), (2, 3.0), (4, 9.49), (7, 12.0), (49, 60.0)):
        assert abs(probkit.chi2_cdf(df, x) - quad_chi2_cdf(df, x)) < 1e-9


def test_chi2_quantile_against_bisection():
    got = probkit.chi2_quantile(2, 0.95)
    want = bisect_quantile(lambda x: quad_chi2_cdf(2, x), 0.95, 0.0, 50.0)
    assert abs(got - 5.9915) < 1e-3
    assert abs(got - want) < 1e-8


def test_normal_quantile_value():
    assert abs(probkit.normal_quantile(0.8) - 0.84162) < 1e-4
    want = bisect_quantile(quad_normal_cdf, 0.8, -10.0, 10.0)
    assert abs(probkit.normal_quantile(0.8) - want) < 1e-8


def test_deep_tail_survival_stays_positive():
    s = probkit.chi2_survival(4, 200.0)
    assert s > 0.0
    assert s < 1e-30
    oracle = lentz_upper_gamma_q(2.0, 100.0)
    assert abs(s - oracle) / oracle < 1e-10


def test_quantile_cdf_round_trip():
    dists = [
        probkit.normal(0.3, 2.0),
        probkit.chi_squared(4),
        probkit.gamma_rate(3.0, 2.0),
        probkit.uniform(-1.0, 5.0),
    ]
    for d in dists:
        for p in (0.01, 0.1, 0.5, 0.9, 0.99):
            x = probkit.quantile(d, p)
            assert abs(probkit.cdf(d, x) - p) < 1e-8


def test_survival_complements_cdf():
    d = probkit.chi_squared(6)
    for x in (0.5, 3.0, 10.0):
        assert abs(probkit.cdf(d, x) + probkit.survival(d, x) - 1.0) < 1e-12


def test_uniform_sample_mean():
    rng = RngStream(101)
    u = rng.uniform(100_000)
    assert abs(u.mean() - 0.5) < 0.005
    assert u.min() >= 0.0 and u.max() <= 1.0


def test_chi2_sample_moments():
    rng = RngStream(7)
    x = probkit.sample(probkit.chi_squared(4), rng, 100_000)
    assert abs(x.mean() - 4.0) < 0.05
    assert abs(x.var() - 8.0) < 0.3


def test_gamma_sample_moments():
    rng = RngStream(11)
    x = probkit.sample(probkit.gamma_rate(3.0, 1.0), rng, 100_000)
    assert abs(x.mean() - 3.0) < 0.05


def test_cauchy_sample_median():
    rng = RngStream(23)
    x = probkit.sample(probkit.student_t(1), rng, 100_000)
    assert abs(np.median(x)) < 0.05


def test_poisson_sample_total_variation():
    mean = 4.2
    rng = RngStream(31)
    x = probkit.sample(probkit.poisson(mean), rng, 100_000)
    kmax = int(x.max()) + 1
    counts = np.bincount(x.astype(int), minlength=kmax)
    emp = counts / x.size
    ks = np.arange(kmax)
    log_pmf = ks * math.log(mean) - mean - np.array([math.lgamma(k + 1) for k in ks])
    pmf = np.exp(log_pmf)
    tv = 0.5 * (np.abs(emp - pmf).sum() + max(0.0, 1.0 - pmf.sum()))
    assert tv < 0.01


def test_same_seed_same_bits():
    a = RngStream(42).uniform(1000)
    b = RngStream(42).uniform(1000)
    assert np.array_equal(a, b)


def test_split_is_deterministic_and_distinct():
    root = RngStream(5)
    c1 = split(root, 3).uniform(100)
    c2 = split(RngStream(5), 3).uniform(100)
    assert np.array_equal(c1, c2)
    other = split(RngStream(5), 4).uniform(100)
    assert not np.array_equal(c1, other)


def test_split_does_not_disturb_parent():
    root = RngStream(9)
    before = RngStream(9).uniform(50)
    split(root, 0)
    split(root, 1)
    assert np.array_equal(root.uniform(50), before)


def test_child_streams_first_draws_uniform():
    # Pearson test on 20 cells over the first draw of 1000 children
    root = RngStream(1234)
    firsts = np.array([float(split(root, i).uniform()) for i in range(1000)])
    counts = np.bincount(np.minimum((firsts * 20).astype(int), 19), minlength=20)
    expected = 1000 / 20
    stat = ((counts - expected) ** 2 / expected).sum()
    assert stat < probkit.chi2_quantile(19, 0.99)


def test_nested_paths_are_independent_addresses():
    a = split(split(RngStream(0), 1), 2).uniform(64)
    b = RngStream(0, path=(1, 2)).uniform(64)
    assert np.array_equal(a, b)


def test_open_uniform_excludes_zero():
    rng = RngStream(77)
    u = rng.open_uniform(100_000)
    assert u.min() > 0.0
    assert u.max() < 1.0


def test_domain_errors():
    with pytest.raises(DomainError):
        probkit.chi_squared(0)
    with pytest.raises(DomainError):
        probkit.gamma_rate(1.0, -2.0)
    with pytest.raises(DomainError):
        probkit.quantile(probkit.normal(0, 1), 1.5)


def test_poisson_cdf_matches_pmf_sum():
    mean = 3.7
    direct = sum(
        math.exp(k * math.log(mean) - mean - math.lgamma(k + 1)) for k in range(6)
    )
    assert abs(probkit.poisson_cdf(mean, 5) - direct) < 1e-12
