"""Built-in models with posterior samplers and observation-level CDFs.

Every model exposes the same behavioral surface consumed by the gof and
harness modules:

- ``obs_cdf(y, theta)`` (continuous) or ``obs_cdf_pair(y, theta)`` (discrete)
  evaluates each observation's own CDF at the observed value;
- ``posterior_draw`` / ``posterior_draws`` / ``posterior_sample`` sample the
  parameter from its posterior given the data;
- ``predictive_draw`` replicates a dataset at a fixed parameter value;
- ``obs_mean_var`` gives per-observation predictive moments.

theta is opaque to callers: a (mu, sigma) pair for the normal model, a scalar
rate for the pooled Poisson model, a vector of means for the saturated model,
and an (alpha0, gamma, sigma2) draw for the exchangeable model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import probkit
from .errors import DataError, DomainError, EvaluationError
from .gof import OutcomeBins
from .probkit import RngStream

__all__ = [
    "NormalModel",
    "PoissonCommonRate",
    "PoissonSaturated",
    "PoissonExchangeable",
    "ExchangeableDraw",
    "ChainSettings",
    "ChainResult",
    "normal_posterior_from_uniforms",
    "generate_null_normal",
    "generate_t",
    "generate_poisson",
]


# ---------------------------------------------------------------------------
# normal model, reference prior 1/sigma
# ---------------------------------------------------------------------------

def _validate_normal_data(data) -> np.ndarray:
    y = np.asarray(data, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise DataError("need a 1-D sample with at least two observations")
    if not np.all(np.isfinite(y)):
        raise DataError("observations must be finite")
    if y.var(ddof=1) <= 0.0:
        raise DataError("degenerate sample: all observations are equal")
    return y


def normal_posterior_from_uniforms(data, v_sigma: float, v_mu: float) -> tuple[float, float]:
    """Deterministic posterior draw from two explicit uniforms.

    The scale is inverted first from its marginal posterior, then the
    location from its conditional posterior given that scale:

        sigma^2 = (n - 1) s^2 / Q   with Q the upper-tail chi-square(n - 1)
                  point at v_sigma,
        mu      = ybar + sigma / sqrt(n) * Phi^{-1}(v_mu).

    Feeding fixed uniforms makes the construction exactly equivariant under
    affine changes of the data, which is what pins down location-scale
    invariance of the downstream statistics.
    """
    y = _validate_normal_data(data)
    if not (0.0 < v_sigma < 1.0 and 0.0 < v_mu < 1.0):
        raise DomainError("uniforms must lie strictly inside (0, 1)")
    n = y.size
    s2 = y.var(ddof=1)
    sigma2 = (n - 1) * s2 / probkit.chi2_upper_quantile(n - 1, v_sigma)
    sigma = math.sqrt(sigma2)
    mu = y.mean() + sigma / math.sqrt(n) * probkit.normal_quantile(v_mu)
    return (mu, sigma)


class NormalModel:
    """I.i.d. normal observations under the scale-reference prior 1/sigma."""

    is_discrete = False
    n_params = 2

    def validate_data(self, data) -> np.ndarray:
        return _validate_normal_data(data)

    def obs_cdf(self, y, theta):
        mu, sigma = theta
        if not (sigma > 0.0) or not math.isfinite(sigma) or not math.isfinite(mu):
            raise DomainError(f"normal parameters outside the space: mu={mu}, sigma={sigma}")
        return probkit.normal_cdf((np.asarray(y, dtype=float) - mu) / sigma)

    def posterior_draw(self, data, rng: RngStream) -> tuple[float, float]:
        v = rng.open_uniform(2)
        return normal_posterior_from_uniforms(data, v[0], v[1])

    def posterior_draws(self, data, size: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized draws; row i equals posterior_draw under the same stream."""
        y = _validate_normal_data(data)
        n = y.size
        s2 = y.var(ddof=1)
        v = rng.open_uniform((size, 2))
        sigma = np.sqrt((n - 1) * s2 / probkit.chi2_upper_quantile(n - 1, v[:, 0]))
        mu = y.mean() + sigma / math.sqrt(n) * probkit.normal_quantile(v[:, 1])
        return mu, sigma

    def posterior_sample(self, data, n_draws: int, rng: RngStream) -> list[tuple[float, float]]:
        mu, sigma = self.posterior_draws(data, n_draws, rng)
        return list(zip(mu.tolist(), sigma.tolist()))

    def predictive_draw(self, theta, rng: RngStream, n: int) -> np.ndarray:
        mu, sigma = theta
        return mu + sigma * rng.generator.standard_normal(n)

    def mle(self, data) -> tuple[float, float]:
        y = _validate_normal_data(data)
        return (float(y.mean()), float(math.sqrt(y.var(ddof=0))))

    def obs_mean_var(self, theta) -> tuple[float, float]:
        mu, sigma = theta
        return mu, sigma * sigma

    def cell_probs(self, edges, theta) -> np.ndarray:
        mu, sigma = theta
        z = (np.asarray(edges, dtype=float) - mu) / sigma
        cum = np.concatenate(([0.0], np.atleast_1d(probkit.normal_cdf(z)), [1.0]))
        return np.diff(cum)

    def free_params(self, theta) -> np.ndarray:
        mu, sigma = theta
        return np.array([mu, math.log(sigma)])

    def theta_from_free(self, vec) -> tuple[float, float]:
        return (float(vec[0]), float(math.exp(vec[1])))


# ---------------------------------------------------------------------------
# Poisson count models with known exposures
# ---------------------------------------------------------------------------

def _validate_offsets(offsets) -> np.ndarray:
    e = np.asarray(offsets, dtype=float)
    if e.ndim != 1 or e.size < 1:
        raise DataError("offsets must be a non-empty 1-D vector")
    if not np.all(np.isfinite(e)) or np.any(e <= 0.0):
        raise DataError("offsets must be finite and positive")
    return e


def _validate_counts(data, n: int) -> np.ndarray:
    y = np.asarray(data)
    if y.ndim != 1 or y.size != n:
        raise DataError(f"need a 1-D count vector of length {n}, got shape {y.shape}")
    yf = y.astype(float)
    if not np.all(np.isfinite(yf)) or np.any(yf < 0) or np.any(yf != np.floor(yf)):
        raise DataError("counts must be non-negative integers")
    return yf.astype(np.int64)


def _poisson_cdf_pair(y: np.ndarray, means: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    f_at = probkit.poisson_cdf(means, y)
    f_below = probkit.poisson_cdf(means, y - 1)
    return f_below, f_at


def _poisson_outcome_bin_probs(means: np.ndarray, bins: OutcomeBins) -> np.ndarray:
    uppers = np.asarray(bins.uppers, dtype=float)
    cum = probkit.poisson_cdf(means[:, None], uppers[None, :])
    top = probkit.poisson_survival(means, uppers[-1])
    return np.column_stack([cum[:, :1], np.diff(cum, axis=1), top])


class _PoissonBase:
    is_discrete = True

    def __init__(self, offsets) -> None:
        self.offsets = _validate_offsets(offsets)

    @property
    def n_obs(self) -> int:
        return self.offsets.size

    def validate_data(self, data) -> np.ndarray:
        return _validate_counts(data, self.n_obs)

    def obs_cdf_pair(self, y, theta):
        return _poisson_cdf_pair(np.asarray(y), self.means(theta))

    def outcome_bin_probs(self, theta, bins: OutcomeBins) -> np.ndarray:
        return _poisson_outcome_bin_probs(self.means(theta), bins)

    def predictive_draw(self, theta, rng: RngStream, n: int | None = None) -> np.ndarray:
        return rng.generator.poisson(self.means(theta))

    def obs_mean_var(self, theta):
        m = self.means(theta)
        return m, m


class PoissonCommonRate(_PoissonBase):
    """One shared rate: y_i ~ poisson(lam * E_i), flat prior on log(lam).

    The flat prior on the log-rate is 1/lam on the rate itself, so the
    posterior is gamma_rate(sum(y), sum(E)) exactly.
    """

    n_params = 1

    def means(self, theta) -> np.ndarray:
        return float(theta) * self.offsets

    def posterior_distribution(self, data) -> probkit.ScalarDistribution:
        y = self.validate_data(data)
        total = int(y.sum())
        if total < 1:
            raise DataError("all counts are zero: the rate posterior is improper")
        return probkit.gamma_rate(total, float(self.offsets.sum()))

    def posterior_draw(self, data, rng: RngStream) -> float:
        return float(probkit.sample(self.posterior_distribution(data), rng))

    def posterior_draws(self, data, size: int, rng: RngStream) -> np.ndarray:
        d = self.posterior_distribution(data)
        return probkit.sample(d, rng, size)

    def posterior_sample(self, data, n_draws: int, rng: RngStream) -> list[float]:
        return [float(v) for v in self.posterior_draws(data, n_draws, rng)]

    def mle(self, data) -> float:
        y = self.validate_data(data)
        return float(y.sum() / self.offsets.sum())


class PoissonSaturated(_PoissonBase):
    """One free mean per observation, prior mu_i ** (-prior_exponent).

    Component posteriors are independent gamma(y_i + 1 - c, rate 1); with
    c = 1 a zero count makes its component improper, which is reported as a
    data error naming the offending observations.
    """

    def __init__(self, offsets, prior_exponent: float = 0.5) -> None:
        super().__init__(offsets)
        if prior_exponent not in (0.5, 1.0):
            raise DomainError(f"prior_exponent must be 0.5 or 1.0, got {prior_exponent}")
        self.prior_exponent = float(prior_exponent)

    @property
    def n_params(self) -> int:
        return self.n_obs

    def means(self, theta) -> np.ndarray:
        return np.asarray(theta, dtype=float)

    def _posterior_shapes(self, data) -> np.ndarray:
        y = self.validate_data(data)
        shapes = y + 1.0 - self.prior_exponent
        if np.any(shapes <= 0.0):
            bad = np.nonzero(shapes <= 0.0)[0].tolist()
            raise DataError(
                "improper posterior components (zero count with prior exponent 1) "
                f"at observations {bad}"
            )
        return shapes

    def posterior_draw(self, data, rng: RngStream) -> np.ndarray:
        return rng.generator.gamma(self._posterior_shapes(data), 1.0)

    def posterior_draws(self, data, size: int, rng: RngStream) -> np.ndarray:
        shapes = self._posterior_shapes(data)
        return rng.generator.gamma(shapes[None, :], 1.0, size=(size, shapes.size))

    def posterior_sample(self, data, n_draws: int, rng: RngStream) -> list[np.ndarray]:
        return list(self.posterior_draws(data, n_draws, rng))

    def mle(self, data) -> np.ndarray:
        return self.validate_data(data).astype(float)


# ---------------------------------------------------------------------------
# exchangeable log-rates via Metropolis-within-Gibbs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExchangeableDraw:
    alpha0: float
    gamma: np.ndarray
    sigma2: float


@dataclass(frozen=True)
class ChainSettings:
    """MCMC run lengths and adaptation targets for the exchangeable model."""

    retained: int = 5000
    burn_in: int = 2000
    thin: int = 4
    target_accept: float = 0.44
    initial_step: float = 0.2

    def __post_init__(self) -> None:
        if self.retained < 1 or self.burn_in < 0 or self.thin < 1:
            raise DomainError("chain settings must be positive (burn_in may be 0)")
        if not 0.0 < self.target_accept < 1.0:
            raise DomainError("target_accept must lie in (0, 1)")
        if self.initial_step <= 0.0:
            raise DomainError("initial_step must be positive")


@dataclass
class ChainResult:
    draws: list[ExchangeableDraw]
    accept_alpha0: float
    accept_gamma: float
    step_alpha0: float
    step_gamma: np.ndarray
    iterations: int


class PoissonExchangeable(_PoissonBase):
    """Log-rates alpha0 + gamma_i with exchangeable normal random effects.

    Priors: flat on alpha0, gamma_i ~ normal(0, sigma2) i.i.d., and
    inverse-gamma(0.001, 0.001) on sigma2 unless a fixed value is supplied.
    Sampling is random-walk Metropolis within Gibbs: scalar updates for
    alpha0, per-coordinate vectorized updates for gamma, and a conjugate
    inverse-gamma refresh for sigma2.  Step sizes adapt toward the target
    acceptance rate during burn-in only and are frozen afterwards, so the
    retained draws come from a fixed transition kernel.
    """

    def __init__(
        self,
        offsets,
        sigma2_shape: float = 0.001,
        sigma2_rate: float = 0.001,
        sigma2_fixed: float | None = None,
        settings: ChainSettings = ChainSettings(),
    ) -> None:
        super().__init__(offsets)
        if sigma2_shape <= 0.0 or sigma2_rate <= 0.0:
            raise DomainError("inverse-gamma hyperparameters must be positive")
        if sigma2_fixed is not None and sigma2_fixed <= 0.0:
            raise DomainError("a fixed sigma2 must be positive")
        self.sigma2_shape = float(sigma2_shape)
        self.sigma2_rate = float(sigma2_rate)
        self.sigma2_fixed = sigma2_fixed
        self.settings = settings

    @property
    def n_params(self) -> int:
        # alpha0 plus one random effect per observation (sigma2 is a hyperparameter)
        return 1 + self.n_obs

    def means(self, theta: ExchangeableDraw) -> np.ndarray:
        return np.exp(theta.alpha0 + theta.gamma) * self.offsets

    def mle(self, data) -> ExchangeableDraw:
        # boundary fit with the random effects collapsed to zero
        y = self.validate_data(data)
        if y.sum() < 1:
            raise DataError("all counts are zero: log-rate MLE is unbounded below")
        a0 = math.log(float(y.sum() / self.offsets.sum()))
        return ExchangeableDraw(a0, np.zeros(self.n_obs), 0.0)

    def run_chain(
        self, data, rng: RngStream, settings: ChainSettings | None = None
    ) -> ChainResult:
        y = self.validate_data(data).astype(float)
        if y.sum() < 1:
            raise DataError("all counts are zero: cannot initialize the chain")
        cfg = settings if settings is not None else self.settings
        gen = rng.generator
        m = self.n_obs
        e = self.offsets

        alpha0 = math.log(float(y.sum() / e.sum()))
        gamma = np.zeros(m)
        sigma2 = self.sigma2_fixed if self.sigma2_fixed is not None else 0.1
        if not math.isfinite(alpha0):
            raise EvaluationError("log-posterior is not finite at initialization")

        step_a = cfg.initial_step
        step_g = np.full(m, cfg.initial_step)
        total = cfg.burn_in + cfg.retained * cfg.thin
        y_sum = float(y.sum())

        draws: list[ExchangeableDraw] = []
        acc_a = 0
        acc_g = 0
        kept_iters = 0

        for t in range(total):
            adapting = t < cfg.burn_in

            # alpha0: random walk on the shared log-rate
            exp_g = np.exp(gamma)
            s_eg = float(np.dot(e, exp_g))
            prop_a = alpha0 + step_a * gen.standard_normal()
            delta = y_sum * (prop_a - alpha0) - s_eg * (math.exp(prop_a) - math.exp(alpha0))
            a_accepted = math.log(max(gen.random(), 1e-300)) < delta
            if a_accepted:
                alpha0 = prop_a

            # gamma: independent per-coordinate proposals, accepted coordinatewise
            prop_g = gamma + step_g * gen.standard_normal(m)
            rate0 = math.exp(alpha0) * e
            with np.errstate(over="ignore"):
                delta_g = (
                    y * (prop_g - gamma)
                    - rate0 * (np.exp(prop_g) - np.exp(gamma))
                    - (prop_g**2 - gamma**2) / (2.0 * sigma2)
                )
            g_accepted = np.log(np.maximum(gen.random(m), 1e-300)) < delta_g
            gamma = np.where(g_accepted, prop_g, gamma)

            # sigma2: conjugate inverse-gamma refresh
            if self.sigma2_fixed is None:
                shape = self.sigma2_shape + m / 2.0
                rate = self.sigma2_rate + float(np.dot(gamma, gamma)) / 2.0
                sigma2 = rate / gen.gamma(shape, 1.0)

            if adapting:
                lr = (t + 1) ** -0.6
                step_a *= math.exp(lr * ((1.0 if a_accepted else 0.0) - cfg.target_accept))
                step_g *= np.exp(lr * (g_accepted.astype(float) - cfg.target_accept))
            else:
                acc_a += int(a_accepted)
                acc_g += int(g_accepted.sum())
                kept_iters += 1
                if (t - cfg.burn_in) % cfg.thin == cfg.thin - 1:
                    draws.append(ExchangeableDraw(alpha0, gamma.copy(), float(sigma2)))

        return ChainResult(
            draws=draws,
            accept_alpha0=acc_a / max(kept_iters, 1),
            accept_gamma=acc_g / max(kept_iters * m, 1),
            step_alpha0=step_a,
            step_gamma=step_g,
            iterations=total,
        )

    def posterior_sample(
        self, data, n_draws: int, rng: RngStream, settings: ChainSettings | None = None
    ) -> list[ExchangeableDraw]:
        cfg = settings if settings is not None else self.settings
        cfg = replace(cfg, retained=n_draws)
        return self.run_chain(data, rng, cfg).draws

    def posterior_draw(self, data, rng: RngStream) -> ExchangeableDraw:
        return self.posterior_sample(data, 1, rng)[-1]


# ---------------------------------------------------------------------------
# data generators for the simulation harness
# ---------------------------------------------------------------------------

def generate_null_normal(n: int, rng: RngStream) -> np.ndarray:
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    return rng.generator.standard_normal(n)


def generate_t(n: int, df: float, rng: RngStream) -> np.ndarray:
    """Heavier-tailed alternative: i.i.d. Student-t draws."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    return probkit.sample(probkit.student_t(df), rng, n)


def generate_poisson(means, rng: RngStream) -> np.ndarray:
    m = np.asarray(means, dtype=float)
    if np.any(m <= 0) or not np.all(np.isfinite(m)):
        raise DomainError("Poisson means must be positive and finite")
    return rng.generator.poisson(m)
