"""Probability kit: scalar distributions and splittable random streams.

Distribution functions are thin, vectorized wrappers over scipy.special
primitives (regularized incomplete gamma, erfc, Student-t integral), chosen
so that upper tails are computed directly instead of as 1 - cdf.  Random
streams are counter-based (Philox) and keyed by (seed, path), so any stream
can be split into child streams that are independent by construction and
reproducible across runs and thread counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from .errors import DomainError

__all__ = [
    "RngStream",
    "ScalarDistribution",
    "split",
    "normal",
    "chi_squared",
    "gamma_rate",
    "student_t",
    "uniform",
    "poisson",
    "cdf",
    "quantile",
    "survival",
    "sample",
    "normal_cdf",
    "normal_quantile",
    "chi2_cdf",
    "chi2_survival",
    "chi2_quantile",
    "chi2_upper_quantile",
    "poisson_cdf",
    "poisson_survival",
    "poisson_pmf",
]

_MAX_SEED = 2**64


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

@dataclass
class RngStream:
    """A seeded random stream addressed by (seed, path).

    ``path`` is the sequence of child ids produced by successive ``split``
    calls; the empty path is the root stream.  Identical (seed, path) pairs
    produce identical draw sequences on any host and with any number of
    concurrent workers, because the underlying bit generator is Philox keyed
    deterministically from those two values.  A stream is stateful: draws
    advance it, so a stream should be owned by one execution context at a
    time and fresh work should get fresh children via ``split``.
    """

    seed: int
    path: tuple[int, ...] = ()
    _gen: np.random.Generator | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise DomainError("seed must be an integer")
        if not 0 <= self.seed < _MAX_SEED:
            raise DomainError(f"seed must be in [0, 2**64), got {self.seed}")
        if any(c < 0 for c in self.path):
            raise DomainError("stream path entries must be non-negative")

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def uniform(self, size: int | tuple[int, ...] | None = None):
        """Uniform draws on [0, 1)."""
        return self.generator.random(size)

    def open_uniform(self, size: int | tuple[int, ...] | None = None):
        """Uniform draws nudged into the open interval (0, 1)."""
        u = self.generator.random(size)
        tiny = np.nextafter(0.0, 1.0)
        if size is None:
            return u if u > 0.0 else tiny
        return np.maximum(u, tiny)


def split(rng: RngStream, child_id: int) -> RngStream:
    """Derive an independent child stream; pure in (seed, path, child_id)."""
    if not isinstance(child_id, (int, np.integer)) or isinstance(child_id, bool):
        raise DomainError("child_id must be an integer")
    if child_id < 0:
        raise DomainError(f"child_id must be non-negative, got {child_id}")
    return RngStream(rng.seed, rng.path + (int(child_id),))


# ---------------------------------------------------------------------------
# scalar distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarDistribution:
    """A validated scalar distribution value, dispatched on ``kind``."""

    kind: str
    params: tuple[float, ...]


def normal(mu: float, sigma: float) -> ScalarDistribution:
    if not (math.isfinite(mu) and math.isfinite(sigma)) or sigma <= 0.0:
        raise DomainError(f"normal requires finite mu and sigma > 0, got ({mu}, {sigma})")
    return ScalarDistribution("normal", (float(mu), float(sigma)))


def chi_squared(df: float) -> ScalarDistribution:
    if not math.isfinite(df) or df <= 0.0:
        raise DomainError(f"chi_squared requires df > 0, got {df}")
    return ScalarDistribution("chi_squared", (float(df),))


def gamma_rate(shape: float, rate: float) -> ScalarDistribution:
    """Gamma distribution parameterized by shape and rate (1/scale)."""
    if not (math.isfinite(shape) and math.isfinite(rate)) or shape <= 0.0 or rate <= 0.0:
        raise DomainError(f"gamma_rate requires shape > 0 and rate > 0, got ({shape}, {rate})")
    return ScalarDistribution("gamma", (float(shape), float(rate)))


def student_t(df: float) -> ScalarDistribution:
    if not math.isfinite(df) or df <= 0.0:
        raise DomainError(f"student_t requires df > 0, got {df}")
    return ScalarDistribution("student_t", (float(df),))


def uniform(lo: float, hi: float) -> ScalarDistribution:
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise DomainError(f"uniform requires finite lo < hi, got ({lo}, {hi})")
    return ScalarDistribution("uniform", (float(lo), float(hi)))


def poisson(mean: float) -> ScalarDistribution:
    if not math.isfinite(mean) or mean <= 0.0:
        raise DomainError(f"poisson requires mean > 0, got {mean}")
    return ScalarDistribution("poisson", (float(mean),))


# ---------------------------------------------------------------------------
# vectorized primitive curves
# ---------------------------------------------------------------------------

def normal_cdf(z):
    """Standard normal CDF via erfc; absolute error at double precision."""
    z = np.asarray(z, dtype=float)
    out = 0.5 * sp.erfc(-z / math.sqrt(2.0))
    return out if out.ndim else float(out)


def normal_quantile(p):
    p = np.asarray(p, dtype=float)
    out = sp.ndtri(p)
    return out if out.ndim else float(out)


def chi2_cdf(df: float, x):
    x = np.asarray(x, dtype=float)
    out = sp.gammainc(df / 2.0, np.maximum(x, 0.0) / 2.0)
    return out if out.ndim else float(out)


def chi2_survival(df: float, x):
    x = np.asarray(x, dtype=float)
    out = sp.gammaincc(df / 2.0, np.maximum(x, 0.0) / 2.0)
    return out if out.ndim else float(out)


def chi2_quantile(df: float, p):
    p = np.asarray(p, dtype=float)
    out = 2.0 * sp.gammaincinv(df / 2.0, p)
    return out if out.ndim else float(out)


def chi2_upper_quantile(df: float, q):
    """x with chi2_survival(df, x) = q; stable deep in the upper tail."""
    q = np.asarray(q, dtype=float)
    out = 2.0 * sp.gammainccinv(df / 2.0, q)
    return out if out.ndim else float(out)


def poisson_cdf(mean, k):
    """P(Y <= floor(k)) for Y ~ poisson(mean); 0 below the support."""
    k = np.floor(np.asarray(k, dtype=float))
    out = np.where(k < 0.0, 0.0, sp.pdtr(np.maximum(k, 0.0), mean))
    return out if out.ndim else float(out)


def poisson_survival(mean, k):
    k = np.floor(np.asarray(k, dtype=float))
    out = np.where(k < 0.0, 1.0, sp.pdtrc(np.maximum(k, 0.0), mean))
    return out if out.ndim else float(out)


def poisson_pmf(mean, k):
    k = np.asarray(k, dtype=float)
    mean = np.asarray(mean, dtype=float)
    out = np.exp(sp.xlogy(k, mean) - mean - sp.gammaln(k + 1.0))
    out = np.where(k < 0.0, 0.0, out)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# dispatch surface
# ---------------------------------------------------------------------------

def cdf(d: ScalarDistribution, x):
    """P(X <= x), vectorized over x."""
    if d.kind == "normal":
        mu, sigma = d.params
        return normal_cdf((np.asarray(x, dtype=float) - mu) / sigma)
    if d.kind == "chi_squared":
        return chi2_cdf(d.params[0], x)
    if d.kind == "gamma":
        shape, rate = d.params
        x = np.asarray(x, dtype=float)
        out = sp.gammainc(shape, np.maximum(x, 0.0) * rate)
        return out if out.ndim else float(out)
    if d.kind == "student_t":
        out = sp.stdtr(d.params[0], np.asarray(x, dtype=float))
        return out if out.ndim else float(out)
    if d.kind == "uniform":
        lo, hi = d.params
        out = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
        return out if out.ndim else float(out)
    if d.kind == "poisson":
        return poisson_cdf(d.params[0], x)
    raise DomainError(f"unknown distribution kind {d.kind!r}")


def survival(d: ScalarDistribution, x):
    """P(X > x) computed on the upper-tail path, not as 1 - cdf."""
    if d.kind == "normal":
        mu, sigma = d.params
        z = (np.asarray(x, dtype=float) - mu) / sigma
        out = 0.5 * sp.erfc(z / math.sqrt(2.0))
        return out if out.ndim else float(out)
    if d.kind == "chi_squared":
        return chi2_survival(d.params[0], x)
    if d.kind == "gamma":
        shape, rate = d.params
        x = np.asarray(x, dtype=float)
        out = sp.gammaincc(shape, np.maximum(x, 0.0) * rate)
        return out if out.ndim else float(out)
    if d.kind == "student_t":
        # symmetry: P(T > x) = P(T < -x)
        out = sp.stdtr(d.params[0], -np.asarray(x, dtype=float))
        return out if out.ndim else float(out)
    if d.kind == "uniform":
        lo, hi = d.params
        out = np.clip((hi - np.asarray(x, dtype=float)) / (hi - lo), 0.0, 1.0)
        return out if out.ndim else float(out)
    if d.kind == "poisson":
        return poisson_survival(d.params[0], x)
    raise DomainError(f"unknown distribution kind {d.kind!r}")


def quantile(d: ScalarDistribution, p):
    """Inverse CDF; for discrete kinds, the smallest support point with CDF >= p."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("quantile requires p in the open interval (0, 1)")
    if d.kind == "normal":
        mu, sigma = d.params
        out = mu + sigma * sp.ndtri(p_arr)
        return out if out.ndim else float(out)
    if d.kind == "chi_squared":
        return chi2_quantile(d.params[0], p)
    if d.kind == "gamma":
        shape, rate = d.params
        out = sp.gammaincinv(shape, p_arr) / rate
        return out if out.ndim else float(out)
    if d.kind == "student_t":
        out = sp.stdtrit(d.params[0], p_arr)
        return out if out.ndim else float(out)
    if d.kind == "uniform":
        lo, hi = d.params
        out = lo + (hi - lo) * p_arr
        return out if out.ndim else float(out)
    if d.kind == "poisson":
        if p_arr.ndim:
            return np.array([_poisson_quantile(d.params[0], q) for q in p_arr.ravel()]).reshape(p_arr.shape)
        return _poisson_quantile(d.params[0], float(p_arr))
    raise DomainError(f"unknown distribution kind {d.kind!r}")


def _poisson_quantile(mean: float, p: float) -> int:
    # normal-approximation start, then exact local search on the CDF
    k = int(max(0.0, math.floor(mean + math.sqrt(mean) * sp.ndtri(p))))
    while sp.pdtr(k, mean) < p:
        k += 1
    while k > 0 and sp.pdtr(k - 1, mean) >= p:
        k -= 1
    return k


def sample(d: ScalarDistribution, rng: RngStream, size: int | None = None):
    """Draw from d using rng; scalar when size is None, else ndarray."""
    gen = rng.generator
    if d.kind == "normal":
        mu, sigma = d.params
        return mu + sigma * gen.standard_normal(size)
    if d.kind == "chi_squared":
        return gen.chisquare(d.params[0], size)
    if d.kind == "gamma":
        shape, rate = d.params
        return gen.gamma(shape, 1.0 / rate, size)
    if d.kind == "student_t":
        (df,) = d.params
        z = gen.standard_normal(size)
        w = gen.chisquare(df, size)
        return z / np.sqrt(w / df)
    if d.kind == "uniform":
        lo, hi = d.params
        return lo + (hi - lo) * gen.random(size)
    if d.kind == "poisson":
        out = gen.poisson(d.params[0], size)
        return int(out) if size is None else out
    raise DomainError(f"unknown distribution kind {d.kind!r}")
