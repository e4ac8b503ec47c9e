"""Bin schemes on the unit interval and assignment of probability transforms.

Bins are right-closed: bin k is (edges[k], edges[k+1]], except that 0 itself
belongs to the first bin.  Assignment uses exact comparisons against the
stored edges; no epsilon fuzzing, so callers get reproducible counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .probkit import RngStream

__all__ = [
    "BinScheme",
    "equiprobable",
    "default_bin_count",
    "mann_wald_count",
    "assign",
    "assign_discrete_randomized",
    "tally",
]


@dataclass(frozen=True)
class BinScheme:
    """Ordered cut points 0 = a_0 < a_1 < ... < a_K = 1 on the unit interval."""

    edges: tuple[float, ...]

    def __post_init__(self) -> None:
        e = self.edges
        if len(e) < 3:
            raise DomainError("a bin scheme needs at least two bins")
        if e[0] != 0.0 or e[-1] != 1.0:
            raise DomainError(f"edges must start at 0 and end at 1, got {e[0]}..{e[-1]}")
        if any(not (lo < hi) for lo, hi in zip(e, e[1:])):
            raise DomainError("edges must be strictly increasing")

    @property
    def k(self) -> int:
        return len(self.edges) - 1

    def widths(self) -> np.ndarray:
        """Cell probabilities implied by the edges."""
        e = np.asarray(self.edges)
        return np.diff(e)


def equiprobable(k: int) -> BinScheme:
    """K cells of probability 1/K each."""
    if k < 2:
        raise DomainError(f"equiprobable requires k >= 2, got {k}")
    return BinScheme(tuple(j / k for j in range(k + 1)))


def default_bin_count(n: int) -> int:
    """Rule-of-thumb cell count n**0.4, floored at 3."""
    if n < 1:
        raise DomainError(f"default_bin_count requires n >= 1, got {n}")
    return max(3, int(math.floor(n**0.4 + 0.5)))


def mann_wald_count(n: int) -> int:
    """Classical large-sample cell count 3.8 * (n - 1)**0.4."""
    if n < 2:
        raise DomainError(f"mann_wald_count requires n >= 2, got {n}")
    return int(math.floor(3.8 * (n - 1) ** 0.4 + 0.5))


def assign(scheme: BinScheme, u):
    """0-based bin index of u in [0, 1]; right-closed cells, 0 goes to bin 0.

    Vectorized over u; raises DomainError if any value leaves [0, 1].
    """
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("assign requires values in [0, 1]")
    edges = np.asarray(scheme.edges)
    idx = np.searchsorted(edges, arr, side="left")
    idx = np.maximum(idx, 1) - 1
    return idx if idx.ndim else int(idx)


def assign_discrete_randomized(scheme: BinScheme, f_below, f_at, rng: RngStream):
    """Bin for a discrete outcome via a uniform draw on its CDF mass interval.

    The outcome occupies (f_below, f_at] of the unit interval; a point u is
    drawn uniformly from that interval and assigned as usual, which is
    equivalent in law to allocating the outcome's mass proportionally across
    the cells it straddles.
    """
    lo = np.asarray(f_below, dtype=float)
    hi = np.asarray(f_at, dtype=float)
    if np.any(~((lo >= 0.0) & (hi <= 1.0))):
        raise DomainError("CDF values must lie in [0, 1]")
    if np.any(~(lo < hi)):
        raise DomainError("zero-probability outcome: f_below must be < f_at")
    v = rng.generator.random(lo.shape if lo.ndim else None)
    u = hi - v * (hi - lo)  # lands in (f_below, f_at]
    return assign(scheme, u)


def tally(scheme: BinScheme, u) -> np.ndarray:
    """Counts per cell for a batch of unit-interval values."""
    idx = np.atleast_1d(assign(scheme, u))
    return np.bincount(idx, minlength=scheme.k)
