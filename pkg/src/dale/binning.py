"""Equal-width binning of a feature axis and per-bin statistics of local
effects."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

EMPTY_BIN_POLICIES = ("interpolate", "zero", "fail")


class AllocationError(ValueError):
    """A sample falls outside the bin grid."""


class EmptyBinError(ValueError):
    """Empty bins encountered under policy='fail', or no usable bins at all."""


@dataclass(frozen=True)
class BinGrid:
    """K equal-width bins over [axis_min, axis_max]."""

    axis_min: float
    axis_max: float
    k: int
    edges: np.ndarray
    width: float

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


@dataclass(frozen=True)
class BinStats:
    """Per-bin count, mean and Bessel-corrected variance of local effects.

    Empty bins carry mean 0 and empty_mask True; singleton bins carry
    variance 0 and singleton_mask True (their spread is unknowable, and
    the flags keep downstream error bars honest).
    """

    counts: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    empty_mask: np.ndarray
    singleton_mask: np.ndarray

    @property
    def k(self) -> int:
        return self.counts.size

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def make_grid(axis_min: float, axis_max: float, k: int) -> BinGrid:
    """Build the equal-width grid with k bins over [axis_min, axis_max]."""
    if not np.isfinite(axis_min) or not np.isfinite(axis_max):
        raise ValueError(f"grid range must be finite, got [{axis_min}, {axis_max}]")
    if axis_max <= axis_min:
        raise ValueError(f"degenerate range: axis_max {axis_max} <= axis_min {axis_min}")
    if k < 1:
        raise ValueError(f"bin count must be >= 1, got {k}")
    edges = np.linspace(float(axis_min), float(axis_max), k + 1)
    return BinGrid(float(axis_min), float(axis_max), k, edges, (axis_max - axis_min) / k)


def grid_for(values, k: int) -> BinGrid:
    """Grid spanning the observed range of the values."""
    values = np.asarray(values, dtype=float)
    return make_grid(values.min(), values.max(), k)


def assign_bins(values, grid: BinGrid) -> np.ndarray:
    """Map each value to its bin index.

    Bins are left-closed/right-open; the final edge is inclusive, so a
    value equal to axis_max lands in bin k-1. Out-of-range values raise
    AllocationError naming the offending value.
    """
    values = np.asarray(values, dtype=float)
    bad = (values < grid.axis_min) | (values > grid.axis_max) | ~np.isfinite(values)
    if bad.any():
        v = values[bad][0]
        raise AllocationError(
            f"value {v!r} outside bin range [{grid.axis_min}, {grid.axis_max}]")
    idx = np.searchsorted(grid.edges, values, side="right") - 1
    return np.minimum(idx, grid.k - 1)


def bin_statistics(local_effects, bin_index, k: int) -> BinStats:
    """Count, mean and sample variance of the local effects in each bin."""
    local_effects = np.asarray(local_effects, dtype=float)
    bin_index = np.asarray(bin_index)
    if bin_index.size and (bin_index.min() < 0 or bin_index.max() >= k):
        raise IndexError(f"bin indices must lie in [0, {k})")
    counts = np.bincount(bin_index, minlength=k)
    empty = counts == 0
    singleton = counts == 1
    safe = np.maximum(counts, 1)
    mean = np.bincount(bin_index, weights=local_effects, minlength=k) / safe
    mean[empty] = 0.0
    centered = local_effects - mean[bin_index]
    sq = np.bincount(bin_index, weights=centered * centered, minlength=k)
    variance = np.zeros(k)
    ok = counts > 1
    variance[ok] = sq[ok] / (counts[ok] - 1)
    return BinStats(counts, mean, variance, empty, singleton)


def fill_empty_bins(stats: BinStats, policy: str = "interpolate") -> BinStats:
    """Replace the means of empty bins according to the policy.

    interpolate: linear interpolation between the nearest non-empty bins,
    constant extension at the extremes. zero: leave the means at 0.
    fail: raise on any empty bin. The empty flags are preserved either
    way so filled bins stay visible downstream.
    """
    if policy not in EMPTY_BIN_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {EMPTY_BIN_POLICIES}")
    if not stats.empty_mask.any():
        return stats
    if policy == "fail":
        where = np.flatnonzero(stats.empty_mask)
        raise EmptyBinError(f"empty bins at indices {where.tolist()}")
    if policy == "zero":
        return stats
    filled = np.flatnonzero(~stats.empty_mask)
    if filled.size == 0:
        raise EmptyBinError("all bins are empty; nothing to interpolate from")
    mean = stats.mean.copy()
    holes = np.flatnonzero(stats.empty_mask)
    mean[holes] = np.interp(holes, filled, stats.mean[filled])
    return replace(stats, mean=mean)
