"""Feature-effect estimators.

Four methods over a shared bin/accumulate core:

* ``dale_first_order`` / ``dale_second_order`` -- average exact partial
  derivatives of the training points per bin and prefix-sum the bin
  effects. Needs one Jacobian (or Hessian-entry) pass over the data and
  never evaluates the model on synthetic points, so any bin resolution
  can be rebuilt from the cached derivative columns for free.
* ``ale_first_order`` / ``ale_second_order`` -- classic bin-edge finite
  differences: each sample is re-evaluated at the edges (corners) of its
  own bin, costing 2 (resp. 4) model values per sample per feature (pair).
* ``pdp`` -- average model output over the empirical marginal of the
  complement features.
* ``mplot`` -- per-bin average of the model output at the observed points.

All estimators express local effects on the derivative scale, so the bin
means of DALE and ALE are directly comparable and share the centering,
standard-error and evaluation machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .binning import (
    BinGrid,
    BinStats,
    EmptyBinError,
    assign_bins,
    bin_statistics,
    fill_empty_bins,
    grid_for,
)
from .models import DifferentiableModel, jacobian_batch


@dataclass(frozen=True)
class EffectCurve:
    """Accumulated feature-effect curve on the edges of a bin grid.

    ``bin_means`` holds the mean local effect per bin on the derivative
    scale; the accumulands are ``bin_effects = width * bin_means``.
    ``accumulated`` holds the centered curve value at each of the K+1
    edges, ``centering_c`` the shift that was applied to the raw prefix
    sums (which start at 0 on the left edge). ``stderr`` propagates the
    per-bin sampling variance along the accumulation. ``flags`` marks
    bins whose mean was filled in ("empty") or whose variance is
    unknowable ("singleton").
    """

    feature: int
    grid: BinGrid
    counts: np.ndarray
    bin_means: np.ndarray
    accumulated: np.ndarray
    centering_c: float
    stderr: np.ndarray
    flags: tuple[str, ...]
    method: str = "dale"
    name: str = ""

    @property
    def bin_effects(self) -> np.ndarray:
        return self.grid.width * self.bin_means

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EffectSurface:
    """Accumulated pairwise effect on the corners of a 2-d bin grid."""

    features: tuple[int, int]
    grid_l: BinGrid
    grid_m: BinGrid
    counts: np.ndarray
    cell_means: np.ndarray
    accumulated: np.ndarray
    centering_c: float
    method: str = "dale"


@dataclass(frozen=True)
class PointCurve:
    """Plain (x, effect) curve, used by the PDP and MPlot estimators."""

    feature: int
    xs: np.ndarray
    values: np.ndarray
    method: str


def curve_stderr(stats: BinStats, grid: BinGrid) -> np.ndarray:
    """Standard error of the accumulated curve at each edge.

    The bin means are independent, so their variances sigma^2_k/|S_k|
    add along the accumulation; the edge-j error is
    width * sqrt(sum_{k<=j} sigma^2_k/|S_k|). Empty and singleton bins
    contribute 0 (and are flagged on the curve).
    """
    contrib = np.zeros(stats.k)
    ok = stats.counts > 1
    contrib[ok] = stats.variance[ok] / stats.counts[ok]
    return np.concatenate([[0.0], grid.width * np.sqrt(np.cumsum(contrib))])


def center_curve(curve: EffectCurve, counts) -> EffectCurve:
    """Shift the curve so its count-weighted bin-midpoint mean is zero.

    The midpoint value of a bin is the average of its two edge values;
    weighting by bin counts makes the shift a Monte-Carlo estimate of the
    curve's expectation under the data distribution.
    """
    counts = np.asarray(counts)
    total = counts.sum()
    if total == 0:
        raise EmptyBinError("cannot center a curve with zero total count")
    mids = 0.5 * (curve.accumulated[:-1] + curve.accumulated[1:])
    shift = -float(np.sum((counts / total) * mids))
    return replace(
        curve,
        accumulated=curve.accumulated + shift,
        centering_c=curve.centering_c + shift,
    )


def _bin_flags(stats: BinStats) -> tuple[str, ...]:
    return tuple(
        "empty" if e else ("singleton" if s else "ok")
        for e, s in zip(stats.empty_mask, stats.singleton_mask)
    )


def _curve_from_local_effects(local_effects, bin_index, grid, *, feature, method,
                              empty_policy, name="") -> EffectCurve:
    stats = bin_statistics(local_effects, bin_index, grid.k)
    flags = _bin_flags(stats)
    stats = fill_empty_bins(stats, empty_policy)
    accumulated = np.concatenate([[0.0], np.cumsum(grid.width * stats.mean)])
    curve = EffectCurve(
        feature=feature,
        grid=grid,
        counts=stats.counts,
        bin_means=stats.mean,
        accumulated=accumulated,
        centering_c=0.0,
        stderr=curve_stderr(stats, grid),
        flags=flags,
        method=method,
        name=name,
    )
    return center_curve(curve, stats.counts)


def dale_first_order(jacobian_column, feature_values, grid: BinGrid, *,
                     empty_policy: str = "interpolate", feature: int = 0,
                     name: str = "") -> EffectCurve:
    """First-order differential effect curve from a cached Jacobian column.

    The local effect of each sample is its partial derivative; bins
    average them and the curve prefix-sums width * bin mean. This is a
    pure array computation: no model evaluation happens here, which is
    what makes re-binning at a different resolution free.
    """
    jacobian_column = np.asarray(jacobian_column, dtype=float)
    feature_values = np.asarray(feature_values, dtype=float)
    if jacobian_column.shape != feature_values.shape:
        raise ValueError("jacobian column and feature values must have equal length")
    idx = assign_bins(feature_values, grid)
    return _curve_from_local_effects(
        jacobian_column, idx, grid,
        feature=feature, method="dale", empty_policy=empty_policy, name=name)


def rebin(jacobian_column, feature_values, new_k: int, *,
          empty_policy: str = "interpolate", feature: int = 0,
          name: str = "") -> EffectCurve:
    """Recompute the differential effect curve at a new resolution.

    Identical to ``dale_first_order`` on a fresh grid spanning the
    observed feature range; costs zero model evaluations.
    """
    feature_values = np.asarray(feature_values, dtype=float)
    grid = grid_for(feature_values, new_k)
    return dale_first_order(
        jacobian_column, feature_values, grid,
        empty_policy=empty_policy, feature=feature, name=name)


def ale_first_order(model: DifferentiableModel, X, feature: int, grid: BinGrid, *,
                    empty_policy: str = "interpolate", name: str = "") -> EffectCurve:
    """First-order effect curve from bin-edge finite differences.

    Each sample is evaluated at the two edges of its own bin (2N model
    values for one feature); the edge difference divided by the bin
    width is the sample's local effect on the derivative scale.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"expected data of shape (n, {model.dim}), got {X.shape}")
    model._check_index(feature)
    idx = assign_bins(X[:, feature], grid)
    hi = X.copy()
    hi[:, feature] = grid.edges[idx + 1]
    lo = X.copy()
    lo[:, feature] = grid.edges[idx]
    dfi = model.value_batch(hi) - model.value_batch(lo)
    return _curve_from_local_effects(
        dfi / grid.width, idx, grid,
        feature=feature, method="ale", empty_policy=empty_policy, name=name)


def evaluate_curve_at(curve: EffectCurve, x: float) -> tuple[float, float]:
    """Curve value and standard error at an arbitrary in-range position.

    Accumulation takes whole-width steps through the bins left of x and
    a partial step (x - left edge) * bin mean inside the bin containing
    x; the curve's centering is already folded into the edge values. The
    standard error is interpolated linearly between the edge errors.
    """
    k = int(assign_bins(np.array([x]), curve.grid)[0])
    offset = x - curve.grid.edges[k]
    value = curve.accumulated[k] + offset * curve.bin_means[k]
    frac = offset / curve.grid.width
    err = (1.0 - frac) * curve.stderr[k] + frac * curve.stderr[k + 1]
    return float(value), float(err)


def curve_values_at(curve: EffectCurve, xs) -> np.ndarray:
    """Vector version of evaluate_curve_at (values only)."""
    xs = np.asarray(xs, dtype=float)
    idx = assign_bins(xs, curve.grid)
    return curve.accumulated[idx] + (xs - curve.grid.edges[idx]) * curve.bin_means[idx]


# -- second order ---------------------------------------------------------

def _fill_cells(mean: np.ndarray, counts: np.ndarray, policy: str) -> np.ndarray:
    occupied = counts > 0
    if occupied.all() or policy == "zero":
        return mean
    if policy == "fail":
        where = np.argwhere(~occupied)
        raise EmptyBinError(f"empty cells at indices {where.tolist()[:8]}")
    if not occupied.any():
        raise EmptyBinError("all cells are empty; nothing to interpolate from")
    out = mean.copy()
    # interpolate along rows where possible, then down columns
    for p in range(out.shape[0]):
        cols = np.flatnonzero(occupied[p])
        if cols.size:
            holes = np.flatnonzero(~occupied[p])
            out[p, holes] = np.interp(holes, cols, out[p, cols])
    rows = np.flatnonzero(occupied.any(axis=1))
    holes = np.flatnonzero(~occupied.any(axis=1))
    for q in range(out.shape[1]):
        out[holes, q] = np.interp(holes, rows, out[rows, q])
    return out


def _surface_from_cells(cell_effects, il, im, grid_l, grid_m, *, features, method,
                        empty_policy) -> EffectSurface:
    p, q = grid_l.k, grid_m.k
    flat = il * q + im
    counts = np.bincount(flat, minlength=p * q).astype(int).reshape(p, q)
    sums = np.bincount(flat, weights=cell_effects, minlength=p * q).reshape(p, q)
    means = sums / np.maximum(counts, 1)
    means = _fill_cells(means, counts, empty_policy)
    acc = np.zeros((p + 1, q + 1))
    acc[1:, 1:] = np.cumsum(np.cumsum(grid_l.width * grid_m.width * means, axis=0), axis=1)
    mids = 0.25 * (acc[:-1, :-1] + acc[1:, :-1] + acc[:-1, 1:] + acc[1:, 1:])
    total = counts.sum()
    if total == 0:
        raise EmptyBinError("cannot center a surface with zero total count")
    shift = -float(np.sum(counts * mids) / total)
    return EffectSurface(
        features=features,
        grid_l=grid_l,
        grid_m=grid_m,
        counts=counts,
        cell_means=means,
        accumulated=acc + shift,
        centering_c=shift,
        method=method,
    )


def dale_second_order(hessian_entries, values_l, values_m, grid_l: BinGrid,
                      grid_m: BinGrid, *, empty_policy: str = "interpolate",
                      features: tuple[int, int] = (0, 1)) -> EffectSurface:
    """Pairwise effect surface from cached mixed second derivatives.

    Cells average the per-sample cross derivatives; the surface is the
    2-d prefix sum of width_l * width_m * cell mean, centered to zero
    count-weighted mean over occupied cells. No model evaluations.
    """
    hessian_entries = np.asarray(hessian_entries, dtype=float)
    il = assign_bins(values_l, grid_l)
    im = assign_bins(values_m, grid_m)
    return _surface_from_cells(
        hessian_entries, il, im, grid_l, grid_m,
        features=features, method="dale", empty_policy=empty_policy)


def ale_second_order(model: DifferentiableModel, X, l: int, m: int,
                     grid_l: BinGrid, grid_m: BinGrid, *,
                     empty_policy: str = "interpolate") -> EffectSurface:
    """Pairwise effect surface from mixed differences at cell corners.

    Each sample is evaluated at the four corners of its own cell (4N
    model values); the mixed difference divided by the cell area is the
    sample's local cross effect.
    """
    X = np.asarray(X, dtype=float)
    model._check_index(l)
    model._check_index(m)
    il = assign_bins(X[:, l], grid_l)
    im = assign_bins(X[:, m], grid_m)
    corners = []
    for el, em in ((il + 1, im + 1), (il, im + 1), (il + 1, im), (il, im)):
        Xc = X.copy()
        Xc[:, l] = grid_l.edges[el]
        Xc[:, m] = grid_m.edges[em]
        corners.append(model.value_batch(Xc))
    d2f = corners[0] - corners[1] - corners[2] + corners[3]
    local = d2f / (grid_l.width * grid_m.width)
    return _surface_from_cells(
        local, il, im, grid_l, grid_m,
        features=(l, m), method="ale", empty_policy=empty_policy)


# -- baselines --------------------------------------------------------------

def pdp(model: DifferentiableModel, X, feature: int, eval_points) -> PointCurve:
    """Partial-dependence curve: mean model output with the feature pinned
    at each evaluation point, averaged over the observed complement rows."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    model._check_index(feature)
    eval_points = np.asarray(eval_points, dtype=float)
    values = np.empty(eval_points.size)
    for j, x in enumerate(eval_points):
        Xmod = X.copy()
        Xmod[:, feature] = x
        values[j] = model.value_batch(Xmod).mean()
    return PointCurve(feature=feature, xs=eval_points, values=values, method="pdp")


def mplot(model: DifferentiableModel, X, feature: int, grid: BinGrid, *,
          empty_policy: str = "interpolate") -> PointCurve:
    """Marginal curve: per-bin mean of the model output at the observed
    points, reported at the bin midpoints."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    model._check_index(feature)
    idx = assign_bins(X[:, feature], grid)
    f = model.value_batch(X)
    stats = fill_empty_bins(bin_statistics(f, idx, grid.k), empty_policy)
    return PointCurve(feature=feature, xs=grid.midpoints(), values=stats.mean,
                      method="mplot")


# -- whole-dataset pipelines -------------------------------------------------

def dale_all_features(model: DifferentiableModel, X, k: int, *,
                      features=None, empty_policy: str = "interpolate",
                      names=None) -> tuple[list[EffectCurve], np.ndarray]:
    """Differential effect curves for several features from one Jacobian.

    The Jacobian is computed once (N gradient evaluations in total, no
    matter how many features are requested) and its columns feed the
    per-feature curves. Returns the curves and the Jacobian for caching.
    """
    X = np.asarray(X, dtype=float)
    if features is None:
        features = range(X.shape[1])
    J = jacobian_batch(model, X)
    curves = []
    for s in features:
        grid = grid_for(X[:, s], k)
        curves.append(dale_first_order(
            J[:, s], X[:, s], grid, empty_policy=empty_policy, feature=s,
            name=names[s] if names else ""))
    return curves, J


def ale_all_features(model: DifferentiableModel, X, k: int, *,
                     features=None, empty_policy: str = "interpolate",
                     names=None) -> list[EffectCurve]:
    """Bin-edge finite-difference curves for several features (2N model
    values per feature)."""
    X = np.asarray(X, dtype=float)
    if features is None:
        features = range(X.shape[1])
    curves = []
    for s in features:
        grid = grid_for(X[:, s], k)
        curves.append(ale_first_order(
            model, X, s, grid, empty_policy=empty_policy,
            name=names[s] if names else ""))
    return curves
