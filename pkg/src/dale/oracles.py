"""Ground-truth effects and the NMSE accuracy metric.

The bivariate toy setup (x2 = x1 deterministically, piecewise-linear
model) has closed-form effects for all three definitions; everything
else goes through trapezoidal accumulation of a Monte-Carlo estimate of
the conditional mean derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import EffectCurve, curve_values_at
from .models import DifferentiableModel, NumericError


class DomainError(ValueError):
    """Evaluation point outside the effect's domain."""


class MetricUndefinedError(ValueError):
    """NMSE is undefined because the reference has zero variance."""


def _check_unit_domain(x1):
    x1 = np.asarray(x1, dtype=float)
    if ((x1 < 0) | (x1 > 1)).any():
        raise DomainError("toy effects are defined on [0, 1]")
    return x1


def toy_pdp_truth(x1):
    """Closed-form partial-dependence effect of the toy setup: (1-x)^2/2."""
    x1 = _check_unit_domain(x1)
    return (1.0 - x1) ** 2 / 2.0


def toy_mp_truth(x1):
    """Closed-form marginal effect of the toy setup: 1-2x below 0.5, else 0."""
    x1 = _check_unit_domain(x1)
    return np.where(x1 <= 0.5, 1.0 - 2.0 * x1, 0.0)


def toy_ale_truth(x1):
    """Closed-form centered accumulated effect of the toy setup:
    0.375-x below 0.5, else -0.125."""
    x1 = _check_unit_domain(x1)
    return np.where(x1 <= 0.5, 0.375 - x1, -0.125)


@dataclass(frozen=True)
class GroundTruthEffect:
    """Reference effect curve, evaluable anywhere on its domain.

    ``provenance`` records how it was obtained ("closed-form" or
    "numeric-integration"); numeric variants carry their quadrature step
    and per-node Monte-Carlo sample count.
    """

    xs: np.ndarray
    values: np.ndarray
    provenance: str
    quad_step: float | None = None
    mc_samples: int | None = None

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.xs[0]), float(self.xs[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if ((x < lo) | (x > hi)).any():
            raise DomainError(f"point outside effect domain [{lo}, {hi}]")
        return np.interp(x, self.xs, self.values)


def numeric_ale_truth(model: DifferentiableModel, conditional_sampler, domain, *,
                      feature: int = 0, n_quad: int = 200, n_mc: int = 100,
                      seed: int = 0, center_on=None) -> GroundTruthEffect:
    """Accumulated-local-effect ground truth by numeric integration.

    At each of ``n_quad + 1`` equispaced nodes z, the conditional mean
    derivative is estimated by averaging the model gradient over
    ``n_mc`` draws from ``conditional_sampler(z, n_mc, rng)`` (which must
    return full (n, D) input points with the feature pinned at z). The
    local effects are accumulated with the trapezoid rule. Centering
    subtracts the mean curve value over ``center_on`` draws of the
    feature when given, else the uniform average over the domain.
    """
    if n_quad < 10:
        raise ValueError(f"n_quad must be >= 10, got {n_quad}")
    if n_mc < 1:
        raise ValueError(f"n_mc must be >= 1, got {n_mc}")
    lo, hi = float(domain[0]), float(domain[1])
    zs = np.linspace(lo, hi, n_quad + 1)
    rng = np.random.default_rng(seed)
    local = np.empty(zs.size)
    for j, z in enumerate(zs):
        pts = np.asarray(conditional_sampler(z, n_mc, rng), dtype=float)
        grads = model.gradient_batch(pts)[:, feature]
        if not np.isfinite(grads).all():
            raise NumericError(f"non-finite gradient while integrating at z={z}")
        local[j] = grads.mean()
    dz = (hi - lo) / n_quad
    acc = np.concatenate([[0.0], np.cumsum(0.5 * (local[:-1] + local[1:]) * dz)])
    if center_on is not None:
        c = -float(np.mean(np.interp(np.asarray(center_on, dtype=float), zs, acc)))
    else:
        c = -float(np.trapezoid(acc, zs) / (hi - lo))
    return GroundTruthEffect(zs, acc + c, "numeric-integration",
                             quad_step=dz, mc_samples=n_mc)


def _evaluate(effect, xs: np.ndarray) -> np.ndarray:
    if isinstance(effect, EffectCurve):
        return curve_values_at(effect, xs)
    return np.asarray(effect(xs), dtype=float)


def nmse(approx, truth, eval_points=None) -> float:
    """Normalized mean squared error of an effect curve against a reference.

    Both curves are re-centered to zero mean over the evaluation points
    before comparing, so constant offsets do not count as error; the
    squared deviation is normalized by the variance of the re-centered
    reference. ``approx``/``truth`` may be EffectCurve objects or plain
    callables; eval points default to the approximation's grid edges.
    """
    if eval_points is None:
        if not isinstance(approx, EffectCurve):
            raise ValueError("eval_points is required unless approx is an EffectCurve")
        eval_points = approx.grid.edges
    xs = np.asarray(eval_points, dtype=float)
    if xs.size < 2:
        raise ValueError(f"need at least 2 evaluation points, got {xs.size}")
    a = _evaluate(approx, xs)
    t = _evaluate(truth, xs)
    a = a - a.mean()
    t = t - t.mean()
    var = float(np.mean(t * t))
    if var == 0.0:
        raise MetricUndefinedError("reference curve has zero variance on the eval points")
    return float(np.mean((a - t) ** 2) / var)
