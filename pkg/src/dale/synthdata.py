"""Seeded synthetic generators and their analytic black-box models.

Four constructions:

* toy: x1 ~ U(0,1), x2 = x1 exactly, with a piecewise-linear bivariate
  model whose PDP/MPlot/ALE effects are known in closed form.
* ood-demo: x1 ~ U(0,10), x2 = x1, with f = x1*x2 on the data band
  |x1-x2| < 0.5 and a quadratic blow-up outside it, to expose
  off-distribution bin-edge evaluations.
* case1: i.i.d. standard-normal design matrices for scaling studies.
* case2: clustered x1 with a tightly coupled x2 and a noisy x3, plus a
  three-branch model that stays mild on the band |x1-x2| < tau and picks
  up a steep quadratic term outside it.

All generators are pure functions of their arguments and the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .models import AnalyticModel

CASE2_CENTERS = (1.5, 3.0, 5.0, 7.0, 8.5)


def gen_toy(n: int, seed: int = 0) -> Dataset:
    """x1 uniform on (0,1); x2 identical to x1."""
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0.0, 1.0, n)
    return Dataset(np.column_stack([x1, x1]), ["x1", "x2"])


def toy_model() -> AnalyticModel:
    """f = 1 - x1 - x2 where x1 + x2 <= 1, else 0 (ties take the linear
    branch)."""
    def value(X):
        inside = X[:, 0] + X[:, 1] <= 1.0
        return np.where(inside, 1.0 - X[:, 0] - X[:, 1], 0.0)

    def gradient(X):
        inside = X[:, 0] + X[:, 1] <= 1.0
        g = np.where(inside, -1.0, 0.0)
        return np.column_stack([g, g])

    def second(X, l, m):
        return np.zeros(X.shape[0])

    return AnalyticModel(2, value, gradient, second, name="toy")


def gen_ood_demo(n: int, seed: int = 0) -> Dataset:
    """x1 uniform on (0,10); x2 identical to x1."""
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0.0, 10.0, n)
    return Dataset(np.column_stack([x1, x1]), ["x1", "x2"])


def ood_model(gamma: float = 100.0, band: float = 0.5) -> AnalyticModel:
    """f = x1*x2 inside |x1-x2| < band, plus gamma*(|x1-x2|-band)^2 outside.

    The quadratic join is C1 across the band boundary, so gradients stay
    well-defined everywhere while synthetic points far off the x2 = x1
    line see rapidly growing values.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    def parts(X):
        d = X[:, 0] - X[:, 1]
        excess = np.maximum(np.abs(d) - band, 0.0)
        return d, excess

    def value(X):
        _, excess = parts(X)
        return X[:, 0] * X[:, 1] + gamma * excess * excess

    def gradient(X):
        d, excess = parts(X)
        p = 2.0 * gamma * excess * np.sign(d)
        return np.column_stack([X[:, 1] + p, X[:, 0] - p])

    def second(X, l, m):
        _, excess = parts(X)
        out = (excess > 0).astype(float)
        if l == m:
            return 2.0 * gamma * out
        return 1.0 - 2.0 * gamma * out

    return AnalyticModel(2, value, gradient, second, name="ood-demo")


def gen_case1(n: int, d: int, seed: int = 0) -> Dataset:
    """n x d i.i.d. standard-normal design matrix."""
    if n < 1 or d < 1:
        raise ValueError(f"need n, d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    return Dataset(rng.standard_normal((n, d)))


def gen_case2(n: int, seed: int = 0, *, sigma2: float = 0.1, sigma3_sq: float = 10.0,
              centers=CASE2_CENTERS, cluster_sigma: float = 0.25) -> Dataset:
    """Clustered x1 on [0,10], x2 ~ N(x1, sigma2^2), x3 ~ N(0, sigma3_sq).

    x1 is an equal-weight Gaussian mixture at the given centers with
    per-cluster spread ``cluster_sigma``, truncated to [0, 10] by
    resampling. sigma2 is a standard deviation; sigma3_sq is a variance.
    """
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    x1 = np.empty(n)
    filled = 0
    while filled < n:
        picks = rng.integers(0, centers.size, n - filled)
        cand = rng.normal(centers[picks], cluster_sigma)
        good = cand[(cand >= 0.0) & (cand <= 10.0)]
        x1[filled:filled + good.size] = good
        filled += good.size
    x2 = rng.normal(x1, sigma2)
    x3 = rng.normal(0.0, np.sqrt(sigma3_sq), n)
    return Dataset(np.column_stack([x1, x2, x3]), ["x1", "x2", "x3"])


def case2_model(tau: float = 0.5, alpha: float = 10.0) -> AnalyticModel:
    """Three-branch trivariate model around the band |x1-x2| < tau.

    On the band, f0 = x1*x2 + x1*x3. Off it, the quadratic
    g = alpha*((x1-x2)^2 - tau^2) is subtracted where x1-x2 >= tau and
    added where x1-x2 <= -tau; g vanishes on the branch boundaries so f
    is continuous.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")

    def branches(X):
        d = X[:, 0] - X[:, 1]
        return d, d >= tau, d <= -tau

    def value(X):
        d, upper, lower = branches(X)
        f0 = X[:, 0] * X[:, 1] + X[:, 0] * X[:, 2]
        g = alpha * (d * d - tau * tau)
        return np.where(upper, f0 - g, np.where(lower, f0 + g, f0))

    def gradient(X):
        d, upper, lower = branches(X)
        sgn = np.where(upper, -1.0, np.where(lower, 1.0, 0.0))
        gp = 2.0 * alpha * d * sgn
        return np.column_stack([
            X[:, 1] + X[:, 2] + gp,
            X[:, 0] - gp,
            X[:, 0],
        ])

    def second(X, l, m):
        d, upper, lower = branches(X)
        sgn = np.where(upper, -1.0, np.where(lower, 1.0, 0.0))
        pair = tuple(sorted((l, m)))
        if pair == (0, 1):
            return 1.0 - 2.0 * alpha * sgn
        if pair == (0, 2):
            return np.ones(X.shape[0])
        if pair in ((0, 0), (1, 1)):
            return 2.0 * alpha * sgn
        return np.zeros(X.shape[0])

    return AnalyticModel(3, value, gradient, second, name="case2")


def case2_conditional_sampler(sigma2: float = 0.1, sigma3_sq: float = 10.0):
    """Sampler of (x2, x3) given x1 = z for the case2 generator, in the
    full-point form consumed by numeric_ale_truth."""
    def sample(z, n, rng):
        x2 = rng.normal(z, sigma2, n)
        x3 = rng.normal(0.0, np.sqrt(sigma3_sq), n)
        return np.column_stack([np.full(n, z), x2, x3])

    return sample


def toy_conditional_sampler():
    """Degenerate sampler of the toy setup: x2 equals x1 with certainty."""
    def sample(z, n, rng):
        return np.full((n, 2), z)

    return sample


@dataclass(frozen=True)
class GeneratorSpec:
    """Named, seeded generator configuration; same spec, same bits."""

    name: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def dataset(self) -> Dataset:
        p = self.params
        if self.name == "toy":
            return gen_toy(p.get("n", 1000), self.seed)
        if self.name == "ood-demo":
            return gen_ood_demo(p.get("n", 1000), self.seed)
        if self.name == "case1":
            return gen_case1(p.get("n", 1000), p.get("d", 10), self.seed)
        if self.name == "case2":
            return gen_case2(
                p.get("n", 1000), self.seed,
                sigma2=p.get("sigma2", 0.1), sigma3_sq=p.get("sigma3_sq", 10.0),
                centers=p.get("centers", CASE2_CENTERS),
                cluster_sigma=p.get("cluster_sigma", 0.25))
        raise ValueError(f"unknown generator {self.name!r}")

    def model(self) -> AnalyticModel | None:
        p = self.params
        if self.name == "toy":
            return toy_model()
        if self.name == "ood-demo":
            return ood_model(p.get("gamma", 100.0))
        if self.name == "case2":
            return case2_model(p.get("tau", 0.5), p.get("alpha", 10.0))
        return None
