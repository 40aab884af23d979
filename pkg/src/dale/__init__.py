"""Feature-effect estimation for differentiable models.

Estimates how single features drive a scalar model's output, either from
exact partial derivatives at the observed points (the differential
estimators, one Jacobian pass for every feature and resolution) or from
the classic synthetic-point baselines (bin-edge differences, partial
dependence, marginal curves), with per-curve standard errors, ground-truth
oracles and a replication CLI.
"""

from .binning import (BinGrid, BinStats, assign_bins, bin_statistics,
                      fill_empty_bins, grid_for, make_grid)
from .data import Dataset, ingest_csv
from .estimators import (EffectCurve, EffectSurface, PointCurve,
                         ale_all_features, ale_first_order, ale_second_order,
                         center_curve, curve_stderr, curve_values_at,
                         dale_all_features, dale_first_order,
                         dale_second_order, evaluate_curve_at, mplot, pdp,
                         rebin)
from .models import (AnalyticModel, DifferentiableModel, EvalCounters,
                     MlpModel, finite_diff_gradient, hessian_entry_batch,
                     jacobian_batch, load_mlp, save_mlp, train_mlp)
from .oracles import (GroundTruthEffect, nmse, numeric_ale_truth,
                      toy_ale_truth, toy_mp_truth, toy_pdp_truth)
from .synthdata import (GeneratorSpec, case2_conditional_sampler, case2_model,
                        gen_case1, gen_case2, gen_ood_demo, gen_toy,
                        ood_model, toy_conditional_sampler, toy_model)

__version__ = "0.1.0"

__all__ = [
    "AnalyticModel", "BinGrid", "BinStats", "Dataset", "DifferentiableModel",
    "EffectCurve", "EffectSurface", "EvalCounters", "GeneratorSpec",
    "GroundTruthEffect", "MlpModel", "PointCurve", "ale_all_features",
    "ale_first_order", "ale_second_order", "assign_bins", "bin_statistics",
    "case2_conditional_sampler", "case2_model", "center_curve", "curve_stderr",
    "curve_values_at", "dale_all_features", "dale_first_order",
    "dale_second_order", "evaluate_curve_at", "fill_empty_bins",
    "finite_diff_gradient", "gen_case1", "gen_case2", "gen_ood_demo",
    "gen_toy", "grid_for", "hessian_entry_batch", "ingest_csv",
    "jacobian_batch", "load_mlp", "make_grid", "mplot", "nmse",
    "numeric_ale_truth", "ood_model", "pdp", "rebin", "save_mlp",
    "toy_ale_truth", "toy_conditional_sampler", "toy_mp_truth",
    "toy_model", "toy_pdp_truth", "train_mlp",
]
