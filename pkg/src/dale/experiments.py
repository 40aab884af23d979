"""Experiment harness behind the CLI: effect-file production, the two
synthetic benchmarks (evaluation-count/wall-time scaling and bin-width
accuracy) and the bike-sharing pipeline."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import curveio, estimators, synthdata
from .data import ingest_csv
from .models import MlpModel, jacobian_batch, load_mlp, train_mlp
from .oracles import nmse, numeric_ale_truth

BUILTIN_MODELS = ("toy", "ood-demo", "case2")
BIKE_DEFAULT_FEATURES = ["season", "mnth", "hr", "holiday", "weekday",
                         "workingday", "weathersit", "temp", "atemp", "hum",
                         "windspeed"]


def resolve_model(spec: str, dim: int):
    """Map a --model argument to a model instance.

    Builtin names ("toy", "ood-demo", "case2") construct the synthetic
    models at their default parameters; anything else is read as an MLP
    model file.
    """
    if spec == "toy":
        model = synthdata.toy_model()
    elif spec == "ood-demo":
        model = synthdata.ood_model()
    elif spec == "case2":
        model = synthdata.case2_model()
    else:
        model = load_mlp(spec)
    if model.dim != dim:
        raise ValueError(f"model dimension {model.dim} does not match data dimension {dim}")
    return model


def median_time(fn, repetitions: int) -> float:
    """Median wall time over ``repetitions`` runs after one warmup."""
    fn()
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _curve_meta(method, dataset, k, seed, model_spec, empty_policy, counts3):
    return {
        "method": method,
        "feature": 0,
        "name": "",
        "k": k,
        "n": dataset.n,
        "d": dataset.d,
        "seed": seed,
        "model": model_spec,
        "empty_policy": empty_policy,
        "n_value": counts3[0],
        "n_gradient": counts3[1],
        "n_second": counts3[2],
    }


def run_effect(data_path, model_spec: str, method: str, features, k: int,
               out_dir, *, empty_policy: str = "interpolate", seed: int = 0,
               cache_out=None) -> dict:
    """Compute effect curves for the requested features and write one file
    per feature. Returns a summary with evaluation counts, timing and the
    written paths."""
    dataset = ingest_csv(data_path)
    model = resolve_model(model_spec, dataset.d)
    if features is None:
        features = list(range(dataset.d))
    for s in features:
        if not 0 <= s < dataset.d:
            raise ValueError(f"feature index {s} out of range for d={dataset.d}")
    X = dataset.matrix
    model.counters.reset()
    t0 = time.perf_counter()
    jacobian = None
    written = []
    results = []
    if method == "dale":
        curves, jacobian = estimators.dale_all_features(
            model, X, k, features=features, empty_policy=empty_policy,
            names=dataset.names)
        results = list(zip(features, curves))
    elif method == "ale":
        curves = estimators.ale_all_features(
            model, X, k, features=features, empty_policy=empty_policy,
            names=dataset.names)
        results = list(zip(features, curves))
    elif method in ("pdp", "mplot"):
        for s in features:
            grid = estimators.grid_for(X[:, s], k)
            if method == "pdp":
                curve = estimators.pdp(model, X, s, grid.edges)
            else:
                curve = estimators.mplot(model, X, s, grid, empty_policy=empty_policy)
            results.append((s, curve))
    else:
        raise ValueError(f"unknown method {method!r}")
    elapsed = time.perf_counter() - t0
    counts3 = model.counters.snapshot()

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for s, curve in results:
        meta = _curve_meta(method, dataset, k, seed, model_spec, empty_policy, counts3)
        meta["feature"] = s
        meta["name"] = dataset.names[s]
        path = out_dir / f"curve_{method}_f{s}_K{k}.txt"
        if isinstance(curve, estimators.EffectCurve):
            curveio.write_curve(curve, path, meta)
        else:
            curveio.write_point_curve(curve, path, meta)
        written.append(str(path))
    if cache_out is not None and jacobian is not None:
        curveio.write_jacobian_cache(
            cache_out, X, jacobian,
            {"names": dataset.names, "seed": seed, "model": model_spec})
    return {
        "n": dataset.n, "d": dataset.d, "k": k, "method": method,
        "n_value": counts3[0], "n_gradient": counts3[1], "n_second": counts3[2],
        "seconds": elapsed, "files": written,
    }


def run_rebin(cache_path, k_list, out_dir, *, features=None,
              empty_policy: str = "interpolate") -> dict:
    """Rebuild effect curves at new resolutions from a Jacobian cache.

    Zero model evaluations by construction: only the cached derivative
    columns and the raw feature values are touched.
    """
    X, J, meta = curveio.read_jacobian_cache(cache_path)
    if features is None:
        features = list(range(X.shape[1]))
    for s in features:
        if not 0 <= s < X.shape[1]:
            raise curveio.CacheError(
                f"feature index {s} not present in cache of dimension {X.shape[1]}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k in k_list:
        for s in features:
            curve = estimators.rebin(J[:, s], X[:, s], k,
                                     empty_policy=empty_policy, feature=s,
                                     name=meta["names"][s])
            file_meta = {
                "method": "dale", "feature": s, "name": meta["names"][s],
                "k": k, "n": X.shape[0], "d": X.shape[1],
                "seed": meta.get("seed", ""), "model": meta.get("model", ""),
                "empty_policy": empty_policy,
                "n_value": 0, "n_gradient": 0, "n_second": 0,
            }
            path = out_dir / f"curve_dale_f{s}_K{k}.txt"
            curveio.write_curve(curve, path, file_meta)
            written.append(str(path))
    return {"files": written, "n_value": 0, "n_gradient": 0, "n_second": 0}


@dataclass
class BenchRow:
    """One configuration of the scaling benchmark."""

    method: str
    n: int
    d: int
    layers: int
    k: int
    seed: int
    n_value: int
    n_gradient: int
    n_second: int
    median_seconds: float


def run_bench_case1(n_list, d_list, l_list, k: int, repetitions: int, *,
                    width: int = 256, seed: int = 0) -> list[BenchRow]:
    """Evaluation counts and median wall times of both first-order
    estimators over a grid of dataset sizes, dimensionalities and model
    depths. Untrained seeded networks suffice: cost does not depend on
    the weights."""
    if repetitions < 3:
        raise ValueError(f"repetitions must be >= 3, got {repetitions}")
    rows = []
    for n in n_list:
        for d in d_list:
            for layers in l_list:
                X = synthdata.gen_case1(n, d, seed).matrix
                model = MlpModel([d] + [width] * layers + [1], seed=seed)

                def run_dale():
                    estimators.dale_all_features(model, X, k)

                def run_ale():
                    estimators.ale_all_features(model, X, k)

                for method, fn in (("dale", run_dale), ("ale", run_ale)):
                    model.counters.reset()
                    fn()
                    counts3 = model.counters.snapshot()
                    med = median_time(fn, repetitions)
                    rows.append(BenchRow(method, n, d, layers, k, seed,
                                         counts3[0], counts3[1], counts3[2], med))
    return rows


def format_case1_report(rows: list[BenchRow]) -> str:
    lines = ["scaling-benchmark v1"]
    lines.append("method n d layers k seed n_value n_gradient n_second median_seconds")
    for r in rows:
        lines.append(f"{r.method} {r.n} {r.d} {r.layers} {r.k} {r.seed} "
                     f"{r.n_value} {r.n_gradient} {r.n_second} {r.median_seconds:.6f}")
    return "\n".join(lines) + "\n"


def case2_nmse_table(k_list, n: int, seeds, *, tau: float = 0.5,
                     alpha: float = 10.0, n_quad: int = 400, n_mc: int = 200,
                     truth_seed: int = 12345) -> dict:
    """Seed-averaged NMSE of both estimators against the numeric ground
    truth on the clustered three-feature construction, per bin count."""
    model = synthdata.case2_model(tau, alpha)
    truth = numeric_ale_truth(
        model, synthdata.case2_conditional_sampler(), (0.0, 10.0),
        feature=0, n_quad=n_quad, n_mc=n_mc, seed=truth_seed)
    table = {"k_list": list(k_list), "dale": [], "ale": []}
    for k in k_list:
        dale_vals, ale_vals = [], []
        for seed in seeds:
            X = synthdata.gen_case2(n, seed).matrix
            grid = estimators.grid_for(X[:, 0], k)
            J = jacobian_batch(model, X)
            dale_curve = estimators.dale_first_order(J[:, 0], X[:, 0], grid)
            ale_curve = estimators.ale_first_order(model, X, 0, grid)
            dale_vals.append(nmse(dale_curve, truth))
            ale_vals.append(nmse(ale_curve, truth))
        table["dale"].append(float(np.mean(dale_vals)))
        table["ale"].append(float(np.mean(ale_vals)))
    return table


def format_case2_report(table: dict, n: int, seeds) -> str:
    lines = ["accuracy-benchmark v1"]
    lines.append(f"n: {n}")
    lines.append("seeds: " + " ".join(str(s) for s in seeds))
    lines.append("k: " + " ".join(str(k) for k in table["k_list"]))
    lines.append("nmse_ale: " + " ".join(f"{v:.4f}" for v in table["ale"]))
    lines.append("nmse_dale: " + " ".join(f"{v:.4f}" for v in table["dale"]))
    return "\n".join(lines) + "\n"


def standardize_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Zero-mean/unit-variance columns; constant columns keep scale 1."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    return (X - mean) / std, mean, std


def run_bike(data_path, *, feature_subset=None, k_list=(25, 50, 100),
             reference_k: int = 200, epochs: int = 20, learning_rate: float = 0.01,
             hidden=(64, 64, 64), batch_size: int = 512, seed: int = 0,
             target: str = "cnt", nmse_feature: str = "hr", out_dir=None) -> dict:
    """Train a small MLP on the bike-sharing table and compare both
    estimators across bin counts.

    Features are standardized before training; curve grids are reported
    in original units by inverse-transforming the edges. The reference
    effect for each method is its own curve at ``reference_k``; NMSE
    against the differential-method reference is reported as well.
    Returns the report dict (and writes files when out_dir is given).
    """
    features = list(feature_subset) if feature_subset else list(BIKE_DEFAULT_FEATURES)
    dataset = ingest_csv(data_path, columns=features + [target])
    y = dataset.column(target)
    X_raw = dataset.select(features).matrix
    X, mean, std = standardize_columns(X_raw)
    d = X.shape[1]

    model = MlpModel([d] + list(hidden) + [1], seed=seed)
    y_std, y_mean, y_scale = standardize_columns(y[:, None])
    history = train_mlp(model, X, y_std[:, 0], epochs, learning_rate,
                        batch_size=batch_size, seed=seed)
    # fold the target scaling back into the linear output layer
    model.weights[-1] = model.weights[-1] * y_scale[0]
    model.biases[-1] = model.biases[-1] * y_scale[0] + y_mean[0]

    s = features.index(nmse_feature) if nmse_feature in features else 0
    model.counters.reset()
    J = jacobian_batch(model, X)
    grid_ref = estimators.grid_for(X[:, s], reference_k)
    dale_ref = estimators.dale_first_order(J[:, s], X[:, s], grid_ref, feature=s)
    ale_ref = estimators.ale_first_order(model, X, s, grid_ref)

    nmse_rows = []
    curves = {}
    for k in k_list:
        dale_k = estimators.rebin(J[:, s], X[:, s], k, feature=s)
        ale_k = estimators.ale_first_order(
            model, X, s, estimators.grid_for(X[:, s], k))
        xs = dale_k.grid.edges
        nmse_rows.append({
            "k": k,
            "dale_vs_dale_ref": nmse(dale_k, lambda z: estimators.curve_values_at(dale_ref, z), xs),
            "ale_vs_ale_ref": nmse(ale_k, lambda z: estimators.curve_values_at(ale_ref, z), xs),
            "ale_vs_dale_ref": nmse(ale_k, lambda z: estimators.curve_values_at(dale_ref, z), xs),
        })
        curves[k] = (dale_k, ale_k)

    # evaluation counts for computing all effects of the first j features
    count_rows = []
    for j in range(1, d + 1):
        model.counters.reset()
        estimators.dale_all_features(model, X, k_list[0], features=range(j))
        dale_counts = model.counters.snapshot()
        model.counters.reset()
        estimators.ale_all_features(model, X, k_list[0], features=range(j))
        ale_counts = model.counters.snapshot()
        count_rows.append({
            "features": j,
            "dale_gradient_evals": dale_counts[1],
            "dale_value_evals": dale_counts[0],
            "ale_value_evals": ale_counts[0],
        })

    report = {
        "n": dataset.n, "d": d, "features": features, "target": target,
        "nmse_feature": features[s], "reference_k": reference_k,
        "final_train_mse": history[-1], "nmse": nmse_rows, "counts": count_rows,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for k, (dale_k, ale_k) in curves.items():
            for curve in (dale_k, ale_k):
                orig = _curve_in_original_units(curve, mean[s], std[s])
                meta = {
                    "method": curve.method, "feature": s, "name": features[s],
                    "k": k, "n": dataset.n, "d": d, "seed": seed,
                    "model": "trained-mlp", "empty_policy": "interpolate",
                    "n_value": 0, "n_gradient": 0, "n_second": 0,
                }
                curveio.write_curve(orig, out_dir / f"curve_{curve.method}_{features[s]}_K{k}.txt", meta)
        (out_dir / "bike_report.txt").write_text(format_bike_report(report), encoding="utf-8")
    return report


def _curve_in_original_units(curve, mean: float, std: float):
    """Undo feature standardization on the grid axis; accumulated values
    are unchanged, bin means rescale with the axis."""
    edges = curve.grid.edges * std + mean
    grid = estimators.BinGrid(
        float(edges[0]), float(edges[-1]), curve.grid.k, edges,
        float(edges[-1] - edges[0]) / curve.grid.k)
    return replace(curve, grid=grid, bin_means=curve.bin_means / std)


def format_bike_report(report: dict) -> str:
    lines = ["bike-report v1"]
    lines.append(f"n: {report['n']}")
    lines.append(f"d: {report['d']}")
    lines.append("features: " + " ".join(report["features"]))
    lines.append(f"nmse_feature: {report['nmse_feature']}")
    lines.append(f"reference_k: {report['reference_k']}")
    lines.append(f"final_train_mse: {report['final_train_mse']:.6f}")
    lines.append("k dale_vs_dale_ref ale_vs_ale_ref ale_vs_dale_ref")
    for row in report["nmse"]:
        lines.append(f"{row['k']} {row['dale_vs_dale_ref']:.4f} "
                     f"{row['ale_vs_ale_ref']:.4f} {row['ale_vs_dale_ref']:.4f}")
    lines.append("features dale_gradient_evals dale_value_evals ale_value_evals")
    for row in report["counts"]:
        lines.append(f"{row['features']} {row['dale_gradient_evals']} "
                     f"{row['dale_value_evals']} {row['ale_value_evals']}")
    return "\n".join(lines) + "\n"
