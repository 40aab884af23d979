"""Structured-text files for curves, surfaces-free point curves and the
Jacobian cache. Field order is fixed so equal inputs give byte-identical
files; floats are written with shortest round-trip repr.

The grammars are documented in docs/file_formats.md.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .binning import BinGrid
from .data import ParseError
from .estimators import EffectCurve, PointCurve

CURVE_META_KEYS = ("method", "feature", "name", "k", "n", "d", "seed", "model",
                   "empty_policy", "n_value", "n_gradient", "n_second")


class CacheError(ValueError):
    """Jacobian cache failed its checksum or shape validation."""


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values, dtype=float))


def _fmt_int(values) -> str:
    return " ".join(str(int(v)) for v in values)


def _parse_floats(line: str) -> np.ndarray:
    return np.array([float(t) for t in line.split()], dtype=float)


def write_curve(curve: EffectCurve, path, meta: dict) -> None:
    """Write an effect curve plus provenance. ``meta`` must carry the
    CURVE_META_KEYS (method/feature/name are taken from the curve)."""
    meta = dict(meta)
    meta.setdefault("method", curve.method)
    meta.setdefault("feature", curve.feature)
    meta.setdefault("name", curve.name)
    meta.setdefault("k", curve.grid.k)
    lines = ["effect-curve v1"]
    for key in CURVE_META_KEYS:
        lines.append(f"{key}: {meta[key]}")
    lines.append(f"centering: {repr(float(curve.centering_c))}")
    lines.append(f"edges: {_fmt(curve.grid.edges)}")
    lines.append(f"counts: {_fmt_int(curve.counts)}")
    lines.append(f"bin_means: {_fmt(curve.bin_means)}")
    lines.append(f"bin_effects: {_fmt(curve.bin_effects)}")
    lines.append(f"accumulated: {_fmt(curve.accumulated)}")
    lines.append(f"stderr: {_fmt(curve.stderr)}")
    lines.append("flags: " + " ".join(curve.flags))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve(path) -> tuple[EffectCurve, dict]:
    """Read a file written by ``write_curve``; returns (curve, meta)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "effect-curve v1":
        raise ParseError(f"{path}: not a v1 effect-curve file")
    fields = {}
    for ln in lines[1:]:
        if not ln:
            continue
        key, _, rest = ln.partition(": ")
        fields[key] = rest
    try:
        meta = {key: fields[key] for key in CURVE_META_KEYS}
        edges = _parse_floats(fields["edges"])
        k = int(meta["k"])
        grid = BinGrid(float(edges[0]), float(edges[-1]), k, edges,
                       (edges[-1] - edges[0]) / k)
        curve = EffectCurve(
            feature=int(meta["feature"]),
            grid=grid,
            counts=np.array([int(t) for t in fields["counts"].split()]),
            bin_means=_parse_floats(fields["bin_means"]),
            accumulated=_parse_floats(fields["accumulated"]),
            centering_c=float(fields["centering"]),
            stderr=_parse_floats(fields["stderr"]),
            flags=tuple(fields["flags"].split()),
            method=meta["method"],
            name=meta["name"],
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed effect-curve file: {exc}") from exc
    return curve, meta


def write_point_curve(curve: PointCurve, path, meta: dict) -> None:
    meta = dict(meta)
    meta.setdefault("method", curve.method)
    meta.setdefault("feature", curve.feature)
    lines = ["point-curve v1"]
    for key in CURVE_META_KEYS:
        lines.append(f"{key}: {meta.get(key, '')}")
    lines.append(f"xs: {_fmt(curve.xs)}")
    lines.append(f"values: {_fmt(curve.values)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_point_curve(path) -> tuple[PointCurve, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "point-curve v1":
        raise ParseError(f"{path}: not a v1 point-curve file")
    fields = {}
    for ln in lines[1:]:
        key, _, rest = ln.partition(": ")
        fields[key] = rest
    try:
        curve = PointCurve(
            feature=int(fields["feature"]),
            xs=_parse_floats(fields["xs"]),
            values=_parse_floats(fields["values"]),
            method=fields["method"],
        )
        meta = {key: fields.get(key, "") for key in CURVE_META_KEYS}
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: malformed point-curve file: {exc}") from exc
    return curve, meta


def write_jacobian_cache(path, X, J, meta: dict) -> None:
    """Write the design matrix and its Jacobian with a trailing sha256 of
    the payload, so a rebin run can detect corruption."""
    X = np.asarray(X, dtype=float)
    J = np.asarray(J, dtype=float)
    if X.shape != J.shape:
        raise ValueError(f"X shape {X.shape} != J shape {J.shape}")
    names = meta.get("names") or [f"x{j + 1}" for j in range(X.shape[1])]
    lines = ["jacobian-cache v1"]
    lines.append(f"n: {X.shape[0]}")
    lines.append(f"d: {X.shape[1]}")
    lines.append("names: " + " ".join(names))
    lines.append(f"seed: {meta.get('seed', '')}")
    lines.append(f"model: {meta.get('model', '')}")
    lines.append("x:")
    lines.extend(_fmt(row) for row in X)
    lines.append("j:")
    lines.extend(_fmt(row) for row in J)
    payload = "\n".join(lines) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload + f"sha256: {digest}\n")


def read_jacobian_cache(path) -> tuple[np.ndarray, np.ndarray, dict]:
    """Read and verify a Jacobian cache; returns (X, J, meta)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0] != "jacobian-cache v1":
        raise CacheError(f"{path}: not a v1 jacobian-cache file")
    if not lines[-1].startswith("sha256: "):
        raise CacheError(f"{path}: missing checksum line")
    payload = "\n".join(lines[:-1]) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    stored = lines[-1].removeprefix("sha256: ").strip()
    if digest != stored:
        raise CacheError(f"{path}: checksum mismatch (file corrupted?)")
    try:
        n = int(lines[1].removeprefix("n: "))
        d = int(lines[2].removeprefix("d: "))
        names = lines[3].removeprefix("names: ").split()
        meta = {
            "names": names,
            "seed": lines[4].removeprefix("seed: "),
            "model": lines[5].removeprefix("model: "),
        }
        if lines[6] != "x:" or lines[7 + n] != "j:":
            raise CacheError(f"{path}: malformed section markers")
        X = np.array([_parse_floats(ln) for ln in lines[7:7 + n]])
        J = np.array([_parse_floats(ln) for ln in lines[8 + n:8 + 2 * n]])
    except (IndexError, ValueError) as exc:
        raise CacheError(f"{path}: malformed jacobian-cache file: {exc}") from exc
    if X.shape != (n, d) or J.shape != (n, d):
        raise CacheError(f"{path}: block shapes do not match header ({n}, {d})")
    return X, J, meta
