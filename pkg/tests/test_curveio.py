import numpy as np
import pytest

from dale.curveio import (
    CacheError,
    read_curve,
    read_jacobian_cache,
    read_point_curve,
    write_curve,
    write_jacobian_cache,
    write_point_curve,
)
from dale.data import ParseError
from dale.estimators import PointCurve, dale_first_order, grid_for, pdp
from dale.synthdata import gen_toy, toy_model


def sample_curve():
    rng = np.random.default_rng(0)
    values = rng.uniform(0, 1, 300)
    # leave one interior gap so a flag appears in the file
    values = values[(values < 0.4) | (values > 0.6)]
    column = rng.normal(size=values.size)
    return dale_first_order(column, values, grid_for(values, 10))


META = {
    "method": "dale", "feature": 0, "name": "x1", "k": 10, "n": 300, "d": 2,
    "seed": 0, "model": "builtin:toy", "empty_policy": "interpolate",
    "n_value": 0, "n_gradient": 300, "n_second": 0,
}


class TestCurveFiles:
    def test_round_trip_exact(self, tmp_path):
        curve = sample_curve()
        path = tmp_path / "curve.txt"
        write_curve(curve, path, META)
        back, meta = read_curve(path)
        np.testing.assert_array_equal(back.accumulated, curve.accumulated)
        np.testing.assert_array_equal(back.bin_means, curve.bin_means)
        np.testing.assert_array_equal(back.stderr, curve.stderr)
        np.testing.assert_array_equal(back.counts, curve.counts)
        np.testing.assert_array_equal(back.grid.edges, curve.grid.edges)
        assert back.centering_c == curve.centering_c
        assert back.flags == curve.flags
        assert "empty" in back.flags
        assert meta["model"] == "builtin:toy"
        assert meta["n_gradient"] == "300"

    def test_byte_identical_rewrites(self, tmp_path):
        curve = sample_curve()
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        write_curve(curve, a, META)
        write_curve(curve, b, META)
        assert a.read_bytes() == b.read_bytes()

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("effect-curve v1\nmethod: dale\n")
        with pytest.raises(ParseError):
            read_curve(path)
        path.write_text("not a curve file\n")
        with pytest.raises(ParseError):
            read_curve(path)


class TestPointCurveFiles:
    def test_round_trip(self, tmp_path):
        data = gen_toy(50, seed=1)
        curve = pdp(toy_model(), data.matrix, 0, np.linspace(0.1, 0.9, 5))
        path = tmp_path / "pdp.txt"
        write_point_curve(curve, path, META | {"method": "pdp"})
        back, meta = read_point_curve(path)
        assert isinstance(back, PointCurve)
        np.testing.assert_array_equal(back.xs, curve.xs)
        np.testing.assert_array_equal(back.values, curve.values)
        assert back.method == "pdp"


class TestJacobianCache:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 3))
        J = rng.normal(size=(40, 3))
        path = tmp_path / "cache.txt"
        write_jacobian_cache(path, X, J, {"names": ["a", "b", "c"], "seed": 9,
                                          "model": "m.txt"})
        X2, J2, meta = read_jacobian_cache(path)
        np.testing.assert_array_equal(X2, X)
        np.testing.assert_array_equal(J2, J)
        assert meta["names"] == ["a", "b", "c"]
        assert meta["seed"] == "9"

    def test_corruption_detected(self, tmp_path):
        path = tmp_path / "cache.txt"
        write_jacobian_cache(path, np.ones((3, 2)), np.ones((3, 2)), {})
        text = path.read_text()
        path.write_text(text.replace("1.0", "1.5", 1))
        with pytest.raises(CacheError, match="checksum"):
            read_jacobian_cache(path)

    def test_missing_checksum_line(self, tmp_path):
        path = tmp_path / "cache.txt"
        path.write_text("jacobian-cache v1\nn: 1\n")
        with pytest.raises(CacheError):
            read_jacobian_cache(path)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            write_jacobian_cache("x", np.ones((2, 2)), np.ones((3, 2)), {})
