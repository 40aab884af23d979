import numpy as np
import pytest

from dale.cli import main
from dale.curveio import read_curve
from dale.oracles import toy_ale_truth
from dale.synthdata import gen_toy


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    gen_toy(2000, seed=3).to_csv(path)
    return path


class TestEffectCommand:
    def test_dale_curve_matches_closed_form(self, tmp_path, toy_csv, capsys):
        out = tmp_path / "curves"
        code = run("effect", "--data", str(toy_csv), "--model", "toy",
                   "--method", "dale", "--feature", "0", "-K", "20",
                   "--seed", "3", "--out", str(out))
        assert code == 0
        curve, meta = read_curve(out / "curve_dale_f0_K20.txt")
        truth = toy_ale_truth(np.clip(curve.grid.edges, 0, 1))
        assert np.max(np.abs(curve.accumulated - truth)) < curve.grid.width / 2 + 1e-3
        assert meta["n_gradient"] == "2000"
        assert meta["n_value"] == "0"
        assert "evaluations:" in capsys.readouterr().out

    def test_ale_reports_two_n_value_evals(self, tmp_path, toy_csv):
        out = tmp_path / "curves"
        gen_csv = tmp_path / "small.csv"
        gen_toy(500, seed=0).to_csv(gen_csv)
        code = run("effect", "--data", str(gen_csv), "--model", "toy",
                   "--method", "ale", "--feature", "0", "-K", "10",
                   "--out", str(out))
        assert code == 0
        _, meta = read_curve(out / "curve_ale_f0_K10.txt")
        assert meta["n_value"] == "1000"

    def test_missing_file_exits_nonzero_without_output(self, tmp_path):
        out = tmp_path / "curves"
        code = run("effect", "--data", str(tmp_path / "nope.csv"), "--model", "toy",
                   "--method", "dale", "--out", str(out))
        assert code == 3
        assert not out.exists()

    def test_unknown_method_is_usage_error(self, toy_csv, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("effect", "--data", str(toy_csv), "--model", "toy",
                "--method", "banana", "--out", str(tmp_path / "x"))
        assert exc.value.code == 2

    def test_pdp_and_mplot_write_point_curves(self, tmp_path, toy_csv):
        out = tmp_path / "curves"
        for method in ("pdp", "mplot"):
            code = run("effect", "--data", str(toy_csv), "--model", "toy",
                       "--method", method, "--feature", "0", "-K", "10",
                       "--out", str(out))
            assert code == 0
            assert (out / f"curve_{method}_f0_K10.txt").exists()

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,oops\n")
        code = run("effect", "--data", str(bad), "--model", "toy",
                   "--method", "dale", "--out", str(tmp_path / "o"))
        assert code == 3


class TestRebinCommand:
    def test_rebin_matches_direct_and_reports_zero_evals(self, tmp_path, toy_csv, capsys):
        out1 = tmp_path / "direct"
        cache = tmp_path / "jac.txt"
        assert run("effect", "--data", str(toy_csv), "--model", "toy",
                   "--method", "dale", "--feature", "0", "-K", "20",
                   "--seed", "3", "--out", str(out1),
                   "--cache-out", str(cache)) == 0
        out2 = tmp_path / "rebinned"
        assert run("rebin", "--cache", str(cache), "-K", "5", "25", "100",
                   "--feature", "0", "--out", str(out2)) == 0
        files = sorted(p.name for p in out2.iterdir())
        assert files == ["curve_dale_f0_K100.txt", "curve_dale_f0_K25.txt",
                         "curve_dale_f0_K5.txt"]
        assert "value=0 gradient=0 second=0" in capsys.readouterr().out
        # rebinning back to the original resolution reproduces the curve
        out3 = tmp_path / "same-k"
        assert run("rebin", "--cache", str(cache), "-K", "20", "--feature", "0",
                   "--out", str(out3)) == 0
        direct, _ = read_curve(out1 / "curve_dale_f0_K20.txt")
        again, _ = read_curve(out3 / "curve_dale_f0_K20.txt")
        np.testing.assert_array_equal(direct.accumulated, again.accumulated)
        np.testing.assert_array_equal(direct.bin_means, again.bin_means)

    def test_corrupted_cache_fails_checksum(self, tmp_path, toy_csv):
        cache = tmp_path / "jac.txt"
        assert run("effect", "--data", str(toy_csv), "--model", "toy",
                   "--method", "dale", "-K", "5", "--out", str(tmp_path / "o"),
                   "--cache-out", str(cache)) == 0
        cache.write_text(cache.read_text().replace("0.", "1.", 1))
        assert run("rebin", "--cache", str(cache), "-K", "5",
                   "--out", str(tmp_path / "r")) == 3

    def test_cache_feature_mismatch(self, tmp_path, toy_csv):
        cache = tmp_path / "jac.txt"
        assert run("effect", "--data", str(toy_csv), "--model", "toy",
                   "--method", "dale", "-K", "5", "--out", str(tmp_path / "o"),
                   "--cache-out", str(cache)) == 0
        assert run("rebin", "--cache", str(cache), "-K", "5", "--feature", "7",
                   "--out", str(tmp_path / "r")) == 3


class TestBenchCommands:
    def test_case1_counts(self, tmp_path):
        report = tmp_path / "case1.txt"
        code = run("bench-case1", "--n", "50", "--d", "2", "3", "--l", "1",
                   "-K", "5", "--width", "8", "--repetitions", "3",
                   "--out", str(report))
        assert code == 0
        rows = [ln.split() for ln in report.read_text().splitlines()[2:]]
        by_key = {(r[0], int(r[2])): (int(r[6]), int(r[7])) for r in rows}
        assert by_key[("dale", 2)] == (0, 50)
        assert by_key[("dale", 3)] == (0, 50)
        assert by_key[("ale", 2)] == (200, 0)
        assert by_key[("ale", 3)] == (300, 0)

    def test_case1_validates_repetitions(self, tmp_path):
        assert run("bench-case1", "--repetitions", "1",
                   "--out", str(tmp_path / "r")) == 2

    def test_case2_report(self, tmp_path):
        report = tmp_path / "case2.txt"
        code = run("bench-case2", "-K", "2", "5", "--n", "800", "--seed", "1",
                   "--out", str(report))
        assert code == 0
        text = report.read_text()
        assert "nmse_ale:" in text and "nmse_dale:" in text
        dale_line = [ln for ln in text.splitlines() if ln.startswith("nmse_dale:")][0]
        ale_line = [ln for ln in text.splitlines() if ln.startswith("nmse_ale:")][0]
        dale_vals = [float(v) for v in dale_line.split()[1:]]
        ale_vals = [float(v) for v in ale_line.split()[1:]]
        assert all(d < a for d, a in zip(dale_vals, ale_vals))


class TestGenCommand:
    def test_gen_case1(self, tmp_path):
        out = tmp_path / "c1.csv"
        assert run("gen", "--name", "case1", "--n", "20", "--d", "4",
                   "--seed", "5", "--out", str(out)) == 0
        from dale.data import ingest_csv

        ds = ingest_csv(out)
        assert ds.matrix.shape == (20, 4)


def bike_like_csv(tmp_path, n=600, seed=0):
    # same column layout as the hourly rentals table, including a text column
    rng = np.random.default_rng(seed)
    names = ["instant", "dteday", "season", "yr", "mnth", "hr", "holiday",
             "weekday", "workingday", "weathersit", "temp", "atemp", "hum",
             "windspeed", "casual", "registered", "cnt"]
    path = tmp_path / "hour.csv"
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            hr = i % 24
            temp = rng.uniform(0, 1)
            cnt = 50 + 120 * np.exp(-0.5 * ((hr - 17) / 3.0) ** 2) + 40 * temp \
                + rng.normal(0, 5)
            row = [str(i + 1), f"2011-01-{(i % 28) + 1:02d}",
                   str(rng.integers(1, 5)), "0", str(rng.integers(1, 13)),
                   str(hr), str(rng.integers(0, 2)), str(rng.integers(0, 7)),
                   str(rng.integers(0, 2)), str(rng.integers(1, 4)),
                   f"{temp:.4f}", f"{rng.uniform(0, 1):.4f}",
                   f"{rng.uniform(0, 1):.4f}", f"{rng.uniform(0, 1):.4f}",
                   "0", "0", f"{cnt:.2f}"]
            fh.write(",".join(row) + "\n")
    return path


class TestBikeCommand:
    def test_pipeline_on_stand_in_table(self, tmp_path):
        csv = bike_like_csv(tmp_path)
        out = tmp_path / "bike"
        code = run("bike", "--data", str(csv), "-K", "6", "12",
                   "--reference-k", "24", "--epochs", "2", "--out", str(out))
        assert code == 0
        report = (out / "bike_report.txt").read_text()
        assert "nmse_feature: hr" in report
        # count table: differential column constant, edge-difference linear
        lines = report.splitlines()
        start = lines.index("features dale_gradient_evals dale_value_evals "
                            "ale_value_evals") + 1
        rows = [ln.split() for ln in lines[start:]]
        n = 600
        for j, row in enumerate(rows, start=1):
            assert int(row[1]) == n
            assert int(row[3]) == 2 * n * j

    def test_missing_column_schema_error(self, tmp_path):
        csv = bike_like_csv(tmp_path)
        code = run("bike", "--data", str(csv), "--feature-subset", "hr,bogus",
                   "--epochs", "1", "--out", str(tmp_path / "b"))
        assert code == 4
