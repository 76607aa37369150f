import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import simpson

from berkson_kde import sample
from berkson_kde.cli import RunConfig, effective_threads, read_sample_csv, run
from berkson_kde.errors import ConfigError, CsvParseError, EmptySampleError, RecordRejectedError
from berkson_kde.experiments import get_density


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def sample_csv(tmp_path):
    x = sample(get_density("bimodal-1").mixture, 80, seed=4)[:, 0]
    path = tmp_path / "sample.csv"
    path.write_text("x1\n" + "\n".join(repr(float(v)) for v in x) + "\n")
    return path


class TestReadSampleCsv:
    def test_no2_record(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("wk,wb\n1.0,1.0\n")
        np.testing.assert_array_equal(read_sample_csv(str(p), "no2"), [[1.0, 1.0]])

    def test_empty(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("x1\n")
        with pytest.raises(EmptySampleError):
            read_sample_csv(str(p))

    def test_parse_error_line(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("wk,wb\n1.0,abc\n")
        with pytest.raises(CsvParseError) as exc:
            read_sample_csv(str(p))
        assert exc.value.line == 2

    def test_ragged(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("x1,x2\n1,2\n3\n")
        with pytest.raises(CsvParseError) as exc:
            read_sample_csv(str(p))
        assert exc.value.line == 3

    def test_nan_row(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("x1\n1.0\n2.0\nnan\n")
        with pytest.raises(RecordRejectedError) as exc:
            read_sample_csv(str(p))
        assert exc.value.row == 3

    def test_header_convention(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("wk,wb\n1,2\n")
        with pytest.raises(CsvParseError):
            read_sample_csv(str(p), "x")

    def test_multicolumn(self, tmp_path):
        p = tmp_path / "w.csv"
        p.write_text("x1,x2,x3\n1,2,3\n\n4,5,6\n")
        assert read_sample_csv(str(p), "x").shape == (2, 3)


class TestConfig:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"densities": ["normal"], "error_variances": [1.0], "seed": 3}))
        cfg = RunConfig.from_json(str(p))
        assert cfg.seed == 3 and cfg.entries()[0].slug == "normal"

    @pytest.mark.parametrize(
        "raw",
        [
            {"densities": ["nope"]},
            {"error_variances": [0.0]},
            {"replicates": 0},
            {"quantiles": [0.9, 0.1]},
            {"bogus": 1},
            {"seed": -1},
        ],
    )
    def test_invalid(self, tmp_path, raw):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(raw))
        with pytest.raises(ConfigError):
            RunConfig.from_json(str(p))

    def test_inline_density(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"densities": [
            {"name": "mine", "weights": [0.5, 0.5], "means": [[-1.0], [1.0]], "covariances": [1.0, 0.5]}
        ]}))
        assert RunConfig.from_json(str(p)).entries()[0].mixture.dim == 1

    def test_thread_precedence(self, monkeypatch):
        cfg = RunConfig(threads=3)
        monkeypatch.setenv("BERKSON_THREADS", "2")
        assert effective_threads(5, cfg) == 5
        assert effective_threads(None, cfg) == 2
        monkeypatch.delenv("BERKSON_THREADS")
        assert effective_threads(None, cfg) == 3


class TestCommands:
    def test_tables_reference(self, tmp_path):
        cfg = tmp_path / "tables2.json"
        cfg.write_text(json.dumps({"table": "1d-n50"}))
        out = tmp_path / "table2.csv"
        assert run(["tables", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 20
        assert rows[0]["density"] == "normal" and rows[0]["display"] == "(1.02, 1.18)"
        assert list(rows[0]) == ["density", "sigma_eps2", "n", "h_y", "h_x", "mise_hy", "mise_hx",
                                 "mise_zero", "ratio_zero", "ratio_hx", "display"]

    def test_tables_flags(self, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["tables", "--density", "trimodal", "--sigma-eps2", "0.125", "--n", "100",
                    "--out", str(out)]) == 0
        (row,) = read_rows(out)
        assert row["display"] == "(1.50, 1.00)"

    def test_bandwidth(self, tmp_path):
        out = tmp_path / "h.csv"
        assert run(["bandwidth", "--density", "normal", "--sigma-eps2", "2", "--n", "50",
                    "--target", "y", "--out", str(out)]) == 0
        assert float(read_rows(out)[0]["h_y"]) == pytest.approx(0.26, abs=0.005)

    def test_bandwidth_x_and_asymptotic(self, tmp_path):
        out = tmp_path / "h.csv"
        run(["bandwidth", "--density", "normal", "--sigma-eps2", "2", "--n", "50", "--target", "x",
             "--out", str(out)])
        assert float(read_rows(out)[0]["h_x"]) == pytest.approx(0.52, abs=0.005)
        run(["bandwidth", "--density", "normal", "--sigma-eps2", "1", "--n", "50", "--target", "asymptotic",
             "--out", str(out)])
        assert float(read_rows(out)[0]["h_star"]) == pytest.approx(0.312276, abs=1e-6)

    @pytest.mark.parametrize("rule", ["hy-rot", "hx-silverman", "zero"])
    def test_estimate_integrates(self, tmp_path, sample_csv, rule):
        out = tmp_path / "curve.csv"
        assert run(["estimate", "--sample", str(sample_csv), "--sigma-eps2", "1", "--rule", rule,
                    "--points", "4001", "--out", str(out)]) == 0
        rows = read_rows(out)
        y = np.array([float(r["y"]) for r in rows])
        v = np.array([float(r["value"]) for r in rows])
        assert simpson(v, x=y) == pytest.approx(1.0, abs=1e-4)

    def test_ratio_curve(self, tmp_path):
        out = tmp_path / "r.csv"
        assert run(["ratio-curve", "--density", "normal", "--sigma-eps2", "1", "--n", "100",
                    "--n", "1000", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert [int(r["n"]) for r in rows] == [100, 1000]
        assert all(0.9 < float(r["ratio"]) < 1.1 for r in rows)

    def test_bands(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run(["bands", "--density", "normal", "--sigma-eps2", "2", "--n", "50", "--replicates", "20",
                    "--seed", "1", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert list(rows[0]) == ["y", "value", "lower", "upper", "truth"]
        assert all(float(r["lower"]) <= float(r["value"]) <= float(r["upper"]) for r in rows)

    def test_no2_synthetic(self, tmp_path):
        out = tmp_path / "no2.csv"
        assert run(["no2", "--out", str(out)]) == 0
        assert list(read_rows(out)[0]) == ["y", "zero", "hx", "hy"]

    def test_no2_rejects_bad_record(self, tmp_path):
        data = tmp_path / "w.csv"
        data.write_text("wk,wb\n1.0,1.0\n0.0,2.0\n")
        assert run(["no2", "--data", str(data), "--out", str(tmp_path / "o.csv")]) == 1


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert run(["bandwidth", "--density", "normal", "--sigma-eps2", "1", "--n", "5", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_config_error(self, tmp_path):
        assert run(["tables", "--density", "nope", "--out", str(tmp_path / "t.csv")]) == 1

    def test_numeric_failure(self, tmp_path):
        assert run(["bandwidth", "--density", "normal", "--sigma-eps2", "0", "--n", "50",
                    "--target", "asymptotic", "--out", str(tmp_path / "h.csv")]) == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "berkson_kde", "bandwidth", "--density", "normal",
                               "--sigma-eps2", "1", "--n", "50", "--target", "asymptotic"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[0] == "density,sigma_eps2,n,h_star,mise"


class TestDeterminism:
    def test_tables_byte_identical(self, tmp_path):
        paths = []
        for t in (1, 4):
            out = tmp_path / f"t{t}.csv"
            run(["tables", "--table", "1d-n100", "--threads", str(t), "--out", str(out)])
            paths.append(out)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_bands_byte_identical(self, tmp_path):
        paths = []
        for t in (1, 3):
            out = tmp_path / f"b{t}.csv"
            run(["bands", "--density", "bimodal-1", "--sigma-eps2", "0.125", "--n", "50",
                 "--replicates", "30", "--seed", "7", "--threads", str(t), "--out", str(out)])
            paths.append(out)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_estimate_byte_identical(self, tmp_path, sample_csv):
        outs = []
        for t in (1, 2):
            out = tmp_path / f"e{t}.csv"
            run(["estimate", "--sample", str(sample_csv), "--sigma-eps2", "0.5", "--threads", str(t),
                 "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSelftest:
    def test_single_criterion(self, capsys):
        assert run(["selftest", "--only", "4"]) == 0
        out = capsys.readouterr().out
        assert "criterion 4" in out and "1/1 criteria passed" in out
