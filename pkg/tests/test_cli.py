"""End-to-end command-line behavior, including exit codes and config."""

import csv

import pytest

from vaxcover.cli import main

from reference_data import ALT_EXPECTED, ALT_PARAMS_CSV, COHORTS, COHORTS_CSV

HEADER = "label,a0,a1,a2,a3,a4,a5,a6,a7\n"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestEstimate:
    def test_table_to_stdout(self, capsys):
        code = main(["estimate", "--input", str(COHORTS_CSV)])
        out = capsys.readouterr().out
        assert code == 0
        assert "AG1" in out and "0.227" in out
        assert "mean seroconversion: 0.955  0.884  0.847" in out

    def test_csv_output(self, tmp_path):
        out = tmp_path / "report.csv"
        code = main(["estimate", "--input", str(COHORTS_CSV),
                     "--output", str(out)])
        assert code == 0
        rows = read_csv(out)
        assert rows[0]["label"] == "AG1"
        assert rows[0]["v"] == "0.227"
        assert rows[0]["level"] == "fully_valid"
        assert rows[-1]["label"] == "mean_s"

    def test_precision_flag(self, capsys):
        code = main(["estimate", "--input", str(COHORTS_CSV), "--precision", "5"])
        out = capsys.readouterr().out
        assert code == 0
        assert "0.22712" in out  # AG1 coverage at 5 decimals

    def test_row_error_exit_code(self, tmp_csv, capsys):
        path = tmp_csv(HEADER
                       + "good,156,2,3,2,1,6,1,38\n"
                       + "flat,1,1,1,1,1,1,1,1\n")
        code = main(["estimate", "--input", str(path)])
        out = capsys.readouterr().out
        assert code == 2
        assert "degenerate-discriminant" in out

    def test_oracle_column(self, tmp_csv, capsys):
        path = tmp_csv(HEADER + "AG1,156,2,3,2,1,6,1,38\n")
        code = main(["estimate", "--input", str(path), "--oracle"])
        out = capsys.readouterr().out
        assert code == 0
        assert "fit_v" in out
        assert "0.227" in out

    def test_json_input(self, tmp_path, capsys):
        path = tmp_path / "d.json"
        path.write_text(
            '[{"label": "AG1", "counts": [156,2,3,2,1,6,1,38]}]'
        )
        code = main(["estimate", "--input", str(path), "--format", "json"])
        assert code == 0
        assert "0.227" in capsys.readouterr().out


class TestReconstruct:
    def test_closed_form_reproduces_counts(self, tmp_path):
        out = tmp_path / "rec.csv"
        code = main(["reconstruct", "--input", str(COHORTS_CSV),
                     "--precision", "6", "--output", str(out)])
        assert code == 0
        for row, (label, counts) in zip(read_csv(out), COHORTS.items()):
            assert row["label"] == label
            for k, want in enumerate(counts):
                assert float(row[f"a{k}"]) == pytest.approx(want, abs=1e-5)

    def test_external_params(self, tmp_path):
        out = tmp_path / "rec.csv"
        code = main(["reconstruct", "--input", str(COHORTS_CSV),
                     "--params", str(ALT_PARAMS_CSV), "--output", str(out)])
        assert code == 0
        for row, (label, cells) in zip(read_csv(out), ALT_EXPECTED.items()):
            for k, want in enumerate(cells):
                assert abs(float(row[f"a{k}"]) - want) <= 0.06

    def test_row_error_exit_code(self, tmp_csv):
        path = tmp_csv(HEADER + "flat,1,1,1,1,1,1,1,1\n")
        assert main(["reconstruct", "--input", str(path)]) == 2


class TestValidate:
    def test_levels_listed(self, capsys):
        code = main(["validate", "--input", str(COHORTS_CSV)])
        out = capsys.readouterr().out
        assert code == 0
        assert "fully_valid" in out and "coverage_only" in out
        assert "e3-range" in out

    def test_csv_output(self, tmp_path):
        out = tmp_path / "val.csv"
        assert main(["validate", "--input", str(COHORTS_CSV),
                     "--output", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0]["level"] == "fully_valid"
        assert rows[2]["strong_gate_1"] == "false"  # AG3


PARAMS_CSV = "label,v,e1,e2,e3,s1,s2,s3\nsim,0.8,0.3,0.2,0.1,0.9,0.95,0.85\n"


class TestSimulate:
    def test_writes_dataset_and_summary(self, tmp_csv, tmp_path, capsys):
        params = tmp_csv(PARAMS_CSV, name="params.csv")
        out = tmp_path / "sim.csv"
        code = main(["simulate", "--params", str(params), "--n", "2000",
                     "--replicates", "3", "--seed", "9", "--output", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "rep001" in stdout and "mean estimate" in stdout
        rows = read_csv(out)
        assert len(rows) == 3
        assert sum(int(rows[0][f"a{k}"]) for k in range(8)) == 2000

    def test_deterministic(self, tmp_csv, tmp_path, capsys):
        params = tmp_csv(PARAMS_CSV, name="params.csv")
        outputs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert main(["simulate", "--params", str(params), "--n", "500",
                         "--replicates", "1", "--seed", "4",
                         "--output", str(out)]) == 0
            outputs.append(out.read_text())
        assert outputs[0] == outputs[1]

    def test_out_of_range_params(self, tmp_csv, capsys):
        params = tmp_csv("label,v,e1,e2,e3,s1,s2,s3\nx,1.4,0,0,0,1,1,1\n",
                         name="params.csv")
        code = main(["simulate", "--params", str(params), "--n", "10"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_requires_single_row(self, capsys):
        code = main(["simulate", "--params", str(ALT_PARAMS_CSV), "--n", "10"])
        assert code == 1
        assert "exactly one" in capsys.readouterr().err


class TestFailureModes:
    def test_missing_file(self, capsys):
        assert main(["estimate", "--input", "/nonexistent.csv"]) == 1
        assert "error" in capsys.readouterr().err

    def test_schema_error(self, tmp_csv, capsys):
        path = tmp_csv(HEADER + "x,1,2\n")
        assert main(["estimate", "--input", str(path)]) == 1
        assert "columns" in capsys.readouterr().err

    def test_empty_dataset(self, tmp_csv, capsys):
        path = tmp_csv(HEADER)
        assert main(["estimate", "--input", str(path)]) == 1
        assert "empty" in capsys.readouterr().err


class TestConfigFile:
    def test_sets_defaults(self, tmp_csv, tmp_path, monkeypatch, capsys):
        config = tmp_path / "config"
        config.write_text("# defaults\nprecision=5\n")
        monkeypatch.setenv("VAXCOVER_CONFIG", str(config))
        assert main(["estimate", "--input", str(COHORTS_CSV)]) == 0
        assert "0.22712" in capsys.readouterr().out

    def test_flag_overrides_config(self, tmp_path, monkeypatch, capsys):
        config = tmp_path / "config"
        config.write_text("precision=5\n")
        monkeypatch.setenv("VAXCOVER_CONFIG", str(config))
        assert main(["estimate", "--input", str(COHORTS_CSV),
                     "--precision", "2"]) == 0
        out = capsys.readouterr().out
        assert "0.23" in out and "0.22712" not in out

    def test_format_from_config(self, tmp_path, monkeypatch, capsys):
        data = tmp_path / "d.json"
        data.write_text('[{"label": "AG1", "counts": [156,2,3,2,1,6,1,38]}]')
        config = tmp_path / "config"
        config.write_text("format=json\n")
        monkeypatch.setenv("VAXCOVER_CONFIG", str(config))
        assert main(["estimate", "--input", str(data)]) == 0
        assert "0.227" in capsys.readouterr().out

    def test_unknown_key_rejected(self, tmp_path, monkeypatch, capsys):
        config = tmp_path / "config"
        config.write_text("colour=blue\n")
        monkeypatch.setenv("VAXCOVER_CONFIG", str(config))
        assert main(["estimate", "--input", str(COHORTS_CSV)]) == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_oracle_from_config(self, tmp_csv, tmp_path, monkeypatch, capsys):
        data = tmp_csv(HEADER + "AG1,156,2,3,2,1,6,1,38\n")
        config = tmp_path / "config"
        config.write_text("oracle=true\n")
        monkeypatch.setenv("VAXCOVER_CONFIG", str(config))
        assert main(["estimate", "--input", str(data)]) == 0
        assert "fit_v" in capsys.readouterr().out
