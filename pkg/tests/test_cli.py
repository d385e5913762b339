import csv
import io
import json
import math

import pytest

from aoicut.cli import RunConfig, load_config, main, read_config_text
from aoicut.cutoff import policy_names
from aoicut.exceptions import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, list(csv.DictReader(io.StringIO(captured.out))), captured.err


class TestSolve:

    def test_exponential_small_cutoff(self, capsys):
        code, rows, _ = run(capsys, "solve", "--dist", "exp:rate=1", "--gamma", "0.01")
        assert code == 0
        assert 1.0 < float(rows[0]["lambda_star"]) <= 1.01
        assert rows[0]["zero_wait"] == "false"
        assert int(rows[0]["iterations"]) > 0
        assert rows[0]["bracket_lo"] and rows[0]["bracket_hi"]

    def test_shifted_zero_wait(self, capsys):
        code, rows, _ = run(capsys, "solve", "--dist", "sexp:rate=1,c=1.5", "--gamma", "3")
        assert code == 0
        assert rows[0]["zero_wait"] == "true"
        assert rows[0]["bracket_lo"] == ""

    def test_deterministic(self, capsys):
        code, rows, _ = run(capsys, "solve", "--dist", "det:c=1", "--gamma", "2")
        assert float(rows[0]["lambda_star"]) == pytest.approx(1.5)

    def test_json(self, capsys):
        assert main(["solve", "--dist", "exp:rate=1", "--format", "json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data[0]["gamma"] == "inf"
        assert 1.0 < data[0]["lambda_star"] < 2.0

    @pytest.mark.parametrize("argv", [
        ["solve", "--dist", "gauss:mu=1"],
        ["solve", "--dist", "exp:rate=1", "--gamma", "wide"],
        ["solve", "--dist", "sexp:rate=1,c=1", "--gamma", "0.5"],
        ["solve", "--gamma", "1"],
    ])
    def test_config_errors(self, capsys, argv):
        code, rows, err = run(capsys, *argv)
        assert code == 2
        assert rows == []
        assert err.startswith("aoicut: error:")

    def test_numeric_error(self, capsys):
        code, _, err = run(capsys, "solve", "--dist", "exp:rate=1", "--gamma", "1e-14")
        assert code == 3
        assert "preempted" in err

    def test_missing_command(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2


class TestSweep:

    def test_best_row(self, capsys):
        code, rows, _ = run(capsys, "sweep", "--dist", "sexp:rate=1,c=0.5", "--grid-points", "25")
        assert code == 0
        assert [row["row"] for row in rows] == ["grid"] * 25 + ["best"]
        best = float(rows[-1]["lambda_star"])
        assert best <= min(float(row["lambda_star"]) for row in rows[:-1])

    def test_c_values(self, capsys):
        code, rows, _ = run(capsys, "sweep", "--c-values", "0.5,1.5", "--grid-points", "20")
        assert code == 0
        assert rows[0]["gamma_bar"] != ""
        assert rows[1]["gamma_bar"] == ""
        assert rows[1]["zero_wait"] == "true"


class TestCompare:

    def test_four_policies(self, capsys):
        code, rows, _ = run(capsys, "compare", "--dist", "exp:rate=1", "--grid-points", "20")
        assert code == 0
        assert [row["policy"] for row in rows] == policy_names
        values = [float(row["avg_aoi"]) for row in rows]
        assert values[0] == pytest.approx(2.0)
        assert values[3] == min(values)

    def test_crossover(self, capsys):
        code, rows, _ = run(capsys, "compare", "--c-values", "0.1,1.0", "--grid-points", "40")
        assert code == 0
        assert [row["winner"] for row in rows] == ["cutoff", "cutoff"]


class TestSimulate:

    def test_check(self, capsys):
        code, rows, _ = run(capsys, "simulate", "--dist", "exp:rate=1", "--gamma", "1", "--theta", "auto",
                            "--epochs", "100000", "--seed", "7", "--check")
        assert code == 0
        row = rows[0]
        assert row["seed"] == "7"
        assert float(row["analytic"]) == pytest.approx(float(row["avg_aoi"]), rel=0.02)
        assert float(row["gap_stderr"]) >= 0

    def test_zero_theta(self, capsys):
        code, rows, _ = run(capsys, "simulate", "--dist", "sexp:rate=1,c=0.5", "--gamma", "2", "--theta", "zero",
                            "--epochs", "5000")
        assert code == 0
        assert float(rows[0]["theta"]) == 0.5

    def test_same_seed_same_file(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            assert main(["simulate", "--dist", "exp:rate=1", "--gamma", "1", "--epochs", "5000", "--seed", "7",
                         "--output", str(path)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_trajectory(self, tmp_path, capsys):
        path = tmp_path / "out.csv"
        code = main(["simulate", "--dist", "exp:rate=1", "--gamma", "1", "--theta", "zero", "--epochs", "10",
                     "--trajectory", str(path)])
        assert code == 0
        assert capsys.readouterr().out == ""
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,age"
        assert len(lines) >= 1 + 1 + 2 * 10

    def test_bad_theta(self, capsys):
        code, _, _ = run(capsys, "simulate", "--dist", "exp:rate=1", "--gamma", "1", "--theta", "2")
        assert code == 2

    def test_seed_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("AOI_SEED", "42")
        code, rows, _ = run(capsys, "simulate", "--dist", "exp:rate=1", "--gamma", "1", "--epochs", "2000")
        assert code == 0
        assert rows[0]["seed"] == "42"


class TestRunConfig:

    def test_round_trip(self):
        config = RunConfig("simulate", dist="sexp:rate=1,c=0.5", gamma="2.5", theta="zero", epochs="5000",
                           c_values="0.1,0.30000000000000004", check="yes")
        assert RunConfig.from_text(config.to_text()) == config

    def test_round_trip_defaults(self):
        config = RunConfig("solve", dist="exp:rate=1")
        assert config.gamma == math.inf
        assert RunConfig.from_text(config.to_text()) == config

    def test_invalid_token_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig("solve", dist="exp:rate=0")

    @pytest.mark.parametrize("values", [{"format": "xml"}, {"epochs": "0"}, {"theta": "later"}, {"bogus": "1"}])
    def test_invalid_values(self, values):
        with pytest.raises(ConfigError):
            RunConfig("simulate", dist="exp:rate=1", **values)

    def test_config_file_precedence(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# simulation\ndist=exp:rate=1\nseed=3\ngrid-points=30\n", encoding="utf-8")
        environ = {"AOI_SEED": "9"}
        assert load_config("simulate", {}, str(path), environ).seed == 3
        assert load_config("simulate", {"seed": "5"}, str(path), environ).seed == 5
        assert load_config("simulate", {"dist": "exp:rate=1"}, None, environ).seed == 9
        assert load_config("sweep", {}, str(path), {}).grid_points == 30

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config("solve", {"dist": "exp:rate=1"}, str(tmp_path / "missing.cfg"), {})

    @pytest.mark.parametrize("argv", [
        ["simulate", "--dist", "exp:rate=1", "--seed", ""],
        ["simulate", "--dist", "exp:rate=1", "--epochs", " "],
        ["solve", "--dist", ""],
    ])
    def test_blank_flag(self, capsys, argv):
        code, rows, err = run(capsys, *argv)
        assert code == 2
        assert rows == []
        assert "blank value" in err

    def test_blank_config_value(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("dist=exp:rate=1\nepochs=\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config("simulate", {}, str(path), {})
        code, _, err = run(capsys, "simulate", "--config", str(path))
        assert code == 2
        assert "blank value" in err

    @pytest.mark.parametrize("text", ["gamma", "gamma=1\ngamma=2", "colour=blue"])
    def test_bad_config_text(self, text):
        with pytest.raises(ConfigError):
            read_config_text(text)
