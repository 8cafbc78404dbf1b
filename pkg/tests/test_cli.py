import subprocess
import sys

import numpy as np
import pytest

from cdeforest.cli import main, parse_bandwidth, parse_grid_spec, read_csv
from cdeforest.density import grid_integral
from cdeforest.forest import load


def run(argv, capsys=None):
    return main([str(a) for a in argv])


def simulate(tmp_path, name="train.csv", n=200, seed=1, model="univariate"):
    out = tmp_path / name
    assert run(["simulate", "--model", model, "--n", n, "--seed", seed, "--out", out]) == 0
    return out


def train(tmp_path, data, name="model.json", extra=()):
    out = tmp_path / name
    code = run(["train", "--data", data, "--ntrees", 10, "--mtry", 4,
                "--node-size", 5, "--n-basis", 8, "--seed", 3, "--out", out, *extra])
    assert code == 0
    return out


class TestSimulate:
    def test_univariate_shape(self, tmp_path):
        path = simulate(tmp_path, n=5, seed=7)
        header, data = read_csv(path)
        assert header == [f"x{i}" for i in range(1, 11)] + \
            [f"y{i}" for i in range(1, 11)] + ["z"]
        assert data.shape == (5, 21)

    def test_deterministic_bytes(self, tmp_path):
        a = simulate(tmp_path, "a.csv", n=50, seed=9)
        b = simulate(tmp_path, "b.csv", n=50, seed=9)
        assert a.read_bytes() == b.read_bytes()

    def test_joint_rows_ordered(self, tmp_path):
        path = simulate(tmp_path, "joint.csv", n=400, seed=2, model="joint")
        header, data = read_csv(path)
        assert header == ["x", "z1", "z2"]
        x, z1, z2 = data[:, 0], data[:, 1], data[:, 2]
        assert np.all(z1 <= z2) and np.all(z2 <= x)

    def test_unwritable_path_is_exit_2(self, tmp_path, capsys):
        code = run(["simulate", "--model", "univariate", "--n", 5,
                    "--out", tmp_path / "no_such_dir" / "x.csv"])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def test_model_trains_and_predicts(self, tmp_path):
        data = simulate(tmp_path)
        model = train(tmp_path, data)
        forest = load(model)
        assert forest.n_features == 20
        assert forest.params.n_trees == 10
        pred = tmp_path / "pred.csv"
        assert run(["predict", "--model", model, "--data", data,
                    "--grid=-12:12:200", "--bandwidth", "0.2", "--out", pred]) == 0

    def test_seeded_training_is_byte_identical(self, tmp_path):
        data = simulate(tmp_path)
        m1 = train(tmp_path, data, "m1.json")
        m2 = train(tmp_path, data, "m2.json")
        assert m1.read_bytes() == m2.read_bytes()

    def test_mse_with_two_responses_is_exit_4(self, tmp_path, capsys):
        data = simulate(tmp_path, "joint.csv", model="joint", n=100)
        code = run(["train", "--data", data, "--criterion", "mse",
                    "--out", tmp_path / "m.json"])
        assert code == 4
        assert "univariate" in capsys.readouterr().err

    def test_constant_response_is_exit_3(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,z\n" + "".join(f"{i}.0,5.0\n" for i in range(30)))
        assert run(["train", "--data", bad, "--out", tmp_path / "m.json"]) == 3

    def test_malformed_csv_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,z\n1.0,2.0\n1.0\n")
        assert run(["train", "--data", bad, "--out", tmp_path / "m.json"]) == 2
        assert ":3:" in capsys.readouterr().err

    def test_non_numeric_cell_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,z\n1.0,2.0\noops,3.0\n")
        assert run(["train", "--data", bad, "--out", tmp_path / "m.json"]) == 2
        assert ":3:" in capsys.readouterr().err

    def test_missing_response_column_is_exit_2(self, tmp_path):
        data = simulate(tmp_path)
        assert run(["train", "--data", data, "--response-cols", "nope",
                    "--out", tmp_path / "m.json"]) == 2


class TestPredict:
    def test_row_count_and_normalization(self, tmp_path):
        data = simulate(tmp_path)
        model = train(tmp_path, data)
        queries = tmp_path / "q.csv"
        header, rows = read_csv(data)
        queries.write_text(
            ",".join(header) + "\n" + ",".join(repr(float(v)) for v in rows[0]) + "\n"
        )
        pred = tmp_path / "pred.csv"
        assert run(["predict", "--model", model, "--data", queries,
                    "--grid=-14:14:500", "--bandwidth", "0.2", "--out", pred]) == 0
        pheader, pdata = read_csv(pred)
        assert pheader == ["query_index", "z", "density"]
        assert pdata.shape == (500, 3)
        assert np.all(pdata[:, 2] >= 0)
        integral = grid_integral(pdata[:, 2], pdata[:, 1][:, None])
        assert 0.99 <= integral <= 1.01

    def test_adaptive_bandwidth_accepted(self, tmp_path):
        data = simulate(tmp_path)
        model = train(tmp_path, data)
        pred = tmp_path / "pred.csv"
        assert run(["predict", "--model", model, "--data", data,
                    "--grid=-14:14:100", "--bandwidth", "adaptive", "--out", pred]) == 0

    def test_covariate_count_mismatch_is_exit_2(self, tmp_path, capsys):
        data = simulate(tmp_path)
        model = train(tmp_path, data)
        queries = tmp_path / "q.csv"
        queries.write_text("x1,x2\n0.1,0.2\n")
        assert run(["predict", "--model", model, "--data", queries,
                    "--grid=-12:12:50", "--bandwidth", "0.2",
                    "--out", tmp_path / "p.csv"]) == 2
        assert "covariates" in capsys.readouterr().err

    def test_grid_dim_must_match_model(self, tmp_path):
        data = simulate(tmp_path)
        model = train(tmp_path, data)
        assert run(["predict", "--model", model, "--data", data,
                    "--grid=-12:12:50", "--grid=0:1:50",
                    "--bandwidth", "0.2", "--out", tmp_path / "p.csv"]) == 2


class TestEvaluate:
    def test_self_evaluation_is_negative(self, tmp_path, capsys):
        data = simulate(tmp_path, n=300)
        model = train(tmp_path, data)
        code = run(["evaluate", "--model", model, "--data", data,
                    "--grid=-14:14:400", "--bandwidth", "0.2"])
        assert code == 0
        out = capsys.readouterr().out
        fields = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert float(fields["loss"]) < 0
        assert fields["n_test"] == "300"
        assert float(fields["loss"]) == pytest.approx(
            float(fields["term_sq"]) - 2 * float(fields["term_lik"]), abs=1e-12
        )

    def test_reference_uniform_closed_form(self, tmp_path, capsys):
        data = simulate(tmp_path, n=100, seed=13)
        code = run(["evaluate", "--data", data, "--grid=-12:12:100",
                    "--reference-uniform"])
        assert code == 0
        fields = dict(
            line.split("=", 1) for line in capsys.readouterr().out.strip().splitlines()
        )
        # f == 1/24 on the hull: term_sq = 1/24, term_lik = inside_fraction / 24
        assert float(fields["term_sq"]) == pytest.approx(1 / 24.0, rel=1e-9)
        inside = 1.0 - int(fields["outside_hull"]) / 100.0
        assert float(fields["term_lik"]) == pytest.approx(inside / 24.0, rel=1e-9)
        assert float(fields["loss"]) == pytest.approx(
            1 / 24.0 - 2 * inside / 24.0, rel=1e-9
        )

    def test_report_csv(self, tmp_path):
        data = simulate(tmp_path, n=120)
        model = train(tmp_path, data)
        out = tmp_path / "report.csv"
        assert run(["evaluate", "--model", model, "--data", data,
                    "--grid=-14:14:200", "--bandwidth", "0.2", "--out", out]) == 0
        header, rows = read_csv(out)
        assert header[:2] == ["loss", "se"]
        assert rows.shape == (1, 6)


class TestWeightsCommand:
    def test_weight_rows_sum_to_one(self, tmp_path):
        data = simulate(tmp_path, n=80)
        model = train(tmp_path, data)
        out = tmp_path / "weights.csv"
        assert run(["weights", "--model", model, "--data", data, "--out", out]) == 0
        header, rows = read_csv(out)
        assert header == ["query_index", "train_index", "weight"]
        assert rows.shape == (80 * 80, 3)
        for q in range(0, 80, 17):
            w = rows[rows[:, 0] == q, 2]
            assert w.sum() == pytest.approx(1.0, abs=1e-10)
            assert np.all(w >= 0)


class TestParsers:
    def test_grid_spec(self):
        spec = parse_grid_spec("-12:12:1000")
        assert (spec.min, spec.max, spec.steps) == (-12.0, 12.0, 1000)
        with pytest.raises(ValueError, match="MIN:MAX:STEPS"):
            parse_grid_spec("0:1")
        with pytest.raises(ValueError, match="steps"):
            parse_grid_spec("0:1:1")
        with pytest.raises(ValueError, match="max"):
            parse_grid_spec("1:0:10")

    def test_bandwidth(self):
        assert parse_bandwidth("adaptive").mode == "adaptive"
        assert parse_bandwidth("0.2").value == 0.2
        assert parse_bandwidth("0.2,0.3").value == [0.2, 0.3]
        with pytest.raises(ValueError):
            parse_bandwidth("-1.0")

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "cdeforest" in capsys.readouterr().out


class TestSubprocessEntry:
    def test_module_invocation(self, tmp_path):
        out = tmp_path / "sim.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "cdeforest", "simulate", "--model", "univariate",
             "--n", "5", "--seed", "1", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.exists()

    def test_train_emits_wall_time_on_stderr(self, tmp_path):
        data = simulate(tmp_path, n=60)
        proc = subprocess.run(
            [sys.executable, "-m", "cdeforest", "train", "--data", str(data),
             "--ntrees", "3", "--out", str(tmp_path / "m.json")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "train_time_seconds=" in proc.stderr
