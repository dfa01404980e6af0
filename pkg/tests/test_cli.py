"""Command-line interface: subcommands, artifacts, exit codes, error JSON."""

import csv
import json

import numpy as np
import pytest

from gqsp import LaurentPoly, eval_grid, random_unitary, unitary_to_json_dict
from gqsp.cli import main, run_bench


def write_poly(path, coeffs, min_degree=0):
    path.write_text(LaurentPoly(np.asarray(coeffs, dtype=complex), min_degree).to_json())
    return str(path)


@pytest.fixture
def target(tmp_path):
    rng = np.random.default_rng(0)
    c = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    from gqsp import sup_norm_sq

    c *= 0.9 / np.sqrt(sup_norm_sq(LaurentPoly(c)))
    return write_poly(tmp_path / "p.json", c)


class TestComplete:
    def test_writes_artifacts_and_report(self, tmp_path, target, capsys):
        out = tmp_path / "out"
        assert main(["complete", target, "--output-dir", str(out)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report) == {"final_objective", "iterations", "wall_time_s"}
        assert report["final_objective"] <= 1e-12
        q = LaurentPoly.from_json((out / "q.json").read_text())
        assert len(q.coeffs) == 5
        assert json.loads((out / "report.json").read_text()) == report

    def test_oracle_path(self, tmp_path, target, capsys):
        out = tmp_path / "out"
        assert main(["complete", target, "--oracle", "--output-dir", str(out)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["iterations"] == 0
        assert report["final_objective"] <= 1e-12

    def test_laurent_input_rejected(self, tmp_path, capsys):
        path = write_poly(tmp_path / "p.json", [0.5], min_degree=-1)
        assert main(["complete", path]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "invalid"

    def test_inadmissible_input(self, tmp_path, capsys):
        path = write_poly(tmp_path / "p.json", [1.5])
        assert main(["complete", path]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "inadmissible"
        assert err["stage"] == "complete"

    def test_nonconvergence_exits_3_without_artifacts(self, tmp_path, capsys):
        # |P| = 1 on the circle and one iteration: the optimizer cannot meet
        # tol, the CLI hard-fails, and no artifacts appear
        coeffs = np.zeros(5000)
        coeffs[0] = coeffs[-1] = 0.5
        path = write_poly(tmp_path / "p.json", coeffs)
        out = tmp_path / "out"
        code = main(["complete", path, "--max-iters", "1", "--restarts", "1",
                     "--tol", "1e-20", "--output-dir", str(out)])
        assert code == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "nonconvergence"
        assert not (out / "q.json").exists()


class TestAnglesAndPlan:
    def test_angles_then_plan(self, tmp_path, target, capsys):
        out = tmp_path / "out"
        main(["complete", target, "--output-dir", str(out)])
        capsys.readouterr()
        assert main(["angles", target, str(out / "q.json"),
                     "--output-dir", str(out)]) == 0
        ang = json.loads(capsys.readouterr().out)
        assert set(ang) == {"theta", "phi", "lambda"}
        assert len(ang["theta"]) == 5
        assert (out / "angles.json").exists()

        assert main(["plan", str(out / "angles.json"), "--output-dir", str(out)]) == 0
        plan = json.loads(capsys.readouterr().out)
        assert len(plan["gates"]) == 9
        assert (out / "circuit.json").exists()

    def test_angles_with_plan_shortcut(self, tmp_path, target, capsys):
        out = tmp_path / "out"
        main(["complete", target, "--output-dir", str(out)])
        capsys.readouterr()
        assert main(["angles", target, str(out / "q.json"), "--k-negative", "2",
                     "--output-dir", str(out)]) == 0
        plan = json.loads((out / "circuit.json").read_text())
        kinds = [g["kind"] for g in plan["gates"][1::2]]
        assert kinds == ["signal", "signal", "signal_dag", "signal_dag"]

    def test_invalid_pair_exits_3(self, tmp_path, target, capsys):
        bad = write_poly(tmp_path / "bad_q.json", [0.9, 0.1, 0.0, 0.0, 0.0])
        assert main(["angles", target, bad]) == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "cancellation"


class TestVerify:
    def build(self, tmp_path, target, capsys):
        out = tmp_path / "out"
        main(["pipeline", target, "--output-dir", str(out)])
        capsys.readouterr()
        return out

    def test_scalar_grid_passes(self, tmp_path, target, capsys):
        out = self.build(tmp_path, target, capsys)
        assert main(["verify", str(out / "circuit.json"), "--target", target,
                     "--unitary", "scalar-grid:64", "--output-dir", str(out)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["max_error"] <= 1e-9
        assert json.loads((out / "verify.json").read_text()) == result

    def test_matrix_unitary_passes(self, tmp_path, target, capsys):
        out = self.build(tmp_path, target, capsys)
        upath = tmp_path / "u.json"
        upath.write_text(json.dumps(unitary_to_json_dict(random_unitary(4, seed=3))))
        assert main(["verify", str(out / "circuit.json"), "--target", target,
                     "--unitary", str(upath)]) == 0

    def test_named_random_unitary(self, tmp_path, target, capsys):
        out = self.build(tmp_path, target, capsys)
        assert main(["verify", str(out / "circuit.json"), "--target", target,
                     "--unitary", "random:8:5"]) == 0

    def test_wrong_target_exits_4(self, tmp_path, target, capsys):
        out = self.build(tmp_path, target, capsys)
        wrong = write_poly(tmp_path / "wrong.json", [0.3, 0.3, 0.0, 0.0, 0.1])
        code = main(["verify", str(out / "circuit.json"), "--target", wrong,
                     "--unitary", "scalar-grid:32"])
        assert code == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "verification"
        assert err["stage"] == "verify"

    def test_bad_unitary_spec(self, tmp_path, target, capsys):
        out = self.build(tmp_path, target, capsys)
        assert main(["verify", str(out / "circuit.json"), "--target", target,
                     "--unitary", "random:4:5:6"]) == 2


class TestPipeline:
    def test_constant_target(self, tmp_path, capsys):
        path = write_poly(tmp_path / "p.json", [1.0])
        out = tmp_path / "out"
        assert main(["pipeline", path, "--output-dir", str(out)]) == 0
        assert json.loads(capsys.readouterr().out)["max_error"] <= 1e-12

    def test_average_pair_target(self, tmp_path, capsys):
        path = write_poly(tmp_path / "p.json", [0.5, 0.5])
        out = tmp_path / "out"
        assert main(["pipeline", path, "--output-dir", str(out),
                     "--accept-tol", "1e-10"]) == 0
        assert json.loads(capsys.readouterr().out)["max_error"] <= 1e-10

    def test_all_artifacts_written(self, tmp_path, target, capsys):
        out = tmp_path / "out"
        assert main(["pipeline", target, "--output-dir", str(out)]) == 0
        for name in ("q.json", "angles.json", "circuit.json", "verify.json"):
            assert (out / name).exists()

    def test_reruns_byte_identical(self, tmp_path, target, capsys):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["pipeline", target, "--output-dir", str(out1)]) == 0
        assert main(["pipeline", target, "--output-dir", str(out2)]) == 0
        for name in ("q.json", "angles.json", "circuit.json", "verify.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_parallel_restarts_identical_artifacts(self, tmp_path, target, capsys):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["pipeline", target, "--output-dir", str(out1)]) == 0
        assert main(["pipeline", target, "--parallel-restarts",
                     "--output-dir", str(out2)]) == 0
        assert (out1 / "q.json").read_bytes() == (out2 / "q.json").read_bytes()

    def test_laurent_target_auto_window(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        from gqsp import sup_norm_sq

        c *= 0.9 / np.sqrt(sup_norm_sq(LaurentPoly(c)))
        path = write_poly(tmp_path / "p.json", c, min_degree=-2)
        out = tmp_path / "out"
        assert main(["pipeline", path, "--output-dir", str(out)]) == 0
        plan = json.loads((out / "circuit.json").read_text())
        assert sum(g["kind"] == "signal_dag" for g in plan["gates"]) == 2

    def test_inadmissible_exits_2(self, tmp_path, capsys):
        path = write_poly(tmp_path / "p.json", [1.5])
        assert main(["pipeline", path, "--output-dir", str(tmp_path / "out")]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "inadmissible"

    def test_matrix_unitary_verification(self, tmp_path, target, capsys):
        out = tmp_path / "out"
        assert main(["pipeline", target, "--unitary", "random:8:2",
                     "--output-dir", str(out)]) == 0


class TestSynthCommands:
    def test_synth_diag(self, tmp_path, capsys):
        values = np.array([1.0, 0.0, 0.0, 1.0])
        path = write_poly(tmp_path / "f.json", np.fft.fft(values) / 4.0)
        out = tmp_path / "out"
        assert main(["synth-diag", str(path), "--n-qubits", "2",
                     "--output-dir", str(out)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["scale"] >= 1.0
        assert (out / "circuit.json").exists()
        assert json.loads((out / "scale.json").read_text())["scale"] == result["scale"]

    def test_synth_circulant(self, tmp_path, capsys):
        path = write_poly(tmp_path / "f.json", [0.5, 0.5])
        out = tmp_path / "out"
        assert main(["synth-circulant", str(path), "--n", "8",
                     "--output-dir", str(out)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["pre"] == "dft" and result["post"] == "idft"
        assert (out / "circulant.json").exists()

    def test_synth_circulant_bad_dimension(self, tmp_path, capsys):
        path = write_poly(tmp_path / "f.json", [1.0])
        assert main(["synth-circulant", str(path), "--n", "6"]) == 2


class TestGeneratorCommands:
    def test_jacobi_anger(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["jacobi-anger", "--t", "2.0", "--eps", "1e-8", "--kind", "cos",
                     "--output-dir", str(out)]) == 0
        poly = LaurentPoly.from_json_dict(json.loads(capsys.readouterr().out))
        assert poly.min_degree < 0
        ts = np.linspace(0, 2 * np.pi, 65)
        vals = eval_grid(poly, 1)  # smoke: grid eval accepts the window
        from gqsp import eval_unit_circle

        err = np.max(np.abs(eval_unit_circle(poly, ts) - np.exp(2j * np.cos(ts))))
        assert err <= 1e-8
        assert (out / "poly.json").exists()

    def test_fourier_fit(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["fourier-fit", "--m", "8", "--delta", "0.3",
                     "--function", "exp-arcsin:0.5", "--output-dir", str(out)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert set(result) == {"m", "delta", "max_residual", "coeffs"}
        assert result["coeffs"]["min_degree"] == -8
        assert (out / "fit.json").exists()

    def test_fourier_fit_unknown_function(self, capsys):
        assert main(["fourier-fit", "--m", "4", "--delta", "0.2",
                     "--function", "mystery"]) == 2


class TestBench:
    def test_csv_columns_and_plot(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["bench", "--degrees", "64,128", "--repeats", "2",
                     "--opt-iters", "5", "--output-dir", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["rows"] == 4
        assert "complex_over_real_eval_ratio" in summary
        with (out / "bench.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["degree", "kind", "objective_eval_ms", "full_opt_ms",
                           "iterations"]
        assert len(rows) == 5
        assert (out / "bench.png").stat().st_size > 0

    def test_no_plot_flag(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["bench", "--degrees", "64", "--kinds", "real", "--repeats", "1",
                     "--opt-iters", "0", "--no-plot", "--output-dir", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["rows"] == 1
        assert "complex_over_real_eval_ratio" not in summary
        assert not (out / "bench.png").exists()

    def test_unsorted_degrees_rejected(self):
        from gqsp.errors import InvalidInputError

        with pytest.raises(InvalidInputError):
            run_bench([128, 64], kinds=("real",), repeats=1, opt_iters=0)

    def test_unknown_kind_rejected(self, capsys):
        assert main(["bench", "--degrees", "64", "--kinds", "bogus",
                     "--repeats", "1", "--opt-iters", "0", "--no-plot"]) == 2


class TestErrorSurface:
    def test_missing_file(self, capsys):
        assert main(["complete", "/nonexistent/p.json"]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "invalid"
        assert err["stage"] == "load"
        assert "detail" in err

    def test_malformed_json_file(self, tmp_path, capsys):
        path = tmp_path / "p.json"
        path.write_text("{not json")
        assert main(["complete", str(path)]) == 2
        assert json.loads(capsys.readouterr().err)["error"] == "invalid"

    def test_every_error_is_json_on_stderr(self, tmp_path, capsys):
        cases = [
            ["complete", "/nonexistent.json"],
            ["angles", "/nonexistent.json", "/nonexistent.json"],
            ["plan", "/nonexistent.json"],
            ["verify", "/nonexistent.json", "--target", "/x.json",
             "--unitary", "scalar-grid:8"],
        ]
        for argv in cases:
            code = main(argv)
            assert code == 2
            err = json.loads(capsys.readouterr().err)
            assert set(err) == {"error", "stage", "detail"}
