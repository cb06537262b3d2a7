"""
Tests for the command line: outputs, exit codes and reproducibility
"""

import json
import math

import pytest

from hj_toolkit.main import attach_option_values

from test_helpers import column, parse_csv_output, print_test_header, print_test_result, run_cli

WS_POINT_EQUILIBRIUM = "q=1;p=0;s=0"


def field_values(out):
    _, columns, rows = parse_csv_output(out)
    assert columns == ["quantity", "value"]
    return {row[0]: row[1] for row in rows}


class TestField:
    def test_ws_equilibrium(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "field", "--system", "ws", "--point", WS_POINT_EQUILIBRIUM, "--format", "csv")
        assert code == 0
        values = field_values(out)
        assert values["dq1"] == 0.0
        assert values["dp1"] == 0.0
        assert values["ds"] == 1.0
        assert values["eta_pairing"] == 1.0

    def test_damped_oscillator(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "field", "--system", "damped", "--point", "q=1;p=1;s=0", "--format", "csv")
        assert code == 0
        values = field_values(out)
        assert values["dq1"] == 1.0
        assert values["dp1"] == pytest.approx(-1.1)
        assert values["ds"] == 0.0

    def test_bracket(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "field", "--system", "harmonic", "--point", "q=1;p=0", "--bracket", "p1",
                               "--format", "csv")
        assert code == 0
        # {H, p} = dH/dq = q
        assert field_values(out)["poisson_bracket"] == 1.0

    def test_default_table_output(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "field", "--system", "harmonic", "--point", "q=1;p=0")
        assert code == 0
        assert "quantity" in out and "dp1" in out

    @pytest.mark.parametrize("argv", [
        ["--point", "q=1;p="],
        ["--point", "p=1"],
        ["--point", "q=1;p=0", "--section", "q1^2 +"],
        ["--point", "q=1;p=0", "--bracket", "mystery*q1"],
        ["--point", "q=1;p=0", "--param", "k"],
    ])
    def test_usage_errors(self, clean_env, capsys, argv):
        code, _, err = run_cli(capsys, "field", "--system", "ws", *argv)
        assert code == 2
        assert "❌" in err

    def test_unknown_system_file(self, clean_env, capsys):
        code, _, _ = run_cli(capsys, "field", "--system", "nope.json", "--point", "q=1;p=0")
        assert code == 2

    def test_missing_required_flag(self, clean_env, capsys):
        code, _, _ = run_cli(capsys, "field", "--point", "q=1;p=0")
        assert code == 2

    def test_singular_point(self, clean_env, capsys):
        code, _, _ = run_cli(capsys, "field", "--system", "ws", "--point", "q=0;p=1;s=0")
        assert code == 3

    def test_time_dependent_symplectic(self, clean_env, capsys):
        code, _, err = run_cli(capsys, "field", "--system", "trig", "--structure", "symplectic",
                               "--point", "q=1;p=1;s=1")
        assert code == 4
        assert "❌" in err

    def test_system_file(self, clean_env, capsys):
        definition = {"n": 1, "structure": "contact", "hamiltonian": "0.5*p1^2 + 0.5*q1^2 + alpha*S",
                      "params": {"alpha": 0.1}}
        (clean_env / "damped.json").write_text(json.dumps(definition))
        code, out, _ = run_cli(capsys, "field", "--system", "damped.json", "--point", "q=1;p=1;s=0", "--format", "csv")
        assert code == 0
        assert field_values(out)["dp1"] == pytest.approx(-1.1)


class TestIntegrateCommands:
    def test_damped_energy_law(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "integrate", "--system", "damped", "--from", "q=1;p=1;s=0", "--t1", "10")
        print_test_header("Damped oscillator from the command line")
        assert code == 0
        _, columns, rows = parse_csv_output(out)
        taus = column(columns, rows, "tau")
        energies = column(columns, rows, "H")
        assert len(rows) == 1001
        h0 = energies[0]
        worst = max(abs(h - h0 * math.exp(-0.1 * t)) for t, h in zip(taus, energies)) / h0
        print_test_result(f"relative deviation {worst:.2e}", worst < 1e-6)
        assert worst < 1e-6

    def test_singularity_guard(self, clean_env, capsys):
        code, _, err = run_cli(capsys, "integrate", "--system", "ws", "--from", "q=1;p=-2;s=0",
                               "--q-min", "0.5", "--t1", "2")
        assert code == 3
        assert "❌" in err

    def test_step_budget(self, clean_env, capsys):
        code, _, _ = run_cli(capsys, "integrate", "--system", "harmonic", "--from", "q=1;p=0",
                             "--method", "rk4", "--step", "0.01", "--max-steps", "5")
        assert code == 3

    def test_rk4_reports_every_step(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "integrate", "--system", "free", "--from", "q=0;p=2",
                               "--method", "rk4", "--step", "0.25")
        assert code == 0
        _, columns, rows = parse_csv_output(out)
        assert column(columns, rows, "tau") == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert column(columns, rows, "q1")[-1] == pytest.approx(2.0)

    def test_json_output(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "integrate", "--system", "free", "--from", "q=0;p=1", "--samples", "11",
                               "--format", "json")
        assert code == 0
        document = json.loads(out)
        assert document["columns"] == ["tau", "q1", "p1", "s", "H", "defect"]
        assert len(document["rows"]) == 11
        assert document["header"]["manifest"]["command"] == "integrate"

    def test_characteristics_equilibrium(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "characteristics", "--system", "ws", "--from", "q=1;p=0;t=0", "--t1", "3")
        assert code == 0
        _, columns, rows = parse_csv_output(out)
        assert set(column(columns, rows, "q1")) == {1.0}


class TestCompare:
    def test_non_solution_fails_tolerance(self, clean_env, capsys):
        code, out, err = run_cli(capsys, "compare", "--system", "free", "--structure", "cosymplectic",
                                 "--section", "q1", "--from", "q=1;s=0")
        assert code == 5
        assert "max_point_deviation" in err
        assert any(line.startswith("# max_point_deviation") for line in parse_csv_output(out)[0])

    def test_classical_solution(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "compare", "--system", "harmonic", "--structure", "cosymplectic",
                               "--param", "E=2", "--section", "sqrt(2*E - q1^2)", "--from", "q=0;s=0")
        assert code == 0
        _, columns, rows = parse_csv_output(out)
        assert columns[-1] == "deviation"
        assert "q1_lifted" in columns and "q1_full" in columns

    def test_needs_section(self, clean_env, capsys):
        code, _, _ = run_cli(capsys, "compare", "--system", "harmonic", "--from", "q=0;s=0")
        assert code == 2


class TestHJResidual:
    GRID = "-0.9:0.9:7,0:1:3"

    def test_classical_solution(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "hj-residual", "--system", "ws", "--param", "k=0", "--param", "E=2",
                               "--section", "sqrt(2*E - q1^2)", "--grid", self.GRID, "--tol", "1e-10")
        assert code == 0
        _, columns, rows = parse_csv_output(out)
        assert columns == ["q1", "s", "residual1", "relatedness_defect", "closedness_defect"]
        assert len(rows) == 21
        assert max(abs(v) for v in column(columns, rows, "residual1")) < 1e-10

    def test_tolerance_failure(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "hj-residual", "--system", "ws", "--param", "k=0",
                               "--section", "q1", "--grid", self.GRID, "--tol", "1e-3")
        assert code == 5
        comments, _, _ = parse_csv_output(out)
        note = next(line for line in comments if line.startswith("# max_residual: "))
        # residual 2q at q = 0.9
        assert float(note.split(": ")[1]) == pytest.approx(1.8)

    def test_worker_count_does_not_change_output(self, clean_env, capsys):
        outputs = []
        for workers in ("1", "4"):
            code, _, _ = run_cli(capsys, "hj-residual", "--system", "damped", "--section", "q1*S + 1",
                                 "--grid", "-1:1:9,0:1:5", "--workers", workers, "--out", "grid.csv")
            assert code == 0
            outputs.append((clean_env / "grid.csv").read_bytes())
        print_test_header("Byte-identical output across worker counts")
        print_test_result("grid.csv identical for --workers 1 and 4", outputs[0] == outputs[1])
        assert outputs[0] == outputs[1]
        assert outputs[0].startswith(b"# hj-toolkit ")
        assert b"# seed: 20240" in outputs[0]

    @pytest.mark.parametrize("grid_args", [
        ["--grid", "-0.9:0.9:3,0:1:2"],
        ["--grid=-0.9:0.9:3,0:1:2"],
    ])
    def test_negative_lower_bound(self, clean_env, capsys, grid_args):
        code, out, _ = run_cli(capsys, "hj-residual", "--system", "ws", "--param", "k=0", "--param", "E=2",
                               "--section", "sqrt(2*E - q1^2)", *grid_args, "--tol", "1e-10")
        assert code == 0
        _, columns, rows = parse_csv_output(out)
        assert column(columns, rows, "q1") == [-0.9, -0.9, 0.0, 0.0, 0.9, 0.9]

    def test_negative_section_expression(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "hj-residual", "--system", "free", "--structure", "cosymplectic",
                               "--section", "-q1", "--grid", "-1:1:3,0:0:1")
        assert code == 0
        _, columns, rows = parse_csv_output(out)
        # free particle: residual = gamma dgamma/dq = q
        assert column(columns, rows, "residual1") == pytest.approx([-1.0, 0.0, 1.0])


def test_option_values_starting_with_minus():
    assert attach_option_values(["--grid", "-1:1:3,0:1:2", "--tol", "1e-3"]) == \
        ["--grid=-1:1:3,0:1:2", "--tol", "1e-3"]
    assert attach_option_values(["--section", "-q1", "--section", "q1"]) == ["--section=-q1", "--section", "q1"]
    # a following flag is not taken as the value
    assert attach_option_values(["--grid", "--tol", "1"]) == ["--grid", "--tol", "1"]
    assert attach_option_values(["--t0", "-1"]) == ["--t0", "-1"]


class TestPinney:
    def test_equilibrium(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "pinney", "--k", "1", "--omega", "1", "--form", "classical",
                               "--A", "1", "--B", "0", "--C", "1", "--t1", "10")
        assert code == 0
        comments, columns, rows = parse_csv_output(out)
        assert columns == ["t", "q", "gamma", "residual"]
        assert max(abs(q - 1.0) for q in column(columns, rows, "q")) < 1e-9
        assert any(line.startswith("# wronskian") for line in comments)


class TestRunSetup:
    def test_version(self, capsys):
        code, out, _ = run_cli(capsys, "--version")
        assert code == 0
        assert out.startswith("hj-toolkit ")

    def test_init(self, clean_env, capsys):
        code, _, _ = run_cli(capsys, "init", "--dir", "samples")
        assert code == 0
        for name in ("hj_toolkit.toml", ".env.sample", "system.sample.json"):
            assert (clean_env / "samples" / name).exists()

    def test_missing_config_creates_sample(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "field", "--system", "ws", "--point", WS_POINT_EQUILIBRIUM,
                               "--config", "fresh.toml")
        assert code == 0
        assert out == ""
        assert (clean_env / "fresh.toml").exists()

    def test_config_file_applies(self, clean_env, capsys):
        (clean_env / "run.toml").write_text('[integrator]\nsamples = 21\n\n[run]\nseed = 5\n')
        code, out, _ = run_cli(capsys, "integrate", "--system", "free", "--from", "q=0;p=1", "--config", "run.toml")
        assert code == 0
        comments, _, rows = parse_csv_output(out)
        assert len(rows) == 21
        assert "# seed: 5" in comments

    def test_seed_flag_beats_config(self, clean_env, capsys):
        (clean_env / "run.toml").write_text('[run]\nseed = 5\n')
        _, out, _ = run_cli(capsys, "integrate", "--system", "free", "--from", "q=0;p=1", "--samples", "3",
                            "--config", "run.toml", "--seed", "8")
        assert "# seed: 8" in parse_csv_output(out)[0]

    def test_log_dir_keeps_manifest(self, clean_env, capsys):
        code, _, _ = run_cli(capsys, "integrate", "--system", "free", "--from", "q=0;p=1", "--samples", "5",
                             "--log-dir", "logs")
        assert code == 0
        runs = list((clean_env / "logs").iterdir())
        assert len(runs) == 1
        manifest = json.loads((runs[0] / "manifest.json").read_text())
        assert manifest["command"] == "integrate"
        assert manifest["integrator"]["samples"] == 5
        assert (runs[0] / "output.log").exists()

    @pytest.mark.slow
    def test_check_suite(self, clean_env, capsys):
        code, out, _ = run_cli(capsys, "check", "--points", "20", "--workers", "2")
        assert code == 0
        assert "FAIL" not in out
