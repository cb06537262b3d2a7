"""
Tests for settings layering, file loaders, run manifests and table writers
"""

import io
import json
import math

import numpy as np
import pytest
import tomli_w

from hj_toolkit import __version__
from hj_toolkit.core.errors import ConfigError
from hj_toolkit.core.systems import system_from_dict
from hj_toolkit.models.geometry import ExtendedPoint, StructureKind
from hj_toolkit.models.trajectory import IntegratorConfig, Trajectory
from hj_toolkit.utils.config import (DEFAULT_SEED, ENV_SEED, ENV_WORKERS, build_settings, create_sample_config,
                                     create_sample_system, load_config_file, load_env_vars, load_system_definition)
from hj_toolkit.utils.export import format_float, write_csv, write_json, write_table
from hj_toolkit.utils.run_context import RunContext, RunManifest

from test_helpers import parse_csv_output, print_test_header


def write_toml(path, data):
    with open(path, "wb") as f:
        tomli_w.dump(data, f)
    return str(path)


class TestIntegratorConfig:
    def test_defaults(self):
        cfg = IntegratorConfig()
        assert cfg.method == "rk45-adaptive" and cfg.adaptive
        assert cfg.samples == 1001
        assert cfg.rtol == 1e-9 and cfg.atol == 1e-12

    @pytest.mark.parametrize("alias,method", [("rk4", "rk4-fixed"), ("RK4-Fixed", "rk4-fixed"), ("rk45", "rk45-adaptive")])
    def test_method_aliases(self, alias, method):
        assert IntegratorConfig(method=alias).method == method

    @pytest.mark.parametrize("bad", [
        {"method": "euler"}, {"step": 0.0}, {"rtol": -1.0}, {"max_steps": 0}, {"samples": 1}, {"q_min": -0.1},
    ])
    def test_rejects_invalid_values(self, bad):
        with pytest.raises(ValueError):
            IntegratorConfig(**bad)

    def test_from_dict_ignores_unknown_keys(self):
        cfg = IntegratorConfig.from_dict({"method": "rk4", "step": 0.5, "colour": "blue"})
        assert cfg.method == "rk4-fixed" and cfg.step == 0.5
        assert IntegratorConfig.from_dict(None) == IntegratorConfig()


class TestSettings:
    def test_builtin_defaults(self, clean_env):
        settings = build_settings(env={})
        assert settings.seed == DEFAULT_SEED
        assert settings.workers == 1
        assert settings.integrator == IntegratorConfig()

    def test_layering(self, clean_env, tmp_path):
        print_test_header("Settings layering")
        path = write_toml(tmp_path / "run.toml", {"integrator": {"rtol": 1e-6}, "run": {"seed": 9}})
        settings = build_settings({"workers": 3, "seed": None, "step": 0.5}, path, env={"seed": 5, "workers": 2})
        assert settings.seed == 9
        assert settings.workers == 3
        assert settings.integrator.rtol == 1e-6
        assert settings.integrator.step == 0.5
        assert settings.config_path == path

    def test_config_from_environment(self, clean_env, tmp_path):
        path = write_toml(tmp_path / "env.toml", {"run": {"workers": 2}})
        assert build_settings(env={"config": path}).workers == 2

    def test_missing_config(self, clean_env, tmp_path):
        with pytest.raises(ConfigError) as info:
            build_settings(config_path=str(tmp_path / "nope.toml"), env={})
        assert info.value.path.endswith("nope.toml")
        assert load_config_file(str(tmp_path / "nope.toml")) is None

    def test_malformed_toml(self, clean_env, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[integrator\nrtol = ")
        with pytest.raises(ConfigError):
            build_settings(config_path=str(path), env={})

    @pytest.mark.parametrize("flags", [{"workers": 0}, {"samples": 1}, {"method": "euler"}])
    def test_invalid_values(self, clean_env, flags):
        with pytest.raises(ConfigError):
            build_settings(flags, env={})

    def test_environment_variables(self, clean_env, monkeypatch, capsys):
        monkeypatch.setenv(ENV_SEED, "7")
        monkeypatch.setenv(ENV_WORKERS, "many")
        found = load_env_vars()
        assert found == {"seed": 7}
        assert ENV_WORKERS in capsys.readouterr().err


class TestDefinitionFiles:
    def test_json_and_toml(self, tmp_path):
        data = {"n": 1, "structure": "contact", "hamiltonian": "p1^2/2 + alpha*S", "params": {"alpha": 0.2}}
        (tmp_path / "d.json").write_text(json.dumps(data))
        write_toml(tmp_path / "d.toml", data)
        assert load_system_definition(str(tmp_path / "d.json")) == load_system_definition(str(tmp_path / "d.toml"))

    def test_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_system_definition(str(tmp_path / "absent.json"))

    @pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
    def test_malformed(self, tmp_path, content):
        (tmp_path / "bad.json").write_text(content)
        with pytest.raises(ConfigError):
            load_system_definition(str(tmp_path / "bad.json"))

    def test_missing_keys(self):
        with pytest.raises(ConfigError):
            system_from_dict({"n": 1, "hamiltonian": "p1"})

    def test_samples(self, tmp_path):
        config_path = create_sample_config(directory=str(tmp_path / "init"))
        system_path = create_sample_system(directory=str(tmp_path / "init"))
        settings = build_settings(config_path=config_path, env={})
        assert settings.integrator == IntegratorConfig()
        assert (tmp_path / "init" / ".env.sample").exists()
        system = system_from_dict(load_system_definition(system_path), source=system_path)
        assert system.structure is StructureKind.COSYMPLECTIC
        assert system.hamiltonian.q_singular
        assert system.section is not None
        assert system.hamiltonian([1.0, 1.0, 0.0]) == 1.5


class TestManifest:
    def test_header_lines(self):
        manifest = RunManifest("integrate", system="ws", parameters={"b": 2, "a": 1}, seed=11)
        lines = manifest.header_lines()
        assert lines[0] == f"# hj-toolkit {__version__}"
        assert lines[1] == "# seed: 11"
        assert lines[2].startswith('# manifest: {"command":"integrate"')
        assert '"parameters":{"a":1,"b":2}' in lines[2]

    def test_equal_manifests_print_equally(self):
        first = RunManifest("field", parameters={"x": 1, "y": 2})
        second = RunManifest("field", parameters={"y": 2, "x": 1})
        assert first.to_json() == second.to_json()

    def test_run_context(self, tmp_path):
        context = RunContext(str(tmp_path / "logs"))
        try:
            path = context.save_manifest(RunManifest("check", seed=3))
        finally:
            context.cleanup()
        assert json.loads(path.read_text())["seed"] == 3
        assert context.log_file.exists()


class TestExport:
    def test_float_round_trip_digits(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(2) == "2"
        assert float(format_float(math.pi)) == math.pi

    def test_csv(self):
        stream = io.StringIO()
        write_csv(stream, ["t", "q"], [[0.0, 1.5], [0.5, -2.0]], RunManifest("x", seed=4), {"max_residual": 0.25})
        comments, columns, rows = parse_csv_output(stream.getvalue())
        assert columns == ["t", "q"]
        assert rows == [[0.0, 1.5], [0.5, -2.0]]
        assert "# seed: 4" in comments
        assert "# max_residual: 0.25" in comments

    def test_json(self):
        stream = io.StringIO()
        write_json(stream, ["t"], [[1.0]], RunManifest("x", seed=4), {"note": "ok"})
        document = json.loads(stream.getvalue())
        assert document["header"]["version"] == __version__
        assert document["header"]["seed"] == 4
        assert document["header"]["note"] == "ok"
        assert document["rows"] == [[1.0]]

    def test_table(self):
        stream = io.StringIO()
        write_table(stream, "table", ["name", "value"], [["a", 1.0]], RunManifest("x"))
        assert "name" in stream.getvalue() and "# hj-toolkit" in stream.getvalue()

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            write_table(io.StringIO(), "xml", ["t"], [], RunManifest("x"))


class TestModels:
    def test_extended_point(self):
        point = ExtendedPoint.from_array([1.0, 2.0, 3.0, 4.0, 5.0])
        assert point.n == 2 and point.s == 5.0
        assert point.coordinates() == {"q1": 1.0, "q2": 2.0, "p1": 3.0, "p2": 4.0, "s": 5.0}

    @pytest.mark.parametrize("build", [
        lambda: ExtendedPoint((1.0,), (1.0, 2.0)),
        lambda: ExtendedPoint((), ()),
        lambda: ExtendedPoint((math.nan,), (0.0,)),
        lambda: ExtendedPoint.from_array([1.0, 2.0]),
    ])
    def test_extended_point_validation(self, build):
        with pytest.raises(ValueError):
            build()

    def test_structure_parse(self):
        assert StructureKind.parse(" Contact ") is StructureKind.CONTACT
        with pytest.raises(ValueError):
            StructureKind.parse("kaehler")

    def test_trajectory_validation(self):
        taus = np.array([0.0, 1.0])
        good = np.zeros((2, 3))
        trajectory = Trajectory(1, StructureKind.SYMPLECTIC, taus, good, np.zeros(2))
        assert trajectory.columns() == ["tau", "q1", "p1", "s", "H", "defect"]
        assert trajectory.rows()[1] == [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        with pytest.raises(ValueError):
            Trajectory(1, StructureKind.SYMPLECTIC, taus, np.zeros((2, 5)), np.zeros(2))
        with pytest.raises(ValueError):
            Trajectory(1, StructureKind.SYMPLECTIC, np.array([1.0, 0.0]), good, np.zeros(2))
        with pytest.raises(ValueError):
            Trajectory(1, StructureKind.SYMPLECTIC, taus, np.full((2, 3), np.nan), np.zeros(2))
