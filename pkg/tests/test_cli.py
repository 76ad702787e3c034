import json
import subprocess
import sys

import pytest

from orbent.cli import (
    PRESETS,
    ConfigError,
    compare_bundles,
    load_config,
    main,
    parse_config,
    run_experiment,
)


def rotation_config(output_dir, metric=None):
    return {
        "system": {"kind": "CircleRotation", "alpha": (5 ** 0.5 - 1) / 2},
        "metric": metric or {"type": "CircleArc"},
        "eps_grid": [0.25, 0.1],
        "n_schedule": [2, 4, 8, 16],
        "m": 64,
        "seeds": [1, 2, 3],
        "method": "Covering",
        "output_dir": str(output_dir),
    }


def bernoulli_config(output_dir):
    return {
        "system": {"kind": "BernoulliShift", "weights": [0.5, 0.5]},
        "metric": {"type": "FirstSymbolCut"},
        "eps_grid": [0.25, 0.1],
        "n_schedule": [2, 4, 8, 16],
        "m": 256,
        "seeds": [101, 202, 303],
        "method": "Covering",
        "output_dir": str(output_dir),
    }


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "orbent.cli", *args],
        capture_output=True, text=True,
    )


class TestConfigParsing:
    def test_roundtrip(self, tmp_path):
        config = parse_config(rotation_config(tmp_path))
        assert parse_config(config.to_json()) == config

    def test_missing_field_named(self, tmp_path):
        raw = rotation_config(tmp_path)
        del raw["eps_grid"]
        with pytest.raises(ConfigError) as err:
            parse_config(raw)
        assert err.value.field == "eps_grid"

    def test_bad_schedule_named(self, tmp_path):
        raw = rotation_config(tmp_path)
        raw["n_schedule"] = [8, 4]
        with pytest.raises(ConfigError) as err:
            parse_config(raw)
        assert err.value.field == "n_schedule"

    def test_bad_method(self, tmp_path):
        raw = rotation_config(tmp_path)
        raw["method"] = "sampling"
        with pytest.raises(ConfigError) as err:
            parse_config(raw)
        assert err.value.field == "method"

    def test_shift_horizon_covers_schedule(self, tmp_path):
        raw = bernoulli_config(tmp_path)
        config = parse_config(raw)
        assert config.system.horizon >= max(raw["n_schedule"]) + 1

    def test_malformed_json_exits_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        result = run_cli("run", str(path))
        assert result.returncode == 2
        error = json.loads(result.stderr)["error"]
        assert error["code"] == "invalid_config"
        assert error["field"] == "config"

    def test_missing_field_exits_2_with_field(self, tmp_path):
        raw = rotation_config(tmp_path / "out")
        del raw["seeds"]
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw))
        result = run_cli("run", str(path))
        assert result.returncode == 2
        assert json.loads(result.stderr)["error"]["field"] == "seeds"


class TestPresets:
    def test_list_names(self):
        result = run_cli("presets", "list")
        assert result.returncode == 0
        names = result.stdout.split()
        assert len(names) == 10
        assert "rotation-euclid1d" in names
        assert "bernoulli-fair-cut" in names

    def test_emit_is_valid_config(self):
        result = run_cli("presets", "emit", "rotation-euclid1d")
        assert result.returncode == 0
        config = parse_config(json.loads(result.stdout))
        assert config.m == 512
        assert config.n_schedule == (16, 32, 64, 128, 256, 512, 1024)

    def test_unknown_preset_exits_2(self):
        result = run_cli("presets", "emit", "no-such-preset")
        assert result.returncode == 2

    def test_every_preset_parses(self, tmp_path):
        for name, raw in PRESETS.items():
            raw = dict(raw)
            raw["output_dir"] = str(tmp_path / name)
            parse_config(raw)


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    config = parse_config(rotation_config(out / "a"))
    paths = run_experiment(config)
    return config, paths


@pytest.fixture(scope="module")
def bundles(tmp_path_factory):
    root = tmp_path_factory.mktemp("cmp")
    run_experiment(parse_config(rotation_config(root / "rot")))
    run_experiment(parse_config(bernoulli_config(root / "bern")))
    return root / "rot", root / "bern"


class TestRunExperiment:
    def test_writes_all_outputs(self, bundle):
        _, paths = bundle
        for name in ("rows", "profile", "verdict", "admissibility", "estimates"):
            assert json.dumps(paths[name])  # path exists in the manifest
        import os

        for path in paths.values():
            assert os.path.exists(path)

    def test_rows_schema(self, bundle):
        _, paths = bundle
        with open(paths["rows"]) as fh:
            header = fh.readline().strip()
        assert header == "system,metric,eps,n,seed,method,value_bits"

    def test_rerun_is_byte_identical(self, bundle, tmp_path):
        config, paths = bundle
        again = parse_config(rotation_config(tmp_path / "b"))
        paths_b = run_experiment(again)
        assert open(paths["rows"], "rb").read() == open(paths_b["rows"], "rb").read()

    def test_worker_count_does_not_change_outputs(self, bundle, tmp_path):
        config, paths = bundle
        threaded = parse_config(rotation_config(tmp_path / "c"))
        paths_c = run_experiment(threaded, workers=3)
        assert open(paths["rows"], "rb").read() == open(paths_c["rows"], "rb").read()
        assert (
            json.load(open(paths["verdict"]))
            == json.load(open(paths_c["verdict"]))
        )

    def test_rotation_arc_is_bounded_everywhere(self, bundle):
        # the arc metric is invariant under rotation, so profiles are flat
        _, paths = bundle
        verdict = json.load(open(paths["verdict"]))
        assert verdict["verdict"] == "DiscreteSpectrumEvidence"


class TestCompare:
    def test_self_compare_no_differences(self, bundles):
        rot_dir, _ = bundles
        diff = compare_bundles(rot_dir, rot_dir)
        assert not diff["any_difference"]

    def test_rotation_vs_bernoulli_differ_at_every_eps(self, bundles):
        rot_dir, bern_dir = bundles
        diff = compare_bundles(rot_dir, bern_dir)
        assert all(row["differs"] for row in diff["classes"])
        assert diff["verdicts_differ"]

    def test_incompatible_grids_exit_2(self, bundles, tmp_path):
        rot_dir, _ = bundles
        other = rotation_config(tmp_path / "other")
        other["eps_grid"] = [0.3, 0.2]
        run_experiment(parse_config(other))
        result = run_cli("compare", str(rot_dir), str(tmp_path / "other"))
        assert result.returncode == 2
        assert json.loads(result.stderr)["error"]["field"] == "eps_grid"

    def test_cli_compare_text_output(self, bundles):
        rot_dir, bern_dir = bundles
        result = run_cli("compare", str(rot_dir), str(bern_dir))
        assert result.returncode == 0
        assert "verdict A" in result.stdout

    def test_env_output_dir_override(self, tmp_path):
        import os

        raw = rotation_config(tmp_path / "ignored")
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw))
        env = dict(os.environ, ORBENT_OUTPUT_DIR=str(tmp_path / "actual"))
        result = subprocess.run(
            [sys.executable, "-m", "orbent.cli", "run", str(path)],
            capture_output=True, text=True, env=env,
        )
        assert result.returncode == 0
        assert (tmp_path / "actual" / "rows.csv").exists()
        assert not (tmp_path / "ignored").exists()
