"""Tests for run configuration parsing, validation and overrides."""

import json

import pytest

from config.run_config import (
    RunConfig,
    SimulateSection,
    SynthSection,
    cell_configs,
    default_config,
    from_dict,
    load_config,
    with_overrides,
)
from utils.errors import ConfigError


class TestFromDict:
    """Tests for from_dict()."""

    def test_parses_sections(self, run_config_dict):
        config = from_dict(run_config_dict)
        assert config.source == "synth"
        assert config.synth.m_range == (60, 80)
        assert config.nepdf.k == 8
        assert config.net.arch[0]["kind"] == "conv3x3"
        assert config.eval.mode == "direction"
        assert config.seed == 3

    def test_unknown_key(self, run_config_dict):
        run_config_dict["nepdf"]["bins"] = 4
        with pytest.raises(ConfigError, match="nepdf"):
            from_dict(run_config_dict)

    def test_unknown_top_level_key(self, run_config_dict):
        run_config_dict["extra"] = 1
        with pytest.raises(ConfigError, match="extra"):
            from_dict(run_config_dict)

    @pytest.mark.parametrize(
        "section,key,value",
        [("nepdf", "k", "16"), ("nepdf", "k", 16.5), ("nepdf", "log_space", 1), ("eval", "mode", 3)],
    )
    def test_wrong_type(self, run_config_dict, section, key, value):
        run_config_dict[section][key] = value
        with pytest.raises(ConfigError, match=f"{section}.{key}"):
            from_dict(run_config_dict)

    def test_two_sources(self, run_config_dict):
        run_config_dict["simulate"] = {"structure": "v"}
        with pytest.raises(ConfigError, match="Exactly one data source"):
            from_dict(run_config_dict)

    def test_no_source(self, run_config_dict):
        del run_config_dict["synth"]
        with pytest.raises(ConfigError):
            from_dict(run_config_dict)

    @pytest.mark.parametrize(
        "section,key,value",
        [
            ("nepdf", "k", 1),
            ("eval", "folds", 1),
            ("eval", "mode", "ternary"),
            ("net", "dtype", "float16"),
        ],
    )
    def test_out_of_range(self, run_config_dict, section, key, value):
        run_config_dict[section][key] = value
        with pytest.raises(ConfigError):
            from_dict(run_config_dict)

    @pytest.mark.parametrize(
        "arch,fragment",
        [
            ([{"kind": "bogus", "foo": 1}], "foo"),
            ([{"kind": "bogus"}, {"kind": "flatten"}, {"kind": "output"}], "bogus"),
            ([{"kind": "dense", "unitz": 4}, {"kind": "output"}], "unitz"),
            ([{"kind": "conv3x3", "units": 2, "activation": "relu"}, {"kind": "flatten"}],
             "output layer"),
            ([{"kind": "maxpool2x2"}] * 4 + [{"kind": "flatten"}, {"kind": "output"}],
             "reaches size 0"),
            ([{"kind": "flatten"}, {"kind": "dense", "units": "8"}, {"kind": "output"}],
             "integer"),
        ],
        ids=["unknown-key", "unknown-kind", "typo", "no-output", "pooled-away", "string-units"],
    )
    def test_architecture_checked_at_parse_time(self, run_config_dict, arch, fragment):
        run_config_dict["net"]["arch"] = arch
        with pytest.raises(ConfigError, match=fragment):
            from_dict(run_config_dict)

    def test_grid_keys_checked(self):
        with pytest.raises(ConfigError, match="alpha/beta/gamma"):
            from_dict({"simulate": {"grid": [{"delta": 0.1}]}})


class TestLoadConfig:
    """Tests for load_config()."""

    def test_reads_file(self, tmp_path, run_config_dict):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(run_config_dict), encoding="utf-8")
        assert load_config(str(path)) == from_dict(run_config_dict)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(str(path))


class TestOverridesAndDigest:
    """Tests for with_overrides(), augment and digest()."""

    def test_override_wins(self, run_config_dict):
        config = with_overrides(from_dict(run_config_dict), **{"eval.folds": 3, "seed": None})
        assert config.eval.folds == 3
        assert config.seed == 3

    def test_override_validated(self, run_config_dict):
        with pytest.raises(ConfigError):
            with_overrides(from_dict(run_config_dict), **{"eval.mode": "bogus"})

    def test_augment_defaults(self):
        assert RunConfig(synth=SynthSection()).augment is True
        assert RunConfig(simulate=SimulateSection()).augment is False

    def test_digest_ignores_output_dir(self, run_config_dict):
        a = from_dict(run_config_dict)
        b = with_overrides(a, output_dir="/elsewhere")
        c = with_overrides(a, seed=4)
        assert a.digest() == b.digest()
        assert a.digest() != c.digest()

    def test_template_round_trips(self):
        config = default_config()
        assert config.source == "simulate"
        assert config.validate() == []
        assert from_dict(json.loads(json.dumps(config.to_dict()))) == config


class TestCellConfigs:
    """Tests for cell_configs()."""

    def test_single_cell_without_grid(self, run_config_dict):
        config = from_dict(run_config_dict)
        assert cell_configs(config) == [("run", config)]

    def test_grid_cells(self):
        config = from_dict(
            {"simulate": {"grid": [{"alpha": 0.1, "beta": 0.1}, {"alpha": 0.5, "beta": 0.5}]}}
        )
        cells = cell_configs(config)
        assert [name for name, _ in cells] == ["alpha0.1_beta0.1", "alpha0.5_beta0.5"]
        assert cells[0][1].simulate.alpha == 0.1
        assert cells[0][1].simulate.grid == ()
