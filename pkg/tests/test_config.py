"""Config parsing, validation, serialization round trips."""

import json

import pytest

from cobess.config import (CONFIG_VERSION, BatteryConfig, DesignConfig,
                           DrqnConfig, RunConfig, ScenarioConfig,
                           TrainingConfig, config_from_dict, config_to_dict,
                           load_config, save_config)
from cobess.errors import ConfigError, ValidationError
from cobess.timeseries import save_scenario, synthesize_scenario


class TestSections:
    def test_battery_template_builds_specs(self):
        battery = BatteryConfig()
        spec = battery.spec(2.0)
        assert spec.e_max_mwh == 2.0
        assert spec.soc_min == battery.soc_min
        with pytest.raises(ValidationError):
            BatteryConfig(soc_min=0.9, soc_max=0.1)

    def test_drqn_gamma_range(self):
        with pytest.raises(ValidationError):
            DrqnConfig(gamma=1.0)
        with pytest.raises(ValidationError):
            DrqnConfig(gamma=-0.1)
        DrqnConfig(gamma=0.0)

    def test_drqn_positive_integers(self):
        with pytest.raises(ValidationError):
            DrqnConfig(batch_size=0)
        with pytest.raises(ValidationError):
            DrqnConfig(sequence_length=0)
        with pytest.raises(ValidationError):
            DrqnConfig(replay_capacity=0)

    def test_design_constraints(self):
        with pytest.raises(ValidationError):
            DesignConfig(block_size=1)
        with pytest.raises(ValidationError):
            DesignConfig(warmup_blocks=-1)
        with pytest.raises(ValidationError):
            DesignConfig(mu0=5.0)
        with pytest.raises(ValidationError):
            DesignConfig(fixed_design=3.0)
        policy = DesignConfig(mu0=0.8, sigma=0.3).policy()
        assert policy.mu == 0.8 and policy.sigma == 0.3

    def test_training_constraints(self):
        with pytest.raises(ValidationError):
            TrainingConfig(n_episodes=0)
        with pytest.raises(ValidationError):
            TrainingConfig(workers=0)
        with pytest.raises(ValidationError):
            TrainingConfig(initial_soc=1.5)

    def test_scenario_episode_slots(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(episode_slots=0)


class TestDictRoundTrip:
    def test_defaults_round_trip(self):
        config = RunConfig()
        rebuilt = config_from_dict(config_to_dict(config))
        assert rebuilt == config

    def test_custom_values_survive(self):
        data = config_to_dict(RunConfig())
        data["drqn"]["gamma"] = 0.75
        data["actions"]["bids"] = [0.0, 0.2, 0.4]
        data["design"]["fixed_design"] = 1.2
        config = config_from_dict(data)
        assert config.drqn.gamma == 0.75
        assert config.actions.bids == (0.0, 0.2, 0.4)
        assert config.design.fixed_design == 1.2
        assert config_from_dict(config_to_dict(config)) == config

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown top-level key"):
            config_from_dict({"optimizer": {}})

    def test_unknown_section_key_names_section(self):
        with pytest.raises(ConfigError, match="drqn: unknown key 'lr'"):
            config_from_dict({"drqn": {"lr": 0.1}})

    def test_section_must_be_object(self):
        with pytest.raises(ConfigError, match="battery"):
            config_from_dict({"battery": 7})

    def test_invalid_value_becomes_config_error(self):
        with pytest.raises(ConfigError, match="drqn"):
            config_from_dict({"drqn": {"gamma": 2.0}})

    def test_version_gate(self):
        with pytest.raises(ConfigError, match="config_version"):
            config_from_dict({"config_version": 99})

    def test_partial_config_uses_defaults(self):
        config = config_from_dict({"training": {"seed": 42}})
        assert config.training.seed == 42
        assert config.drqn == DrqnConfig()


class TestFiles:
    def test_save_load_round_trip(self, tmp_path):
        config = config_from_dict({"training": {"n_episodes": 5, "seed": 3},
                                   "design": {"sigma": 0.3}})
        path = tmp_path / "run.json"
        save_config(config, path)
        loaded = load_config(path)
        assert config_to_dict(loaded) == config_to_dict(config)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)

    def test_scenario_path_relative_to_config(self, tmp_path):
        data = synthesize_scenario(0, 30)
        save_scenario(data, tmp_path / "scenario.csv")
        path = tmp_path / "run.json"
        path.write_text(json.dumps({
            "scenario": {"path": "scenario.csv", "episode_slots": 24}}))
        config = load_config(path)
        loaded = config.load_scenario_data()
        assert len(loaded) == 30

    def test_scenario_shorter_than_episode_fails(self):
        config = config_from_dict({
            "scenario": {"n_slots": 10, "episode_slots": 24}})
        with pytest.raises(ConfigError, match="episode_slots"):
            config.load_scenario_data()

    def test_synthetic_scenario_by_default(self):
        config = RunConfig()
        data = config.load_scenario_data()
        assert len(data) == 168
        assert config.config_version == CONFIG_VERSION
