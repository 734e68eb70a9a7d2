"""Tests for RunConfig layering and the service container."""

import argparse

import pytest

from shtarkov_lab.config.schema import RunConfig
from shtarkov_lab.services.service_container import ServiceContainer
from shtarkov_lab.shared.constants import DEFAULT_SEED, DEFAULT_TREE_BUDGET
from shtarkov_lab.shared.exceptions import ConfigurationError, ValidationError


BERNOULLI = {"labels": 2, "class": {"kind": "bernoulli_full"}}


def _namespace(**values) -> argparse.Namespace:
    return argparse.Namespace(**values)


class TestRunConfigSources:
    def test_defaults(self, config):
        assert config.horizon == 2
        assert config.seed == DEFAULT_SEED
        assert config.spec_path is None
        assert config.budgets.trees == DEFAULT_TREE_BUDGET
        assert config.output.format == "json"
        assert config.output.include_timing is False

    def test_environment_overrides_default(self, monkeypatch):
        monkeypatch.setenv("SHTARKOV_LAB_HORIZON", "4")
        monkeypatch.setenv("SHTARKOV_LAB_BUDGETS__TREES", "77")
        config = RunConfig.load()
        assert config.horizon == 4
        assert config.budgets.trees == 77

    def test_yaml_with_variable_expansion(self, monkeypatch, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text(
            "horizon: ${LAB_TEST_HORIZON:5}\n"
            "seed: ${LAB_TEST_SEED}\n"
            "budgets:\n"
            "  sequences: 1234\n"
            "output:\n"
            "  format: table\n"
        )
        monkeypatch.setenv("CONFIG_PATH", str(path))
        monkeypatch.delenv("LAB_TEST_HORIZON", raising=False)
        monkeypatch.delenv("LAB_TEST_SEED", raising=False)
        config = RunConfig.load()
        assert config.horizon == 5
        # Unset variable without a default falls through to the field default
        assert config.seed == DEFAULT_SEED
        assert config.budgets.sequences == 1234
        assert config.output.format == "table"

    def test_environment_beats_yaml(self, monkeypatch, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("horizon: 3\n")
        monkeypatch.setenv("CONFIG_PATH", str(path))
        monkeypatch.setenv("SHTARKOV_LAB_HORIZON", "6")
        assert RunConfig.load().horizon == 6

    def test_init_overrides_beat_everything(self, monkeypatch):
        monkeypatch.setenv("SHTARKOV_LAB_HORIZON", "6")
        assert RunConfig.load(horizon=1).horizon == 1

    @pytest.mark.parametrize(
        "overrides",
        [{"horizon": -1}, {"log_level": "LOUD"}, {"seed": -3}],
    )
    def test_invalid_values_raise_configuration_error(self, overrides):
        with pytest.raises(ConfigurationError):
            RunConfig.load(**overrides)

    def test_error_names_the_field(self):
        with pytest.raises(ConfigurationError, match="horizon"):
            RunConfig.load(horizon=-1)


class TestCliOverrides:
    def test_flags_applied(self, config, tmp_path):
        spec = tmp_path / "class.json"
        config.apply_cli_overrides(
            _namespace(
                spec=str(spec),
                horizon=3,
                seed=9,
                budget_trees=50,
                budget_seqs=60,
                tolerance=1e-6,
                out="table",
                timing=True,
                verbose=True,
            )
        )
        assert config.spec_path == spec
        assert (config.horizon, config.seed) == (3, 9)
        assert (config.budgets.trees, config.budgets.sequences) == (50, 60)
        assert config.tolerances.equality == 1e-6
        assert config.output.format == "table"
        assert config.output.include_timing is True
        assert config.log_level == "INFO"

    def test_budget_sets_every_kind(self, config):
        config.apply_cli_overrides(_namespace(budget=50))
        assert config.budgets.model_dump() == {
            "trees": 50, "sequences": 50, "simplex": 50, "covers": 50
        }

    def test_specific_budget_beats_generic(self, config):
        config.apply_cli_overrides(_namespace(budget=50, budget_trees=7))
        assert config.budgets.trees == 7
        assert config.budgets.sequences == 50

    def test_missing_attributes_leave_config_alone(self, config):
        before = config.model_dump()
        config.apply_cli_overrides(_namespace())
        assert config.model_dump() == before

    @pytest.mark.parametrize(
        "flags",
        [
            {"budget_trees": 0},
            {"budget_seqs": -5},
            {"budget": 0},
            {"tolerance": 0.0},
            {"horizon": -2},
        ],
    )
    def test_invalid_flags(self, config, flags):
        with pytest.raises(ConfigurationError):
            config.apply_cli_overrides(_namespace(**flags))


class TestEffectiveBudgets:
    def test_unclamped_without_ceiling(self, config):
        assert config.effective_budgets == config.budgets

    def test_global_ceiling_clamps_every_budget(self, config, monkeypatch):
        monkeypatch.setenv("SHTARKOV_LAB_BUDGET", "10")
        clamped = config.effective_budgets
        assert clamped.trees == clamped.sequences == clamped.simplex == clamped.covers == 10

    def test_ceiling_above_budget_is_ignored(self, config, monkeypatch):
        config.apply_cli_overrides(_namespace(budget_seqs=5))
        monkeypatch.setenv("SHTARKOV_LAB_BUDGET", "1000000000")
        assert config.effective_budgets.sequences == 5

    @pytest.mark.parametrize("raw", ["0", "-1", "lots"])
    def test_bad_ceiling(self, config, monkeypatch, raw):
        monkeypatch.setenv("SHTARKOV_LAB_BUDGET", raw)
        with pytest.raises(ConfigurationError):
            config.effective_budgets


class TestServiceContainer:
    def test_config_required(self):
        assert not ServiceContainer.is_initialized()
        with pytest.raises(RuntimeError):
            ServiceContainer.get_config()

    def test_class_requires_spec(self, config):
        ServiceContainer.set_config(config)
        with pytest.raises(ValidationError) as excinfo:
            ServiceContainer.get_class()
        assert excinfo.value.path == "spec"

    def test_class_loaded_once(self, config, write_json):
        config.spec_path = write_json("class.json", BERNOULLI)
        ServiceContainer.set_config(config)
        first = ServiceContainer.get_class()
        assert ServiceContainer.get_class() is first

    def test_new_config_drops_cached_class(self, config, write_json):
        config.spec_path = write_json("class.json", BERNOULLI)
        ServiceContainer.set_config(config)
        first = ServiceContainer.get_class()
        ServiceContainer.set_config(config)
        assert ServiceContainer.get_class() is not first
