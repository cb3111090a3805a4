import json

import pytest

from core.config import RunConfig, merge, parse_override
from core.exceptions import ConfigurationError


class TestOverrides:

    def test_parse_json_and_strings(self):
        """Values parse as JSON and fall back to plain strings."""
        assert parse_override("flow.alpha=0.25") == {"flow": {"alpha": 0.25}}
        assert parse_override("flow.static_mask=true") == {"flow": {"static_mask": True}}
        assert parse_override("flow.tracker=block_match") == {"flow": {"tracker": "block_match"}}

    def test_malformed(self):
        """An override needs a path and an equals sign."""
        with pytest.raises(ConfigurationError):
            parse_override("flow.alpha")

    def test_merge_is_deep_and_pure(self):
        """Merging keeps sibling keys and leaves the base untouched."""
        base = {"train": {"pretrain": {"seed": 0, "epochs": 3}}}
        merged = merge(base, {"train": {"pretrain": {"seed": 4}}})
        assert merged == {"train": {"pretrain": {"seed": 4, "epochs": 3}}}
        assert base["train"]["pretrain"]["seed"] == 0


class TestRunConfig:

    def test_defaults_resolve(self):
        """The shipped defaults validate and derive every sub-config."""
        config = RunConfig.resolve()
        assert config.flow_config().alpha == 0.5
        assert config.model_config().d == config.section("flow")["embed_dim"]
        assert config.train_config("finetune").stage == "finetune"
        assert config.model_config().sequence_length == 61

    def test_hash_is_stable_and_sensitive(self):
        """Equal trees hash equally; any override changes the hash."""
        default = RunConfig.resolve()
        assert len(default.config_hash) == 12
        assert default.config_hash == RunConfig.resolve().config_hash
        assert default.config_hash != RunConfig.resolve(overrides=["flow.alpha=0"]).config_hash

    def test_layering_order(self, tmp_path):
        """Overrides win over the experiment file, which wins over the defaults."""
        experiment = tmp_path / "experiment.json"
        experiment.write_text(json.dumps({"flow": {"alpha": 1.0, "radius": 5.0}}))
        config = RunConfig.resolve(experiment, overrides=["flow.alpha=2.0"])
        assert config.section("flow")["alpha"] == 2.0
        assert config.section("flow")["radius"] == 5.0

    def test_preset(self):
        """The real-world preset lengthens the action chunk."""
        assert RunConfig.resolve(preset="real_world").model_config().k == 10
        with pytest.raises(ConfigurationError):
            RunConfig.resolve(preset="calvin")

    def test_rejects_unknown_keys_and_sections(self):
        """Typos are errors, not silently ignored values."""
        with pytest.raises(ConfigurationError):
            RunConfig.resolve(overrides=["flow.alpah=0.3"])
        with pytest.raises(ConfigurationError):
            RunConfig.resolve(overrides=["optimizer.lr=0.1"])
        with pytest.raises(ConfigurationError):
            RunConfig.resolve(overrides=["train.pretrain.momentum=0.9"])

    def test_rejects_invalid_values(self):
        """Non-positive radii and unknown subtasks are refused."""
        with pytest.raises(ConfigurationError):
            RunConfig.resolve(overrides=["flow.radius=0"])
        with pytest.raises(ConfigurationError):
            RunConfig.resolve(overrides=['env.subtasks=["stack"]'])

    def test_missing_file(self, tmp_path):
        """A missing experiment file is reported."""
        with pytest.raises(ConfigurationError):
            RunConfig.resolve(tmp_path / "absent.json")

    def test_run_dir_and_echo(self, tmp_path):
        """Run directories are named by hash and echo the resolved tree."""
        config = RunConfig.resolve()
        plain = config.run_dir(tmp_path, "pretrain")
        assert plain == tmp_path / "pretrain" / config.config_hash
        assert config.run_dir(tmp_path, "pretrain", inputs=("data",)) != plain
        echoed = json.loads(config.echo(plain, {"stage": "pretrain"}).read_text())
        assert echoed["config_hash"] == config.config_hash
        assert echoed["config"] == config.tree
        assert echoed["stage"] == "pretrain"
