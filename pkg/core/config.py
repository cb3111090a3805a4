"""
Layered run configuration.

Resolution order: ``setup/run_defaults.json``, then an optional preset,
then an experiment file (``--config``), then ``--set section.key=value``
overrides. The resolved tree is validated section by section and hashed;
every run writes into a directory named after that hash.
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from core.exceptions import ConfigurationError
from core.serializers import SECTION_SERIALIZERS
from core.versions import version_stamps
from flowencode.pipeline import FlowConfig
from policymodel.config import ModelConfig
from setup.config import get_run_defaults
from trainer.config import TrainConfig

logger = logging.getLogger(__name__)

ECHO_NAME = "config.json"


def merge(base: dict, delta: dict) -> dict:
    """Deep merge of ``delta`` into a copy of ``base``."""
    merged = copy.deepcopy(base)
    for key, value in delta.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text: str) -> dict:
    """
    Turn ``section.key=value`` into a nested delta.

    The value is read as JSON when it parses, as a plain string otherwise.
    """
    path, separator, raw = text.partition("=")
    if not separator or not path:
        raise ConfigurationError(f"override {text!r} is not of the form section.key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    delta = value
    for key in reversed(path.strip().split(".")):
        delta = {key: delta}
    return delta


def validate_tree(tree: dict) -> dict:
    """
    Validate every section and return the coerced tree.

    Raises:
        ConfigurationError: a section is missing, malformed or carries unknown keys
    """
    unknown = sorted(set(tree) - set(SECTION_SERIALIZERS))
    if unknown:
        raise ConfigurationError(f"unknown configuration sections: {', '.join(unknown)}")
    resolved = {}
    for name, serializer_class in SECTION_SERIALIZERS.items():
        if name not in tree:
            raise ConfigurationError(f"configuration section {name!r} is missing")
        serializer = serializer_class(data=tree[name])
        if not serializer.is_valid():
            raise ConfigurationError(
                f"invalid {name} configuration: {json.dumps(serializer.errors)}"
            )
        resolved[name] = json.loads(json.dumps(serializer.validated_data))
    return resolved


@dataclass(frozen=True)
class RunConfig:
    tree: dict

    @classmethod
    def resolve(cls, config_path=None, overrides=(), preset: str | None = None) -> "RunConfig":
        defaults = get_run_defaults()
        presets = defaults.pop("presets", {})
        tree = defaults
        if preset:
            if preset not in presets:
                raise ConfigurationError(
                    f"unknown preset {preset!r}; choose from {sorted(presets)}"
                )
            tree = merge(tree, presets[preset])
        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise ConfigurationError(f"configuration file {path} does not exist")
            try:
                tree = merge(tree, json.loads(path.read_text(encoding="utf-8")))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc
        for override in overrides or ():
            tree = merge(tree, parse_override(override))
        return cls(validate_tree(tree))

    def with_overrides(self, delta: dict) -> "RunConfig":
        return RunConfig(validate_tree(merge(self.tree, delta)))

    def section(self, name: str) -> dict:
        return copy.deepcopy(self.tree[name])

    @property
    def config_hash(self) -> str:
        canonical = json.dumps({"config": self.tree, "versions": version_stamps()}, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def flow_config(self) -> FlowConfig:
        return FlowConfig.from_dict(self.tree["flow"])

    def model_config(self) -> ModelConfig:
        return ModelConfig.from_dict({**self.tree["model"], "d": self.tree["flow"]["embed_dim"]})

    def train_config(self, stage: str) -> TrainConfig:
        return TrainConfig.from_section(stage, self.tree["train"][stage])

    def run_dir(self, root, kind: str, inputs=()) -> Path:
        """
        ``<root>/<kind>/<hash>``; ``inputs`` (dataset paths, the initial
        checkpoint, the evaluation seed) are folded into the hash.
        """
        name = self.config_hash
        if inputs:
            canonical = json.dumps([name, *[str(value) for value in inputs]])
            name = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
        return Path(root) / kind / name

    def echo(self, run_dir, extra: dict | None = None) -> Path:
        """Write the resolved tree, its hash and the version stamps into ``run_dir``."""
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "config": self.tree,
            "config_hash": self.config_hash,
            "versions": version_stamps(),
            **(extra or {}),
        }
        path = run_dir / ECHO_NAME
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
