"""
Policy checkpoint files.

A checkpoint is a ``torch.save`` archive holding the parameter tensors, the
ModelConfig, the flow pipeline metadata (encoder seed included), version
stamps and the stage tag. Loading verifies all of them.
"""

import logging
from pathlib import Path

import torch

from core.exceptions import ConfigurationError, VersionMismatch
from core.versions import MODEL_VERSION, PIPELINE_VERSION

from .config import ModelConfig
from .network import VisaFlowPolicy

logger = logging.getLogger(__name__)

STAGES = ("pretrained", "finetuned")
# Fields that only shape the action head or the goal projection; a warm start
# may change them and those modules keep their fresh initialisation.
HEAD_FIELDS = ("k", "goal_conditioning")


def save_checkpoint(path, policy: VisaFlowPolicy, stage: str, flow_meta: dict, extra=None) -> Path:
    if stage not in STAGES:
        raise ConfigurationError(f"unknown checkpoint stage {stage!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "state_dict": {name: tensor.detach().cpu() for name, tensor in policy.state_dict().items()},
        "model_config": policy.config.to_dict(),
        "encoder_seed": int(flow_meta["encoder_seed"]),
        "flow": dict(flow_meta),
        "pipeline_version": PIPELINE_VERSION,
        "model_version": MODEL_VERSION,
        "stage": stage,
        "extra": dict(extra or {}),
    }
    torch.save(payload, path)
    logger.info("Saved %s checkpoint to %s", stage, path)
    return path


def read_checkpoint(path) -> dict:
    """Load and version-check a checkpoint payload without building a model."""
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    if payload.get("pipeline_version") != PIPELINE_VERSION:
        raise VersionMismatch(
            f"checkpoint {path} was written by pipeline {payload.get('pipeline_version')}, "
            f"expected {PIPELINE_VERSION}"
        )
    if payload.get("model_version") != MODEL_VERSION:
        raise VersionMismatch(
            f"checkpoint {path} holds model {payload.get('model_version')}, "
            f"expected {MODEL_VERSION}"
        )
    return payload


def load_checkpoint(path, model_config: ModelConfig | None = None, flow_meta: dict | None = None):
    """
    Rebuild the policy stored in ``path``.

    Args:
        model_config: when given, must equal the stored configuration
        flow_meta: when given, the flow pipeline metadata must match exactly

    Returns:
        tuple: (policy, payload)
    """
    payload = read_checkpoint(path)
    stored = ModelConfig.from_dict(payload["model_config"])
    if model_config is not None and model_config != stored:
        raise VersionMismatch(f"checkpoint {path} was trained with a different model configuration")
    if flow_meta is not None:
        check_flow_meta(payload, flow_meta, path)
    policy = VisaFlowPolicy(stored)
    policy.load_state_dict(payload["state_dict"])
    return policy, payload


def check_flow_meta(payload: dict, flow_meta: dict, path) -> None:
    """The flow features a checkpoint was trained on must match ``flow_meta`` exactly."""
    expected = {key: value for key, value in flow_meta.items() if key != "fingerprint"}
    found = {key: value for key, value in payload["flow"].items() if key != "fingerprint"}
    if expected != found:
        differing = sorted(
            key for key in set(expected) | set(found) if expected.get(key) != found.get(key)
        )
        raise VersionMismatch(
            f"checkpoint {path} was trained on different flow features ({', '.join(differing)})"
        )


def check_architecture(payload: dict, config: ModelConfig, path) -> None:
    """Every model field outside HEAD_FIELDS must equal the stored one."""
    stored = ModelConfig.from_dict(payload["model_config"]).to_dict()
    wanted = config.to_dict()
    differing = sorted(
        key for key in wanted if key not in HEAD_FIELDS and stored.get(key) != wanted[key]
    )
    if differing:
        raise VersionMismatch(
            f"checkpoint {path} has an incompatible architecture ({', '.join(differing)})"
        )


def init_from_checkpoint(policy: VisaFlowPolicy, path, flow_meta: dict) -> dict:
    """
    Initialise ``policy`` from a checkpoint trained on the same flow features.

    Only the chunk length and goal conditioning may differ; the action head
    and goal projection then keep their fresh initialisation.

    Returns:
        dict: the checkpoint payload

    Raises:
        VersionMismatch: different flow features or an incompatible architecture
    """
    payload = read_checkpoint(path)
    check_flow_meta(payload, flow_meta, path)
    check_architecture(payload, policy.config, path)
    own = policy.state_dict()
    loaded, skipped = {}, []
    for name, tensor in payload["state_dict"].items():
        if name in own and own[name].shape == tensor.shape:
            loaded[name] = tensor
        else:
            skipped.append(name)
    policy.load_state_dict(loaded, strict=False)
    if skipped:
        logger.warning("Kept fresh parameters for %s", ", ".join(sorted(skipped)))
    return payload
