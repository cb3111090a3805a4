import pytest
import torch

from core.exceptions import ConfigurationError, VersionMismatch
from flowencode.pipeline import FlowConfig
from policymodel.checkpoints import (
    init_from_checkpoint,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from policymodel.config import ModelConfig
from policymodel.network import VisaFlowPolicy


def tiny_config(**overrides):
    values = dict(d_model=16, depth=1, heads=2, h=3, n=1, k=3, d=8)
    values.update(overrides)
    return ModelConfig(**values)


@pytest.fixture
def flow_meta():
    """Flow metadata of the default pipeline."""
    return FlowConfig().record()


@pytest.fixture
def saved(tmp_path, flow_meta):
    """A pretrained checkpoint of a seeded tiny policy, and the policy."""
    torch.manual_seed(0)
    policy = VisaFlowPolicy(tiny_config())
    path = save_checkpoint(tmp_path / "best.pt", policy, "pretrained", flow_meta)
    return path, policy


class TestCheckpoints:

    def test_round_trip(self, saved, flow_meta):
        """Loading restores the configuration and every parameter."""
        path, policy = saved
        loaded, payload = load_checkpoint(path, flow_meta=flow_meta)
        assert loaded.config == policy.config
        assert payload["stage"] == "pretrained"
        assert payload["encoder_seed"] == flow_meta["encoder_seed"]
        for name, tensor in policy.state_dict().items():
            assert torch.equal(loaded.state_dict()[name], tensor)

    def test_unknown_stage(self, tmp_path, flow_meta):
        """Only pretrained and finetuned checkpoints exist."""
        with pytest.raises(ConfigurationError):
            save_checkpoint(tmp_path / "x.pt", VisaFlowPolicy(tiny_config()), "warm", flow_meta)

    def test_pipeline_version_mismatch(self, saved):
        """A checkpoint from another pipeline version is refused."""
        path, _ = saved
        payload = torch.load(path, weights_only=True)
        payload["pipeline_version"] = "visaflow-pipeline/0"
        torch.save(payload, path)
        with pytest.raises(VersionMismatch):
            read_checkpoint(path)

    def test_flow_features_must_match(self, saved):
        """Different flow settings make the checkpoint unusable."""
        path, _ = saved
        with pytest.raises(VersionMismatch) as excinfo:
            load_checkpoint(path, flow_meta=FlowConfig(alpha=0.0).record())
        assert "alpha" in str(excinfo.value)

    def test_model_config_must_match(self, saved):
        """An explicit model configuration must equal the stored one."""
        path, _ = saved
        with pytest.raises(VersionMismatch):
            load_checkpoint(path, model_config=tiny_config(depth=2))

    def test_init_skips_mismatched_heads(self, saved, flow_meta):
        """Initialising a longer-chunk policy keeps the trunk and a fresh action head."""
        path, policy = saved
        torch.manual_seed(1)
        longer = VisaFlowPolicy(tiny_config(k=5))
        fresh_head = longer.action_head.weight.clone()
        init_from_checkpoint(longer, path, flow_meta)
        assert torch.equal(longer.flow_proj.weight, policy.flow_proj.weight)
        assert torch.equal(longer.action_head.weight, fresh_head)

    def test_init_refuses_other_architecture(self, saved, flow_meta):
        """A wider or deeper trunk cannot start from the checkpoint."""
        path, _ = saved
        wider = VisaFlowPolicy(tiny_config(d_model=32, depth=2))
        before = {name: tensor.clone() for name, tensor in wider.state_dict().items()}
        with pytest.raises(VersionMismatch) as excinfo:
            init_from_checkpoint(wider, path, flow_meta)
        assert "d_model" in str(excinfo.value) and "depth" in str(excinfo.value)
        for name, tensor in wider.state_dict().items():
            assert torch.equal(tensor, before[name])

    def test_init_refuses_other_history(self, saved, flow_meta):
        """The history length shapes the trunk and must match too."""
        path, _ = saved
        with pytest.raises(VersionMismatch):
            init_from_checkpoint(VisaFlowPolicy(tiny_config(h=5)), path, flow_meta)

    def test_init_accepts_goal_conditioning(self, saved, flow_meta):
        """Adding goal conditioning keeps the trunk and a fresh goal projection."""
        path, policy = saved
        conditioned = VisaFlowPolicy(tiny_config(goal_conditioning=True))
        init_from_checkpoint(conditioned, path, flow_meta)
        assert torch.equal(conditioned.time_embed.weight, policy.time_embed.weight)
