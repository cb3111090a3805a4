import numpy as np
import torch
from torch.utils.data import default_collate

from policymodel.config import ModelConfig
from policymodel.network import VisaFlowPolicy
from trainer.config import TrainConfig
from trainer.data import FlowEpisode, window
from trainer.gradcheck import gradient_check, parameter_groups
from trainer.losses import stage_loss
from trainer.loop import forward_batch


def double_batch(with_actions):
    rng = np.random.default_rng(0)
    length = 6
    episode = FlowEpisode(
        flows=rng.normal(size=(length, 4)).astype(np.float32),
        lang=1,
        progress=np.linspace(0.0, 1.0, length, dtype=np.float32),
        states=rng.uniform(size=(length, 3)).astype(np.float32) if with_actions else None,
        actions=(
            np.column_stack(
                [rng.uniform(-0.05, 0.05, size=(length - 1, 2)), rng.integers(0, 2, length - 1)]
            ).astype(np.float32)
            if with_actions
            else None
        ),
    )
    batch = default_collate([window(episode, start, 3, 2, 2) for start in (-1, 1, 3)])
    return {
        key: value.double() if value.is_floating_point() else value for key, value in batch.items()
    }


class TestGradientCheck:

    def test_finetune_objective(self):
        """Autograd agrees with central differences on every head and the trunk."""
        torch.manual_seed(0)
        config = ModelConfig(d_model=8, depth=1, heads=2, h=3, n=2, k=2, d=4)
        policy = VisaFlowPolicy(config).double()
        batch = double_batch(with_actions=True)
        train_config = TrainConfig(stage="finetune", lambda_prog=0.5)

        def loss_fn():
            return stage_loss(forward_batch(policy, batch), batch, train_config).total

        result = gradient_check(loss_fn, parameter_groups(policy), per_group=200)
        assert set(result.checked) == {"trunk", "obs_head", "action_head", "progress_head"}
        assert result.max_relative_error < 1e-4

    def test_pretrain_objective(self):
        """The flow loss gradient is exact as well."""
        torch.manual_seed(1)
        config = ModelConfig(d_model=8, depth=1, heads=2, h=3, n=2, k=2, d=4)
        policy = VisaFlowPolicy(config).double()
        batch = double_batch(with_actions=False)
        train_config = TrainConfig(stage="pretrain")

        def loss_fn():
            return stage_loss(forward_batch(policy, batch), batch, train_config).total

        groups = {"obs_head": parameter_groups(policy)["obs_head"]}
        assert gradient_check(loss_fn, groups, per_group=200).max_relative_error < 1e-4
