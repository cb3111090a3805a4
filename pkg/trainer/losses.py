"""
Training objectives.

Pretraining minimises the squared error of the predicted future FlowReps.
Finetuning adds the action loss (Smooth L1 on the arm deltas, BCE on the
gripper, KL of the Gaussian head to a standard normal) and a progress
regression:

    total = (smoothl1 + bce + lambda_kl * kl) + lambda_fwd * l_obs + lambda_prog * l_prog

Padded targets beyond the end of an episode are masked out of every mean.
"""

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from core.exceptions import DegenerateBatchError, StageError, ValidationFailure

HUBER_BETA = 1.0


@dataclass
class LossReport:
    total: torch.Tensor
    l_obs: torch.Tensor
    l_act_smoothl1: torch.Tensor
    l_act_bce: torch.Tensor
    l_act_kl: torch.Tensor
    l_prog: torch.Tensor
    lambda_fwd: float
    lambda_prog: float
    lambda_kl: float

    @property
    def l_act(self) -> torch.Tensor:
        return self.l_act_smoothl1 + self.l_act_bce + self.lambda_kl * self.l_act_kl

    def as_record(self) -> dict[str, float]:
        return {
            "total": float(self.total),
            "l_obs": float(self.l_obs),
            "l_act_smoothl1": float(self.l_act_smoothl1),
            "l_act_bce": float(self.l_act_bce),
            "l_act_kl": float(self.l_act_kl),
            "l_prog": float(self.l_prog),
            "lambda_fwd": self.lambda_fwd,
            "lambda_prog": self.lambda_prog,
            "lambda_kl": self.lambda_kl,
        }


def _masked_mean(values: torch.Tensor, valid: torch.Tensor, what: str) -> torch.Tensor:
    """Mean of ``values`` over entries whose leading dims are valid."""
    weight = valid.to(values.dtype)
    while weight.dim() < values.dim():
        weight = weight.unsqueeze(-1)
    weight = weight.expand_as(values)
    count = weight.sum()
    if count == 0:
        raise DegenerateBatchError(f"every {what} target in the batch is padding")
    return (values * weight).sum() / count


def flow_loss(pred_future_flow: torch.Tensor, target: torch.Tensor, valid: torch.Tensor):
    """Squared error averaged over valid (timestep, horizon, dim) entries."""
    return _masked_mean((pred_future_flow - target) ** 2, valid, "flow")


def pretrain_loss(pred_future_flow, target, valid) -> LossReport:
    l_obs = flow_loss(pred_future_flow, target, valid)
    zero = torch.zeros((), dtype=l_obs.dtype)
    return LossReport(
        total=l_obs,
        l_obs=l_obs,
        l_act_smoothl1=zero,
        l_act_bce=zero,
        l_act_kl=zero,
        l_prog=zero,
        lambda_fwd=1.0,
        lambda_prog=0.0,
        lambda_kl=0.0,
    )


def action_loss(output, target_actions: torch.Tensor, valid: torch.Tensor):
    """
    Action loss components.

    Args:
        output: PolicyOutput with (B, T, k, 2) means/logvars and (B, T, k) logits
        target_actions: (B, T, k, 3) target [dx, dy, gripper]
        valid: (B, T, k) booleans

    Returns:
        tuple: (smoothl1, bce, kl) tensors
    """
    gripper = target_actions[..., 2]
    if not torch.all((gripper == 0) | (gripper == 1)):
        raise ValidationFailure("gripper targets must be 0 or 1")
    smoothl1 = _masked_mean(
        F.smooth_l1_loss(
            output.action_mean, target_actions[..., :2], reduction="none", beta=HUBER_BETA
        ),
        valid,
        "action",
    )
    bce = _masked_mean(
        F.binary_cross_entropy_with_logits(output.gripper_logit, gripper, reduction="none"),
        valid,
        "action",
    )
    logvar = output.action_logvar
    kl_terms = 0.5 * (torch.exp(logvar) + output.action_mean**2 - 1.0 - logvar)
    kl = _masked_mean(kl_terms, valid, "action")
    return smoothl1, bce, kl


def progress_loss(progress: torch.Tensor, target: torch.Tensor, valid: torch.Tensor):
    return _masked_mean((progress - target) ** 2, valid, "progress")


def finetune_loss(output, batch: dict, config) -> LossReport:
    """Weighted multi-task objective of the finetuning stage."""
    if batch.get("actions") is None:
        raise StageError("finetuning needs target-domain batches with actions")
    smoothl1, bce, kl = action_loss(output, batch["actions"], batch["action_valid"])
    l_obs = flow_loss(output.pred_future_flow, batch["future_flows"], batch["future_valid"])
    l_prog = progress_loss(output.progress, batch["progress"], batch["step_valid"])
    total = (
        smoothl1
        + bce
        + config.lambda_kl * kl
        + config.lambda_fwd * l_obs
        + config.lambda_prog * l_prog
    )
    return LossReport(
        total=total,
        l_obs=l_obs,
        l_act_smoothl1=smoothl1,
        l_act_bce=bce,
        l_act_kl=kl,
        l_prog=l_prog,
        lambda_fwd=config.lambda_fwd,
        lambda_prog=config.lambda_prog,
        lambda_kl=config.lambda_kl,
    )


def stage_loss(output, batch: dict, config) -> LossReport:
    if config.stage == "pretrain":
        return pretrain_loss(output.pred_future_flow, batch["future_flows"], batch["future_valid"])
    return finetune_loss(output, batch, config)
